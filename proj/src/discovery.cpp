#include "lconv/discovery.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include "lconv/error.hpp"
#include "lconv/groups.hpp"
#include "lconv/matrix_io.hpp"
#include "lconv/numerics.hpp"

namespace lieconv {

void OptimizerConfig::validate() const {
  if (!(lr > 0.0) || !std::isfinite(lr)) throw ConfigError("optimizer lr must be positive, got " + format_double(lr));
  if (batch_size == 0) throw ConfigError("optimizer batch_size must be at least 1");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    throw ConfigError("adam betas must lie in [0, 1)");
  }
  if (!(eps > 0.0)) throw ConfigError("adam eps must be positive");
}

namespace {

void require_finite_grads(std::span<const double> params, std::span<const double> grads) {
  if (params.size() != grads.size()) {
    throw DimensionError("optimizer: " + std::to_string(grads.size()) + " gradients for " +
                         std::to_string(params.size()) + " parameters");
  }
  for (std::size_t i = 0; i < grads.size(); ++i) {
    if (!std::isfinite(grads[i])) {
      throw EvaluationError("optimizer: non-finite gradient at parameter " + std::to_string(i) +
                            "; update rejected");
    }
  }
}

}  // namespace

void sgd_step(std::span<double> params, std::span<const double> grads, double lr) {
  require_finite_grads(params, grads);
  for (std::size_t i = 0; i < params.size(); ++i) params[i] -= lr * grads[i];
}

void adam_step(std::span<double> params, std::span<const double> grads, OptimizerState& state,
               const OptimizerConfig& cfg) {
  require_finite_grads(params, grads);
  if (state.m.empty()) {
    state.m.assign(params.size(), 0.0);
    state.v.assign(params.size(), 0.0);
  }
  if (state.m.size() != params.size() || state.v.size() != params.size()) {
    throw DimensionError("adam: state size does not match parameters");
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(cfg.beta1, t);
  const double c2 = 1.0 - std::pow(cfg.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    state.m[i] = cfg.beta1 * state.m[i] + (1.0 - cfg.beta1) * grads[i];
    state.v[i] = cfg.beta2 * state.v[i] + (1.0 - cfg.beta2) * grads[i] * grads[i];
    const double mhat = state.m[i] / c1;
    const double vhat = state.v[i] / c2;
    params[i] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
  }
}

void optimizer_step(std::span<double> params, std::span<const double> grads, OptimizerState& state,
                    const OptimizerConfig& cfg) {
  if (cfg.kind == OptimizerConfig::Kind::Sgd) {
    sgd_step(params, grads, cfg.lr);
    ++state.step;
  } else {
    adam_step(params, grads, state, cfg);
  }
}

void FixedAngleTask::validate() const {
  if (width < 2 || height < 2) throw ConfigError("image width and height must be at least 2");
  if (n_train == 0 || n_test == 0) throw ConfigError("n_train and n_test must be positive");
  if (!(pixel_lo < pixel_hi)) throw ConfigError("pixel range must satisfy lo < hi");
  if (!std::isfinite(theta)) throw ConfigError("theta must be finite");
}

void AngleRegressionTask::validate() const {
  if (width < 3 || height < 3) throw ConfigError("image width and height must be at least 3");
  if (n_train == 0 || n_test == 0) throw ConfigError("n_train and n_test must be positive");
  if (copies == 0 || hidden == 0) throw ConfigError("copies and hidden must be positive");
  if (!(theta_max >= 0.0) || !std::isfinite(theta_max)) throw ConfigError("theta_max must be finite and >= 0");
  if (!(pixel_lo < pixel_hi)) throw ConfigError("pixel range must satisfy lo < hi");
}

namespace {

// N samples of d uniform pixels, one sample per column.
Matrix random_images(SeededRng& rng, std::size_t d, std::size_t n, double lo, double hi) {
  return rng.uniform_matrix(n, d, lo, hi).transposed();
}

PairSplit fixed_angle_split(const FixedAngleTask& task, const Matrix& r, std::uint64_t seed, std::size_t n) {
  SeededRng rng(seed);
  PairSplit s;
  s.x = random_images(rng, task.width * task.height, n, task.pixel_lo, task.pixel_hi);
  s.y = r * s.x;
  return s;
}

AngleSplit angle_split(const AngleRegressionTask& task, std::uint64_t seed, std::size_t n) {
  SeededRng rng(seed);
  const std::size_t d = task.width * task.height;
  AngleSplit s;
  s.x = random_images(rng, d, n, task.pixel_lo, task.pixel_hi);
  s.theta.resize(n);
  for (auto& t : s.theta) t = task.theta_max * rng.uniform01();
  const Matrix xt = s.x.transposed();
  Matrix yt(n, d);
  for (std::size_t j = 0; j < n; ++j) rotate_image_bilinear(task.width, task.height, s.theta[j], xt.row(j), yt.row(j));
  s.y = yt.transposed();
  return s;
}

Matrix gather_columns(const Matrix& m, std::span<const std::size_t> cols) {
  Matrix out(m.rows(), cols.size());
  for (std::size_t r = 0; r < m.rows(); ++r) {
    auto src = m.row(r);
    auto dst = out.row(r);
    for (std::size_t j = 0; j < cols.size(); ++j) dst[j] = src[cols[j]];
  }
  return out;
}

std::vector<std::size_t> iota_indices(std::size_t n) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  return idx;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

nlohmann::json optimizer_json(const OptimizerConfig& o) {
  return {{"kind", o.kind == OptimizerConfig::Kind::Adam ? "adam" : "sgd"},
          {"lr", o.lr},
          {"beta1", o.beta1},
          {"beta2", o.beta2},
          {"eps", o.eps},
          {"batch_size", o.batch_size},
          {"epochs", o.epochs}};
}

}  // namespace

FixedAngleData gen_fixed_angle_dataset(const FixedAngleTask& task) {
  task.validate();
  const Matrix r = rotation_matrix_bilinear(task.width, task.height, task.theta).matrix;
  return {fixed_angle_split(task, r, task.seed, task.n_train), fixed_angle_split(task, r, task.seed + 1, task.n_test)};
}

AngleData gen_angle_pairs_dataset(const AngleRegressionTask& task) {
  task.validate();
  return {angle_split(task, task.seed, task.n_train), angle_split(task, task.seed + 1, task.n_test)};
}

std::uint64_t epoch_shuffle_seed(std::uint64_t seed, std::size_t epoch) {
  SeededRng mix(seed ^ 0x5851f42d4c957f2dULL);
  std::uint64_t s = mix.next_u64();
  SeededRng per_epoch(s + 0x9e3779b97f4a7c15ULL * (static_cast<std::uint64_t>(epoch) + 1));
  return per_epoch.next_u64();
}

// ---------------------------------------------------------------------------
// Angle model

AngleModel make_angle_model(const AngleRegressionTask& task, SeededRng& rng) {
  task.validate();
  AngleModel model;
  LayerInit init;
  init.d = task.width * task.height;
  init.m_in = init.m_out = task.copies;
  init.n_generators = 1;
  init.low_rank = task.low_rank;
  init.identity_w0 = true;
  model.lconv = make_layer(init, rng);
  model.lconv.trainable.w0 = false;
  model.recursions = task.recursions;
  const double a1 = 1.0 / std::sqrt(static_cast<double>(task.copies));
  model.fc1_w = rng.uniform_matrix(task.hidden, task.copies, -a1, a1);
  model.fc1_b = rng.uniform_matrix(task.hidden, 1, -a1, a1);
  const double a2 = 1.0 / std::sqrt(static_cast<double>(task.hidden));
  model.fc2_w = rng.uniform_matrix(1, task.hidden, -a2, a2);
  model.fc2_b = rng.uniform_matrix(1, 1, -a2, a2);
  return model;
}

std::vector<double> flatten_parameters(const AngleModel& model) {
  std::vector<double> p = flatten_parameters(model.lconv);
  for (const Matrix* m : {&model.fc1_w, &model.fc1_b, &model.fc2_w, &model.fc2_b}) {
    p.insert(p.end(), m->data().begin(), m->data().end());
  }
  return p;
}

void assign_parameters(AngleModel& model, std::span<const double> values) {
  const std::size_t head = model.fc1_w.size() + model.fc1_b.size() + model.fc2_w.size() + model.fc2_b.size();
  if (values.size() < head) throw DimensionError("parameter vector too short");
  const std::size_t body = values.size() - head;
  assign_parameters(model.lconv, values.first(body));
  std::size_t pos = body;
  for (Matrix* m : {&model.fc1_w, &model.fc1_b, &model.fc2_w, &model.fc2_b}) {
    std::copy_n(values.begin() + static_cast<std::ptrdiff_t>(pos), m->size(), m->data().begin());
    pos += m->size();
  }
}

std::vector<double> trainable_mask(const LConvLayer& layer) {
  std::vector<double> mask;
  auto put = [&](std::size_t n, bool on) { mask.insert(mask.end(), n, on ? 1.0 : 0.0); };
  put(layer.w0.size(), layer.trainable.w0);
  for (const auto& e : layer.eps) put(e.size(), layer.trainable.eps);
  for (const auto& g : layer.generators) put(g.parameter_count(), layer.trainable.generators);
  if (layer.head) put(2 * layer.head->scale.size(), true);
  return mask;
}

std::vector<double> trainable_mask(const AngleModel& model) {
  std::vector<double> mask = trainable_mask(model.lconv);
  mask.insert(mask.end(), model.fc1_w.size() + model.fc1_b.size() + model.fc2_w.size() + model.fc2_b.size(), 1.0);
  return mask;
}

namespace {

struct AngleForward {
  std::vector<ForwardCache> caches;
  Matrix y;       // d×B
  Matrix g;       // B×m, tanh(yᵀh_t)
  Matrix a1;      // B×hidden
  std::vector<double> out;
};

AngleForward angle_forward(const AngleModel& model, const Matrix& x, const Matrix& y,
                           std::span<const std::size_t> cols) {
  const std::size_t b = cols.size(), m = model.copies(), d = x.rows();
  AngleForward fw;
  Matrix h0(d, b * m);
  for (std::size_t r = 0; r < d; ++r) {
    auto src = x.row(r);
    auto dst = h0.row(r);
    for (std::size_t s = 0; s < b; ++s) std::fill_n(dst.begin() + static_cast<std::ptrdiff_t>(s * m), m, src[cols[s]]);
  }
  fw.y = gather_columns(y, cols);
  fw.caches = recursive_forward(h0, model.lconv, model.recursions, b);
  const Matrix& ht = model.recursions == 0 ? h0 : fw.caches.back().output;
  fw.g = Matrix(b, m);
  for (std::size_t r = 0; r < d; ++r) {
    auto hr = ht.row(r);
    auto yr = fw.y.row(r);
    for (std::size_t s = 0; s < b; ++s)
      for (std::size_t a = 0; a < m; ++a) fw.g(s, a) += yr[s] * hr[s * m + a];
  }
  for (double& v : fw.g.data()) v = std::tanh(v);
  const std::size_t hid = model.fc1_w.rows();
  fw.a1 = Matrix(b, hid);
  fw.out.assign(b, 0.0);
  for (std::size_t s = 0; s < b; ++s) {
    double o = model.fc2_b(0, 0);
    for (std::size_t k = 0; k < hid; ++k) {
      double z = model.fc1_b(k, 0);
      for (std::size_t a = 0; a < m; ++a) z += model.fc1_w(k, a) * fw.g(s, a);
      fw.a1(s, k) = std::tanh(z);
      o += model.fc2_w(0, k) * fw.a1(s, k);
    }
    fw.out[s] = o;
  }
  return fw;
}

}  // namespace

std::vector<double> angle_predict(const AngleModel& model, const Matrix& x, const Matrix& y, std::size_t begin,
                                  std::size_t count) {
  std::vector<std::size_t> cols(count);
  std::iota(cols.begin(), cols.end(), begin);
  return angle_forward(model, x, y, cols).out;
}

double angle_loss(const AngleModel& model, const Matrix& x, const Matrix& y, std::span<const double> theta,
                  std::span<const std::size_t> columns, std::vector<double>* grad) {
  if (columns.empty()) throw DimensionError("angle_loss: empty batch");
  const AngleForward fw = angle_forward(model, x, y, columns);
  const std::size_t b = columns.size(), m = model.copies(), hid = model.fc1_w.rows(), d = x.rows();
  double loss = 0.0;
  std::vector<double> dout(b);
  for (std::size_t s = 0; s < b; ++s) {
    const double e = fw.out[s] - theta[columns[s]];
    loss += e * e;
    dout[s] = 2.0 * e / static_cast<double>(b);
  }
  loss /= static_cast<double>(b);
  if (!grad) return loss;

  Matrix d_fc1_w(hid, m), d_fc1_b(hid, 1), d_fc2_w(1, hid), d_fc2_b(1, 1);
  Matrix ds(b, m);
  for (std::size_t s = 0; s < b; ++s) {
    d_fc2_b(0, 0) += dout[s];
    for (std::size_t k = 0; k < hid; ++k) {
      d_fc2_w(0, k) += dout[s] * fw.a1(s, k);
      const double dz = dout[s] * model.fc2_w(0, k) * (1.0 - fw.a1(s, k) * fw.a1(s, k));
      d_fc1_b(k, 0) += dz;
      for (std::size_t a = 0; a < m; ++a) {
        d_fc1_w(k, a) += dz * fw.g(s, a);
        ds(s, a) += dz * model.fc1_w(k, a);
      }
    }
    for (std::size_t a = 0; a < m; ++a) ds(s, a) *= 1.0 - fw.g(s, a) * fw.g(s, a);
  }
  Matrix dht(d, b * m);
  for (std::size_t r = 0; r < d; ++r) {
    auto yr = fw.y.row(r);
    auto dr = dht.row(r);
    for (std::size_t s = 0; s < b; ++s)
      for (std::size_t a = 0; a < m; ++a) dr[s * m + a] = yr[s] * ds(s, a);
  }
  const LayerGradients lg = recursive_backward(fw.caches, model.lconv, dht);
  *grad = flatten_gradients(lg);
  for (const Matrix* g : {&d_fc1_w, &d_fc1_b, &d_fc2_w, &d_fc2_b}) grad->insert(grad->end(), g->data().begin(), g->data().end());
  return loss;
}

// ---------------------------------------------------------------------------
// Reports and checkpoints

nlohmann::json TrainReport::to_json() const {
  nlohmann::json curve_json = nlohmann::json::array();
  for (const auto& e : curve) curve_json.push_back({{"epoch", e.epoch}, {"train_mse", e.train_mse}, {"test_mse", e.test_mse}});
  return {{"task", task}, {"seed", seed}, {"config", config}, {"curve", curve_json}, {"metrics", metrics}};
}

void TrainReport::write(const std::filesystem::path& dir, const GridSpec& grid) const {
  std::filesystem::create_directories(dir);
  write_text_file(dir / "report.json", to_json().dump(2) + "\n");
  CsvWriter csv({"epoch", "train_mse", "test_mse"});
  for (const auto& e : curve) csv.add_row({std::to_string(e.epoch), format_double(e.train_mse), format_double(e.test_mse)});
  csv.write(dir / "loss.csv");
  if (!learned_generator.empty()) {
    Generator g = Generator::dense(learned_generator, task == "fixed-angle" ? "learned eps*L" : "learned L");
    save_generator(dir / "learned_generator", g, grid);
  }
  write_text_file(dir / "timing.json", nlohmann::json{{"wall_seconds", wall_seconds}}.dump(2) + "\n");
}

void save_checkpoint(const std::filesystem::path& dir, const TrainCheckpoint& ckpt) {
  std::filesystem::create_directories(dir);
  const std::size_t n = ckpt.params.size();
  write_matrix(dir / "params.mat", Matrix(1, n, ckpt.params));
  if (!ckpt.optimizer.m.empty()) {
    write_matrix(dir / "adam_m.mat", Matrix(1, n, ckpt.optimizer.m));
    write_matrix(dir / "adam_v.mat", Matrix(1, n, ckpt.optimizer.v));
  }
  nlohmann::json curve = nlohmann::json::array();
  for (const auto& e : ckpt.curve) curve.push_back({e.epoch, e.train_mse, e.test_mse});
  const nlohmann::json state{{"format", "lconv-train-checkpoint"},
                             {"version", 1},
                             {"epochs_done", ckpt.epochs_done},
                             {"optimizer_step", ckpt.optimizer.step},
                             {"has_moments", !ckpt.optimizer.m.empty()},
                             {"curve", curve}};
  write_text_file(dir / "state.json", state.dump(2) + "\n");
}

TrainCheckpoint load_checkpoint(const std::filesystem::path& dir) {
  nlohmann::json state;
  try {
    state = nlohmann::json::parse(read_text_file(dir / "state.json"));
  } catch (const nlohmann::json::exception& e) {
    throw IoError("bad checkpoint state in " + dir.string() + ": " + e.what());
  }
  TrainCheckpoint ckpt;
  try {
    ckpt.epochs_done = state.at("epochs_done").get<std::size_t>();
    ckpt.optimizer.step = state.at("optimizer_step").get<std::uint64_t>();
    for (const auto& e : state.at("curve")) {
      ckpt.curve.push_back({e.at(0).get<std::size_t>(), e.at(1).get<double>(), e.at(2).get<double>()});
    }
  } catch (const nlohmann::json::exception& e) {
    throw IoError("bad checkpoint state in " + dir.string() + ": " + e.what());
  }
  const Matrix p = read_matrix(dir / "params.mat");
  ckpt.params.assign(p.data().begin(), p.data().end());
  if (state.value("has_moments", false)) {
    const Matrix m = read_matrix(dir / "adam_m.mat");
    const Matrix v = read_matrix(dir / "adam_v.mat");
    ckpt.optimizer.m.assign(m.data().begin(), m.data().end());
    ckpt.optimizer.v.assign(v.data().begin(), v.data().end());
  }
  return ckpt;
}

// ---------------------------------------------------------------------------
// Training loops

namespace {

double fixed_angle_mse(const LConvLayer& layer, const PairSplit& split) {
  double sum = 0.0;
  const std::size_t chunk = 4096;
  for (std::size_t b = 0; b < split.x.cols(); b += chunk) {
    const std::size_t n = std::min(chunk, split.x.cols() - b);
    std::vector<std::size_t> cols(n);
    std::iota(cols.begin(), cols.end(), b);
    const Matrix q = lconv_forward_cached(gather_columns(split.x, cols), layer, n).output;
    const Matrix e = q - gather_columns(split.y, cols);
    sum += frobenius_dot(e, e);
  }
  return sum / static_cast<double>(split.x.size());
}

double angle_mse(const AngleModel& model, const AngleSplit& split) {
  const std::size_t n = split.x.cols(), chunk = 256;
  double sum = 0.0;
  std::vector<std::size_t> cols;
  for (std::size_t b = 0; b < n; b += chunk) {
    cols.resize(std::min(chunk, n - b));
    std::iota(cols.begin(), cols.end(), b);
    sum += angle_loss(model, split.x, split.y, split.theta, cols, nullptr) * static_cast<double>(cols.size());
  }
  return sum / static_cast<double>(n);
}

void check_params(std::span<const double> params, std::size_t expected) {
  if (params.size() != expected) {
    throw DimensionError("parameter vector has " + std::to_string(params.size()) + " entries, model needs " +
                         std::to_string(expected));
  }
}

}  // namespace

LConvLayer make_fixed_angle_layer(const FixedAngleTask& task) {
  task.validate();
  SeededRng init_rng(task.seed + 2);
  LayerInit init;
  init.d = task.width * task.height;
  init.scalar_eps = true;
  init.identity_w0 = true;
  LConvLayer layer = make_layer(init, init_rng);
  layer.trainable.w0 = false;
  return layer;
}

AngleModel make_angle_model(const AngleRegressionTask& task) {
  SeededRng init_rng(task.seed + 2);
  return make_angle_model(task, init_rng);
}

nlohmann::json evaluate_fixed_angle(const FixedAngleTask& task, const PairSplit& split,
                                    std::span<const double> params) {
  LConvLayer layer = make_fixed_angle_layer(task);
  check_params(params, flatten_parameters(layer).size());
  assign_parameters(layer, params);
  if (split.x.rows() != layer.d() || split.y.rows() != layer.d() || split.x.cols() != split.y.cols()) {
    throw DimensionError("evaluation split does not match the task grid");
  }
  const Matrix learned = layer.generators[0].dense_matrix() * layer.eps[0](0, 0);
  nlohmann::json out{{"mse", fixed_angle_mse(layer, split)}, {"samples", split.x.cols()}};
  if (task.width >= 3 && task.height >= 3 && max_abs(learned) > 0.0) {
    out["corr_vs_rotation_generator"] =
        cosine_correlation(learned, sw_rotation_generator(task.width, task.height).dense_matrix());
  }
  return out;
}

nlohmann::json evaluate_angle_regression(const AngleRegressionTask& task, const AngleSplit& split,
                                         std::span<const double> params) {
  AngleModel model = make_angle_model(task);
  check_params(params, flatten_parameters(model).size());
  assign_parameters(model, params);
  const std::size_t d = task.width * task.height;
  if (split.x.rows() != d || split.y.rows() != d || split.theta.size() != split.x.cols()) {
    throw DimensionError("evaluation split does not match the task grid");
  }
  const double c = cosine_correlation(materialize(model.lconv.generators[0]),
                                      sw_rotation_generator(task.width, task.height).dense_matrix());
  return {{"mse", angle_mse(model, split)},
          {"samples", split.x.cols()},
          {"corr_vs_rotation_generator", std::abs(c)},
          {"corr_vs_rotation_generator_signed", c}};
}

namespace {

// Shared epoch driver. `batch_grad` returns the batch loss and fills the
// gradient; `evaluate` returns (train_mse, test_mse) for the current params.
template <typename BatchGrad, typename Evaluate, typename Current>
void run_epochs(std::vector<double>& params, const std::vector<double>& mask, std::size_t n_train,
                const OptimizerConfig& opt, std::uint64_t seed, const TrainHooks& hooks, TrainReport& report,
                BatchGrad&& batch_grad, Evaluate&& evaluate, Current&& current_report) {
  OptimizerState state;
  std::size_t start = 0;
  if (hooks.resume) {
    if (hooks.resume->params.size() != params.size()) {
      throw DimensionError("checkpoint has " + std::to_string(hooks.resume->params.size()) +
                           " parameters, model has " + std::to_string(params.size()));
    }
    params = hooks.resume->params;
    state = hooks.resume->optimizer;
    start = hooks.resume->epochs_done;
    report.curve = hooks.resume->curve;
  }
  std::vector<double> grad;
  std::vector<std::size_t> order = iota_indices(n_train);
  for (std::size_t epoch = start; epoch < opt.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    SeededRng shuffler(epoch_shuffle_seed(seed, epoch));
    shuffler.shuffle(order);
    for (std::size_t begin = 0; begin < n_train; begin += opt.batch_size) {
      const std::size_t count = std::min(opt.batch_size, n_train - begin);
      const std::span<const std::size_t> cols(order.data() + begin, count);
      const double loss = batch_grad(cols, grad);
      if (!std::isfinite(loss)) {
        throw TrainingFailure("training diverged: non-finite batch loss in epoch " + std::to_string(epoch + 1),
                              static_cast<int>(report.curve.size()));
      }
      for (std::size_t i = 0; i < grad.size(); ++i) grad[i] *= mask[i];
      try {
        optimizer_step(params, grad, state, opt);
      } catch (const EvaluationError& e) {
        throw TrainingFailure(std::string("training diverged: ") + e.what(), static_cast<int>(report.curve.size()));
      }
    }
    const auto [train_mse, test_mse] = evaluate();
    if (!std::isfinite(train_mse) || !std::isfinite(test_mse)) {
      throw TrainingFailure("training diverged: non-finite loss after epoch " + std::to_string(epoch + 1),
                            static_cast<int>(report.curve.size()));
    }
    report.curve.push_back({epoch + 1, train_mse, test_mse});
    if (hooks.on_epoch) {
      TrainCheckpoint ckpt{epoch + 1, params, state, report.curve};
      hooks.on_epoch(current_report(), ckpt);
    }
  }
}

}  // namespace

TrainReport train_fixed_angle(const FixedAngleTask& task, const FixedAngleData& data, const OptimizerConfig& opt,
                              const TrainHooks& hooks) {
  task.validate();
  opt.validate();
  const auto t0 = std::chrono::steady_clock::now();
  const std::size_t d = task.width * task.height;
  if (data.train.x.rows() != d || data.test.x.rows() != d) {
    throw DimensionError("fixed-angle dataset does not match a " + std::to_string(task.width) + "x" +
                         std::to_string(task.height) + " grid");
  }
  LConvLayer layer = make_fixed_angle_layer(task);

  TrainReport report;
  report.task = "fixed-angle";
  report.seed = task.seed;
  report.config = {{"task",
                    {{"width", task.width},
                     {"height", task.height},
                     {"theta", task.theta},
                     {"n_train", task.n_train},
                     {"n_test", task.n_test},
                     {"pixel_lo", task.pixel_lo},
                     {"pixel_hi", task.pixel_hi},
                     {"seed", task.seed}}},
                   {"optimizer", optimizer_json(opt)}};

  std::vector<double> params = flatten_parameters(layer);
  const std::vector<double> mask = trainable_mask(layer);
  const std::size_t n_train = data.train.x.cols();

  auto mse_on = [&](const PairSplit& split) { return fixed_angle_mse(layer, split); };

  auto batch_grad = [&](std::span<const std::size_t> cols, std::vector<double>& grad) {
    assign_parameters(layer, params);
    const Matrix xb = gather_columns(data.train.x, cols);
    const auto cache = lconv_forward_cached(xb, layer, cols.size());
    Matrix diff = cache.output - gather_columns(data.train.y, cols);
    const double loss = frobenius_dot(diff, diff) / static_cast<double>(diff.size());
    diff *= 2.0 / static_cast<double>(diff.size());
    grad = flatten_gradients(lconv_backward(cache, layer, diff));
    return loss;
  };
  auto evaluate = [&]() {
    assign_parameters(layer, params);
    return std::pair{mse_on(data.train), mse_on(data.test)};
  };

  // Oracle: the exact least-squares map on the training data.
  const Matrix r_ls = least_squares_solve(data.train.x, data.train.y);
  const Matrix target = r_ls - Matrix::identity(d);
  const Matrix r_ls_residual = data.train.y - r_ls * data.train.x;
  const double ls_residual_mse = frobenius_dot(r_ls_residual, r_ls_residual) / static_cast<double>(data.train.y.size());

  auto fill_metrics = [&]() {
    assign_parameters(layer, params);
    report.learned_generator = layer.generators[0].dense_matrix() * layer.eps[0](0, 0);
    report.metrics = nlohmann::json::object();
    report.metrics["ls_residual_mse"] = ls_residual_mse;
    if (max_abs(target) > 0.0 && max_abs(report.learned_generator) > 0.0) {
      report.metrics["corr_vs_least_squares"] = cosine_correlation(report.learned_generator, target);
    }
    if (task.theta != 0.0 && task.width >= 3 && task.height >= 3) {
      const Matrix gt = sw_rotation_generator(task.width, task.height).dense_matrix();
      report.metrics["corr_vs_rotation_generator"] = cosine_correlation(report.learned_generator, gt);
    }
    if (!report.curve.empty()) {
      report.metrics["final_train_mse"] = report.curve.back().train_mse;
      report.metrics["final_test_mse"] = report.curve.back().test_mse;
      double best = report.curve.front().train_mse;
      for (const auto& e : report.curve) best = std::min(best, e.train_mse);
      report.metrics["best_train_mse"] = best;
    }
    report.wall_seconds = seconds_since(t0);
    return report;
  };

  run_epochs(params, mask, n_train, opt, task.seed, hooks, report, batch_grad, evaluate, fill_metrics);
  return fill_metrics();
}

TrainReport train_angle_regression(const AngleRegressionTask& task, const AngleData& data,
                                   const OptimizerConfig& opt, const TrainHooks& hooks) {
  task.validate();
  opt.validate();
  const auto t0 = std::chrono::steady_clock::now();
  const std::size_t d = task.width * task.height;
  if (data.train.x.rows() != d || data.test.x.rows() != d) {
    throw DimensionError("angle dataset does not match a " + std::to_string(task.width) + "x" +
                         std::to_string(task.height) + " grid");
  }
  AngleModel model = make_angle_model(task);

  TrainReport report;
  report.task = "angle-regression";
  report.seed = task.seed;
  report.config = {{"task",
                    {{"width", task.width},
                     {"height", task.height},
                     {"theta_max", task.theta_max},
                     {"copies", task.copies},
                     {"recursions", task.recursions},
                     {"hidden", task.hidden},
                     {"n_train", task.n_train},
                     {"n_test", task.n_test},
                     {"low_rank", task.low_rank},
                     {"pixel_lo", task.pixel_lo},
                     {"pixel_hi", task.pixel_hi},
                     {"seed", task.seed}}},
                   {"optimizer", optimizer_json(opt)}};

  std::vector<double> params = flatten_parameters(model);
  const std::vector<double> mask = trainable_mask(model);

  auto mse_on = [&](const AngleSplit& split) { return angle_mse(model, split); };
  auto batch_grad = [&](std::span<const std::size_t> cols, std::vector<double>& grad) {
    assign_parameters(model, params);
    return angle_loss(model, data.train.x, data.train.y, data.train.theta, cols, &grad);
  };
  auto evaluate = [&]() {
    assign_parameters(model, params);
    return std::pair{mse_on(data.train), mse_on(data.test)};
  };

  const Matrix gt = sw_rotation_generator(task.width, task.height).dense_matrix();
  double label_mean = 0.0;
  for (double t : data.test.theta) label_mean += t;
  label_mean /= static_cast<double>(data.test.theta.size());
  double label_var = 0.0;
  for (double t : data.test.theta) label_var += (t - label_mean) * (t - label_mean);
  label_var /= static_cast<double>(data.test.theta.size());

  assign_parameters(model, params);
  const double untrained = mse_on(data.test);

  auto fill_metrics = [&]() {
    assign_parameters(model, params);
    report.learned_generator = materialize(model.lconv.generators[0]);
    report.metrics = nlohmann::json::object();
    report.metrics["untrained_test_mse"] = untrained;
    const double c = cosine_correlation(report.learned_generator, gt);
    report.metrics["corr_vs_rotation_generator"] = std::abs(c);
    report.metrics["corr_vs_rotation_generator_signed"] = c;
    report.metrics["constant_predictor_test_mse"] = label_var;
    if (!report.curve.empty()) {
      report.metrics["final_train_mse"] = report.curve.back().train_mse;
      report.metrics["final_test_mse"] = report.curve.back().test_mse;
    }
    report.wall_seconds = seconds_since(t0);
    return report;
  };

  run_epochs(params, mask, data.train.x.cols(), opt, task.seed, hooks, report, batch_grad, evaluate, fill_metrics);
  return fill_metrics();
}

}  // namespace lieconv
