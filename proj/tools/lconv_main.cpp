#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <future>
#include <iostream>
#include <numbers>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "lconv/discovery.hpp"
#include "lconv/error.hpp"
#include "lconv/gconv_approx.hpp"
#include "lconv/loss_theory.hpp"
#include "lconv/matrix_io.hpp"
#include "lconv/numerics.hpp"
#include "lconv/version.hpp"
#include "run_config.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace lieconv;
using lieconv::cli::ConfigNode;
using lieconv::cli::RunConfig;

namespace {

enum ExitCode : int { kOk = 0, kUnexpected = 1, kConfig = 2, kNumeric = 3, kIo = 4 };

// ---------------------------------------------------------------------------
// Shared config pieces

FixedAngleTask read_fixed_task(ConfigNode n, std::uint64_t seed) {
  FixedAngleTask t;
  t.width = n.get_size("width", t.width);
  t.height = n.get_size("height", t.height);
  t.theta = n.get_double("theta", t.theta);
  t.n_train = n.get_size("n_train", t.n_train);
  t.n_test = n.get_size("n_test", t.n_test);
  t.pixel_lo = n.get_double("pixel_lo", t.pixel_lo);
  t.pixel_hi = n.get_double("pixel_hi", t.pixel_hi);
  t.seed = seed;
  n.finish();
  t.validate();
  return t;
}

AngleRegressionTask read_angle_task(ConfigNode n, std::uint64_t seed) {
  AngleRegressionTask t;
  t.width = n.get_size("width", t.width);
  t.height = n.get_size("height", t.height);
  t.theta_max = n.get_double("theta_max", t.theta_max);
  t.copies = n.get_size("copies", t.copies);
  t.recursions = static_cast<unsigned>(n.get_size("recursions", t.recursions));
  t.hidden = n.get_size("hidden", t.hidden);
  t.n_train = n.get_size("n_train", t.n_train);
  t.n_test = n.get_size("n_test", t.n_test);
  t.low_rank = n.get_size("low_rank", t.low_rank);
  t.pixel_lo = n.get_double("pixel_lo", t.pixel_lo);
  t.pixel_hi = n.get_double("pixel_hi", t.pixel_hi);
  t.seed = seed;
  n.finish();
  t.validate();
  return t;
}

OptimizerConfig read_optimizer(ConfigNode n, const OptimizerConfig& defaults) {
  OptimizerConfig o = defaults;
  const std::string kind = n.get_string("kind", o.kind == OptimizerConfig::Kind::Adam ? "adam" : "sgd");
  if (kind == "adam") {
    o.kind = OptimizerConfig::Kind::Adam;
  } else if (kind == "sgd") {
    o.kind = OptimizerConfig::Kind::Sgd;
  } else {
    throw ConfigError("optimizer.kind must be 'adam' or 'sgd', got '" + kind + "'");
  }
  o.lr = n.get_double("lr", o.lr);
  o.beta1 = n.get_double("beta1", o.beta1);
  o.beta2 = n.get_double("beta2", o.beta2);
  o.eps = n.get_double("eps", o.eps);
  o.batch_size = n.get_size("batch_size", o.batch_size);
  o.epochs = n.get_size("epochs", o.epochs);
  n.finish();
  o.validate();
  return o;
}

OptimizerConfig default_optimizer(bool fixed_angle) {
  OptimizerConfig o;
  if (fixed_angle) {
    o.lr = 1e-2;
    o.batch_size = 64;
    o.epochs = 20;
  } else {
    o.lr = 1e-3;
    o.batch_size = 16;
    o.epochs = 30;
  }
  return o;
}

/// The selected task with its resolved parameters.
struct TaskSpec {
  std::string name;
  json config;  // resolved task section
  std::variant<FixedAngleTask, AngleRegressionTask> task;

  bool fixed() const { return std::holds_alternative<FixedAngleTask>(task); }
  GridSpec grid() const {
    return fixed() ? GridSpec::image(std::get<FixedAngleTask>(task).width, std::get<FixedAngleTask>(task).height)
                   : GridSpec::image(std::get<AngleRegressionTask>(task).width,
                                     std::get<AngleRegressionTask>(task).height);
  }
};

TaskSpec read_task(ConfigNode& root, RunConfig& cfg) {
  TaskSpec spec;
  spec.name = root.get_string("task", "fixed-angle");
  if (spec.name == "fixed-angle") {
    spec.task = read_fixed_task(root.child("fixed_angle"), cfg.seed);
    spec.config = cfg.echo["fixed_angle"];
  } else if (spec.name == "angle-regression") {
    spec.task = read_angle_task(root.child("angle_regression"), cfg.seed);
    spec.config = cfg.echo["angle_regression"];
  } else {
    throw ConfigError("task must be 'fixed-angle' or 'angle-regression', got '" + spec.name + "'");
  }
  return spec;
}

/// Rebuilds a task from a stored identity (see run_identity).
TaskSpec task_from_identity(const json& identity) {
  RunConfig tmp;
  tmp.source = json{{"task", identity.at("task")}};
  const std::string key = identity.at("task") == "fixed-angle" ? "fixed_angle" : "angle_regression";
  tmp.source[key] = identity.at("task_config");
  tmp.seed = identity.at("seed").get<std::uint64_t>();
  ConfigNode root(tmp.source, tmp.echo, "");
  TaskSpec spec = read_task(root, tmp);
  root.finish();
  return spec;
}

json run_identity(const TaskSpec& spec, std::uint64_t seed) {
  return {{"task", spec.name}, {"task_config", spec.config}, {"seed", seed}};
}

void write_run_header(const RunConfig& cfg) {
  fs::create_directories(cfg.out_dir);
  write_text_file(cfg.out_dir / "config.json", cfg.echo.dump(2) + "\n");
  write_text_file(cfg.out_dir / "VERSION", std::string("lconv ") + kVersion + "\n");
}

// ---------------------------------------------------------------------------
// Datasets

using Dataset = std::variant<FixedAngleData, AngleData>;

Matrix row_vector(const std::vector<double>& v) { return Matrix(1, v.size(), v); }

std::vector<double> to_vector(const Matrix& m) { return {m.data().begin(), m.data().end()}; }

Dataset generate(const TaskSpec& spec) {
  if (spec.fixed()) return gen_fixed_angle_dataset(std::get<FixedAngleTask>(spec.task));
  return gen_angle_pairs_dataset(std::get<AngleRegressionTask>(spec.task));
}

void write_dataset(const fs::path& dir, const TaskSpec& spec, const Dataset& data, std::uint64_t seed) {
  fs::create_directories(dir);
  json files = json::object();
  auto put = [&](const std::string& name, const Matrix& m) {
    write_matrix(dir / name, m);
    files[name] = {m.rows(), m.cols()};
  };
  if (const auto* f = std::get_if<FixedAngleData>(&data)) {
    put("X_train.mat", f->train.x);
    put("Y_train.mat", f->train.y);
    put("X_test.mat", f->test.x);
    put("Y_test.mat", f->test.y);
  } else {
    const auto& a = std::get<AngleData>(data);
    put("X_train.mat", a.train.x);
    put("Y_train.mat", a.train.y);
    put("theta_train.mat", row_vector(a.train.theta));
    put("X_test.mat", a.test.x);
    put("Y_test.mat", a.test.y);
    put("theta_test.mat", row_vector(a.test.theta));
  }
  const json identity = run_identity(spec, seed);
  const json manifest{{"format", "lconv-dataset"},
                      {"version", 1},
                      {"identity", identity},
                      {"config_hash", cli::config_hash(identity)},
                      {"files", files}};
  write_text_file(dir / "manifest.json", manifest.dump(2) + "\n");
}

Dataset load_dataset(const fs::path& dir, const TaskSpec& spec, std::uint64_t seed) {
  json manifest;
  try {
    manifest = json::parse(read_text_file(dir / "manifest.json"));
  } catch (const json::parse_error& e) {
    throw IoError("bad dataset manifest in " + dir.string() + ": " + e.what());
  }
  if (manifest.value("identity", json()) != run_identity(spec, seed)) {
    throw ConfigError("dataset in " + dir.string() + " was generated with a different task, task config or seed");
  }
  const std::size_t d = spec.grid().d();
  auto load = [&](const std::string& name, std::size_t rows) {
    Matrix m = read_matrix(dir / name);
    if (m.rows() != rows) {
      throw FormatError(name + " has " + std::to_string(m.rows()) + " rows, expected " + std::to_string(rows), 0);
    }
    return m;
  };
  if (spec.fixed()) {
    FixedAngleData f;
    f.train = {load("X_train.mat", d), load("Y_train.mat", d)};
    f.test = {load("X_test.mat", d), load("Y_test.mat", d)};
    return f;
  }
  AngleData a;
  a.train = {load("X_train.mat", d), load("Y_train.mat", d), to_vector(load("theta_train.mat", 1))};
  a.test = {load("X_test.mat", d), load("Y_test.mat", d), to_vector(load("theta_test.mat", 1))};
  return a;
}

// ---------------------------------------------------------------------------
// Commands

int cmd_gen_data(RunConfig& cfg) {
  ConfigNode root = cli::read_globals(cfg, "gen-data");
  const TaskSpec spec = read_task(root, cfg);
  root.finish();
  write_run_header(cfg);
  const Dataset data = generate(spec);
  write_dataset(cfg.out_dir, spec, data, cfg.seed);
  std::cout << "wrote " << spec.name << " dataset to " << cfg.out_dir.string() << "\n";
  return kOk;
}

void print_metrics(const json& metrics) {
  for (const auto& [k, v] : metrics.items()) {
    std::cout << k << " = " << (v.is_number_float() ? format_double(v.get<double>()) : v.dump()) << "\n";
  }
}

int cmd_train(RunConfig& cfg, const std::string& resume_flag) {
  ConfigNode root = cli::read_globals(cfg, "train");
  const TaskSpec spec = read_task(root, cfg);
  const OptimizerConfig opt = read_optimizer(root.child("optimizer"), default_optimizer(spec.fixed()));
  const std::string data_dir = root.get_string("data_dir", "");
  std::string resume_dir = root.get_string("resume", "");
  const bool keep_checkpoints = root.get_bool("checkpoint", true);
  root.finish();
  if (!resume_flag.empty()) resume_dir = resume_flag;

  json identity = run_identity(spec, cfg.seed);
  json opt_identity = cfg.echo["optimizer"];
  opt_identity.erase("epochs");
  identity["optimizer"] = opt_identity;

  std::optional<TrainCheckpoint> resume;
  if (!resume_dir.empty()) {
    const json stored = json::parse(read_text_file(fs::path(resume_dir) / "run.json"));
    if (stored != identity) {
      throw ConfigError("checkpoint in " + resume_dir + " belongs to a run with a different configuration");
    }
    resume = load_checkpoint(resume_dir);
  }

  write_run_header(cfg);
  const Dataset data = data_dir.empty() ? generate(spec) : load_dataset(data_dir, spec, cfg.seed);

  const fs::path ckpt_dir = cfg.out_dir / "checkpoint";
  std::optional<TrainReport> last;
  TrainHooks hooks;
  hooks.resume = resume ? &*resume : nullptr;
  hooks.on_epoch = [&](const TrainReport& r, const TrainCheckpoint& c) {
    last = r;
    if (keep_checkpoints) {
      save_checkpoint(ckpt_dir, c);
      write_text_file(ckpt_dir / "run.json", identity.dump(2) + "\n");
    }
    std::cout << "epoch " << c.epochs_done << " train_mse " << format_double(c.curve.back().train_mse)
              << " test_mse " << format_double(c.curve.back().test_mse) << "\n";
  };

  TrainReport report;
  try {
    if (spec.fixed()) {
      report = train_fixed_angle(std::get<FixedAngleTask>(spec.task), std::get<FixedAngleData>(data), opt, hooks);
    } else {
      report = train_angle_regression(std::get<AngleRegressionTask>(spec.task), std::get<AngleData>(data), opt, hooks);
    }
  } catch (const TrainingFailure& e) {
    if (last) last->write(cfg.out_dir, spec.grid());
    write_text_file(cfg.out_dir / "failure.json",
                    json{{"error", e.what()}, {"last_finite_epoch", e.last_finite_epoch()}}.dump(2) + "\n");
    throw;
  }
  report.write(cfg.out_dir, spec.grid());
  print_metrics(report.metrics);
  return kOk;
}

int cmd_eval(RunConfig& cfg) {
  ConfigNode root = cli::read_globals(cfg, "eval");
  const fs::path model_dir = root.require_string("model_dir");
  const std::string data_dir = root.get_string("data_dir", "");
  const std::string split = root.get_string("split", "test");
  root.finish();
  if (split != "test" && split != "train") throw ConfigError("split must be 'test' or 'train'");

  const fs::path ckpt_dir = model_dir / "checkpoint";
  const json identity = json::parse(read_text_file(ckpt_dir / "run.json"));
  const TaskSpec spec = task_from_identity(identity);
  const std::uint64_t seed = identity.at("seed").get<std::uint64_t>();
  const TrainCheckpoint ckpt = load_checkpoint(ckpt_dir);

  write_run_header(cfg);
  const Dataset data = data_dir.empty() ? generate(spec) : load_dataset(data_dir, spec, seed);
  json metrics;
  if (spec.fixed()) {
    const auto& d = std::get<FixedAngleData>(data);
    metrics = evaluate_fixed_angle(std::get<FixedAngleTask>(spec.task), split == "test" ? d.test : d.train, ckpt.params);
  } else {
    const auto& d = std::get<AngleData>(data);
    metrics = evaluate_angle_regression(std::get<AngleRegressionTask>(spec.task), split == "test" ? d.test : d.train,
                                        ckpt.params);
  }
  const json out{{"task", spec.name}, {"split", split}, {"epochs_done", ckpt.epochs_done}, {"metrics", metrics}};
  write_text_file(cfg.out_dir / "eval.json", out.dump(2) + "\n");
  print_metrics(metrics);
  return kOk;
}

void write_approx_table(const fs::path& path, const std::vector<ApproxRow>& rows) {
  CsvWriter csv({"n", "eta", "frobenius_error", "correlation"});
  for (const auto& r : rows) {
    csv.add_row({std::to_string(r.n), format_double(r.eta), format_double(r.frobenius_error),
                 format_double(r.correlation)});
  }
  csv.write(path);
}

json approx_summary(std::size_t d, const std::vector<ApproxRow>& rows) {
  json corr = json::array();
  for (const auto& r : rows) corr.push_back({{"n", r.n}, {"correlation", r.correlation}});
  return {{"d", d}, {"rows", corr}};
}

int cmd_approx(RunConfig& cfg) {
  ConfigNode root = cli::read_globals(cfg, "approx");
  const std::size_t d = root.get_size("d", 20);
  const double z = root.get_double("z", 2.0);
  const auto ns_raw = root.get_sizes("ns", {4, 8, 16, 32, 64, 256});
  const auto d_sweep = root.get_sizes("d_sweep", {});
  const auto eps = root.get_doubles("single_step_eps", {0.1, 0.05, 0.025, 0.0125});
  root.finish();
  if (ns_raw.empty()) throw ConfigError("ns must list at least one step count");
  std::vector<unsigned> ns;
  for (std::size_t n : ns_raw) {
    if (n == 0 || n > 1000000) throw ConfigError("every entry of ns must lie in [1, 1000000]");
    ns.push_back(static_cast<unsigned>(n));
  }
  for (std::size_t v : d_sweep) {
    if (v < 2) throw ConfigError("every entry of d_sweep must be at least 2");
  }
  if (d < 2) throw ConfigError("d must be at least 2");
  if (!std::isfinite(z)) throw ConfigError("z must be finite");
  for (double e : eps) {
    if (!(e > 0.0)) throw ConfigError("single_step_eps entries must be positive");
  }

  write_run_header(cfg);
  const auto main_rows = shift_approximation_sweep(d, z, ns);
  write_approx_table(cfg.out_dir / "approx.csv", main_rows);

  // independent sweeps, results collected in input order
  std::vector<std::vector<ApproxRow>> sweep(d_sweep.size());
  for (std::size_t begin = 0; begin < d_sweep.size(); begin += cfg.threads) {
    std::vector<std::future<std::vector<ApproxRow>>> jobs;
    const std::size_t end = std::min(d_sweep.size(), begin + cfg.threads);
    for (std::size_t i = begin; i < end; ++i) {
      jobs.push_back(std::async(std::launch::async, [&, i] { return shift_approximation_sweep(d_sweep[i], z, ns); }));
    }
    for (std::size_t i = begin; i < end; ++i) sweep[i] = jobs[i - begin].get();
  }
  json tables = json::array();
  tables.push_back(approx_summary(d, main_rows));
  for (std::size_t i = 0; i < d_sweep.size(); ++i) {
    write_approx_table(cfg.out_dir / ("approx_d" + std::to_string(d_sweep[i]) + ".csv"), sweep[i]);
    tables.push_back(approx_summary(d_sweep[i], sweep[i]));
  }

  json summary{{"z", z}, {"tables", tables}};
  if (!eps.empty()) {
    const auto errs = single_step_errors(d, eps);
    CsvWriter csv({"eps", "single_step_error"});
    for (std::size_t i = 0; i < eps.size(); ++i) csv.add_row({format_double(eps[i]), format_double(errs[i])});
    csv.write(cfg.out_dir / "single_step.csv");
    if (eps.size() >= 2) summary["single_step_slope"] = loglog_slope(eps, errs);
  }
  write_text_file(cfg.out_dir / "summary.json", summary.dump(2) + "\n");
  for (const auto& r : main_rows) {
    std::cout << "d=" << d << " n=" << r.n << " corr=" << format_double(r.correlation)
              << " error=" << format_double(r.frobenius_error) << "\n";
  }
  return kOk;
}

AnalyticKind parse_group(const std::string& name) {
  if (name == "translation") return AnalyticKind::Translation;
  if (name == "rotation" || name == "so2") return AnalyticKind::Rotation;
  if (name == "scaling") return AnalyticKind::Scaling;
  throw ConfigError("group must be one of translation, rotation, scaling; got '" + name + "'");
}

int cmd_theory(RunConfig& cfg) {
  ConfigNode root = cli::read_globals(cfg, "theory");
  const std::string group_name = root.get_string("group", "translation");
  ConfigNode hel = root.child("helmholtz");
  const auto sizes = hel.get_sizes("sizes", {32, 64, 128, 256});
  const double eps_bar = hel.get_double("eps_bar", 1.0);
  hel.finish();
  ConfigNode dec = root.child("decomposition");
  const std::size_t instances = dec.get_size("instances", 10);
  const std::string grid_kind = dec.get_string("grid", "line");
  const std::size_t size = dec.get_size("size", 16);
  const std::size_t channels = dec.get_size("channels", 1);
  const bool scalar_eps = dec.get_bool("scalar_eps", true);
  dec.finish();
  ConfigNode met = root.child("metric");
  const std::size_t trials = met.get_size("trials", 20);
  met.finish();
  root.finish();

  const AnalyticKind group = parse_group(group_name);
  if (group != AnalyticKind::Translation) {
    throw UnsupportedGroupError("unsupported group '" + group_name +
                                "': the field-theory diagnostics need the translation group on a periodic grid");
  }
  if (sizes.empty()) throw ConfigError("helmholtz.sizes must not be empty");
  if (grid_kind != "line" && grid_kind != "square") throw ConfigError("decomposition.grid must be 'line' or 'square'");
  if (size < 3) throw ConfigError("decomposition.size must be at least 3");
  if (channels == 0) throw ConfigError("decomposition.channels must be at least 1");

  write_run_header(cfg);
  json summary = json::object();

  const auto rows = helmholtz_convergence(sizes, eps_bar);
  CsvWriter hcsv({"grid_size", "spacing", "el_residual", "noether_divergence"});
  std::vector<double> hs, el, nd;
  for (const auto& r : rows) {
    hcsv.add_row({std::to_string(r.grid_size), format_double(r.spacing), format_double(r.el_residual),
                  format_double(r.noether_divergence)});
    hs.push_back(r.spacing);
    el.push_back(r.el_residual);
    nd.push_back(r.noether_divergence);
  }
  hcsv.write(cfg.out_dir / "helmholtz.csv");
  if (rows.size() >= 2) {
    summary["el_residual_slope"] = loglog_slope(hs, el);
    summary["noether_divergence_slope"] = loglog_slope(hs, nd);
  }

  SeededRng rng(cfg.seed);
  const GridSpec grid = grid_kind == "line" ? GridSpec::line(size) : GridSpec::image(size, size, true);
  const auto gens = translation_generators(grid);
  CsvWriter dcsv({"instance", "direct", "decomposed", "relative_difference", "mass", "kinetic", "divergence",
                  "antisymmetric"});
  double worst_rel = 0.0, worst_div = 0.0;
  for (std::size_t i = 0; i < instances; ++i) {
    LayerInit init{grid.d(), channels, channels, gens.size(), scalar_eps, 0, false};
    LConvLayer layer = make_layer(init, rng);
    layer.generators = gens;
    const FieldSample field{grid, rng.uniform_matrix(grid.d(), channels, -1.0, 1.0), 1.0};
    const double direct = mse_loss_direct(field, layer);
    const LossBreakdown b = mse_loss_decomposed(field, field_terms(layer), gens);
    const double rel = std::abs(direct - b.total()) / std::max(direct, 1e-300);
    worst_rel = std::max(worst_rel, rel);
    worst_div = std::max(worst_div, std::abs(b.divergence));
    dcsv.add_row({std::to_string(i), format_double(direct), format_double(b.total()), format_double(rel),
                  format_double(b.mass), format_double(b.kinetic), format_double(b.divergence),
                  format_double(b.antisymmetric)});
  }
  dcsv.write(cfg.out_dir / "decomposition.csv");
  summary["decomposition_max_relative_difference"] = worst_rel;
  summary["decomposition_max_divergence_term"] = worst_div;

  CsvWriter mcsv({"trial", "xi", "theta", "residual"});
  double worst_metric = 0.0;
  for (std::size_t t = 0; t < trials; ++t) {
    LConvLayer layer;
    layer.w0 = rng.uniform_matrix(channels, channels, -1.0, 1.0);
    layer.eps = {rng.uniform_matrix(channels, channels, -1.0, 1.0)};
    layer.generators = {sw_shift_generator(3)};
    const double xi = rng.uniform(0.0, 2.0 * std::numbers::pi);
    const double theta = rng.uniform(0.0, 2.0 * std::numbers::pi);
    const double res = metric_equivariance_check(layer, xi, theta);
    worst_metric = std::max(worst_metric, res);
    mcsv.add_row({std::to_string(t), format_double(xi), format_double(theta), format_double(res)});
  }
  mcsv.write(cfg.out_dir / "metric.csv");
  summary["metric_max_residual"] = worst_metric;
  write_text_file(cfg.out_dir / "summary.json", summary.dump(2) + "\n");

  for (const auto& r : rows) {
    std::cout << "n=" << r.grid_size << " el_residual=" << format_double(r.el_residual)
              << " noether_divergence=" << format_double(r.noether_divergence) << "\n";
  }
  std::cout << "decomposition max relative difference: " << format_double(worst_rel) << "\n";
  std::cout << "metric max residual: " << format_double(worst_metric) << "\n";
  return kOk;
}

template <typename Fn>
int guarded(Fn&& fn) {
  try {
    return fn();
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfig;
  } catch (const UnsupportedGroupError& e) {
    std::cerr << "unsupported group: " << e.what() << "\n";
    return kConfig;
  } catch (const DimensionError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfig;
  } catch (const UnsupportedSizeError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfig;
  } catch (const IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return kIo;
  } catch (const FormatError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return kIo;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return kIo;
  } catch (const json::exception& e) {
    std::cerr << "io error: malformed stored JSON: " << e.what() << "\n";
    return kIo;
  } catch (const TrainingFailure& e) {
    std::cerr << "numeric failure: " << e.what() << " (last finite epoch " << e.last_finite_epoch() << ")\n";
    return kNumeric;
  } catch (const Error& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return kNumeric;
  } catch (const std::exception& e) {
    std::cerr << "unexpected error: " << e.what() << "\n";
    return kUnexpected;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"L-conv experiments: data generation, training, evaluation and diagnostics"};
  app.require_subcommand(1);
  std::string config_path;
  std::string resume;

  auto add_config = [&](CLI::App* sub) { sub->add_option("-c,--config", config_path, "JSON run config")->required(); };
  CLI::App* gen = app.add_subcommand("gen-data", "Generate a dataset");
  add_config(gen);
  CLI::App* train = app.add_subcommand("train", "Train a discovery model");
  add_config(train);
  train->add_option("--resume", resume, "Checkpoint directory to continue from");
  CLI::App* eval = app.add_subcommand("eval", "Evaluate a trained model");
  add_config(eval);
  CLI::App* approx = app.add_subcommand("approx", "Finite-shift approximation tables");
  add_config(approx);
  CLI::App* theory = app.add_subcommand("theory", "Loss decomposition and field-theory diagnostics");
  add_config(theory);
  app.add_subcommand("version", "Print the library version");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }

  if (app.got_subcommand("version")) {
    std::cout << "lconv " << kVersion << "\n";
    return kOk;
  }
  return guarded([&] {
    RunConfig cfg;
    cfg.source = cli::load_config_file(config_path);
    if (gen->parsed()) return cmd_gen_data(cfg);
    if (train->parsed()) return cmd_train(cfg, resume);
    if (eval->parsed()) return cmd_eval(cfg);
    if (approx->parsed()) return cmd_approx(cfg);
    return cmd_theory(cfg);
  });
}
