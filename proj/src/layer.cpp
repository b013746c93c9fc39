#include "lconv/layer.hpp"

#include <cmath>
#include <fstream>

#include "json.hpp"

#include "lconv/error.hpp"
#include "lconv/matrix_io.hpp"

namespace lieconv {

namespace {

// X is rows×(B·k); each k-wide block is multiplied by M (k×n).
Matrix mix_channels(const Matrix& x, const Matrix& m, std::size_t batch) {
  const std::size_t k = m.rows(), n = m.cols();
  if (x.cols() != batch * k) {
    throw DimensionError("channel axis: expected " + std::to_string(batch * k) + " columns, got " +
                         std::to_string(x.cols()));
  }
  Matrix out(x.rows(), batch * n);
  for (std::size_t r = 0; r < x.rows(); ++r) {
    auto xr = x.row(r);
    auto orow = out.row(r);
    for (std::size_t b = 0; b < batch; ++b) {
      for (std::size_t c = 0; c < k; ++c) {
        const double v = xr[b * k + c];
        if (v == 0.0) continue;
        auto mrow = m.row(c);
        for (std::size_t j = 0; j < n; ++j) orow[b * n + j] += v * mrow[j];
      }
    }
  }
  return out;
}

// Σ_b A_bᵀ·B_b over the batch blocks of A (rows×B·ka) and B (rows×B·kb).
Matrix block_outer(const Matrix& a, const Matrix& b, std::size_t batch) {
  const std::size_t ka = a.cols() / batch, kb = b.cols() / batch;
  Matrix out(ka, kb);
  for (std::size_t r = 0; r < a.rows(); ++r) {
    auto ar = a.row(r);
    auto br = b.row(r);
    for (std::size_t s = 0; s < batch; ++s)
      for (std::size_t i = 0; i < ka; ++i) {
        const double av = ar[s * ka + i];
        if (av == 0.0) continue;
        auto orow = out.row(i);
        for (std::size_t j = 0; j < kb; ++j) orow[j] += av * br[s * kb + j];
      }
  }
  return out;
}

void check_input(const Matrix& f, const LConvLayer& layer, std::size_t batch) {
  if (f.rows() != layer.d()) {
    throw DimensionError("spatial axis: feature map has d=" + std::to_string(f.rows()) +
                         ", generators have d=" + std::to_string(layer.d()));
  }
  if (f.cols() != batch * layer.m_in()) {
    throw DimensionError("channel axis: feature map has " + std::to_string(f.cols()) +
                         " columns, layer expects m_in=" + std::to_string(layer.m_in()) + " x batch " +
                         std::to_string(batch));
  }
}

}  // namespace

Matrix LConvLayer::eps_matrix(std::size_t i) const {
  if (!scalar_eps) return eps.at(i);
  return Matrix::identity(m_in()) * eps.at(i)(0, 0);
}

void LConvLayer::validate() const {
  if (w0.empty()) throw DimensionError("W0 is empty");
  if (eps.size() != generators.size()) {
    throw DimensionError("generator axis: " + std::to_string(eps.size()) + " eps matrices for " +
                         std::to_string(generators.size()) + " generators");
  }
  const std::size_t dd = d();
  for (std::size_t i = 0; i < generators.size(); ++i) {
    if (generators[i].dim() != dd) {
      throw DimensionError("spatial axis: generator " + std::to_string(i) + " has d=" +
                           std::to_string(generators[i].dim()) + ", expected " + std::to_string(dd));
    }
    const std::size_t want = scalar_eps ? 1 : m_in();
    if (eps[i].rows() != want || eps[i].cols() != want) {
      throw DimensionError("channel axis: eps_" + std::to_string(i) + " is " + shape_string(eps[i]) +
                           ", expected " + std::to_string(want) + "x" + std::to_string(want));
    }
  }
  if (head && (head->scale.size() != m_out() || head->bias.size() != m_out())) {
    throw DimensionError("channel axis: head size does not match m_out");
  }
}

LConvLayer make_layer(const LayerInit& init, SeededRng& rng) {
  if (init.d == 0 || init.m_in == 0 || init.m_out == 0) {
    throw DimensionError("layer sizes must be positive");
  }
  LConvLayer layer;
  layer.init_seed = rng.seed();
  layer.scalar_eps = init.scalar_eps;
  if (init.identity_w0) {
    if (init.m_in != init.m_out) throw DimensionError("identity W0 needs m_in == m_out");
    layer.w0 = Matrix::identity(init.m_in);
  } else {
    const double a = 1.0 / std::sqrt(static_cast<double>(init.m_in));
    layer.w0 = rng.uniform_matrix(init.m_out, init.m_in, -a, a);
  }
  const double e = 0.1 / static_cast<double>(std::max<std::size_t>(init.n_generators, 1));
  const std::size_t em = init.scalar_eps ? 1 : init.m_in;
  for (std::size_t i = 0; i < init.n_generators; ++i) layer.eps.push_back(rng.uniform_matrix(em, em, -e, e));
  const double dd = static_cast<double>(init.d);
  for (std::size_t i = 0; i < init.n_generators; ++i) {
    if (init.low_rank == 0) {
      const double g = 1.0 / std::sqrt(dd);
      layer.generators.push_back(Generator::dense(rng.uniform_matrix(init.d, init.d, -g, g)));
    } else {
      const double r = static_cast<double>(init.low_rank);
      const double g = 1.0 / std::pow(dd * r, 0.25);
      Matrix u = rng.uniform_matrix(init.d, init.low_rank, -g, g);
      Matrix v = rng.uniform_matrix(init.low_rank, init.d, -g, g);
      layer.generators.push_back(Generator::low_rank(std::move(u), std::move(v)));
    }
  }
  return layer;
}

ForwardCache lconv_forward_cached(const Matrix& f, const LConvLayer& layer, std::size_t batch) {
  layer.validate();
  check_input(f, layer, batch);
  ForwardCache cache;
  cache.batch = batch;
  cache.input = f;
  cache.mixed = f;
  cache.transported.reserve(layer.n_generators());
  for (std::size_t i = 0; i < layer.n_generators(); ++i) {
    cache.transported.push_back(layer.generators[i].apply(f));
    if (layer.scalar_eps) {
      cache.mixed.add_scaled(cache.transported.back(), layer.eps[i](0, 0));
    } else {
      cache.mixed += mix_channels(cache.transported.back(), layer.eps[i].transposed(), batch);
    }
  }
  cache.linear_out = mix_channels(cache.mixed, layer.w0.transposed(), batch);
  cache.output = cache.linear_out;
  if (layer.head) {
    const std::size_t mo = layer.m_out();
    for (std::size_t r = 0; r < cache.output.rows(); ++r) {
      auto row = cache.output.row(r);
      for (std::size_t c = 0; c < row.size(); ++c) {
        const std::size_t ch = c % mo;
        row[c] = std::tanh(layer.head->scale[ch] * row[c] + layer.head->bias[ch]);
      }
    }
  }
  return cache;
}

Matrix lconv_forward(const Matrix& f, const LConvLayer& layer) {
  return lconv_forward_cached(f, layer, 1).output;
}

FeatureMap lconv_forward(const FeatureMap& f, const LConvLayer& layer) {
  if (f.values.rows() != f.grid.d()) {
    throw DimensionError("spatial axis: feature map rows do not match its grid");
  }
  return {f.grid, lconv_forward(f.values, layer)};
}

Matrix lconv_forward_no_residual(const Matrix& f, const LConvLayer& layer) {
  layer.validate();
  check_input(f, layer, 1);
  Matrix acc(f.rows(), layer.m_in());
  for (std::size_t i = 0; i < layer.n_generators(); ++i) {
    acc += matmul_nt(layer.generators[i].apply(f), layer.eps_matrix(i));
  }
  return matmul_nt(acc, layer.w0);
}

LayerGradients LayerGradients::zeros_like(const LConvLayer& layer, std::size_t input_cols) {
  LayerGradients g;
  g.d_w0 = Matrix(layer.w0.rows(), layer.w0.cols());
  for (const auto& e : layer.eps) g.d_eps.emplace_back(e.rows(), e.cols());
  for (const auto& gen : layer.generators) {
    if (gen.is_low_rank()) {
      const auto& f = gen.factors();
      g.d_generators.push_back(Generator::low_rank(Matrix(f.u.rows(), f.u.cols()), Matrix(f.v.rows(), f.v.cols())));
    } else {
      g.d_generators.push_back(Generator::dense(Matrix(gen.dim(), gen.dim())));
    }
  }
  if (layer.head) {
    g.d_head = ChannelHead{std::vector<double>(layer.m_out(), 0.0), std::vector<double>(layer.m_out(), 0.0)};
  }
  g.d_input = Matrix(layer.d(), input_cols);
  return g;
}

LayerGradients& LayerGradients::operator+=(const LayerGradients& o) {
  d_w0 += o.d_w0;
  for (std::size_t i = 0; i < d_eps.size(); ++i) d_eps[i] += o.d_eps[i];
  for (std::size_t i = 0; i < d_generators.size(); ++i) {
    if (d_generators[i].is_low_rank()) {
      d_generators[i].factors().u += o.d_generators[i].factors().u;
      d_generators[i].factors().v += o.d_generators[i].factors().v;
    } else {
      d_generators[i].dense_matrix() += o.d_generators[i].dense_matrix();
    }
  }
  if (d_head && o.d_head) {
    for (std::size_t c = 0; c < d_head->scale.size(); ++c) {
      d_head->scale[c] += o.d_head->scale[c];
      d_head->bias[c] += o.d_head->bias[c];
    }
  }
  // d_input is per call and not accumulated
  return *this;
}

LayerGradients lconv_backward(const ForwardCache& cache, const LConvLayer& layer, const Matrix& upstream) {
  require_same_shape(upstream, cache.output, "lconv_backward upstream");
  const std::size_t batch = cache.batch;
  LayerGradients g;
  Matrix gq = upstream;
  if (layer.head) {
    const std::size_t mo = layer.m_out();
    g.d_head = ChannelHead{std::vector<double>(mo, 0.0), std::vector<double>(mo, 0.0)};
    for (std::size_t r = 0; r < gq.rows(); ++r) {
      auto grow = gq.row(r);
      auto yrow = cache.output.row(r);
      auto qrow = cache.linear_out.row(r);
      for (std::size_t c = 0; c < grow.size(); ++c) {
        const std::size_t ch = c % mo;
        const double dz = grow[c] * (1.0 - yrow[c] * yrow[c]);
        g.d_head->scale[ch] += dz * qrow[c];
        g.d_head->bias[ch] += dz;
        grow[c] = dz * layer.head->scale[ch];
      }
    }
  }
  g.d_w0 = block_outer(gq, cache.mixed, batch);
  const Matrix dp = mix_channels(gq, layer.w0, batch);
  g.d_input = dp;
  for (std::size_t i = 0; i < layer.n_generators(); ++i) {
    const Matrix& lf = cache.transported[i];
    Matrix a;
    if (layer.scalar_eps) {
      g.d_eps.push_back(Matrix(1, 1, frobenius_dot(dp, lf)));
      a = dp * layer.eps[i](0, 0);
    } else {
      g.d_eps.push_back(block_outer(dp, lf, batch));
      a = mix_channels(dp, layer.eps[i], batch);
    }
    const Generator& gen = layer.generators[i];
    if (gen.is_low_rank()) {
      const auto& fac = gen.factors();
      Matrix du = matmul_nt(a, matmul(fac.v, cache.input));
      Matrix dv = matmul_nt(matmul_tn(fac.u, a), cache.input);
      g.d_generators.push_back(Generator::low_rank(std::move(du), std::move(dv)));
    } else {
      g.d_generators.push_back(Generator::dense(matmul_nt(a, cache.input)));
    }
    g.d_input += gen.apply_transposed(a);
  }
  return g;
}

LayerGradients lconv_backward(const Matrix& f, const LConvLayer& layer, const Matrix& upstream) {
  return lconv_backward(lconv_forward_cached(f, layer, 1), layer, upstream);
}

std::vector<ForwardCache> recursive_forward(const Matrix& f, const LConvLayer& layer, unsigned t,
                                            std::size_t batch) {
  if (layer.m_in() != layer.m_out()) {
    throw DimensionError("recursive application needs m_in == m_out, got " + std::to_string(layer.m_in()) +
                         " and " + std::to_string(layer.m_out()));
  }
  std::vector<ForwardCache> caches;
  caches.reserve(t);
  const Matrix* h = &f;
  for (unsigned k = 0; k < t; ++k) {
    caches.push_back(lconv_forward_cached(*h, layer, batch));
    h = &caches.back().output;
  }
  return caches;
}

Matrix recursive_apply(const Matrix& f, const LConvLayer& layer, unsigned t) {
  if (layer.m_in() != layer.m_out()) {
    throw DimensionError("recursive application needs m_in == m_out, got " + std::to_string(layer.m_in()) +
                         " and " + std::to_string(layer.m_out()));
  }
  Matrix h = f;
  for (unsigned k = 0; k < t; ++k) h = lconv_forward(h, layer);
  return h;
}

LayerGradients recursive_backward(const std::vector<ForwardCache>& caches, const LConvLayer& layer,
                                  const Matrix& upstream) {
  if (caches.empty()) {
    LayerGradients g = LayerGradients::zeros_like(layer, upstream.cols());
    g.d_input = upstream;
    return g;
  }
  Matrix grad = upstream;
  LayerGradients total = LayerGradients::zeros_like(layer, upstream.cols());
  for (std::size_t k = caches.size(); k-- > 0;) {
    LayerGradients step = lconv_backward(caches[k], layer, grad);
    total += step;
    grad = std::move(step.d_input);
  }
  total.d_input = std::move(grad);
  return total;
}

Matrix act_on_features(const Matrix& w, const Matrix& f) { return solve_linear(w.transposed(), f); }

double equivariance_residual(const Matrix& f, const GroupElement& w, const LConvLayer& layer) {
  const Matrix q = lconv_forward(f, layer);
  const Matrix lhs = lconv_forward(act_on_features(w.matrix, f), layer);
  const Matrix rhs = act_on_features(w.matrix, q);
  return frobenius_norm(lhs - rhs) / std::max(frobenius_norm(q), 1e-300);
}

Matrix normalized_adjacency(const Matrix& adjacency) {
  if (!adjacency.square()) throw DimensionError("adjacency must be square");
  const std::size_t n = adjacency.rows();
  std::vector<double> inv_sqrt(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double deg = 0.0;
    for (double v : adjacency.row(i)) deg += v;
    inv_sqrt[i] = deg > 0.0 ? 1.0 / std::sqrt(deg) : 0.0;
  }
  Matrix h(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) h(i, j) = inv_sqrt[i] * adjacency(i, j) * inv_sqrt[j];
  return h;
}

double gcn_reduction_check(const Matrix& f, const Matrix& propagation, const Matrix& w) {
  LConvLayer layer;
  layer.w0 = w;
  layer.eps.push_back(Matrix::identity(f.cols()));
  layer.generators.push_back(Generator::dense(propagation, "gcn-propagation"));
  const Matrix via_layer = lconv_forward_no_residual(f, layer);
  const Matrix direct = matmul_nt(matmul(propagation, f), w);
  return frobenius_norm(via_layer - direct);
}

namespace {

template <typename Visit>
void visit_parameters(const LConvLayer& layer, Visit&& visit) {
  visit(layer.w0.data());
  for (const auto& e : layer.eps) visit(e.data());
  for (const auto& g : layer.generators) {
    if (g.is_low_rank()) {
      visit(g.factors().u.data());
      visit(g.factors().v.data());
    } else {
      visit(g.dense_matrix().data());
    }
  }
  if (layer.head) {
    visit(std::span<const double>(layer.head->scale));
    visit(std::span<const double>(layer.head->bias));
  }
}

}  // namespace

std::vector<double> flatten_parameters(const LConvLayer& layer) {
  std::vector<double> out;
  visit_parameters(layer, [&](std::span<const double> s) { out.insert(out.end(), s.begin(), s.end()); });
  return out;
}

void assign_parameters(LConvLayer& layer, std::span<const double> values) {
  std::size_t pos = 0;
  auto take = [&](std::span<double> dst) {
    if (pos + dst.size() > values.size()) throw DimensionError("parameter vector too short");
    std::copy(values.begin() + static_cast<std::ptrdiff_t>(pos),
              values.begin() + static_cast<std::ptrdiff_t>(pos + dst.size()), dst.begin());
    pos += dst.size();
  };
  take(layer.w0.data());
  for (auto& e : layer.eps) take(e.data());
  for (auto& g : layer.generators) {
    if (g.is_low_rank()) {
      take(g.factors().u.data());
      take(g.factors().v.data());
    } else {
      take(g.dense_matrix().data());
    }
  }
  if (layer.head) {
    take(layer.head->scale);
    take(layer.head->bias);
  }
  if (pos != values.size()) throw DimensionError("parameter vector too long");
}

std::vector<double> flatten_gradients(const LayerGradients& grads) {
  std::vector<double> out;
  auto put = [&](std::span<const double> s) { out.insert(out.end(), s.begin(), s.end()); };
  put(grads.d_w0.data());
  for (const auto& e : grads.d_eps) put(e.data());
  for (const auto& g : grads.d_generators) {
    if (g.is_low_rank()) {
      put(g.factors().u.data());
      put(g.factors().v.data());
    } else {
      put(g.dense_matrix().data());
    }
  }
  if (grads.d_head) {
    put(grads.d_head->scale);
    put(grads.d_head->bias);
  }
  return out;
}

void save_layer(const std::filesystem::path& dir, const LConvLayer& layer) {
  layer.validate();
  std::filesystem::create_directories(dir);
  nlohmann::json manifest;
  manifest["format"] = "lconv-layer";
  manifest["version"] = 1;
  manifest["d"] = layer.d();
  manifest["m_in"] = layer.m_in();
  manifest["m_out"] = layer.m_out();
  manifest["n_generators"] = layer.n_generators();
  manifest["scalar_eps"] = layer.scalar_eps;
  manifest["init_seed"] = layer.init_seed;
  manifest["trainable"] = {{"w0", layer.trainable.w0},
                           {"eps", layer.trainable.eps},
                           {"generators", layer.trainable.generators}};
  manifest["head"] = layer.head.has_value();
  write_matrix(dir / "W0.mat", layer.w0);
  auto gens = nlohmann::json::array();
  for (std::size_t i = 0; i < layer.n_generators(); ++i) {
    const std::string idx = std::to_string(i);
    write_matrix(dir / ("eps_" + idx + ".mat"), layer.eps[i]);
    const Generator& g = layer.generators[i];
    nlohmann::json entry{{"label", g.label()}};
    if (g.is_low_rank()) {
      write_matrix(dir / ("gen_" + idx + "_U.mat"), g.factors().u);
      write_matrix(dir / ("gen_" + idx + "_V.mat"), g.factors().v);
      entry["kind"] = "low_rank";
      entry["rank"] = g.factors().u.cols();
    } else {
      write_matrix(dir / ("gen_" + idx + ".mat"), g.dense_matrix());
      entry["kind"] = "dense";
    }
    gens.push_back(std::move(entry));
  }
  manifest["generators"] = std::move(gens);
  if (layer.head) {
    write_matrix(dir / "head_scale.mat", Matrix(1, layer.m_out(), layer.head->scale));
    write_matrix(dir / "head_bias.mat", Matrix(1, layer.m_out(), layer.head->bias));
  }
  write_text_file(dir / "manifest.json", manifest.dump(2) + "\n");
}

LConvLayer load_layer(const std::filesystem::path& dir) {
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(read_text_file(dir / "manifest.json"));
  } catch (const nlohmann::json::exception& e) {
    throw IoError("bad layer manifest in " + dir.string() + ": " + e.what());
  }
  LConvLayer layer;
  layer.w0 = read_matrix(dir / "W0.mat");
  layer.scalar_eps = manifest.value("scalar_eps", false);
  layer.init_seed = manifest.value("init_seed", std::uint64_t{0});
  const auto& tr = manifest.at("trainable");
  layer.trainable = {tr.at("w0").get<bool>(), tr.at("eps").get<bool>(), tr.at("generators").get<bool>()};
  const auto& gens = manifest.at("generators");
  for (std::size_t i = 0; i < gens.size(); ++i) {
    const std::string idx = std::to_string(i);
    layer.eps.push_back(read_matrix(dir / ("eps_" + idx + ".mat")));
    const std::string label = gens[i].value("label", "");
    if (gens[i].at("kind") == "low_rank") {
      layer.generators.push_back(Generator::low_rank(read_matrix(dir / ("gen_" + idx + "_U.mat")),
                                                     read_matrix(dir / ("gen_" + idx + "_V.mat")), label));
    } else {
      layer.generators.push_back(Generator::dense(read_matrix(dir / ("gen_" + idx + ".mat")), label));
    }
  }
  if (manifest.value("head", false)) {
    const Matrix s = read_matrix(dir / "head_scale.mat");
    const Matrix b = read_matrix(dir / "head_bias.mat");
    layer.head = ChannelHead{{s.data().begin(), s.data().end()}, {b.data().begin(), b.data().end()}};
  }
  layer.validate();
  return layer;
}

namespace {

nlohmann::json grid_json(const GridSpec& grid) {
  return {{"kind", grid.kind == GridSpec::Kind::Line ? "line" : "image"},
          {"d", grid.d()},
          {"width", grid.width},
          {"height", grid.height},
          {"periodic", grid.periodic}};
}

}  // namespace

void save_generator(const std::filesystem::path& stem, const Generator& g, const GridSpec& grid) {
  write_matrix(stem.string() + ".mat", materialize(g));
  nlohmann::json side{{"label", g.label()}, {"grid", grid_json(grid)}, {"stored", "dense"}};
  write_text_file(stem.string() + ".json", side.dump(2) + "\n");
}

void save_group_element(const std::filesystem::path& stem, const GroupElement& g, const GridSpec& grid) {
  write_matrix(stem.string() + ".mat", g.matrix);
  nlohmann::json side{{"label", g.label}, {"grid", grid_json(grid)}};
  write_text_file(stem.string() + ".json", side.dump(2) + "\n");
}

}  // namespace lieconv
