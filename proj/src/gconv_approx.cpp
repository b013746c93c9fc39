#include "lconv/gconv_approx.hpp"

#include <algorithm>
#include <cmath>

#include "lconv/error.hpp"
#include "lconv/matrix_io.hpp"
#include "lconv/numerics.hpp"

namespace lieconv {

void SampledKernel::validate() const {
  if (anchors.empty()) throw DimensionError("sampled kernel needs at least one anchor");
  if (anchors.size() != weights.size()) {
    throw DimensionError("sampled kernel: " + std::to_string(anchors.size()) + " anchors but " +
                         std::to_string(weights.size()) + " weights");
  }
  const std::size_t d = anchors.front().matrix.rows();
  for (std::size_t k = 0; k < anchors.size(); ++k) {
    if (!anchors[k].matrix.square() || anchors[k].matrix.rows() != d) {
      throw DimensionError("sampled kernel: anchor " + std::to_string(k) + " is not " + std::to_string(d) + "x" +
                           std::to_string(d));
    }
    if (weights[k].rows() != weights.front().rows() || weights[k].cols() != weights.front().cols()) {
      throw DimensionError("sampled kernel: weight " + std::to_string(k) + " has a different shape");
    }
  }
}

Matrix gconv_reference(const Matrix& f, const SampledKernel& kernel) {
  kernel.validate();
  if (f.rows() != kernel.anchors.front().matrix.rows()) {
    throw DimensionError("spatial axis: feature map has d=" + std::to_string(f.rows()) + ", anchors have d=" +
                         std::to_string(kernel.anchors.front().matrix.rows()));
  }
  if (f.cols() != kernel.weights.front().cols()) {
    throw DimensionError("channel axis: feature map has " + std::to_string(f.cols()) + " channels, kernel expects " +
                         std::to_string(kernel.weights.front().cols()));
  }
  Matrix out(f.rows(), kernel.weights.front().rows());
  for (std::size_t k = 0; k < kernel.anchors.size(); ++k) {
    out += matmul_nt(kernel.anchors[k].matrix * f, kernel.weights[k]);
  }
  return out;
}

GroupElement approx_group_element(const Generator& l, double z, unsigned n) {
  if (n == 0) throw ConfigError("approx_group_element needs n >= 1");
  const Matrix step = Matrix::identity(l.dim()) + materialize(l) * (z / static_cast<double>(n));
  return {matrix_power(step, n), "approx z=" + format_double(z) + " n=" + std::to_string(n)};
}

void ApproxConfig::validate() const {
  if (!(eta > 0.0)) throw ConfigError("approx eta must be positive");
  for (std::size_t a = 0; a < path.size(); ++a) {
    double s = 0.0;
    for (double t : path[a]) s += t * t;
    if (std::sqrt(s) > eta * (1.0 + 1e-12)) {
      throw ConfigError("approx path step " + std::to_string(a) + " exceeds eta");
    }
  }
}

ApproxConfig one_parameter_path(double z, unsigned n, std::size_t index, std::size_t n_generators) {
  if (n == 0) throw ConfigError("path needs at least one step");
  if (index >= n_generators) throw DimensionError("path generator index out of range");
  ApproxConfig cfg;
  const double step = z / static_cast<double>(n);
  cfg.eta = std::max(std::abs(step), 1e-300);
  cfg.path.assign(n, std::vector<double>(n_generators, 0.0));
  for (auto& p : cfg.path) p[index] = step;
  return cfg;
}

std::vector<LConvLayer> lconv_stack_for_anchor(std::span<const Generator> basis, const ApproxConfig& cfg,
                                               std::size_t channels) {
  if (basis.empty()) throw DimensionError("empty generator basis");
  cfg.validate();
  std::vector<LConvLayer> stack;
  stack.reserve(cfg.n_steps());
  for (const auto& coeffs : cfg.path) {
    if (coeffs.size() != basis.size()) {
      throw DimensionError("path step has " + std::to_string(coeffs.size()) + " coefficients for " +
                           std::to_string(basis.size()) + " generators");
    }
    LConvLayer layer;
    layer.w0 = Matrix::identity(channels);
    layer.scalar_eps = true;
    for (std::size_t i = 0; i < basis.size(); ++i) {
      layer.eps.push_back(Matrix{{coeffs[i]}});
      layer.generators.push_back(basis[i]);
    }
    stack.push_back(std::move(layer));
  }
  return stack;
}

Matrix composed_transport(const std::vector<LConvLayer>& stack) {
  if (stack.empty()) throw DimensionError("empty layer stack");
  const std::size_t d = stack.front().d();
  Matrix total = Matrix::identity(d);
  for (const auto& layer : stack) {
    Matrix step = Matrix::identity(d);
    for (std::size_t i = 0; i < layer.n_generators(); ++i) {
      step.add_scaled(materialize(layer.generators[i]), layer.eps_matrix(i)(0, 0));
    }
    total = step * total;
  }
  return total;
}

double cnn_equivalence_check(std::span<const double> kernel_weights, std::size_t d, std::uint64_t seed,
                             std::size_t channels) {
  if (kernel_weights.empty() || kernel_weights.size() > d) {
    throw ConfigError("kernel size must be between 1 and d");
  }
  SeededRng rng(seed);
  const Matrix f = rng.uniform_matrix(d, channels, -1.0, 1.0);
  SampledKernel kernel;
  for (std::size_t mu = 0; mu < kernel_weights.size(); ++mu) {
    kernel.anchors.push_back(sw_shift_matrix(d, static_cast<double>(mu)));
    kernel.weights.push_back(Matrix::identity(channels) * kernel_weights[mu]);
  }
  const Matrix via_group = gconv_reference(f, kernel);
  Matrix direct(d, channels);
  for (std::size_t r = 0; r < d; ++r)
    for (std::size_t mu = 0; mu < kernel_weights.size(); ++mu)
      for (std::size_t c = 0; c < channels; ++c) direct(r, c) += kernel_weights[mu] * f((r + d - mu) % d, c);
  return max_abs_diff(via_group, direct);
}

std::vector<ApproxRow> shift_approximation_sweep(std::size_t d, double z, std::span<const unsigned> ns) {
  if (ns.empty()) throw ConfigError("empty n sweep");
  const Generator l = sw_shift_generator(d);
  const Matrix exact = sw_shift_matrix(d, z).matrix;
  std::vector<ApproxRow> rows;
  for (unsigned n : ns) {
    const Matrix approx = approx_group_element(l, z, n).matrix;
    rows.push_back({n, z / static_cast<double>(n), frobenius_norm(approx - exact), cosine_correlation(approx, exact)});
  }
  return rows;
}

std::vector<double> single_step_errors(std::size_t d, std::span<const double> eps) {
  const Matrix l = sw_shift_generator(d).dense_matrix();
  std::vector<double> out;
  for (double e : eps) {
    out.push_back(frobenius_norm(Matrix::identity(d) + l * e - sw_shift_matrix(d, e).matrix));
  }
  return out;
}

}  // namespace lieconv
