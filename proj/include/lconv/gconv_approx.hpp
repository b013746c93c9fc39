#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "lconv/generator.hpp"
#include "lconv/groups.hpp"
#include "lconv/layer.hpp"
#include "lconv/matrix.hpp"

namespace lieconv {

/// Point-mass kernel on the group: anchors u_k with channel weights c_k
/// (m_out×m_in each).
struct SampledKernel {
  std::vector<GroupElement> anchors;
  std::vector<Matrix> weights;

  void validate() const;
};

/// [κ⋆f] = Σ_k (u_k f)·c_kᵀ for f (d×m_in). Exact for point-mass kernels.
Matrix gconv_reference(const Matrix& f, const SampledKernel& kernel);

/// (I + (z/n)·L̂)ⁿ
GroupElement approx_group_element(const Generator& l, double z, unsigned n);

/// Step coefficients t_a^i of a path u ≈ Π_a (I + Σ_i t_a^i L̂_i).
struct ApproxConfig {
  double eta = 0.0;
  std::vector<std::vector<double>> path;  // one coefficient vector per step

  std::size_t n_steps() const { return path.size(); }
  /// Throws ConfigError when a step's coefficient norm exceeds eta.
  void validate() const;
};

/// n equal steps z/n along generator `index` of a basis with `n_generators`.
ApproxConfig one_parameter_path(double z, unsigned n, std::size_t index = 0, std::size_t n_generators = 1);

/// One single-channel layer per step with W0 = I and scalar ε̄^i = t_a^i.
std::vector<LConvLayer> lconv_stack_for_anchor(std::span<const Generator> basis, const ApproxConfig& cfg,
                                               std::size_t channels = 1);

/// Spatial operator of the stack: the product of the per-layer transports
/// I + Σ_i ε̄^i L̂_i, first layer rightmost.
Matrix composed_transport(const std::vector<LConvLayer>& stack);

/// Max |direct circular 1D convolution − gconv_reference| for the kernel
/// taps w_μ at integer shifts μ = 0..k−1 on a length-d ring, evaluated on
/// random features drawn from `seed`.
double cnn_equivalence_check(std::span<const double> kernel_weights, std::size_t d, std::uint64_t seed = 0,
                             std::size_t channels = 2);

struct ApproxRow {
  unsigned n = 0;
  double eta = 0.0;
  double frobenius_error = 0.0;
  double correlation = 0.0;
};

/// Corr((I + z/n L̂)ⁿ, g(z)) and ‖·−g(z)‖ on the SW shift group for each n.
std::vector<ApproxRow> shift_approximation_sweep(std::size_t d, double z, std::span<const unsigned> ns);

/// ‖(I + εL̂) − g(ε)‖ for each ε: the single-step error.
std::vector<double> single_step_errors(std::size_t d, std::span<const double> eps);

}  // namespace lieconv
