#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "lconv/generator.hpp"
#include "lconv/groups.hpp"
#include "lconv/layer.hpp"
#include "lconv/matrix.hpp"

namespace lieconv {

/// Concatenated features and labels φ = [f|y] sampled on a grid, one row per
/// grid point. `spacing` is the physical distance between neighbours and only
/// enters the finite-difference diagnostics.
struct FieldSample {
  GridSpec grid;
  Matrix phi;  // d×m_tot
  double spacing = 1.0;

  void validate() const;
};

/// Coefficients of the quadratic loss ‖W0(φ + Σ_i ε̄_i L̂_iφ)‖² written as a
/// field theory: mass m2 = W0ᵀW0, couplings v_i = m2·ε̄_i and channel blocks
/// h_ij = ε̄_iᵀ·m2·ε̄_j of the metric h^{αβ} = Σ_ij h_ij [L̂_i]^α [L̂_j]^β.
struct FieldTheoryTerms {
  Matrix m2;
  std::vector<Matrix> eps;
  std::vector<Matrix> v;
  std::vector<std::vector<Matrix>> h;  // h[i][j]

  std::size_t n_generators() const { return eps.size(); }
  std::size_t channels() const { return m2.rows(); }
  /// Symmetric and antisymmetric parts of v_i.
  Matrix v_symmetric(std::size_t i) const;
  Matrix v_antisymmetric(std::size_t i) const;
};

FieldTheoryTerms field_terms(const LConvLayer& layer);

/// Hand-built terms for diagnostics that do not start from a layer.
FieldTheoryTerms field_terms(const Matrix& w0, std::span<const Matrix> eps);

/// SW translation generators on a periodic grid: one for a line, two
/// (x then y) for a square image.
std::vector<Generator> translation_generators(const GridSpec& grid);

/// Σ_x ‖Q[φ]_x‖² with the layer applied to φ (no head allowed).
double mse_loss_direct(const FieldSample& phi, const LConvLayer& layer);

struct LossBreakdown {
  double mass = 0.0;           // Σ_x φᵀ m2 φ
  double kinetic = 0.0;        // Σ_x Σ_ij (L̂_iφ)ᵀ h_ij (L̂_jφ)
  double divergence = 0.0;     // Σ_x Σ_i [L̂_i (φᵀ v_i^sym φ)]_x
  double antisymmetric = 0.0;  // 2 Σ_x Σ_i φᵀ v_i^anti (L̂_iφ); zero for scalar ε̄

  double total() const { return mass + kinetic + divergence + antisymmetric; }
};

/// Three-term form of the loss. The symmetric coupling is evaluated as the
/// divergence of φᵀv_iφ, which telescopes to rounding level on periodic grids.
LossBreakdown mse_loss_decomposed(const FieldSample& phi, const FieldTheoryTerms& terms,
                                  std::span<const Generator> generators);

/// Pointwise residual restricted to interior points; boundary rows are zero.
struct FieldResidual {
  Matrix values;
  std::vector<std::uint8_t> interior;

  double max_abs() const;
};

/// Euler-Lagrange residual m2φ − Σ_ij h_ij ∂_i∂_jφ − 2Σ_i v_i^anti ∂_iφ for
/// the translation group, with second-order central differences along the
/// grid axes. Non-periodic grids are evaluated on interior points only.
/// Throws UnsupportedGroupError for any other group.
FieldResidual el_residual(const FieldSample& phi, const FieldTheoryTerms& terms,
                          AnalyticKind group = AnalyticKind::Translation);

/// Max |∂_αJ^α| over interior points for the current of a translation along
/// axis `direction`:
///   J^α = (∂ℒ/∂(∂_αφ))ᵀ ∂_kφ − δ_αk ℒ.
double noether_divergence(const FieldSample& phi, const FieldTheoryTerms& terms, std::size_t direction,
                          AnalyticKind group = AnalyticKind::Translation);

/// Noether current J^α at every grid point (column α), with derivatives from
/// central differences; boundary rows of non-periodic grids are zero.
Matrix noether_current(const FieldSample& phi, const FieldTheoryTerms& terms, std::size_t direction);

/// Spatial-by-channel metric at base point x: Σ_ij [L̂_i(x)][L̂_j(x)]ᵀ ⊗ h_ij.
Matrix metric_at(const FieldTheoryTerms& terms, const AnalyticGenerator& algebra, std::span<const double> x);

/// ‖(R(−ξ)⊗I) h(R(θ)x₀) (R(−ξ)⊗I)ᵀ − h(R(θ−ξ)x₀)‖_F for the so(2) algebra.
double metric_equivariance_check(const LConvLayer& layer, double xi, double theta);

/// |I(w·φ) − I(φ)| / max(I(φ), 1e-300) with w·φ = w⁻ᵀφ.
double loss_invariance_check(const FieldSample& phi, const LConvLayer& layer, const GroupElement& w);

/// cosh(x/|ε̄|) sampled at n points on [−1, 1] (endpoints included).
FieldSample helmholtz_solution(std::size_t n, double eps_bar);

struct ConvergenceRow {
  std::size_t grid_size = 0;
  double spacing = 0.0;
  double el_residual = 0.0;
  double noether_divergence = 0.0;
};

/// EL residual and Noether divergence of the 1D Helmholtz solution for
/// m2 = 1, h = ε̄² at every grid size.
std::vector<ConvergenceRow> helmholtz_convergence(std::span<const std::size_t> sizes, double eps_bar = 1.0);

}  // namespace lieconv
