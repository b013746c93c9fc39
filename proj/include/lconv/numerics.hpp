#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "lconv/matrix.hpp"

namespace lieconv {

/// SplitMix64 (Steele, Lea, Flood 2014). Integer-only state update, so a
/// given seed produces the same stream on every platform.
class SeededRng {
 public:
  explicit SeededRng(std::uint64_t seed) : seed_(seed), state_(seed) {}

  std::uint64_t seed() const { return seed_; }
  std::uint64_t next_u64();
  /// Uniform in [0, 1) with 53 bits: (u >> 11) * 2^-53.
  double uniform01();
  /// Uniform in [lo, hi).
  double uniform(double lo, double hi);
  /// Uniform integer in [0, n), rejection-sampled (no modulo bias).
  std::uint64_t uniform_index(std::uint64_t n);
  /// Fisher-Yates using uniform_index; std::shuffle is not portable.
  void shuffle(std::span<std::size_t> values);
  /// rows×cols matrix with iid uniform [lo, hi) entries, row-major fill order.
  Matrix uniform_matrix(std::size_t rows, std::size_t cols, double lo, double hi);

 private:
  std::uint64_t seed_;
  std::uint64_t state_;
};

/// Tr(aᵀb) / (‖a‖‖b‖) with Frobenius norms.
double cosine_correlation(const Matrix& a, const Matrix& b);

struct LeastSquaresInfo {
  double condition_estimate = 0.0;  // of X·Xᵀ
  bool used_qr_fallback = false;
};

/// Solves Y ≈ R·X in the least-squares sense for X (d×N) and Y (k×N),
/// returning R (k×d) = (Y·Xᵀ)(X·Xᵀ)⁻¹.
///
/// Uses a Cholesky factorization of the normal matrix while its estimated
/// condition number stays below 1e8, and a column-pivoted Householder QR of
/// Xᵀ otherwise. Throws SingularSystemError when X·Xᵀ is rank deficient
/// (condition estimate above 1e12).
Matrix least_squares_solve(const Matrix& x, const Matrix& y, LeastSquaresInfo* info = nullptr);

/// Solves A·Z = B with partial-pivoting LU. Throws SingularSystemError on a
/// zero pivot.
Matrix solve_linear(const Matrix& a, const Matrix& b);
Matrix inverse(const Matrix& a);

using ScalarFunction = std::function<double(std::span<const double>)>;

/// Central differences (f(p+h·e_k) − f(p−h·e_k)) / 2h for every coordinate.
std::vector<double> finite_difference_gradient(const ScalarFunction& loss,
                                               std::span<const double> p, double step);

/// Least-squares slope of log(y) against log(x).
double loglog_slope(std::span<const double> x, std::span<const double> y);

}  // namespace lieconv
