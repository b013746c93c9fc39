#include "lconv/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "lconv/error.hpp"

namespace lieconv {

std::uint64_t SeededRng::next_u64() {
  std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

double SeededRng::uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

double SeededRng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

std::uint64_t SeededRng::uniform_index(std::uint64_t n) {
  if (n == 0) throw DegenerateInputError("uniform_index over an empty range");
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % n;
  std::uint64_t v;
  do {
    v = next_u64();
  } while (v >= limit);
  return v % n;
}

void SeededRng::shuffle(std::span<std::size_t> values) {
  for (std::size_t i = values.size(); i > 1; --i) {
    std::swap(values[i - 1], values[uniform_index(i)]);
  }
}

Matrix SeededRng::uniform_matrix(std::size_t rows, std::size_t cols, double lo, double hi) {
  Matrix m(rows, cols);
  for (double& v : m.data()) v = uniform(lo, hi);
  return m;
}

double cosine_correlation(const Matrix& a, const Matrix& b) {
  require_same_shape(a, b, "cosine_correlation");
  const double na = frobenius_norm(a);
  const double nb = frobenius_norm(b);
  if (!(na > 0.0) || !(nb > 0.0)) {
    throw DegenerateInputError("cosine_correlation of a zero-norm matrix");
  }
  const double c = frobenius_dot(a, b) / (na * nb);
  return std::clamp(c, -1.0, 1.0);
}

namespace {

// Lower-triangular Cholesky factor; returns false if a pivot is not positive.
bool cholesky(const Matrix& a, Matrix& l) {
  const std::size_t n = a.rows();
  l = Matrix(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    double s = a(j, j);
    for (std::size_t k = 0; k < j; ++k) s -= l(j, k) * l(j, k);
    if (!(s > 0.0)) return false;
    const double d = std::sqrt(s);
    l(j, j) = d;
    for (std::size_t i = j + 1; i < n; ++i) {
      double t = a(i, j);
      for (std::size_t k = 0; k < j; ++k) t -= l(i, k) * l(j, k);
      l(i, j) = t / d;
    }
  }
  return true;
}

// Solves (L·Lᵀ) z = b in place for a single vector.
void cholesky_solve_vec(const Matrix& l, std::span<double> b) {
  const std::size_t n = l.rows();
  for (std::size_t i = 0; i < n; ++i) {
    double s = b[i];
    for (std::size_t k = 0; k < i; ++k) s -= l(i, k) * b[k];
    b[i] = s / l(i, i);
  }
  for (std::size_t i = n; i-- > 0;) {
    double s = b[i];
    for (std::size_t k = i + 1; k < n; ++k) s -= l(k, i) * b[k];
    b[i] = s / l(i, i);
  }
}

double normalize(std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  s = std::sqrt(s);
  if (s > 0.0)
    for (double& x : v) x /= s;
  return s;
}

// Power iteration on A and on A⁻¹ (through the Cholesky factor).
double spd_condition_estimate(const Matrix& a, const Matrix& l) {
  const std::size_t n = a.rows();
  std::vector<double> v(n), w(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = 1.0 + 0.01 * static_cast<double>(i % 7);
  normalize(v);
  double lmax = 0.0;
  for (int it = 0; it < 60; ++it) {
    for (std::size_t i = 0; i < n; ++i) {
      double s = 0.0;
      for (std::size_t k = 0; k < n; ++k) s += a(i, k) * v[k];
      w[i] = s;
    }
    lmax = normalize(w);
    v.swap(w);
  }
  for (std::size_t i = 0; i < n; ++i) v[i] = 1.0 - 0.013 * static_cast<double>(i % 5);
  normalize(v);
  double inv_lmin = 0.0;
  for (int it = 0; it < 60; ++it) {
    w = v;
    cholesky_solve_vec(l, w);
    inv_lmin = normalize(w);
    v.swap(w);
  }
  return lmax * inv_lmin;
}

// Column-pivoted Householder QR solve of min ‖A·Z − B‖ for A (N×d), B (N×k).
Matrix pivoted_qr_solve(Matrix a, Matrix b, double& condition) {
  const std::size_t m = a.rows(), n = a.cols(), k = b.cols();
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  std::vector<double> norms(n, 0.0);
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t i = 0; i < m; ++i) norms[j] += a(i, j) * a(i, j);

  std::vector<double> rdiag(n, 0.0);
  std::vector<double> v(m);
  for (std::size_t j = 0; j < n; ++j) {
    std::size_t best = j;
    for (std::size_t c = j + 1; c < n; ++c)
      if (norms[c] > norms[best]) best = c;
    if (best != j) {
      for (std::size_t i = 0; i < m; ++i) std::swap(a(i, j), a(i, best));
      std::swap(norms[j], norms[best]);
      std::swap(perm[j], perm[best]);
    }
    double alpha = 0.0;
    for (std::size_t i = j; i < m; ++i) alpha += a(i, j) * a(i, j);
    alpha = std::sqrt(alpha);
    if (alpha == 0.0) {
      rdiag[j] = 0.0;
      continue;
    }
    if (a(j, j) > 0) alpha = -alpha;
    for (std::size_t i = j; i < m; ++i) v[i] = a(i, j);
    v[j] -= alpha;
    double vnorm2 = 0.0;
    for (std::size_t i = j; i < m; ++i) vnorm2 += v[i] * v[i];
    if (vnorm2 > 0.0) {
      for (std::size_t c = j; c < n; ++c) {
        double s = 0.0;
        for (std::size_t i = j; i < m; ++i) s += v[i] * a(i, c);
        s = 2.0 * s / vnorm2;
        for (std::size_t i = j; i < m; ++i) a(i, c) -= s * v[i];
      }
      for (std::size_t c = 0; c < k; ++c) {
        double s = 0.0;
        for (std::size_t i = j; i < m; ++i) s += v[i] * b(i, c);
        s = 2.0 * s / vnorm2;
        for (std::size_t i = j; i < m; ++i) b(i, c) -= s * v[i];
      }
    }
    rdiag[j] = a(j, j);
    for (std::size_t c = j + 1; c < n; ++c) norms[c] -= a(j, c) * a(j, c);
  }

  const double r0 = std::abs(rdiag[0]);
  double rmin = std::numeric_limits<double>::infinity();
  for (double r : rdiag) rmin = std::min(rmin, std::abs(r));
  condition = rmin > 0.0 ? (r0 / rmin) * (r0 / rmin) : std::numeric_limits<double>::infinity();
  if (condition > 1e12) {
    throw SingularSystemError("least_squares_solve: X·Xᵀ is rank deficient (condition estimate " +
                                  std::to_string(condition) + ")",
                              condition);
  }

  Matrix z(n, k);
  for (std::size_t c = 0; c < k; ++c) {
    for (std::size_t i = n; i-- > 0;) {
      double s = b(i, c);
      for (std::size_t t = i + 1; t < n; ++t) s -= a(i, t) * z(perm[t], c);
      z(perm[i], c) = s / a(i, i);
    }
  }
  return z;
}

}  // namespace

Matrix least_squares_solve(const Matrix& x, const Matrix& y, LeastSquaresInfo* info) {
  if (x.cols() != y.cols()) {
    throw DimensionError("least_squares_solve: sample counts differ (" + shape_string(x) + " vs " +
                         shape_string(y) + ")");
  }
  if (x.cols() < x.rows()) {
    throw SingularSystemError("least_squares_solve: fewer samples than dimensions",
                              std::numeric_limits<double>::infinity());
  }
  const Matrix a = matmul_nt(x, x);
  const Matrix b = matmul_nt(y, x);
  Matrix l;
  LeastSquaresInfo local;
  if (cholesky(a, l)) {
    local.condition_estimate = spd_condition_estimate(a, l);
    if (local.condition_estimate <= 1e8) {
      Matrix r(b.rows(), b.cols());
      std::vector<double> col(a.rows());
      for (std::size_t i = 0; i < b.rows(); ++i) {
        auto brow = b.row(i);
        std::copy(brow.begin(), brow.end(), col.begin());
        cholesky_solve_vec(l, col);
        std::copy(col.begin(), col.end(), r.row(i).begin());
      }
      if (info) *info = local;
      return r;
    }
  }
  local.used_qr_fallback = true;
  Matrix rt = pivoted_qr_solve(x.transposed(), y.transposed(), local.condition_estimate);
  if (info) *info = local;
  return rt.transposed();
}

Matrix solve_linear(const Matrix& a_in, const Matrix& b_in) {
  if (!a_in.square() || a_in.rows() != b_in.rows()) {
    throw DimensionError("solve_linear: " + shape_string(a_in) + " \\ " + shape_string(b_in));
  }
  Matrix a = a_in;
  Matrix b = b_in;
  const std::size_t n = a.rows(), k = b.cols();
  double amax = max_abs(a);
  for (std::size_t j = 0; j < n; ++j) {
    std::size_t piv = j;
    for (std::size_t i = j + 1; i < n; ++i)
      if (std::abs(a(i, j)) > std::abs(a(piv, j))) piv = i;
    if (!(std::abs(a(piv, j)) > 1e-14 * amax)) {
      throw SingularSystemError("solve_linear: matrix is singular to working precision",
                                std::numeric_limits<double>::infinity());
    }
    if (piv != j) {
      for (std::size_t c = 0; c < n; ++c) std::swap(a(j, c), a(piv, c));
      for (std::size_t c = 0; c < k; ++c) std::swap(b(j, c), b(piv, c));
    }
    for (std::size_t i = j + 1; i < n; ++i) {
      const double f = a(i, j) / a(j, j);
      if (f == 0.0) continue;
      for (std::size_t c = j; c < n; ++c) a(i, c) -= f * a(j, c);
      for (std::size_t c = 0; c < k; ++c) b(i, c) -= f * b(j, c);
    }
  }
  for (std::size_t i = n; i-- > 0;) {
    for (std::size_t c = 0; c < k; ++c) {
      double s = b(i, c);
      for (std::size_t t = i + 1; t < n; ++t) s -= a(i, t) * b(t, c);
      b(i, c) = s / a(i, i);
    }
  }
  return b;
}

Matrix inverse(const Matrix& a) { return solve_linear(a, Matrix::identity(a.rows())); }

std::vector<double> finite_difference_gradient(const ScalarFunction& loss,
                                               std::span<const double> p, double step) {
  if (!(step > 0.0)) throw DegenerateInputError("finite_difference_gradient: step must be > 0");
  std::vector<double> point(p.begin(), p.end());
  std::vector<double> grad(p.size());
  for (std::size_t k = 0; k < p.size(); ++k) {
    const double orig = point[k];
    point[k] = orig + step;
    const double up = loss(point);
    point[k] = orig - step;
    const double down = loss(point);
    point[k] = orig;
    if (!std::isfinite(up) || !std::isfinite(down)) {
      throw EvaluationError("finite_difference_gradient: non-finite loss at coordinate " +
                            std::to_string(k));
    }
    grad[k] = (up - down) / (2.0 * step);
  }
  return grad;
}

double loglog_slope(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) {
    throw DimensionError("loglog_slope needs at least two paired points");
  }
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0)) throw DegenerateInputError("loglog_slope of non-positive data");
    const double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace lieconv
