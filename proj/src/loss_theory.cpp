#include "lconv/loss_theory.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>

#include "lconv/error.hpp"
#include "lconv/numerics.hpp"

namespace lieconv {

void FieldSample::validate() const {
  if (phi.rows() != grid.d()) {
    throw DimensionError("field has " + std::to_string(phi.rows()) + " rows, grid has " + std::to_string(grid.d()) +
                         " points");
  }
  if (phi.cols() == 0) throw DimensionError("field has no channels");
  if (!(spacing > 0.0) || !std::isfinite(spacing)) throw DimensionError("grid spacing must be positive");
}

Matrix FieldTheoryTerms::v_symmetric(std::size_t i) const { return 0.5 * (v.at(i) + v.at(i).transposed()); }

Matrix FieldTheoryTerms::v_antisymmetric(std::size_t i) const { return 0.5 * (v.at(i) - v.at(i).transposed()); }

FieldTheoryTerms field_terms(const Matrix& w0, std::span<const Matrix> eps) {
  FieldTheoryTerms t;
  t.m2 = matmul_tn(w0, w0);
  const std::size_t m = t.m2.rows();
  for (const auto& e : eps) {
    if (e.rows() != m || e.cols() != m) {
      throw DimensionError("ε̄ is " + shape_string(e) + ", expected " + std::to_string(m) + "x" + std::to_string(m));
    }
    t.eps.push_back(e);
    t.v.push_back(matmul(t.m2, e));
  }
  t.h.resize(eps.size());
  for (std::size_t i = 0; i < eps.size(); ++i) {
    for (std::size_t j = 0; j < eps.size(); ++j) t.h[i].push_back(matmul_tn(t.eps[i], t.v[j]));
  }
  return t;
}

FieldTheoryTerms field_terms(const LConvLayer& layer) {
  layer.validate();
  std::vector<Matrix> eps;
  for (std::size_t i = 0; i < layer.n_generators(); ++i) eps.push_back(layer.eps_matrix(i));
  return field_terms(layer.w0, eps);
}

std::vector<Generator> translation_generators(const GridSpec& grid) {
  if (!grid.periodic) throw UnsupportedGroupError("SW translation generators need a periodic grid");
  if (grid.kind == GridSpec::Kind::Line) {
    Generator g = sw_shift_generator(grid.width);
    g.set_label("translation_x");
    return {g};
  }
  const Matrix lx = materialize(sw_shift_generator(grid.width));
  const Matrix ly = materialize(sw_shift_generator(grid.height));
  return {Generator::dense(kron(Matrix::identity(grid.height), lx), "translation_x"),
          Generator::dense(kron(ly, Matrix::identity(grid.width)), "translation_y")};
}

namespace {

void require_periodic(const FieldSample& phi) {
  phi.validate();
  if (!phi.grid.periodic) {
    throw UnsupportedGroupError("the loss sum over the grid is only a Haar integral on periodic grids");
  }
}

void check_channels(const FieldSample& phi, std::size_t m) {
  if (phi.phi.cols() != m) {
    throw DimensionError("field has " + std::to_string(phi.phi.cols()) + " channels, expected " + std::to_string(m));
  }
}

/// Translation-group stencils on a row-major grid.
class Stencil {
 public:
  explicit Stencil(const FieldSample& phi) : grid_(phi.grid), phi_(phi.phi), h_(phi.spacing) {}

  std::size_t axes() const { return grid_.kind == GridSpec::Kind::Line ? 1 : 2; }

  /// Neighbour of p one step along axis a (0 = x, 1 = y) in direction s.
  std::optional<std::size_t> step(std::size_t p, std::size_t a, int s) const {
    const std::size_t w = grid_.width;
    const std::size_t hgt = grid_.height;
    std::size_t col = p % w;
    std::size_t row = p / w;
    std::size_t& c = a == 0 ? col : row;
    const std::size_t n = a == 0 ? w : hgt;
    if (s > 0) {
      if (c + 1 == n) {
        if (!grid_.periodic) return std::nullopt;
        c = 0;
      } else {
        ++c;
      }
    } else {
      if (c == 0) {
        if (!grid_.periodic) return std::nullopt;
        c = n - 1;
      } else {
        --c;
      }
    }
    return row * w + col;
  }

  bool interior(std::size_t p) const {
    for (std::size_t a = 0; a < axes(); ++a) {
      if (!step(p, a, 1) || !step(p, a, -1)) return false;
    }
    return true;
  }

  /// ∂_a φ at an interior point.
  std::vector<double> first(std::size_t p, std::size_t a) const {
    const auto fwd = phi_.row(*step(p, a, 1));
    const auto bwd = phi_.row(*step(p, a, -1));
    std::vector<double> out(phi_.cols());
    for (std::size_t k = 0; k < out.size(); ++k) out[k] = (fwd[k] - bwd[k]) / (2.0 * h_);
    return out;
  }

  /// ∂_a∂_b φ at an interior point.
  std::vector<double> second(std::size_t p, std::size_t a, std::size_t b) const {
    std::vector<double> out(phi_.cols());
    if (a == b) {
      const auto fwd = phi_.row(*step(p, a, 1));
      const auto mid = phi_.row(p);
      const auto bwd = phi_.row(*step(p, a, -1));
      for (std::size_t k = 0; k < out.size(); ++k) out[k] = (fwd[k] - 2.0 * mid[k] + bwd[k]) / (h_ * h_);
      return out;
    }
    const auto pp = phi_.row(*step(*step(p, a, 1), b, 1));
    const auto pm = phi_.row(*step(*step(p, a, 1), b, -1));
    const auto mp = phi_.row(*step(*step(p, a, -1), b, 1));
    const auto mm = phi_.row(*step(*step(p, a, -1), b, -1));
    for (std::size_t k = 0; k < out.size(); ++k) out[k] = (pp[k] - pm[k] - mp[k] + mm[k]) / (4.0 * h_ * h_);
    return out;
  }

  double spacing() const { return h_; }

 private:
  const GridSpec& grid_;
  const Matrix& phi_;
  double h_;
};

void require_translation(AnalyticKind group, const char* what) {
  if (group != AnalyticKind::Translation) {
    throw UnsupportedGroupError(std::string(what) + " is only defined for the translation group");
  }
}

void check_axes(const Stencil& st, const FieldTheoryTerms& terms) {
  if (terms.n_generators() != st.axes()) {
    throw DimensionError("translation on this grid has " + std::to_string(st.axes()) + " generators, terms have " +
                         std::to_string(terms.n_generators()));
  }
}

/// out += a·x
void add_matvec(const Matrix& a, std::span<const double> x, std::span<double> out, double scale = 1.0) {
  for (std::size_t r = 0; r < a.rows(); ++r) {
    double s = 0.0;
    for (std::size_t c = 0; c < a.cols(); ++c) s += a(r, c) * x[c];
    out[r] += scale * s;
  }
}

double quad(std::span<const double> x, const Matrix& a, std::span<const double> y) {
  double s = 0.0;
  for (std::size_t r = 0; r < a.rows(); ++r) {
    for (std::size_t c = 0; c < a.cols(); ++c) s += x[r] * a(r, c) * y[c];
  }
  return s;
}

}  // namespace

double mse_loss_direct(const FieldSample& phi, const LConvLayer& layer) {
  require_periodic(phi);
  layer.validate();
  if (layer.head) throw DimensionError("the field-theory loss is defined for layers without a head");
  check_channels(phi, layer.m_in());
  if (layer.d() != phi.grid.d()) throw DimensionError("layer and field live on different grids");
  const Matrix q = lconv_forward(phi.phi, layer);
  const double n = frobenius_norm(q);
  return n * n;
}

LossBreakdown mse_loss_decomposed(const FieldSample& phi, const FieldTheoryTerms& terms,
                                  std::span<const Generator> generators) {
  require_periodic(phi);
  check_channels(phi, terms.channels());
  if (generators.size() != terms.n_generators()) {
    throw DimensionError("terms have " + std::to_string(terms.n_generators()) + " generators, got " +
                         std::to_string(generators.size()));
  }
  const Matrix& f = phi.phi;
  LossBreakdown out;
  out.mass = frobenius_dot(matmul(f, terms.m2), f);

  std::vector<Matrix> transported;
  for (const auto& g : generators) {
    if (g.dim() != f.rows()) throw DimensionError("generator and field live on different grids");
    transported.push_back(g.apply(f));
  }
  for (std::size_t i = 0; i < transported.size(); ++i) {
    for (std::size_t j = 0; j < transported.size(); ++j) {
      out.kinetic += frobenius_dot(matmul(transported[i], terms.h[i][j]), transported[j]);
    }
  }
  for (std::size_t i = 0; i < transported.size(); ++i) {
    const Matrix fv = matmul(f, terms.v_symmetric(i));
    Matrix density(f.rows(), 1);
    for (std::size_t x = 0; x < f.rows(); ++x) {
      double s = 0.0;
      for (std::size_t k = 0; k < f.cols(); ++k) s += fv(x, k) * f(x, k);
      density(x, 0) = s;
    }
    const Matrix flux = generators[i].apply(density);
    for (std::size_t x = 0; x < f.rows(); ++x) out.divergence += flux(x, 0);
    out.antisymmetric += 2.0 * frobenius_dot(matmul(f, terms.v_antisymmetric(i)), transported[i]);
  }
  return out;
}

double FieldResidual::max_abs() const {
  double m = 0.0;
  for (std::size_t p = 0; p < values.rows(); ++p) {
    if (!interior[p]) continue;
    for (double v : values.row(p)) m = std::max(m, std::abs(v));
  }
  return m;
}

FieldResidual el_residual(const FieldSample& phi, const FieldTheoryTerms& terms, AnalyticKind group) {
  require_translation(group, "el_residual");
  phi.validate();
  check_channels(phi, terms.channels());
  const Stencil st(phi);
  check_axes(st, terms);

  const std::size_t n = st.axes();
  std::vector<Matrix> anti;
  for (std::size_t i = 0; i < n; ++i) anti.push_back(terms.v_antisymmetric(i));

  FieldResidual r{Matrix(phi.phi.rows(), phi.phi.cols()), std::vector<std::uint8_t>(phi.phi.rows(), 0)};
  for (std::size_t p = 0; p < phi.phi.rows(); ++p) {
    if (!st.interior(p)) continue;
    r.interior[p] = 1;
    auto out = r.values.row(p);
    add_matvec(terms.m2, phi.phi.row(p), out);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) add_matvec(terms.h[i][j], st.second(p, i, j), out, -1.0);
      add_matvec(anti[i], st.first(p, i), out, -2.0);
    }
  }
  return r;
}

Matrix noether_current(const FieldSample& phi, const FieldTheoryTerms& terms, std::size_t direction) {
  phi.validate();
  check_channels(phi, terms.channels());
  const Stencil st(phi);
  check_axes(st, terms);
  const std::size_t n = st.axes();
  if (direction >= n) throw DimensionError("translation direction out of range");

  std::vector<Matrix> anti;
  for (std::size_t i = 0; i < n; ++i) anti.push_back(terms.v_antisymmetric(i));

  const std::size_t m = phi.phi.cols();
  Matrix current(phi.phi.rows(), n);
  for (std::size_t p = 0; p < phi.phi.rows(); ++p) {
    if (!st.interior(p)) continue;
    const auto f = phi.phi.row(p);
    std::vector<std::vector<double>> grad;
    for (std::size_t a = 0; a < n; ++a) grad.push_back(st.first(p, a));

    // ℒ = φᵀm2φ + Σ_ij ∂_iφᵀ h_ij ∂_jφ − 2Σ_i φᵀ v_i^anti ∂_iφ
    double lagrangian = quad(f, terms.m2, f);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) lagrangian += quad(grad[i], terms.h[i][j], grad[j]);
      lagrangian -= 2.0 * quad(f, anti[i], grad[i]);
    }
    for (std::size_t a = 0; a < n; ++a) {
      // ∂ℒ/∂(∂_aφ) = 2Σ_j h_aj ∂_jφ + 2 v_a^anti φ
      std::vector<double> momentum(m, 0.0);
      for (std::size_t j = 0; j < n; ++j) add_matvec(terms.h[a][j], grad[j], momentum, 2.0);
      add_matvec(anti[a], f, momentum, 2.0);
      double j_a = 0.0;
      for (std::size_t k = 0; k < m; ++k) j_a += momentum[k] * grad[direction][k];
      if (a == direction) j_a -= lagrangian;
      current(p, a) = j_a;
    }
  }
  return current;
}

double noether_divergence(const FieldSample& phi, const FieldTheoryTerms& terms, std::size_t direction,
                          AnalyticKind group) {
  require_translation(group, "noether_divergence");
  const Matrix current = noether_current(phi, terms, direction);
  const Stencil st(phi);
  const std::size_t n = st.axes();

  double worst = 0.0;
  bool any = false;
  for (std::size_t p = 0; p < phi.phi.rows(); ++p) {
    bool ok = st.interior(p);
    for (std::size_t a = 0; ok && a < n; ++a) ok = st.interior(*st.step(p, a, 1)) && st.interior(*st.step(p, a, -1));
    if (!ok) continue;
    double div = 0.0;
    for (std::size_t a = 0; a < n; ++a) {
      div += (current(*st.step(p, a, 1), a) - current(*st.step(p, a, -1), a)) / (2.0 * st.spacing());
    }
    worst = std::max(worst, std::abs(div));
    any = true;
  }
  if (!any) throw UnsupportedSizeError("grid too small for a Noether divergence stencil");
  return worst;
}

Matrix metric_at(const FieldTheoryTerms& terms, const AnalyticGenerator& algebra, std::span<const double> x) {
  if (terms.n_generators() > algebra.generators.size()) {
    throw DimensionError("terms have more generators than the algebra");
  }
  const std::size_t s = algebra.space_dim;
  const std::size_t m = terms.channels();
  std::vector<Matrix> fields;
  for (std::size_t i = 0; i < terms.n_generators(); ++i) fields.push_back(Matrix::column(algebra.field(i, x)));
  Matrix out(s * m, s * m);
  for (std::size_t i = 0; i < fields.size(); ++i) {
    for (std::size_t j = 0; j < fields.size(); ++j) out += kron(matmul_nt(fields[i], fields[j]), terms.h[i][j]);
  }
  return out;
}

double metric_equivariance_check(const LConvLayer& layer, double xi, double theta) {
  const FieldTheoryTerms terms = field_terms(layer);
  if (terms.n_generators() != 1) throw DimensionError("so(2) has a single generator");
  const AnalyticGenerator so2 = analytic_generator(AnalyticKind::Rotation);
  const auto rot = [](double a) { return Matrix{{std::cos(a), -std::sin(a)}, {std::sin(a), std::cos(a)}}; };
  const auto point = [&](double a) {
    const Matrix p = matmul(rot(a), so2.origin);
    return std::vector<double>{p(0, 0), p(1, 0)};
  };
  const Matrix r = kron(rot(-xi), Matrix::identity(terms.channels()));
  const Matrix moved = matmul_nt(matmul(r, metric_at(terms, so2, point(theta))), r);
  return frobenius_norm(moved - metric_at(terms, so2, point(theta - xi)));
}

double loss_invariance_check(const FieldSample& phi, const LConvLayer& layer, const GroupElement& w) {
  const double base = mse_loss_direct(phi, layer);
  FieldSample moved = phi;
  moved.phi = act_on_features(w.matrix, phi.phi);
  return std::abs(mse_loss_direct(moved, layer) - base) / std::max(base, 1e-300);
}

FieldSample helmholtz_solution(std::size_t n, double eps_bar) {
  if (n < 5) throw UnsupportedSizeError("the Helmholtz grid needs at least 5 points");
  if (eps_bar == 0.0 || !std::isfinite(eps_bar)) throw DegenerateInputError("ε̄ must be finite and nonzero");
  FieldSample s{GridSpec::line(n, false), Matrix(n, 1), 2.0 / static_cast<double>(n - 1)};
  for (std::size_t i = 0; i < n; ++i) {
    const double x = -1.0 + s.spacing * static_cast<double>(i);
    s.phi(i, 0) = std::cosh(x / std::abs(eps_bar));
  }
  return s;
}

std::vector<ConvergenceRow> helmholtz_convergence(std::span<const std::size_t> sizes, double eps_bar) {
  const Matrix w0 = Matrix::identity(1);
  const std::vector<Matrix> eps{Matrix{{eps_bar}}};
  const FieldTheoryTerms terms = field_terms(w0, eps);
  std::vector<ConvergenceRow> rows;
  for (std::size_t n : sizes) {
    const FieldSample s = helmholtz_solution(n, eps_bar);
    rows.push_back({n, s.spacing, el_residual(s, terms).max_abs(), noether_divergence(s, terms, 0)});
  }
  return rows;
}

}  // namespace lieconv
