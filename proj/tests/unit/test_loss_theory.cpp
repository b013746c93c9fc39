#include <cmath>
#include <numbers>
#include <vector>

#include <Eigen/Dense>

#include "doctest.h"
#include "lconv/error.hpp"
#include "lconv/loss_theory.hpp"
#include "lconv/numerics.hpp"

using namespace lieconv;

namespace {

struct Instance {
  FieldSample field;
  LConvLayer layer;
  std::vector<Generator> generators;
};

Instance random_instance(SeededRng& rng, const GridSpec& grid, std::size_t m, bool scalar) {
  Instance in;
  in.generators = translation_generators(grid);
  LayerInit init{grid.d(), m, m + 1, in.generators.size(), scalar, 0, false};
  in.layer = make_layer(init, rng);
  for (auto& e : in.layer.eps) e = rng.uniform_matrix(e.rows(), e.cols(), -0.8, 0.8);
  in.layer.generators = in.generators;
  in.field = FieldSample{grid, rng.uniform_matrix(grid.d(), m, -1, 1), 1.0};
  return in;
}

}  // namespace

TEST_CASE("field terms: identity W0, scalar specialization and PSD mass") {
  const FieldTheoryTerms id = field_terms(Matrix::identity(3), std::vector<Matrix>{Matrix::identity(3) * 0.5});
  CHECK(id.m2 == Matrix::identity(3));
  CHECK(max_abs_diff(id.h[0][0], Matrix::identity(3) * 0.25) == 0.0);

  SeededRng rng(7);
  for (int t = 0; t < 10; ++t) {
    const Matrix w0 = rng.uniform_matrix(2, 4, -1, 1);
    const Matrix e = rng.uniform_matrix(4, 4, -1, 1);
    const FieldTheoryTerms terms = field_terms(w0, std::vector<Matrix>{e});
    Eigen::Matrix4d m;
    for (int r = 0; r < 4; ++r)
      for (int c = 0; c < 4; ++c) m(r, c) = terms.m2(r, c);
    CHECK(max_abs_diff(terms.m2, terms.m2.transposed()) == 0.0);
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d> eig(m);
    CHECK(eig.eigenvalues().minCoeff() >= -1e-12);
    CHECK(max_abs_diff(terms.v[0], terms.m2 * e) < 1e-15);
    CHECK(max_abs_diff(terms.h[0][0], terms.h[0][0].transposed()) < 1e-14);
  }

  LConvLayer scalar;
  scalar.w0 = Matrix{{1.5}};
  scalar.scalar_eps = true;
  scalar.eps = {Matrix{{0.3}}};
  scalar.generators = {sw_shift_generator(5)};
  const FieldTheoryTerms s = field_terms(scalar);
  CHECK(s.h[0][0](0, 0) == doctest::Approx(0.3 * 0.3 * 2.25));
}

TEST_CASE("mse loss: trivial cases") {
  SeededRng rng(8);
  Instance in = random_instance(rng, GridSpec::line(16), 2, false);
  FieldSample zero = in.field;
  zero.phi.fill(0.0);
  CHECK(mse_loss_direct(zero, in.layer) == 0.0);

  LConvLayer flat = in.layer;
  for (auto& e : flat.eps) e.fill(0.0);
  const Matrix mass = matmul_nt(in.field.phi, flat.w0);
  CHECK(mse_loss_direct(in.field, flat) == doctest::Approx(frobenius_dot(mass, mass)).epsilon(1e-14));

  FieldSample constant = in.field;
  for (std::size_t x = 0; x < 16; ++x) {
    constant.phi(x, 0) = 0.4;
    constant.phi(x, 1) = -1.1;
  }
  const FieldTheoryTerms terms = field_terms(in.layer);
  const LossBreakdown b = mse_loss_decomposed(constant, terms, in.generators);
  CHECK(std::abs(b.kinetic) < 1e-24);
  CHECK(std::abs(b.divergence) < 1e-12);
  const std::vector<double> p{0.4, -1.1};
  double per_point = 0.0;
  for (int r = 0; r < 2; ++r)
    for (int c = 0; c < 2; ++c) per_point += p[r] * terms.m2(r, c) * p[c];
  CHECK(b.mass == doctest::Approx(16.0 * per_point).epsilon(1e-13));
}

TEST_CASE("mse loss: decomposition identity on rings and tori") {
  SeededRng rng(9);
  for (int t = 0; t < 10; ++t) {
    for (const GridSpec& grid : {GridSpec::line(16), GridSpec::line(13), GridSpec::image(6, 5, true)}) {
      for (bool scalar : {true, false}) {
        Instance in = random_instance(rng, grid, scalar ? 1 : 3, scalar);
        const double direct = mse_loss_direct(in.field, in.layer);
        const LossBreakdown b = mse_loss_decomposed(in.field, field_terms(in.layer), in.generators);
        CHECK(std::abs(direct - b.total()) <= 1e-8 * direct);
        CHECK(std::abs(b.divergence) <= 1e-9);
        if (scalar) CHECK(b.antisymmetric == 0.0);
      }
    }
  }
}

TEST_CASE("mse loss: invariance under shifts of the field") {
  SeededRng rng(10);
  for (std::size_t d : {15, 16}) {
    Instance in = random_instance(rng, GridSpec::line(d), 2, false);
    CHECK(loss_invariance_check(in.field, in.layer, GroupElement{Matrix::identity(d), "I"}) == 0.0);
    CHECK(loss_invariance_check(in.field, in.layer, sw_shift_matrix(d, 3.0)) <= 1e-12);
  }
  Instance odd = random_instance(rng, GridSpec::line(15), 2, false);
  CHECK(loss_invariance_check(odd.field, odd.layer, sw_shift_matrix(15, 0.5)) <= 1e-9);
}

TEST_CASE("mse loss: non-periodic grids and heads are rejected") {
  SeededRng rng(11);
  Instance in = random_instance(rng, GridSpec::line(8), 1, true);
  FieldSample open = in.field;
  open.grid.periodic = false;
  CHECK_THROWS_AS(mse_loss_direct(open, in.layer), UnsupportedGroupError);
  CHECK_THROWS_AS(translation_generators(GridSpec::line(8, false)), UnsupportedGroupError);
  FieldSample wrong = in.field;
  wrong.phi = Matrix(7, 1);
  CHECK_THROWS_AS(mse_loss_direct(wrong, in.layer), DimensionError);
}

TEST_CASE("euler-lagrange: Helmholtz solution, convergence and negative control") {
  const std::vector<std::size_t> sizes{32, 64, 128, 256};
  const auto rows = helmholtz_convergence(sizes);
  std::vector<double> h, el, noether;
  for (const auto& r : rows) {
    h.push_back(r.spacing);
    el.push_back(r.el_residual);
    noether.push_back(r.noether_divergence);
  }
  for (std::size_t i = 1; i < rows.size(); ++i) CHECK(el[i] < el[i - 1]);
  CHECK(std::abs(loglog_slope(h, el) - 2.0) <= 0.3);
  CHECK(std::abs(loglog_slope(h, noether) - 2.0) <= 0.3);
  CHECK(rows[2].grid_size == 128);
  CHECK(rows[2].el_residual <= 1e-3);
  CHECK(rows[2].noether_divergence <= 5e-3);
  // one halving of the spacing roughly quarters the residual
  CHECK(el[2] / el[3] == doctest::Approx(4.0).epsilon(0.15));

  const FieldTheoryTerms terms = field_terms(Matrix::identity(1), std::vector<Matrix>{Matrix{{1.0}}});
  SeededRng rng(12);
  FieldSample noise = helmholtz_solution(128, 1.0);
  noise.phi = rng.uniform_matrix(128, 1, -1, 1);
  CHECK(el_residual(noise, terms).max_abs() > 1e-3);
  CHECK(noether_divergence(noise, terms, 0) > 1e-1);

  FieldSample zero = noise;
  zero.phi.fill(0.0);
  CHECK(el_residual(zero, terms).max_abs() == 0.0);
}

TEST_CASE("euler-lagrange: the current of the cosh solution is constant") {
  const double eps = 0.7;
  const FieldSample s = helmholtz_solution(201, eps);
  const FieldTheoryTerms terms = field_terms(Matrix::identity(1), std::vector<Matrix>{Matrix{{eps}}});
  const Matrix j = noether_current(s, terms, 0);
  for (std::size_t x = 1; x + 1 < 201; ++x) CHECK(j(x, 0) == doctest::Approx(-1.0).epsilon(1e-3));
  const FieldResidual r = el_residual(s, terms);
  CHECK(r.interior.front() == 0);
  CHECK(r.interior.back() == 0);
  CHECK(r.values(0, 0) == 0.0);
}

TEST_CASE("euler-lagrange: constant field with no mass has no current") {
  FieldSample s{GridSpec::image(6, 6, true), Matrix(36, 2, 0.8), 0.5};
  const Matrix w0(2, 2);
  SeededRng rng(13);
  const std::vector<Matrix> eps{rng.uniform_matrix(2, 2, -1, 1), rng.uniform_matrix(2, 2, -1, 1)};
  const FieldTheoryTerms terms = field_terms(w0, eps);
  for (std::size_t k = 0; k < 2; ++k) CHECK(noether_divergence(s, terms, k) == 0.0);
  CHECK(max_abs(noether_current(s, terms, 1)) == 0.0);
}

TEST_CASE("euler-lagrange: periodic 2D plane wave with matrix couplings") {
  // cos(x + y) solves m2φ = Σ_ij h_ij ∂_i∂_jφ exactly when m2 = −(e1 + e2)²,
  // so the residual is pure discretization error.
  const double e1 = 0.6, e2 = -0.4;
  const FieldTheoryTerms terms =
      field_terms(Matrix::identity(1), std::vector<Matrix>{Matrix{{e1}}, Matrix{{e2}}});
  std::vector<double> hs, res;
  for (std::size_t n : {16, 32, 64}) {
    const double h = 2.0 * std::numbers::pi / static_cast<double>(n);
    FieldSample s{GridSpec::image(n, n, true), Matrix(n * n, 1), h};
    const double mass = (e1 + e2) * (e1 + e2);
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t c = 0; c < n; ++c) s.phi(r * n + c, 0) = std::cos(h * static_cast<double>(c + r));
    FieldTheoryTerms t = terms;
    t.m2 = Matrix{{-mass}};
    hs.push_back(h);
    res.push_back(el_residual(s, t).max_abs());
  }
  CHECK(std::abs(loglog_slope(hs, res) - 2.0) <= 0.3);
}

TEST_CASE("euler-lagrange: non-translation groups are unsupported") {
  const FieldSample s = helmholtz_solution(32, 1.0);
  const FieldTheoryTerms terms = field_terms(Matrix::identity(1), std::vector<Matrix>{Matrix{{1.0}}});
  CHECK_THROWS_AS(el_residual(s, terms, AnalyticKind::Rotation), UnsupportedGroupError);
  CHECK_THROWS_AS(noether_divergence(s, terms, 0, AnalyticKind::Scaling), UnsupportedGroupError);
}

TEST_CASE("metric: transforms as a 2-tensor under rotations") {
  SeededRng rng(14);
  LConvLayer layer;
  layer.w0 = rng.uniform_matrix(3, 2, -1, 1);
  layer.eps = {rng.uniform_matrix(2, 2, -1, 1)};
  layer.generators = {sw_shift_generator(5)};
  CHECK(metric_equivariance_check(layer, 0.0, 1.3) == 0.0);
  CHECK(metric_equivariance_check(layer, 0.9, 0.9) <= 1e-10);
  for (int t = 0; t < 20; ++t) {
    const double xi = rng.uniform(0.0, 2.0 * std::numbers::pi);
    const double theta = rng.uniform(0.0, 2.0 * std::numbers::pi);
    CHECK(metric_equivariance_check(layer, xi, theta) <= 1e-10);
  }

  // closed form at x₀ = (1, 0): the field is (0, 1), so only h^{yy} is nonzero
  const FieldTheoryTerms terms = field_terms(layer);
  const AnalyticGenerator so2 = analytic_generator(AnalyticKind::Rotation);
  const Matrix h0 = metric_at(terms, so2, std::vector<double>{1.0, 0.0});
  for (std::size_t a = 0; a < 2; ++a)
    for (std::size_t b = 0; b < 2; ++b) {
      CHECK(h0(a, b) == 0.0);
      CHECK(h0(2 + a, 2 + b) == doctest::Approx(terms.h[0][0](a, b)).epsilon(1e-14));
    }
}
