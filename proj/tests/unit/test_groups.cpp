#include <cmath>
#include <numbers>

#include "doctest.h"
#include "lconv/error.hpp"
#include "lconv/groups.hpp"
#include "lconv/numerics.hpp"

using namespace lieconv;

namespace {

Matrix circulant_shift(std::size_t d, std::size_t mu) {
  Matrix p(d, d);
  for (std::size_t r = 0; r < d; ++r) p(r, (r + d - mu) % d) = 1.0;
  return p;
}

Matrix column_of(const std::vector<double>& v) { return Matrix(v.size(), 1, v); }

}  // namespace

TEST_CASE("sw shift: identity and integer shifts") {
  for (std::size_t d : {8u, 9u, 16u, 32u, 64u}) {
    CAPTURE(d);
    CHECK(max_abs_diff(sw_shift_matrix(d, 0.0).matrix, Matrix::identity(d)) < 1e-12);
    CHECK(max_abs_diff(sw_shift_matrix(d, 1.0).matrix, circulant_shift(d, 1)) < 1e-10);
    CHECK(max_abs_diff(sw_shift_matrix(d, 3.0).matrix, circulant_shift(d, 3)) < 1e-10);
  }
  // (g(1) f)_r = f(r − 1)
  const Matrix f = column_of({1, 2, 3, 4, 5, 6, 7, 8});
  const Matrix g = sw_shift_matrix(8, 1.0).matrix * f;
  CHECK(g(0, 0) == doctest::Approx(8.0));
  CHECK(g(1, 0) == doctest::Approx(1.0));
  CHECK_THROWS_AS(sw_shift_matrix(2, 0.5), UnsupportedSizeError);
}

TEST_CASE("sw shift closure") {
  SeededRng rng(4);
  SUBCASE("odd d forms an exact group") {
    for (std::size_t d : {9u, 17u, 33u, 63u}) {
      for (int k = 0; k < 50; ++k) {
        const double w = rng.uniform(-3, 3), z = rng.uniform(-3, 3);
        const Matrix prod = sw_shift_matrix(d, w).matrix * sw_shift_matrix(d, z).matrix;
        const Matrix direct = sw_shift_matrix(d, w + z).matrix;
        CHECK(frobenius_norm(prod - direct) / frobenius_norm(direct) <= 1e-9);
      }
    }
  }
  SUBCASE("even d closes when one factor is an integer shift") {
    for (std::size_t d : {8u, 16u, 32u, 64u}) {
      for (int k = 0; k < 20; ++k) {
        const double w = std::round(rng.uniform(-4, 4)), z = rng.uniform(-3, 3);
        const Matrix prod = sw_shift_matrix(d, w).matrix * sw_shift_matrix(d, z).matrix;
        const Matrix direct = sw_shift_matrix(d, w + z).matrix;
        CHECK(frobenius_norm(prod - direct) / frobenius_norm(direct) <= 1e-9);
      }
    }
  }
}

TEST_CASE("sw generator") {
  for (std::size_t d : {8u, 9u, 16u}) {
    CAPTURE(d);
    const Matrix l = sw_shift_generator(d).dense_matrix();
    for (std::size_t r = 0; r < d; ++r) {
      CHECK(l(r, r) == 0.0);
      for (std::size_t c = 0; c < d; ++c) {
        CHECK(l(r, c) == doctest::Approx(-l(c, r)).epsilon(1e-12).scale(1.0));
        CHECK(l(r, c) == doctest::Approx(l((r + 1) % d, (c + 1) % d)).scale(1.0).epsilon(1e-12));
      }
    }
    const double h = 1e-5;
    const Matrix fd = (sw_shift_matrix(d, h).matrix - sw_shift_matrix(d, -h).matrix) * (0.5 / h);
    CHECK(max_abs_diff(fd, l) < 1e-6);
    // commutes with every shift
    CHECK(max_abs(lie_bracket(l, sw_shift_matrix(d, 0.37).matrix)) < 1e-9);
  }
}

TEST_CASE("sw generator approximates minus the derivative") {
  std::vector<double> errors;
  for (std::size_t d : {16u, 32u, 64u}) {
    std::vector<double> f(d), df(d);
    for (std::size_t i = 0; i < d; ++i) {
      // periodic in the index with period d, not band limited
      const double t = 2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(d);
      f[i] = std::exp(std::sin(t));
      df[i] = std::cos(t) * std::exp(std::sin(t)) * 2.0 * std::numbers::pi / static_cast<double>(d);
    }
    const Matrix lf = sw_shift_generator(d).apply(column_of(f));
    double err = 0.0;
    for (std::size_t i = 0; i < d; ++i) err = std::max(err, std::abs(lf(i, 0) + df[i]));
    errors.push_back(err);
  }
  CHECK(errors[1] < errors[0]);
  CHECK(errors[0] > 1e-8);
  CHECK(errors[1] < 1e-10);
  CHECK(errors[2] < 1e-10);
}

TEST_CASE("rotation generator") {
  const std::size_t n = 16;
  const Generator l = sw_rotation_generator(n, n);
  CHECK(l.dim() == n * n);
  CHECK(max_abs(l.apply(Matrix(n * n, 1, 1.0))) < 1e-8);

  const auto xs = grid_x_coordinates(n, n);
  const auto ys = grid_y_coordinates(n, n);
  std::vector<double> radial(n * n), xfield(n * n), expect(n * n);
  const double s2 = 2.0 * 1.8 * 1.8;
  for (std::size_t i = 0; i < n * n; ++i) {
    const double w = std::exp(-(xs[i] * xs[i] + ys[i] * ys[i]) / s2);
    radial[i] = (xs[i] * xs[i] + ys[i] * ys[i]) * w;
    xfield[i] = xs[i] * w;
    expect[i] = -ys[i] * w;  // rotating x gives −y; the radial window is invariant
  }
  CHECK(max_abs(l.apply(column_of(radial))) <= 0.05);
  CHECK(max_abs_diff(l.apply(column_of(xfield)), column_of(expect)) <= 0.05);

  // odd sizes are supported (the 7×7 discovery grid needs them)
  CHECK(sw_rotation_generator(7, 7).dim() == 49);
  CHECK_THROWS_AS(sw_rotation_generator(2, 7), UnsupportedSizeError);
}

TEST_CASE("bilinear rotation") {
  CHECK(rotation_matrix_bilinear(7, 7, 0.0).matrix == Matrix::identity(49));

  const Matrix r = rotation_matrix_bilinear(7, 7, std::numbers::pi / 10).matrix;
  for (std::size_t i = 0; i < r.rows(); ++i) {
    int nnz = 0;
    double sum = 0.0;
    for (double v : r.row(i)) {
      nnz += v != 0.0;
      sum += v;
    }
    CHECK(nnz <= 4);
    CHECK(sum <= 1.0 + 1e-12);
  }

  SUBCASE("quarter turns") {
    const Matrix q = rotation_matrix_bilinear(8, 8, std::numbers::pi / 2).matrix;
    const Matrix q4 = matrix_power(q, 4);
    CHECK(max_abs_diff(q4, Matrix::identity(64)) < 1e-10);
  }

  SUBCASE("round trip reproduces affine fields inside") {
    const Matrix back = rotation_matrix_bilinear(7, 7, -std::numbers::pi / 10).matrix * r;
    const auto xs = grid_x_coordinates(7, 7);
    const auto ys = grid_y_coordinates(7, 7);
    std::vector<double> lin(49);
    for (std::size_t i = 0; i < 49; ++i) lin[i] = 0.3 + 1.5 * xs[i] - 0.7 * ys[i];
    const Matrix out = back * column_of(lin);
    for (std::size_t i = 0; i < 49; ++i) {
      if (std::hypot(xs[i], ys[i]) <= 2.0) CHECK(out(i, 0) == doctest::Approx(lin[i]).epsilon(1e-12));
    }
  }

  SUBCASE("intensity of interior images is preserved") {
    const std::size_t n = 16;
    const auto xs = grid_x_coordinates(n, n);
    const auto ys = grid_y_coordinates(n, n);
    std::vector<double> img(n * n);
    for (std::size_t i = 0; i < n * n; ++i) img[i] = std::exp(-(xs[i] * xs[i] + ys[i] * ys[i]) / 8.0);
    const Matrix f = column_of(img);
    double total = 0.0;
    for (double v : img) total += v;
    for (double theta : {-std::numbers::pi / 4, -0.3, 0.1, 0.5, std::numbers::pi / 4}) {
      const Matrix g = rotation_matrix_bilinear(n, n, theta).matrix * f;
      double rotated = 0.0;
      for (double v : g.data()) rotated += v;
      CHECK(std::abs(rotated - total) <= 0.01 * total);
    }
  }

  SUBCASE("small rotations follow the generator") {
    const double c = cosine_correlation((r - Matrix::identity(49)) * (10.0 / std::numbers::pi),
                                        sw_rotation_generator(7, 7).dense_matrix());
    CHECK(c > 0.2);
  }
}

TEST_CASE("analytic generators") {
  const auto so2 = analytic_generator(AnalyticKind::Rotation);
  CHECK(so2.generators.at(0) == Matrix{{0, -1}, {1, 0}});
  const std::vector<double> e1{1.0, 0.0};
  auto v = so2.field(0, e1);
  CHECK(std::abs(v[0]) < 1e-15);
  CHECK(v[1] == doctest::Approx(1.0));
  const std::vector<double> p{0.5, -2.0};
  v = so2.field(0, p);
  CHECK(v[0] == doctest::Approx(2.0));
  CHECK(v[1] == doctest::Approx(0.5));

  const auto tn = analytic_generator(AnalyticKind::Translation, 3);
  const std::vector<double> x{0.3, -1.0, 2.0};
  for (std::size_t i = 0; i < 3; ++i) {
    const auto f = tn.field(i, x);
    for (std::size_t k = 0; k < 3; ++k) CHECK(f[k] == doctest::Approx(i == k ? 1.0 : 0.0));
  }

  const auto sc = analytic_generator(AnalyticKind::Scaling);
  const std::vector<double> q{2.0, 3.0};
  const auto s = sc.field(0, q);
  CHECK(s[0] == doctest::Approx(2.0));
  CHECK(s[1] == doctest::Approx(3.0));

  // rotation and scaling commute
  CHECK(max_abs(lie_bracket(so2.generators[0], sc.generators[0])) == 0.0);
}

TEST_CASE("edge assembly") {
  const auto path = EdgeTopology::path(3);
  for (std::size_t a = 0; a < path.edges.size(); ++a) {
    double col = 0.0;
    int plus = 0, minus = 0;
    for (std::size_t n = 0; n < 3; ++n) {
      col += path.incidence(n, a);
      plus += path.incidence(n, a) == 1.0;
      minus += path.incidence(n, a) == -1.0;
    }
    CHECK(col == 0.0);
    CHECK(plus == 1);
    CHECK(minus == 1);
  }
  const std::vector<double> ones{1.0, 1.0};
  const Matrix fwd = assemble_generator_from_edges(path, ones).dense_matrix();
  CHECK(fwd == Matrix{{-1, 1, 0}, {0, -1, 1}, {0, 0, 0}});

  const std::vector<double> zeros{0.0, 0.0};
  CHECK(max_abs(assemble_generator_from_edges(path, zeros).dense_matrix()) == 0.0);
  CHECK_THROWS_AS(assemble_generator_from_edges(path, std::vector<double>{1.0}), DimensionError);

  SeededRng rng(6);
  const auto ring = EdgeTopology::ring(10);
  std::vector<double> w(ring.edges.size());
  for (auto& x : w) x = static_cast<double>(rng.uniform_index(17)) / 8.0 - 1.0;
  const Generator g = assemble_generator_from_edges(ring, w);
  CHECK(max_abs(g.apply(Matrix(10, 2, 3.5))) == 0.0);
  for (auto& x : w) x = rng.uniform(-1, 1);
  CHECK(max_abs(assemble_generator_from_edges(ring, w).apply(Matrix(10, 2, 3.5))) < 1e-14);
}

TEST_CASE("central differences match the sw generator's leading band") {
  const std::size_t d = 32;
  const auto ring = EdgeTopology::ring(d);
  // forward edges +½, backward edges −½: (L f)_i = (f_{i+1} − f_{i−1}) / 2
  std::vector<double> w(2 * d);
  for (std::size_t a = 0; a < d; ++a) {
    w[a] = 0.5;
    w[d + a] = -0.5;
  }
  const Matrix central = assemble_generator_from_edges(ring, w).dense_matrix();
  const Matrix sw = sw_shift_generator(d).dense_matrix();
  Matrix band(d, d);
  for (std::size_t r = 0; r < d; ++r) {
    band(r, (r + 1) % d) = sw(r, (r + 1) % d);
    band(r, (r + d - 1) % d) = sw(r, (r + d - 1) % d);
  }
  // sw approximates −∂, the central difference +∂
  CHECK(cosine_correlation(-central, band) >= 0.9);
}

TEST_CASE("lie bracket") {
  SeededRng rng(12);
  const Matrix a = rng.uniform_matrix(4, 4, -1, 1);
  const Matrix b = rng.uniform_matrix(4, 4, -1, 1);
  CHECK(max_abs(lie_bracket(a, a)) == 0.0);
  CHECK(max_abs_diff(lie_bracket(a, b), -lie_bracket(b, a)) == 0.0);
  const Matrix e12{{0, 1}, {0, 0}}, e21{{0, 0}, {1, 0}};
  CHECK(lie_bracket(e12, e21) == Matrix{{1, 0}, {0, -1}});
  CHECK_THROWS_AS(lie_bracket(a, Matrix::identity(3)), DimensionError);
}
