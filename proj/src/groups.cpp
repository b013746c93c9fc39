#include "lconv/groups.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "lconv/error.hpp"

namespace lieconv {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

void check_sw_size(std::size_t d) {
  if (d < 3) throw UnsupportedSizeError("Shannon-Whittaker operators need d >= 3, got " + std::to_string(d));
}

// Frequencies p and weights w_p of the band-limited sum.
std::vector<std::pair<double, double>> sw_modes(std::size_t d) {
  std::vector<std::pair<double, double>> modes;
  const long half = static_cast<long>(d / 2);
  if (d % 2 == 1) {
    for (long p = -half; p <= half; ++p) modes.emplace_back(static_cast<double>(p), 1.0);
  } else {
    for (long p = -half; p <= half; ++p) {
      modes.emplace_back(static_cast<double>(p), (p == -half || p == half) ? 0.5 : 1.0);
    }
  }
  return modes;
}

Matrix circulant(std::span<const double> kernel) {
  // entry (r, c) = kernel[(c − r) mod d]
  const std::size_t d = kernel.size();
  Matrix m(d, d);
  for (std::size_t r = 0; r < d; ++r)
    for (std::size_t c = 0; c < d; ++c) m(r, c) = kernel[(c + d - r) % d];
  return m;
}

std::string format_label(const char* prefix, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%s%.6g", prefix, v);
  return buf;
}

}  // namespace

GridSpec GridSpec::line(std::size_t width, bool periodic) {
  return GridSpec{Kind::Line, width, 1, periodic};
}

GridSpec GridSpec::image(std::size_t width, std::size_t height, bool periodic) {
  return GridSpec{Kind::Image, width, height, periodic};
}

GroupElement sw_shift_matrix(std::size_t d, double z) {
  check_sw_size(d);
  const auto modes = sw_modes(d);
  const double dd = static_cast<double>(d);
  std::vector<double> kernel(d);
  for (std::size_t s = 0; s < d; ++s) {
    double acc = 0.0;
    for (const auto& [p, w] : modes) acc += w * std::cos(kTwoPi * p * (z + static_cast<double>(s)) / dd);
    kernel[s] = acc / dd;
  }
  return {circulant(kernel), format_label("sw-shift z=", z)};
}

Generator sw_shift_generator(std::size_t d) {
  check_sw_size(d);
  const auto modes = sw_modes(d);
  const double dd = static_cast<double>(d);
  std::vector<double> kernel(d);
  for (std::size_t s = 0; s < d; ++s) {
    double acc = 0.0;
    for (const auto& [p, w] : modes) acc -= w * (kTwoPi * p / (dd * dd)) * std::sin(kTwoPi * p * static_cast<double>(s) / dd);
    kernel[s] = acc;
  }
  // sin(2πp·s/d) vanishes exactly at s = 0; keep the diagonal an exact zero
  kernel[0] = 0.0;
  return Generator::dense(circulant(kernel), "sw-shift-generator d=" + std::to_string(d));
}

std::vector<double> grid_x_coordinates(std::size_t width, std::size_t height) {
  std::vector<double> xs(width * height);
  const double cx = (static_cast<double>(width) - 1.0) / 2.0;
  for (std::size_t r = 0; r < height; ++r)
    for (std::size_t c = 0; c < width; ++c) xs[r * width + c] = static_cast<double>(c) - cx;
  return xs;
}

std::vector<double> grid_y_coordinates(std::size_t width, std::size_t height) {
  std::vector<double> ys(width * height);
  const double cy = (static_cast<double>(height) - 1.0) / 2.0;
  for (std::size_t r = 0; r < height; ++r)
    for (std::size_t c = 0; c < width; ++c) ys[r * width + c] = static_cast<double>(r) - cy;
  return ys;
}

Generator sw_rotation_generator(std::size_t width, std::size_t height) {
  check_sw_size(width);
  check_sw_size(height);
  // the shift generator is −∂, so negate to get derivatives
  const Matrix dx = -kron(Matrix::identity(height), sw_shift_generator(width).dense_matrix());
  const Matrix dy = -kron(sw_shift_generator(height).dense_matrix(), Matrix::identity(width));
  const auto xs = grid_x_coordinates(width, height);
  const auto ys = grid_y_coordinates(width, height);
  Matrix l = matmul(diag(xs), dy);
  l -= matmul(diag(ys), dx);
  return Generator::dense(std::move(l), "sw-rotation-generator " + std::to_string(width) + "x" +
                                            std::to_string(height));
}

namespace {

// Calls tap(out_index, in_index, weight) for every nonzero bilinear weight.
template <typename Tap>
void for_each_bilinear_tap(std::size_t width, std::size_t height, double theta, Tap&& tap) {
  if (width < 2 || height < 2) {
    throw UnsupportedSizeError("bilinear rotation needs at least a 2x2 grid");
  }
  const double cx = (static_cast<double>(width) - 1.0) / 2.0;
  const double cy = (static_cast<double>(height) - 1.0) / 2.0;
  const double c = std::cos(theta), s = std::sin(theta);
  const auto w = static_cast<long>(width), h = static_cast<long>(height);
  for (long row = 0; row < h; ++row) {
    for (long col = 0; col < w; ++col) {
      const double x = static_cast<double>(col) - cx;
      const double y = static_cast<double>(row) - cy;
      const double sx = c * x - s * y + cx;
      const double sy = s * x + c * y + cy;
      const double fx0 = std::floor(sx), fy0 = std::floor(sy);
      const double fx = sx - fx0, fy = sy - fy0;
      const auto x0 = static_cast<long>(fx0), y0 = static_cast<long>(fy0);
      const std::size_t out = static_cast<std::size_t>(row * w + col);
      const struct {
        long yy, xx;
        double weight;
      } taps[4] = {{y0, x0, (1 - fx) * (1 - fy)},
                   {y0, x0 + 1, fx * (1 - fy)},
                   {y0 + 1, x0, (1 - fx) * fy},
                   {y0 + 1, x0 + 1, fx * fy}};
      for (const auto& t : taps) {
        if (t.weight == 0.0 || t.yy < 0 || t.yy >= h || t.xx < 0 || t.xx >= w) continue;
        tap(out, static_cast<std::size_t>(t.yy * w + t.xx), t.weight);
      }
    }
  }
}

}  // namespace

GroupElement rotation_matrix_bilinear(std::size_t width, std::size_t height, double theta) {
  const std::size_t d = width * height;
  Matrix m(d, d);
  for_each_bilinear_tap(width, height, theta,
                        [&](std::size_t out, std::size_t in, double w) { m(out, in) += w; });
  return {std::move(m), format_label("rot theta=", theta)};
}

void rotate_image_bilinear(std::size_t width, std::size_t height, double theta, std::span<const double> in,
                           std::span<double> out) {
  const std::size_t d = width * height;
  if (in.size() != d || out.size() != d) throw DimensionError("rotate_image_bilinear: image size mismatch");
  std::fill(out.begin(), out.end(), 0.0);
  for_each_bilinear_tap(width, height, theta,
                        [&](std::size_t o, std::size_t i, double w) { out[o] += w * in[i]; });
}

Matrix AnalyticGenerator::lift(std::span<const double> x) const {
  if (x.size() != space_dim) throw DimensionError("lift: point has wrong dimension");
  if (kind == AnalyticKind::Translation) {
    Matrix g = Matrix::identity(space_dim + 1);
    for (std::size_t i = 0; i < space_dim; ++i) g(i, space_dim) = x[i];
    return g;
  }
  // rotation-scaling element mapping x₀ = (1, 0) to x
  return Matrix{{x[0], -x[1]}, {x[1], x[0]}};
}

std::vector<double> AnalyticGenerator::field(std::size_t i, std::span<const double> x) const {
  if (i >= generators.size()) throw DimensionError("field: generator index out of range");
  const Matrix v = matmul(lift(x), matmul(generators[i], origin));
  std::vector<double> out(space_dim);
  for (std::size_t k = 0; k < space_dim; ++k) out[k] = v(k, 0);
  return out;
}

AnalyticGenerator analytic_generator(AnalyticKind kind, std::size_t n) {
  AnalyticGenerator a{kind, 2, {}, Matrix{}};
  switch (kind) {
    case AnalyticKind::Translation: {
      if (n == 0) throw UnsupportedSizeError("T_n needs n >= 1");
      a.space_dim = n;
      for (std::size_t i = 0; i < n; ++i) {
        Matrix l(n + 1, n + 1);
        l(i, n) = 1.0;
        a.generators.push_back(std::move(l));
      }
      a.origin = Matrix(n + 1, 1);
      a.origin(n, 0) = 1.0;
      break;
    }
    case AnalyticKind::Rotation:
      a.generators.push_back(Matrix{{0.0, -1.0}, {1.0, 0.0}});
      a.origin = Matrix{{1.0}, {0.0}};
      break;
    case AnalyticKind::Scaling:
      a.generators.push_back(Matrix::identity(2));
      a.origin = Matrix{{1.0}, {0.0}};
      break;
  }
  return a;
}

EdgeTopology EdgeTopology::from_edges(std::size_t nodes,
                                      std::vector<std::pair<std::size_t, std::size_t>> edges) {
  EdgeTopology t;
  t.nodes = nodes;
  t.incidence = Matrix(nodes, edges.size());
  for (std::size_t a = 0; a < edges.size(); ++a) {
    const auto [tail, head] = edges[a];
    if (tail >= nodes || head >= nodes || tail == head) {
      throw DimensionError("edge " + std::to_string(a) + " is not a valid edge between distinct nodes");
    }
    t.incidence(tail, a) = -1.0;
    t.incidence(head, a) = 1.0;
  }
  t.edges = std::move(edges);
  return t;
}

EdgeTopology EdgeTopology::path(std::size_t nodes) {
  std::vector<std::pair<std::size_t, std::size_t>> e;
  for (std::size_t i = 0; i + 1 < nodes; ++i) e.emplace_back(i, i + 1);
  return from_edges(nodes, std::move(e));
}

EdgeTopology EdgeTopology::ring(std::size_t nodes) {
  if (nodes < 3) throw UnsupportedSizeError("ring needs at least 3 nodes");
  std::vector<std::pair<std::size_t, std::size_t>> e;
  for (std::size_t i = 0; i < nodes; ++i) e.emplace_back(i, (i + 1) % nodes);
  for (std::size_t i = 0; i < nodes; ++i) e.emplace_back(i, (i + nodes - 1) % nodes);
  return from_edges(nodes, std::move(e));
}

Generator assemble_generator_from_edges(const EdgeTopology& topo, std::span<const double> edge_weights) {
  if (edge_weights.size() != topo.edges.size()) {
    throw DimensionError("edge weight vector has length " + std::to_string(edge_weights.size()) +
                         ", topology has " + std::to_string(topo.edges.size()) + " edges");
  }
  Matrix l(topo.nodes, topo.nodes);
  for (std::size_t a = 0; a < topo.edges.size(); ++a) {
    const double w = edge_weights[a];
    if (w == 0.0) continue;
    const std::size_t tail = topo.edges[a].first;
    for (std::size_t node = 0; node < topo.nodes; ++node) l(tail, node) += w * topo.incidence(node, a);
  }
  return Generator::dense(std::move(l), "edge-generator");
}

Matrix lie_bracket(const Matrix& a, const Matrix& b) {
  require_same_shape(a, b, "lie_bracket");
  if (!a.square()) throw DimensionError("lie_bracket of non-square matrices");
  return matmul(a, b) - matmul(b, a);
}

Matrix lie_bracket(const Generator& a, const Generator& b) {
  return lie_bracket(materialize(a), materialize(b));
}

}  // namespace lieconv
