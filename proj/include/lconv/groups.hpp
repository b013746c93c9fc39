#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "lconv/generator.hpp"
#include "lconv/matrix.hpp"

namespace lieconv {

/// Discrete base space. Images are flattened row-major: index = row·width + col,
/// with x = col and y = row measured from the grid midpoint.
struct GridSpec {
  enum class Kind { Line, Image };
  Kind kind = Kind::Line;
  std::size_t width = 0;
  std::size_t height = 1;
  bool periodic = true;

  static GridSpec line(std::size_t width, bool periodic = true);
  static GridSpec image(std::size_t width, std::size_t height, bool periodic = false);
  std::size_t d() const { return width * height; }
};

struct GroupElement {
  Matrix matrix;
  std::string label;
};

/// Shannon-Whittaker continuous shift of a periodic length-d signal:
/// g(z)[r][c] = (1/d) Σ_p w_p cos(2πp(z + c − r)/d), so (g(z)f)_r = f(r − z).
///
/// Odd d sums p over ±(d−1)/2 with unit weights and forms an exact
/// one-parameter group. Even d sums p over ±d/2 with the two Nyquist endpoints
/// at weight ½; this keeps g(0) = I and integer shifts exact, but the Nyquist
/// mode then evolves as cos(πz), so g(w)g(z) = g(w+z) only holds when w or z
/// is an integer. A real one-parameter group through the odd cyclic
/// permutation does not exist for even d.
GroupElement sw_shift_matrix(std::size_t d, double z);

/// ∂g/∂z at z = 0: the circulant L[r][c] = −Σ_p w_p (2πp/d²) sin(2πp(c − r)/d).
/// Skew-symmetric; acting on a sampled smooth periodic f it approximates −f′.
Generator sw_shift_generator(std::size_t d);

/// Rotation generator x∂_y − y∂_x on a width×height image, with ∂ taken from
/// the per-axis Shannon-Whittaker derivative and coordinates centered on the
/// grid midpoint.
Generator sw_rotation_generator(std::size_t width, std::size_t height);

/// Explicit (wh)×(wh) bilinear resampling matrix for a rotation by theta
/// about the grid center, zero outside. Output pixel (x, y) samples the input
/// at (x cosθ − y sinθ, x sinθ + y cosθ), so R(θ) ≈ I + θ·L_rot.
GroupElement rotation_matrix_bilinear(std::size_t width, std::size_t height, double theta);
/// Same operator applied to one flattened image without forming the matrix.
void rotate_image_bilinear(std::size_t width, std::size_t height, double theta, std::span<const double> in,
                           std::span<double> out);

enum class AnalyticKind { Translation, Rotation, Scaling };

/// Closed-form matrix Lie algebra with its lift x ↦ g(x) and origin x₀.
struct AnalyticGenerator {
  AnalyticKind kind;
  std::size_t space_dim;
  std::vector<Matrix> generators;
  Matrix origin;  // column vector x₀ in the representation space

  /// Group element g with g·x₀ = x (homogeneous coordinates for T_n).
  Matrix lift(std::span<const double> x) const;
  /// Components of the vector field L̂_i at x: [g(x) L_i x₀] in base-space coordinates.
  std::vector<double> field(std::size_t i, std::span<const double> x) const;
};

/// Translation (n generators), so(2) or scaling (2D base space).
AnalyticGenerator analytic_generator(AnalyticKind kind, std::size_t n = 2);

/// Directed edge list with its |S|×|E| incidence matrix (−1 at tail, +1 at head).
struct EdgeTopology {
  std::size_t nodes = 0;
  std::vector<std::pair<std::size_t, std::size_t>> edges;  // (tail, head)
  Matrix incidence;

  static EdgeTopology from_edges(std::size_t nodes,
                                 std::vector<std::pair<std::size_t, std::size_t>> edges);
  /// Forward edges i → i+1 on an open path.
  static EdgeTopology path(std::size_t nodes);
  /// Edges i → i+1 followed by i → i−1 on a periodic ring (2·nodes edges).
  static EdgeTopology ring(std::size_t nodes);
};

/// L̂ = Σ_α w_α e_tail(α) B_αᵀ: each edge adds +w at (tail, head) and −w at
/// (tail, tail), so rows sum to zero and constants are annihilated.
Generator assemble_generator_from_edges(const EdgeTopology& topo, std::span<const double> edge_weights);

/// [a, b] = ab − ba on the dense forms.
Matrix lie_bracket(const Generator& a, const Generator& b);
Matrix lie_bracket(const Matrix& a, const Matrix& b);

/// Centered coordinate of each flattened pixel.
std::vector<double> grid_x_coordinates(std::size_t width, std::size_t height);
std::vector<double> grid_y_coordinates(std::size_t width, std::size_t height);

}  // namespace lieconv
