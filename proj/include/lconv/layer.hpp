#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "lconv/generator.hpp"
#include "lconv/groups.hpp"
#include "lconv/matrix.hpp"
#include "lconv/numerics.hpp"

namespace lieconv {

struct TrainableFlags {
  bool w0 = true;
  bool eps = true;
  bool generators = true;
};

/// Channel-wise affine + tanh applied after the equivariant map; acts only on
/// feature indices so equivariance is preserved.
struct ChannelHead {
  std::vector<double> scale;
  std::vector<double> bias;
};

/// Lie-algebra convolution
///
///   Q[f] = f·W0ᵀ + Σ_i (L̂_i f)·ε̄_iᵀ·W0ᵀ
///
/// for a feature map f (d×m_in). W0 is m_out×m_in, each ε̄_i is m_in×m_in
/// (or a single scalar when `scalar_eps` is set), and each L̂_i is a d×d
/// generator. The combined weights W0·ε̄_i are never stored.
struct LConvLayer {
  Matrix w0;
  std::vector<Matrix> eps;
  std::vector<Generator> generators;
  bool scalar_eps = false;
  TrainableFlags trainable;
  std::optional<ChannelHead> head;
  std::uint64_t init_seed = 0;

  std::size_t n_generators() const { return generators.size(); }
  std::size_t m_in() const { return w0.cols(); }
  std::size_t m_out() const { return w0.rows(); }
  std::size_t d() const { return generators.empty() ? 0 : generators.front().dim(); }

  /// ε̄_i as an m_in×m_in matrix (expands the scalar mode).
  Matrix eps_matrix(std::size_t i) const;
  /// Throws DimensionError naming the inconsistent axis.
  void validate() const;
};

struct LayerInit {
  std::size_t d = 0;
  std::size_t m_in = 1;
  std::size_t m_out = 1;
  std::size_t n_generators = 1;
  bool scalar_eps = false;
  std::size_t low_rank = 0;  // 0 = dense generators
  bool identity_w0 = false;
};

/// W0 ~ U(±1/√m_in), ε̄ ~ U(±0.1/n_L), generators ~ U(±1/√d) (low-rank
/// factors ~ U(±1/√(d·r))^½ each so the product has the same scale order).
LConvLayer make_layer(const LayerInit& init, SeededRng& rng);

struct FeatureMap {
  GridSpec grid;
  Matrix values;  // d×m
};

/// Intermediate values kept for the backward pass. A batch of B samples is
/// laid out side by side: input is d×(B·m_in).
struct ForwardCache {
  std::size_t batch = 1;
  Matrix input;
  std::vector<Matrix> transported;  // L̂_i·input
  Matrix mixed;                     // P = input + Σ_i (L̂_i input)·ε̄_iᵀ (per sample)
  Matrix linear_out;                // P·W0ᵀ
  Matrix output;                    // after the optional head
};

struct LayerGradients {
  Matrix d_w0;
  std::vector<Matrix> d_eps;
  std::vector<Generator> d_generators;  // same representation as the layer's
  std::optional<ChannelHead> d_head;
  Matrix d_input;

  /// Zero gradients shaped like `layer`'s parameters and an input of `input_cols`.
  static LayerGradients zeros_like(const LConvLayer& layer, std::size_t input_cols);
  LayerGradients& operator+=(const LayerGradients& other);
};

Matrix lconv_forward(const Matrix& f, const LConvLayer& layer);
FeatureMap lconv_forward(const FeatureMap& f, const LConvLayer& layer);
/// Generator term only, Σ_i (L̂_i f)·ε̄_iᵀ·W0ᵀ (the W0 residual path dropped).
Matrix lconv_forward_no_residual(const Matrix& f, const LConvLayer& layer);

/// Batched forward over B samples stored as d×(B·m_in).
ForwardCache lconv_forward_cached(const Matrix& f, const LConvLayer& layer, std::size_t batch = 1);

/// Reverse-mode gradients of <upstream, Q[f]> with respect to every parameter
/// and the input.
LayerGradients lconv_backward(const ForwardCache& cache, const LConvLayer& layer, const Matrix& upstream);
LayerGradients lconv_backward(const Matrix& f, const LConvLayer& layer, const Matrix& upstream);

/// h_t = Q[h_{t−1}], h_0 = f. Requires m_in == m_out.
Matrix recursive_apply(const Matrix& f, const LConvLayer& layer, unsigned t);
std::vector<ForwardCache> recursive_forward(const Matrix& f, const LConvLayer& layer, unsigned t,
                                            std::size_t batch = 1);
/// Gradients summed over all t applications of the shared layer.
LayerGradients recursive_backward(const std::vector<ForwardCache>& caches, const LConvLayer& layer,
                                  const Matrix& upstream);

/// w·f = w⁻ᵀ f
Matrix act_on_features(const Matrix& w, const Matrix& f);

/// ‖Q[w·f] − w·Q[f]‖ / max(‖Q[f]‖, 1e-300)
double equivariance_residual(const Matrix& f, const GroupElement& w, const LConvLayer& layer);

/// D^{-1/2} A D^{-1/2}; isolated nodes get zero rows and columns.
Matrix normalized_adjacency(const Matrix& adjacency);

/// ‖lconv_no_residual(f) − L̂·f·Wᵀ‖ for a single-generator layer with
/// ε̄ = I and W0 = W.
double gcn_reduction_check(const Matrix& f, const Matrix& propagation, const Matrix& w);

/// Parameter vector views used by optimizers and gradient checks. The order
/// is W0, ε̄_1..n, generators (U then V for low rank), head scale, head bias.
std::vector<double> flatten_parameters(const LConvLayer& layer);
void assign_parameters(LConvLayer& layer, std::span<const double> values);
std::vector<double> flatten_gradients(const LayerGradients& grads);

/// Checkpoint directory: W0.mat, eps_i.mat, gen_i.mat or gen_i_U.mat/gen_i_V.mat,
/// optional head_scale.mat/head_bias.mat and manifest.json.
void save_layer(const std::filesystem::path& dir, const LConvLayer& layer);
LConvLayer load_layer(const std::filesystem::path& dir);

/// Writes <stem>.mat plus a <stem>.json sidecar with the label and grid.
void save_generator(const std::filesystem::path& stem, const Generator& g, const GridSpec& grid);
void save_group_element(const std::filesystem::path& stem, const GroupElement& g, const GridSpec& grid);

}  // namespace lieconv
