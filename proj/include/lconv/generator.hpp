#pragma once

#include <string>
#include <variant>

#include "lconv/matrix.hpp"

namespace lieconv {

/// Factored generator L = U·V with U (d×r) and V (r×d).
struct LowRank {
  Matrix u;
  Matrix v;
};

/// A Lie-algebra basis element pushed forward onto the grid: a d×d operator
/// acting on feature maps, stored dense or as a low-rank product.
class Generator {
 public:
  Generator() = default;
  static Generator dense(Matrix m, std::string label = {});
  static Generator low_rank(Matrix u, Matrix v, std::string label = {});

  bool is_low_rank() const { return std::holds_alternative<LowRank>(rep_); }
  std::size_t dim() const;
  const std::string& label() const { return label_; }
  void set_label(std::string label) { label_ = std::move(label); }

  const Matrix& dense_matrix() const { return std::get<Matrix>(rep_); }
  Matrix& dense_matrix() { return std::get<Matrix>(rep_); }
  const LowRank& factors() const { return std::get<LowRank>(rep_); }
  LowRank& factors() { return std::get<LowRank>(rep_); }

  /// L·f, using the factors when low rank.
  Matrix apply(const Matrix& f) const;
  /// Lᵀ·f
  Matrix apply_transposed(const Matrix& f) const;

  /// Number of scalar parameters (d² dense, 2·d·r low rank).
  std::size_t parameter_count() const;

 private:
  std::variant<Matrix, LowRank> rep_;
  std::string label_;
};

/// Dense form of a generator; the identity on dense input.
Matrix materialize(const Generator& g);

}  // namespace lieconv
