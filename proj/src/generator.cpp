#include "lconv/generator.hpp"

#include "lconv/error.hpp"

namespace lieconv {

Generator Generator::dense(Matrix m, std::string label) {
  if (!m.square()) throw DimensionError("dense generator must be square, got " + shape_string(m));
  Generator g;
  g.rep_ = std::move(m);
  g.label_ = std::move(label);
  return g;
}

Generator Generator::low_rank(Matrix u, Matrix v, std::string label) {
  if (u.cols() != v.rows() || u.rows() != v.cols()) {
    throw DimensionError("low-rank generator factors " + shape_string(u) + " and " + shape_string(v) +
                         " do not form a square product");
  }
  Generator g;
  g.rep_ = LowRank{std::move(u), std::move(v)};
  g.label_ = std::move(label);
  return g;
}

std::size_t Generator::dim() const {
  return is_low_rank() ? factors().u.rows() : dense_matrix().rows();
}

Matrix Generator::apply(const Matrix& f) const {
  if (is_low_rank()) return matmul(factors().u, matmul(factors().v, f));
  return matmul(dense_matrix(), f);
}

Matrix Generator::apply_transposed(const Matrix& f) const {
  if (is_low_rank()) return matmul_tn(factors().v, matmul_tn(factors().u, f));
  return matmul_tn(dense_matrix(), f);
}

std::size_t Generator::parameter_count() const {
  if (is_low_rank()) return factors().u.size() + factors().v.size();
  return dense_matrix().size();
}

Matrix materialize(const Generator& g) {
  if (g.is_low_rank()) return matmul(g.factors().u, g.factors().v);
  return g.dense_matrix();
}

}  // namespace lieconv
