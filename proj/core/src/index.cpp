#include "gplsiam/index.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace gplsiam {

Vector expand_alpha(const Vector& alpha_tilde) {
  const Index s = alpha_tilde.size();
  Vector a(s + 1);
  a[0] = 1.0;
  a.tail(s) = alpha_tilde;
  // hypotNorm avoids overflow for huge alpha~.
  return a / a.stableNorm();
}

Matrix alpha_jacobian(const Vector& alpha_tilde) {
  const Index s = alpha_tilde.size();
  const double c = 1.0 + alpha_tilde.squaredNorm();
  const double r = std::sqrt(c);
  Vector v(s + 1);
  v[0] = 1.0;
  v.tail(s) = alpha_tilde;
  // d/da~_k of v / r = e_{k+1}/r - v a~_k / r^3
  Matrix J = -(v * alpha_tilde.transpose()) / (c * r);
  for (Index k = 0; k < s; ++k) J(k + 1, k) += 1.0 / r;
  return J;
}

Vector index_covariate(const Matrix& Z, const Vector& alpha) {
  if (Z.cols() != alpha.size()) {
    throw std::invalid_argument("index_covariate: Z has " + std::to_string(Z.cols()) +
                                " columns but alpha has length " +
                                std::to_string(alpha.size()));
  }
  return Z * alpha;
}

Matrix term_model_matrix(const Vector& fprime_raw, const Matrix& Z, const Matrix& J) {
  if (fprime_raw.size() != Z.rows() || Z.cols() != J.rows()) {
    throw std::invalid_argument("term_model_matrix: dimension mismatch");
  }
  Matrix T = fprime_raw.asDiagonal() * (Z * J);
  if (T.rows() > 0) T.rowwise() -= T.colwise().mean();
  return T;
}

}  // namespace gplsiam
