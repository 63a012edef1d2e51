#include "gplsiam/numkernel.hpp"

#include <stdexcept>

#include "gplsiam/errors.hpp"

namespace gplsiam {

Matrix weighted_crossprod(const Matrix& M, const Vector& w) {
  if (M.rows() != w.size()) throw std::invalid_argument("weighted_crossprod: size mismatch");
  if ((w.array() < 0.0).any()) throw std::invalid_argument("weighted_crossprod: negative weight");
  const Matrix Mt = w.array().sqrt().matrix().asDiagonal() * M;
  Matrix out = Matrix::Zero(M.cols(), M.cols());
  out.selfadjointView<Eigen::Lower>().rankUpdate(Mt.transpose());
  out.triangularView<Eigen::StrictlyUpper>() = out.transpose();
  return out;
}

CholFactor cholesky(const Matrix& A) {
  if (A.rows() != A.cols()) throw std::invalid_argument("cholesky: matrix not square");
  Eigen::LLT<Matrix> llt(A);
  if (llt.info() != Eigen::Success) {
    throw NotPositiveDefinite("cholesky: matrix is not positive definite");
  }
  CholFactor f{llt.matrixU()};
  if ((f.L.diagonal().array() <= 0.0).any() || !f.L.allFinite()) {
    throw NotPositiveDefinite("cholesky: non-positive pivot");
  }
  return f;
}

Vector solve_two_triangular(const CholFactor& f, const Vector& rhs) {
  if (rhs.size() != f.dim()) throw std::invalid_argument("solve_two_triangular: size mismatch");
  const Vector b = f.L.transpose().triangularView<Eigen::Lower>().solve(rhs);
  return f.L.triangularView<Eigen::Upper>().solve(b);
}

Matrix inverse_factor(const CholFactor& f) {
  Matrix B = Matrix::Identity(f.dim(), f.dim());
  f.L.transpose().triangularView<Eigen::Lower>().solveInPlace(B);
  return B;
}

Matrix crossprod(const Matrix& B) {
  Matrix out = Matrix::Zero(B.cols(), B.cols());
  out.selfadjointView<Eigen::Lower>().rankUpdate(B.transpose());
  out.triangularView<Eigen::StrictlyUpper>() = out.transpose();
  return out;
}

double trace_product(const Matrix& X, const Matrix& Y) {
  return X.cwiseProduct(Y.transpose()).sum();
}

}  // namespace gplsiam
