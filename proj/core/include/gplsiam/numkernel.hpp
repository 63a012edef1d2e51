#pragma once

#include "gplsiam/types.hpp"

namespace gplsiam {

// Upper-triangular L with L^T L = A.
struct CholFactor {
  Matrix L;
  Index dim() const noexcept { return L.rows(); }
};

// M^T diag(w) M, formed as cp(W^{1/2} M) with one triangle computed.
Matrix weighted_crossprod(const Matrix& M, const Vector& w);

// Throws NotPositiveDefinite.
CholFactor cholesky(const Matrix& A);

// Solves L^T b = rhs, then L x = b.
Vector solve_two_triangular(const CholFactor& f, const Vector& rhs);

// B with L^T B = I, so that B^T B = A^{-1}. B is lower triangular.
Matrix inverse_factor(const CholFactor& f);

// B^T B
Matrix crossprod(const Matrix& B);

// tr(X Y) for symmetric X, Y as the sum of the Hadamard product.
double trace_product(const Matrix& X, const Matrix& Y);

}  // namespace gplsiam
