#pragma once

#include "gplsiam/types.hpp"

namespace gplsiam {

// alpha = (1, alpha~) / sqrt(1 + |alpha~|^2): unit norm with alpha_1 > 0.
Vector expand_alpha(const Vector& alpha_tilde);

// (s+1) x s Jacobian of expand_alpha.
Matrix alpha_jacobian(const Vector& alpha_tilde);

// u = Z alpha.
Vector index_covariate(const Matrix& Z, const Vector& alpha);

// Single-index term model matrix d eta / d alpha~ with knots held fixed.
// fprime_raw is f'(u) of the uncentered curve (deriv basis including the
// dropped column's mean). Because the smooth is centered over the sample,
// its derivative carries the column mean of diag(f') Z J as well:
//   T~ = diag(f') Z J - 1 mean(diag(f') Z J)
Matrix term_model_matrix(const Vector& fprime_raw, const Matrix& Z, const Matrix& J);

}  // namespace gplsiam
