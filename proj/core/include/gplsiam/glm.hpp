#pragma once

#include <optional>

#include "gplsiam/family.hpp"
#include "gplsiam/types.hpp"

namespace gplsiam {

struct IrlsOptions {
  int max_iter = 50;
  double tol = 1e-10;  // relative change of the penalized log-likelihood
};

struct IrlsResult {
  Vector coef;
  Vector mu;
  int iterations = 0;
  bool converged = false;
};

// Penalized IRLS for eta = M coef + offset with penalty 0.5 coef' S coef.
// S may be empty (plain GLM). Starts from the family's usual mu(y) unless
// `start` is given.
IrlsResult penalized_irls(const Matrix& M, const Vector& y, const Vector& offset,
                          const Family& family, const Matrix& S,
                          const std::optional<Vector>& start = std::nullopt,
                          const IrlsOptions& opts = {});

inline IrlsResult glm_irls(const Matrix& X, const Vector& y, const Vector& offset,
                           const Family& family, const IrlsOptions& opts = {}) {
  return penalized_irls(X, y, offset, family, Matrix(), std::nullopt, opts);
}

}  // namespace gplsiam
