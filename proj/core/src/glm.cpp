#include "gplsiam/glm.hpp"

#include <cmath>
#include <stdexcept>

#include "gplsiam/numkernel.hpp"

namespace gplsiam {

namespace {

double start_mu(double y, const Family& family) {
  switch (family.kind()) {
    case FamilyKind::poisson: return y + 0.1;
    case FamilyKind::bernoulli: return (y + 0.5) / 2.0;
    case FamilyKind::gamma: return y;
    case FamilyKind::gaussian:
      return family.link() == LinkKind::identity ? y : std::max(std::abs(y), 0.1);
  }
  return y;
}

double objective(const Vector& y, const Vector& mu, const Vector& coef, const Matrix& S,
                 const Family& family) {
  double l = loglik(y, mu, 1.0, family);
  if (S.size() > 0) l -= 0.5 * coef.dot(S * coef);
  return l;
}

}  // namespace

IrlsResult penalized_irls(const Matrix& M, const Vector& y, const Vector& offset,
                          const Family& family, const Matrix& S,
                          const std::optional<Vector>& start, const IrlsOptions& opts) {
  const Index n = M.rows();
  const Index d = M.cols();
  if (y.size() != n || offset.size() != n) throw std::invalid_argument("penalized_irls: size mismatch");
  if (S.size() > 0 && (S.rows() != d || S.cols() != d)) {
    throw std::invalid_argument("penalized_irls: penalty has wrong dimension");
  }

  IrlsResult res;
  Vector eta(n);
  if (start) {
    res.coef = *start;
    eta = M * res.coef + offset;
    res.mu = family.mean(eta);
  } else {
    res.coef = Vector::Zero(d);
    res.mu.resize(n);
    for (Index i = 0; i < n; ++i) {
      double m = start_mu(y[i], family);
      family.clamp_mu(m);
      res.mu[i] = m;
      eta[i] = family.linkfun(m);
    }
  }

  double obj = -INFINITY;
  for (int it = 1; it <= opts.max_iter; ++it) {
    res.iterations = it;
    const auto wv = weights_and_variance(res.mu, family);
    const Vector z = working_response(eta - offset, y, res.mu, family);
    Matrix A = weighted_crossprod(M, wv.w);
    if (S.size() > 0) A += S;
    const Vector rhs = M.transpose() * (wv.w.cwiseProduct(z));
    Vector next = solve_two_triangular(cholesky(A), rhs);

    // Step halving keeps the iteration from running off on bad starts.
    Vector next_mu;
    double next_obj = -INFINITY;
    for (int half = 0; half < 30; ++half) {
      eta = M * next + offset;
      next_mu = family.mean(eta);
      next_obj = objective(y, next_mu, next, S, family);
      if (std::isfinite(next_obj) && !(next_obj < obj - 1e-12 * std::abs(obj))) break;
      next = 0.5 * (next + res.coef);
    }
    const double change = std::abs(next_obj - obj) / (std::abs(next_obj) + 0.1);
    res.coef = next;
    res.mu = next_mu;
    obj = next_obj;
    if (change < opts.tol) {
      res.converged = true;
      break;
    }
  }
  return res;
}

}  // namespace gplsiam
