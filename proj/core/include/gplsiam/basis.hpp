#pragma once

#include <vector>

#include "gplsiam/types.hpp"

namespace gplsiam {

// Equally spaced knot sequence for a B-spline basis of the given degree.
// The inner span [lower(), upper()] is where the basis forms a partition of
// unity; `order()` knots on each side sit outside or on its boundary.
struct KnotVector {
  std::vector<double> knots;
  int degree = 3;

  int order() const noexcept { return degree + 1; }
  int size() const noexcept { return static_cast<int>(knots.size()); }
  // Number of raw basis functions (q + 1).
  int basis_dim() const noexcept { return size() - order(); }
  double lower() const { return knots[static_cast<std::size_t>(degree)]; }
  double upper() const { return knots[static_cast<std::size_t>(size() - order())]; }
  double spacing() const { return knots[1] - knots[0]; }
  bool contains(double u) const { return u >= lower() && u <= upper(); }
};

// Builds m = q + 1 + order knots whose inner span is
// [min(u) - eps*range, max(u) + eps*range], equally spaced throughout.
// Throws DegenerateIndex when u has zero range and std::invalid_argument for
// q < order or eps < 0.
KnotVector make_knots(const Vector& u, int q, int order, double eps);

enum class SpanPolicy {
  strict,  // throw OutOfKnotSpan
  clamp,   // move the point onto the nearest inner boundary
};

// n x (q+1) B-spline basis via the Cox-de Boor recursion. Intervals are
// half-open [t_i, t_{i+1}); the right inner boundary belongs to the last one.
Matrix eval_basis(const KnotVector& knots, const Vector& u,
                  SpanPolicy policy = SpanPolicy::strict, Index* clamped = nullptr);

// n x (q+1) first derivative of every basis function, keeping the same
// coefficient vector as the original curve.
Matrix eval_deriv_basis(const KnotVector& knots, const Vector& u,
                        SpanPolicy policy = SpanPolicy::strict, Index* clamped = nullptr);

// Sum-to-zero reparameterization: column-center and drop the last column.
struct CenteredBasis {
  Matrix basis;           // n x q
  Matrix deriv_basis;     // n x q
  Vector col_means;       // length q+1, raw-basis column means
  Vector deriv_col_means; // length q+1, raw-derivative column means
};

CenteredBasis center_and_drop(const Matrix& raw_basis, const Matrix& raw_deriv);

// Everything needed to evaluate one smooth term on a sample.
struct BasisBlock {
  KnotVector knots;
  int raw_dim = 0;       // q + 1
  int centered_dim = 0;  // q
  Vector col_means;
  Vector deriv_col_means;
  Matrix basis;
  Matrix deriv_basis;
};

BasisBlock build_basis_block(KnotVector knots, const Vector& u);

// Centered basis at new points using stored column means (prediction path).
Matrix centered_basis_at(const KnotVector& knots, const Vector& col_means, const Vector& u,
                         SpanPolicy policy, Index* clamped = nullptr);

}  // namespace gplsiam
