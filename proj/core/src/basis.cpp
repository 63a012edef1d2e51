#include "gplsiam/basis.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>

#include "gplsiam/errors.hpp"

namespace gplsiam {

KnotVector make_knots(const Vector& u, int q, int order, double eps) {
  if (order < 1) throw std::invalid_argument("make_knots: order must be >= 1");
  if (q < order) throw std::invalid_argument("make_knots: q must be >= order");
  if (!(eps >= 0.0)) throw std::invalid_argument("make_knots: eps must be >= 0");
  if (u.size() == 0) throw DegenerateIndex("make_knots: empty index covariate");

  const double lo = u.minCoeff();
  const double hi = u.maxCoeff();
  const double range = hi - lo;
  if (!(range > 0.0) || !std::isfinite(range)) {
    throw DegenerateIndex("make_knots: index covariate is constant (unidentifiable smooth)");
  }

  const double left = lo - range * eps;
  const double right = hi + range * eps;
  const int m = q + 1 + order;
  const int inner_intervals = q + 2 - order;  // m - 2*order + 1

  KnotVector kv;
  kv.degree = order - 1;
  kv.knots.resize(static_cast<std::size_t>(m));
  // std::lerp is exact at t = 0 and t = 1, so the inner boundaries land
  // exactly on `left` and `right`.
  for (int i = 0; i < m; ++i) {
    const double t = static_cast<double>(i - kv.degree) / inner_intervals;
    kv.knots[static_cast<std::size_t>(i)] = std::lerp(left, right, t);
  }
  return kv;
}

namespace {

constexpr int kMaxOrder = 16;

// Interval k with knots[k] <= x < knots[k+1], restricted to the inner span.
int locate(const KnotVector& kv, double x) {
  const int first = kv.degree;
  const int last = kv.size() - kv.order() - 1;
  const double h = kv.spacing();
  int k = first + static_cast<int>(std::floor((x - kv.lower()) / h));
  k = std::clamp(k, first, last);
  const auto& t = kv.knots;
  while (k > first && x < t[static_cast<std::size_t>(k)]) --k;
  while (k < last && x >= t[static_cast<std::size_t>(k + 1)]) ++k;
  return k;
}

// Nonzero basis functions of degree p on interval k: out[r] = N_{k-p+r}^p(x).
void basis_funs(const std::vector<double>& t, int k, double x, int p, double* out) {
  std::array<double, kMaxOrder> left{};
  std::array<double, kMaxOrder> right{};
  out[0] = 1.0;
  for (int j = 1; j <= p; ++j) {
    left[static_cast<std::size_t>(j)] = x - t[static_cast<std::size_t>(k + 1 - j)];
    right[static_cast<std::size_t>(j)] = t[static_cast<std::size_t>(k + j)] - x;
    double saved = 0.0;
    for (int r = 0; r < j; ++r) {
      const double denom = right[static_cast<std::size_t>(r + 1)] + left[static_cast<std::size_t>(j - r)];
      const double temp = out[r] / denom;
      out[r] = saved + right[static_cast<std::size_t>(r + 1)] * temp;
      saved = left[static_cast<std::size_t>(j - r)] * temp;
    }
    out[j] = saved;
  }
}

double admit(const KnotVector& kv, double x, Index i, SpanPolicy policy, Index* clamped) {
  if (kv.contains(x)) return x;
  if (policy == SpanPolicy::strict || !std::isfinite(x)) {
    throw OutOfKnotSpan(i, x, kv.lower(), kv.upper());
  }
  if (clamped) ++*clamped;
  return std::clamp(x, kv.lower(), kv.upper());
}

void check_order(const KnotVector& kv) {
  if (kv.order() > kMaxOrder) throw std::invalid_argument("B-spline order too large");
  if (kv.size() <= 2 * kv.order()) throw std::invalid_argument("knot vector needs m > 2d knots");
}

}  // namespace

Matrix eval_basis(const KnotVector& kv, const Vector& u, SpanPolicy policy, Index* clamped) {
  check_order(kv);
  const int p = kv.degree;
  Matrix out = Matrix::Zero(u.size(), kv.basis_dim());
  std::array<double, kMaxOrder> vals{};
  for (Index i = 0; i < u.size(); ++i) {
    const double x = admit(kv, u[i], i, policy, clamped);
    const int k = locate(kv, x);
    basis_funs(kv.knots, k, x, p, vals.data());
    for (int r = 0; r <= p; ++r) out(i, k - p + r) = vals[static_cast<std::size_t>(r)];
  }
  return out;
}

Matrix eval_deriv_basis(const KnotVector& kv, const Vector& u, SpanPolicy policy,
                        Index* clamped) {
  check_order(kv);
  const int p = kv.degree;
  Matrix out = Matrix::Zero(u.size(), kv.basis_dim());
  if (p == 0) {
    for (Index i = 0; i < u.size(); ++i) admit(kv, u[i], i, policy, clamped);
    return out;
  }
  const auto& t = kv.knots;
  std::array<double, kMaxOrder> lower{};
  for (Index i = 0; i < u.size(); ++i) {
    const double x = admit(kv, u[i], i, policy, clamped);
    const int k = locate(kv, x);
    // lower[r] = N_{k-p+1+r}^{p-1}(x), r = 0..p-1
    basis_funs(t, k, x, p - 1, lower.data());
    auto low = [&](int idx) -> double {
      const int r = idx - (k - p + 1);
      return (r >= 0 && r < p) ? lower[static_cast<std::size_t>(r)] : 0.0;
    };
    for (int b = k - p; b <= k; ++b) {
      const auto bi = static_cast<std::size_t>(b);
      const double a = low(b) / (t[bi + static_cast<std::size_t>(p)] - t[bi]);
      const double c = low(b + 1) / (t[bi + static_cast<std::size_t>(p) + 1] - t[bi + 1]);
      out(i, b) = p * (a - c);
    }
  }
  return out;
}

CenteredBasis center_and_drop(const Matrix& raw_basis, const Matrix& raw_deriv) {
  if (raw_basis.rows() != raw_deriv.rows() || raw_basis.cols() != raw_deriv.cols()) {
    throw std::invalid_argument("center_and_drop: basis and derivative shapes differ");
  }
  if (raw_basis.cols() < 2) throw std::invalid_argument("center_and_drop: need >= 2 columns");
  const Index q = raw_basis.cols() - 1;
  CenteredBasis cb;
  cb.col_means = raw_basis.colwise().mean().transpose();
  cb.deriv_col_means = raw_deriv.colwise().mean().transpose();
  cb.basis = raw_basis.leftCols(q).rowwise() - cb.col_means.head(q).transpose();
  cb.deriv_basis = raw_deriv.leftCols(q).rowwise() - cb.deriv_col_means.head(q).transpose();
  return cb;
}

BasisBlock build_basis_block(KnotVector knots, const Vector& u) {
  const Matrix raw = eval_basis(knots, u);
  const Matrix raw_d = eval_deriv_basis(knots, u);
  CenteredBasis cb = center_and_drop(raw, raw_d);
  BasisBlock block;
  block.raw_dim = knots.basis_dim();
  block.centered_dim = block.raw_dim - 1;
  block.knots = std::move(knots);
  block.col_means = std::move(cb.col_means);
  block.deriv_col_means = std::move(cb.deriv_col_means);
  block.basis = std::move(cb.basis);
  block.deriv_basis = std::move(cb.deriv_basis);
  return block;
}

Matrix centered_basis_at(const KnotVector& knots, const Vector& col_means, const Vector& u,
                         SpanPolicy policy, Index* clamped) {
  const Matrix raw = eval_basis(knots, u, policy, clamped);
  const Index q = raw.cols() - 1;
  return raw.leftCols(q).rowwise() - col_means.head(q).transpose();
}

}  // namespace gplsiam
