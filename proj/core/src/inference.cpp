#include "gplsiam/inference.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "gplsiam/basis.hpp"
#include "gplsiam/numkernel.hpp"

namespace gplsiam {

namespace {

constexpr double kZ975 = 1.96;

}  // namespace

EdfResult effective_df(const Matrix& B, const Matrix& crossprod, const CoefficientLayout& layout) {
  if (B.cols() != crossprod.rows() || B.cols() != layout.dim()) {
    throw std::invalid_argument("effective_df: dimension mismatch");
  }
  EdfResult r;
  r.per_coef = gplsiam::crossprod(B).cwiseProduct(crossprod).rowwise().sum();
  r.total = r.per_coef.sum();
  r.per_block.resize(1 + 2 * layout.num_terms());
  r.per_block[0] = r.per_coef.head(layout.p()).sum();
  for (Index j = 0; j < layout.num_terms(); ++j) {
    const auto& s = layout.term(j);
    r.per_block[1 + 2 * j] = r.per_coef.segment(s.gamma_offset, s.q).sum();
    r.per_block[2 + 2 * j] = r.per_coef.segment(s.alpha_offset, s.s).sum();
  }
  return r;
}

InferenceReport coef_table(const FittedModel& model) {
  const auto& lay = model.layout;
  const Vector var = model.B.colwise().squaredNorm().transpose() / model.phi;
  InferenceReport rep;
  auto row = [&](std::string name, Index k) {
    CoefRow r;
    r.name = std::move(name);
    r.estimate = model.psi[k];
    r.se = std::sqrt(var[k]);
    r.z = r.estimate / r.se;
    r.p = std::erfc(std::abs(r.z) / std::sqrt(2.0));
    rep.coefficients.push_back(std::move(r));
  };
  for (Index k = 0; k < lay.p(); ++k) {
    const auto& names = model.spec.linear_names;
    row(static_cast<std::size_t>(k) < names.size() ? names[static_cast<std::size_t>(k)]
                                                    : "beta" + std::to_string(k + 1),
        k);
  }
  for (Index j = 0; j < lay.num_terms(); ++j) {
    const auto& s = lay.term(j);
    const auto& ft = model.terms[static_cast<std::size_t>(j)];
    for (Index k = 0; k < s.s; ++k) {
      row(ft.name + ":alpha~" + std::to_string(k + 1), s.alpha_offset + k);
    }
    TermRow t;
    t.name = ft.name;
    t.edf = model.edf_gamma[j];
    t.edf_alpha = model.edf_alpha[j];
    t.q = ft.q;
    t.lambda = model.lambda[j];
    t.alpha = ft.alpha;
    rep.terms.push_back(std::move(t));
  }
  return rep;
}

Vector band_half_width(const Matrix& D, const Matrix& B, Index offset, double phi) {
  const Matrix G = D * B.middleCols(offset, D.cols()).transpose();
  return kZ975 * (G.rowwise().squaredNorm() / phi).array().sqrt().matrix();
}

Band observed_band(const FittedModel& model, const Problem& problem, Index term) {
  if (term < 0 || term >= model.layout.num_terms()) throw std::out_of_range("observed_band: bad term");
  const FitState st = model_state(model, problem);
  const TermState& ts = st.terms[static_cast<std::size_t>(term)];
  const auto& slots = model.layout.term(term);
  Matrix D(ts.basis.rows(), slots.q + slots.s);
  D << ts.basis, ts.T;
  const Vector hw = band_half_width(D, model.B, slots.gamma_offset, model.phi);

  std::vector<Index> order(static_cast<std::size_t>(ts.u.size()));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return ts.u[a] < ts.u[b]; });
  Band band;
  band.u.resize(ts.u.size());
  band.fhat.resize(ts.u.size());
  band.half_width.resize(ts.u.size());
  for (std::size_t r = 0; r < order.size(); ++r) {
    const auto ri = static_cast<Index>(r);
    band.u[ri] = ts.u[order[r]];
    band.fhat[ri] = ts.f[order[r]];
    band.half_width[ri] = hw[order[r]];
  }
  return band;
}

Band confidence_band(const FittedModel& model, const Problem& problem, Index term,
                     const Vector& grid) {
  const Band obs = observed_band(model, problem, term);
  const auto& ft = model.terms.at(static_cast<std::size_t>(term));
  const auto& slots = model.layout.term(term);
  const Matrix N = centered_basis_at(ft.knots, ft.col_means, grid, SpanPolicy::strict);
  Band band;
  band.u = grid;
  band.fhat = N * model.psi.segment(slots.gamma_offset, slots.q);
  band.half_width.resize(grid.size());
  const Index m = obs.u.size();
  for (Index i = 0; i < grid.size(); ++i) {
    const double x = grid[i];
    const auto* first = obs.u.data();
    const auto* it = std::lower_bound(first, first + m, x);
    const Index k = it - first;
    if (k == 0) {
      band.half_width[i] = obs.half_width[0];
    } else if (k == m) {
      band.half_width[i] = obs.half_width[m - 1];
    } else {
      const double x0 = obs.u[k - 1], x1 = obs.u[k];
      const double t = x1 > x0 ? (x - x0) / (x1 - x0) : 0.0;
      band.half_width[i] = std::lerp(obs.half_width[k - 1], obs.half_width[k], t);
    }
  }
  return band;
}

}  // namespace gplsiam
