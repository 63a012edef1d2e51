#include "gplsiam/fit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>

#include "gplsiam/errors.hpp"
#include "gplsiam/family.hpp"
#include "gplsiam/glm.hpp"
#include "gplsiam/index.hpp"

namespace gplsiam {

namespace {

constexpr int kStartIrlsIter = 25;

Vector gamma_of(const Vector& psi, const TermSlots& slots) {
  return psi.segment(slots.gamma_offset, slots.q);
}

}  // namespace

void apply_psi(const Problem& pb, FitState& st, const Vector& psi, KnotPolicy policy) {
  const auto& lay = pb.layout();
  const auto& terms = pb.terms();
  if (psi.size() != lay.dim()) throw std::invalid_argument("apply_psi: psi has wrong length");
  if (policy == KnotPolicy::hold && st.terms.size() != terms.size()) {
    throw std::logic_error("apply_psi: holding knots requires an initialized state");
  }
  st.terms.resize(terms.size());
  st.psi = psi;

  const Index n = pb.n();
  const Index p = pb.p();
  st.eta = pb.X() * psi.head(p) + pb.offset();
  st.M.setZero(n, lay.dim());
  st.M.leftCols(p) = pb.X();

  for (std::size_t j = 0; j < terms.size(); ++j) {
    const auto& t = terms[j];
    const auto& slots = lay.term(static_cast<Index>(j));
    TermState& ts = st.terms[j];
    const Vector gamma = gamma_of(psi, slots);
    ts.alpha_tilde = psi.segment(slots.alpha_offset, slots.s);
    ts.alpha = expand_alpha(ts.alpha_tilde);
    ts.u = index_covariate(t.Z, ts.alpha);
    if (policy == KnotPolicy::update) {
      ts.knots = make_knots(ts.u, t.q, t.order, pb.config().eps_knot);
    }
    const Matrix raw = eval_basis(ts.knots, ts.u);
    const Matrix raw_d = eval_deriv_basis(ts.knots, ts.u);
    CenteredBasis cb = center_and_drop(raw, raw_d);
    ts.basis = std::move(cb.basis);
    ts.deriv_basis = std::move(cb.deriv_basis);
    ts.col_means = std::move(cb.col_means);
    ts.deriv_col_means = std::move(cb.deriv_col_means);
    ts.f = ts.basis * gamma;
    // the dropped column carries a zero coefficient
    ts.fprime = raw_d.leftCols(t.q) * gamma;
    if (slots.s > 0) {
      ts.J = alpha_jacobian(ts.alpha_tilde);
      ts.T = term_model_matrix(ts.fprime, t.Z, ts.J);
    } else {
      ts.J.resize(1, 0);
      ts.T.resize(ts.u.size(), 0);
    }
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
      const Index row = t.rows[r];
      const auto ri = static_cast<Index>(r);
      st.M.row(row).segment(slots.gamma_offset, slots.q) = ts.basis.row(ri);
      if (slots.s > 0) st.M.row(row).segment(slots.alpha_offset, slots.s) = ts.T.row(ri);
      st.eta[row] += ts.f[ri];
    }
  }
  st.clamped = 0;
  st.mu = pb.family().mean(st.eta, &st.clamped);
  auto wv = weights_and_variance(st.mu, pb.family());
  st.w = std::move(wv.w);
  st.v = std::move(wv.v);
}

Vector initial_beta(const Problem& pb) {
  if (pb.p() == 0) return Vector(0);
  const IrlsResult r = glm_irls(pb.X(), pb.y(), pb.offset(), pb.family());
  if (!r.coef.allFinite()) throw NotPositiveDefinite("initial GLM fit diverged");
  return r.coef;
}

FitState initialize(const Problem& pb, const Vector& beta, Rng& rng) {
  const auto& cfg = pb.config();
  const auto& lay = pb.layout();
  const auto& terms = pb.terms();
  FitState st;
  Vector psi = Vector::Zero(lay.dim());
  psi.head(pb.p()) = beta;

  // a.3
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  for (std::size_t j = 0; j < terms.size(); ++j) {
    const auto& slots = lay.term(static_cast<Index>(j));
    if (slots.s == 0) continue;
    bool ok = false;
    for (int attempt = 0; attempt < cfg.init_alpha_attempts && !ok; ++attempt) {
      Vector at(slots.s);
      for (Index k = 0; k < slots.s; ++k) at[k] = unit(rng);
      const Vector a = expand_alpha(at);
      if (a.maxCoeff() < cfg.init_alpha_max && a[0] > cfg.init_alpha1_min) {
        psi.segment(slots.alpha_offset, slots.s) = at;
        ok = true;
      }
    }
    if (!ok) {
      throw std::invalid_argument("initialize: no admissible starting direction for term '" +
                                  terms[j].name + "' after " +
                                  std::to_string(cfg.init_alpha_attempts) + " draws");
    }
  }

  // a.4: knots and bases at gamma = 0
  apply_psi(pb, st, psi, KnotPolicy::update);

  // a.5: smooth coefficients with X beta as offset and a fixed moderate lambda
  if (!terms.empty()) {
    Index qsum = 0;
    for (const auto& s : lay.terms()) qsum += s.q;
    Matrix N(pb.n(), qsum);
    Matrix S = Matrix::Zero(qsum, qsum);
    Index c = 0;
    for (std::size_t j = 0; j < terms.size(); ++j) {
      const auto& slots = lay.term(static_cast<Index>(j));
      N.middleCols(c, slots.q) = st.M.middleCols(slots.gamma_offset, slots.q);
      S.block(c, c, slots.q, slots.q) = cfg.start_lambda * terms[j].penalty.P;
      c += slots.q;
    }
    const Vector off = pb.X() * beta + pb.offset();
    IrlsOptions opts;
    opts.max_iter = kStartIrlsIter;
    opts.tol = 1e-8;
    const IrlsResult r =
        penalized_irls(N, pb.y(), off, pb.family(), S, Vector(Vector::Zero(qsum)), opts);
    if (!r.coef.allFinite()) throw NotPositiveDefinite("initialize: starting smooth fit diverged");
    c = 0;
    for (const auto& slots : lay.terms()) {
      psi.segment(slots.gamma_offset, slots.q) = r.coef.segment(c, slots.q);
      c += slots.q;
    }
  }

  // a.8
  std::uniform_real_distribution<double> lam(cfg.init_lambda_lo, cfg.init_lambda_hi);
  st.lambda.resize(static_cast<Index>(terms.size()));
  for (Index j = 0; j < st.lambda.size(); ++j) st.lambda[j] = lam(rng);
  std::uniform_real_distribution<double> ph(cfg.init_phi_lo, cfg.init_phi_hi);
  st.phi = pb.family().fixed_dispersion() ? 1.0 : ph(rng);

  // a.6, a.10
  apply_psi(pb, st, psi, KnotPolicy::update);
  return st;
}

BlockPenalty state_penalty(const Problem& pb, const Vector& lambda) {
  return assemble_penalty(pb.layout(), pb.penalties(), lambda);
}

Matrix fisher_matrix(const Problem& pb, const FitState& st, const Matrix& crossprod,
                     double ridge) {
  Matrix A = crossprod;
  if (pb.layout().num_terms() > 0) state_penalty(pb, st.lambda).add_to(A, 1.0 / st.phi);
  A.diagonal().array() += ridge;
  return A;
}

PsiStep psi_update(const Problem& pb, const FitState& st) {
  PsiStep step;
  step.crossprod = weighted_crossprod(st.M, st.w);
  step.factor = cholesky(fisher_matrix(pb, st, step.crossprod, pb.config().ridge));
  const Vector m_psi = st.M * st.psi;
  step.working_response = working_response(m_psi, pb.y(), st.mu, pb.family());
  const Vector rhs = st.M.transpose() * st.w.cwiseProduct(step.working_response);
  step.psi = solve_two_triangular(step.factor, rhs);
  step.B = inverse_factor(step.factor);
  return step;
}

LambdaStep lambda_update(const Problem& pb, const FitState& st, const Matrix& B,
                         const Vector& new_psi) {
  const auto& cfg = pb.config();
  const auto& lay = pb.layout();
  const Index m = lay.num_terms();
  LambdaStep out;
  out.lambda.resize(m);
  out.numerators.resize(m);
  out.denominators.resize(m);
  if (m == 0) return out;

  const BlockPenalty P = state_penalty(pb, st.lambda);
  const Matrix Pinv = penalty_pseudo_inverse(P);
  const Matrix cov = crossprod(B);
  for (Index j = 0; j < m; ++j) {
    const auto& slots = lay.term(j);
    const Matrix& Pj = pb.terms()[static_cast<std::size_t>(j)].penalty.P;
    const Index o = slots.gamma_offset;
    const Index q = slots.q;
    const double tr_pinv = trace_product(Pinv.block(o, o, q, q), Pj);
    const double tr_cov = trace_product(cov.block(o, o, q, q), Pj);
    const double num = tr_pinv - tr_cov / st.phi;
    const Vector g = gamma_of(new_psi, slots);
    const double den = g.dot(Pj * g);
    out.numerators[j] = num;
    out.denominators[j] = den;
    const double old = st.lambda[j];
    if (!(num > 0.0)) {
      // left non-positive so the caller restarts
      out.lambda[j] = den > 0.0 ? num / den * old : num * old;
      if (out.lambda[j] == 0.0 || std::isnan(out.lambda[j])) out.lambda[j] = -1.0;
      continue;
    }
    double next = den > 0.0 ? num / den * old : cfg.lambda_ceiling;
    if (!(next < cfg.lambda_ceiling)) {
      next = cfg.lambda_ceiling;
      ++out.capped;
    } else if (next < cfg.lambda_floor) {
      next = cfg.lambda_floor;
      ++out.capped;
    }
    out.lambda[j] = next;
  }
  return out;
}

Vector penalized_score(const Problem& pb, const FitState& st) {
  const auto& fam = pb.family();
  Vector r(pb.n());
  for (Index i = 0; i < pb.n(); ++i) {
    r[i] = (pb.y()[i] - st.mu[i]) / (fam.mu_eta_inv(st.mu[i]) * st.v[i]);
  }
  Vector u = st.phi * (st.M.transpose() * r);
  if (pb.layout().num_terms() > 0) u -= state_penalty(pb, st.lambda).apply(st.psi);
  return u;
}

double penalized_loglik(const Problem& pb, const FitState& st) {
  double l = loglik(pb.y(), st.mu, st.phi, pb.family());
  if (pb.layout().num_terms() > 0) l -= 0.5 * state_penalty(pb, st.lambda).quadratic_form(st.psi);
  return l;
}

namespace {

struct Finalized {
  Matrix B;
  double ridge = 0.0;
  Matrix crossprod;
};

// Inference factorization at the saved state: without the ridge when the
// Fisher matrix allows it.
Finalized finalize_factor(const Problem& pb, const FitState& st) {
  Finalized out;
  out.crossprod = weighted_crossprod(st.M, st.w);
  try {
    out.B = inverse_factor(cholesky(fisher_matrix(pb, st, out.crossprod, 0.0)));
  } catch (const NotPositiveDefinite&) {
    out.ridge = pb.config().ridge;
    out.B = inverse_factor(cholesky(fisher_matrix(pb, st, out.crossprod, out.ridge)));
  }
  return out;
}

}  // namespace

FittedModel fit(const Problem& pb, Rng& rng) {
  const auto& cfg = pb.config();
  const auto& lay = pb.layout();
  FittedModel model;
  model.spec = pb.spec();
  model.config = cfg;
  model.layout = lay;
  model.seed = cfg.seed;

  const Vector beta0 = initial_beta(pb);  // a.2, kept across restarts

  std::optional<FitState> best;
  double best_met = std::numeric_limits<double>::infinity();
  int total = 0;
  bool stop = false;
  FitTrace& trace = model.trace;

  auto restart = [&](const std::string& reason) {
    ++model.restarts;
    trace.restart_at.push_back(total);
    trace.restart_reason.push_back(reason);
  };

  while (!stop && total < cfg.max_total_iter) {
    FitState st;
    try {
      st = initialize(pb, beta0, rng);
    } catch (const NotPositiveDefinite& e) {
      ++total;
      restart(e.what());
      continue;
    } catch (const DegenerateIndex& e) {
      ++total;
      restart(e.what());
      continue;
    } catch (const std::domain_error& e) {
      ++total;
      restart(e.what());
      continue;
    }
    model.mean_clamps += st.clamped;
    double lp_old = penalized_loglik(pb, st);
    int model_iter = 0;

    while (true) {
      ++total;
      ++model_iter;
      std::string reason;
      double lp_new = 0.0;
      double met = 0.0;
      try {
        // b
        PsiStep step = psi_update(pb, st);
        FitState next = st;
        apply_psi(pb, next, step.psi, KnotPolicy::update);
        model.mean_clamps += next.clamped;
        // c
        LambdaStep ls = lambda_update(pb, st, step.B, step.psi);
        for (Index j = 0; j < ls.numerators.size(); ++j) {
          if (!(ls.numerators[j] > 0.0)) ++model.numerator_violations;
        }
        model.lambda_caps += ls.capped;
        next.lambda = ls.lambda;
        if (next.lambda.size() > 0 && !(next.lambda.minCoeff() > 0.0)) {
          reason = "lambda_min <= 0";
        } else {
          // d
          const double edf = trace_product(crossprod(step.B), step.crossprod);
          next.phi = update_phi(pb.y(), next.mu, next.v, edf, pb.family());
        }
        st = std::move(next);
      } catch (const NotPositiveDefinite& e) {
        reason = e.what();
      } catch (const DegenerateIndex& e) {
        reason = e.what();
      } catch (const std::domain_error& e) {
        reason = e.what();
      } catch (const std::out_of_range& e) {
        reason = e.what();
      }

      // e.1, with met from f.1
      if (reason.empty() && pb.num_index_terms() > 0) {
        // min over index terms by default; max is the rule as printed
        double a1 = cfg.alpha1_all_terms ? -1.0 : 2.0;
        for (std::size_t j = 0; j < st.terms.size(); ++j) {
          if (pb.terms()[j].kind != TermKind::single_index) continue;
          a1 = cfg.alpha1_all_terms ? std::max(a1, st.terms[j].alpha[0]) : std::min(a1, st.terms[j].alpha[0]);
        }
        if (a1 < cfg.alpha1_floor) reason = "alpha1 below floor";
      }
      if (reason.empty()) {
        lp_new = penalized_loglik(pb, st);
        met = std::abs(lp_new - lp_old) / (std::abs(lp_old) + 1e-4);
        trace.met.push_back(met);
        trace.lp.push_back(lp_new);
        if (!std::isfinite(met) || !st.psi.allFinite()) {
          reason = "non-finite iterate";
        } else if (met > cfg.met_explosion) {
          reason = "met explosion";
        }
      }
      if (!reason.empty()) {
        restart(reason);
        break;
      }

      // f.2
      if (met < best_met) {
        best_met = met;
        best = st;
      }
      lp_old = lp_new;
      if (met < cfg.tol_met || total >= cfg.max_total_iter) {
        stop = true;
        break;
      }
      if (model_iter >= cfg.max_model_iter) {
        restart("model iteration limit");
        break;
      }
    }
  }
  model.iterations = total;

  if (!best) {
    throw NonConvergence("fit: iteration budget of " + std::to_string(cfg.max_total_iter) +
                             " exhausted without an accepted iterate",
                         trace.met);
  }

  const FitState& st = *best;
  model.best_met = best_met;
  model.converged = best_met < cfg.tol_met;
  model.psi = st.psi;
  model.lambda = st.lambda;
  model.phi = st.phi;
  model.eta = st.eta;
  model.mu = st.mu;
  model.loglik = loglik(pb.y(), st.mu, st.phi, pb.family());
  model.penalized_loglik = penalized_loglik(pb, st);
  for (std::size_t j = 0; j < st.terms.size(); ++j) {
    const auto& t = pb.terms()[j];
    FittedTerm ft;
    ft.name = t.name;
    ft.kind = t.kind;
    ft.s = static_cast<int>(lay.term(static_cast<Index>(j)).s);
    ft.q = t.q;
    ft.order = t.order;
    ft.dif = t.dif;
    ft.knots = st.terms[j].knots;
    ft.col_means = st.terms[j].col_means;
    ft.deriv_col_means = st.terms[j].deriv_col_means;
    ft.alpha = st.terms[j].alpha;
    model.terms.push_back(std::move(ft));
  }

  const Finalized fin = finalize_factor(pb, st);
  model.B = fin.B;
  model.B_ridge = fin.ridge;
  model.edf_coef = crossprod(fin.B).cwiseProduct(fin.crossprod).rowwise().sum();
  model.edf_total = model.edf_coef.sum();
  model.edf_beta = model.edf_coef.head(lay.p()).sum();
  model.edf_gamma.resize(lay.num_terms());
  model.edf_alpha.resize(lay.num_terms());
  for (Index j = 0; j < lay.num_terms(); ++j) {
    const auto& s = lay.term(j);
    model.edf_gamma[j] = model.edf_coef.segment(s.gamma_offset, s.q).sum();
    model.edf_alpha[j] = model.edf_coef.segment(s.alpha_offset, s.s).sum();
  }
  return model;
}

FittedModel fit(const Problem& pb) {
  Rng rng(pb.config().seed);
  return fit(pb, rng);
}

Prediction predict(const FittedModel& model, const Dataset& data) {
  const auto& lay = model.layout;
  const Index n = data.n() > 0 ? data.n() : data.X.rows();
  if (data.X.rows() != n || data.X.cols() != lay.p()) {
    throw std::invalid_argument("predict: linear design has " + std::to_string(data.X.cols()) +
                                " columns, model expects " + std::to_string(lay.p()));
  }
  if (data.terms.size() != model.terms.size()) {
    throw std::invalid_argument("predict: term count mismatch");
  }
  Prediction out;
  out.eta = data.X * model.psi.head(lay.p());
  if (data.offset.size() == n) out.eta += data.offset;
  out.smooth = Matrix::Zero(n, static_cast<Index>(model.terms.size()));
  for (std::size_t j = 0; j < model.terms.size(); ++j) {
    const auto& ft = model.terms[j];
    const auto& slots = lay.term(static_cast<Index>(j));
    const auto& td = data.terms[j];
    if (td.Z.rows() != n || td.Z.cols() != ft.alpha.size()) {
      throw std::invalid_argument("predict: covariates of term '" + ft.name +
                                  "' do not match the model");
    }
    std::vector<Index> rows;
    for (Index i = 0; i < n; ++i) {
      if (td.mask.empty() || td.mask[static_cast<std::size_t>(i)]) rows.push_back(i);
    }
    Vector u(static_cast<Index>(rows.size()));
    for (std::size_t r = 0; r < rows.size(); ++r) u[static_cast<Index>(r)] = td.Z.row(rows[r]).dot(ft.alpha);
    const Matrix N = centered_basis_at(ft.knots, ft.col_means, u, SpanPolicy::clamp, &out.clamped);
    const Vector f = N * model.psi.segment(slots.gamma_offset, slots.q);
    for (std::size_t r = 0; r < rows.size(); ++r) {
      out.smooth(rows[r], static_cast<Index>(j)) = f[static_cast<Index>(r)];
      out.eta[rows[r]] += f[static_cast<Index>(r)];
    }
  }
  out.mu = model.spec.family.mean(out.eta);
  return out;
}

FitState model_state(const FittedModel& model, const Problem& pb) {
  FitState st;
  st.terms.resize(model.terms.size());
  for (std::size_t j = 0; j < model.terms.size(); ++j) st.terms[j].knots = model.terms[j].knots;
  st.lambda = model.lambda;
  st.phi = model.phi;
  apply_psi(pb, st, model.psi, KnotPolicy::hold);
  return st;
}

}  // namespace gplsiam
