#include <gtest/gtest.h>

#include <random>

#include "gplsiam/errors.hpp"
#include "gplsiam/fit.hpp"
#include "gplsiam/glm.hpp"
#include "gplsiam/index.hpp"
#include "oracles.hpp"
#include "problems.hpp"

using namespace gplsiam;

namespace {

std::vector<Family> all_families() {
  return {Family(FamilyKind::gaussian), Family(FamilyKind::poisson),
          Family(FamilyKind::gamma, LinkKind::log), Family(FamilyKind::gamma, LinkKind::inverse),
          Family(FamilyKind::bernoulli)};
}

FitConfig wide_knots() {
  FitConfig c;
  c.eps_knot = 0.01;
  return c;
}

}  // namespace

TEST(Layout, OrderAndDimension) {
  const CoefficientLayout lay(2, {{9, 1}, {9, 2}});
  EXPECT_EQ(lay.dim(), 23);
  EXPECT_EQ(lay.term(0).gamma_offset, 2);
  EXPECT_EQ(lay.term(0).alpha_offset, 11);
  EXPECT_EQ(lay.term(1).gamma_offset, 12);
  EXPECT_EQ(lay.term(1).alpha_offset, 21);
}

TEST(Problem, ValidatesSpec) {
  auto mp = testprob::mixed_problem(Family(FamilyKind::poisson), 120, 1);
  const Problem pb(mp.spec, mp.data);
  EXPECT_EQ(pb.dim(), 27);
  EXPECT_EQ(pb.terms()[2].rows.size(), 60u);
  auto bad = mp;
  bad.spec.terms[0].dif = 9;
  EXPECT_THROW(Problem(bad.spec, bad.data), std::invalid_argument);
  bad = mp;
  bad.data.terms[0].Z = bad.data.terms[0].Z.leftCols(1);
  EXPECT_THROW(Problem(bad.spec, bad.data), std::invalid_argument);
  bad = mp;
  bad.data.y[3] = 0.5;
  EXPECT_THROW(Problem(bad.spec, bad.data), std::invalid_argument);
  FitConfig cfg;
  cfg.eps_knot = 0.0;
  EXPECT_THROW(Problem(mp.spec, mp.data, cfg), std::invalid_argument);
}

TEST(Score, MatchesFiniteDifferencesAllFamilies) {
  for (const Family& fam : all_families()) {
    auto mp = testprob::mixed_problem(fam, 150, 3);
    const Problem pb(mp.spec, mp.data, wide_knots());
    std::mt19937_64 rng(17);
    for (int trial = 0; trial < 5; ++trial) {
      const FitState st = testprob::random_state(pb, rng);
      const Vector score = penalized_score(pb, st);
      const Vector fd = oracle::fd_gradient(
          [&](const Vector& psi) { return testprob::lp_fixed_knots(pb, st, psi); }, st.psi, 1e-4);
      EXPECT_LT(oracle::max_rel_error(score, fd), 1e-5) << fam.name() << " trial " << trial;
    }
  }
}

TEST(ApplyPsi, IdentifiabilitySurface) {
  auto mp = testprob::mixed_problem(Family(FamilyKind::gaussian), 150, 5);
  const Problem pb(mp.spec, mp.data);
  std::mt19937_64 rng(5);
  const FitState st = testprob::random_state(pb, rng);
  for (std::size_t j = 0; j < st.terms.size(); ++j) {
    EXPECT_NEAR(st.terms[j].alpha.norm(), 1.0, 1e-14);
    EXPECT_GT(st.terms[j].alpha[0], 0.0);
    EXPECT_LT(std::abs(st.terms[j].f.mean()), 1e-12);
  }
  // masked rows carry no smooth contribution of the group term
  const auto& s3 = pb.layout().term(2);
  for (Index i = 1; i < pb.n(); i += 2) {
    EXPECT_EQ(st.M.row(i).segment(s3.gamma_offset, s3.q + s3.s).norm(), 0.0);
  }
  // eta = X beta + sum f~ + offset
  Vector eta = pb.X() * st.psi.head(2);
  for (std::size_t j = 0; j < st.terms.size(); ++j) {
    for (std::size_t r = 0; r < pb.terms()[j].rows.size(); ++r) eta[pb.terms()[j].rows[r]] += st.terms[j].f[static_cast<Index>(r)];
  }
  EXPECT_LT((eta - st.eta).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Initialize, BoundsAndDeterminism) {
  auto mp = testprob::mixed_problem(Family(FamilyKind::poisson), 200, 7);
  const Problem pb(mp.spec, mp.data);
  const Vector beta = initial_beta(pb);
  Rng r1(42), r2(42);
  const FitState a = initialize(pb, beta, r1);
  const FitState b = initialize(pb, beta, r2);
  EXPECT_EQ(a.psi, b.psi);
  EXPECT_EQ(a.lambda, b.lambda);
  for (std::size_t j = 0; j < a.terms.size(); ++j) {
    if (pb.terms()[j].kind != TermKind::single_index) continue;
    EXPECT_NEAR(a.terms[j].alpha.norm(), 1.0, 1e-14);
    EXPECT_GT(a.terms[j].alpha[0], 0.2);
    EXPECT_LT(a.terms[j].alpha.maxCoeff(), 0.8);
  }
  for (double l : a.lambda) {
    EXPECT_GE(l, 1.0);
    EXPECT_LE(l, 1000.0);
  }
  EXPECT_EQ(a.phi, 1.0);
}

TEST(Initialize, PureGlmMatchesIrls) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const Index n = 100;
  Dataset d;
  d.X.resize(n, 2);
  d.y.resize(n);
  for (Index i = 0; i < n; ++i) {
    d.X(i, 0) = 1.0;
    d.X(i, 1) = unif(rng);
    d.y[i] = static_cast<double>(std::poisson_distribution<int>(std::exp(1 + d.X(i, 1)))(rng));
  }
  ModelSpec spec;
  spec.family = Family(FamilyKind::poisson);
  const Problem pb(spec, d);
  const Vector beta = initial_beta(pb);
  Rng r(1);
  const FitState st = initialize(pb, beta, r);
  EXPECT_EQ(st.psi, beta);
  const IrlsResult ref = glm_irls(d.X, d.y, Vector::Zero(n), spec.family);
  EXPECT_LT((st.mu - ref.mu).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(PsiUpdate, GaussianOneStepExact) {
  std::mt19937_64 rng(9);
  std::normal_distribution<double> nd;
  const Index n = 80;
  Dataset d;
  d.X.resize(n, 3);
  for (auto& x : d.X.reshaped()) x = nd(rng);
  d.y = d.X * Vector{{1.0, -2.0, 0.5}} + 0.1 * d.X.col(0);
  for (auto& y : d.y) y += nd(rng);
  ModelSpec spec;
  FitConfig cfg;
  cfg.ridge = 0.0;
  const Problem pb(spec, d, cfg);
  FitState st;
  st.lambda.resize(0);
  st.phi = 1.0;
  apply_psi(pb, st, Vector::Zero(3), KnotPolicy::update);
  const PsiStep step = psi_update(pb, st);
  const Vector ols = d.X.colPivHouseholderQr().solve(d.y);
  EXPECT_LT((step.psi - ols).norm(), 1e-10);
}

TEST(PsiUpdate, FixedPointIsStationary) {
  auto g = testprob::gplam_problem(300, 4);
  FitConfig cfg;
  cfg.ridge = 0.0;
  const Problem pb(g.spec, g.data, cfg);
  FitState st;
  st.lambda = Vector::Constant(2, 5.0);
  st.phi = 1.0;
  apply_psi(pb, st, Vector::Zero(pb.dim()), KnotPolicy::update);
  for (int it = 0; it < 60; ++it) apply_psi(pb, st, psi_update(pb, st).psi, KnotPolicy::update);
  const PsiStep step = psi_update(pb, st);
  EXPECT_LT((step.psi - st.psi).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_LT(penalized_score(pb, st).cwiseAbs().maxCoeff(), 1e-7);
}

TEST(PsiUpdate, MatchesIndependentPirlsStep) {
  auto g = testprob::gplam_problem(250, 6);
  FitConfig cfg;
  cfg.ridge = 0.0;
  const Problem pb(g.spec, g.data, cfg);
  const oracle::Mat M = testprob::gplam_design(pb);
  std::vector<oracle::PenaltyBlock> blocks;
  for (std::size_t j = 0; j < pb.terms().size(); ++j) {
    blocks.push_back({pb.layout().term(static_cast<Index>(j)).gamma_offset, pb.terms()[j].penalty.P});
  }
  FitState st;
  st.lambda = Vector{{3.0, 40.0}};
  st.phi = 1.0;
  Vector psi = Vector::Zero(pb.dim());
  psi[0] = std::log(g.data.y.mean());
  apply_psi(pb, st, psi, KnotPolicy::update);
  EXPECT_LT((st.M - M).cwiseAbs().maxCoeff(), 1e-12);
  const oracle::Mat S = oracle::penalty_matrix(pb.dim(), blocks, st.lambda);
  for (int it = 0; it < 6; ++it) {
    const oracle::Vec eta = M * psi;
    const oracle::Vec mu = eta.array().exp();
    const oracle::Vec z = eta.array() + (g.data.y - mu).array() / mu.array();
    const oracle::Vec ref = (M.transpose() * mu.asDiagonal() * M + S).inverse() * (M.transpose() * mu.cwiseProduct(z));
    const PsiStep step = psi_update(pb, st);
    EXPECT_LT((step.psi - ref).cwiseAbs().maxCoeff(), 1e-8) << "step " << it;
    psi = ref;
    apply_psi(pb, st, step.psi, KnotPolicy::update);
  }
}

TEST(LambdaUpdate, TracesMatchExplicitInverse) {
  auto mp = testprob::mixed_problem(Family(FamilyKind::gamma, LinkKind::log), 200, 12);
  FitConfig cfg;
  cfg.ridge = 0.0;
  const Problem pb(mp.spec, mp.data, cfg);
  std::mt19937_64 rng(3);
  const FitState st = testprob::random_state(pb, rng);
  const PsiStep step = psi_update(pb, st);
  const LambdaStep ls = lambda_update(pb, st, step.B, step.psi);

  const Matrix P = state_penalty(pb, st.lambda).dense();
  const Matrix F = st.phi * step.crossprod + P;
  const Matrix Finv = F.inverse();
  const Matrix Pinv = oracle::pinv(P);
  for (Index j = 0; j < pb.layout().num_terms(); ++j) {
    const Matrix Pj = state_penalty(pb, st.lambda).component(j);
    const double num = (Pinv * Pj).trace() - (Finv * Pj).trace();
    EXPECT_NEAR(ls.numerators[j], num, 1e-8 * std::max(1.0, std::abs(num)));
    EXPECT_GT(ls.numerators[j], 0.0);
    const double den = step.psi.dot(Pj * step.psi);
    EXPECT_NEAR(ls.denominators[j], den, 1e-10 * std::max(1.0, den));
    EXPECT_NEAR(ls.lambda[j], st.lambda[j] * num / den, 1e-8 * ls.lambda[j]);
  }
}

TEST(LambdaUpdate, NullSpaceIsCapped) {
  auto g = testprob::gplam_problem(200, 2);
  const Problem pb(g.spec, g.data);
  FitState st;
  st.lambda = Vector::Constant(2, 10.0);
  st.phi = 1.0;
  apply_psi(pb, st, Vector::Zero(pb.dim()), KnotPolicy::update);
  const PsiStep step = psi_update(pb, st);
  Vector psi = step.psi;
  // a linear gamma~ sequence with an implied zero last coefficient
  const auto& s = pb.layout().term(0);
  for (Index k = 0; k < s.q; ++k) psi[s.gamma_offset + k] = static_cast<double>(s.q - k);
  const LambdaStep ls = lambda_update(pb, st, step.B, psi);
  EXPECT_EQ(ls.lambda[0], pb.config().lambda_ceiling);
  EXPECT_GE(ls.capped, 1);
}

TEST(Fit, GplamMatchesPirlsFellnerSchallOracle) {
  auto g = testprob::gplam_problem(400, 21);
  FitConfig cfg;
  cfg.ridge = 0.0;
  cfg.tol_met = 1e-13;
  cfg.max_model_iter = 5000;
  cfg.max_total_iter = 5000;
  const Problem pb(g.spec, g.data, cfg);
  const FittedModel model = fit(pb);
  ASSERT_TRUE(model.converged);
  const oracle::Mat M = testprob::gplam_design(pb);
  std::vector<oracle::PenaltyBlock> blocks;
  for (std::size_t j = 0; j < pb.terms().size(); ++j) {
    blocks.push_back({pb.layout().term(static_cast<Index>(j)).gamma_offset, pb.terms()[j].penalty.P});
  }
  const auto ref = oracle::poisson_pirls_fs(M, g.data.y, blocks, Vector::Ones(2));
  EXPECT_LT((model.psi - ref.coef).cwiseAbs().maxCoeff(), 1e-6);
  for (Index j = 0; j < 2; ++j) EXPECT_LT(std::abs(model.lambda[j] - ref.lambda[j]) / ref.lambda[j], 1e-4);
}

TEST(Fit, RecoversLinearDirectionGaussian) {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::normal_distribution<double> nd;
  const Index n = 3200;
  const Vector alpha = Vector{{1.0, 2.0, -1.0}}.normalized();
  Dataset d;
  d.X = Matrix::Ones(n, 1);
  Matrix Z(n, 3);
  for (auto& x : Z.reshaped()) x = unif(rng);
  d.y = 1.0 + (2.0 * (Z * alpha)).array() + 0.2 * Vector::NullaryExpr(n, [&] { return nd(rng); }).array();
  d.terms = {{Z, {}}};
  ModelSpec spec;
  spec.family = Family(FamilyKind::gaussian);
  spec.terms = {TermSpec{"f", TermKind::single_index, {"a", "b", "c"}, 9, 4, 2, "", ""}};
  FitConfig cfg;
  cfg.seed = 3;
  const Problem pb(spec, d, cfg);
  const FittedModel m = fit(pb);
  EXPECT_LT((m.terms[0].alpha - alpha).norm(), 1e-2);
  EXPECT_NEAR(m.phi, 25.0, 3.0);
}

TEST(Fit, DeterministicAndSavesMinimalMet) {
  auto mp = testprob::mixed_problem(Family(FamilyKind::poisson), 300, 14);
  FitConfig cfg;
  cfg.seed = 99;
  const Problem pb(mp.spec, mp.data, cfg);
  const FittedModel a = fit(pb);
  const FittedModel b = fit(pb);
  EXPECT_EQ(a.psi, b.psi);
  EXPECT_EQ(a.restarts, b.restarts);
  EXPECT_EQ(a.iterations, b.iterations);
  EXPECT_EQ(a.trace.met, b.trace.met);
  ASSERT_FALSE(a.trace.met.empty());
  EXPECT_EQ(a.best_met, *std::min_element(a.trace.met.begin(), a.trace.met.end()));
  if (a.converged) EXPECT_LT(a.trace.met.back(), cfg.tol_met);
  EXPECT_EQ(a.numerator_violations, 0);
  for (const auto& t : a.terms) {
    EXPECT_NEAR(t.alpha.norm(), 1.0, 1e-14);
    EXPECT_GT(t.alpha[0], 0.0);
  }
}

TEST(Fit, NonConvergenceCarriesTrace) {
  auto mp = testprob::mixed_problem(Family(FamilyKind::poisson), 150, 15);
  FitConfig cfg;
  cfg.met_explosion = 1e-300;  // every iterate restarts
  cfg.max_total_iter = 12;
  const Problem pb(mp.spec, mp.data, cfg);
  try {
    fit(pb);
    FAIL() << "expected NonConvergence";
  } catch (const NonConvergence& e) {
    EXPECT_FALSE(e.met_trace().empty());
  }
}

TEST(Predict, ReproducesTrainingFit) {
  for (const Family& fam : {Family(FamilyKind::poisson), Family(FamilyKind::bernoulli)}) {
    auto mp = testprob::mixed_problem(fam, 300, 16);
    const Problem pb(mp.spec, mp.data);
    const FittedModel m = fit(pb);
    const Prediction p = predict(m, mp.data);
    EXPECT_LT((p.eta - m.eta).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_EQ(p.clamped, 0);
    if (fam.kind() == FamilyKind::bernoulli) {
      EXPECT_GT(p.mu.minCoeff(), 0.0);
      EXPECT_LT(p.mu.maxCoeff(), 1.0);
    }
    Dataset one;
    one.X = mp.data.X.topRows(1);
    for (const auto& t : mp.data.terms) {
      TermData td{t.Z.topRows(1), {}};
      if (!t.mask.empty()) td.mask = {t.mask[0]};
      one.terms.push_back(td);
    }
    EXPECT_NEAR(predict(m, one).eta[0], m.eta[0], 1e-10);
    // far outside the training span: clamped, still finite
    Dataset far = one;
    far.terms[0].Z.setConstant(50.0);
    const Prediction pf = predict(m, far);
    EXPECT_GE(pf.clamped, 1);
    EXPECT_TRUE(pf.eta.allFinite());
  }
}
