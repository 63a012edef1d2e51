#include <gtest/gtest.h>

#include <random>

#include "gplsiam/errors.hpp"
#include "gplsiam/fit.hpp"
#include "gplsiam/inference.hpp"
#include "gplsiam/numkernel.hpp"
#include "oracles.hpp"
#include "problems.hpp"

using namespace gplsiam;

namespace {

struct Fitted {
  testprob::Mixed data;
  Problem problem;
  FittedModel model;
};

Fitted fitted_mixed(const Family& fam, Index n, uint64_t seed) {
  auto mp = testprob::mixed_problem(fam, n, seed);
  FitConfig cfg;
  cfg.seed = seed;
  Problem pb(mp.spec, mp.data, cfg);
  FittedModel m = fit(pb);
  return {std::move(mp), std::move(pb), std::move(m)};
}

}  // namespace

TEST(Edf, UnpenalizedLimitIsDimension) {
  auto mp = testprob::mixed_problem(Family(FamilyKind::poisson), 300, 2);
  FitConfig cfg;
  cfg.ridge = 0.0;
  const Problem pb(mp.spec, mp.data, cfg);
  std::mt19937_64 rng(4);
  FitState st = testprob::random_state(pb, rng);
  st.lambda.setConstant(1e-10);
  const PsiStep step = psi_update(pb, st);
  const EdfResult e = effective_df(step.B, step.crossprod, pb.layout());
  EXPECT_NEAR(e.total, static_cast<double>(pb.dim()), 1e-3);
}

TEST(Edf, MatchesExplicitInverseAndIsAdditive) {
  auto mp = testprob::mixed_problem(Family(FamilyKind::gamma, LinkKind::log), 200, 3);
  FitConfig cfg;
  cfg.ridge = 0.0;
  const Problem pb(mp.spec, mp.data, cfg);
  std::mt19937_64 rng(5);
  const FitState st = testprob::random_state(pb, rng);
  const PsiStep step = psi_update(pb, st);
  const EdfResult e = effective_df(step.B, step.crossprod, pb.layout());
  const Matrix P = state_penalty(pb, st.lambda).dense();
  const Matrix F = step.crossprod + P / st.phi;
  const double ref = (F.inverse() * step.crossprod).trace();
  EXPECT_NEAR(e.total, ref, 1e-8 * ref);
  EXPECT_NEAR(e.per_block.sum(), e.total, 1e-10);
  EXPECT_NEAR(e.per_coef.sum(), e.total, 1e-10);
  EXPECT_EQ(e.per_block.size(), 1 + 2 * pb.layout().num_terms());
}

TEST(Edf, AlphaBlockEqualsIndexDimensionAtConvergence) {
  for (const Family& fam : {Family(FamilyKind::poisson), Family(FamilyKind::gaussian)}) {
    const Fitted f = fitted_mixed(fam, 400, 6);
    ASSERT_TRUE(f.model.converged) << fam.name();
    EXPECT_EQ(f.model.B_ridge, 0.0);
    for (Index j = 0; j < f.model.layout.num_terms(); ++j) {
      EXPECT_NEAR(f.model.edf_alpha[j], static_cast<double>(f.model.layout.term(j).s), 1e-6)
          << fam.name() << " term " << j;
    }
    double sum = f.model.edf_beta;
    for (Index j = 0; j < f.model.layout.num_terms(); ++j) sum += f.model.edf_gamma[j] + f.model.edf_alpha[j];
    EXPECT_NEAR(sum, f.model.edf_total, 1e-10);
  }
}

TEST(CoefTable, GaussianOrthonormalMatchesOls) {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> nd;
  const Index n = 60;
  Matrix A(n, 3);
  for (auto& a : A.reshaped()) a = nd(rng);
  const Matrix Q = A.householderQr().householderQ() * Matrix::Identity(n, 3);
  Dataset d;
  d.X = Q;
  d.y = Q * Vector{{2.0, -1.0, 0.5}};
  for (auto& y : d.y) y += 0.3 * nd(rng);
  ModelSpec spec;
  spec.linear_names = {"a", "b", "c"};
  FitConfig cfg;
  cfg.ridge = 0.0;
  const Problem pb(spec, d, cfg);
  const FittedModel m = fit(pb);
  const InferenceReport rep = coef_table(m);
  ASSERT_EQ(rep.coefficients.size(), 3u);
  const Vector beta = Q.transpose() * d.y;
  const double sigma2 = (d.y - Q * beta).squaredNorm() / static_cast<double>(n - 3);
  for (std::size_t k = 0; k < 3; ++k) {
    EXPECT_NEAR(rep.coefficients[k].estimate, beta[static_cast<Index>(k)], 1e-10);
    EXPECT_NEAR(rep.coefficients[k].se, std::sqrt(sigma2), 1e-8);
    EXPECT_GE(rep.coefficients[k].p, 0.0);
    EXPECT_LE(rep.coefficients[k].p, 1.0);
  }
  EXPECT_EQ(rep.coefficients[0].name, "a");
}

TEST(CoefTable, CovarianceDiagonalMatchesFisherInverse) {
  const Fitted f = fitted_mixed(Family(FamilyKind::gamma, LinkKind::log), 300, 9);
  const FitState st = model_state(f.model, f.problem);
  const Matrix cp = weighted_crossprod(st.M, st.w);
  const Matrix F = cp + state_penalty(f.problem, f.model.lambda).dense() / f.model.phi +
                   f.model.B_ridge * Matrix::Identity(cp.rows(), cp.cols());
  const Vector var = F.inverse().diagonal() / f.model.phi;
  const InferenceReport rep = coef_table(f.model);
  const auto& lay = f.model.layout;
  std::vector<Index> positions;
  for (Index k = 0; k < lay.p(); ++k) positions.push_back(k);
  for (Index j = 0; j < lay.num_terms(); ++j) {
    for (Index k = 0; k < lay.term(j).s; ++k) positions.push_back(lay.term(j).alpha_offset + k);
  }
  ASSERT_EQ(rep.coefficients.size(), positions.size());
  for (std::size_t r = 0; r < positions.size(); ++r) {
    const double se = std::sqrt(var[positions[r]]);
    EXPECT_NEAR(rep.coefficients[r].se, se, 1e-8 * se);
    EXPECT_GT(rep.coefficients[r].se, 0.0);
  }
  EXPECT_EQ(rep.terms.size(), 3u);
}

TEST(Band, HadamardEqualsSandwich) {
  std::mt19937_64 rng(10);
  std::normal_distribution<double> nd;
  Matrix B = Matrix::Zero(12, 12);
  for (Index i = 0; i < 12; ++i) {
    for (Index j = 0; j <= i; ++j) B(i, j) = nd(rng);
    B(i, i) = 1.0 + std::abs(B(i, i));
  }
  Matrix D(30, 5);
  for (auto& x : D.reshaped()) x = nd(rng);
  const double phi = 2.5;
  const Vector hw = band_half_width(D, B, 4, phi);
  const Matrix cov = (B.transpose() * B).block(4, 4, 5, 5) / phi;
  const Vector ref = 1.96 * (D * cov * D.transpose()).diagonal().array().sqrt();
  for (Index i = 0; i < hw.size(); ++i) EXPECT_NEAR(hw[i], ref[i], 1e-10 * ref[i]);
  // 1/sqrt(phi) scaling
  const Vector hw4 = band_half_width(D, B, 4, 4.0 * phi);
  EXPECT_LT((hw4 - 0.5 * hw).cwiseAbs().maxCoeff(), 1e-14);
  // zero covariance block
  Matrix B0 = B;
  B0.middleCols(4, 5).setZero();
  EXPECT_EQ(band_half_width(D, B0, 4, phi).norm(), 0.0);
}

TEST(Band, ObservedAndGridBands) {
  const Fitted f = fitted_mixed(Family(FamilyKind::poisson), 300, 11);
  for (Index j = 0; j < f.model.layout.num_terms(); ++j) {
    const Band obs = observed_band(f.model, f.problem, j);
    EXPECT_EQ(obs.u.size(), static_cast<Index>(f.problem.terms()[static_cast<std::size_t>(j)].rows.size()));
    for (Index i = 1; i < obs.u.size(); ++i) EXPECT_LE(obs.u[i - 1], obs.u[i]);
    EXPECT_GT(obs.half_width.minCoeff(), 0.0);
    EXPECT_LT(((obs.upper() + obs.lower()) / 2 - obs.fhat).cwiseAbs().maxCoeff(), 1e-14);

    // grid at the observed points reproduces the observed band
    const Band grid = confidence_band(f.model, f.problem, j, obs.u);
    EXPECT_LT((grid.fhat - obs.fhat).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_LT((grid.half_width - obs.half_width).cwiseAbs().maxCoeff(), 1e-12);

    Vector outside(1);
    outside << f.model.terms[static_cast<std::size_t>(j)].knots.upper() + 1.0;
    EXPECT_THROW(confidence_band(f.model, f.problem, j, outside), OutOfKnotSpan);
  }
}
