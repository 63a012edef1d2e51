#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "gplsiam/basis.hpp"
#include "gplsiam/model.hpp"
#include "gplsiam/numkernel.hpp"
#include "gplsiam/penalty.hpp"
#include "gplsiam/types.hpp"

namespace gplsiam {

using Rng = std::mt19937_64;

// Per-term quantities on the term's active rows.
struct TermState {
  Vector alpha_tilde;  // length s (empty for plain smooths)
  Vector alpha;        // length s+1
  Vector u;
  KnotVector knots;
  Vector col_means;
  Vector deriv_col_means;
  Matrix basis;        // rows x q, centered
  Matrix deriv_basis;  // rows x q, centered
  Vector f;            // centered smooth
  Vector fprime;       // derivative of the uncentered curve
  Matrix J;
  Matrix T;            // rows x s
};

struct FitState {
  Vector psi;
  Vector lambda;
  double phi = 1.0;
  std::vector<TermState> terms;
  Vector eta;  // includes the offset
  Vector mu;
  Vector w;
  Vector v;
  Matrix M;    // n x dim, unweighted [X, N~1, T~1, ...]
  Index clamped = 0;
};

enum class KnotPolicy {
  update,  // rebuild every knot vector from the current index values
  hold,    // keep the state's knots (strict span check)
};

// Recomputes every derived quantity from psi.
void apply_psi(const Problem& problem, FitState& state, const Vector& psi, KnotPolicy policy);

// Steps a.3-a.10. beta is the linear-only GLM fit from step a.2.
FitState initialize(const Problem& problem, const Vector& beta, Rng& rng);
Vector initial_beta(const Problem& problem);

BlockPenalty state_penalty(const Problem& problem, const Vector& lambda);

// Fisher matrix M'WM + P/phi + ridge I (ridge from the config unless given).
Matrix fisher_matrix(const Problem& problem, const FitState& state, const Matrix& crossprod,
                     double ridge);

struct PsiStep {
  Vector psi;
  CholFactor factor;
  Matrix B;
  Matrix crossprod;  // M'WM at the pre-step state
  Vector working_response;
};

// One scoring step from `state` (does not modify it).
PsiStep psi_update(const Problem& problem, const FitState& state);

struct LambdaStep {
  Vector lambda;
  Vector numerators;
  Vector denominators;
  Index capped = 0;
};

// Fellner-Schall update using the old lambda and phi of `state`, the inverse
// factor B of the same factorization, and the new coefficients.
LambdaStep lambda_update(const Problem& problem, const FitState& state, const Matrix& B,
                         const Vector& new_psi);

Vector penalized_score(const Problem& problem, const FitState& state);
double penalized_loglik(const Problem& problem, const FitState& state);

struct FittedTerm {
  std::string name;
  TermKind kind = TermKind::single_index;
  int s = 0;
  int q = 0;
  int order = 4;
  int dif = 2;
  KnotVector knots;
  Vector col_means;
  Vector deriv_col_means;
  Vector alpha;
};

struct FitTrace {
  std::vector<double> met;
  std::vector<double> lp;
  std::vector<int> restart_at;  // total-iteration index of each restart
  std::vector<std::string> restart_reason;
};

struct FittedModel {
  ModelSpec spec;
  FitConfig config;
  CoefficientLayout layout;
  std::vector<FittedTerm> terms;
  Vector psi;
  Vector lambda;
  double phi = 1.0;
  Matrix B;                     // inverse factor: B'B = (M'WM + P/phi)^{-1}
  double B_ridge = 0.0;         // ridge present in the factorization behind B
  Vector edf_coef;              // per-coefficient contributions
  double edf_total = 0.0;
  Vector edf_gamma;             // per term
  Vector edf_alpha;             // per term
  double edf_beta = 0.0;
  bool converged = false;
  double best_met = 0.0;
  int restarts = 0;
  int iterations = 0;
  FitTrace trace;
  Index numerator_violations = 0;
  Index lambda_caps = 0;
  Index mean_clamps = 0;
  double loglik = 0.0;
  double penalized_loglik = 0.0;
  Vector eta;
  Vector mu;
  uint64_t seed = 0;
};

FittedModel fit(const Problem& problem, Rng& rng);
// Seeds the generator from problem.config().seed.
FittedModel fit(const Problem& problem);

struct Prediction {
  Vector eta;
  Vector mu;
  Matrix smooth;  // n x terms, f~_j contributions (0 on inactive rows)
  Index clamped = 0;
};

// Index values outside a stored knot span are clamped onto it and counted.
Prediction predict(const FittedModel& model, const Dataset& newdata);

// Rebuilds the fit state of a model on its training data (knots held).
FitState model_state(const FittedModel& model, const Problem& problem);

}  // namespace gplsiam
