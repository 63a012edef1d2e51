// Acceptance suite: one PASS/FAIL/SKIP line per criterion, nonzero exit on
// any FAIL. Optional arguments restrict the run to the listed criteria.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "gplsiam/basis.hpp"
#include "gplsiam/fit.hpp"
#include "gplsiam/inference.hpp"
#include "gplsiam/numkernel.hpp"
#include "gplsiam/sim.hpp"
#include "oracles.hpp"
#include "problems.hpp"

#ifdef GPLSIAM_HAVE_CLI
#include "gplsiam_cli/commands.hpp"
#include "gplsiam_cli/config.hpp"
#include "gplsiam_cli/csv.hpp"
#include "gplsiam_cli/design.hpp"
#endif

using namespace gplsiam;

namespace {

enum class Status { pass, fail, skip };

struct Outcome {
  Status status = Status::fail;
  std::string detail;
};

std::string fmt(const char* f, double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, x);
  return buf;
}

class Detail {
 public:
  void check(bool ok, const std::string& what) {
    ok_ = ok_ && ok;
    if (!text_.empty()) text_ += "; ";
    text_ += what + (ok ? "" : " [x]");
  }
  Outcome outcome() const { return {ok_ ? Status::pass : Status::fail, text_}; }

 private:
  bool ok_ = true;
  std::string text_;
};

int jobs() { return std::max(1, static_cast<int>(std::thread::hardware_concurrency())); }

// Study records shared between criteria 5-9.
std::map<std::string, sim::StudyResult> studies;

const sim::StudyResult& study(const std::string& scenario, const std::vector<Index>& n_list,
                              int reps) {
  const std::string key = scenario + ":" + std::to_string(n_list.front()) + ":" + std::to_string(reps);
  auto it = studies.find(key);
  if (it != studies.end()) return it->second;
  sim::StudyConfig cfg;
  cfg.n_list = n_list;
  cfg.replicates = reps;
  cfg.jobs = jobs();
  cfg.seed = 1;
  return studies.emplace(key, sim::run_study(sim::make_scenario(scenario), cfg)).first->second;
}

const sim::AggregateRow& row(const sim::StudyResult& r, Index n) {
  for (const auto& a : r.aggregate) {
    if (a.n == n) return a;
  }
  throw std::logic_error("missing aggregate row");
}

std::string rate(const sim::AggregateRow& a) {
  return std::to_string(a.unstable) + "/" + std::to_string(a.replicates) + " = " +
         fmt("%.1f%%", 100.0 * a.instability_rate);
}

// 1. penalized score vs central differences of L_p, knots held
Outcome score_correctness() {
  const std::vector<Family> families{Family(FamilyKind::gaussian), Family(FamilyKind::poisson),
                                     Family(FamilyKind::gamma, LinkKind::log),
                                     Family(FamilyKind::gamma, LinkKind::inverse),
                                     Family(FamilyKind::bernoulli)};
  Detail d;
  for (const Family& fam : families) {
    auto mp = testprob::mixed_problem(fam, 150, 3);
    FitConfig cfg;
    cfg.eps_knot = 0.01;
    const Problem pb(mp.spec, mp.data, cfg);
    std::mt19937_64 rng(101);
    double worst = 0.0;
    for (int state = 0; state < 20; ++state) {
      const FitState st = testprob::random_state(pb, rng);
      const Vector score = penalized_score(pb, st);
      const Vector fd = oracle::fd_gradient(
          [&](const Vector& psi) { return testprob::lp_fixed_knots(pb, st, psi); }, st.psi, 1e-4);
      worst = std::max(worst, oracle::max_rel_error(score, fd));
    }
    d.check(worst < 1e-5 && pb.dim() <= 30,
            fam.name() + " dim " + std::to_string(pb.dim()) + " max rel err " + fmt("%.2e", worst));
  }
  return d.outcome();
}

double rel(double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); }

// 2. kernels vs explicit inverse / pseudo-inverse
Outcome linear_algebra() {
  Detail d;
  std::mt19937_64 rng(202);
  std::normal_distribution<double> nd;
  double solve_err = 0.0, inv_err = 0.0;
  for (Index dim : {5, 17, 33, 50}) {
    Matrix G(dim + 10, dim);
    for (auto& x : G.reshaped()) x = nd(rng);
    const Matrix A = G.transpose() * G + 0.5 * Matrix::Identity(dim, dim);
    Vector b(dim);
    for (auto& x : b) x = nd(rng);
    const CholFactor f = cholesky(A);
    const Matrix Ainv = A.inverse();
    const Vector x = solve_two_triangular(f, b);
    const Vector ref = Ainv * b;
    solve_err = std::max(solve_err, (x - ref).cwiseAbs().maxCoeff() / std::max(1.0, ref.cwiseAbs().maxCoeff()));
    const Matrix BtB = crossprod(inverse_factor(f));
    inv_err = std::max(inv_err, (BtB - Ainv).cwiseAbs().maxCoeff() / std::max(1.0, Ainv.cwiseAbs().maxCoeff()));
  }
  d.check(solve_err < 1e-8, "solve " + fmt("%.1e", solve_err));
  d.check(inv_err < 1e-8, "inverse factor " + fmt("%.1e", inv_err));

  double edf_err = 0.0, num_err = 0.0, lam_err = 0.0;
  Index max_dim = 0;
  for (const Family& fam : {Family(FamilyKind::poisson), Family(FamilyKind::gamma, LinkKind::log)}) {
    auto mp = testprob::mixed_problem(fam, 200, 12);
    FitConfig cfg;
    cfg.ridge = 0.0;
    const Problem pb(mp.spec, mp.data, cfg);
    max_dim = std::max(max_dim, pb.dim());
    for (int trial = 0; trial < 5; ++trial) {
      const FitState st = testprob::random_state(pb, rng);
      const PsiStep step = psi_update(pb, st);
      const BlockPenalty pen = state_penalty(pb, st.lambda);
      const Matrix P = pen.dense();
      const Matrix Finv = (step.crossprod + P / st.phi).inverse();
      const EdfResult e = effective_df(step.B, step.crossprod, pb.layout());
      edf_err = std::max(edf_err, rel(e.total, (Finv * step.crossprod).trace()));

      const LambdaStep ls = lambda_update(pb, st, step.B, step.psi);
      const Matrix Pinv = oracle::pinv(P);
      for (Index j = 0; j < pb.layout().num_terms(); ++j) {
        const Matrix Pj = pen.component(j);
        const double num = (Pinv * Pj).trace() - (Finv * Pj).trace() / st.phi;
        const double den = step.psi.dot(Pj * step.psi);
        num_err = std::max(num_err, rel(ls.numerators[j], num));
        lam_err = std::max(lam_err, std::abs(ls.lambda[j] - st.lambda[j] * num / den) / ls.lambda[j]);
      }
    }
  }
  d.check(edf_err < 1e-8, "edf trace " + fmt("%.1e", edf_err));
  d.check(num_err < 1e-8, "lambda trace " + fmt("%.1e", num_err));
  d.check(lam_err < 1e-8, "lambda " + fmt("%.1e", lam_err));
  d.check(max_dim <= 50, "max dim " + std::to_string(max_dim));
  return d.outcome();
}

// 3. basis suite
Outcome basis_suite() {
  Detail d;
  std::mt19937_64 rng(303);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Vector sample(200);
  for (auto& x : sample) x = 3.0 * unif(rng) - 1.0;

  double pou = 0.0, center = 0.0, deriv = 0.0;
  Index n_total = 0;
  for (int order : {2, 3, 4, 5}) {
    for (int q : {order, 9, 24}) {
      const KnotVector kv = make_knots(sample, q, order, 0.001);
      const Matrix raw = eval_basis(kv, sample);
      pou = std::max(pou, (raw.rowwise().sum().array() - 1.0).abs().maxCoeff());
      const BasisBlock blk = build_basis_block(kv, sample);
      center = std::max(center, blk.basis.colwise().sum().cwiseAbs().maxCoeff() / sample.size());
      n_total = sample.size();
      if (order < 3) continue;  // piecewise-linear derivative is discontinuous at knots
      const Matrix D = eval_deriv_basis(kv, sample);
      const double h = 1e-6;
      const Matrix up = eval_basis(kv, (sample.array() + h).cwiseMin(kv.upper()).matrix());
      const Matrix dn = eval_basis(kv, (sample.array() - h).cwiseMax(kv.lower()).matrix());
      for (Index i = 0; i < sample.size(); ++i) {
        bool near = false;
        for (double t : kv.knots) near |= std::abs(sample[i] - t) < 2 * h;
        if (near || sample[i] + h > kv.upper() || sample[i] - h < kv.lower()) continue;
        for (Index c = 0; c < D.cols(); ++c) {
          deriv = std::max(deriv, rel(D(i, c), (up(i, c) - dn(i, c)) / (2 * h)));
        }
      }
    }
  }
  d.check(pou < 1e-12, "partition of unity " + fmt("%.1e", pou));
  d.check(center < 1e-8, "centered column sums / n " + fmt("%.1e", center) + " (n " +
                             std::to_string(n_total) + ")");
  d.check(deriv < 1e-5, "derivative vs FD " + fmt("%.1e", deriv));

  // u spanning [0, 1], q = 8, d = 4, eps = 0.001
  Vector u(5);
  u << 0.0, 0.2, 0.5, 0.9, 1.0;
  const KnotVector kv = make_knots(u, 8, 4, 0.001);
  bool exact = kv.size() == 13 && kv.basis_dim() == 9 && kv.lower() == -0.001 && kv.upper() == 1.001;
  const double step = 1.002 / 6.0;
  for (int i = 0; i < kv.size(); ++i) exact = exact && std::abs(kv.knots[i] - (-0.001 + (i - 3) * step)) < 1e-12;
  exact = exact && std::abs(kv.knots.front() + 0.502) < 1e-12 && std::abs(kv.knots.back() - 1.502) < 1e-12;
  d.check(exact, "knots m=13, basis 9, inner [-0.001, 1.001], t1 " + fmt("%.4f", kv.knots.front()) +
                     ", t13 " + fmt("%.4f", kv.knots.back()));
  return d.outcome();
}

// 4. plain-smooth poisson model vs penalized IRLS + Fellner-Schall oracle
Outcome gplam_reduction() {
  auto g = testprob::gplam_problem(400, 21);
  FitConfig cfg;
  cfg.ridge = 0.0;
  cfg.tol_met = 1e-13;
  cfg.max_model_iter = 5000;
  cfg.max_total_iter = 5000;
  const Problem pb(g.spec, g.data, cfg);
  const FittedModel model = fit(pb);
  const oracle::Mat M = testprob::gplam_design(pb);
  std::vector<oracle::PenaltyBlock> blocks;
  for (std::size_t j = 0; j < pb.terms().size(); ++j) {
    blocks.push_back({pb.layout().term(static_cast<Index>(j)).gamma_offset, pb.terms()[j].penalty.P});
  }
  const auto ref = oracle::poisson_pirls_fs(M, g.data.y, blocks, Vector::Ones(2));
  Detail d;
  d.check(model.converged, "converged");
  const double coef = (model.psi - ref.coef).cwiseAbs().maxCoeff();
  d.check(coef < 1e-6, "coefficients " + fmt("%.1e", coef));
  double lam = 0.0;
  for (Index j = 0; j < 2; ++j) lam = std::max(lam, std::abs(model.lambda[j] - ref.lambda[j]) / ref.lambda[j]);
  d.check(lam < 1e-4, "lambda rel " + fmt("%.1e", lam));
  return d.outcome();
}

Outcome poisson1() {
  const auto& r = study("poisson1", {200, 800}, 50);
  const auto& a = row(r, 200);
  const auto& b = row(r, 800);
  Detail d;
  d.check(a.instability_rate <= 0.05, "n=200 unstable " + rate(a) + " (<= 5%)");
  d.check(b.instability_rate <= 0.02, "n=800 unstable " + rate(b) + " (<= 2%)");
  d.check(b.mean_rel_error < a.mean_rel_error,
          "mean rel err " + fmt("%.4f", a.mean_rel_error) + " -> " + fmt("%.4f", b.mean_rel_error));
  return d.outcome();
}

Outcome poisson2() {
  const auto& r = study("poisson2", {200, 800}, 50);
  const auto& a = row(r, 200);
  const auto& b = row(r, 800);
  Detail d;
  d.check(a.instability_rate <= 0.12, "n=200 unstable " + rate(a) + " (<= 12%)");
  d.check(b.instability_rate <= 0.06, "n=800 unstable " + rate(b) + " (<= 6%)");
  return d.outcome();
}

Outcome gamma1() {
  const auto& a = row(study("gamma1", {200}, 50), 200);
  const auto& b = row(study("gamma1", {3200}, 20), 3200);
  Detail d;
  d.check(a.instability_rate <= 0.15, "n=200 unstable " + rate(a) + " (<= 15%)");
  d.check(b.instability_rate <= 0.10, "n=3200 unstable " + rate(b) + " (<= 10%)");
  d.check(b.phi_mean >= 7.0 && b.phi_mean <= 11.0, "n=3200 mean phi " + fmt("%.2f", b.phi_mean) + " in [7, 11]");
  return d.outcome();
}

Outcome positivity() {
  poisson1();
  poisson2();
  gamma1();
  Index violations = 0;
  std::size_t fits = 0;
  for (const auto& [key, r] : studies) {
    for (const auto& rec : r.replicates) {
      violations += rec.numerator_violations;
      fits += rec.failed ? 0 : 1;
    }
  }
  Detail d;
  d.check(violations == 0, std::to_string(violations) + " nonpositive numerators over " + std::to_string(fits) + " fits");
  return d.outcome();
}

Outcome inference_identities() {
  Detail d;
  poisson1();
  poisson2();
  gamma1();
  double gap = 0.0;
  std::size_t converged = 0;
  for (const auto& [key, r] : studies) {
    for (const auto& rec : r.replicates) {
      if (rec.failed || !rec.converged) continue;
      ++converged;
      for (double g : rec.edf_alpha_gap) gap = std::max(gap, g);
    }
  }
  d.check(converged > 0 && gap < 1e-6,
          "alpha edf - s max " + fmt("%.1e", gap) + " over " + std::to_string(converged) + " converged fits");

  double band = 0.0;
  for (const Family& fam : {Family(FamilyKind::poisson), Family(FamilyKind::gamma, LinkKind::log)}) {
    auto mp = testprob::mixed_problem(fam, 300, 9);
    const Problem pb(mp.spec, mp.data);
    const FittedModel m = fit(pb);
    const FitState st = model_state(m, pb);
    const Matrix cov = crossprod(m.B) / m.phi;
    for (Index j = 0; j < m.layout.num_terms(); ++j) {
      const auto& ts = st.terms[static_cast<std::size_t>(j)];
      const auto& slots = m.layout.term(j);
      Matrix D(ts.basis.rows(), slots.q + slots.s);
      D << ts.basis, ts.T;
      const Vector hw = band_half_width(D, m.B, slots.gamma_offset, m.phi);
      const Matrix blk = cov.block(slots.gamma_offset, slots.gamma_offset, D.cols(), D.cols());
      const Vector ref = 1.96 * (D * blk * D.transpose()).diagonal().array().sqrt();
      band = std::max(band, ((hw - ref).array().abs() / ref.array()).maxCoeff());
    }
  }
  d.check(band < 1e-10, "Hadamard vs sandwich rel " + fmt("%.1e", band));

  const auto& c = row(study("poisson1", {200, 800}, 50), 800);
  d.check(c.coverage >= 0.88 && c.coverage <= 0.99, "poisson1 n=800 coverage " + fmt("%.4f", c.coverage));
  return d.outcome();
}

Outcome bike() {
  const char* path = std::getenv("GPLSIAM_BIKE_CSV");
  if (path == nullptr || !std::filesystem::exists(path)) {
    return {Status::skip, "dataset absent (set GPLSIAM_BIKE_CSV to the raw hour.csv)"};
  }
#ifdef GPLSIAM_HAVE_CLI
  namespace fs = std::filesystem;
  const fs::path prepped = fs::temp_directory_path() / "gplsiam_acceptance_bike.csv";
  std::ostringstream out, err;
  if (cli::cmd_prep_bike({path, prepped.string(), 150.0}, out, err) != cli::kExitOk) {
    return {Status::fail, "prep-bike failed: " + err.str()};
  }
  const cli::ModelConfig cfg = cli::load_config(std::string(GPLSIAM_SOURCE_DIR) + "/tools/examples/bike.cfg");
  const cli::Table table = cli::read_csv(prepped.string());
  const cli::Design design = cli::build_design(table, cfg, cli::learn_encoding(table, cfg), true);
  fs::remove(prepped);
  const Problem pb(design.spec, design.data, cfg.fit);
  const auto start = std::chrono::steady_clock::now();
  const FittedModel m = fit(pb);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  Detail d;
  d.check(pb.dim() == 83, "dim " + std::to_string(pb.dim()));
  d.check(m.converged, "converged");
  const double area = cli::auc(design.data.y, m.mu);
  d.check(area >= 0.93, "AUC " + fmt("%.4f", area) + " (>= 0.93)");
  const auto& names = design.spec.linear_names;
  const auto it = std::find(names.begin(), names.end(), "yr=1");
  const double yr = it == names.end() ? NAN : m.psi[it - names.begin()];
  d.check(std::abs(yr - 2.14) <= 0.15, "beta yr=1 " + fmt("%.3f", yr) + " (2.14 +- 0.15)");
  d.check(secs < 60.0, "fit " + fmt("%.2f", secs) + " s (< 60 s)");
  return d.outcome();
#else
  return {Status::skip, "built without the command-line library"};
#endif
}

struct Criterion {
  int id;
  std::string name;
  double limit_seconds;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> criteria{
      {1, "score correctness", 30, score_correctness},
      {2, "linear-algebra oracles", 10, linear_algebra},
      {3, "basis suite", 5, basis_suite},
      {4, "GPLAM reduction", 30, gplam_reduction},
      {5, "Poisson I desk scale", 600, poisson1},
      {6, "Poisson II desk scale", 900, poisson2},
      {7, "Gamma desk scale", 1200, gamma1},
      {8, "Fellner-Schall positivity", 0, positivity},
      {9, "inference identities", 0, inference_identities},
      {10, "bike application", 0, bike},
  };
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));

  int failed = 0;
  for (const auto& c : criteria) {
    if (!only.empty() && only.count(c.id) == 0) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {Status::fail, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::string timing = fmt("%.2f s", secs);
    if (c.limit_seconds > 0) {
      timing += fmt(" (< %.0f s)", c.limit_seconds);
      if (o.status == Status::pass && secs >= c.limit_seconds) {
        o.status = Status::fail;
        o.detail += "; over time limit";
      }
    }
    const char* tag = o.status == Status::pass ? "PASS" : o.status == Status::skip ? "SKIP" : "FAIL";
    std::printf("%s %2d %s: %s [%s]\n", tag, c.id, c.name.c_str(), o.detail.c_str(), timing.c_str());
    std::fflush(stdout);
    failed += o.status == Status::fail ? 1 : 0;
  }
  return failed == 0 ? 0 : 1;
}
