#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "gplsiam/fit.hpp"
#include "gplsiam/model.hpp"
#include "gplsiam/types.hpp"

namespace gplsiam::sim {

enum class ScenarioKind { poisson1, gamma1, poisson2 };

struct Scenario {
  ScenarioKind kind = ScenarioKind::poisson1;
  std::string name;
  Family family{FamilyKind::poisson};
  Vector beta;                    // intercept, x
  std::vector<Vector> direction;  // unnormalized index directions
  std::vector<Vector> alpha;      // unit-norm truth
  std::vector<std::function<double(double)>> f;
  bool standardize_z = true;
  double phi = 1.0;  // gamma precision
  int q = 9;
  int order = 4;
  int dif = 2;

  Index num_terms() const noexcept { return static_cast<Index>(alpha.size()); }
  // p + sum(q + s)
  Index dim() const;
};

std::vector<std::string> scenario_names();
// Throws std::invalid_argument listing the valid names.
Scenario make_scenario(std::string_view name);

// Covariates and true linear predictor for one (scenario, n); shared by all
// replicates.
struct Design {
  Index n = 0;
  Vector x;
  std::vector<Matrix> Z;      // as used by the fit (standardized if required)
  std::vector<Vector> u;      // true index values
  std::vector<Vector> f;      // sample-centered true smooths
  Vector eta;
};

uint64_t stream_seed(uint64_t master, std::string_view scenario, Index n, int replicate,
                     std::string_view tag);

Design make_design(const Scenario& sc, Index n, uint64_t master_seed);

// Response draw for one replicate; only y depends on the replicate index.
Dataset generate(const Scenario& sc, const Design& design, uint64_t master_seed, int replicate);

ModelSpec scenario_spec(const Scenario& sc);

struct Classification {
  std::vector<double> rel_error;
  double max_rel_error = 0.0;
  bool unstable = false;
};

// Unstable iff any relative error exceeds 0.5.
Classification classify(const std::vector<Vector>& alpha_hat, const std::vector<Vector>& truth);

struct StudyConfig {
  std::vector<Index> n_list{200};
  int replicates = 50;
  int jobs = 1;
  uint64_t seed = 1;
  FitConfig fit;
  bool collect_grid = true;
  int grid_points = 41;
};

struct ReplicateRecord {
  std::string scenario;
  Index n = 0;
  int replicate = 0;
  std::vector<double> rel_error;
  std::vector<Vector> alpha_hat;
  bool unstable = true;
  bool failed = false;
  bool converged = false;
  int restarts = 0;
  int iterations = 0;
  double seconds = 0.0;
  double phi = 0.0;
  Index numerator_violations = 0;
  Index lambda_caps = 0;
  std::vector<double> edf_alpha_gap;  // |edf_alpha - s| per term
  std::string error;
};

struct GridRecord {
  int term = 0;
  Index n = 0;
  int replicate = 0;
  Vector u;
  Vector fhat;
  Vector lower;
  Vector upper;
  Vector truth;
};

struct AggregateRow {
  Index n = 0;
  int replicates = 0;
  int unstable = 0;
  int failed = 0;
  double instability_rate = 0.0;
  double mean_rel_error = 0.0;    // stable fits, averaged over terms
  double median_rel_error = 0.0;
  double phi_mean = 0.0;          // stable fits
  Index numerator_violations = 0;
  double coverage = 0.0;          // pointwise, stable fits with grids
};

struct TimingRow {
  Index n = 0;
  double mean = 0.0;
  double median = 0.0;
  double p90 = 0.0;
  double max = 0.0;
};

struct StudyResult {
  std::string scenario;
  std::vector<ReplicateRecord> replicates;
  std::vector<GridRecord> grid;
  std::vector<AggregateRow> aggregate;
  std::vector<TimingRow> timing;
};

// True f~ on a grid: f(u) minus the design-sample mean of f.
Vector true_smooth(const Scenario& sc, const Design& design, int term, const Vector& grid);

ReplicateRecord run_replicate(const Scenario& sc, const Design& design, const StudyConfig& cfg,
                              int replicate, std::vector<GridRecord>* grid);

StudyResult run_study(const Scenario& sc, const StudyConfig& cfg);

// replicates.csv, aggregate.csv, timing.csv, grid.csv
void write_study(const StudyResult& result, const std::string& directory);

}  // namespace gplsiam::sim
