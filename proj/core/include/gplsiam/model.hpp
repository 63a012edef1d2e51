#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gplsiam/basis.hpp"
#include "gplsiam/family.hpp"
#include "gplsiam/layout.hpp"
#include "gplsiam/penalty.hpp"
#include "gplsiam/types.hpp"

namespace gplsiam {

enum class TermKind { plain_smooth, single_index };

// One smooth term. Group interactions are expressed as one term per group
// level, each with its own mask in TermData.
struct TermSpec {
  std::string name;
  TermKind kind = TermKind::single_index;
  std::vector<std::string> covariates;
  int q = 9;
  int order = 4;
  int dif = 2;
  std::string group_column;  // empty when the term covers every row
  std::string group_level;
};

struct ModelSpec {
  Family family{FamilyKind::gaussian};
  std::vector<std::string> linear_names;  // one per column of X
  std::vector<TermSpec> terms;
};

struct TermData {
  Matrix Z;                   // n x (s+1); a plain smooth has one column
  std::vector<uint8_t> mask;  // empty = all rows active
};

struct Dataset {
  Vector y;
  Matrix X;
  Vector offset;  // empty = zero
  std::vector<TermData> terms;

  Index n() const noexcept { return y.size(); }
};

struct FitConfig {
  double eps_knot = 0.001;
  double ridge = 1e-7;
  double tol_met = 1e-6;
  int max_model_iter = 80;
  int max_total_iter = 500;
  double met_explosion = 1e6;
  double alpha1_floor = 0.05;
  // Restart when any index term has alpha_1 below the floor (false) or only
  // when all of them do (true).
  bool alpha1_all_terms = false;
  double init_alpha_max = 0.8;
  double init_alpha1_min = 0.2;
  int init_alpha_attempts = 100;
  double init_lambda_lo = 1.0;
  double init_lambda_hi = 1000.0;
  double init_phi_lo = 1.0;
  double init_phi_hi = 100.0;
  double start_lambda = 10.0;  // fixed smoothing parameter for the starting smooths
  double lambda_ceiling = 1e7;
  double lambda_floor = 1e-10;
  uint64_t seed = 1;

  // Throws std::invalid_argument naming the first bad field.
  void validate() const;
};

// Validated, row-compacted view of a spec and its data.
class Problem {
 public:
  struct Term {
    std::string name;
    TermKind kind;
    int s;
    int q;
    int order;
    int dif;
    std::vector<Index> rows;  // active rows, ascending
    Matrix Z;                 // rows.size() x (s+1)
    TermPenalty penalty;
  };

  Problem(ModelSpec spec, const Dataset& data, FitConfig config = {});

  const ModelSpec& spec() const noexcept { return spec_; }
  const FitConfig& config() const noexcept { return config_; }
  const Family& family() const noexcept { return spec_.family; }
  const CoefficientLayout& layout() const noexcept { return layout_; }
  const std::vector<Term>& terms() const noexcept { return terms_; }
  const Vector& y() const noexcept { return y_; }
  const Matrix& X() const noexcept { return X_; }
  const Vector& offset() const noexcept { return offset_; }
  Index n() const noexcept { return y_.size(); }
  Index p() const noexcept { return X_.cols(); }
  Index dim() const noexcept { return layout_.dim(); }
  Index num_index_terms() const noexcept;

  std::vector<TermPenalty> penalties() const;

 private:
  ModelSpec spec_;
  FitConfig config_;
  Vector y_;
  Matrix X_;
  Vector offset_;
  std::vector<Term> terms_;
  CoefficientLayout layout_;
};

}  // namespace gplsiam
