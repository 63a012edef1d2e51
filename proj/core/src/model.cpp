#include "gplsiam/model.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace gplsiam {

namespace {

void require(bool ok, const std::string& msg) {
  if (!ok) throw std::invalid_argument(msg);
}

}  // namespace

void FitConfig::validate() const {
  require(eps_knot > 0.0, "FitConfig: eps_knot must be > 0");
  require(ridge >= 0.0, "FitConfig: ridge must be >= 0");
  require(tol_met > 0.0, "FitConfig: tol_met must be > 0");
  require(max_model_iter > 0, "FitConfig: max_model_iter must be > 0");
  require(max_total_iter > 0, "FitConfig: max_total_iter must be > 0");
  require(met_explosion > 0.0, "FitConfig: met_explosion must be > 0");
  require(alpha1_floor > 0.0 && alpha1_floor < 1.0, "FitConfig: alpha1_floor must be in (0,1)");
  require(init_alpha_max > 0.0 && init_alpha_max <= 1.0, "FitConfig: init_alpha_max must be in (0,1]");
  require(init_alpha1_min >= 0.0 && init_alpha1_min < 1.0,
          "FitConfig: init_alpha1_min must be in [0,1)");
  require(init_alpha_attempts > 0, "FitConfig: init_alpha_attempts must be > 0");
  require(init_lambda_lo > 0.0 && init_lambda_hi >= init_lambda_lo,
          "FitConfig: lambda init range must be positive and ordered");
  require(init_phi_lo > 0.0 && init_phi_hi >= init_phi_lo,
          "FitConfig: phi init range must be positive and ordered");
  require(start_lambda > 0.0, "FitConfig: start_lambda must be > 0");
  require(lambda_floor > 0.0 && lambda_ceiling > lambda_floor,
          "FitConfig: lambda floor/ceiling must satisfy 0 < floor < ceiling");
}

Problem::Problem(ModelSpec spec, const Dataset& data, FitConfig config)
    : spec_(std::move(spec)), config_(config), y_(data.y), X_(data.X) {
  config_.validate();
  const Index n = data.n();
  require(n > 0, "Problem: empty data");
  require(X_.rows() == n, "Problem: X has " + std::to_string(X_.rows()) + " rows, y has " +
                              std::to_string(n));
  require(data.terms.size() == spec_.terms.size(), "Problem: one TermData per TermSpec required");
  offset_ = data.offset.size() == 0 ? Vector::Zero(n) : data.offset;
  require(offset_.size() == n, "Problem: offset length mismatch");
  require(X_.allFinite() && offset_.allFinite(), "Problem: non-finite linear covariates or offset");
  for (Index i = 0; i < n; ++i) {
    require(spec_.family.valid_y(y_[i]), "Problem: response value " + std::to_string(y_[i]) +
                                             " at row " + std::to_string(i) +
                                             " is outside the support of " +
                                             spec_.family.name());
  }
  if (!spec_.linear_names.empty()) {
    require(static_cast<Index>(spec_.linear_names.size()) == X_.cols(),
            "Problem: linear_names does not match X columns");
  }

  std::vector<std::pair<Index, Index>> dims;
  for (std::size_t j = 0; j < spec_.terms.size(); ++j) {
    const TermSpec& ts = spec_.terms[j];
    const TermData& td = data.terms[j];
    const std::string label = "term '" + ts.name + "'";
    require(td.Z.rows() == n, label + ": Z row count mismatch");
    require(td.Z.allFinite(), label + ": non-finite covariates");
    require(ts.order >= 1, label + ": order must be >= 1");
    require(ts.q >= ts.order, label + ": q must be >= d");
    require(ts.dif >= 1 && ts.dif < ts.q, label + ": dif must satisfy 1 <= dif < q");
    if (ts.kind == TermKind::single_index) {
      require(td.Z.cols() >= 2, label + ": single-index term needs >= 2 covariates");
    } else {
      require(td.Z.cols() == 1, label + ": plain smooth takes exactly one covariate");
    }
    Term t;
    t.name = ts.name;
    t.kind = ts.kind;
    t.s = static_cast<int>(td.Z.cols()) - 1;
    t.q = ts.q;
    t.order = ts.order;
    t.dif = ts.dif;
    if (td.mask.empty()) {
      t.rows.resize(static_cast<std::size_t>(n));
      for (Index i = 0; i < n; ++i) t.rows[static_cast<std::size_t>(i)] = i;
    } else {
      require(static_cast<Index>(td.mask.size()) == n, label + ": mask length mismatch");
      for (Index i = 0; i < n; ++i) {
        if (td.mask[static_cast<std::size_t>(i)]) t.rows.push_back(i);
      }
    }
    require(static_cast<int>(t.rows.size()) >= ts.q + 1,
            label + ": fewer active rows than basis functions");
    t.Z.resize(static_cast<Index>(t.rows.size()), td.Z.cols());
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
      t.Z.row(static_cast<Index>(r)) = td.Z.row(t.rows[r]);
    }
    t.penalty = difference_penalty(ts.q, ts.dif);
    dims.emplace_back(ts.q, ts.kind == TermKind::single_index ? t.s : 0);
    terms_.push_back(std::move(t));
  }
  layout_ = CoefficientLayout(X_.cols(), dims);
  require(n > layout_.dim(), "Problem: need more observations (" + std::to_string(n) +
                                 ") than coefficients (" + std::to_string(layout_.dim()) + ")");
}

Index Problem::num_index_terms() const noexcept {
  Index k = 0;
  for (const auto& t : terms_) k += t.kind == TermKind::single_index ? 1 : 0;
  return k;
}

std::vector<TermPenalty> Problem::penalties() const {
  std::vector<TermPenalty> out;
  out.reserve(terms_.size());
  for (const auto& t : terms_) out.push_back(t.penalty);
  return out;
}

}  // namespace gplsiam
