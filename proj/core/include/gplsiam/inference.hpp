#pragma once

#include <string>
#include <vector>

#include "gplsiam/fit.hpp"
#include "gplsiam/layout.hpp"
#include "gplsiam/types.hpp"

namespace gplsiam {

struct EdfResult {
  double total = 0.0;
  Vector per_coef;
  // [beta, gamma~1, alpha~1, ..., gamma~m, alpha~m]
  Vector per_block;
};

// tr(cp(B) cp(M~)) and its per-coefficient diagonal contributions.
EdfResult effective_df(const Matrix& B, const Matrix& crossprod, const CoefficientLayout& layout);

struct CoefRow {
  std::string name;
  double estimate = 0.0;
  double se = 0.0;
  double z = 0.0;
  double p = 1.0;
};

struct TermRow {
  std::string name;
  double edf = 0.0;        // gamma~ block
  double edf_alpha = 0.0;  // alpha~ block
  int q = 0;
  double lambda = 0.0;
  Vector alpha;
};

struct InferenceReport {
  std::vector<CoefRow> coefficients;  // beta then every alpha~ block
  std::vector<TermRow> terms;
};

// SE = sqrt(diag(B'B) / phi), two-sided normal p-values.
InferenceReport coef_table(const FittedModel& model);

// Half-widths 1.96 sqrt(rowSums((D B_blk')^2) / phi) for design rows D of
// the block starting at `offset`.
Vector band_half_width(const Matrix& D, const Matrix& B, Index offset, double phi);

struct Band {
  Vector u;
  Vector fhat;
  Vector half_width;
  Vector lower() const { return fhat - half_width; }
  Vector upper() const { return fhat + half_width; }
};

// Band at the observed index values of term j (sorted by u).
Band observed_band(const FittedModel& model, const Problem& problem, Index term);

// Band on a grid of index values: f^ evaluated directly, half-widths
// linearly interpolated from the observed points. Throws OutOfKnotSpan for
// grid points outside the stored knot span.
Band confidence_band(const FittedModel& model, const Problem& problem, Index term,
                     const Vector& grid);

}  // namespace gplsiam
