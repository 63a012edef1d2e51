#pragma once

#include <vector>

#include "gplsiam/layout.hpp"
#include "gplsiam/types.hpp"

namespace gplsiam {

// Difference penalty for one term in the dropped-last-column parameterization.
struct TermPenalty {
  int dif = 2;
  Matrix D;  // (q+1-dif) x q
  Matrix P;  // q x q, D^T D
};

// Order-`dif` difference matrix on q+1 coefficients with the last column
// dropped (its coefficient is fixed at zero). All q+1-dif rows are kept, so
// the right boundary is still penalized.
TermPenalty difference_penalty(int q, int dif);

// P_lambda = sum_j lambda_j P^j, stored as the per-term gamma~ blocks only.
class BlockPenalty {
 public:
  struct Block {
    Index offset = 0;
    Matrix P;  // unscaled P~^j
  };

  BlockPenalty() = default;
  BlockPenalty(Index dim, std::vector<Block> blocks, Vector lambdas);

  Index dim() const noexcept { return dim_; }
  Index num_terms() const noexcept { return static_cast<Index>(blocks_.size()); }
  const std::vector<Block>& blocks() const noexcept { return blocks_; }
  const Vector& lambdas() const noexcept { return lambdas_; }

  Matrix dense() const;
  // P^j without its smoothing parameter.
  Matrix component(Index j) const;
  // A += scale * P_lambda
  void add_to(Matrix& A, double scale) const;
  Vector apply(const Vector& psi) const;
  double quadratic_form(const Vector& psi) const;
  // gamma~^j' P~^j gamma~^j
  double term_quadratic(Index j, const Vector& psi) const;

  BlockPenalty with_lambdas(const Vector& lambdas) const;

 private:
  Index dim_ = 0;
  std::vector<Block> blocks_;
  Vector lambdas_;
};

// Throws std::invalid_argument if any lambda is not strictly positive.
BlockPenalty assemble_penalty(const CoefficientLayout& layout,
                              const std::vector<TermPenalty>& terms, const Vector& lambdas);

// Blockwise Moore-Penrose pseudo-inverse of P_lambda. Eigenvalues below
// rel_tol * (largest eigenvalue of the block) are treated as zero.
Matrix penalty_pseudo_inverse(const BlockPenalty& penalty, double rel_tol = 1e-10);

}  // namespace gplsiam
