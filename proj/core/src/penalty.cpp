#include "gplsiam/penalty.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace gplsiam {

TermPenalty difference_penalty(int q, int dif) {
  if (dif < 1) throw std::invalid_argument("difference_penalty: dif must be >= 1");
  if (dif >= q) {
    throw std::invalid_argument("difference_penalty: dif (" + std::to_string(dif) +
                                ") must be < q (" + std::to_string(q) + ")");
  }
  // Repeated first differences of the (q+1)-identity.
  Matrix full = Matrix::Identity(q + 1, q + 1);
  for (int o = 0; o < dif; ++o) {
    const Index rows = full.rows() - 1;
    full = (full.bottomRows(rows) - full.topRows(rows)).eval();
  }
  TermPenalty tp;
  tp.dif = dif;
  tp.D = full.leftCols(q);
  tp.P = tp.D.transpose() * tp.D;
  return tp;
}

BlockPenalty::BlockPenalty(Index dim, std::vector<Block> blocks, Vector lambdas)
    : dim_(dim), blocks_(std::move(blocks)), lambdas_(std::move(lambdas)) {
  if (static_cast<Index>(blocks_.size()) != lambdas_.size()) {
    throw std::invalid_argument("BlockPenalty: one lambda per block required");
  }
  for (const auto& b : blocks_) {
    if (b.offset < 0 || b.offset + b.P.rows() > dim_ || b.P.rows() != b.P.cols()) {
      throw std::invalid_argument("BlockPenalty: block outside coefficient range");
    }
  }
}

Matrix BlockPenalty::dense() const {
  Matrix out = Matrix::Zero(dim_, dim_);
  add_to(out, 1.0);
  return out;
}

Matrix BlockPenalty::component(Index j) const {
  const auto& b = blocks_.at(static_cast<std::size_t>(j));
  Matrix out = Matrix::Zero(dim_, dim_);
  out.block(b.offset, b.offset, b.P.rows(), b.P.cols()) = b.P;
  return out;
}

void BlockPenalty::add_to(Matrix& A, double scale) const {
  for (std::size_t j = 0; j < blocks_.size(); ++j) {
    const auto& b = blocks_[j];
    A.block(b.offset, b.offset, b.P.rows(), b.P.cols()) +=
        (scale * lambdas_[static_cast<Index>(j)]) * b.P;
  }
}

Vector BlockPenalty::apply(const Vector& psi) const {
  Vector out = Vector::Zero(dim_);
  for (std::size_t j = 0; j < blocks_.size(); ++j) {
    const auto& b = blocks_[j];
    out.segment(b.offset, b.P.rows()) =
        lambdas_[static_cast<Index>(j)] * (b.P * psi.segment(b.offset, b.P.rows()));
  }
  return out;
}

double BlockPenalty::term_quadratic(Index j, const Vector& psi) const {
  const auto& b = blocks_.at(static_cast<std::size_t>(j));
  const auto g = psi.segment(b.offset, b.P.rows());
  return g.dot(b.P * g);
}

double BlockPenalty::quadratic_form(const Vector& psi) const {
  double total = 0.0;
  for (Index j = 0; j < num_terms(); ++j) total += lambdas_[j] * term_quadratic(j, psi);
  return total;
}

BlockPenalty BlockPenalty::with_lambdas(const Vector& lambdas) const {
  return BlockPenalty(dim_, blocks_, lambdas);
}

BlockPenalty assemble_penalty(const CoefficientLayout& layout,
                              const std::vector<TermPenalty>& terms, const Vector& lambdas) {
  if (static_cast<Index>(terms.size()) != layout.num_terms() ||
      lambdas.size() != layout.num_terms()) {
    throw std::invalid_argument("assemble_penalty: term count mismatch");
  }
  for (Index j = 0; j < lambdas.size(); ++j) {
    if (!(lambdas[j] > 0.0)) {
      throw std::invalid_argument("assemble_penalty: lambda_" + std::to_string(j + 1) +
                                  " must be > 0");
    }
  }
  std::vector<BlockPenalty::Block> blocks;
  blocks.reserve(terms.size());
  for (Index j = 0; j < layout.num_terms(); ++j) {
    const auto& slots = layout.term(j);
    const auto& tp = terms[static_cast<std::size_t>(j)];
    if (tp.P.rows() != slots.q) throw std::invalid_argument("assemble_penalty: block size != q");
    blocks.push_back({slots.gamma_offset, tp.P});
  }
  return BlockPenalty(layout.dim(), std::move(blocks), lambdas);
}

Matrix penalty_pseudo_inverse(const BlockPenalty& penalty, double rel_tol) {
  Matrix out = Matrix::Zero(penalty.dim(), penalty.dim());
  for (Index j = 0; j < penalty.num_terms(); ++j) {
    const auto& b = penalty.blocks()[static_cast<std::size_t>(j)];
    const Matrix scaled = penalty.lambdas()[j] * b.P;
    Eigen::SelfAdjointEigenSolver<Matrix> es(scaled);
    const Vector& ev = es.eigenvalues();
    const double cutoff = rel_tol * std::max(ev.cwiseAbs().maxCoeff(), 0.0);
    Vector inv = Vector::Zero(ev.size());
    for (Index k = 0; k < ev.size(); ++k) {
      if (ev[k] > cutoff && ev[k] > 0.0) inv[k] = 1.0 / ev[k];
    }
    out.block(b.offset, b.offset, b.P.rows(), b.P.cols()) =
        es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().transpose();
  }
  return out;
}

}  // namespace gplsiam
