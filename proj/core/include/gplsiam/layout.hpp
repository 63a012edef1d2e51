#pragma once

#include <utility>
#include <vector>

#include "gplsiam/types.hpp"

namespace gplsiam {

// Position of one smooth term's coefficients inside psi.
struct TermSlots {
  Index gamma_offset = 0;
  Index q = 0;
  Index alpha_offset = 0;
  Index s = 0;

  Index block_offset() const noexcept { return gamma_offset; }
  Index block_size() const noexcept { return q + s; }
};

// psi = [beta, gamma~^1, alpha~^1, ..., gamma~^m, alpha~^m]; the order fixes
// where each penalty block and model-matrix column lands.
class CoefficientLayout {
 public:
  CoefficientLayout() = default;
  // terms: (q_j, s_j) per term, in model order.
  CoefficientLayout(Index p, const std::vector<std::pair<Index, Index>>& terms);

  Index p() const noexcept { return p_; }
  Index dim() const noexcept { return dim_; }
  Index num_terms() const noexcept { return static_cast<Index>(terms_.size()); }
  const TermSlots& term(Index j) const { return terms_.at(static_cast<std::size_t>(j)); }
  const std::vector<TermSlots>& terms() const noexcept { return terms_; }

 private:
  Index p_ = 0;
  Index dim_ = 0;
  std::vector<TermSlots> terms_;
};

}  // namespace gplsiam
