#include "gplsiam/layout.hpp"

#include <stdexcept>

namespace gplsiam {

CoefficientLayout::CoefficientLayout(Index p, const std::vector<std::pair<Index, Index>>& terms)
    : p_(p) {
  if (p < 0) throw std::invalid_argument("CoefficientLayout: negative p");
  Index offset = p;
  terms_.reserve(terms.size());
  for (const auto& [q, s] : terms) {
    if (q < 1 || s < 0) throw std::invalid_argument("CoefficientLayout: bad term dimensions");
    TermSlots slots;
    slots.gamma_offset = offset;
    slots.q = q;
    slots.alpha_offset = offset + q;
    slots.s = s;
    terms_.push_back(slots);
    offset += q + s;
  }
  dim_ = offset;
}

}  // namespace gplsiam
