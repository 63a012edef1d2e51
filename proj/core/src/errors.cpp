#include "gplsiam/errors.hpp"

#include <sstream>

namespace gplsiam {

namespace {

std::string span_message(Index observation, double value, double lower, double upper) {
  std::ostringstream os;
  os.precision(17);
  os << "observation " << observation << " has index value " << value
     << " outside the inner knot span [" << lower << ", " << upper << "]";
  return os.str();
}

std::string domain_message(Index observation, double mu, const std::string& family) {
  std::ostringstream os;
  os.precision(17);
  os << "observation " << observation << ": mean " << mu << " outside the " << family
     << " mean domain";
  return os.str();
}

}  // namespace

OutOfKnotSpan::OutOfKnotSpan(Index observation, double value, double lower, double upper)
    : std::out_of_range(span_message(observation, value, lower, upper)),
      observation_(observation),
      value_(value) {}

MeanDomainError::MeanDomainError(Index observation, double mu, const std::string& family)
    : std::domain_error(domain_message(observation, mu, family)), observation_(observation) {}

}  // namespace gplsiam
