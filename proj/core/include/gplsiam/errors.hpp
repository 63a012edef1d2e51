#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "gplsiam/types.hpp"

namespace gplsiam {

// Symmetric matrix could not be factorized. The fitting loop treats this as a
// restart signal (identifiability failure at the current iterate).
class NotPositiveDefinite : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// An evaluation point fell outside the inner knot span. At fit time this means
// the knots are stale and must be rebuilt before evaluating the basis.
class OutOfKnotSpan : public std::out_of_range {
 public:
  OutOfKnotSpan(Index observation, double value, double lower, double upper);
  Index observation() const noexcept { return observation_; }
  double value() const noexcept { return value_; }

 private:
  Index observation_;
  double value_;
};

// Index covariate with zero range: its smooth is unidentifiable.
class DegenerateIndex : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A mean value outside the family's domain reached a kernel that needs it.
class MeanDomainError : public std::domain_error {
 public:
  MeanDomainError(Index observation, double mu, const std::string& family);
  Index observation() const noexcept { return observation_; }

 private:
  Index observation_;
};

// Penalized log-likelihood iteration budget exhausted without any saved model.
class NonConvergence : public std::runtime_error {
 public:
  NonConvergence(const std::string& what, std::vector<double> met_trace)
      : std::runtime_error(what), met_trace_(std::move(met_trace)) {}
  const std::vector<double>& met_trace() const noexcept { return met_trace_; }

 private:
  std::vector<double> met_trace_;
};

}  // namespace gplsiam
