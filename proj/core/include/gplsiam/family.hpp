#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <string_view>

#include "gplsiam/types.hpp"

namespace gplsiam {

enum class FamilyKind { gaussian, poisson, gamma, bernoulli };
enum class LinkKind { identity, log, inverse, logit };

std::string_view to_string(FamilyKind f);
std::string_view to_string(LinkKind l);
FamilyKind parse_family(std::string_view name);
LinkKind parse_link(std::string_view name);

// phi is a precision throughout: gaussian variance is 1/phi, the gamma shape
// parameter is phi, and poisson/bernoulli have phi = 1.
class Family {
 public:
  explicit Family(FamilyKind kind);
  Family(FamilyKind kind, LinkKind link);

  FamilyKind kind() const noexcept { return kind_; }
  LinkKind link() const noexcept { return link_; }
  bool canonical() const noexcept;
  bool fixed_dispersion() const noexcept {
    return kind_ == FamilyKind::poisson || kind_ == FamilyKind::bernoulli;
  }
  std::string name() const;

  double linkfun(double mu) const;
  double linkinv(double eta) const;
  // g'(mu), signed.
  double mu_eta_inv(double mu) const;
  double variance(double mu) const;
  bool valid_mu(double mu) const noexcept;
  bool valid_y(double y) const noexcept;
  // Moves mu back inside the working domain; returns true if it had to.
  bool clamp_mu(double& mu) const noexcept;
  // Per-observation log density with exact normalizing terms.
  double loglik(double y, double mu, double phi) const;
  double cdf(double y, double mu, double phi) const;

  // mu = g^{-1}(eta) elementwise with domain clamping; counts clamps.
  Vector mean(const Vector& eta, Index* clamped = nullptr) const;

 private:
  FamilyKind kind_;
  LinkKind link_;
};

struct WeightsVariance {
  Vector w;  // omega_i = 1 / (g'(mu_i)^2 V_i)
  Vector v;  // V_i
};

// Throws MeanDomainError naming the first observation outside the domain.
WeightsVariance weights_and_variance(const Vector& mu, const Family& family);

// M psi + g'(mu)(y - mu). The W^{-1/2}V^{-1/2} form gives the same
// quantity whenever g' > 0; the signed g' keeps inverse links correct.
Vector working_response(const Vector& m_psi, const Vector& y, const Vector& mu,
                        const Family& family);

double loglik(const Vector& y, const Vector& mu, double phi, const Family& family);

// (n - edf) / sum (y - mu)^2 / V. Returns 1 for fixed-dispersion families.
double update_phi(const Vector& y, const Vector& mu, const Vector& v, double edf,
                  const Family& family);

// n x replicates matrix of (randomized) quantile residuals.
Matrix quantile_residuals(const Vector& y, const Vector& mu, double phi, const Family& family,
                          std::mt19937_64& rng, int replicates);

}  // namespace gplsiam
