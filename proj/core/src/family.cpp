#include "gplsiam/family.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include <boost/math/distributions/normal.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "gplsiam/errors.hpp"

namespace gplsiam {

namespace {

constexpr double kMuFloor = 1e-10;

LinkKind canonical_link(FamilyKind f) {
  switch (f) {
    case FamilyKind::gaussian: return LinkKind::identity;
    case FamilyKind::poisson: return LinkKind::log;
    case FamilyKind::gamma: return LinkKind::inverse;
    case FamilyKind::bernoulli: return LinkKind::logit;
  }
  return LinkKind::identity;
}

bool link_allowed(FamilyKind f, LinkKind l) {
  switch (f) {
    case FamilyKind::gaussian:
      return l == LinkKind::identity || l == LinkKind::log || l == LinkKind::inverse;
    case FamilyKind::poisson: return l == LinkKind::log || l == LinkKind::identity;
    case FamilyKind::gamma: return l == LinkKind::inverse || l == LinkKind::log;
    case FamilyKind::bernoulli: return l == LinkKind::logit;
  }
  return false;
}

double std_normal_quantile(double p) {
  static const boost::math::normal_distribution<double> z;
  return boost::math::quantile(z, std::clamp(p, 1e-16, 1.0 - 1e-16));
}

}  // namespace

std::string_view to_string(FamilyKind f) {
  switch (f) {
    case FamilyKind::gaussian: return "gaussian";
    case FamilyKind::poisson: return "poisson";
    case FamilyKind::gamma: return "gamma";
    case FamilyKind::bernoulli: return "bernoulli";
  }
  return "?";
}

std::string_view to_string(LinkKind l) {
  switch (l) {
    case LinkKind::identity: return "identity";
    case LinkKind::log: return "log";
    case LinkKind::inverse: return "inverse";
    case LinkKind::logit: return "logit";
  }
  return "?";
}

FamilyKind parse_family(std::string_view name) {
  for (auto f : {FamilyKind::gaussian, FamilyKind::poisson, FamilyKind::gamma,
                 FamilyKind::bernoulli}) {
    if (to_string(f) == name) return f;
  }
  if (name == "binomial") return FamilyKind::bernoulli;
  throw std::invalid_argument("unknown family '" + std::string(name) +
                              "' (expected gaussian, poisson, gamma or bernoulli)");
}

LinkKind parse_link(std::string_view name) {
  for (auto l : {LinkKind::identity, LinkKind::log, LinkKind::inverse, LinkKind::logit}) {
    if (to_string(l) == name) return l;
  }
  throw std::invalid_argument("unknown link '" + std::string(name) + "'");
}

Family::Family(FamilyKind kind) : Family(kind, canonical_link(kind)) {}

Family::Family(FamilyKind kind, LinkKind link) : kind_(kind), link_(link) {
  if (!link_allowed(kind, link)) {
    throw std::invalid_argument("link " + std::string(to_string(link)) +
                                " is not supported for family " +
                                std::string(to_string(kind)));
  }
}

bool Family::canonical() const noexcept { return link_ == canonical_link(kind_); }

std::string Family::name() const {
  return std::string(to_string(kind_)) + "/" + std::string(to_string(link_));
}

double Family::linkfun(double mu) const {
  switch (link_) {
    case LinkKind::identity: return mu;
    case LinkKind::log: return std::log(mu);
    case LinkKind::inverse: return 1.0 / mu;
    case LinkKind::logit: return std::log(mu / (1.0 - mu));
  }
  return mu;
}

double Family::linkinv(double eta) const {
  switch (link_) {
    case LinkKind::identity: return eta;
    case LinkKind::log: return std::exp(eta);
    case LinkKind::inverse: return 1.0 / eta;
    case LinkKind::logit: return 1.0 / (1.0 + std::exp(-eta));
  }
  return eta;
}

double Family::mu_eta_inv(double mu) const {
  switch (link_) {
    case LinkKind::identity: return 1.0;
    case LinkKind::log: return 1.0 / mu;
    case LinkKind::inverse: return -1.0 / (mu * mu);
    case LinkKind::logit: return 1.0 / (mu * (1.0 - mu));
  }
  return 1.0;
}

double Family::variance(double mu) const {
  switch (kind_) {
    case FamilyKind::gaussian: return 1.0;
    case FamilyKind::poisson: return mu;
    case FamilyKind::gamma: return mu * mu;
    case FamilyKind::bernoulli: return mu * (1.0 - mu);
  }
  return 1.0;
}

bool Family::valid_mu(double mu) const noexcept {
  if (!std::isfinite(mu)) return false;
  switch (kind_) {
    case FamilyKind::gaussian: return link_ != LinkKind::log || mu > 0.0;
    case FamilyKind::poisson:
    case FamilyKind::gamma: return mu > 0.0;
    case FamilyKind::bernoulli: return mu > 0.0 && mu < 1.0;
  }
  return false;
}

bool Family::valid_y(double y) const noexcept {
  if (!std::isfinite(y)) return false;
  switch (kind_) {
    case FamilyKind::gaussian: return true;
    case FamilyKind::poisson: return y >= 0.0 && y == std::floor(y);
    case FamilyKind::gamma: return y > 0.0;
    case FamilyKind::bernoulli: return y == 0.0 || y == 1.0;
  }
  return false;
}

bool Family::clamp_mu(double& mu) const noexcept {
  if (std::isnan(mu)) return false;
  const bool positive = kind_ == FamilyKind::poisson || kind_ == FamilyKind::gamma ||
                        (kind_ == FamilyKind::gaussian && link_ == LinkKind::log);
  if (kind_ == FamilyKind::bernoulli) {
    const double c = std::clamp(mu, kMuFloor, 1.0 - kMuFloor);
    const bool moved = c != mu;
    mu = c;
    return moved;
  }
  if (positive && mu < kMuFloor) {
    mu = kMuFloor;
    return true;
  }
  return false;
}

double Family::loglik(double y, double mu, double phi) const {
  switch (kind_) {
    case FamilyKind::gaussian: {
      const double r = y - mu;
      return 0.5 * std::log(phi / (2.0 * std::numbers::pi)) - 0.5 * phi * r * r;
    }
    case FamilyKind::poisson:
      return (y > 0.0 ? y * std::log(mu) : 0.0) - mu - std::lgamma(y + 1.0);
    case FamilyKind::gamma:
      return phi * std::log(phi) - std::lgamma(phi) + (phi - 1.0) * std::log(y) - phi * y / mu -
             phi * std::log(mu);
    case FamilyKind::bernoulli:
      return y > 0.5 ? std::log(mu) : std::log1p(-mu);
  }
  return 0.0;
}

double Family::cdf(double y, double mu, double phi) const {
  switch (kind_) {
    case FamilyKind::gaussian: {
      static const boost::math::normal_distribution<double> z;
      return boost::math::cdf(z, (y - mu) * std::sqrt(phi));
    }
    case FamilyKind::poisson:
      if (y < 0.0) return 0.0;
      return boost::math::gamma_q(std::floor(y) + 1.0, mu);
    case FamilyKind::gamma:
      if (y <= 0.0) return 0.0;
      return boost::math::gamma_p(phi, y * phi / mu);
    case FamilyKind::bernoulli:
      if (y < 0.0) return 0.0;
      return y < 1.0 ? 1.0 - mu : 1.0;
  }
  return 0.0;
}

Vector Family::mean(const Vector& eta, Index* clamped) const {
  Vector mu(eta.size());
  Index count = 0;
  for (Index i = 0; i < eta.size(); ++i) {
    double m = linkinv(eta[i]);
    if (clamp_mu(m)) ++count;
    mu[i] = m;
  }
  if (clamped) *clamped += count;
  return mu;
}

WeightsVariance weights_and_variance(const Vector& mu, const Family& family) {
  WeightsVariance out{Vector(mu.size()), Vector(mu.size())};
  for (Index i = 0; i < mu.size(); ++i) {
    const double m = mu[i];
    if (!family.valid_mu(m)) throw MeanDomainError(i, m, family.name());
    const double v = family.variance(m);
    const double g = family.mu_eta_inv(m);
    const double w = 1.0 / (g * g * v);
    if (!(v > 0.0) || !std::isfinite(w)) throw MeanDomainError(i, m, family.name());
    out.v[i] = v;
    out.w[i] = w;
  }
  return out;
}

Vector working_response(const Vector& m_psi, const Vector& y, const Vector& mu,
                        const Family& family) {
  Vector z(y.size());
  for (Index i = 0; i < y.size(); ++i) {
    z[i] = m_psi[i] + family.mu_eta_inv(mu[i]) * (y[i] - mu[i]);
  }
  return z;
}

double loglik(const Vector& y, const Vector& mu, double phi, const Family& family) {
  double total = 0.0;
  for (Index i = 0; i < y.size(); ++i) total += family.loglik(y[i], mu[i], phi);
  return total;
}

double update_phi(const Vector& y, const Vector& mu, const Vector& v, double edf,
                  const Family& family) {
  if (family.fixed_dispersion()) return 1.0;
  const double n = static_cast<double>(y.size());
  if (!(edf < n)) throw std::invalid_argument("update_phi: edf must be < n");
  const double pearson = ((y - mu).array().square() / v.array()).sum();
  if (!(pearson > 0.0) || !std::isfinite(pearson)) {
    throw std::domain_error("update_phi: Pearson sum is zero or not finite (degenerate fit)");
  }
  return (n - edf) / pearson;
}

Matrix quantile_residuals(const Vector& y, const Vector& mu, double phi, const Family& family,
                          std::mt19937_64& rng, int replicates) {
  if (replicates < 1) throw std::invalid_argument("quantile_residuals: replicates must be >= 1");
  const Index n = y.size();
  Matrix out(n, replicates);
  const bool discrete =
      family.kind() == FamilyKind::poisson || family.kind() == FamilyKind::bernoulli;
  if (!discrete) {
    Vector r(n);
    for (Index i = 0; i < n; ++i) {
      r[i] = family.kind() == FamilyKind::gaussian
                 ? (y[i] - mu[i]) * std::sqrt(phi)
                 : std_normal_quantile(family.cdf(y[i], mu[i], phi));
    }
    out.colwise() = r;
    return out;
  }
  Vector a(n), b(n);
  for (Index i = 0; i < n; ++i) {
    a[i] = family.cdf(y[i] - 1.0, mu[i], phi);
    b[i] = family.cdf(y[i], mu[i], phi);
  }
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int r = 0; r < replicates; ++r) {
    for (Index i = 0; i < n; ++i) {
      out(i, r) = std_normal_quantile(a[i] + unif(rng) * (b[i] - a[i]));
    }
  }
  return out;
}

}  // namespace gplsiam
