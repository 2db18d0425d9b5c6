#include "bisurv/copula.hpp"

#include <algorithm>
#include <cfloat>
#include <cmath>

#include "bisurv/errors.hpp"

namespace bisurv {
namespace {

void check_phi(double phi) {
  if (!(phi > 0.0) || !std::isfinite(phi)) throw DomainError("Clayton parameter must be positive", phi);
}

double checked_log(double s) {
  if (!(s > 0.0 && s <= 1.0)) throw DomainError("survival value outside (0, 1]", s);
  return std::log(s);
}

void check_log_survival(double log_s) {
  if (!(log_s <= 0.0)) throw DomainError("log-survival must be <= 0", log_s);
}

// a = -log(s)/phi, i.e. s^{-1/phi} = exp(a).
struct Exponents {
  double a1, a2, log_bracket;
};

// log(exp(a1) + exp(a2) - 1) without forming the powers, for a1, a2 >= 0.
// The result is >= max(a1, a2) >= 0, so the bracket never drops below one.
Exponents exponents(double log_s1, double log_s2, double phi) {
  const double a1 = -log_s1 / phi;
  const double a2 = -log_s2 / phi;
  const double hi = std::max(a1, a2);
  const double lo = std::min(a1, a2);
  const double log_bracket = hi + std::log1p(std::exp(lo - hi) * -std::expm1(-lo));
  return {a1, a2, log_bracket};
}

double softplus(double x) { return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

}  // namespace

double log_joint_survival(double log_s1, double log_s2, double phi) {
  check_phi(phi);
  check_log_survival(log_s1);
  check_log_survival(log_s2);
  if (log_s2 == 0.0) return log_s1;
  if (log_s1 == 0.0) return log_s2;
  return -phi * exponents(log_s1, log_s2, phi).log_bracket;
}

double log_partial_factor(double log_s_self, double log_s_other, double phi) {
  check_phi(phi);
  check_log_survival(log_s_self);
  check_log_survival(log_s_other);
  const Exponents e = exponents(log_s_self, log_s_other, phi);
  return (-phi - 1.0) * e.log_bracket + e.a1;
}

double log_density_factor(double log_s1, double log_s2, double phi) {
  check_phi(phi);
  check_log_survival(log_s1);
  check_log_survival(log_s2);
  const Exponents e = exponents(log_s1, log_s2, phi);
  return e.a1 + e.a2 + (-phi - 2.0) * e.log_bracket + std::log1p(1.0 / phi);
}

double joint_survival(double s1, double s2, ClaytonParam phi) {
  const double l1 = checked_log(s1);
  const double l2 = checked_log(s2);
  if (s2 == 1.0) return s1;
  if (s1 == 1.0) return s2;
  return std::exp(log_joint_survival(l1, l2, phi.phi));
}

double copula_partial_factor(double s_self, double s_other, ClaytonParam phi) {
  return std::exp(log_partial_factor(checked_log(s_self), checked_log(s_other), phi.phi));
}

double copula_density_factor(double s1, double s2, ClaytonParam phi) {
  return std::exp(log_density_factor(checked_log(s1), checked_log(s2), phi.phi));
}

double conditional_cdf(double u1, double u2, double phi) {
  const double l1 = checked_log(u1);
  return std::exp(log_partial_factor(l1, checked_log(u2), phi) - l1);
}

double conditional_inverse(double u1, double w, double phi) {
  check_phi(phi);
  const double l1 = checked_log(u1);
  if (!(w > 0.0 && w < 1.0)) throw DomainError("conditional probability outside (0, 1)", w);
  // u2^{-1/phi} = 1 + u1^{-1/phi} (w^{-1/(phi+1)} - 1)
  const double c = -std::log(w) / (phi + 1.0);
  const double inner = -l1 / phi + std::log(std::expm1(c));
  const double u2 = std::exp(-phi * softplus(inner));
  return std::clamp(u2, DBL_MIN, std::nextafter(1.0, 0.0));
}

std::pair<double, double> sample_pair(ClaytonParam phi, Rng& rng) {
  check_phi(phi.phi);
  const double u1 = rng.uniform();
  const double w = rng.uniform();
  return {u1, conditional_inverse(u1, w, phi.phi)};
}

}  // namespace bisurv
