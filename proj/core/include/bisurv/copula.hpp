#pragma once

#include <utility>

#include "bisurv/random.hpp"

namespace bisurv {

// Clayton association parameter; larger phi means weaker association and
// Kendall's tau = 1 / (1 + 2 phi).
struct ClaytonParam {
  double phi = 1.0;
};

// S(s1, s2) = (s1^{-1/phi} + s2^{-1/phi} - 1)^{-phi}.
double joint_survival(double s1, double s2, ClaytonParam phi);

// -dS/dt_j divided by the marginal hazard factor: u_j * dC/du_j.
double copula_partial_factor(double s_self, double s_other, ClaytonParam phi);

// d^2S/dt1dt2 divided by both marginal hazard factors: u1 u2 d^2C/du1du2.
double copula_density_factor(double s1, double s2, ClaytonParam phi);

// Log-space forms taking log-survivals (<= 0). These are what the likelihood
// uses; survivals far below DBL_MIN stay representable.
double log_joint_survival(double log_s1, double log_s2, double phi);
double log_partial_factor(double log_s_self, double log_s_other, double phi);
double log_density_factor(double log_s1, double log_s2, double phi);

// Conditional inverse-transform draw of a pair with Clayton dependence.
std::pair<double, double> sample_pair(ClaytonParam phi, Rng& rng);

// Maps (u1, w) to u2 with P(U2 <= u2 | U1 = u1) = w.
double conditional_inverse(double u1, double w, double phi);

// P(U2 <= u2 | U1 = u1) = dC/du1.
double conditional_cdf(double u1, double u2, double phi);

}  // namespace bisurv
