#include "bisurv/optimize.hpp"

#include <cmath>

#include <Eigen/Dense>

#include "bisurv/errors.hpp"

namespace bisurv {
namespace {

constexpr double kArmijo = 1e-4;
constexpr int kMaxBacktracks = 50;

double max_norm(const Eigen::VectorXd& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

}  // namespace

OptimizerResult maximize_bfgs(const Objective& f, const Gradient& grad, Eigen::VectorXd x0,
                              const OptimizerOptions& options) {
  const auto n = x0.size();
  OptimizerResult res;
  res.x = std::move(x0);
  res.value = f(res.x);
  if (!std::isfinite(res.value)) throw NumericalError("objective is not finite at the starting point");
  res.gradient = grad(res.x);
  if (!res.gradient.allFinite()) throw NumericalError("gradient is not finite at the starting point");

  Eigen::MatrixXd h_inv = Eigen::MatrixXd::Identity(n, n);
  bool fresh_hessian = true;
  double last_change = std::numeric_limits<double>::infinity();

  for (res.iterations = 0; res.iterations < options.max_iterations; ++res.iterations) {
    const double gnorm = max_norm(res.gradient);
    if (gnorm < options.gradient_tol && last_change < options.relative_tol) {
      res.converged = true;
      res.message = "converged";
      return res;
    }

    Eigen::VectorXd dir = h_inv * res.gradient;
    double slope = res.gradient.dot(dir);
    if (!(slope > 0.0)) {
      h_inv.setIdentity();
      fresh_hessian = true;
      dir = res.gradient;
      slope = res.gradient.squaredNorm();
    }
    const double dnorm = max_norm(dir);
    if (dnorm > options.max_step) {
      dir *= options.max_step / dnorm;
      slope *= options.max_step / dnorm;
    }

    double t = 1.0;
    double trial_value = 0.0;
    Eigen::VectorXd trial;
    bool accepted = false;
    for (int k = 0; k < kMaxBacktracks; ++k) {
      trial = res.x + t * dir;
      trial_value = f(trial);
      if (std::isfinite(trial_value) && trial_value >= res.value + kArmijo * t * slope) {
        accepted = true;
        break;
      }
      t *= 0.5;
    }

    if (!accepted) {
      if (gnorm < options.gradient_tol) {
        // No further ascent is resolvable at this precision.
        res.converged = true;
        res.message = "converged (line search stalled at a stationary point)";
        return res;
      }
      if (!fresh_hessian) {
        h_inv.setIdentity();
        fresh_hessian = true;
        continue;
      }
      res.message = "line search failed";
      return res;
    }

    Eigen::VectorXd g_new = grad(trial);
    if (!g_new.allFinite()) {
      res.message = "non-finite gradient";
      return res;
    }
    const Eigen::VectorXd s = trial - res.x;
    // Curvature pair for the minimization of -f.
    const Eigen::VectorXd y = res.gradient - g_new;
    const double sy = s.dot(y);
    last_change = std::abs(trial_value - res.value) / std::max(std::abs(res.value), 1.0);
    res.x = std::move(trial);
    res.value = trial_value;
    res.gradient = std::move(g_new);

    if (sy > 1e-12 * s.norm() * y.norm()) {
      if (fresh_hessian) {
        h_inv *= sy / y.squaredNorm();
        fresh_hessian = false;
      }
      const double rho = 1.0 / sy;
      const Eigen::VectorXd hy = h_inv * y;
      // H <- (I - rho s y') H (I - rho y s') + rho s s'
      h_inv += (rho * rho * y.dot(hy) + rho) * (s * s.transpose()) - rho * (hy * s.transpose() + s * hy.transpose());
    }
  }
  res.message = "iteration limit reached";
  res.converged = max_norm(res.gradient) < options.gradient_tol && last_change < options.relative_tol;
  return res;
}

}  // namespace bisurv
