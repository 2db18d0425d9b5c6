#pragma once

#include <functional>
#include <string>

#include <Eigen/Core>

namespace bisurv {

struct OptimizerOptions {
  int max_iterations = 500;
  double gradient_tol = 1e-5;  // max-norm of the gradient
  double relative_tol = 1e-9;  // |f_new - f_old| / max(|f_old|, 1)
  double max_step = 1.0;       // cap on the max-norm of a trial step
};

struct OptimizerResult {
  Eigen::VectorXd x;
  double value = 0.0;
  Eigen::VectorXd gradient;
  int iterations = 0;
  bool converged = false;
  std::string message;
};

using Objective = std::function<double(const Eigen::VectorXd&)>;
using Gradient = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

// BFGS ascent with an inverse-Hessian update and backtracking Armijo line
// search. Non-finite objective values are treated as failed trial points.
// Throws NumericalError when the starting value is not finite.
OptimizerResult maximize_bfgs(const Objective& f, const Gradient& grad, Eigen::VectorXd x0,
                              const OptimizerOptions& options = {});

}  // namespace bisurv
