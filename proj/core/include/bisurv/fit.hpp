#pragma once

#include <array>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "bisurv/likelihood.hpp"
#include "bisurv/objective.hpp"
#include "bisurv/optimize.hpp"
#include "bisurv/reparam.hpp"

namespace bisurv {

struct FitOptions {
  std::array<int, 2> pieces{4, 4};
  int interior_knots = 3;
  int spline_order = 3;
  OptimizerOptions optimizer;
  double fd_step = kDefaultFdStep;
  double condition_limit = 1e12;
};

// PH-linear comparison fit. alpha_tilde = b_hat * alpha_hat with
// ||alpha_hat|| = 1 and the sign chosen so alpha_hat's last entry is >= 0.
struct LinearFitResult {
  Eigen::VectorXd theta_star;  // (varrho, xi, zeta, alpha_tilde, beta)
  Eigen::VectorXd alpha_tilde;
  double b_hat = 0.0;
  Eigen::VectorXd alpha_hat;
  Eigen::VectorXd beta;
  double phi = 1.0;
  std::vector<double> rho;
  std::vector<double> tau;
  BaselineCuts cuts;
  Eigen::MatrixXd cov_theta_star;  // empty when the information matrix is singular
  Eigen::MatrixXd cov_theta;       // (phi, rho, tau, alpha_tilde, beta)
  std::string covariance_error;
  double loglik = 0.0;
  int n_iterations = 0;
  bool converged = false;
  double gradient_norm = 0.0;

  bool has_covariance() const { return cov_theta_star.size() > 0; }
};

struct FitResult {
  TransformedParams theta_star_hat;
  ModelParams theta_hat;
  BaselineCuts cuts;
  SplineConfig spline;
  Eigen::MatrixXd cov_theta_star;  // empty when the information matrix is singular
  Eigen::MatrixXd cov_theta;
  std::string covariance_error;
  double loglik = 0.0;
  int n_iterations = 0;
  bool converged = false;
  double gradient_norm = 0.0;
  bool extrapolation_active = false;
  std::string message;

  bool has_covariance() const { return cov_theta_star.size() > 0; }
  ParamLayout layout() const { return layout_of(theta_star_hat); }
};

// Everything fixed before the main optimization: cut points, the PH-linear
// fit, and the spline knots placed on its index values.
struct FitSetup {
  BaselineCuts cuts;
  std::array<bool, 2> cut_fallback{false, false};
  LinearFitResult linear;
  bool linear_failed = false;
  std::string linear_error;
  Eigen::VectorXd alpha_start;
  SplineConfig spline;
};

BaselineCuts choose_baseline_cuts(const Dataset& data, std::array<int, 2> pieces,
                                  std::array<bool, 2>* fallback = nullptr);

LinearFitResult fit_ph_linear(const Dataset& data, const BaselineCuts& cuts, const FitOptions& options = {});
LinearFitResult fit_ph_linear(const Dataset& data, std::array<int, 2> pieces, const FitOptions& options = {});

// Splits alpha_tilde into (b_hat, alpha_hat).
void factor_index(const Eigen::VectorXd& alpha_tilde, double& b_hat, Eigen::VectorXd& alpha_hat);

FitSetup prepare_fit(const Dataset& data, const FitOptions& options = {});

// Starting point: direction and beta from the PH-linear fit, occurrence/exposure
// rates, phi = 1, constant gamma matching the linear slope over [L, U].
TransformedParams initialize(const Dataset& data, const FitSetup& setup);

FitResult maximize(const Dataset& data, const TransformedParams& init, const BaselineCuts& cuts,
                   const SplineConfig& spline_cfg, const FitOptions& options = {});

// [sum_i s_i s_i']^{-1}; throws NumericalError when the condition number
// exceeds condition_limit.
Eigen::MatrixXd outer_product_covariance(const Eigen::MatrixXd& scores, double condition_limit = 1e12);

Eigen::MatrixXd variance_theta_star(const Dataset& data, const TransformedParams& theta_star_hat,
                                    const BaselineCuts& cuts, const SplineConfig& spline_cfg,
                                    const FitOptions& options = {});

// Delta method through the reparametrization Jacobian.
Eigen::MatrixXd variance_theta(const TransformedParams& theta_star_hat, const Eigen::MatrixXd& cov_theta_star);

struct FullFit {
  FitSetup setup;
  TransformedParams init;
  FitResult result;
};

// prepare_fit + initialize + maximize.
FullFit fit_model(const Dataset& data, const FitOptions& options = {});

struct Prediction {
  std::vector<double> time;
  std::vector<double> survival;
  std::vector<double> cumulative_hazard;
  double linear_predictor = 0.0;
  bool extrapolated = false;
};

// member is 0 or 1.
Prediction predict_individual(const Eigen::VectorXd& x, const Eigen::VectorXd& v, const FitResult& fit, int member,
                              const std::vector<double>& time_grid);

}  // namespace bisurv
