#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>

#include "bisurv/likelihood.hpp"

namespace bisurv {

// Unconstrained image of ModelParams: varrho = log phi, xi = log rho,
// zeta = log tau, varphi = logit-like image of the polar angles of alpha.
struct TransformedParams {
  double varrho = 0.0;
  Eigen::VectorXd xi;
  Eigen::VectorXd zeta;
  Eigen::VectorXd varphi;
  Eigen::VectorXd beta;
  Eigen::VectorXd gamma;
};

struct BaselineCuts {
  std::vector<double> member1{0.0};
  std::vector<double> member2{0.0};
};

// Block sizes of theta = (phi, rho, tau, alpha, beta, gamma).
struct ParamLayout {
  int r = 1;  // pieces, member 1
  int s = 1;  // pieces, member 2
  int q = 1;  // index covariates
  int p = 0;  // linear covariates
  int d = 0;  // spline basis dimension

  int dim_theta() const { return 1 + r + s + q + p + d; }
  int dim_theta_star() const { return 1 + r + s + (q - 1) + p + d; }

  Eigen::VectorXd flatten(const TransformedParams& tp) const;
  TransformedParams unflatten(const Eigen::VectorXd& theta_star) const;

  // Theta in block order (phi, rho, tau, alpha, beta, gamma).
  Eigen::VectorXd flatten(const ModelParams& params) const;

  std::vector<std::string> theta_names() const;
  std::vector<std::string> theta_star_names() const;
};

ParamLayout layout_of(const TransformedParams& tp);

// Polar map for the single-index direction.
Eigen::VectorXd alpha_from_varphi(const Eigen::VectorXd& varphi);
Eigen::VectorXd varphi_from_alpha(const Eigen::VectorXd& alpha);
Eigen::MatrixXd alpha_jacobian(const Eigen::VectorXd& varphi);  // q x (q-1)

TransformedParams to_unconstrained(const ModelParams& params);
ModelParams from_unconstrained(const TransformedParams& tp, const BaselineCuts& cuts);

// d theta / d theta*, (dim theta) x (dim theta*).
Eigen::MatrixXd jacobian(const TransformedParams& tp);

}  // namespace bisurv
