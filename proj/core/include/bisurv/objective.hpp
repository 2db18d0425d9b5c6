#pragma once

#include <memory>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "bisurv/likelihood.hpp"
#include "bisurv/reparam.hpp"

namespace bisurv {

// Partially linear single-index model over theta* = (varrho, xi, zeta, varphi, beta, gamma).
class SingleIndexModel final : public ClusterModel {
 public:
  SingleIndexModel(const Dataset& data, BaselineCuts cuts, SplineConfig spline_cfg);

  int dimension() const override { return layout_.dim_theta_star(); }
  std::vector<std::string> parameter_names() const override { return layout_.theta_star_names(); }
  void cluster_logliks(const Eigen::VectorXd& theta_star, std::span<double> out) const override;

  // True when some member's index value alpha'v lies outside [L, U].
  bool extrapolation_active(const Eigen::VectorXd& theta_star) const;

  const ParamLayout& layout() const { return layout_; }
  const BaselineCuts& cuts() const { return cuts_; }
  const SplineBasis& basis() const { return basis_; }

 private:
  DesignMatrices design_;
  BaselineCuts cuts_;
  SplineBasis basis_;
  ParamLayout layout_;
};

// Comparison model with psi(alpha'v) replaced by an unconstrained alpha_tilde'v;
// theta* = (varrho, xi, zeta, alpha_tilde, beta).
class LinearModel final : public ClusterModel {
 public:
  LinearModel(const Dataset& data, BaselineCuts cuts);

  int dimension() const override { return 1 + r_ + s_ + q_ + p_; }
  std::vector<std::string> parameter_names() const override;
  void cluster_logliks(const Eigen::VectorXd& theta_star, std::span<double> out) const override;

  int pieces1() const { return r_; }
  int pieces2() const { return s_; }
  int index_dim() const { return q_; }
  int linear_dim() const { return p_; }
  const BaselineCuts& cuts() const { return cuts_; }

 private:
  DesignMatrices design_;
  BaselineCuts cuts_;
  int r_, s_, q_, p_;
};

// Default central-difference step factor: h_j = factor * (1 + |theta*_j|).
inline constexpr double kDefaultFdStep = 1e-6;

// Row i is the central-difference gradient of log L_i. Throws NumericalError
// naming the coordinate when a probe is non-finite.
Eigen::MatrixXd score_per_cluster(const ClusterModel& model, const Eigen::VectorXd& theta_star,
                                  double step_factor = kDefaultFdStep);

Eigen::MatrixXd score_per_cluster(const Dataset& data, const TransformedParams& tparams, const BaselineCuts& cuts,
                                  const SplineConfig& spline_cfg, double step_factor = kDefaultFdStep);

// Central-difference gradient of the total log-likelihood. Non-finite probes
// leave NaN entries rather than throwing.
Eigen::VectorXd fd_gradient(const ClusterModel& model, const Eigen::VectorXd& theta_star,
                            double step_factor = kDefaultFdStep);

}  // namespace bisurv
