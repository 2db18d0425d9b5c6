#pragma once

#include <array>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "bisurv/copula.hpp"
#include "bisurv/hazard.hpp"
#include "bisurv/splines.hpp"

namespace bisurv {

// One cluster of two members. delta = 1 marks an observed event.
struct ClusterObservation {
  std::array<double, 2> y{0.0, 0.0};
  std::array<int, 2> delta{0, 0};
  std::array<Eigen::VectorXd, 2> x;
  std::array<Eigen::VectorXd, 2> v;
};

using Dataset = std::vector<ClusterObservation>;

// Throws DataError unless the dataset is nonempty with consistent covariate
// dimensions, nonnegative times and 0/1 indicators.
void validate_dataset(const Dataset& data);
int linear_dim(const Dataset& data);
int index_dim(const Dataset& data);

// Parameters in the original (constrained) parametrization.
struct ModelParams {
  ClaytonParam phi;
  PiecewiseHazard rho;  // member 1 baseline
  PiecewiseHazard tau;  // member 2 baseline
  Eigen::VectorXd alpha;
  Eigen::VectorXd beta;
  SplineCoefficients gamma;

  const PiecewiseHazard& baseline(int member) const { return member == 0 ? rho : tau; }
};

// Throws ConstraintError / ConfigurationError when an invariant fails.
void validate(const ModelParams& params);

enum class IndexPolicy {
  kStrict,       // index value outside [L,U] throws DomainError
  kExtrapolate,  // psi continues linearly past the boundary
};

double linear_predictor(const Eigen::VectorXd& x, const Eigen::VectorXd& v, const ModelParams& params,
                        const SplineConfig& spline_cfg, IndexPolicy policy = IndexPolicy::kStrict);

// Same exponent with an arbitrary index function in place of the spline.
double linear_predictor(const Eigen::VectorXd& x, const Eigen::VectorXd& v, const Eigen::VectorXd& beta,
                        const Eigen::VectorXd& alpha, const std::function<double(double)>& index_fn);

// member is 0 or 1.
double marginal_survival(double t, int member, const Eigen::VectorXd& x, const Eigen::VectorXd& v,
                         const ModelParams& params, const SplineConfig& spline_cfg,
                         IndexPolicy policy = IndexPolicy::kStrict);

// log S_j(y) and log of the hazard factor lambda_0j(y) exp(lp).
struct MarginTerm {
  double log_survival = 0.0;
  double log_hazard = 0.0;
};

MarginTerm margin_term(double y, int delta, double lp, const PiecewiseHazard& baseline);

// log L_i from the two margin terms, choosing the factor by (delta1, delta2).
double cluster_loglik(int delta1, int delta2, const MarginTerm& m1, const MarginTerm& m2, double phi);

double cluster_loglik(const ClusterObservation& obs, const ModelParams& params, const SplineConfig& spline_cfg,
                      IndexPolicy policy = IndexPolicy::kExtrapolate);

// Errors carry the offending cluster index in their message.
double total_loglik(const Dataset& data, const ModelParams& params, const SplineConfig& spline_cfg,
                    IndexPolicy policy = IndexPolicy::kExtrapolate);

// Log-likelihood as a function of a flat unconstrained parameter vector.
// Two implementations: the single-index model and the PH-linear comparison.
class ClusterModel {
 public:
  virtual ~ClusterModel() = default;

  virtual int dimension() const = 0;
  virtual std::vector<std::string> parameter_names() const = 0;

  // out[i] = log L_i; entries may be non-finite for extreme parameters.
  virtual void cluster_logliks(const Eigen::VectorXd& theta_star, std::span<double> out) const = 0;

  std::size_t clusters() const { return n_; }
  double total(const Eigen::VectorXd& theta_star) const;

 protected:
  explicit ClusterModel(std::size_t n) : n_(n) {}

 private:
  std::size_t n_;
};

// Flattened covariates shared by both model variants.
struct DesignMatrices {
  std::array<Eigen::MatrixXd, 2> x;  // n x p per member
  std::array<Eigen::MatrixXd, 2> v;  // n x q per member
  std::array<Eigen::VectorXd, 2> y;
  std::array<Eigen::VectorXi, 2> delta;
  // Per-member interval index of y and exposure of (0, y] on each interval.
  std::array<Eigen::VectorXi, 2> interval;
  std::array<Eigen::MatrixXd, 2> exposure;

  DesignMatrices(const Dataset& data, const std::vector<double>& cuts1, const std::vector<double>& cuts2);
};

}  // namespace bisurv
