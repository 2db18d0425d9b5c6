#include "bisurv/likelihood.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "bisurv/errors.hpp"

namespace bisurv {

void validate_dataset(const Dataset& data) {
  if (data.empty()) throw DataError("dataset has no clusters");
  const auto p = data.front().x[0].size();
  const auto q = data.front().v[0].size();
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto& c = data[i];
    for (int j = 0; j < 2; ++j) {
      if (c.x[j].size() != p || c.v[j].size() != q) {
        throw DataError("cluster " + std::to_string(i) + " has inconsistent covariate dimensions");
      }
      if (!(c.y[j] >= 0.0) || !std::isfinite(c.y[j])) {
        throw DataError("cluster " + std::to_string(i) + " has an invalid time");
      }
      if (c.delta[j] != 0 && c.delta[j] != 1) {
        throw DataError("cluster " + std::to_string(i) + " has a status other than 0/1");
      }
    }
  }
}

int linear_dim(const Dataset& data) { return data.empty() ? 0 : static_cast<int>(data.front().x[0].size()); }
int index_dim(const Dataset& data) { return data.empty() ? 0 : static_cast<int>(data.front().v[0].size()); }

void validate(const ModelParams& params) {
  validate(params.rho);
  validate(params.tau);
  if (!(params.phi.phi > 0.0) || !std::isfinite(params.phi.phi)) {
    throw ConstraintError("phi must be positive and finite");
  }
  const auto q = params.alpha.size();
  if (q < 1) throw ConstraintError("alpha must be nonempty");
  if (std::abs(params.alpha.norm() - 1.0) > 1e-10) throw ConstraintError("alpha must have unit norm");
  if (!(params.alpha[q - 1] > 0.0)) throw ConstraintError("last entry of alpha must be positive");
}

double linear_predictor(const Eigen::VectorXd& x, const Eigen::VectorXd& v, const Eigen::VectorXd& beta,
                        const Eigen::VectorXd& alpha, const std::function<double(double)>& index_fn) {
  if (x.size() != beta.size() || v.size() != alpha.size()) {
    throw ConfigurationError("covariate and coefficient dimensions differ");
  }
  return beta.dot(x) + index_fn(alpha.dot(v));
}

double linear_predictor(const Eigen::VectorXd& x, const Eigen::VectorXd& v, const ModelParams& params,
                        const SplineConfig& spline_cfg, IndexPolicy policy) {
  const SplineBasis basis(spline_cfg);
  const IndexFunction index(basis, params.gamma.gamma);
  return linear_predictor(x, v, params.beta, params.alpha, [&](double u) {
    return policy == IndexPolicy::kStrict ? index.value(u) : index.value_extended(u);
  });
}

double marginal_survival(double t, int member, const Eigen::VectorXd& x, const Eigen::VectorXd& v,
                         const ModelParams& params, const SplineConfig& spline_cfg, IndexPolicy policy) {
  if (!(t >= 0.0)) throw DomainError("survival evaluated at negative time", t);
  const double lp = linear_predictor(x, v, params, spline_cfg, policy);
  return std::exp(-cumulative_hazard(t, params.baseline(member)) * std::exp(lp));
}

MarginTerm margin_term(double y, int delta, double lp, const PiecewiseHazard& baseline) {
  MarginTerm term;
  term.log_survival = -cumulative_hazard(y, baseline) * std::exp(lp);
  if (delta == 1) {
    if (!(y > 0.0)) throw DomainError("event observed at time 0", y);
    term.log_hazard = std::log(hazard_at(y, baseline)) + lp;
  }
  return term;
}

double cluster_loglik(int delta1, int delta2, const MarginTerm& m1, const MarginTerm& m2, double phi) {
  if (delta1 == 1 && delta2 == 1) {
    return log_density_factor(m1.log_survival, m2.log_survival, phi) + m1.log_hazard + m2.log_hazard;
  }
  if (delta1 == 1) return log_partial_factor(m1.log_survival, m2.log_survival, phi) + m1.log_hazard;
  if (delta2 == 1) return log_partial_factor(m2.log_survival, m1.log_survival, phi) + m2.log_hazard;
  return log_joint_survival(m1.log_survival, m2.log_survival, phi);
}

namespace {

double cluster_loglik_with(const ClusterObservation& obs, const ModelParams& params, const IndexFunction& index,
                           IndexPolicy policy) {
  std::array<MarginTerm, 2> terms;
  for (int j = 0; j < 2; ++j) {
    const double u = params.alpha.dot(obs.v[j]);
    const double lp = params.beta.dot(obs.x[j]) +
                      (policy == IndexPolicy::kStrict ? index.value(u) : index.value_extended(u));
    terms[j] = margin_term(obs.y[j], obs.delta[j], lp, params.baseline(j));
  }
  return cluster_loglik(obs.delta[0], obs.delta[1], terms[0], terms[1], params.phi.phi);
}

}  // namespace

double cluster_loglik(const ClusterObservation& obs, const ModelParams& params, const SplineConfig& spline_cfg,
                      IndexPolicy policy) {
  const SplineBasis basis(spline_cfg);
  const IndexFunction index(basis, params.gamma.gamma);
  return cluster_loglik_with(obs, params, index, policy);
}

double total_loglik(const Dataset& data, const ModelParams& params, const SplineConfig& spline_cfg,
                    IndexPolicy policy) {
  if (data.empty()) throw DataError("dataset has no clusters");
  const SplineBasis basis(spline_cfg);
  const IndexFunction index(basis, params.gamma.gamma);
  double acc = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    try {
      acc += cluster_loglik_with(data[i], params, index, policy);
    } catch (const DomainError& e) {
      throw DomainError("cluster " + std::to_string(i) + ": " + e.what(), e.value());
    }
  }
  return acc;
}

double ClusterModel::total(const Eigen::VectorXd& theta_star) const {
  std::vector<double> per(n_);
  cluster_logliks(theta_star, per);
  double acc = 0.0;
  for (double v : per) acc += v;
  return acc;
}

DesignMatrices::DesignMatrices(const Dataset& data, const std::vector<double>& cuts1,
                               const std::vector<double>& cuts2) {
  validate_dataset(data);
  validate_cuts(cuts1);
  validate_cuts(cuts2);
  const auto n = static_cast<Eigen::Index>(data.size());
  const int p = linear_dim(data);
  const int q = index_dim(data);
  for (int j = 0; j < 2; ++j) {
    const std::vector<double>& cuts = j == 0 ? cuts1 : cuts2;
    x[j].resize(n, p);
    v[j].resize(n, q);
    y[j].resize(n);
    delta[j].resize(n);
    interval[j].resize(n);
    exposure[j].resize(n, static_cast<Eigen::Index>(cuts.size()));
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto& c = data[static_cast<std::size_t>(i)];
      x[j].row(i) = c.x[j].transpose();
      v[j].row(i) = c.v[j].transpose();
      y[j][i] = c.y[j];
      delta[j][i] = c.delta[j];
      if (c.delta[j] == 1 && !(c.y[j] > 0.0)) {
        throw DomainError("cluster " + std::to_string(i) + ": event observed at time 0", c.y[j]);
      }
      interval[j][i] = c.y[j] > 0.0 ? interval_index(c.y[j], cuts) : 0;
      const std::vector<double> e = interval_exposure(c.y[j], cuts);
      for (std::size_t k = 0; k < cuts.size(); ++k) exposure[j](i, static_cast<Eigen::Index>(k)) = e[k];
    }
  }
}

}  // namespace bisurv
