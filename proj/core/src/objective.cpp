#include "bisurv/objective.hpp"

#include <cmath>
#include <limits>

#include "bisurv/errors.hpp"

namespace bisurv {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double step_for(double value, double factor) { return factor * (1.0 + std::abs(value)); }

}  // namespace

SingleIndexModel::SingleIndexModel(const Dataset& data, BaselineCuts cuts, SplineConfig spline_cfg)
    : ClusterModel(data.size()),
      design_(data, cuts.member1, cuts.member2),
      cuts_(std::move(cuts)),
      basis_(std::move(spline_cfg)) {
  layout_.r = static_cast<int>(cuts_.member1.size());
  layout_.s = static_cast<int>(cuts_.member2.size());
  layout_.q = bisurv::index_dim(data);
  layout_.p = bisurv::linear_dim(data);
  layout_.d = basis_.dimension();
  if (layout_.q < 1) throw ConfigurationError("single-index model needs at least one index covariate");
}

void SingleIndexModel::cluster_logliks(const Eigen::VectorXd& theta_star, std::span<double> out) const {
  const TransformedParams tp = layout_.unflatten(theta_star);
  const double phi = std::exp(tp.varrho);
  const Eigen::VectorXd rates1 = tp.xi.array().exp();
  const Eigen::VectorXd rates2 = tp.zeta.array().exp();
  const Eigen::VectorXd alpha = alpha_from_varphi(tp.varphi);
  const std::array<const Eigen::VectorXd*, 2> rates{&rates1, &rates2};
  const std::array<const Eigen::VectorXd*, 2> log_rates{&tp.xi, &tp.zeta};
  try {
    const IndexFunction index(basis_, tp.gamma);
    const auto n = static_cast<Eigen::Index>(clusters());
    for (Eigen::Index i = 0; i < n; ++i) {
      std::array<MarginTerm, 2> terms;
      for (int j = 0; j < 2; ++j) {
        const double u = design_.v[j].row(i).dot(alpha);
        const double lp = design_.x[j].row(i).dot(tp.beta) + index.value_extended(u);
        terms[j].log_survival = -design_.exposure[j].row(i).dot(*rates[j]) * std::exp(lp);
        if (design_.delta[j][i] == 1) terms[j].log_hazard = (*log_rates[j])[design_.interval[j][i]] + lp;
      }
      out[static_cast<std::size_t>(i)] =
          cluster_loglik(design_.delta[0][i], design_.delta[1][i], terms[0], terms[1], phi);
    }
  } catch (const DomainError&) {
    std::fill(out.begin(), out.end(), kNaN);
  }
}

bool SingleIndexModel::extrapolation_active(const Eigen::VectorXd& theta_star) const {
  const TransformedParams tp = layout_.unflatten(theta_star);
  const Eigen::VectorXd alpha = alpha_from_varphi(tp.varphi);
  for (int j = 0; j < 2; ++j) {
    const Eigen::VectorXd u = design_.v[j] * alpha;
    for (Eigen::Index i = 0; i < u.size(); ++i) {
      if (!basis_.contains(u[i])) return true;
    }
  }
  return false;
}

LinearModel::LinearModel(const Dataset& data, BaselineCuts cuts)
    : ClusterModel(data.size()), design_(data, cuts.member1, cuts.member2), cuts_(std::move(cuts)) {
  r_ = static_cast<int>(cuts_.member1.size());
  s_ = static_cast<int>(cuts_.member2.size());
  q_ = bisurv::index_dim(data);
  p_ = bisurv::linear_dim(data);
}

std::vector<std::string> LinearModel::parameter_names() const {
  std::vector<std::string> out{"varrho"};
  for (int k = 1; k <= r_; ++k) out.push_back("xi" + std::to_string(k));
  for (int k = 1; k <= s_; ++k) out.push_back("zeta" + std::to_string(k));
  for (int k = 1; k <= q_; ++k) out.push_back("alpha_tilde" + std::to_string(k));
  for (int k = 1; k <= p_; ++k) out.push_back("beta" + std::to_string(k));
  return out;
}

void LinearModel::cluster_logliks(const Eigen::VectorXd& theta_star, std::span<double> out) const {
  if (theta_star.size() != dimension()) throw ConfigurationError("linear-model parameter length mismatch");
  const double phi = std::exp(theta_star[0]);
  const Eigen::VectorXd log_rates1 = theta_star.segment(1, r_);
  const Eigen::VectorXd log_rates2 = theta_star.segment(1 + r_, s_);
  const Eigen::VectorXd rates1 = log_rates1.array().exp();
  const Eigen::VectorXd rates2 = log_rates2.array().exp();
  const Eigen::VectorXd alpha_tilde = theta_star.segment(1 + r_ + s_, q_);
  const Eigen::VectorXd beta = theta_star.segment(1 + r_ + s_ + q_, p_);
  const std::array<const Eigen::VectorXd*, 2> rates{&rates1, &rates2};
  const std::array<const Eigen::VectorXd*, 2> log_rates{&log_rates1, &log_rates2};
  try {
    const auto n = static_cast<Eigen::Index>(clusters());
    for (Eigen::Index i = 0; i < n; ++i) {
      std::array<MarginTerm, 2> terms;
      for (int j = 0; j < 2; ++j) {
        const double lp = design_.x[j].row(i).dot(beta) + design_.v[j].row(i).dot(alpha_tilde);
        terms[j].log_survival = -design_.exposure[j].row(i).dot(*rates[j]) * std::exp(lp);
        if (design_.delta[j][i] == 1) terms[j].log_hazard = (*log_rates[j])[design_.interval[j][i]] + lp;
      }
      out[static_cast<std::size_t>(i)] =
          cluster_loglik(design_.delta[0][i], design_.delta[1][i], terms[0], terms[1], phi);
    }
  } catch (const DomainError&) {
    std::fill(out.begin(), out.end(), kNaN);
  }
}

Eigen::MatrixXd score_per_cluster(const ClusterModel& model, const Eigen::VectorXd& theta_star,
                                  double step_factor) {
  const auto n = static_cast<Eigen::Index>(model.clusters());
  const int dim = model.dimension();
  Eigen::MatrixXd scores(n, dim);
  Eigen::VectorXd plus(n), minus(n);
  Eigen::VectorXd probe = theta_star;
  for (int j = 0; j < dim; ++j) {
    const double h = step_for(theta_star[j], step_factor);
    probe[j] = theta_star[j] + h;
    model.cluster_logliks(probe, std::span<double>(plus.data(), static_cast<std::size_t>(n)));
    probe[j] = theta_star[j] - h;
    model.cluster_logliks(probe, std::span<double>(minus.data(), static_cast<std::size_t>(n)));
    probe[j] = theta_star[j];
    if (!plus.allFinite() || !minus.allFinite()) {
      throw NumericalError("non-finite log-likelihood while differentiating along " +
                           model.parameter_names()[static_cast<std::size_t>(j)]);
    }
    scores.col(j) = (plus - minus) / (2.0 * h);
  }
  return scores;
}

Eigen::MatrixXd score_per_cluster(const Dataset& data, const TransformedParams& tparams, const BaselineCuts& cuts,
                                  const SplineConfig& spline_cfg, double step_factor) {
  const SingleIndexModel model(data, cuts, spline_cfg);
  return score_per_cluster(model, model.layout().flatten(tparams), step_factor);
}

Eigen::VectorXd fd_gradient(const ClusterModel& model, const Eigen::VectorXd& theta_star, double step_factor) {
  const int dim = model.dimension();
  Eigen::VectorXd grad(dim);
  Eigen::VectorXd probe = theta_star;
  for (int j = 0; j < dim; ++j) {
    const double h = step_for(theta_star[j], step_factor);
    probe[j] = theta_star[j] + h;
    const double up = model.total(probe);
    probe[j] = theta_star[j] - h;
    const double down = model.total(probe);
    probe[j] = theta_star[j];
    grad[j] = (up - down) / (2.0 * h);
  }
  return grad;
}

}  // namespace bisurv
