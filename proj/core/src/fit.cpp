#include "bisurv/fit.hpp"

#include <cmath>

#include <Eigen/Dense>

#include "bisurv/errors.hpp"

namespace bisurv {
namespace {

std::vector<double> member_times(const Dataset& data, int j) {
  std::vector<double> t;
  t.reserve(data.size());
  for (const auto& c : data) t.push_back(c.y[j]);
  return t;
}

std::vector<int> member_status(const Dataset& data, int j) {
  std::vector<int> s;
  s.reserve(data.size());
  for (const auto& c : data) s.push_back(c.delta[j]);
  return s;
}

Eigen::VectorXd crude_log_rates(const Dataset& data, int j, const std::vector<double>& cuts) {
  const std::vector<double> rates = occurrence_exposure_rates(member_times(data, j), member_status(data, j), cuts);
  return Eigen::Map<const Eigen::VectorXd>(rates.data(), static_cast<Eigen::Index>(rates.size())).array().log();
}

Eigen::MatrixXd symmetrized(const Eigen::MatrixXd& m) { return 0.5 * (m + m.transpose()); }

}  // namespace

BaselineCuts choose_baseline_cuts(const Dataset& data, std::array<int, 2> pieces, std::array<bool, 2>* fallback) {
  validate_dataset(data);
  BaselineCuts cuts;
  for (int j = 0; j < 2; ++j) {
    const CutSelection sel = choose_cuts(member_times(data, j), member_status(data, j), pieces[j]);
    (j == 0 ? cuts.member1 : cuts.member2) = sel.cuts;
    if (fallback) (*fallback)[j] = sel.fallback;
  }
  return cuts;
}

void factor_index(const Eigen::VectorXd& alpha_tilde, double& b_hat, Eigen::VectorXd& alpha_hat) {
  const double norm = alpha_tilde.norm();
  const auto q = alpha_tilde.size();
  if (norm == 0.0 || q == 0) {
    b_hat = 0.0;
    alpha_hat = Eigen::VectorXd::Zero(q);
    if (q) alpha_hat[q - 1] = 1.0;
    return;
  }
  const double sign = alpha_tilde[q - 1] < 0.0 ? -1.0 : 1.0;
  b_hat = sign * norm;
  alpha_hat = alpha_tilde / b_hat;
}

LinearFitResult fit_ph_linear(const Dataset& data, const BaselineCuts& cuts, const FitOptions& options) {
  const LinearModel model(data, cuts);
  const int r = model.pieces1(), s = model.pieces2(), q = model.index_dim(), p = model.linear_dim();
  Eigen::VectorXd x0 = Eigen::VectorXd::Zero(model.dimension());
  x0.segment(1, r) = crude_log_rates(data, 0, cuts.member1);
  x0.segment(1 + r, s) = crude_log_rates(data, 1, cuts.member2);

  const OptimizerResult opt = maximize_bfgs(
      [&](const Eigen::VectorXd& t) { return model.total(t); },
      [&](const Eigen::VectorXd& t) { return fd_gradient(model, t, options.fd_step); }, x0, options.optimizer);

  LinearFitResult res;
  res.theta_star = opt.x;
  res.cuts = cuts;
  res.loglik = opt.value;
  res.n_iterations = opt.iterations;
  res.converged = opt.converged;
  res.gradient_norm = opt.gradient.cwiseAbs().maxCoeff();
  res.phi = std::exp(opt.x[0]);
  for (int k = 0; k < r; ++k) res.rho.push_back(std::exp(opt.x[1 + k]));
  for (int k = 0; k < s; ++k) res.tau.push_back(std::exp(opt.x[1 + r + k]));
  res.alpha_tilde = opt.x.segment(1 + r + s, q);
  res.beta = opt.x.segment(1 + r + s + q, p);
  factor_index(res.alpha_tilde, res.b_hat, res.alpha_hat);

  try {
    res.cov_theta_star =
        outer_product_covariance(score_per_cluster(model, opt.x, options.fd_step), options.condition_limit);
    Eigen::VectorXd jac = Eigen::VectorXd::Ones(model.dimension());
    for (int k = 0; k < 1 + r + s; ++k) jac[k] = std::exp(opt.x[k]);
    res.cov_theta = jac.asDiagonal() * res.cov_theta_star * jac.asDiagonal();
  } catch (const NumericalError& e) {
    res.covariance_error = e.what();
  }
  return res;
}

LinearFitResult fit_ph_linear(const Dataset& data, std::array<int, 2> pieces, const FitOptions& options) {
  return fit_ph_linear(data, choose_baseline_cuts(data, pieces), options);
}

FitSetup prepare_fit(const Dataset& data, const FitOptions& options) {
  validate_dataset(data);
  FitSetup setup;
  setup.cuts = choose_baseline_cuts(data, options.pieces, &setup.cut_fallback);
  const int q = index_dim(data);
  setup.alpha_start = Eigen::VectorXd::Zero(q);
  if (q) setup.alpha_start[q - 1] = 1.0;
  try {
    setup.linear = fit_ph_linear(data, setup.cuts, options);
    if (!setup.linear.alpha_hat.allFinite()) throw NumericalError("non-finite PH-linear estimate");
    if (setup.linear.b_hat != 0.0) setup.alpha_start = setup.linear.alpha_hat;
  } catch (const std::exception& e) {
    setup.linear_failed = true;
    setup.linear_error = e.what();
  }
  if (q && !(setup.alpha_start[q - 1] > 0.0)) {
    setup.alpha_start[q - 1] = 1e-6;
    setup.alpha_start.normalize();
  }

  std::vector<double> index_values;
  index_values.reserve(2 * data.size());
  for (const auto& c : data) {
    for (int j = 0; j < 2; ++j) index_values.push_back(c.v[j].dot(setup.alpha_start));
  }
  setup.spline = choose_knots(index_values, options.interior_knots, options.spline_order);
  return setup;
}

TransformedParams initialize(const Dataset& data, const FitSetup& setup) {
  const int p = linear_dim(data);
  const SplineBasis basis(setup.spline);
  TransformedParams tp;
  tp.varrho = 0.0;
  tp.xi = crude_log_rates(data, 0, setup.cuts.member1);
  tp.zeta = crude_log_rates(data, 1, setup.cuts.member2);
  tp.varphi = varphi_from_alpha(setup.alpha_start);
  if (setup.linear_failed) {
    tp.beta = Eigen::VectorXd::Zero(p);
    tp.gamma = Eigen::VectorXd::Constant(basis.dimension(), 0.1);
  } else {
    tp.beta = setup.linear.beta;
    // sum_j M_j integrates to d over [L, U]; a constant gamma = b (U-L)/d gives
    // psi' close to the linear slope b on average.
    const double slope = setup.linear.b_hat;
    const double c = slope * (basis.hi() - basis.lo()) / basis.dimension();
    tp.gamma = Eigen::VectorXd::Constant(basis.dimension(), c != 0.0 ? c : 0.1);
  }
  return tp;
}

Eigen::MatrixXd outer_product_covariance(const Eigen::MatrixXd& scores, double condition_limit) {
  const Eigen::MatrixXd info = scores.transpose() * scores;
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(info);
  if (eig.info() != Eigen::Success) throw NumericalError("eigendecomposition of the information matrix failed");
  const double lo = eig.eigenvalues().minCoeff();
  const double hi = eig.eigenvalues().maxCoeff();
  if (!(lo > 0.0) || hi / lo > condition_limit) {
    throw NumericalError("score outer-product matrix is singular or ill-conditioned (condition " +
                         std::to_string(lo > 0.0 ? hi / lo : INFINITY) +
                         "); consider fewer baseline pieces or spline knots");
  }
  const Eigen::MatrixXd inv =
      eig.eigenvectors() * eig.eigenvalues().cwiseInverse().asDiagonal() * eig.eigenvectors().transpose();
  return symmetrized(inv);
}

Eigen::MatrixXd variance_theta_star(const Dataset& data, const TransformedParams& theta_star_hat,
                                    const BaselineCuts& cuts, const SplineConfig& spline_cfg,
                                    const FitOptions& options) {
  return outer_product_covariance(score_per_cluster(data, theta_star_hat, cuts, spline_cfg, options.fd_step),
                                  options.condition_limit);
}

Eigen::MatrixXd variance_theta(const TransformedParams& theta_star_hat, const Eigen::MatrixXd& cov_theta_star) {
  const Eigen::MatrixXd jac = jacobian(theta_star_hat);
  if (cov_theta_star.rows() != jac.cols() || cov_theta_star.cols() != jac.cols()) {
    throw ConfigurationError("covariance dimension does not match theta*");
  }
  return symmetrized(jac * cov_theta_star * jac.transpose());
}

FitResult maximize(const Dataset& data, const TransformedParams& init, const BaselineCuts& cuts,
                   const SplineConfig& spline_cfg, const FitOptions& options) {
  const SingleIndexModel model(data, cuts, spline_cfg);
  const ParamLayout& layout = model.layout();
  const OptimizerResult opt = maximize_bfgs(
      [&](const Eigen::VectorXd& t) { return model.total(t); },
      [&](const Eigen::VectorXd& t) { return fd_gradient(model, t, options.fd_step); }, layout.flatten(init),
      options.optimizer);

  FitResult res;
  res.theta_star_hat = layout.unflatten(opt.x);
  res.theta_hat = from_unconstrained(res.theta_star_hat, cuts);
  res.cuts = cuts;
  res.spline = spline_cfg;
  res.loglik = opt.value;
  res.n_iterations = opt.iterations;
  res.converged = opt.converged;
  res.gradient_norm = opt.gradient.cwiseAbs().maxCoeff();
  res.extrapolation_active = model.extrapolation_active(opt.x);
  res.message = opt.message;
  try {
    res.cov_theta_star =
        outer_product_covariance(score_per_cluster(model, opt.x, options.fd_step), options.condition_limit);
    res.cov_theta = variance_theta(res.theta_star_hat, res.cov_theta_star);
  } catch (const NumericalError& e) {
    res.covariance_error = e.what();
  }
  return res;
}

FullFit fit_model(const Dataset& data, const FitOptions& options) {
  FullFit out;
  out.setup = prepare_fit(data, options);
  out.init = initialize(data, out.setup);
  out.result = maximize(data, out.init, out.setup.cuts, out.setup.spline, options);
  return out;
}

Prediction predict_individual(const Eigen::VectorXd& x, const Eigen::VectorXd& v, const FitResult& fit, int member,
                              const std::vector<double>& time_grid) {
  if (member != 0 && member != 1) throw ConfigurationError("member must be 0 or 1");
  const ModelParams& params = fit.theta_hat;
  if (x.size() != params.beta.size() || v.size() != params.alpha.size()) {
    throw ConfigurationError("covariate dimensions do not match the fitted model");
  }
  const SplineBasis basis(fit.spline);
  const IndexFunction index(basis, params.gamma.gamma);
  Prediction pred;
  pred.linear_predictor = params.beta.dot(x) + index.value_extended(params.alpha.dot(v), &pred.extrapolated);
  const double scale = std::exp(pred.linear_predictor);
  const PiecewiseHazard& baseline = params.baseline(member);
  for (double t : time_grid) {
    const double cum = cumulative_hazard(t, baseline) * scale;
    pred.time.push_back(t);
    pred.cumulative_hazard.push_back(cum);
    pred.survival.push_back(std::exp(-cum));
  }
  return pred;
}

}  // namespace bisurv
