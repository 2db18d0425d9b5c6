#include "report.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "bisurv/errors.hpp"

namespace bisurv::cli {
namespace {

using nlohmann::json;

std::vector<double> to_std(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

Eigen::VectorXd to_eigen(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

std::string se_text(const Eigen::MatrixXd& cov, int k) {
  if (cov.size() == 0) return "";
  return format_number(std::sqrt(std::max(cov(k, k), 0.0)));
}

json common_manifest(const FitReportContext& ctx, const BaselineCuts& cuts) {
  json j;
  j["dataset"] = ctx.dataset_path;
  if (ctx.file) {
    j["n_clusters"] = ctx.file->data.size();
    j["x_names"] = ctx.file->x_names;
    j["v_names"] = ctx.file->v_names;
    double tmax = 0.0;
    for (const auto& c : ctx.file->data) tmax = std::max({tmax, c.y[0], c.y[1]});
    j["max_time"] = tmax;
  }
  j["standardization"] = {{"enabled", !ctx.standardization.empty()},
                          {"mean", to_std(ctx.standardization.mean)},
                          {"sd", to_std(ctx.standardization.sd)}};
  j["cuts"] = {{"member1", cuts.member1}, {"member2", cuts.member2}, {"fallback", ctx.cut_fallback}};
  j["options"] = {{"pieces", ctx.options.pieces},
                  {"interior_knots", ctx.options.interior_knots},
                  {"order", ctx.options.spline_order},
                  {"max_iterations", ctx.options.optimizer.max_iterations},
                  {"gradient_tol", ctx.options.optimizer.gradient_tol}};
  return j;
}

std::vector<double> vec_of(const json& j, const char* key) { return j.at(key).get<std::vector<double>>(); }

}  // namespace

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.8g", v);
  return buf;
}

std::string format_optional(const std::optional<double>& v) { return v ? format_number(*v) : ""; }

void write_fit_params(std::ostream& out, const FitResult& fit) {
  const ParamLayout lay = fit.layout();
  out << "parameter,scale,estimate,se\n";
  const auto theta = lay.flatten(fit.theta_hat);
  const auto names = lay.theta_names();
  for (int k = 0; k < lay.dim_theta(); ++k) {
    out << names[k] << ",theta," << format_number(theta[k]) << ',' << se_text(fit.cov_theta, k) << '\n';
  }
  const auto theta_star = lay.flatten(fit.theta_star_hat);
  const auto star_names = lay.theta_star_names();
  for (int k = 0; k < lay.dim_theta_star(); ++k) {
    out << star_names[k] << ",theta_star," << format_number(theta_star[k]) << ',' << se_text(fit.cov_theta_star, k)
        << '\n';
  }
  out << "loglik,derived," << format_number(fit.loglik) << ",\n";
}

void write_linear_params(std::ostream& out, const LinearFitResult& fit) {
  const int r = static_cast<int>(fit.rho.size()), s = static_cast<int>(fit.tau.size());
  const int q = static_cast<int>(fit.alpha_tilde.size()), p = static_cast<int>(fit.beta.size());
  std::vector<std::string> theta_names{"phi"};
  std::vector<std::string> star_names{"varrho"};
  for (int k = 1; k <= r; ++k) theta_names.push_back("rho" + std::to_string(k)), star_names.push_back("xi" + std::to_string(k));
  for (int k = 1; k <= s; ++k) theta_names.push_back("tau" + std::to_string(k)), star_names.push_back("zeta" + std::to_string(k));
  for (int k = 1; k <= q; ++k) {
    theta_names.push_back("alpha_tilde" + std::to_string(k));
    star_names.push_back("alpha_tilde" + std::to_string(k));
  }
  for (int k = 1; k <= p; ++k) theta_names.push_back("beta" + std::to_string(k)), star_names.push_back("beta" + std::to_string(k));

  Eigen::VectorXd theta = fit.theta_star;
  for (int k = 0; k < 1 + r + s; ++k) theta[k] = std::exp(theta[k]);
  out << "parameter,scale,estimate,se\n";
  for (int k = 0; k < theta.size(); ++k) {
    out << theta_names[k] << ",theta," << format_number(theta[k]) << ',' << se_text(fit.cov_theta, k) << '\n';
  }
  for (int k = 0; k < fit.theta_star.size(); ++k) {
    out << star_names[k] << ",theta_star," << format_number(fit.theta_star[k]) << ','
        << se_text(fit.cov_theta_star, k) << '\n';
  }
  out << "b_hat,derived," << format_number(fit.b_hat) << ",\n";
  for (int k = 0; k < q; ++k) {
    out << "alpha" << k + 1 << ",derived," << format_number(fit.alpha_hat[k]) << ",\n";
  }
  out << "loglik,derived," << format_number(fit.loglik) << ",\n";
}

std::string fit_manifest(const FitResult& fit, const FitReportContext& ctx) {
  json j = common_manifest(ctx, fit.cuts);
  j["model"] = "single_index";
  j["spline"] = {{"order", fit.spline.order},
                 {"interior_knots", fit.spline.interior_knots},
                 {"domain", {fit.spline.domain_lo, fit.spline.domain_hi}},
                 {"dimension", fit.spline.dimension()}};
  const ModelParams& m = fit.theta_hat;
  j["estimates"] = {{"phi", m.phi.phi},
                    {"rho", m.rho.rates},
                    {"tau", m.tau.rates},
                    {"alpha", to_std(m.alpha)},
                    {"beta", to_std(m.beta)},
                    {"gamma", to_std(m.gamma.gamma)}};
  j["n_parameters"] = fit.layout().dim_theta();
  j["loglik"] = fit.loglik;
  j["converged"] = fit.converged;
  j["iterations"] = fit.n_iterations;
  j["gradient_norm"] = fit.gradient_norm;
  j["extrapolation_active"] = fit.extrapolation_active;
  j["message"] = fit.message;
  j["covariance_error"] = fit.covariance_error;
  return j.dump(2) + "\n";
}

std::string linear_manifest(const LinearFitResult& fit, const FitReportContext& ctx) {
  json j = common_manifest(ctx, fit.cuts);
  j["model"] = "linear";
  j["estimates"] = {{"phi", fit.phi},
                    {"rho", fit.rho},
                    {"tau", fit.tau},
                    {"alpha_tilde", to_std(fit.alpha_tilde)},
                    {"b_hat", fit.b_hat},
                    {"alpha_hat", to_std(fit.alpha_hat)},
                    {"beta", to_std(fit.beta)}};
  j["n_parameters"] = fit.theta_star.size();
  j["loglik"] = fit.loglik;
  j["converged"] = fit.converged;
  j["iterations"] = fit.n_iterations;
  j["gradient_norm"] = fit.gradient_norm;
  j["covariance_error"] = fit.covariance_error;
  return j.dump(2) + "\n";
}

void write_individual_cumhaz(std::ostream& out, const DatasetFile& file, const Dataset& fit_data,
                             const std::function<double(const Eigen::VectorXd&, const Eigen::VectorXd&)>& lp,
                             const PiecewiseHazard& h1, const PiecewiseHazard& h2) {
  std::array<StepFunction, 2> na;
  for (int j = 0; j < 2; ++j) {
    std::vector<double> t;
    std::vector<int> d;
    for (const auto& c : fit_data) t.push_back(c.y[j]), d.push_back(c.delta[j]);
    na[j] = nelson_aalen(t, d);
  }
  out << "cluster_id,member,time,status,cumhaz,nelson_aalen\n";
  for (std::size_t i = 0; i < fit_data.size(); ++i) {
    const auto& c = fit_data[i];
    for (int j = 0; j < 2; ++j) {
      const double cum = cumulative_hazard(c.y[j], j == 0 ? h1 : h2) * std::exp(lp(c.x[j], c.v[j]));
      out << file.cluster_ids[i] << ',' << j + 1 << ',' << format_number(c.y[j]) << ',' << c.delta[j] << ','
          << format_number(cum) << ',' << format_number(na[j](c.y[j])) << '\n';
    }
  }
}

LoadedModel load_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open fit report '" + path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw DataError("fit report '" + path + "' is not valid JSON: " + e.what());
  }
  try {
    LoadedModel m;
    const json& est = j.at("estimates");
    const json& st = j.at("standardization");
    if (st.at("enabled").get<bool>()) {
      m.standardization.mean = to_eigen(vec_of(st, "mean"));
      m.standardization.sd = to_eigen(vec_of(st, "sd"));
    }
    m.max_time = j.value("max_time", 0.0);
    BaselineCuts cuts;
    cuts.member1 = vec_of(j.at("cuts"), "member1");
    cuts.member2 = vec_of(j.at("cuts"), "member2");
    ModelParams& p = m.fit.theta_hat;
    p.phi.phi = est.at("phi").get<double>();
    p.rho = PiecewiseHazard{cuts.member1, vec_of(est, "rho")};
    p.tau = PiecewiseHazard{cuts.member2, vec_of(est, "tau")};
    p.beta = to_eigen(vec_of(est, "beta"));
    m.fit.cuts = cuts;
    const std::string model = j.at("model").get<std::string>();
    if (model == "linear") {
      m.linear = true;
      m.alpha_tilde = to_eigen(vec_of(est, "alpha_tilde"));
      return m;
    }
    if (model != "single_index") throw DataError("unknown model '" + model + "' in fit report");
    const json& sp = j.at("spline");
    m.fit.spline.order = sp.at("order").get<int>();
    m.fit.spline.interior_knots = sp.at("interior_knots").get<std::vector<double>>();
    m.fit.spline.domain_lo = sp.at("domain").at(0).get<double>();
    m.fit.spline.domain_hi = sp.at("domain").at(1).get<double>();
    p.alpha = to_eigen(vec_of(est, "alpha"));
    p.gamma.gamma = to_eigen(vec_of(est, "gamma"));
    validate(p);
    return m;
  } catch (const json::exception& e) {
    throw DataError("fit report '" + path + "' is missing fields: " + e.what());
  }
}

void write_summary_table(std::ostream& out, const std::vector<ReplicateSummary>& rows) {
  if (rows.empty()) return;
  out << "n,phi,shape,censoring,censor_time,replicates,converged,nonconvergence,failed,realized_censoring";
  for (const auto& p : rows.front().proposed) {
    out << ',' << p.name << "_true," << p.name << "_bias," << p.name << "_sd," << p.name << "_ase," << p.name
        << "_cov";
  }
  for (const auto& p : rows.front().linear) out << ",linear_" << p.name << "_mean,linear_" << p.name << "_sd";
  out << ",ise_win_fraction,mean_ise_proposed,mean_ise_linear\n";
  for (const auto& s : rows) {
    out << s.spec.n << ',' << format_number(s.spec.phi_true) << ',' << format_number(s.spec.weibull_shape) << ','
        << format_number(s.spec.target_censoring) << ',' << format_number(s.censor_time) << ',' << s.replicates << ','
        << s.converged << ',' << format_number(s.nonconvergence_fraction) << ',' << (s.failed ? 1 : 0) << ','
        << format_number(s.mean_realized_censoring);
    for (const auto& p : s.proposed) {
      out << ',' << format_number(p.truth) << ',' << (p.count ? format_number(p.bias) : "") << ','
          << format_optional(p.sd) << ',' << format_optional(p.mean_se) << ',' << format_optional(p.coverage);
    }
    for (const auto& p : s.linear) out << ',' << (p.count ? format_number(p.mean) : "") << ',' << format_optional(p.sd);
    out << ',' << format_number(s.ise_win_fraction) << ',' << format_number(s.mean_ise_proposed) << ','
        << format_number(s.mean_ise_linear) << '\n';
  }
}

std::string summary_sidecar(const std::vector<ReplicateSummary>& rows) {
  json j;
  j["scenarios"] = json::array();
  for (const auto& s : rows) {
    json cell = {{"label", s.label},
                 {"n", s.spec.n},
                 {"phi", s.spec.phi_true},
                 {"shape", s.spec.weibull_shape},
                 {"target_censoring", s.spec.target_censoring},
                 {"beta", s.spec.beta_true},
                 {"alpha", to_std(s.spec.alpha_true)},
                 {"seed", s.spec.seed},
                 {"censor_time", s.censor_time},
                 {"replicates", s.replicates},
                 {"converged", s.converged},
                 {"failed", s.failed}};
    json failures = json::array();
    for (const auto& r : s.records) {
      if (!r.converged) failures.push_back({{"replicate", r.index}, {"message", r.error}});
    }
    cell["nonconverged"] = failures;
    j["scenarios"].push_back(cell);
  }
  j["columns"] = {{"_bias", "mean estimate minus truth over converged replicates"},
                  {"_sd", "sample standard deviation of estimates"},
                  {"_ase", "average model-based standard error"},
                  {"_cov", "empirical coverage of estimate +/- 1.96 SE"}};
  return j.dump(2) + "\n";
}

}  // namespace bisurv::cli
