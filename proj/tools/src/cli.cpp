#include "cli.hpp"

#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "bisurv/dataset.hpp"
#include "bisurv/errors.hpp"
#include "bisurv/fit.hpp"
#include "bisurv/hazard.hpp"
#include "bisurv/simulate.hpp"
#include "report.hpp"

namespace bisurv::cli {
namespace {

struct ModelFlags {
  std::vector<int> pieces{4};
  int knots = 3;
  int order = 3;
  int max_iterations = 500;
  double gradient_tol = 1e-5;

  FitOptions options() const {
    FitOptions o;
    if (pieces.empty() || pieces.size() > 2) throw ConfigurationError("--pieces takes one or two counts");
    o.pieces = {pieces.front(), pieces.back()};
    if (o.pieces[0] < 1 || o.pieces[1] < 1) throw ConfigurationError("--pieces must be positive");
    if (knots < 0) throw ConfigurationError("--knots must be nonnegative");
    o.interior_knots = knots;
    o.spline_order = order;
    o.optimizer.max_iterations = max_iterations;
    o.optimizer.gradient_tol = gradient_tol;
    return o;
  }
};

void add_model_flags(CLI::App* cmd, ModelFlags& f) {
  cmd->add_option("--pieces", f.pieces, "baseline pieces (one count for both margins, or two)")
      ->expected(1, 2)
      ->capture_default_str();
  cmd->add_option("--knots", f.knots, "interior spline knots")->capture_default_str();
  cmd->add_option("--order", f.order, "spline order")->capture_default_str();
  cmd->add_option("--max-iter", f.max_iterations, "optimizer iteration cap")->capture_default_str();
  cmd->add_option("--gtol", f.gradient_tol, "gradient max-norm tolerance")->capture_default_str();
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigurationError("cannot write '" + path + "'");
  return out;
}

void write_text(const std::string& path, const std::string& text) { open_out(path) << text; }

int member_index(int member) {
  if (member != 1 && member != 2) throw ConfigurationError("--member must be 1 or 2");
  return member - 1;
}

Eigen::VectorXd parse_vector(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

// fit ------------------------------------------------------------------------

struct FitArgs {
  std::string data;
  std::string out = "bisurv";
  bool no_standardize = false;
  bool linear = false;
  ModelFlags model;
};

int cmd_fit(const FitArgs& a, std::ostream& out) {
  const FitOptions options = a.model.options();
  const DatasetFile file = read_dataset(a.data);
  FitReportContext ctx;
  ctx.dataset_path = a.data;
  ctx.file = &file;
  ctx.options = options;
  if (!a.no_standardize) ctx.standardization = fit_standardization(file.data);
  const Dataset data = a.no_standardize ? file.data : standardize(file.data, ctx.standardization);
  choose_baseline_cuts(data, options.pieces, &ctx.cut_fallback);

  bool converged = false;
  std::string message;
  if (a.linear) {
    const LinearFitResult fit = fit_ph_linear(data, options.pieces, options);
    {
      auto params = open_out(a.out + "_params.csv");
      write_linear_params(params, fit);
    }
    write_text(a.out + "_fit.json", linear_manifest(fit, ctx));
    const PiecewiseHazard h1{fit.cuts.member1, fit.rho}, h2{fit.cuts.member2, fit.tau};
    auto cum = open_out(a.out + "_cumhaz.csv");
    write_individual_cumhaz(cum, file, data,
                            [&](const Eigen::VectorXd& x, const Eigen::VectorXd& v) {
                              return fit.beta.dot(x) + fit.alpha_tilde.dot(v);
                            },
                            h1, h2);
    converged = fit.converged;
    message = converged ? "converged" : "PH-linear fit did not converge";
    out << "model: PH-linear\nloglik: " << format_number(fit.loglik) << "\nparameters: " << fit.theta_star.size()
        << "\n";
    if (!fit.covariance_error.empty()) out << "warning: " << fit.covariance_error << "\n";
  } else {
    const FullFit full = fit_model(data, options);
    const FitResult& fit = full.result;
    {
      auto params = open_out(a.out + "_params.csv");
      write_fit_params(params, fit);
    }
    write_text(a.out + "_fit.json", fit_manifest(fit, ctx));
    const SplineBasis basis(fit.spline);
    const IndexFunction psi(basis, fit.theta_hat.gamma.gamma);
    auto cum = open_out(a.out + "_cumhaz.csv");
    write_individual_cumhaz(cum, file, data,
                            [&](const Eigen::VectorXd& x, const Eigen::VectorXd& v) {
                              return fit.theta_hat.beta.dot(x) + psi.value_extended(fit.theta_hat.alpha.dot(v));
                            },
                            fit.theta_hat.rho, fit.theta_hat.tau);
    converged = fit.converged;
    message = fit.message;
    out << "model: single-index\nloglik: " << format_number(fit.loglik)
        << "\nparameters: " << fit.layout().dim_theta() << "\niterations: " << fit.n_iterations << "\n";
    if (full.setup.linear_failed) out << "warning: PH-linear initialization failed: " << full.setup.linear_error << "\n";
    if (fit.extrapolation_active) out << "warning: index values outside the spline domain at the optimum\n";
    if (!fit.covariance_error.empty()) out << "warning: " << fit.covariance_error << "\n";
  }
  for (int j = 0; j < 2; ++j) {
    if (ctx.cut_fallback[j]) out << "note: member " << j + 1 << " cut points use event-time order statistics\n";
  }
  out << "status: " << message << "\n";
  return converged ? kSuccess : kNonConvergence;
}

// predict --------------------------------------------------------------------

struct PredictArgs {
  std::string fit;
  std::string out = "prediction.csv";
  std::vector<double> x;
  std::vector<double> v;
  int member = 1;
  int grid = 200;
  double tmax = 0.0;
};

int cmd_predict(const PredictArgs& a, std::ostream& out) {
  const LoadedModel model = load_manifest(a.fit);
  const int j = member_index(a.member);
  if (a.grid < 2) throw ConfigurationError("--grid needs at least 2 points");
  const double tmax = a.tmax > 0.0 ? a.tmax : model.max_time;
  if (!(tmax > 0.0)) throw ConfigurationError("--tmax must be positive");
  std::vector<double> grid(static_cast<std::size_t>(a.grid));
  for (int k = 0; k < a.grid; ++k) grid[k] = tmax * k / (a.grid - 1);

  const Eigen::VectorXd x = parse_vector(a.x);
  const Eigen::VectorXd v = model.standardization.apply(parse_vector(a.v));
  const ModelParams& params = model.fit.theta_hat;
  if (x.size() != params.beta.size()) {
    throw ConfigurationError("--x needs " + std::to_string(params.beta.size()) + " values");
  }
  Prediction pred;
  if (model.linear) {
    if (v.size() != model.alpha_tilde.size()) {
      throw ConfigurationError("--v needs " + std::to_string(model.alpha_tilde.size()) + " values");
    }
    pred.linear_predictor = params.beta.dot(x) + model.alpha_tilde.dot(v);
    for (double t : grid) {
      const double cum = cumulative_hazard(t, params.baseline(j)) * std::exp(pred.linear_predictor);
      pred.time.push_back(t);
      pred.cumulative_hazard.push_back(cum);
      pred.survival.push_back(std::exp(-cum));
    }
  } else {
    if (v.size() != params.alpha.size()) {
      throw ConfigurationError("--v needs " + std::to_string(params.alpha.size()) + " values");
    }
    pred = predict_individual(x, v, model.fit, j, grid);
  }
  auto file = open_out(a.out);
  file << "t,survival,cumhaz,extrapolated\n";
  for (std::size_t k = 0; k < pred.time.size(); ++k) {
    file << format_number(pred.time[k]) << ',' << format_number(pred.survival[k]) << ','
         << format_number(pred.cumulative_hazard[k]) << ',' << (pred.extrapolated ? 1 : 0) << '\n';
  }
  out << "linear predictor: " << format_number(pred.linear_predictor) << "\n";
  if (pred.extrapolated) out << "warning: index value outside the fitted spline domain (linear extrapolation)\n";
  return kSuccess;
}

// nonparam -------------------------------------------------------------------

struct NonparamArgs {
  std::string data;
  std::string out = "nonparam";
  int member = 1;
  int pieces = 4;
};

int cmd_nonparam(const NonparamArgs& a, std::ostream& out) {
  const int j = member_index(a.member);
  if (a.pieces < 1) throw ConfigurationError("--pieces must be positive");
  const DatasetFile file = read_dataset(a.data);
  std::vector<double> t;
  std::vector<int> d;
  for (const auto& c : file.data) t.push_back(c.y[j]), d.push_back(c.delta[j]);
  const StepFunction km = kaplan_meier(t, d);
  const StepFunction na = nelson_aalen(t, d);
  const CutSelection cuts = choose_cuts(t, d, a.pieces);

  auto csv = open_out(a.out + "_steps.csv");
  csv << "time,kaplan_meier,nelson_aalen\n";
  csv << "0," << format_number(km.start_value) << ',' << format_number(na.start_value) << '\n';
  for (std::size_t k = 0; k < km.jump_times.size(); ++k) {
    const double s = km.jump_times[k];
    csv << format_number(s) << ',' << format_number(km(s)) << ',' << format_number(na(s)) << '\n';
  }
  nlohmann::json j_cuts = {{"dataset", a.data},
                           {"member", a.member},
                           {"pieces", a.pieces},
                           {"cuts", cuts.cuts},
                           {"interior_cuts", std::vector<double>(cuts.cuts.begin() + 1, cuts.cuts.end())},
                           {"fallback", cuts.fallback}};
  write_text(a.out + "_cuts.json", j_cuts.dump(2) + "\n");
  out << "cuts:";
  for (double c : cuts.cuts) out << ' ' << format_number(c);
  out << (cuts.fallback ? " (order-statistic fallback)" : "") << "\n";
  return kSuccess;
}

// simulate -------------------------------------------------------------------

struct SimulateArgs {
  std::string out = "simulation";
  int n = 200;
  double phi = 0.5;
  double shape = 1.5;
  double censoring = 0.5;
  double beta = 1.0;
  int replicates = 100;
  std::uint64_t seed = 20190228;
  int threads = 0;
  bool factorial = false;
  std::string datasets_dir;
  ModelFlags model;
};

int cmd_simulate(const SimulateArgs& a, std::ostream& out) {
  ScenarioSpec base;
  base.n = a.n;
  base.phi_true = a.phi;
  base.weibull_shape = a.shape;
  base.target_censoring = a.censoring;
  base.beta_true = a.beta;
  base.replicates = a.replicates;
  base.seed = a.seed;
  base.threads = a.threads;
  base.fit_options = a.model.options();
  const std::vector<ScenarioSpec> specs = a.factorial ? factorial_design(base) : std::vector<ScenarioSpec>{base};
  for (const auto& s : specs) validate(s);

  std::vector<ReplicateSummary> rows;
  for (std::size_t c = 0; c < specs.size(); ++c) {
    rows.push_back(run_scenario(specs[c]));
    const auto& s = rows.back();
    out << s.label << ": " << s.converged << "/" << s.replicates << " converged" << (s.failed ? " [FAILED]" : "")
        << "\n";
    if (!a.datasets_dir.empty()) {
      std::filesystem::create_directories(a.datasets_dir);
      for (int i = 0; i < s.replicates; ++i) {
        Rng rng(stream_seed(s.spec.seed, static_cast<std::uint64_t>(i)));
        const DatasetFile f = make_dataset_file(generate_dataset(s.spec, s.censor_time, rng));
        const std::string name = "cell" + std::to_string(c + 1) + "_rep" + std::to_string(i + 1) + ".csv";
        auto os = open_out((std::filesystem::path(a.datasets_dir) / name).string());
        write_dataset(os, f);
      }
    }
  }
  {
    auto csv = open_out(a.out + "_summary.csv");
    write_summary_table(csv, rows);
  }
  write_text(a.out + "_summary.json", summary_sidecar(rows));
  bool any_failed = false;
  for (const auto& s : rows) any_failed = any_failed || s.failed;
  return any_failed ? kNonConvergence : kSuccess;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Partially linear single-index PH model for bivariate clustered survival data", "bisurv"};
  app.require_subcommand(1);

  FitArgs fit;
  auto* c_fit = app.add_subcommand("fit", "fit the single-index model (or the PH-linear model with --linear)");
  c_fit->add_option("data", fit.data, "dataset CSV")->required();
  c_fit->add_option("--out", fit.out, "output prefix")->capture_default_str();
  c_fit->add_flag("--no-standardize", fit.no_standardize, "use nonlinear covariates on their raw scale");
  c_fit->add_flag("--linear", fit.linear, "fit the PH-linear comparison model");
  add_model_flags(c_fit, fit.model);

  PredictArgs pred;
  auto* c_pred = app.add_subcommand("predict", "individual survival and cumulative hazard curves");
  c_pred->add_option("--fit", pred.fit, "fit manifest (<prefix>_fit.json)")->required();
  c_pred->add_option("--x", pred.x, "linear covariates, raw scale")->delimiter(',');
  c_pred->add_option("--v", pred.v, "nonlinear covariates, raw scale")->delimiter(',')->required();
  c_pred->add_option("--member", pred.member, "margin (1 or 2)")->capture_default_str();
  c_pred->add_option("--grid", pred.grid, "number of time points")->capture_default_str();
  c_pred->add_option("--tmax", pred.tmax, "last grid time (default: largest observed time)");
  c_pred->add_option("--out", pred.out, "output CSV")->capture_default_str();

  NonparamArgs np;
  auto* c_np = app.add_subcommand("nonparam", "Kaplan-Meier and Nelson-Aalen estimates for one margin");
  c_np->add_option("data", np.data, "dataset CSV")->required();
  c_np->add_option("--member", np.member, "margin (1 or 2)")->capture_default_str();
  c_np->add_option("--pieces", np.pieces, "baseline pieces for the cut-point report")->capture_default_str();
  c_np->add_option("--out", np.out, "output prefix")->capture_default_str();

  SimulateArgs sim;
  auto* c_sim = app.add_subcommand("simulate", "Monte-Carlo study of the estimator");
  c_sim->add_option("--n", sim.n, "clusters per replicate")->capture_default_str();
  c_sim->add_option("--phi", sim.phi, "true Clayton parameter")->capture_default_str();
  c_sim->add_option("--shape", sim.shape, "Weibull shape")->capture_default_str();
  c_sim->add_option("--censoring", sim.censoring, "target censoring fraction")->capture_default_str();
  c_sim->add_option("--beta", sim.beta, "true linear effect")->capture_default_str();
  c_sim->add_option("--replicates", sim.replicates, "replicates per scenario")->capture_default_str();
  c_sim->add_option("--seed", sim.seed, "base seed")->capture_default_str();
  c_sim->add_option("--threads", sim.threads, "worker threads (0 = all cores)")->capture_default_str();
  c_sim->add_flag("--factorial", sim.factorial, "run the 24-cell factorial design");
  c_sim->add_option("--datasets", sim.datasets_dir, "also write every replicate dataset into this directory");
  c_sim->add_option("--out", sim.out, "output prefix")->capture_default_str();
  add_model_flags(c_sim, sim.model);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kSuccess;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kSuccess;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n" << "run with --help for usage\n";
    return kUsage;
  }

  try {
    if (c_fit->parsed()) return cmd_fit(fit, out);
    if (c_pred->parsed()) return cmd_predict(pred, out);
    if (c_np->parsed()) return cmd_nonparam(np, out);
    return cmd_simulate(sim, out);
  } catch (const DataError& e) {
    err << "data error: " << e.what() << "\n";
    return kDataError;
  } catch (const ConfigurationError& e) {
    err << "usage error: " << e.what() << "\n";
    return kUsage;
  } catch (const ConstraintError& e) {
    err << "usage error: " << e.what() << "\n";
    return kUsage;
  } catch (const NumericalError& e) {
    err << "numerical error: " << e.what() << "\n";
    return kNonConvergence;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  }
}

}  // namespace bisurv::cli
