#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "bisurv/fit.hpp"
#include "bisurv/likelihood.hpp"
#include "bisurv/random.hpp"

namespace bisurv {

// One cell of the simulation design. Times follow a Weibull(shape, scale 1)
// baseline with covariate effect beta x + 3 sin(2 alpha'v), members coupled by
// a Clayton copula, and a fixed censoring time calibrated to target_censoring.
struct ScenarioSpec {
  int n = 200;
  double phi_true = 0.5;
  double weibull_shape = 1.5;
  double target_censoring = 0.5;
  double beta_true = 1.0;
  Eigen::VectorXd alpha_true = Eigen::VectorXd::Constant(3, 1.0 / std::sqrt(3.0));
  int replicates = 100;
  std::uint64_t seed = 20190228;
  FitOptions fit_options;
  int threads = 0;  // 0 = hardware concurrency

  std::string label() const;
};

void validate(const ScenarioSpec& spec);

double true_psi(double u);

// Event time for a given survival draw u and linear predictor eta.
double weibull_time(double u, double eta, double shape);

// C = +infinity means no censoring.
ClusterObservation generate_cluster(const ScenarioSpec& spec, double censor_time, Rng& rng);
Dataset generate_dataset(const ScenarioSpec& spec, double censor_time, Rng& rng);

// Bisection on C against the Monte-Carlo fraction P(T > C) over mc_size
// individuals, until within tolerance of the target. Target 0 gives +infinity.
double calibrate_censoring(const ScenarioSpec& spec, Rng& rng, int mc_size = 100000, double tolerance = 0.005);

double censoring_fraction(const Dataset& data);

// Integrated squared error of f against 3 sin(2u) over [-1, 1].
double integrated_squared_error(const std::function<double(double)>& f);

struct ReplicateRecord {
  int index = 0;
  bool converged = false;
  bool has_se = false;
  std::string error;
  double realized_censoring = 0.0;
  // Tracked proposed-model quantities: alpha_1..q, beta_1..p, phi, varphi_1..q-1, varrho.
  Eigen::VectorXd estimate;
  Eigen::VectorXd se;
  bool extrapolation_active = false;
  double loglik = 0.0;
  // PH-linear comparison: alpha_hat_1..q, beta_1..p, phi, b_hat.
  bool linear_converged = false;
  Eigen::VectorXd linear_estimate;
  double ise_proposed = 0.0;
  double ise_linear = 0.0;
};

struct ParameterSummary {
  std::string name;
  double truth = 0.0;
  double mean = 0.0;
  double bias = 0.0;
  std::optional<double> sd;
  std::optional<double> mean_se;
  std::optional<double> coverage;
  int count = 0;
};

struct ReplicateSummary {
  std::string label;
  ScenarioSpec spec;
  double censor_time = 0.0;
  int replicates = 0;
  int converged = 0;
  double nonconvergence_fraction = 0.0;
  bool failed = false;  // more than 20% of replicates did not converge
  double mean_realized_censoring = 0.0;
  std::vector<ParameterSummary> proposed;
  std::vector<ParameterSummary> linear;
  double ise_win_fraction = 0.0;  // replicates where psi-hat beats the linear proxy
  double mean_ise_proposed = 0.0;
  double mean_ise_linear = 0.0;
  std::vector<ReplicateRecord> records;

  const ParameterSummary* find(const std::string& name, bool linear_model = false) const;
};

std::vector<std::string> tracked_parameter_names(int q, int p);
std::vector<std::string> linear_parameter_names(int q, int p);

ReplicateRecord run_replicate(const ScenarioSpec& spec, double censor_time, int index);
ReplicateSummary summarize(const ScenarioSpec& spec, double censor_time, std::vector<ReplicateRecord> records);
ReplicateSummary run_scenario(const ScenarioSpec& spec);

// n in {80, 200}, phi in {0.5, 1, 4}, shape in {0.5, 1.5}, censoring in {0.2, 0.5}.
// The two censoring levels of a cell pair reuse one seed, so they censor the
// same latent event times.
std::vector<ScenarioSpec> factorial_design(const ScenarioSpec& base);
std::vector<ReplicateSummary> run_factorial(const std::vector<ScenarioSpec>& specs);

}  // namespace bisurv
