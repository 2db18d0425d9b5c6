#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "bisurv/dataset.hpp"
#include "bisurv/fit.hpp"
#include "bisurv/simulate.hpp"

namespace bisurv::cli {

// Fixed-format number text so repeated runs produce identical bytes.
std::string format_number(double v);
std::string format_optional(const std::optional<double>& v);

struct FitReportContext {
  std::string dataset_path;
  const DatasetFile* file = nullptr;
  Standardization standardization;  // empty when disabled
  std::array<bool, 2> cut_fallback{false, false};
  FitOptions options;
};

// Parameter table: parameter, scale (theta | theta_star | derived), estimate, se.
void write_fit_params(std::ostream& out, const FitResult& fit);
void write_linear_params(std::ostream& out, const LinearFitResult& fit);

// JSON manifest with cuts, knots, transform and estimates; read back by predict.
std::string fit_manifest(const FitResult& fit, const FitReportContext& ctx);
std::string linear_manifest(const LinearFitResult& fit, const FitReportContext& ctx);

// Per-individual fitted cumulative hazard at the observed time next to the
// Nelson-Aalen estimate of the same margin.
void write_individual_cumhaz(std::ostream& out, const DatasetFile& file, const Dataset& fit_data,
                             const std::function<double(const Eigen::VectorXd&, const Eigen::VectorXd&)>& lp,
                             const PiecewiseHazard& h1, const PiecewiseHazard& h2);

// Model reconstructed from a manifest.
struct LoadedModel {
  bool linear = false;
  FitResult fit;                 // single-index model
  Eigen::VectorXd alpha_tilde;   // linear model
  Standardization standardization;
  double max_time = 0.0;
};

LoadedModel load_manifest(const std::string& path);

void write_summary_table(std::ostream& out, const std::vector<ReplicateSummary>& rows);
std::string summary_sidecar(const std::vector<ReplicateSummary>& rows);

}  // namespace bisurv::cli
