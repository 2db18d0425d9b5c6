#pragma once

#include <span>
#include <vector>

namespace bisurv {

// Piecewise-constant baseline hazard. cuts = (0 = c_0 < c_1 < ... < c_{K-1});
// interval k is (c_k, c_{k+1}] and the last interval extends to infinity.
struct PiecewiseHazard {
  std::vector<double> cuts{0.0};
  std::vector<double> rates{1.0};

  int pieces() const { return static_cast<int>(rates.size()); }
};

// Throws ConfigurationError unless cuts start at 0, increase strictly, the
// rate count matches, and every rate is positive and finite.
void validate(const PiecewiseHazard& h);
void validate_cuts(std::span<const double> cuts);

// Index k of the interval (c_k, c_{k+1}] containing t > 0.
int interval_index(double t, std::span<const double> cuts);

// Length of (0, t] intersected with each interval.
std::vector<double> interval_exposure(double t, std::span<const double> cuts);

double cumulative_hazard(double t, const PiecewiseHazard& h);
double hazard_at(double t, const PiecewiseHazard& h);

// Right-continuous step function: value(t) = values[i] for the last
// jump_times[i] <= t, and start_value before the first jump.
struct StepFunction {
  std::vector<double> jump_times;
  std::vector<double> values;
  double start_value = 0.0;

  double operator()(double t) const;
};

// Events precede censorings at tied times.
StepFunction kaplan_meier(std::span<const double> times, std::span<const int> status);
StepFunction nelson_aalen(std::span<const double> times, std::span<const int> status);

struct CutSelection {
  std::vector<double> cuts;  // starts with 0
  bool fallback = false;     // equal-count event quantiles were used
};

// Cuts where the Kaplan-Meier curve first drops to 1 - j/n_pieces. When some
// level is never reached, cuts fall back to equal-count event-time order
// statistics and the selection is flagged.
CutSelection choose_cuts(std::span<const double> times, std::span<const int> status, int n_pieces);

// Occurrence/exposure rate per interval; intervals without events get half an
// event so every rate stays positive.
std::vector<double> occurrence_exposure_rates(std::span<const double> times, std::span<const int> status,
                                              std::span<const double> cuts);

}  // namespace bisurv
