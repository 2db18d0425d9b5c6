#include "bisurv/hazard.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "bisurv/errors.hpp"

namespace bisurv {
namespace {

constexpr double kLevelTol = 1e-12;

void check_sample(std::span<const double> times, std::span<const int> status) {
  if (times.empty()) throw DomainError("empty survival sample");
  if (times.size() != status.size()) throw DomainError("times and status differ in length");
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (!(times[i] >= 0.0) || !std::isfinite(times[i])) {
      throw DomainError("survival times must be finite and nonnegative", times[i]);
    }
    if (status[i] != 0 && status[i] != 1) throw DomainError("status must be 0 or 1");
  }
}

// Distinct event times with (events, at-risk) counts; censorings tied with an
// event time remain in that risk set.
struct EventTable {
  std::vector<double> time;
  std::vector<double> events;
  std::vector<double> at_risk;
};

EventTable tabulate(std::span<const double> times, std::span<const int> status) {
  std::vector<std::size_t> order(times.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (times[a] != times[b]) return times[a] < times[b];
    return status[a] > status[b];
  });
  EventTable table;
  const auto n = static_cast<double>(times.size());
  std::size_t i = 0;
  while (i < order.size()) {
    const double t = times[order[i]];
    std::size_t j = i;
    double d = 0.0;
    while (j < order.size() && times[order[j]] == t) {
      d += status[order[j]];
      ++j;
    }
    if (d > 0.0) {
      table.time.push_back(t);
      table.events.push_back(d);
      table.at_risk.push_back(n - static_cast<double>(i));
    }
    i = j;
  }
  return table;
}

}  // namespace

void validate_cuts(std::span<const double> cuts) {
  if (cuts.empty() || cuts.front() != 0.0) throw ConfigurationError("cut points must start at 0");
  for (std::size_t k = 1; k < cuts.size(); ++k) {
    if (!(cuts[k] > cuts[k - 1]) || !std::isfinite(cuts[k])) {
      throw ConfigurationError("cut points must be finite and strictly increasing");
    }
  }
}

void validate(const PiecewiseHazard& h) {
  validate_cuts(h.cuts);
  if (h.rates.size() != h.cuts.size()) {
    throw ConfigurationError("hazard has " + std::to_string(h.cuts.size()) + " cuts but " +
                             std::to_string(h.rates.size()) + " rates");
  }
  for (double r : h.rates) {
    if (!(r > 0.0) || !std::isfinite(r)) throw ConfigurationError("hazard rates must be positive and finite");
  }
}

int interval_index(double t, std::span<const double> cuts) {
  if (!(t > 0.0)) throw DomainError("hazard evaluated at nonpositive time", t);
  const auto it = std::lower_bound(cuts.begin(), cuts.end(), t);
  return static_cast<int>(it - cuts.begin()) - 1;
}

std::vector<double> interval_exposure(double t, std::span<const double> cuts) {
  if (!(t >= 0.0)) throw DomainError("negative time", t);
  std::vector<double> out(cuts.size(), 0.0);
  for (std::size_t k = 0; k < cuts.size(); ++k) {
    const double upper = k + 1 < cuts.size() ? std::min(cuts[k + 1], t) : t;
    out[k] = std::max(0.0, upper - cuts[k]);
  }
  return out;
}

double cumulative_hazard(double t, const PiecewiseHazard& h) {
  if (!(t >= 0.0)) throw DomainError("cumulative hazard at negative time", t);
  double acc = 0.0;
  const std::size_t k_max = h.cuts.size();
  for (std::size_t k = 0; k < k_max; ++k) {
    if (t <= h.cuts[k]) break;
    const double upper = k + 1 < k_max ? std::min(h.cuts[k + 1], t) : t;
    acc += h.rates[k] * (upper - h.cuts[k]);
  }
  return acc;
}

double hazard_at(double t, const PiecewiseHazard& h) { return h.rates[interval_index(t, h.cuts)]; }

double StepFunction::operator()(double t) const {
  const auto it = std::upper_bound(jump_times.begin(), jump_times.end(), t);
  if (it == jump_times.begin()) return start_value;
  return values[static_cast<std::size_t>(it - jump_times.begin()) - 1];
}

StepFunction kaplan_meier(std::span<const double> times, std::span<const int> status) {
  check_sample(times, status);
  const EventTable table = tabulate(times, status);
  StepFunction km;
  km.start_value = 1.0;
  double s = 1.0;
  for (std::size_t i = 0; i < table.time.size(); ++i) {
    s *= 1.0 - table.events[i] / table.at_risk[i];
    km.jump_times.push_back(table.time[i]);
    km.values.push_back(s);
  }
  return km;
}

StepFunction nelson_aalen(std::span<const double> times, std::span<const int> status) {
  check_sample(times, status);
  const EventTable table = tabulate(times, status);
  StepFunction na;
  na.start_value = 0.0;
  double acc = 0.0;
  for (std::size_t i = 0; i < table.time.size(); ++i) {
    acc += table.events[i] / table.at_risk[i];
    na.jump_times.push_back(table.time[i]);
    na.values.push_back(acc);
  }
  return na;
}

CutSelection choose_cuts(std::span<const double> times, std::span<const int> status, int n_pieces) {
  if (n_pieces < 1) throw ConfigurationError("need at least one hazard piece");
  CutSelection sel;
  sel.cuts = {0.0};
  if (n_pieces == 1) return sel;

  const StepFunction km = kaplan_meier(times, status);
  bool reached = true;
  for (int j = 1; j < n_pieces && reached; ++j) {
    const double level = 1.0 - static_cast<double>(j) / n_pieces;
    const auto it = std::find_if(km.values.begin(), km.values.end(),
                                 [&](double s) { return s <= level + kLevelTol; });
    if (it == km.values.end()) {
      reached = false;
      break;
    }
    const double t = km.jump_times[static_cast<std::size_t>(it - km.values.begin())];
    if (!(t > sel.cuts.back())) {
      reached = false;
      break;
    }
    sel.cuts.push_back(t);
  }
  if (reached) return sel;

  std::vector<double> event_times;
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (status[i] == 1) event_times.push_back(times[i]);
  }
  std::sort(event_times.begin(), event_times.end());
  if (event_times.size() < static_cast<std::size_t>(n_pieces)) {
    throw ConfigurationError("only " + std::to_string(event_times.size()) + " events for " +
                             std::to_string(n_pieces) + " hazard pieces");
  }
  sel.cuts = {0.0};
  sel.fallback = true;
  const auto n_events = static_cast<double>(event_times.size());
  for (int j = 1; j < n_pieces; ++j) {
    const auto rank = static_cast<std::size_t>(std::ceil(n_events * j / n_pieces));
    const double t = event_times[std::max<std::size_t>(rank, 1) - 1];
    if (!(t > sel.cuts.back())) {
      throw ConfigurationError("tied event times leave an empty hazard interval");
    }
    sel.cuts.push_back(t);
  }
  return sel;
}

std::vector<double> occurrence_exposure_rates(std::span<const double> times, std::span<const int> status,
                                              std::span<const double> cuts) {
  check_sample(times, status);
  validate_cuts(cuts);
  std::vector<double> events(cuts.size(), 0.0);
  std::vector<double> exposure(cuts.size(), 0.0);
  for (std::size_t i = 0; i < times.size(); ++i) {
    const std::vector<double> e = interval_exposure(times[i], cuts);
    for (std::size_t k = 0; k < cuts.size(); ++k) exposure[k] += e[k];
    if (status[i] == 1 && times[i] > 0.0) events[interval_index(times[i], cuts)] += 1.0;
  }
  std::vector<double> rates(cuts.size());
  for (std::size_t k = 0; k < cuts.size(); ++k) {
    rates[k] = std::max(events[k], 0.5) / std::max(exposure[k], 1e-12);
  }
  return rates;
}

}  // namespace bisurv
