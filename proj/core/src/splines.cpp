#include "bisurv/splines.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

#include "bisurv/errors.hpp"

namespace bisurv {
namespace {

constexpr int kMaxOrder = 16;
constexpr double kRoundOffTol = 1e-12;
constexpr double kDomainMargin = 1e-6;

double type7_quantile(const std::vector<double>& sorted, double prob) {
  const double h = prob * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

}  // namespace

void validate(const SplineConfig& cfg) {
  if (cfg.order < 1 || cfg.order > kMaxOrder) {
    throw ConfigurationError("spline order must be in [1, " + std::to_string(kMaxOrder) + "]");
  }
  if (!(cfg.domain_lo < cfg.domain_hi)) {
    throw ConfigurationError("spline domain requires L < U");
  }
  if (cfg.domain_lo > 0.0 || cfg.domain_hi < 0.0) {
    throw ConfigurationError("spline domain must contain 0");
  }
  double prev = cfg.domain_lo;
  for (double k : cfg.interior_knots) {
    if (!(k > prev)) throw ConfigurationError("interior knots must be strictly increasing inside (L, U)");
    prev = k;
  }
  if (!cfg.interior_knots.empty() && !(cfg.interior_knots.back() < cfg.domain_hi)) {
    throw ConfigurationError("interior knots must lie strictly inside (L, U)");
  }
}

SplineBasis::SplineBasis(SplineConfig cfg) : cfg_(std::move(cfg)) {
  validate(cfg_);
  dim_ = cfg_.dimension();
  const int m = cfg_.order;
  knots_.assign(m, cfg_.domain_lo);
  knots_.insert(knots_.end(), cfg_.interior_knots.begin(), cfg_.interior_knots.end());
  knots_.insert(knots_.end(), m, cfg_.domain_hi);

  knots_next_.assign(m + 1, cfg_.domain_lo);
  knots_next_.insert(knots_next_.end(), cfg_.interior_knots.begin(), cfg_.interior_knots.end());
  knots_next_.insert(knots_next_.end(), m + 1, cfg_.domain_hi);
}

bool SplineBasis::contains(double u) const {
  const double tol = kRoundOffTol * (cfg_.domain_hi - cfg_.domain_lo);
  return u >= cfg_.domain_lo - tol && u <= cfg_.domain_hi + tol;
}

double SplineBasis::checked(double u) const {
  if (!contains(u)) {
    throw DomainError("index value " + std::to_string(u) + " outside spline domain [" +
                          std::to_string(cfg_.domain_lo) + ", " + std::to_string(cfg_.domain_hi) + "]",
                      u);
  }
  return std::clamp(u, cfg_.domain_lo, cfg_.domain_hi);
}

int SplineBasis::nonzero_bsplines(const std::vector<double>& t, int k, double u, std::span<double> n) {
  const int n_basis = static_cast<int>(t.size()) - k;
  int span;
  if (u >= t[n_basis]) {
    span = n_basis - 1;
    while (span > k - 1 && t[span] == t[span + 1]) --span;
  } else {
    span = static_cast<int>(std::upper_bound(t.begin() + (k - 1), t.begin() + n_basis, u) - t.begin()) - 1;
  }

  std::array<double, kMaxOrder + 2> left{};
  std::array<double, kMaxOrder + 2> right{};
  n[0] = 1.0;
  for (int j = 1; j < k; ++j) {
    left[j] = u - t[span + 1 - j];
    right[j] = t[span + j] - u;
    double saved = 0.0;
    for (int r = 0; r < j; ++r) {
      const double temp = n[r] / (right[r + 1] + left[j - r]);
      n[r] = saved + right[r + 1] * temp;
      saved = left[j - r] * temp;
    }
    n[j] = saved;
  }
  return span;
}

void SplineBasis::mspline(double u, std::span<double> out) const {
  u = checked(u);
  const int m = cfg_.order;
  std::array<double, kMaxOrder + 1> b{};
  const int span = nonzero_bsplines(knots_, m, u, b);
  std::fill(out.begin(), out.end(), 0.0);
  for (int r = 0; r < m; ++r) {
    const int j = span - m + 1 + r;
    out[j] = b[r] * m / (knots_[j + m] - knots_[j]);
  }
}

void SplineBasis::ispline(double u, std::span<double> out) const {
  u = checked(u);
  const int k = cfg_.order + 1;
  std::array<double, kMaxOrder + 2> b{};
  // Order m+1 B-splines B_0..B_d on the knot sequence with one extra boundary
  // knot at each end; I_i = sum_{j > i} B_j.
  const int span = nonzero_bsplines(knots_next_, k, u, b);
  const int first = span - k + 1;
  double tail = 0.0;
  for (int i = dim_ - 1; i >= 0; --i) {
    const int j = i + 1;
    if (j > span) {
      out[i] = 0.0;
    } else if (j < first) {
      out[i] = 1.0;
    } else {
      tail += b[j - first];
      out[i] = std::min(tail, 1.0);
    }
  }
}

Eigen::VectorXd SplineBasis::mspline(double u) const {
  Eigen::VectorXd v(dim_);
  mspline(u, std::span<double>(v.data(), dim_));
  return v;
}

Eigen::VectorXd SplineBasis::ispline(double u) const {
  Eigen::VectorXd v(dim_);
  ispline(u, std::span<double>(v.data(), dim_));
  return v;
}

IndexFunction::IndexFunction(const SplineBasis& basis, Eigen::VectorXd gamma)
    : basis_(&basis), gamma_(std::move(gamma)) {
  if (gamma_.size() != basis.dimension()) {
    throw ConfigurationError("gamma length " + std::to_string(gamma_.size()) +
                             " does not match spline dimension " + std::to_string(basis.dimension()));
  }
  i0_ = basis.ispline(0.0);
  value_lo_ = value(basis.lo());
  value_hi_ = value(basis.hi());
  slope_lo_ = derivative(basis.lo());
  slope_hi_ = derivative(basis.hi());
}

double IndexFunction::value(double u) const {
  std::array<double, 64> stack{};
  std::vector<double> heap;
  std::span<double> buf;
  const int d = basis_->dimension();
  if (d <= static_cast<int>(stack.size())) {
    buf = std::span<double>(stack.data(), d);
  } else {
    heap.resize(d);
    buf = heap;
  }
  basis_->ispline(u, buf);
  double acc = 0.0;
  for (int j = 0; j < d; ++j) acc += gamma_[j] * (buf[j] - i0_[j]);
  return acc;
}

double IndexFunction::derivative(double u) const {
  std::array<double, 64> stack{};
  std::vector<double> heap;
  std::span<double> buf;
  const int d = basis_->dimension();
  if (d <= static_cast<int>(stack.size())) {
    buf = std::span<double>(stack.data(), d);
  } else {
    heap.resize(d);
    buf = heap;
  }
  basis_->mspline(u, buf);
  double acc = 0.0;
  for (int j = 0; j < d; ++j) acc += gamma_[j] * buf[j];
  return acc;
}

double IndexFunction::value_extended(double u, bool* extrapolated) const {
  if (extrapolated) *extrapolated = false;
  if (std::isnan(u)) throw DomainError("index value is NaN", u);
  if (basis_->contains(u)) return value(u);
  if (extrapolated) *extrapolated = true;
  if (u < basis_->lo()) return value_lo_ + slope_lo_ * (u - basis_->lo());
  return value_hi_ + slope_hi_ * (u - basis_->hi());
}

Eigen::VectorXd mspline_basis(double u, const SplineConfig& cfg) { return SplineBasis(cfg).mspline(u); }

Eigen::VectorXd ispline_basis(double u, const SplineConfig& cfg) { return SplineBasis(cfg).ispline(u); }

double psi(double index_value, const SplineConfig& cfg, const SplineCoefficients& coef) {
  const SplineBasis basis(cfg);
  return IndexFunction(basis, coef.gamma).value(index_value);
}

double psi_derivative(double index_value, const SplineConfig& cfg, const SplineCoefficients& coef) {
  const SplineBasis basis(cfg);
  return IndexFunction(basis, coef.gamma).derivative(index_value);
}

SplineConfig choose_knots(std::span<const double> index_values, int n_interior, int order) {
  if (n_interior < 0) throw ConfigurationError("number of interior knots must be nonnegative");
  std::vector<double> sorted(index_values.begin(), index_values.end());
  for (double v : sorted) {
    if (!std::isfinite(v)) throw ConfigurationError("index values must be finite");
  }
  std::sort(sorted.begin(), sorted.end());
  std::size_t n_distinct = sorted.empty() ? 0 : 1;
  for (std::size_t i = 1; i < sorted.size(); ++i) {
    if (sorted[i] != sorted[i - 1]) ++n_distinct;
  }
  if (n_distinct < static_cast<std::size_t>(n_interior) + 2) {
    throw ConfigurationError("need at least " + std::to_string(n_interior + 2) +
                             " distinct index values to place " + std::to_string(n_interior) + " knots");
  }

  SplineConfig cfg;
  cfg.order = order;
  const double lo = std::min(sorted.front(), 0.0);
  const double hi = std::max(sorted.back(), 0.0);
  const double margin = kDomainMargin * (hi - lo);
  cfg.domain_lo = lo - margin;
  cfg.domain_hi = hi + margin;
  for (int j = 1; j <= n_interior; ++j) {
    cfg.interior_knots.push_back(type7_quantile(sorted, static_cast<double>(j) / (n_interior + 1)));
  }
  validate(cfg);
  return cfg;
}

}  // namespace bisurv
