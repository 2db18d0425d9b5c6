#pragma once

#include <span>
#include <vector>

#include <Eigen/Core>

namespace bisurv {

// Order, interior knots and domain of an M-spline / I-spline basis.
// Basis dimension is order + interior_knots.size(); the full knot sequence
// repeats each boundary point `order` times (Ramsay's convention).
struct SplineConfig {
  int order = 3;
  std::vector<double> interior_knots;
  double domain_lo = -1.0;
  double domain_hi = 1.0;

  int dimension() const { return order + static_cast<int>(interior_knots.size()); }
};

// Coefficients gamma of the index function; length equals SplineConfig::dimension().
struct SplineCoefficients {
  Eigen::VectorXd gamma;
};

// Throws ConfigurationError unless L < U, L <= 0 <= U, order >= 1 and the
// interior knots are strictly increasing and strictly inside (L, U).
void validate(const SplineConfig& cfg);

// Precomputed knot sequences for one SplineConfig. Evaluation writes into
// caller-provided buffers so it can sit in the likelihood hot loop.
class SplineBasis {
 public:
  explicit SplineBasis(SplineConfig cfg);

  const SplineConfig& config() const { return cfg_; }
  int dimension() const { return dim_; }
  double lo() const { return cfg_.domain_lo; }
  double hi() const { return cfg_.domain_hi; }

  // Returns u clamped to [L,U] when it lies within round-off of the domain;
  // throws DomainError otherwise.
  double checked(double u) const;
  bool contains(double u) const;

  // out.size() must equal dimension().
  void mspline(double u, std::span<double> out) const;
  void ispline(double u, std::span<double> out) const;

  Eigen::VectorXd mspline(double u) const;
  Eigen::VectorXd ispline(double u) const;

 private:
  // Order-k B-spline values B_{span-k+1..span} on `knots` into `work`.
  static int nonzero_bsplines(const std::vector<double>& knots, int k, double u,
                              std::span<double> work);

  SplineConfig cfg_;
  int dim_;
  std::vector<double> knots_;       // order m, length d + m
  std::vector<double> knots_next_;  // order m + 1, length d + m + 2
};

// psi(u) = gamma' (I(u) - I(0)) with its derivative gamma' M(u).
class IndexFunction {
 public:
  IndexFunction(const SplineBasis& basis, Eigen::VectorXd gamma);

  double value(double u) const;
  double derivative(double u) const;

  // Linear continuation beyond [L,U] using the boundary slope. `extrapolated`
  // is set when u falls outside the domain.
  double value_extended(double u, bool* extrapolated = nullptr) const;

  const SplineBasis& basis() const { return *basis_; }
  const Eigen::VectorXd& gamma() const { return gamma_; }

 private:
  const SplineBasis* basis_;
  Eigen::VectorXd gamma_;
  Eigen::VectorXd i0_;
  double value_lo_, value_hi_, slope_lo_, slope_hi_;
};

Eigen::VectorXd mspline_basis(double u, const SplineConfig& cfg);
Eigen::VectorXd ispline_basis(double u, const SplineConfig& cfg);
double psi(double index_value, const SplineConfig& cfg, const SplineCoefficients& coef);
double psi_derivative(double index_value, const SplineConfig& cfg, const SplineCoefficients& coef);

// Interior knots at type-7 empirical quantiles j/(n_interior+1); the domain is
// [min(values, 0), max(values, 0)] widened by a relative margin of 1e-6.
SplineConfig choose_knots(std::span<const double> index_values, int n_interior, int order = 3);

}  // namespace bisurv
