#pragma once

#include <cmath>
#include <random>

#include "bisurv/likelihood.hpp"
#include "bisurv/reparam.hpp"

// Small random models and datasets shared by the likelihood and fit tests.
namespace fixture {

inline bisurv::SplineConfig wide_spline() { return bisurv::SplineConfig{3, {-0.8, 0.0, 0.7}, -2.0, 2.0}; }

inline bisurv::ModelParams random_params(std::mt19937_64& gen) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> nd;
  bisurv::ModelParams p;
  p.phi.phi = 0.3 + 4.0 * u(gen);
  p.rho = bisurv::PiecewiseHazard{{0.0, 0.4, 1.1}, {0.5 + u(gen), 0.5 + u(gen), 0.5 + u(gen)}};
  p.tau = bisurv::PiecewiseHazard{{0.0, 0.7}, {0.5 + u(gen), 0.5 + u(gen)}};
  Eigen::VectorXd a(3);
  a << nd(gen), nd(gen), std::abs(nd(gen)) + 0.1;
  p.alpha = a.normalized();
  p.beta = Eigen::VectorXd::Constant(1, nd(gen));
  p.gamma.gamma = Eigen::VectorXd::NullaryExpr(6, [&] { return 0.5 * nd(gen); });
  return p;
}

inline bisurv::ClusterObservation random_cluster(std::mt19937_64& gen, std::array<int, 2> delta) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  bisurv::ClusterObservation c;
  for (int j = 0; j < 2; ++j) {
    c.y[j] = 0.05 + 1.8 * u(gen);
    c.delta[j] = delta[j];
    c.x[j] = Eigen::VectorXd::Constant(1, u(gen) < 0.5 ? 0.0 : 1.0);
    c.v[j] = Eigen::VectorXd::NullaryExpr(3, [&] { return 2.0 * u(gen) - 1.0; });
  }
  return c;
}

inline bisurv::Dataset random_dataset(std::mt19937_64& gen, int n) {
  std::uniform_int_distribution<int> bit(0, 1);
  bisurv::Dataset d;
  for (int i = 0; i < n; ++i) d.push_back(random_cluster(gen, {bit(gen), bit(gen)}));
  return d;
}

inline bisurv::BaselineCuts cuts_of(const bisurv::ModelParams& p) { return {p.rho.cuts, p.tau.cuts}; }

}  // namespace fixture
