#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "bisurv/errors.hpp"
#include "bisurv/likelihood.hpp"
#include "bisurv/objective.hpp"
#include "bisurv/reparam.hpp"
#include "bisurv/simulate.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace bisurv;

namespace {

// S(t1, t2) built from the margins through the copula.
double joint_at(double t1, double t2, const ClusterObservation& c, const ModelParams& p, const SplineConfig& cfg) {
  const double s1 = marginal_survival(t1, 0, c.x[0], c.v[0], p, cfg);
  const double s2 = marginal_survival(t2, 1, c.x[1], c.v[1], p, cfg);
  return joint_survival(s1, s2, p.phi);
}

bool near_cut(double t, const std::vector<double>& cuts, double tol) {
  return std::any_of(cuts.begin(), cuts.end(), [&](double c) { return std::abs(t - c) < tol; });
}

// Away from cut points and with margins the finite differences can resolve.
ClusterObservation interior_cluster(std::mt19937_64& gen, const ModelParams& p, const SplineConfig& cfg,
                                    std::array<int, 2> delta) {
  ClusterObservation c;
  do {
    c = fixture::random_cluster(gen, delta);
  } while (near_cut(c.y[0], p.rho.cuts, 1e-3) || near_cut(c.y[1], p.tau.cuts, 1e-3) ||
           marginal_survival(c.y[0], 0, c.x[0], c.v[0], p, cfg) < 1e-3 ||
           marginal_survival(c.y[1], 1, c.x[1], c.v[1], p, cfg) < 1e-3);
  return c;
}

}  // namespace

TEST_SUITE("likelihood") {
  TEST_CASE("linear predictor basics") {
    std::mt19937_64 gen(1);
    ModelParams p = fixture::random_params(gen);
    const SplineConfig cfg = fixture::wide_spline();
    // v orthogonal to alpha gives a zero index.
    Eigen::VectorXd v = Eigen::VectorXd::Random(3);
    v -= v.dot(p.alpha) * p.alpha;
    CHECK(linear_predictor(Eigen::VectorXd::Zero(1), v, p, cfg) == doctest::Approx(0.0).scale(1.0).epsilon(1e-14));

    p.beta = Eigen::VectorXd::Ones(1);
    p.gamma.gamma.setZero();
    CHECK(linear_predictor(Eigen::VectorXd::Ones(1), Eigen::VectorXd::Constant(3, 0.3), p, cfg) == 1.0);
  }

  TEST_CASE("linear predictor with the simulation truth as index function") {
    const Eigen::VectorXd alpha = Eigen::VectorXd::Constant(3, 1.0 / std::sqrt(3.0));
    const Eigen::VectorXd v = alpha * 0.5;
    const double lp = linear_predictor(Eigen::VectorXd::Ones(1), v, Eigen::VectorXd::Ones(1), alpha, true_psi);
    CHECK(lp == doctest::Approx(1.0 + 3.0 * std::sin(1.0)));
    CHECK(lp == doctest::Approx(3.524).epsilon(1e-3));
  }

  TEST_CASE("strict index policy rejects out-of-domain index values") {
    std::mt19937_64 gen(2);
    ModelParams p = fixture::random_params(gen);
    const SplineConfig cfg{3, {}, -0.1, 0.1};
    p.gamma.gamma = Eigen::VectorXd::Ones(3);
    const Eigen::VectorXd v = p.alpha * 0.5;
    try {
      linear_predictor(Eigen::VectorXd::Zero(1), v, p, cfg);
      FAIL("expected DomainError");
    } catch (const DomainError& e) {
      CHECK(e.value() == doctest::Approx(0.5));
    }
    CHECK_NOTHROW(linear_predictor(Eigen::VectorXd::Zero(1), v, p, cfg, IndexPolicy::kExtrapolate));
  }

  TEST_CASE("marginal survival basics") {
    std::mt19937_64 gen(3);
    ModelParams p = fixture::random_params(gen);
    const SplineConfig cfg = fixture::wide_spline();
    const Eigen::VectorXd x = Eigen::VectorXd::Ones(1), v = Eigen::VectorXd::Constant(3, 0.2);
    CHECK(marginal_survival(0.0, 0, x, v, p, cfg) == 1.0);
    p.rho = PiecewiseHazard{{0.0}, {1.0}};
    p.beta.setZero();
    p.gamma.gamma.setZero();
    CHECK(marginal_survival(1.0, 0, x, v, p, cfg) == doctest::Approx(std::exp(-1.0)).epsilon(1e-15));
    CHECK_THROWS_AS(marginal_survival(-1.0, 0, x, v, p, cfg), DomainError);
  }

  TEST_CASE("marginal survival matches quadrature of the hazard") {
    std::mt19937_64 gen(4);
    const SplineConfig cfg = fixture::wide_spline();
    for (int rep = 0; rep < 20; ++rep) {
      const ModelParams p = fixture::random_params(gen);
      const ClusterObservation c = fixture::random_cluster(gen, {1, 1});
      for (int j = 0; j < 2; ++j) {
        const double lp = linear_predictor(c.x[j], c.v[j], p, cfg);
        const PiecewiseHazard& h = p.baseline(j);
        const double integral =
            oracle::integrate_pieces([&](double s) { return s > 0 ? hazard_at(s, h) * std::exp(lp) : 0.0; }, h.cuts,
                                     0.0, c.y[j]);
        CHECK(std::abs(marginal_survival(c.y[j], j, c.x[j], c.v[j], p, cfg) - std::exp(-integral)) < 1e-10);
      }
    }
  }

  TEST_CASE("both censored is the log joint survival") {
    std::mt19937_64 gen(5);
    const SplineConfig cfg = fixture::wide_spline();
    const ModelParams p = fixture::random_params(gen);
    const ClusterObservation c = fixture::random_cluster(gen, {0, 0});
    CHECK(cluster_loglik(c, p, cfg) == doctest::Approx(std::log(joint_at(c.y[0], c.y[1], c, p, cfg))));
  }

  TEST_CASE("both events match the mixed difference of the joint survival") {
    std::mt19937_64 gen(6);
    const SplineConfig cfg = fixture::wide_spline();
    int checked = 0;
    for (int rep = 0; rep < 100; ++rep) {
      const ModelParams p = fixture::random_params(gen);
      const ClusterObservation c = interior_cluster(gen, p, cfg, {1, 1});
      const double h = 1e-4 * std::min(c.y[0], c.y[1]);
      const double fd = oracle::mixed_difference(
          [&](double a, double b) { return joint_at(a, b, c, p, cfg); }, c.y[0], c.y[1], h);
      CHECK(oracle::relative_error(std::exp(cluster_loglik(c, p, cfg)), fd) < 1e-3);
      ++checked;
    }
    CHECK(checked == 100);
  }

  TEST_CASE("single events match one-sided derivatives of the joint survival") {
    std::mt19937_64 gen(7);
    const SplineConfig cfg = fixture::wide_spline();
    for (int rep = 0; rep < 50; ++rep) {
      const ModelParams p = fixture::random_params(gen);
      for (int j = 0; j < 2; ++j) {
        const ClusterObservation c = interior_cluster(gen, p, cfg, {j == 0, j == 1});
        const double h = 1e-6 * c.y[j];
        const auto f = [&](double t) { return j == 0 ? joint_at(t, c.y[1], c, p, cfg) : joint_at(c.y[0], t, c, p, cfg); };
        const double fd = -oracle::central_difference(f, c.y[j], h);
        CHECK(oracle::relative_error(std::exp(cluster_loglik(c, p, cfg)), fd) < 1e-4);
      }
    }
  }

  TEST_CASE("near independence a single event is the sum of univariate terms") {
    std::mt19937_64 gen(8);
    const SplineConfig cfg = fixture::wide_spline();
    ModelParams p = fixture::random_params(gen);
    p.phi.phi = 1e4;
    const ClusterObservation c = fixture::random_cluster(gen, {1, 0});
    const double lp1 = linear_predictor(c.x[0], c.v[0], p, cfg);
    const double log_f1 = std::log(hazard_at(c.y[0], p.rho)) + lp1 - cumulative_hazard(c.y[0], p.rho) * std::exp(lp1);
    const double log_s2 = std::log(marginal_survival(c.y[1], 1, c.x[1], c.v[1], p, cfg));
    CHECK(std::abs(cluster_loglik(c, p, cfg) - (log_f1 + log_s2)) < 1e-3);
  }

  TEST_CASE("event at time zero is a domain error") {
    std::mt19937_64 gen(9);
    const SplineConfig cfg = fixture::wide_spline();
    const ModelParams p = fixture::random_params(gen);
    ClusterObservation c = fixture::random_cluster(gen, {1, 0});
    c.y[0] = 0.0;
    CHECK_THROWS_AS(cluster_loglik(c, p, cfg), DomainError);
    c.delta[0] = 0;
    CHECK(std::isfinite(cluster_loglik(c, p, cfg)));
  }

  TEST_CASE("total log-likelihood sums clusters, is order-free and doubles on duplication") {
    std::mt19937_64 gen(10);
    const SplineConfig cfg = fixture::wide_spline();
    const ModelParams p = fixture::random_params(gen);
    Dataset data = fixture::random_dataset(gen, 40);
    const Dataset single{data.front()};
    CHECK(total_loglik(single, p, cfg) == cluster_loglik(data.front(), p, cfg));
    const double total = total_loglik(data, p, cfg);
    Dataset shuffled = data;
    std::shuffle(shuffled.begin(), shuffled.end(), gen);
    CHECK(total_loglik(shuffled, p, cfg) == doctest::Approx(total).epsilon(1e-13));
    Dataset doubled = data;
    doubled.insert(doubled.end(), data.begin(), data.end());
    CHECK(total_loglik(doubled, p, cfg) == doctest::Approx(2.0 * total).epsilon(1e-14));
  }

  TEST_CASE("cluster errors carry the cluster index") {
    std::mt19937_64 gen(11);
    const SplineConfig cfg = fixture::wide_spline();
    const ModelParams p = fixture::random_params(gen);
    Dataset data = fixture::random_dataset(gen, 5);
    data[3].y[1] = 0.0;
    data[3].delta[1] = 1;
    try {
      total_loglik(data, p, cfg);
      FAIL("expected DomainError");
    } catch (const DomainError& e) {
      CHECK(std::string(e.what()).find("cluster 3") != std::string::npos);
    }
    CHECK_THROWS_AS(total_loglik(Dataset{}, p, cfg), DataError);
  }

  TEST_CASE("flat-parameter model agrees with the direct log-likelihood") {
    std::mt19937_64 gen(12);
    const SplineConfig cfg = fixture::wide_spline();
    for (int rep = 0; rep < 10; ++rep) {
      const ModelParams p = fixture::random_params(gen);
      const Dataset data = fixture::random_dataset(gen, 30);
      const SingleIndexModel model(data, fixture::cuts_of(p), cfg);
      const TransformedParams tp = to_unconstrained(p);
      const double direct = total_loglik(data, p, cfg);
      CHECK(std::abs(model.total(model.layout().flatten(tp)) - direct) <= 1e-10 * std::max(1.0, std::abs(direct)));
    }
  }

  TEST_CASE("score rows sum to the gradient of the total") {
    std::mt19937_64 gen(13);
    const SplineConfig cfg = fixture::wide_spline();
    const ModelParams p = fixture::random_params(gen);
    const Dataset data = fixture::random_dataset(gen, 30);
    const SingleIndexModel model(data, fixture::cuts_of(p), cfg);
    const Eigen::VectorXd theta = model.layout().flatten(to_unconstrained(p));
    const Eigen::MatrixXd scores = score_per_cluster(model, theta);
    CHECK(scores.rows() == 30);
    CHECK(scores.cols() == model.dimension());
    const Eigen::VectorXd g = fd_gradient(model, theta);
    CHECK((scores.colwise().sum().transpose() - g).cwiseAbs().maxCoeff() < 1e-7 * (1.0 + g.cwiseAbs().maxCoeff()));

    const Eigen::MatrixXd half = score_per_cluster(model, theta, 0.5 * kDefaultFdStep);
    const Eigen::ArrayXXd rel = (half - scores).array().abs() / scores.array().abs().max(1e-3);
    CHECK(rel.maxCoeff() < 1e-4);
  }

  TEST_CASE("score names the coordinate when a probe fails") {
    std::mt19937_64 gen(14);
    const SplineConfig cfg = fixture::wide_spline();
    const ModelParams p = fixture::random_params(gen);
    const Dataset data = fixture::random_dataset(gen, 5);
    const SingleIndexModel model(data, fixture::cuts_of(p), cfg);
    Eigen::VectorXd theta = model.layout().flatten(to_unconstrained(p));
    theta[0] = 1e308;
    try {
      score_per_cluster(model, theta);
      FAIL("expected NumericalError");
    } catch (const NumericalError& e) {
      CHECK(std::string(e.what()).find("varrho") != std::string::npos);
    }
  }

  TEST_CASE("continuity across baseline cut points") {
    std::mt19937_64 gen(15);
    const SplineConfig cfg = fixture::wide_spline();
    const ModelParams p = fixture::random_params(gen);
    ClusterObservation c = fixture::random_cluster(gen, {0, 0});
    const double cut = p.rho.cuts[1];
    const auto at = [&](double y, int d) {
      ClusterObservation o = c;
      o.y[0] = y;
      o.delta[0] = d;
      return cluster_loglik(o, p, cfg);
    };
    const double eps = 1e-10;
    CHECK(std::abs(at(cut + eps, 0) - at(cut, 0)) < 1e-8);
    const double jump = at(cut + eps, 1) - at(cut, 1);
    CHECK(jump == doctest::Approx(std::log(p.rho.rates[1] / p.rho.rates[0])).epsilon(1e-6));
  }

  TEST_CASE("raising baseline rates lowers the likelihood of censored data") {
    std::mt19937_64 gen(16);
    const SplineConfig cfg = fixture::wide_spline();
    ModelParams p = fixture::random_params(gen);
    Dataset data = fixture::random_dataset(gen, 20);
    for (auto& c : data) c.delta = {0, 0};
    const double before = total_loglik(data, p, cfg);
    for (auto& r : p.rho.rates) r *= 1.1;
    for (auto& r : p.tau.rates) r *= 1.1;
    CHECK(total_loglik(data, p, cfg) < before);
  }

  TEST_CASE("parameter validation") {
    std::mt19937_64 gen(17);
    ModelParams p = fixture::random_params(gen);
    CHECK_NOTHROW(validate(p));
    ModelParams bad = p;
    bad.alpha *= 1.1;
    CHECK_THROWS_AS(validate(bad), ConstraintError);
    bad = p;
    bad.alpha[2] = -bad.alpha[2];
    CHECK_THROWS_AS(validate(bad), ConstraintError);
    bad = p;
    bad.phi.phi = 0.0;
    CHECK_THROWS_AS(validate(bad), ConstraintError);
    bad = p;
    bad.rho.rates[0] = -1.0;
    CHECK_THROWS_AS(validate(bad), ConfigurationError);
  }

  TEST_CASE("dataset validation") {
    std::mt19937_64 gen(18);
    Dataset data = fixture::random_dataset(gen, 3);
    CHECK_NOTHROW(validate_dataset(data));
    CHECK(linear_dim(data) == 1);
    CHECK(index_dim(data) == 3);
    Dataset bad = data;
    bad[1].v[1] = Eigen::VectorXd::Zero(2);
    CHECK_THROWS_AS(validate_dataset(bad), DataError);
    bad = data;
    bad[2].y[0] = -1.0;
    CHECK_THROWS_AS(validate_dataset(bad), DataError);
    bad = data;
    bad[0].delta[1] = 2;
    CHECK_THROWS_AS(validate_dataset(bad), DataError);
  }
}
