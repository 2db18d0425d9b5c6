#include "bisurv/reparam.hpp"

#include <cmath>
#include <numbers>

#include "bisurv/errors.hpp"

namespace bisurv {
namespace {

constexpr double kHalfPi = std::numbers::pi / 2.0;
constexpr double kBoundaryNudge = 1e-12;
constexpr double kNormTol = 1e-10;

double omega_from_varphi(double varphi) { return kHalfPi * std::tanh(0.5 * varphi); }

double varphi_from_omega(double omega) {
  const double lim = kHalfPi - kBoundaryNudge;
  omega = std::clamp(omega, -lim, lim);
  return std::log((kHalfPi + omega) / (kHalfPi - omega));
}

// alpha[q-1-m] = (prod_{i<m} sin w_i) cos w_m for m < q-1, alpha[0] = prod sin w_i.
Eigen::VectorXd alpha_from_omega(const Eigen::VectorXd& omega) {
  const auto q = omega.size() + 1;
  Eigen::VectorXd alpha(q);
  double prefix = 1.0;
  for (Eigen::Index m = 0; m < q - 1; ++m) {
    alpha[q - 1 - m] = prefix * std::cos(omega[m]);
    prefix *= std::sin(omega[m]);
  }
  alpha[0] = prefix;
  return alpha;
}

std::vector<std::string> numbered(const std::string& stem, int count) {
  std::vector<std::string> out;
  for (int i = 1; i <= count; ++i) out.push_back(stem + std::to_string(i));
  return out;
}

void append(std::vector<std::string>& dst, const std::vector<std::string>& src) {
  dst.insert(dst.end(), src.begin(), src.end());
}

}  // namespace

Eigen::VectorXd alpha_from_varphi(const Eigen::VectorXd& varphi) {
  Eigen::VectorXd omega(varphi.size());
  for (Eigen::Index i = 0; i < varphi.size(); ++i) omega[i] = omega_from_varphi(varphi[i]);
  return alpha_from_omega(omega);
}

Eigen::VectorXd varphi_from_alpha(const Eigen::VectorXd& alpha) {
  const auto q = alpha.size();
  if (q < 1) throw ConstraintError("alpha must have at least one entry");
  if (std::abs(alpha.norm() - 1.0) > kNormTol) {
    throw ConstraintError("alpha must have unit norm (got " + std::to_string(alpha.norm()) + ")");
  }
  if (!(alpha[q - 1] > 0.0)) throw ConstraintError("last entry of alpha must be positive");

  Eigen::VectorXd varphi = Eigen::VectorXd::Zero(q - 1);
  double prefix_sign = 1.0;
  for (Eigen::Index m = 0; m < q - 1; ++m) {
    // Components still to be explained: alpha[0 .. q-2-m].
    const double rest = alpha.head(q - 1 - m).norm();
    if (rest <= 1e-300) break;  // direction below is unidentified; remaining angles stay 0
    const double cos_part = std::max(alpha[q - 1 - m] * prefix_sign, 0.0);
    const double magnitude = std::atan2(rest, cos_part);
    // Choose the sign of sin w_m so the next cosine factor is nonnegative (or,
    // for the last angle, so alpha[0] keeps its sign).
    const double next = alpha[q - 2 - m] * prefix_sign;
    const double sign = next < 0.0 ? -1.0 : 1.0;
    const double omega = sign * magnitude;
    varphi[m] = varphi_from_omega(omega);
    prefix_sign *= sign;
  }
  return varphi;
}

Eigen::MatrixXd alpha_jacobian(const Eigen::VectorXd& varphi) {
  const auto k = varphi.size();
  const auto q = k + 1;
  Eigen::VectorXd omega(k), s(k), c(k), domega(k);
  for (Eigen::Index i = 0; i < k; ++i) {
    omega[i] = omega_from_varphi(varphi[i]);
    s[i] = std::sin(omega[i]);
    c[i] = std::cos(omega[i]);
    const double th = std::tanh(0.5 * varphi[i]);
    domega[i] = 0.5 * kHalfPi * (1.0 - th * th);
  }
  Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(q, k);
  // Entry alpha[q-1-m] = (prod_{i<m} s_i) c_m; entry alpha[0] = prod_{i<k} s_i.
  for (Eigen::Index m = 0; m <= k; ++m) {
    const Eigen::Index row = m < k ? q - 1 - m : 0;
    for (Eigen::Index j = 0; j < k && j <= m; ++j) {
      double d = 1.0;
      for (Eigen::Index i = 0; i < m; ++i) d *= (i == j) ? c[i] : s[i];
      if (m < k) d *= (j == m) ? -s[m] : c[m];
      jac(row, j) = d * domega[j];
    }
  }
  return jac;
}

Eigen::VectorXd ParamLayout::flatten(const TransformedParams& tp) const {
  Eigen::VectorXd out(dim_theta_star());
  out << tp.varrho, tp.xi, tp.zeta, tp.varphi, tp.beta, tp.gamma;
  return out;
}

TransformedParams ParamLayout::unflatten(const Eigen::VectorXd& theta_star) const {
  if (theta_star.size() != dim_theta_star()) {
    throw ConfigurationError("theta* has length " + std::to_string(theta_star.size()) + ", expected " +
                             std::to_string(dim_theta_star()));
  }
  TransformedParams tp;
  Eigen::Index pos = 0;
  auto take = [&](int n) {
    Eigen::VectorXd seg = theta_star.segment(pos, n);
    pos += n;
    return seg;
  };
  tp.varrho = theta_star[pos++];
  tp.xi = take(r);
  tp.zeta = take(s);
  tp.varphi = take(q - 1);
  tp.beta = take(p);
  tp.gamma = take(d);
  return tp;
}

Eigen::VectorXd ParamLayout::flatten(const ModelParams& params) const {
  Eigen::VectorXd out(dim_theta());
  const Eigen::Map<const Eigen::VectorXd> rho(params.rho.rates.data(), r);
  const Eigen::Map<const Eigen::VectorXd> tau(params.tau.rates.data(), s);
  out << params.phi.phi, rho, tau, params.alpha, params.beta, params.gamma.gamma;
  return out;
}

std::vector<std::string> ParamLayout::theta_names() const {
  std::vector<std::string> out{"phi"};
  append(out, numbered("rho", r));
  append(out, numbered("tau", s));
  append(out, numbered("alpha", q));
  append(out, numbered("beta", p));
  append(out, numbered("gamma", d));
  return out;
}

std::vector<std::string> ParamLayout::theta_star_names() const {
  std::vector<std::string> out{"varrho"};
  append(out, numbered("xi", r));
  append(out, numbered("zeta", s));
  append(out, numbered("varphi", q - 1));
  append(out, numbered("beta", p));
  append(out, numbered("gamma", d));
  return out;
}

ParamLayout layout_of(const TransformedParams& tp) {
  return ParamLayout{static_cast<int>(tp.xi.size()), static_cast<int>(tp.zeta.size()),
                     static_cast<int>(tp.varphi.size()) + 1, static_cast<int>(tp.beta.size()),
                     static_cast<int>(tp.gamma.size())};
}

TransformedParams to_unconstrained(const ModelParams& params) {
  validate(params);
  TransformedParams tp;
  tp.varrho = std::log(params.phi.phi);
  tp.xi = Eigen::Map<const Eigen::VectorXd>(params.rho.rates.data(), params.rho.pieces()).array().log();
  tp.zeta = Eigen::Map<const Eigen::VectorXd>(params.tau.rates.data(), params.tau.pieces()).array().log();
  tp.varphi = varphi_from_alpha(params.alpha);
  tp.beta = params.beta;
  tp.gamma = params.gamma.gamma;
  return tp;
}

ModelParams from_unconstrained(const TransformedParams& tp, const BaselineCuts& cuts) {
  if (static_cast<std::size_t>(tp.xi.size()) != cuts.member1.size() ||
      static_cast<std::size_t>(tp.zeta.size()) != cuts.member2.size()) {
    throw ConfigurationError("baseline rate count does not match the cut points");
  }
  ModelParams params;
  params.phi.phi = std::exp(tp.varrho);
  params.rho.cuts = cuts.member1;
  params.rho.rates.resize(tp.xi.size());
  for (Eigen::Index k = 0; k < tp.xi.size(); ++k) params.rho.rates[k] = std::exp(tp.xi[k]);
  params.tau.cuts = cuts.member2;
  params.tau.rates.resize(tp.zeta.size());
  for (Eigen::Index k = 0; k < tp.zeta.size(); ++k) params.tau.rates[k] = std::exp(tp.zeta[k]);
  params.alpha = alpha_from_varphi(tp.varphi);
  params.beta = tp.beta;
  params.gamma.gamma = tp.gamma;
  return params;
}

Eigen::MatrixXd jacobian(const TransformedParams& tp) {
  const ParamLayout lay = layout_of(tp);
  Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(lay.dim_theta(), lay.dim_theta_star());
  jac(0, 0) = std::exp(tp.varrho);
  int row = 1, col = 1;
  for (int k = 0; k < lay.r; ++k, ++row, ++col) jac(row, col) = std::exp(tp.xi[k]);
  for (int k = 0; k < lay.s; ++k, ++row, ++col) jac(row, col) = std::exp(tp.zeta[k]);
  jac.block(row, col, lay.q, lay.q - 1) = alpha_jacobian(tp.varphi);
  row += lay.q;
  col += lay.q - 1;
  const int rest = lay.p + lay.d;
  jac.block(row, col, rest, rest).setIdentity();
  return jac;
}

}  // namespace bisurv
