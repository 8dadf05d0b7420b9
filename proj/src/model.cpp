#include "raremeta/model.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "raremeta/error.hpp"

namespace raremeta {
namespace {

constexpr double kHalfLog2Pi = 0.91893853320467274178;  // 0.5 * log(2 pi)

double normal_log_density(double x, const NormalPrior& prior) {
  const double z = (x - prior.mean) / prior.sd;
  return -kHalfLog2Pi - std::log(prior.sd) - 0.5 * z * z;
}

void check_dimension(const MetaDataset& data, const ParameterVector& p) {
  if (p.mu.size() != p.zeta.size() || p.studies() != data.size()) {
    throw Error(ErrorCode::dimension_mismatch,
                "parameter dimension (" + std::to_string(p.mu.size()) + " mu, " +
                    std::to_string(p.zeta.size()) + " zeta) does not match " +
                    std::to_string(data.size()) + " studies");
  }
}

}  // namespace

void PriorConfig::validate() const {
  if (!(mu.sd > 0.0) || !std::isfinite(mu.sd) || !std::isfinite(mu.mean)) {
    throw_invalid("mu prior: sd must be finite and > 0");
  }
  if (!(theta.sd > 0.0) || !std::isfinite(theta.sd) || !std::isfinite(theta.mean)) {
    throw_invalid("theta prior: sd must be finite and > 0");
  }
  if (!(tau_scale > 0.0) || !std::isfinite(tau_scale)) {
    throw_invalid("tau prior: scale must be finite and > 0");
  }
}

const char* to_string(TauPrior dist) {
  switch (dist) {
    case TauPrior::half_normal: return "half-normal";
    case TauPrior::uniform: return "uniform";
    case TauPrior::half_cauchy: return "half-cauchy";
  }
  return "unknown";
}

TauPrior parse_tau_prior(std::string_view name) {
  if (name == "half-normal") return TauPrior::half_normal;
  if (name == "uniform") return TauPrior::uniform;
  if (name == "half-cauchy") return TauPrior::half_cauchy;
  throw_invalid("unknown tau prior distribution '" + std::string(name) +
                "' (expected half-normal, uniform or half-cauchy)");
}

Eigen::VectorXd ParameterVector::flatten() const {
  const auto k = mu.size();
  Eigen::VectorXd flat(2 * k + 2);
  flat.head(k) = mu;
  flat(k) = theta;
  flat.segment(k + 1, k) = zeta;
  flat(2 * k + 1) = log_tau;
  return flat;
}

ParameterVector ParameterVector::unflatten(const Eigen::VectorXd& flat) {
  if (flat.size() < 2 || flat.size() % 2 != 0) {
    throw Error(ErrorCode::dimension_mismatch,
                "flat parameter vector must have even length 2k + 2, got " +
                    std::to_string(flat.size()));
  }
  const auto k = (flat.size() - 2) / 2;
  ParameterVector p;
  p.mu = flat.head(k);
  p.theta = flat(k);
  p.zeta = flat.segment(k + 1, k);
  p.log_tau = flat(2 * k + 1);
  return p;
}

ConstrainedParameters constrain(const ParameterVector& p) {
  return {p.mu, p.theta, p.zeta, std::exp(p.log_tau)};
}

ParameterVector unconstrain(const ConstrainedParameters& c) {
  if (!(c.tau > 0.0)) throw_invalid("tau must be > 0 to move to the log scale");
  ParameterVector p;
  p.mu = c.mu;
  p.theta = c.theta;
  p.zeta = c.zeta;
  p.log_tau = std::log(c.tau);
  return p;
}

double logistic(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double logit(double p) { return std::log(p) - std::log1p(-p); }

double softplus(double x) {
  if (x > 0.0) return x + std::log1p(std::exp(-x));
  return std::log1p(std::exp(x));
}

ArmProbabilities arm_probabilities(const ParameterVector& p, std::size_t study_index) {
  if (study_index >= p.studies() || static_cast<Eigen::Index>(study_index) >= p.zeta.size()) {
    throw_invalid("study index " + std::to_string(study_index) + " out of range for " +
                  std::to_string(p.studies()) + " studies");
  }
  const auto i = static_cast<Eigen::Index>(study_index);
  const double tau = p.tau();
  return {logistic(p.mu(i) - 0.5 * p.theta),
          logistic(p.mu(i) + 0.5 * p.theta + p.zeta(i) * tau)};
}

double binomial_log_pmf(std::int64_t events, std::int64_t total, double eta) {
  const double r = static_cast<double>(events);
  const double n = static_cast<double>(total);
  const double log_choose = std::lgamma(n + 1.0) - std::lgamma(r + 1.0) - std::lgamma(n - r + 1.0);
  // r log p + (n - r) log(1 - p) with p = logistic(eta); written without the
  // cancellation of r eta - n softplus(eta) near saturation.
  return log_choose - r * softplus(-eta) - (n - r) * softplus(eta);
}

double log_likelihood(const MetaDataset& data, const ParameterVector& p) {
  check_dimension(data, p);
  const double tau = p.tau();
  double total = 0.0;
  for (std::size_t s = 0; s < data.size(); ++s) {
    const auto i = static_cast<Eigen::Index>(s);
    const double eta_ctrl = p.mu(i) - 0.5 * p.theta;
    const double eta_trt = p.mu(i) + 0.5 * p.theta + p.zeta(i) * tau;
    total += binomial_log_pmf(data[s].control.events, data[s].control.total, eta_ctrl);
    total += binomial_log_pmf(data[s].experimental.events, data[s].experimental.total, eta_trt);
  }
  return total;
}

double tau_prior_log_density(double tau, TauPrior dist, double scale) {
  constexpr double kInf = std::numeric_limits<double>::infinity();
  if (tau < 0.0) return -kInf;
  switch (dist) {
    case TauPrior::half_normal: {
      const double z = tau / scale;
      return std::numbers::ln2 - kHalfLog2Pi - std::log(scale) - 0.5 * z * z;
    }
    case TauPrior::uniform:
      return tau <= scale ? -std::log(scale) : -kInf;
    case TauPrior::half_cauchy: {
      const double z = tau / scale;
      return std::numbers::ln2 - std::log(std::numbers::pi * scale) - std::log1p(z * z);
    }
  }
  return -kInf;
}

double tau_prior_log_density_derivative(double tau, TauPrior dist, double scale) {
  switch (dist) {
    case TauPrior::half_normal: return -tau / (scale * scale);
    case TauPrior::uniform: return 0.0;
    case TauPrior::half_cauchy: return -2.0 * tau / (scale * scale + tau * tau);
  }
  return 0.0;
}

double log_prior(const ParameterVector& p, const PriorConfig& cfg) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < p.mu.size(); ++i) total += normal_log_density(p.mu(i), cfg.mu);
  total += normal_log_density(p.theta, cfg.theta);
  for (Eigen::Index i = 0; i < p.zeta.size(); ++i) {
    total += -kHalfLog2Pi - 0.5 * p.zeta(i) * p.zeta(i);
  }
  total += tau_prior_log_density(p.tau(), cfg.tau_dist, cfg.tau_scale) + p.log_tau;
  return total;
}

double log_posterior(const MetaDataset& data, const ParameterVector& p, const PriorConfig& cfg) {
  return log_likelihood(data, p) + log_prior(p, cfg);
}

Eigen::VectorXd gradient(const MetaDataset& data, const ParameterVector& p,
                         const PriorConfig& cfg) {
  check_dimension(data, p);
  const auto k = static_cast<Eigen::Index>(data.size());
  const double tau = p.tau();
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(2 * k + 2);
  double d_theta = 0.0;
  double d_tau = 0.0;

  for (Eigen::Index i = 0; i < k; ++i) {
    const Study& s = data[static_cast<std::size_t>(i)];
    const double p_ctrl = logistic(p.mu(i) - 0.5 * p.theta);
    const double p_trt = logistic(p.mu(i) + 0.5 * p.theta + p.zeta(i) * tau);
    // d/d eta of the binomial log-pmf is r - n p.
    const double s_ctrl = static_cast<double>(s.control.events) -
                          static_cast<double>(s.control.total) * p_ctrl;
    const double s_trt = static_cast<double>(s.experimental.events) -
                         static_cast<double>(s.experimental.total) * p_trt;
    grad(i) = s_ctrl + s_trt - (p.mu(i) - cfg.mu.mean) / (cfg.mu.sd * cfg.mu.sd);
    d_theta += 0.5 * (s_trt - s_ctrl);
    grad(k + 1 + i) = s_trt * tau - p.zeta(i);
    d_tau += s_trt * p.zeta(i);
  }
  grad(k) = d_theta - (p.theta - cfg.theta.mean) / (cfg.theta.sd * cfg.theta.sd);
  d_tau += tau_prior_log_density_derivative(tau, cfg.tau_dist, cfg.tau_scale);
  grad(2 * k + 1) = tau * d_tau + 1.0;
  return grad;
}

}  // namespace raremeta
