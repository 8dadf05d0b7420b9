#include "raremeta/mle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "raremeta/error.hpp"
#include "raremeta/model.hpp"
#include "raremeta/optimize.hpp"

namespace raremeta {
namespace {

struct ArmTerm {
  double value = 0.0;
  double d_eta = 0.0;      // d/d(linear predictor)
  double d_tau = 0.0;
  double d_eta_eta = 0.0;
  double d_eta_tau = 0.0;
  double d_tau_tau = 0.0;
};

ArmTerm fixed_arm(std::int64_t events, std::int64_t total, double eta) {
  const double n = static_cast<double>(total);
  const double p = logistic(eta);
  ArmTerm t;
  t.value = binomial_log_pmf(events, total, eta);
  t.d_eta = static_cast<double>(events) - n * p;
  t.d_eta_eta = -n * p * (1.0 - p);
  return t;
}

// Mode of z -> log Bin(r; n, logistic(a + tau z)) - z^2 / 2. The function is
// strictly concave, so a safeguarded Newton iteration on the bracket
// [tau (r - n), tau r] always converges.
double integrand_mode(double r, double n, double a, double tau) {
  double lo = tau * (r - n);
  double hi = tau * r;
  double z = std::clamp(0.0, lo, hi);
  for (int it = 0; it < 50; ++it) {
    const double p = logistic(a + tau * z);
    const double f = tau * (r - n * p) - z;
    if (f > 0.0) lo = z; else hi = z;
    const double df = -tau * tau * n * p * (1.0 - p) - 1.0;
    double next = z - f / df;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    const double step = std::abs(next - z);
    z = next;
    if (step < 1e-10 * (1.0 + std::abs(z))) break;
  }
  return z;
}

// log of E_Z[Bin(r; n, logistic(a + tau Z))] by adaptive quadrature, with
// exact derivatives of the quadrature value in (a, tau) and moment-based
// second derivatives.
ArmTerm random_arm(std::int64_t events, std::int64_t total, double a, double tau,
                   const GaussHermiteRule& rule, bool with_hessian) {
  if (tau == 0.0) {
    ArmTerm t = fixed_arm(events, total, a);
    t.d_tau_tau = t.d_eta_eta + t.d_eta * t.d_eta;
    return t;
  }
  const double r = static_cast<double>(events);
  const double n = static_cast<double>(total);
  const double z_hat = integrand_mode(r, n, a, tau);
  const double p_hat = logistic(a + tau * z_hat);
  const double q = n * p_hat * (1.0 - p_hat);
  const double dq = q * (1.0 - 2.0 * p_hat);
  const double curvature = 1.0 + tau * tau * q;
  const double sigma = 1.0 / std::sqrt(curvature);
  const double s_hat = r - n * p_hat;

  // Sensitivities of the mode and of the log scale.
  const double z_a = -tau * q / curvature;
  const double z_tau = (s_hat - tau * q * z_hat) / curvature;
  const double curv_a = tau * tau * dq * (1.0 + tau * z_a);
  const double curv_tau = 2.0 * tau * q + tau * tau * dq * (z_hat + tau * z_tau);
  const double logsigma_a = -0.5 * curv_a / curvature;
  const double logsigma_tau = -0.5 * curv_tau / curvature;
  const double sigma_a = sigma * logsigma_a;
  const double sigma_tau = sigma * logsigma_tau;

  const std::size_t m = rule.nodes.size();
  std::vector<double> terms(m);
  std::vector<double> z(m);
  double max_term = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < m; ++k) {
    const double t = rule.nodes[k];
    z[k] = z_hat + sigma * t;
    terms[k] = std::log(rule.weights[k]) + std::log(sigma) +
               binomial_log_pmf(events, total, a + tau * z[k]) - 0.5 * z[k] * z[k] + 0.5 * t * t;
    max_term = std::max(max_term, terms[k]);
  }
  double sum = 0.0;
  for (std::size_t k = 0; k < m; ++k) sum += std::exp(terms[k] - max_term);

  ArmTerm out;
  out.value = max_term + std::log(sum);

  double e_s = 0.0, e_zs = 0.0, e_ds = 0.0, e_zds = 0.0, e_zzds = 0.0;
  double e_ss = 0.0, e_zss = 0.0, e_zzss = 0.0;
  double grad_a = 0.0, grad_tau = 0.0;
  for (std::size_t k = 0; k < m; ++k) {
    const double w = std::exp(terms[k] - out.value);
    const double p = logistic(a + tau * z[k]);
    const double s = r - n * p;
    const double ds = -n * p * (1.0 - p);
    const double dz_log = tau * s - z[k];  // d/dz of the log integrand
    const double t = rule.nodes[k];
    grad_a += w * (s + dz_log * (z_a + sigma_a * t) + logsigma_a);
    grad_tau += w * (z[k] * s + dz_log * (z_tau + sigma_tau * t) + logsigma_tau);
    if (with_hessian) {
      e_s += w * s;
      e_zs += w * z[k] * s;
      e_ds += w * ds;
      e_zds += w * z[k] * ds;
      e_zzds += w * z[k] * z[k] * ds;
      e_ss += w * s * s;
      e_zss += w * z[k] * s * s;
      e_zzss += w * z[k] * z[k] * s * s;
    }
  }
  out.d_eta = grad_a;
  out.d_tau = grad_tau;
  if (with_hessian) {
    out.d_eta_eta = e_ds + e_ss - e_s * e_s;
    out.d_eta_tau = e_zds + e_zss - e_s * e_zs;
    out.d_tau_tau = e_zzds + e_zzss - e_zs * e_zs;
  }
  return out;
}

Eigen::VectorXd corrected_logit_start(const MetaDataset& data) {
  Eigen::VectorXd mu(static_cast<Eigen::Index>(data.size()));
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto& s = data[i];
    const double pc = (static_cast<double>(s.control.events) + 0.5) /
                      (static_cast<double>(s.control.total) + 1.0);
    const double pt = (static_cast<double>(s.experimental.events) + 0.5) /
                      (static_cast<double>(s.experimental.total) + 1.0);
    mu(static_cast<Eigen::Index>(i)) = 0.5 * (logit(pc) + logit(pt));
  }
  return mu;
}

}  // namespace

GaussHermiteRule gh_nodes(std::size_t order) {
  if (order < 1) throw_invalid("Gauss-Hermite order must be >= 1");
  const auto n = static_cast<Eigen::Index>(order);
  // Golub-Welsch on the Jacobi matrix of the probabilists' Hermite polynomials.
  Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 1; i < n; ++i) {
    jacobi(i, i - 1) = jacobi(i - 1, i) = std::sqrt(static_cast<double>(i));
  }
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(jacobi);
  GaussHermiteRule rule;
  rule.nodes.resize(order);
  rule.weights.resize(order);
  for (Eigen::Index i = 0; i < n; ++i) {
    rule.nodes[static_cast<std::size_t>(i)] = eig.eigenvalues()(i);
    const double v = eig.eigenvectors()(0, i);
    rule.weights[static_cast<std::size_t>(i)] = v * v;
  }
  // Symmetrise: the rule is exact in theory, tidy the last bits.
  for (std::size_t i = 0; i < order / 2; ++i) {
    const std::size_t j = order - 1 - i;
    const double node = 0.5 * (rule.nodes[j] - rule.nodes[i]);
    const double weight = 0.5 * (rule.weights[i] + rule.weights[j]);
    rule.nodes[i] = -node;
    rule.nodes[j] = node;
    rule.weights[i] = rule.weights[j] = weight;
  }
  if (order % 2 == 1) rule.nodes[order / 2] = 0.0;
  return rule;
}

MarginalEvaluation evaluate_marginal(const MetaDataset& data, const Eigen::VectorXd& x,
                                     const GaussHermiteRule& rule, bool with_hessian) {
  const auto k = static_cast<Eigen::Index>(data.size());
  if (x.size() != k + 2) {
    throw Error(ErrorCode::dimension_mismatch,
                "marginal likelihood expects " + std::to_string(k + 2) + " parameters");
  }
  const double theta = x(k);
  const double tau = x(k + 1);
  if (!(tau >= 0.0)) throw_invalid("tau must be >= 0");

  MarginalEvaluation ev;
  ev.gradient = Eigen::VectorXd::Zero(k + 2);
  if (with_hessian) ev.hessian = Eigen::MatrixXd::Zero(k + 2, k + 2);
  for (Eigen::Index i = 0; i < k; ++i) {
    const Study& s = data[static_cast<std::size_t>(i)];
    const ArmTerm ctrl = fixed_arm(s.control.events, s.control.total, x(i) - 0.5 * theta);
    const ArmTerm trt = random_arm(s.experimental.events, s.experimental.total,
                                   x(i) + 0.5 * theta, tau, rule, with_hessian);
    ev.value += ctrl.value + trt.value;
    ev.gradient(i) = ctrl.d_eta + trt.d_eta;
    ev.gradient(k) += 0.5 * (trt.d_eta - ctrl.d_eta);
    ev.gradient(k + 1) += trt.d_tau;
    if (with_hessian) {
      ev.hessian(i, i) = ctrl.d_eta_eta + trt.d_eta_eta;
      ev.hessian(i, k) = ev.hessian(k, i) = 0.5 * (trt.d_eta_eta - ctrl.d_eta_eta);
      ev.hessian(k, k) += 0.25 * (trt.d_eta_eta + ctrl.d_eta_eta);
      ev.hessian(i, k + 1) = ev.hessian(k + 1, i) = trt.d_eta_tau;
      ev.hessian(k, k + 1) += 0.5 * trt.d_eta_tau;
      ev.hessian(k + 1, k + 1) += trt.d_tau_tau;
    }
  }
  if (with_hessian) ev.hessian(k + 1, k) = ev.hessian(k, k + 1);
  return ev;
}

double marginal_log_likelihood(const MetaDataset& data, const Eigen::VectorXd& mu, double theta,
                               double tau, std::size_t order) {
  if (static_cast<std::size_t>(mu.size()) != data.size()) {
    throw Error(ErrorCode::dimension_mismatch,
                "mu has " + std::to_string(mu.size()) + " entries for " +
                    std::to_string(data.size()) + " studies");
  }
  const GaussHermiteRule rule = gh_nodes(order);
  Eigen::VectorXd x(mu.size() + 2);
  x << mu, theta, tau;
  return evaluate_marginal(data, x, rule, false).value;
}

const char* to_string(MleFailure reason) {
  switch (reason) {
    case MleFailure::none: return "none";
    case MleFailure::optimizer_no_convergence: return "optimizer-no-convergence";
    case MleFailure::hessian_not_positive_definite: return "hessian-not-positive-definite";
    case MleFailure::non_finite_se: return "non-finite-se";
    case MleFailure::theta_out_of_range: return "theta-out-of-range";
  }
  return "unknown";
}

MleResult fit_mle(const MetaDataset& data, const MleOptions& options) {
  const auto k = static_cast<Eigen::Index>(data.size());
  const GaussHermiteRule rule = gh_nodes(options.gh_order);

  const Objective objective = [&](const Eigen::VectorXd& x, Eigen::VectorXd& grad) {
    const MarginalEvaluation ev = evaluate_marginal(data, x, rule, false);
    grad = -ev.gradient;
    return -ev.value;
  };

  Eigen::VectorXd lower = Eigen::VectorXd::Constant(k + 2, -std::numeric_limits<double>::infinity());
  lower(k + 1) = 0.0;

  BoxBfgsResult best;
  bool have_best = false;
  std::size_t iterations = 0;
  for (const double tau0 : options.tau_starts) {
    Eigen::VectorXd x0(k + 2);
    x0 << corrected_logit_start(data), 0.0, tau0;
    BoxBfgsResult r = minimize_box_bfgs(objective, x0, lower);
    iterations += r.iterations;
    if (!std::isfinite(r.value)) continue;
    const bool better = !have_best || (r.converged && !best.converged) ||
                        (r.converged == best.converged && r.value < best.value);
    if (better) {
      best = std::move(r);
      have_best = true;
    }
  }

  MleResult result;
  result.gh_order = options.gh_order;
  result.iterations = iterations;
  if (!have_best) {
    result.failure_reason = MleFailure::optimizer_no_convergence;
    result.mu_hat = Eigen::VectorXd::Zero(k);
    return result;
  }
  result.mu_hat = best.x.head(k);
  result.theta_hat = best.x(k);
  result.tau_hat = best.x(k + 1);
  result.log_likelihood = -best.value;

  auto fail = [&](MleFailure reason) {
    result.converged = false;
    result.failure_reason = reason;
    return result;
  };
  if (!best.converged) return fail(MleFailure::optimizer_no_convergence);

  // Observed information; tau is left out when the estimate sits on the boundary.
  const MarginalEvaluation ev = evaluate_marginal(data, best.x, rule, true);
  const bool boundary = result.tau_hat < 1e-6;
  const Eigen::Index dim = boundary ? k + 1 : k + 2;
  const Eigen::MatrixXd info = -ev.hessian.topLeftCorner(dim, dim);
  if (!info.allFinite()) return fail(MleFailure::hessian_not_positive_definite);
  const Eigen::LLT<Eigen::MatrixXd> llt(info);
  if (llt.info() != Eigen::Success) return fail(MleFailure::hessian_not_positive_definite);

  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(info, Eigen::EigenvaluesOnly);
  const double ratio = eig.eigenvalues().minCoeff() / eig.eigenvalues().maxCoeff();
  if (!(ratio > 0.0)) return fail(MleFailure::hessian_not_positive_definite);
  if (ratio < options.singular_warning_ratio) {
    result.warnings.emplace_back("near-singular information matrix: estimates may be unreliable");
  }

  Eigen::VectorXd unit = Eigen::VectorXd::Zero(dim);
  unit(k) = 1.0;
  const double var_theta = llt.solve(unit)(k);
  if (!std::isfinite(var_theta) || !(var_theta > 0.0)) return fail(MleFailure::non_finite_se);
  if (std::abs(result.theta_hat) > options.theta_limit) return fail(MleFailure::theta_out_of_range);

  const double se = std::sqrt(var_theta);
  result.se_theta = se;
  result.ci_95 = std::make_pair(result.theta_hat - 1.96 * se, result.theta_hat + 1.96 * se);
  result.converged = true;
  result.failure_reason = MleFailure::none;
  return result;
}

}  // namespace raremeta
