#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "raremeta/dataset.hpp"

namespace raremeta {

/// Gauss-Hermite rule normalised for expectations under N(0, 1):
/// E[f(Z)] ~ sum_k weights[k] * f(nodes[k]).
struct GaussHermiteRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

GaussHermiteRule gh_nodes(std::size_t order);

/// Marginal log-likelihood with the study-level random effect integrated out
/// by adaptive Gauss-Hermite quadrature (nodes recentred at the mode of each
/// study's integrand and scaled by its curvature). At tau = 0 the integral is
/// the plug-in value at z = 0.
double marginal_log_likelihood(const MetaDataset& data, const Eigen::VectorXd& mu, double theta,
                               double tau, std::size_t order);

/// Value, gradient and (moment-based) Hessian of the marginal log-likelihood
/// over x = [mu_1..mu_k, theta, tau].
struct MarginalEvaluation {
  double value = 0.0;
  Eigen::VectorXd gradient;
  Eigen::MatrixXd hessian;
};

MarginalEvaluation evaluate_marginal(const MetaDataset& data, const Eigen::VectorXd& x,
                                     const GaussHermiteRule& rule, bool with_hessian);

enum class MleFailure {
  none,
  optimizer_no_convergence,
  hessian_not_positive_definite,
  non_finite_se,
  theta_out_of_range,  // |theta| > 10: drift towards infinity under separation
};

const char* to_string(MleFailure reason);

struct MleResult {
  double theta_hat = 0.0;
  double tau_hat = 0.0;
  Eigen::VectorXd mu_hat;
  std::optional<double> se_theta;
  std::optional<std::pair<double, double>> ci_95;
  bool converged = false;
  MleFailure failure_reason = MleFailure::none;
  double log_likelihood = 0.0;
  std::size_t iterations = 0;
  std::size_t gh_order = 7;
  std::vector<std::string> warnings;
};

struct MleOptions {
  std::size_t gh_order = 7;
  std::vector<double> tau_starts{0.0, 0.1, 0.5};
  double theta_limit = 10.0;
  // Smallest/largest Hessian eigenvalue ratio below which a reliability warning is attached.
  double singular_warning_ratio = 1e-6;
};

/// Maximum-likelihood fit over (mu, theta, tau >= 0). Never throws for a valid
/// dataset: failures come back as converged == false with a reason.
MleResult fit_mle(const MetaDataset& data, const MleOptions& options = {});

}  // namespace raremeta
