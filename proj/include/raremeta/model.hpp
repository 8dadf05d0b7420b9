#pragma once

#include <cmath>
#include <string_view>

#include <Eigen/Core>

#include "raremeta/dataset.hpp"

namespace raremeta {

enum class TauPrior { half_normal = 1, uniform = 2, half_cauchy = 3 };

struct NormalPrior {
  double mean = 0.0;
  double sd = 1.0;
};

/// Prior specification of the binomial-normal hierarchical model.
struct PriorConfig {
  NormalPrior mu{0.0, 10.0};
  NormalPrior theta{0.0, 2.82};
  TauPrior tau_dist = TauPrior::half_normal;
  double tau_scale = 0.5;

  void validate() const;
};

const char* to_string(TauPrior dist);
TauPrior parse_tau_prior(std::string_view name);

/// Model state on the unconstrained scale.
///
/// The flat layout used by the sampler and by gradient() is
/// [mu_1..mu_k, theta, zeta_1..zeta_k, log_tau], length 2k + 2.
struct ParameterVector {
  Eigen::VectorXd mu;
  double theta = 0.0;
  Eigen::VectorXd zeta;
  double log_tau = 0.0;

  ParameterVector() = default;
  explicit ParameterVector(std::size_t studies)
      : mu(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(studies))),
        zeta(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(studies))) {}

  std::size_t studies() const noexcept { return static_cast<std::size_t>(mu.size()); }
  double tau() const { return std::exp(log_tau); }

  Eigen::VectorXd flatten() const;
  static ParameterVector unflatten(const Eigen::VectorXd& flat);
};

inline std::size_t flat_dimension(std::size_t studies) { return 2 * studies + 2; }

/// Same state with the heterogeneity on its natural scale (tau > 0).
struct ConstrainedParameters {
  Eigen::VectorXd mu;
  double theta = 0.0;
  Eigen::VectorXd zeta;
  double tau = 1.0;
};

ConstrainedParameters constrain(const ParameterVector& p);
ParameterVector unconstrain(const ConstrainedParameters& c);

struct ArmProbabilities {
  double control;
  double treatment;
};

double logistic(double x);
double logit(double p);
// log(1 + exp(x)) without overflow.
double softplus(double x);

/// Event probabilities of study `study_index`:
/// logit p_ctrl = mu - theta/2, logit p_trt = mu + theta/2 + zeta * tau.
ArmProbabilities arm_probabilities(const ParameterVector& p, std::size_t study_index);

// Binomial log-pmf written on the logit scale, including the coefficient.
double binomial_log_pmf(std::int64_t events, std::int64_t total, double eta);

double log_likelihood(const MetaDataset& data, const ParameterVector& p);

/// Sum of the prior log densities, including the log-Jacobian of tau -> log tau.
/// States outside the support of the tau prior give -infinity.
double log_prior(const ParameterVector& p, const PriorConfig& cfg);

double log_posterior(const MetaDataset& data, const ParameterVector& p, const PriorConfig& cfg);

/// Analytic gradient of log_posterior in the flat layout.
Eigen::VectorXd gradient(const MetaDataset& data, const ParameterVector& p, const PriorConfig& cfg);

/// Log density of the tau prior on the tau scale (no Jacobian), and its
/// derivative with respect to tau.
double tau_prior_log_density(double tau, TauPrior dist, double scale);
double tau_prior_log_density_derivative(double tau, TauPrior dist, double scale);

}  // namespace raremeta
