#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "raremeta/density.hpp"
#include "raremeta/random.hpp"

namespace raremeta {

struct SamplerConfig {
  std::size_t chains = 4;
  std::size_t iterations = 2000;  // per chain, warmup included
  std::size_t warmup = 1000;
  std::uint64_t seed = 1;
  double target_acceptance = 0.8;
  int max_tree_depth = 10;
  double max_energy_error = 1000.0;  // |delta H| above this marks a divergence
  bool parallel_chains = true;

  void validate() const;
};

/// Position, momentum and cached log density / gradient of one phase point.
struct PhasePoint {
  Eigen::VectorXd q;
  Eigen::VectorXd p;
  Eigen::VectorXd grad;
  double log_density = 0.0;
};

// Evaluates the target at z.q and refreshes the cache.
void refresh(PhasePoint& z, const LogDensity& target);

/// One leapfrog step with diagonal inverse metric. A negative step size
/// integrates backwards in time. Returns false when the new log density or
/// gradient is not finite.
bool leapfrog(PhasePoint& z, double step_size, const Eigen::VectorXd& inv_metric,
              const LogDensity& target);

/// Draws and diagnostics of one chain on the sampler's (unconstrained) scale.
struct ChainOutput {
  std::size_t chain_id = 0;
  Eigen::MatrixXd draws;  // (iterations - warmup) x dimension
  std::vector<double> energy_error;
  std::vector<double> accept_stat;
  std::vector<int> tree_depth;
  std::size_t divergences = 0;  // post-warmup
  std::size_t warmup_divergences = 0;
  double step_size = 0.0;
  Eigen::VectorXd inv_metric;
};

/// Runs one No-U-Turn chain from `init`. Warmup adapts the step size by dual
/// averaging toward the target acceptance and estimates a diagonal metric in
/// doubling windows. The random stream is keyed by (cfg.seed, chain_id).
ChainOutput sample_chain(const LogDensity& target, const Eigen::VectorXd& init,
                         const SamplerConfig& cfg, std::size_t chain_id);

/// Split-chain potential scale reduction factor.
double rhat(std::span<const std::vector<double>> chains);

/// Effective sample size over one or more chains (Geyer initial monotone sequence).
double effective_sample_size(std::span<const std::vector<double>> chains);

/// Post-warmup draws of one chain on the constrained scale.
struct ChainDraws {
  std::size_t chain_id = 0;
  std::vector<double> theta;
  std::vector<double> tau;
  Eigen::MatrixXd mu;    // draws x k
  Eigen::MatrixXd zeta;  // draws x k
  std::size_t divergences = 0;
  double mean_accept_stat = 0.0;
  double step_size = 0.0;
};

struct PosteriorDraws {
  std::vector<ChainDraws> chains;
  std::size_t divergences = 0;
  double rhat_theta = 1.0;
  double rhat_tau = 1.0;

  std::size_t total_draws() const;
  std::vector<double> merged_theta() const;
  std::vector<double> merged_tau() const;
};

/// Starting point near the data: mu at continuity-corrected logits, theta = 0,
/// zeta = 0, log tau = log 0.1, each jittered by N(0, 0.1^2).
Eigen::VectorXd initial_point(const MetaDataset& data, Rng& rng);

/// One chain of the hierarchical model posterior.
ChainDraws run_chain(const MetaDataset& data, const PriorConfig& priors,
                     const SamplerConfig& cfg, std::size_t chain_id);

/// `cfg.chains` independent chains, merged, with R-hat for theta and tau.
PosteriorDraws run_chains(const MetaDataset& data, const PriorConfig& priors,
                          const SamplerConfig& cfg);

}  // namespace raremeta
