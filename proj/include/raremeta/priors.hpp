#pragma once

#include "raremeta/model.hpp"

namespace raremeta {

/// Normal sd that puts 95% prior mass on odds ratios in (1/delta, delta).
double wip_sigma(double delta);

/// Number of patients a normal log-odds-ratio prior with this sd is worth,
/// reading sd^2 as the variance of a balanced 2x2 table with N/4 per cell.
double unit_information_ess(double sigma);

struct WipDerivation {
  double delta;
  double sigma_prior;
  double effective_sample_size;
};

WipDerivation derive_wip(double delta);

/// mu ~ N(0, 10), theta ~ N(0, 2.82), tau ~ half-normal(0.5).
PriorConfig default_priors();

/// Weakly informative prior with theta sd taken from wip_sigma(delta).
PriorConfig wip_priors(double delta);

/// Vague comparator: theta ~ N(0, 100).
PriorConfig vague_priors();

/// Quantile function of the tau prior (0 < prob < 1).
double tau_prior_quantile(TauPrior dist, double scale, double prob);

}  // namespace raremeta
