#include "raremeta/priors.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include <boost/math/distributions/normal.hpp>

#include "raremeta/error.hpp"

namespace raremeta {

double wip_sigma(double delta) {
  if (!(delta > 1.0) || !std::isfinite(delta)) {
    throw_invalid("odds-ratio bound delta must be finite and > 1 (got " + std::to_string(delta) +
                  ")");
  }
  return std::log(delta) / 1.96;
}

double unit_information_ess(double sigma) {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) {
    throw_invalid("prior sd must be finite and > 0");
  }
  return 16.0 / (sigma * sigma);
}

WipDerivation derive_wip(double delta) {
  const double sigma = wip_sigma(delta);
  return {delta, sigma, unit_information_ess(sigma)};
}

PriorConfig default_priors() {
  PriorConfig cfg;
  cfg.mu = {0.0, 10.0};
  cfg.theta = {0.0, 2.82};
  cfg.tau_dist = TauPrior::half_normal;
  cfg.tau_scale = 0.5;
  return cfg;
}

PriorConfig wip_priors(double delta) {
  PriorConfig cfg = default_priors();
  cfg.theta.sd = wip_sigma(delta);
  return cfg;
}

PriorConfig vague_priors() {
  PriorConfig cfg = default_priors();
  cfg.theta.sd = 100.0;
  return cfg;
}

double tau_prior_quantile(TauPrior dist, double scale, double prob) {
  if (!(prob > 0.0 && prob < 1.0)) throw_invalid("quantile probability must lie in (0, 1)");
  if (!(scale > 0.0)) throw_invalid("tau prior scale must be > 0");
  switch (dist) {
    case TauPrior::half_normal:
      return scale * boost::math::quantile(boost::math::normal_distribution<>(), 0.5 + 0.5 * prob);
    case TauPrior::uniform:
      return scale * prob;
    case TauPrior::half_cauchy:
      return scale * std::tan(0.5 * std::numbers::pi * prob);
  }
  throw_invalid("unknown tau prior");
}

}  // namespace raremeta
