#include "raremeta/density.hpp"

#include <cmath>
#include <utility>

namespace raremeta {

PosteriorDensity::PosteriorDensity(MetaDataset data, PriorConfig priors)
    : data_(std::move(data)), priors_(priors) {
  priors_.validate();
}

double PosteriorDensity::evaluate(const Eigen::VectorXd& x, Eigen::VectorXd& grad) const {
  const ParameterVector p = ParameterVector::unflatten(x);
  grad = gradient(data_, p, priors_);
  return log_posterior(data_, p, priors_);
}

PriorDensity::PriorDensity(std::size_t studies, PriorConfig priors)
    : studies_(studies), priors_(priors) {
  priors_.validate();
}

double PriorDensity::evaluate(const Eigen::VectorXd& x, Eigen::VectorXd& grad) const {
  const ParameterVector p = ParameterVector::unflatten(x);
  const auto k = static_cast<Eigen::Index>(studies_);
  grad.resize(2 * k + 2);
  const double mu_var = priors_.mu.sd * priors_.mu.sd;
  for (Eigen::Index i = 0; i < k; ++i) {
    grad(i) = -(p.mu(i) - priors_.mu.mean) / mu_var;
    grad(k + 1 + i) = -p.zeta(i);
  }
  grad(k) = -(p.theta - priors_.theta.mean) / (priors_.theta.sd * priors_.theta.sd);
  const double tau = p.tau();
  grad(2 * k + 1) =
      tau * tau_prior_log_density_derivative(tau, priors_.tau_dist, priors_.tau_scale) + 1.0;
  return log_prior(p, priors_);
}

}  // namespace raremeta
