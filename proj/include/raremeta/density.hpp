#pragma once

#include <Eigen/Core>

#include "raremeta/model.hpp"

namespace raremeta {

/// A differentiable log density over R^d. Implementations must be safe to
/// evaluate concurrently from several threads.
class LogDensity {
 public:
  virtual ~LogDensity() = default;
  virtual std::size_t dimension() const = 0;
  // Returns the log density and writes its gradient into `grad`.
  virtual double evaluate(const Eigen::VectorXd& x, Eigen::VectorXd& grad) const = 0;
};

/// Posterior of the hierarchical model on the flat unconstrained layout.
class PosteriorDensity final : public LogDensity {
 public:
  PosteriorDensity(MetaDataset data, PriorConfig priors);

  std::size_t dimension() const override { return flat_dimension(data_.size()); }
  double evaluate(const Eigen::VectorXd& x, Eigen::VectorXd& grad) const override;

  const MetaDataset& data() const noexcept { return data_; }
  const PriorConfig& priors() const noexcept { return priors_; }

 private:
  MetaDataset data_;
  PriorConfig priors_;
};

/// Prior alone over the same layout as PosteriorDensity for `studies` studies.
/// Used to check that the sampler recovers known marginals.
class PriorDensity final : public LogDensity {
 public:
  PriorDensity(std::size_t studies, PriorConfig priors);

  std::size_t dimension() const override { return flat_dimension(studies_); }
  double evaluate(const Eigen::VectorXd& x, Eigen::VectorXd& grad) const override;

 private:
  std::size_t studies_;
  PriorConfig priors_;
};

}  // namespace raremeta
