#include "raremeta/optimize.hpp"

#include <algorithm>
#include <cmath>

namespace raremeta {
namespace {

Eigen::VectorXd project(Eigen::VectorXd x, const Eigen::VectorXd& lower) {
  return x.cwiseMax(lower);
}

// Mask of coordinates pinned at their bound with the gradient pushing out.
Eigen::VectorXd free_mask(const Eigen::VectorXd& x, const Eigen::VectorXd& g,
                          const Eigen::VectorXd& lower) {
  Eigen::VectorXd mask = Eigen::VectorXd::Ones(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (std::isfinite(lower(i)) && x(i) <= lower(i) && g(i) >= 0.0) mask(i) = 0.0;
  }
  return mask;
}

}  // namespace

BoxBfgsResult minimize_box_bfgs(const Objective& f, Eigen::VectorXd x0,
                                const Eigen::VectorXd& lower, const BoxBfgsOptions& options) {
  const Eigen::Index n = x0.size();
  BoxBfgsResult res;
  res.x = project(std::move(x0), lower);
  res.gradient.resize(n);
  res.value = f(res.x, res.gradient);
  if (!std::isfinite(res.value) || !res.gradient.allFinite()) {
    res.message = "objective not finite at the starting point";
    return res;
  }

  Eigen::MatrixXd inv_hessian = Eigen::MatrixXd::Identity(n, n);
  bool fresh_hessian = true;
  Eigen::VectorXd mask = free_mask(res.x, res.gradient, lower);
  int stalled = 0;

  for (res.iterations = 0; res.iterations < options.max_iterations; ++res.iterations) {
    const Eigen::VectorXd pg = res.gradient.cwiseProduct(mask);
    if (pg.lpNorm<Eigen::Infinity>() < options.gradient_tolerance) {
      res.converged = true;
      res.message = "projected gradient below tolerance";
      return res;
    }

    Eigen::VectorXd dir = -(mask.asDiagonal() * inv_hessian * mask.asDiagonal()) * res.gradient;
    if (!(dir.dot(pg) < 0.0)) {
      inv_hessian.setIdentity();
      fresh_hessian = true;
      dir = -pg;
    }

    // On a fresh identity approximation, cap the first step length at 1.
    double step = fresh_hessian ? std::min(1.0, 1.0 / dir.lpNorm<Eigen::Infinity>()) : 1.0;
    Eigen::VectorXd x_new;
    Eigen::VectorXd g_new(n);
    double f_new = 0.0;
    bool accepted = false;
    for (int trial = 0; trial < 60; ++trial) {
      x_new = project(res.x + step * dir, lower);
      f_new = f(x_new, g_new);
      const double decrease = res.gradient.dot(x_new - res.x);
      if (std::isfinite(f_new) && g_new.allFinite() && f_new <= res.value + 1e-4 * decrease) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      if (!fresh_hessian) {
        inv_hessian.setIdentity();
        fresh_hessian = true;
        continue;
      }
      res.message = "line search failed to decrease the objective";
      return res;
    }

    const Eigen::VectorXd s = x_new - res.x;
    const Eigen::VectorXd y = g_new - res.gradient;
    const double change = std::abs(res.value - f_new);
    res.x = x_new;
    res.gradient = g_new;
    res.value = f_new;

    const Eigen::VectorXd new_mask = free_mask(res.x, res.gradient, lower);
    if (new_mask != mask) {
      mask = new_mask;
      inv_hessian.setIdentity();
      fresh_hessian = true;
    } else {
      const double sy = s.dot(y);
      if (sy > 1e-12 * s.norm() * y.norm()) {
        if (fresh_hessian) {
          // Scale the initial approximation before the first update.
          inv_hessian *= sy / y.squaredNorm();
        }
        const double rho = 1.0 / sy;
        const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(n, n);
        inv_hessian = (eye - rho * s * y.transpose()) * inv_hessian * (eye - rho * y * s.transpose()) +
                      rho * s * s.transpose();
        fresh_hessian = false;
      }
    }

    if (change <= options.function_tolerance * (1.0 + std::abs(res.value))) {
      if (++stalled >= 3) {
        res.converged = true;
        res.message = "objective change below tolerance";
        return res;
      }
    } else {
      stalled = 0;
    }
  }
  res.message = "iteration limit reached";
  return res;
}

}  // namespace raremeta
