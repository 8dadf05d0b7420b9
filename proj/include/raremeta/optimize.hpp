#pragma once

#include <functional>
#include <string>

#include <Eigen/Core>

namespace raremeta {

struct BoxBfgsOptions {
  std::size_t max_iterations = 1000;
  double gradient_tolerance = 1e-6;  // on the projected gradient, infinity norm
  double function_tolerance = 1e-14;  // relative change, see minimize_box_bfgs
};

struct BoxBfgsResult {
  Eigen::VectorXd x;
  double value = 0.0;
  Eigen::VectorXd gradient;
  std::size_t iterations = 0;
  bool converged = false;
  std::string message;
};

// Returns f(x) and writes its gradient.
using Objective = std::function<double(const Eigen::VectorXd&, Eigen::VectorXd&)>;

/// Minimises `f` subject to x >= lower (use -inf for free coordinates) with a
/// projected BFGS iteration: coordinates held at their bound by a gradient
/// pointing outwards are frozen, the inverse-Hessian approximation acts on the
/// rest, and steps are projected back onto the box with Armijo backtracking.
///
/// Converges when the projected gradient falls below gradient_tolerance, or
/// when the objective stops changing (relative change below
/// function_tolerance for three consecutive iterations).
BoxBfgsResult minimize_box_bfgs(const Objective& f, Eigen::VectorXd x0,
                                const Eigen::VectorXd& lower, const BoxBfgsOptions& options = {});

}  // namespace raremeta
