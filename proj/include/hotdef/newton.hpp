#pragma once

#include <Eigen/Dense>

#include <functional>

namespace hotdef {

struct NewtonOptions {
  double tol = 1e-10;  ///< on the infinity norm of the residual
  int max_iters = 200;
};

struct NewtonResult {
  Eigen::VectorXd x;
  double residual_norm = 0.0;  ///< infinity norm at x
  int iterations = 0;
  bool converged = false;
};

using ResidualFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;
using JacobianFn = std::function<Eigen::MatrixXd(const Eigen::VectorXd&)>;
using DomainFn = std::function<bool(const Eigen::VectorXd&)>;

/// Damped Newton for square systems with Armijo backtracking on
/// 0.5 |F|^2. When the Newton direction is rank deficient, leaves the domain,
/// or cannot be damped into a decrease, a Levenberg-Marquardt step
/// (J^T J + mu I) dx = -J^T F with growing mu is tried instead.
///
/// Throws DomainError if x0 is outside the domain, and RankDeficiencyError
/// if J is singular and no least-squares step decreases the merit function.
/// Otherwise returns with converged = false on stagnation or iteration cap.
NewtonResult damped_newton(const ResidualFn& residual, const JacobianFn& jacobian,
                           const DomainFn& in_domain, Eigen::VectorXd x0,
                           const NewtonOptions& opts = {});

}  // namespace hotdef
