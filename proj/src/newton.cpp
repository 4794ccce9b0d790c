#include "hotdef/newton.hpp"

#include <cmath>
#include <optional>

#include "hotdef/errors.hpp"

namespace hotdef {

namespace {

using Index = Eigen::Index;

constexpr double kArmijo = 1e-4;
constexpr double kMinStep = 1e-10;
constexpr int kMaxLevenbergTries = 40;

double merit(const Eigen::VectorXd& f) { return 0.5 * f.squaredNorm(); }

bool finite(const Eigen::VectorXd& v) { return v.allFinite(); }

struct Trial {
  Eigen::VectorXd x;
  Eigen::VectorXd f;
};

// Evaluates the residual, treating domain violations (exceptions from the
// spectral kernels included) as a failed trial.
std::optional<Eigen::VectorXd> try_residual(const ResidualFn& residual,
                                            const DomainFn& in_domain,
                                            const Eigen::VectorXd& x) {
  if (!finite(x) || !in_domain(x)) return std::nullopt;
  try {
    Eigen::VectorXd f = residual(x);
    if (!finite(f)) return std::nullopt;
    return f;
  } catch (const DomainError&) {
    return std::nullopt;
  }
}

std::optional<Trial> line_search(const ResidualFn& residual, const DomainFn& in_domain,
                                 const Eigen::VectorXd& x, double m0,
                                 const Eigen::VectorXd& dx) {
  // Newton direction: directional derivative of the merit is -2 m0.
  for (double t = 1.0; t >= kMinStep; t *= 0.5) {
    Eigen::VectorXd xt = x + t * dx;
    auto ft = try_residual(residual, in_domain, xt);
    if (ft && merit(*ft) <= (1.0 - 2.0 * kArmijo * t) * m0) return Trial{xt, *ft};
  }
  return std::nullopt;
}

std::optional<Trial> levenberg_step(const ResidualFn& residual, const DomainFn& in_domain,
                                    const Eigen::VectorXd& x, const Eigen::VectorXd& f,
                                    const Eigen::MatrixXd& jac) {
  const Eigen::MatrixXd normal = jac.transpose() * jac;
  const Eigen::VectorXd gradient = jac.transpose() * f;
  const Index n = normal.rows();
  const double m0 = merit(f);
  double mu = 1e-6 * std::max(1.0, normal.diagonal().maxCoeff());
  for (int k = 0; k < kMaxLevenbergTries; ++k, mu *= 10.0) {
    const Eigen::MatrixXd damped = normal + mu * Eigen::MatrixXd::Identity(n, n);
    const Eigen::VectorXd dx = damped.ldlt().solve(-gradient);
    Eigen::VectorXd xt = x + dx;
    auto ft = try_residual(residual, in_domain, xt);
    if (ft && merit(*ft) < m0) return Trial{xt, *ft};
  }
  return std::nullopt;
}

}  // namespace

NewtonResult damped_newton(const ResidualFn& residual, const JacobianFn& jacobian,
                           const DomainFn& in_domain, Eigen::VectorXd x0,
                           const NewtonOptions& opts) {
  if (!in_domain(x0)) throw DomainError("initial point outside the solver domain");
  NewtonResult result;
  result.x = std::move(x0);
  Eigen::VectorXd f = residual(result.x);
  if (!finite(f)) throw NumericError("non-finite residual at the initial point");

  for (int it = 0; it < opts.max_iters; ++it) {
    result.residual_norm = f.lpNorm<Eigen::Infinity>();
    if (result.residual_norm <= opts.tol) {
      result.converged = true;
      return result;
    }
    const Eigen::MatrixXd jac = jacobian(result.x);
    const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(jac);
    const bool full_rank = jac.rows() == jac.cols() && qr.rank() == jac.cols();

    std::optional<Trial> step;
    if (full_rank) step = line_search(residual, in_domain, result.x, merit(f), qr.solve(-f));
    if (!step) step = levenberg_step(residual, in_domain, result.x, f, jac);
    if (!step) {
      if (!full_rank) {
        throw RankDeficiencyError(
            "Jacobian is rank deficient and no least-squares step made progress; "
            "re-initialize the solver");
      }
      return result;
    }
    result.x = std::move(step->x);
    f = std::move(step->f);
    result.iterations = it + 1;
  }
  result.residual_norm = f.lpNorm<Eigen::Infinity>();
  result.converged = result.residual_norm <= opts.tol;
  return result;
}

}  // namespace hotdef
