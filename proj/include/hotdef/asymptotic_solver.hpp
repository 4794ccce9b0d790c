#pragma once

#include <Eigen/Dense>

#include <array>
#include <vector>
#include <string>

#include "hotdef/deflation.hpp"
#include "hotdef/newton.hpp"
#include "hotdef/rmt_kernel.hpp"
#include "hotdef/symtensor.hpp"

namespace hotdef {

/// Limiting summary statistics of an r-step deflation.
struct LimitStats {
  Eigen::VectorXd lambda;  ///< r limiting eigenvalues
  Eigen::MatrixXd rho;     ///< rho(i, j): alignment of u_i with x_j
  /// Symmetric with unit diagonal; only the strict lower triangle is an
  /// unknown of the system.
  Eigen::MatrixXd eta;

  int rank() const { return static_cast<int>(lambda.size()); }

  static LimitStats from_summary(const SummaryStatistics& stats);
};

struct ModelParams {
  Eigen::VectorXd beta;  ///< r positive weights
  Eigen::MatrixXd gram;  ///< alpha, unit diagonal

  int rank() const { return static_cast<int>(beta.size()); }
};

/// `observation`: inverse start derived from the observed spectrum alone.
enum class InitSource { empirical, user, continuation, observation };
enum class SolveMode { forward, inverse };

std::string to_string(InitSource source);
std::string to_string(SolveMode mode);

struct SolveOptions {
  double tol = 1e-10;
  int max_iters = 200;
};

/// A point (stats, params) of the limiting system together with how it was
/// found. Forward mode solves for `stats` with `params` fixed; inverse mode
/// solves for `params` and rho with lambda and eta fixed.
struct SolveReport {
  SolveMode mode = SolveMode::forward;
  LimitStats stats;
  ModelParams params;
  double residual_norm = 0.0;  ///< infinity norm
  int iterations = 0;
  bool converged = false;
  InitSource init_source = InitSource::user;
};

/// Smallest eigenvalue accepted by the solvers: gamma_d (d - 1) (1 + 1e-8).
double domain_threshold(int d);

inline Index system_size(int r) { return r + r * r + r * (r - 1) / 2; }

namespace detail {

template <typename Scalar>
Scalar ipow(const Scalar& x, int k) {
  Scalar out(1);
  for (int i = 0; i < k; ++i) out *= x;
  return out;
}

}  // namespace detail

/// Residuals of the limiting system, right side minus left side, stacked as
///   r eigenvalue equations  (i),
///   r^2 alignment equations (i, j) row-major,
///   r(r-1)/2 cross equations (i, j < i), i ascending then j ascending.
/// alpha_jj = 1 and eta_ii = 1 inside the sums. Throws DomainError if some
/// lambda_i < gamma_d (d - 1).
template <typename Scalar>
Vector<Scalar> system_residual(const Vector<Scalar>& lambda, const Matrix<Scalar>& rho,
                               const Matrix<Scalar>& eta, const Vector<Scalar>& beta,
                               const Matrix<Scalar>& gram, int d) {
  const Index r = lambda.size();
  if (rho.rows() != r || rho.cols() != r || eta.rows() != r || eta.cols() != r ||
      beta.size() != r || gram.rows() != r || gram.cols() != r) {
    throw DimensionError("system_residual: inconsistent rank");
  }
  using detail::ipow;
  Vector<Scalar> out(system_size(static_cast<int>(r)));
  Index row = 0;

  std::vector<Scalar> h(static_cast<std::size_t>(r));
  std::vector<Scalar> q(static_cast<std::size_t>(r));
  for (Index i = 0; i < r; ++i) {
    h[static_cast<std::size_t>(i)] = h_func(lambda[i], d);
    q[static_cast<std::size_t>(i)] = q_func(lambda[i], d);
  }

  for (Index i = 0; i < r; ++i) {
    Scalar rhs(0);
    for (Index j = 0; j < r; ++j) rhs += beta[j] * ipow(rho(i, j), d);
    for (Index j = 0; j < i; ++j) rhs -= lambda[j] * ipow(eta(i, j), d);
    out[row++] = rhs - f_func(lambda[i], d);
  }
  for (Index i = 0; i < r; ++i) {
    for (Index j = 0; j < r; ++j) {
      Scalar rhs(0);
      for (Index k = 0; k < r; ++k) rhs += beta[k] * gram(j, k) * ipow(rho(i, k), d - 1);
      for (Index k = 0; k < i; ++k) rhs -= lambda[k] * rho(k, j) * ipow(eta(i, k), d - 1);
      out[row++] = rhs - h[static_cast<std::size_t>(i)] * rho(i, j);
    }
  }
  for (Index i = 0; i < r; ++i) {
    for (Index j = 0; j < i; ++j) {
      Scalar rhs(0);
      for (Index k = 0; k < r; ++k) rhs += beta[k] * rho(j, k) * ipow(rho(i, k), d - 1);
      for (Index k = 0; k < i; ++k) rhs -= lambda[k] * eta(k, j) * ipow(eta(i, k), d - 1);
      out[row++] = rhs - (h[static_cast<std::size_t>(i)] +
                          q[static_cast<std::size_t>(j)] * ipow(eta(i, j), d - 2)) *
                             eta(i, j);
    }
  }
  return out;
}

Eigen::VectorXd system_residual(const LimitStats& stats, const ModelParams& params, int d);

/// Rank-2, order-3 residual map with arguments (lambda1, lambda2, eta12),
/// (beta1, beta2, alpha12) and rho, rows in the order
///   [eig 1, align (1,1), align (1,2), eig 2, align (2,1), align (2,2), cross].
template <typename Scalar>
Eigen::Matrix<Scalar, 7, 1> psi(const Eigen::Matrix<Scalar, 3, 1>& lam,
                                const Eigen::Matrix<Scalar, 3, 1>& bet,
                                const Eigen::Matrix<Scalar, 2, 2>& rho) {
  constexpr int d = 3;
  const Scalar& l1 = lam[0];
  const Scalar& l2 = lam[1];
  const Scalar& eta = lam[2];
  const Scalar& b1 = bet[0];
  const Scalar& b2 = bet[1];
  const Scalar& a = bet[2];
  const Scalar one(1);
  const Scalar h1 = h_func(l1, d);
  const Scalar h2 = h_func(l2, d);

  Eigen::Matrix<Scalar, 7, 1> out;
  out[0] = b1 * (rho(0, 0) * rho(0, 0) * rho(0, 0)) + b2 * (rho(0, 1) * rho(0, 1) * rho(0, 1)) -
           f_func(l1, d);
  out[1] = b1 * one * (rho(0, 0) * rho(0, 0)) + b2 * a * (rho(0, 1) * rho(0, 1)) -
           h1 * rho(0, 0);
  out[2] = b1 * a * (rho(0, 0) * rho(0, 0)) + b2 * one * (rho(0, 1) * rho(0, 1)) -
           h1 * rho(0, 1);
  out[3] = b1 * (rho(1, 0) * rho(1, 0) * rho(1, 0)) + b2 * (rho(1, 1) * rho(1, 1) * rho(1, 1)) -
           f_func(l2, d) - l1 * (eta * eta * eta);
  out[4] = b1 * one * (rho(1, 0) * rho(1, 0)) + b2 * a * (rho(1, 1) * rho(1, 1)) -
           h2 * rho(1, 0) - l1 * rho(0, 0) * (eta * eta);
  out[5] = b1 * a * (rho(1, 0) * rho(1, 0)) + b2 * one * (rho(1, 1) * rho(1, 1)) -
           h2 * rho(1, 1) - l1 * rho(0, 1) * (eta * eta);
  out[6] = b1 * rho(0, 0) * (rho(1, 0) * rho(1, 0)) + b2 * rho(0, 1) * (rho(1, 1) * rho(1, 1)) -
           h2 * eta - (l1 + q_func(l1, d)) * (eta * eta);
  return out;
}

/// psi row k equals system_residual entry kPsiRows[k] at r = 2, d = 3.
inline constexpr std::array<Index, 7> kPsiRows{0, 2, 3, 1, 4, 5, 6};

/// Forward unknowns packed as (lambda, rho row-major, strict lower eta).
Eigen::VectorXd pack_forward(const LimitStats& stats);
LimitStats unpack_forward(const Eigen::VectorXd& x, int r);

/// Exact Jacobian of system_residual with respect to the packed forward
/// unknowns (forward-mode automatic differentiation through the closed forms).
Eigen::MatrixXd forward_jacobian(const LimitStats& stats, const ModelParams& params, int d);

/// Solves the limiting system for (lambda, rho, eta) given (beta, alpha),
/// starting from `init`. Throws DomainError if init has some
/// lambda_i <= domain_threshold(d).
SolveReport solve_forward(const ModelParams& params, int d, const LimitStats& init,
                          InitSource init_source = InitSource::empirical,
                          const SolveOptions& opts = {});

/// Noise-free guess for large weights: step i follows the i-th strongest
/// component, so rho(i, .) is that component's Gram row.
LimitStats large_beta_guess(const ModelParams& params);

/// Homotopy in a common weight scale s from a large value down to 1, each
/// solve warm-started from the previous one and the first from
/// large_beta_guess.
SolveReport solve_forward_continuation(const ModelParams& params, int d,
                                       const SolveOptions& opts = {});

struct ObservedSpectrum {
  double lambda1 = 0.0;
  double lambda2 = 0.0;
  double eta12 = 0.0;
};

/// Inverse problem at r = 2, d = 3: with (lambda1, lambda2, eta12) fixed,
/// solves psi = 0 for (beta1, beta2, alpha, rho). The search runs over
/// (log beta, atanh alpha, rho) so beta > 0 and |alpha| < 1 hold throughout.
/// Throws InfeasibleObservationError when an observed lambda is at or below
/// the domain threshold.
SolveReport estimate_params(const ObservedSpectrum& observed, int d, const ModelParams& init,
                            const Eigen::Matrix2d& rho_init, const SolveOptions& opts = {});

/// Starting point for estimate_params read off the observation: beta = lambda,
/// alpha = eta12 and the large-weight alignments.
struct InverseInit {
  ModelParams params;
  Eigen::Matrix2d rho;
};
InverseInit default_inverse_init(const ObservedSpectrum& observed);

}  // namespace hotdef
