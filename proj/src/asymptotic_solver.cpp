#include "hotdef/asymptotic_solver.hpp"
#include "hotdef/spike_model.hpp"

#include <unsupported/Eigen/AutoDiff>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace hotdef {

namespace {

using AD = Eigen::AutoDiffScalar<Eigen::VectorXd>;

AD constant(double value, Index m) { return AD(value, Eigen::VectorXd::Zero(m)); }
AD variable(double value, Index m, Index k) { return AD(value, m, k); }

Vector<AD> constant_vector(const Eigen::VectorXd& v, Index m) {
  Vector<AD> out(v.size());
  for (Index i = 0; i < v.size(); ++i) out[i] = constant(v[i], m);
  return out;
}

Matrix<AD> constant_matrix(const Eigen::MatrixXd& a, Index m) {
  Matrix<AD> out(a.rows(), a.cols());
  for (Index i = 0; i < a.rows(); ++i) {
    for (Index j = 0; j < a.cols(); ++j) out(i, j) = constant(a(i, j), m);
  }
  return out;
}

template <int Rows>
Eigen::MatrixXd jacobian_of(const Eigen::Matrix<AD, Rows, 1>& values, Index m) {
  Eigen::MatrixXd jac(values.size(), m);
  for (Index k = 0; k < values.size(); ++k) {
    const Eigen::VectorXd& grad = values[k].derivatives();
    if (grad.size() == m) {
      jac.row(k) = grad.transpose();
    } else {
      jac.row(k).setZero();
    }
  }
  return jac;
}

void check_shapes(const LimitStats& stats, const ModelParams& params) {
  const int r = params.rank();
  if (stats.rank() != r || stats.rho.rows() != r || stats.rho.cols() != r ||
      stats.eta.rows() != r || stats.eta.cols() != r || params.gram.rows() != r ||
      params.gram.cols() != r) {
    throw DimensionError("limit statistics and model parameters disagree on rank");
  }
}

bool lambdas_in_domain(const Eigen::VectorXd& lambda, int d) {
  const double threshold = domain_threshold(d);
  return (lambda.array() > threshold).all();
}

// Inverse-mode search variables (log beta1, log beta2, atanh alpha,
// rho11, rho12, rho21, rho22).
template <typename Scalar>
Eigen::Matrix<Scalar, 7, 1> inverse_residual(const Eigen::Matrix<Scalar, 7, 1>& y,
                                             const ObservedSpectrum& observed,
                                             const Scalar& zero) {
  using std::exp;
  using std::tanh;
  Eigen::Matrix<Scalar, 3, 1> lam;
  lam << zero + observed.lambda1, zero + observed.lambda2, zero + observed.eta12;
  Eigen::Matrix<Scalar, 3, 1> bet;
  bet << exp(y[0]), exp(y[1]), tanh(y[2]);
  Eigen::Matrix<Scalar, 2, 2> rho;
  rho << y[3], y[4], y[5], y[6];
  return psi<Scalar>(lam, bet, rho);
}

}  // namespace

std::string to_string(InitSource source) {
  switch (source) {
    case InitSource::empirical: return "empirical";
    case InitSource::user: return "user";
    case InitSource::continuation: return "continuation";
    case InitSource::observation: return "observation";
  }
  return "unknown";
}

std::string to_string(SolveMode mode) {
  return mode == SolveMode::forward ? "forward" : "inverse";
}

double domain_threshold(int d) { return gamma_d(d) * (d - 1) * (1.0 + 1e-8); }

LimitStats LimitStats::from_summary(const SummaryStatistics& stats) {
  LimitStats out{stats.lambda_hat, stats.rho_hat, stats.eta_hat};
  // Symmetrize and pin the diagonal; the empirical matrix is symmetric only
  // to rounding.
  out.eta = 0.5 * (out.eta + out.eta.transpose()).eval();
  out.eta.diagonal().setOnes();
  return out;
}

Eigen::VectorXd system_residual(const LimitStats& stats, const ModelParams& params, int d) {
  check_shapes(stats, params);
  return system_residual<double>(stats.lambda, stats.rho, stats.eta, params.beta,
                                 params.gram, d);
}

Eigen::VectorXd pack_forward(const LimitStats& stats) {
  const int r = stats.rank();
  Eigen::VectorXd x(system_size(r));
  Index k = 0;
  for (Index i = 0; i < r; ++i) x[k++] = stats.lambda[i];
  for (Index i = 0; i < r; ++i) {
    for (Index j = 0; j < r; ++j) x[k++] = stats.rho(i, j);
  }
  for (Index i = 0; i < r; ++i) {
    for (Index j = 0; j < i; ++j) x[k++] = stats.eta(i, j);
  }
  return x;
}

LimitStats unpack_forward(const Eigen::VectorXd& x, int r) {
  if (x.size() != system_size(r)) throw DimensionError("packed vector has wrong size");
  LimitStats out{Eigen::VectorXd(r), Eigen::MatrixXd(r, r), Eigen::MatrixXd::Identity(r, r)};
  Index k = 0;
  for (Index i = 0; i < r; ++i) out.lambda[i] = x[k++];
  for (Index i = 0; i < r; ++i) {
    for (Index j = 0; j < r; ++j) out.rho(i, j) = x[k++];
  }
  for (Index i = 0; i < r; ++i) {
    for (Index j = 0; j < i; ++j) {
      out.eta(i, j) = x[k];
      out.eta(j, i) = x[k];
      ++k;
    }
  }
  return out;
}

Eigen::MatrixXd forward_jacobian(const LimitStats& stats, const ModelParams& params, int d) {
  check_shapes(stats, params);
  const int r = stats.rank();
  const Eigen::VectorXd x = pack_forward(stats);
  const Index m = x.size();

  Vector<AD> lambda(r);
  Matrix<AD> rho(r, r);
  Matrix<AD> eta(r, r);
  Index k = 0;
  for (Index i = 0; i < r; ++i, ++k) lambda[i] = variable(x[k], m, k);
  for (Index i = 0; i < r; ++i) {
    for (Index j = 0; j < r; ++j, ++k) rho(i, j) = variable(x[k], m, k);
  }
  for (Index i = 0; i < r; ++i) {
    eta(i, i) = constant(1.0, m);
    for (Index j = 0; j < i; ++j, ++k) {
      eta(i, j) = variable(x[k], m, k);
      eta(j, i) = eta(i, j);
    }
  }
  const Vector<AD> res = system_residual<AD>(lambda, rho, eta, constant_vector(params.beta, m),
                                             constant_matrix(params.gram, m), d);
  return jacobian_of<Eigen::Dynamic>(res, m);
}

SolveReport solve_forward(const ModelParams& params, int d, const LimitStats& init,
                          InitSource init_source, const SolveOptions& opts) {
  check_shapes(init, params);
  if (!lambdas_in_domain(init.lambda, d)) {
    throw DomainError("solve_forward: initial eigenvalue at or below gamma_d (d - 1)");
  }
  const int r = params.rank();
  const auto residual = [&](const Eigen::VectorXd& x) {
    return system_residual(unpack_forward(x, r), params, d);
  };
  const auto jacobian = [&](const Eigen::VectorXd& x) {
    return forward_jacobian(unpack_forward(x, r), params, d);
  };
  const auto in_domain = [&](const Eigen::VectorXd& x) {
    return lambdas_in_domain(x.head(r), d);
  };
  const NewtonResult nr = damped_newton(residual, jacobian, in_domain, pack_forward(init),
                                        NewtonOptions{opts.tol, opts.max_iters});
  SolveReport report;
  report.mode = SolveMode::forward;
  report.stats = unpack_forward(nr.x, r);
  report.params = params;
  report.residual_norm = nr.residual_norm;
  report.iterations = nr.iterations;
  report.converged = nr.converged;
  report.init_source = init_source;
  return report;
}

LimitStats large_beta_guess(const ModelParams& params) {
  const int r = params.rank();
  std::vector<Index> order(static_cast<std::size_t>(r));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Index a, Index b) { return params.beta[a] > params.beta[b]; });
  LimitStats guess{Eigen::VectorXd(r), Eigen::MatrixXd(r, r), Eigen::MatrixXd(r, r)};
  for (Index i = 0; i < r; ++i) {
    const Index c = order[static_cast<std::size_t>(i)];
    guess.lambda[i] = params.beta[c];
    guess.rho.row(i) = params.gram.row(c);
    for (Index j = 0; j < r; ++j) guess.eta(i, j) = params.gram(c, order[static_cast<std::size_t>(j)]);
  }
  return guess;
}

SolveReport solve_forward_continuation(const ModelParams& params, int d,
                                       const SolveOptions& opts) {
  // Path t in [0, 1]: weights scaled by kScale^(1 - t), off-diagonal
  // correlations by t. At t = 0 the components are orthogonal and strong, so
  // the deflation steps decouple and the guess is close to the root.
  constexpr double kScale = 8.0;
  constexpr double kMinStep = 1e-4;
  const int r = params.rank();
  const Eigen::MatrixXd identity = Eigen::MatrixXd::Identity(r, r);
  const auto path_params = [&](double t) {
    ModelParams p = params;
    p.beta *= std::pow(kScale, 1.0 - t);
    p.gram = identity + t * (params.gram - identity);
    return p;
  };

  SolveReport current = solve_forward(path_params(0.0), d, large_beta_guess(path_params(0.0)),
                                      InitSource::continuation, opts);
  int iterations = current.iterations;
  double t = 0.0;
  double step = 0.1;
  while (current.converged && t < 1.0) {
    const double next_t = std::min(1.0, t + step);
    SolveReport trial;
    try {
      trial = solve_forward(path_params(next_t), d, current.stats, InitSource::continuation, opts);
    } catch (const std::exception&) {
      trial.converged = false;
    }
    iterations += trial.iterations;
    if (trial.converged) {
      current = std::move(trial);
      t = next_t;
      step = std::min(0.2, step * 1.5);
    } else {
      step *= 0.5;
      if (step < kMinStep) {
        current.converged = false;
        break;
      }
    }
  }
  current.iterations = iterations;
  current.init_source = InitSource::continuation;
  if (t < 1.0) current.converged = false;
  current.params = params;
  return current;
}

SolveReport estimate_params(const ObservedSpectrum& observed, int d, const ModelParams& init,
                            const Eigen::Matrix2d& rho_init, const SolveOptions& opts) {
  if (d != 3) throw DomainError("estimate_params is defined for order d = 3");
  if (init.rank() != 2 || init.gram.rows() != 2 || init.gram.cols() != 2) {
    throw DimensionError("estimate_params needs a rank-2 initial model");
  }
  const double threshold = domain_threshold(d);
  if (!(observed.lambda1 > threshold) || !(observed.lambda2 > threshold)) {
    throw InfeasibleObservationError(
        "observed eigenvalue at or below gamma_d (d - 1): estimation undefined");
  }
  if (!(init.beta.array() > 0.0).all() || !(std::abs(init.gram(0, 1)) < 1.0)) {
    throw ModelError("estimate_params: initial beta must be positive and |alpha| < 1");
  }

  using Vec7 = Eigen::Matrix<double, 7, 1>;
  using AD7 = Eigen::Matrix<AD, 7, 1>;
  Vec7 y0;
  y0 << std::log(init.beta[0]), std::log(init.beta[1]), std::atanh(init.gram(0, 1)),
      rho_init(0, 0), rho_init(0, 1), rho_init(1, 0), rho_init(1, 1);

  const auto residual = [&](const Eigen::VectorXd& y) -> Eigen::VectorXd {
    return inverse_residual<double>(Vec7(y), observed, 0.0);
  };
  const auto jacobian = [&](const Eigen::VectorXd& y) -> Eigen::MatrixXd {
    AD7 ya;
    for (Index k = 0; k < 7; ++k) ya[k] = variable(y[k], 7, k);
    return jacobian_of<7>(inverse_residual<AD>(ya, observed, constant(0.0, 7)), 7);
  };
  const auto in_domain = [](const Eigen::VectorXd& y) { return y.allFinite(); };
  const NewtonResult nr =
      damped_newton(residual, jacobian, in_domain, y0, NewtonOptions{opts.tol, opts.max_iters});

  SolveReport report;
  report.mode = SolveMode::inverse;
  report.params.beta = Eigen::Vector2d(std::exp(nr.x[0]), std::exp(nr.x[1]));
  report.params.gram = Eigen::Matrix2d::Identity();
  report.params.gram(0, 1) = report.params.gram(1, 0) = std::tanh(nr.x[2]);
  report.stats.lambda = Eigen::Vector2d(observed.lambda1, observed.lambda2);
  report.stats.rho.resize(2, 2);
  report.stats.rho << nr.x[3], nr.x[4], nr.x[5], nr.x[6];
  report.stats.eta = Eigen::Matrix2d::Identity();
  report.stats.eta(0, 1) = report.stats.eta(1, 0) = observed.eta12;
  report.residual_norm = nr.residual_norm;
  report.iterations = nr.iterations;
  report.converged = nr.converged;
  report.init_source = InitSource::user;
  return report;
}

InverseInit default_inverse_init(const ObservedSpectrum& observed) {
  const double alpha = std::clamp(observed.eta12, -0.9, 0.9);
  InverseInit init;
  init.params.beta = Eigen::Vector2d(std::max(observed.lambda1, 1.0), std::max(observed.lambda2, 1.0));
  init.params.gram = two_component_gram(alpha);
  init.rho << 1.0, alpha, alpha, 1.0;
  return init;
}

}  // namespace hotdef
