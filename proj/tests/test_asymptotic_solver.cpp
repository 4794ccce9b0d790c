#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "hotdef/asymptotic_solver.hpp"
#include "hotdef/errors.hpp"
#include "hotdef/newton.hpp"
#include "hotdef/spike_model.hpp"

using namespace hotdef;

namespace {

ModelParams two_spikes(double b1, double b2, double alpha) {
  return {Eigen::Vector2d(b1, b2), two_component_gram(alpha)};
}

// Rank 1, d = 3: the alignment equation gives rho = h(lambda) / beta, and the
// eigenvalue equation then reads h^3 = beta^2 f. Root by bisection.
double rank_one_lambda(double beta) {
  const auto phi = [beta](double z) {
    const double h = h_func(z, 3);
    return h * h * h - beta * beta * f_func(z, 3);
  };
  double lo = std::max(beta * 0.5, domain_threshold(3)), hi = beta * 2.0;
  REQUIRE(phi(lo) * phi(hi) < 0.0);
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    ((phi(lo) < 0.0) == (phi(mid) < 0.0) ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

// Noise-free top eigenvalue: max of b1 <u,x1>^3 + b2 <u,x2>^3 over unit u in
// span{x1, x2}, by scan and golden-section refinement.
double noiseless_top(double b1, double b2, double alpha) {
  const double s = std::sqrt(1.0 - alpha * alpha);
  const auto f = [&](double t) {
    const double p1 = std::cos(t), p2 = alpha * std::cos(t) + s * std::sin(t);
    return b1 * p1 * p1 * p1 + b2 * p2 * p2 * p2;
  };
  double best = 0.0;
  for (int k = 1; k < 20000; ++k) {
    if (f(6.283185307179586 * k / 20000) > f(best)) best = 6.283185307179586 * k / 20000;
  }
  double a = best - 1e-3, b = best + 1e-3;
  for (int it = 0; it < 100; ++it) {
    const double c = b - 0.618033988749895 * (b - a), d = a + 0.618033988749895 * (b - a);
    if (f(c) > f(d)) b = d;
    else a = c;
  }
  return f(0.5 * (a + b));
}

}  // namespace

TEST_CASE("damped Newton solves a small nonlinear system") {
  // x^2 + y^2 = 4, x y = 1.
  const auto residual = [](const Eigen::VectorXd& v) {
    return Eigen::Vector2d(v[0] * v[0] + v[1] * v[1] - 4.0, v[0] * v[1] - 1.0).eval();
  };
  const auto jacobian = [](const Eigen::VectorXd& v) {
    Eigen::Matrix2d j;
    j << 2.0 * v[0], 2.0 * v[1], v[1], v[0];
    return Eigen::MatrixXd(j);
  };
  const auto anywhere = [](const Eigen::VectorXd&) { return true; };
  const NewtonResult r = damped_newton(residual, jacobian, anywhere, Eigen::Vector2d(3.0, 0.5));
  CHECK(r.converged);
  CHECK(r.residual_norm <= 1e-10);
  CHECK(r.x[0] * r.x[1] == doctest::Approx(1.0));

  const auto positive = [](const Eigen::VectorXd& v) { return v[0] > 0.0; };
  CHECK_THROWS_AS(damped_newton(residual, jacobian, positive, Eigen::Vector2d(-1.0, 0.5)),
                  DomainError);
}

TEST_CASE("damped Newton reports failure on an inconsistent system") {
  // x^2 + 1 = 0 has no real root.
  const auto residual = [](const Eigen::VectorXd& v) {
    return Eigen::VectorXd::Constant(1, v[0] * v[0] + 1.0);
  };
  const auto jacobian = [](const Eigen::VectorXd& v) {
    return Eigen::MatrixXd::Constant(1, 1, 2.0 * v[0]);
  };
  const auto anywhere = [](const Eigen::VectorXd&) { return true; };
  bool failed = false;
  try {
    failed = !damped_newton(residual, jacobian, anywhere, Eigen::VectorXd::Constant(1, 1.0)).converged;
  } catch (const RankDeficiencyError&) {
    failed = true;
  }
  CHECK(failed);
}

TEST_CASE("rank-1 forward solve matches the scalar reduction") {
  for (double beta : {2.5, 4.0, 10.0}) {
    const ModelParams params{Eigen::VectorXd::Constant(1, beta), Eigen::MatrixXd::Identity(1, 1)};
    const SolveReport report = solve_forward_continuation(params, 3);
    REQUIRE(report.converged);
    const double lambda = rank_one_lambda(beta);
    CHECK(report.stats.lambda[0] == doctest::Approx(lambda).epsilon(1e-9));
    CHECK(report.stats.rho(0, 0) == doctest::Approx(h_func(lambda, 3) / beta).epsilon(1e-9));
  }
}

TEST_CASE("solutions tend to the noise-free values for large weights") {
  const ModelParams params = two_spikes(400.0, 200.0, 0.3);
  const SolveReport report = solve_forward(params, 3, large_beta_guess(params));
  REQUIRE(report.converged);
  CHECK(report.stats.lambda[0] == doctest::Approx(noiseless_top(400.0, 200.0, 0.3)).epsilon(1e-4));
  CHECK(report.stats.rho(0, 0) == doctest::Approx(1.0).epsilon(5e-3));
  CHECK(report.residual_norm <= 1e-10);
}

TEST_CASE("forward solutions satisfy the system with the strong component first") {
  const SolveReport report = solve_forward_continuation(two_spikes(8.0, 5.0, 0.4), 3);
  REQUIRE(report.converged);
  CHECK(system_residual(report.stats, report.params, 3).lpNorm<Eigen::Infinity>() <= 1e-10);
  CHECK(report.stats.lambda[0] > report.stats.lambda[1]);
  CHECK(report.stats.rho(0, 0) > report.stats.rho(0, 1));
  CHECK(report.stats.rho(1, 1) > report.stats.rho(1, 0));
  CHECK(report.init_source == InitSource::continuation);
  CHECK(std::abs(report.stats.eta(0, 1)) < 1.0);
}

TEST_CASE("system residual rejects out-of-domain eigenvalues and bad shapes") {
  const ModelParams params = two_spikes(8.0, 5.0, 0.4);
  LimitStats stats{Eigen::Vector2d(1.0, 5.0), Eigen::Matrix2d::Identity(), Eigen::Matrix2d::Identity()};
  CHECK_THROWS_AS(system_residual(stats, params, 3), DomainError);
  CHECK_THROWS_AS(solve_forward(params, 3, stats), DomainError);
  stats.lambda = Eigen::Vector3d(6.0, 5.0, 4.0);
  CHECK_THROWS_AS(system_residual(stats, params, 3), DimensionError);
}

TEST_CASE("pack and unpack are inverse") {
  LimitStats stats{Eigen::Vector3d(5.0, 4.0, 3.0), Eigen::Matrix3d::Random(),
                   Eigen::Matrix3d::Identity()};
  stats.eta(1, 0) = stats.eta(0, 1) = 0.2;
  stats.eta(2, 0) = stats.eta(0, 2) = -0.1;
  stats.eta(2, 1) = stats.eta(1, 2) = 0.3;
  const Eigen::VectorXd x = pack_forward(stats);
  CHECK(x.size() == system_size(3));
  const LimitStats back = unpack_forward(x, 3);
  CHECK(back.lambda == stats.lambda);
  CHECK(back.rho == stats.rho);
  CHECK(back.eta == stats.eta);
}

TEST_CASE("Jacobian agrees with central differences at rank 3") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> unit(-0.9, 0.9);
  LimitStats stats{Eigen::Vector3d(6.0, 4.0, 2.5), Eigen::Matrix3d(), Eigen::Matrix3d::Identity()};
  for (Index i = 0; i < 3; ++i)
    for (Index j = 0; j < 3; ++j) stats.rho(i, j) = unit(rng);
  stats.eta(1, 0) = stats.eta(0, 1) = unit(rng);
  stats.eta(2, 0) = stats.eta(0, 2) = unit(rng);
  stats.eta(2, 1) = stats.eta(1, 2) = unit(rng);
  Eigen::Matrix3d gram = Eigen::Matrix3d::Identity();
  gram(0, 1) = gram(1, 0) = 0.3;
  gram(1, 2) = gram(2, 1) = -0.2;
  const ModelParams params{Eigen::Vector3d(7.0, 5.0, 3.0), gram};
  for (int d : {3, 4}) {
    const Eigen::MatrixXd j = forward_jacobian(stats, params, d);
    const Eigen::VectorXd x = pack_forward(stats);
    Eigen::MatrixXd fd(j.rows(), j.cols());
    for (Index k = 0; k < x.size(); ++k) {
      Eigen::VectorXd xp = x, xm = x;
      xp[k] += 1e-6;
      xm[k] -= 1e-6;
      fd.col(k) = (system_residual(unpack_forward(xp, 3), params, d) -
                   system_residual(unpack_forward(xm, 3), params, d)) / 2e-6;
    }
    CHECK((j - fd).norm() / j.norm() < 1e-7);
  }
}

TEST_CASE("inverse solve recovers the parameters of a forward solution") {
  const ModelParams truth = two_spikes(7.0, 4.0, 0.3);
  SolveOptions tight;
  tight.tol = 1e-13;
  const SolveReport fwd = solve_forward_continuation(truth, 3, tight);
  REQUIRE(fwd.converged);
  const ObservedSpectrum obs{fwd.stats.lambda[0], fwd.stats.lambda[1], fwd.stats.eta(1, 0)};
  const InverseInit init = default_inverse_init(obs);
  const SolveReport inv = estimate_params(obs, 3, init.params, init.rho, tight);
  REQUIRE(inv.converged);
  CHECK(inv.mode == SolveMode::inverse);
  CHECK(inv.params.beta[0] == doctest::Approx(7.0).epsilon(1e-9));
  CHECK(inv.params.beta[1] == doctest::Approx(4.0).epsilon(1e-9));
  CHECK(inv.params.gram(0, 1) == doctest::Approx(0.3).epsilon(1e-9));
  CHECK((inv.stats.rho - fwd.stats.rho).lpNorm<Eigen::Infinity>() < 1e-8);
}

TEST_CASE("inverse solve refuses observations below the threshold") {
  const ObservedSpectrum obs{1.5, 5.0, 0.3};
  const InverseInit init = default_inverse_init(ObservedSpectrum{5.0, 4.0, 0.3});
  CHECK_THROWS_AS(estimate_params(obs, 3, init.params, init.rho), InfeasibleObservationError);
  CHECK_THROWS_AS(estimate_params(ObservedSpectrum{5.0, 4.0, 0.3}, 4, init.params, init.rho),
                  DomainError);
}

TEST_CASE("limit statistics from an empirical summary are symmetrized") {
  SummaryStatistics s;
  s.lambda_hat = Eigen::Vector2d(6.0, 4.0);
  s.rho_hat = Eigen::Matrix2d::Identity();
  s.eta_hat = Eigen::Matrix2d();
  s.eta_hat << 1.0 + 1e-15, 0.3, 0.3 + 1e-15, 1.0;
  const LimitStats l = LimitStats::from_summary(s);
  CHECK(l.eta(0, 1) == l.eta(1, 0));
  CHECK(l.eta(0, 0) == 1.0);
}
