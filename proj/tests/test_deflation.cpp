#include <doctest.h>

#include <cmath>
#include <numbers>

#include "hotdef/deflation.hpp"
#include "hotdef/errors.hpp"
#include "hotdef/random.hpp"
#include "hotdef/spike_model.hpp"

using namespace hotdef;

namespace {

SpikeParams params_with(double alpha, double noise_scale, std::uint64_t seed) {
  SpikeParams p;
  p.n = 40;
  p.d = 3;
  p.r = 2;
  p.beta = Eigen::Vector2d(6.0, 3.0);
  p.gram = two_component_gram(alpha);
  p.noise_scale = noise_scale;
  p.seed = seed;
  return p;
}

// max over the unit circle of T . u^3 by a dense scan plus golden-section
// refinement; independent of power iteration.
double circle_maximum(const SymmetricTensord& t) {
  const auto f = [&](double theta) {
    const Eigen::Vector2d u(std::cos(theta), std::sin(theta));
    return contract_scalar(t, u);
  };
  const int grid = 20000;
  double best_theta = 0.0, best = -INFINITY;
  for (int k = 0; k < grid; ++k) {
    const double theta = 2.0 * std::numbers::pi * k / grid;
    if (f(theta) > best) {
      best = f(theta);
      best_theta = theta;
    }
  }
  const double h = 2.0 * std::numbers::pi / grid;
  double a = best_theta - h, b = best_theta + h;
  const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
  for (int it = 0; it < 100; ++it) {
    const double c = b - phi * (b - a), d = a + phi * (b - a);
    if (f(c) > f(d)) b = d;
    else a = c;
  }
  return f(0.5 * (a + b));
}

}  // namespace

TEST_CASE("power iteration options are validated") {
  PowerIterOptions opts;
  CHECK_NOTHROW(opts.validate());
  opts.tol = 0.0;
  CHECK_THROWS(opts.validate());
  opts = {};
  opts.restarts = 0;
  CHECK_THROWS(opts.validate());
  opts = {};
  opts.max_iters = 0;
  CHECK_THROWS(opts.validate());
}

TEST_CASE("best rank-1 fit of a 2-D tensor matches a circle search") {
  for (std::uint64_t seed : {1U, 2U, 3U, 4U, 5U}) {
    const SymmetricTensord t = sample_noise(2, 3, seed);
    PowerIterOptions opts;
    opts.seed = seed;
    opts.restarts = 20;
    const RankOneFit fit = best_rank1(t, opts);
    CHECK(fit.lambda_hat == doctest::Approx(circle_maximum(t)).epsilon(1e-9));
    CHECK(fit.eig_residual < 1e-8);
  }
}

TEST_CASE("fits satisfy both eigen-equation forms") {
  const GroundTruth truth = make_ground_truth(params_with(0.4, 1.0, 8));
  const SymmetricTensord s = sample_spiked_tensor(truth);
  PowerIterOptions opts;
  opts.seed = 21;
  const RankOneFit fit = best_rank1(s, opts);
  const Eigen::VectorXd u = fit.u.vec();
  CHECK(u.norm() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK((contract_vector(s, u) - fit.lambda_hat * u).norm() < 1e-8);
  CHECK((contract_matrix(s, u) * u - fit.lambda_hat * u).norm() < 1e-8);
  CHECK(fit.objective == doctest::Approx(fit.lambda_hat));
  CHECK(fit.lambda_hat > 0.0);
  CHECK(fit.converged_restarts >= 1);
}

TEST_CASE("each deflation fit is a local maximum along random great circles") {
  const GroundTruth truth = make_ground_truth(params_with(0.4, 1.0, 11));
  PowerIterOptions opts;
  opts.seed = 4;
  const DeflationResult result = deflate(sample_spiked_tensor(truth), 2, opts, true);
  const CounterNormals normals(77);
  for (std::size_t step = 0; step < 2; ++step) {
    const SymmetricTensord& t = result.residual_tensors[step];
    const Eigen::VectorXd u = result.fits[step].u.vec();
    const double top = contract_scalar(t, u);
    for (std::uint64_t k = 0; k < 50; ++k) {
      Eigen::VectorXd v(u.size());
      for (Index i = 0; i < v.size(); ++i) v[i] = normals(k * 1000 + static_cast<std::uint64_t>(i));
      v -= v.dot(u) * u;
      v.normalize();
      for (double angle : {1e-2, -1e-2}) {
        CHECK(contract_scalar(t, std::cos(angle) * u + std::sin(angle) * v) < top);
      }
    }
  }
}

TEST_CASE("noiseless orthogonal spikes are recovered exactly") {
  const GroundTruth truth = make_ground_truth(params_with(0.0, 0.0, 3));
  PowerIterOptions opts;
  opts.seed = 2;
  const auto [result, stats] = deflate(sample_spiked_tensor(truth), 2, truth, opts);
  CHECK(stats.lambda_hat[0] == doctest::Approx(6.0).epsilon(1e-10));
  CHECK(stats.lambda_hat[1] == doctest::Approx(3.0).epsilon(1e-10));
  CHECK(std::abs(stats.rho_hat(0, 0)) == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(std::abs(stats.rho_hat(1, 1)) == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(std::abs(stats.eta_hat(0, 1)) < 1e-8);
  CHECK(result.fits.size() == 2);
}

TEST_CASE("deflation keeps the residual identity and the retained tensors") {
  const GroundTruth truth = make_ground_truth(params_with(0.4, 1.0, 5));
  const SymmetricTensord s = sample_spiked_tensor(truth);
  PowerIterOptions opts;
  opts.seed = 9;
  const DeflationResult result = deflate(s, 2, opts, true);
  REQUIRE(result.residual_tensors.size() == 3);
  CHECK(result.residual_tensors.front().entries() == s.entries());
  const SymmetricTensord step1 =
      subtract_rank1(s, result.fits[0].lambda_hat, result.fits[0].u.vec());
  CHECK((step1.entries() - result.residual_tensors[1].entries()).lpNorm<Eigen::Infinity>() < 1e-14);
  CHECK((reconstruct_residual(s, result.fits).entries() - result.residual_tensors[2].entries())
            .lpNorm<Eigen::Infinity>() < 1e-10);
  CHECK(deflate(s, 2, opts).residual_tensors.empty());
}

TEST_CASE("deflation is deterministic in the seed") {
  const GroundTruth truth = make_ground_truth(params_with(0.4, 1.0, 6));
  const SymmetricTensord s = sample_spiked_tensor(truth);
  PowerIterOptions opts;
  opts.seed = 33;
  const DeflationResult a = deflate(s, 2, opts);
  const DeflationResult b = deflate(s, 2, opts);
  for (int i = 0; i < 2; ++i) {
    CHECK(a.fits[static_cast<std::size_t>(i)].u.vec() == b.fits[static_cast<std::size_t>(i)].u.vec());
  }
}

TEST_CASE("an unconverged search reports its step") {
  const SymmetricTensord t = sample_noise(20, 3, 4);
  PowerIterOptions opts;
  opts.max_iters = 1;
  opts.restarts = 2;
  try {
    deflate(t, 2, opts);
    FAIL("expected ConvergenceError");
  } catch (const ConvergenceError& e) {
    CHECK(std::string(e.what()).find("deflation step 1") != std::string::npos);
  }
}

TEST_CASE("summary statistics are inner products with the components") {
  const GroundTruth truth = make_ground_truth(params_with(0.4, 1.0, 7));
  PowerIterOptions opts;
  opts.seed = 1;
  const auto [result, stats] = deflate(sample_spiked_tensor(truth), 2, truth, opts);
  for (Index i = 0; i < 2; ++i) {
    CHECK(stats.lambda_hat[i] == result.fits[static_cast<std::size_t>(i)].lambda_hat);
    for (Index j = 0; j < 2; ++j) {
      const double rho = result.fits[static_cast<std::size_t>(i)].u.vec().dot(truth.components.col(j));
      CHECK(stats.rho_hat(i, j) == doctest::Approx(rho));
      CHECK(std::abs(stats.rho_hat(i, j)) <= 1.0 + 1e-12);
    }
  }
  CHECK(stats.eta_hat(0, 0) == doctest::Approx(1.0));
  CHECK(stats.eta_hat(0, 1) == doctest::Approx(stats.eta_hat(1, 0)));
}

TEST_CASE("sign alignment applies to even orders only") {
  SummaryStatistics stats;
  stats.lambda_hat = Eigen::Vector2d(3.0, 2.0);
  stats.rho_hat = Eigen::Matrix2d();
  stats.rho_hat << -0.9, 0.1, 0.2, 0.8;
  stats.eta_hat = two_component_gram(0.3);

  SummaryStatistics odd = stats;
  align_signs(odd, 3);
  CHECK(odd.rho_hat == stats.rho_hat);

  SummaryStatistics even = stats;
  align_signs(even, 4);
  CHECK(even.rho_hat(0, 0) == doctest::Approx(0.9));
  CHECK(even.rho_hat(0, 1) == doctest::Approx(-0.1));
  CHECK(even.rho_hat(1, 1) == doctest::Approx(0.8));
  CHECK(even.eta_hat(0, 1) == doctest::Approx(-0.3));
  CHECK(even.eta_hat(1, 0) == doctest::Approx(-0.3));
}

TEST_CASE("tied weights get a canonical component labelling") {
  SummaryStatistics stats;
  stats.lambda_hat = Eigen::Vector2d(6.5, 4.0);
  stats.rho_hat = Eigen::Matrix2d();
  stats.rho_hat << 0.4, 0.95, 0.9, 0.3;
  stats.eta_hat = two_component_gram(0.2);
  const Eigen::MatrixXd gram = two_component_gram(0.4);

  SummaryStatistics untied = stats;
  CHECK_FALSE(canonicalize_tied_labels(untied, Eigen::Vector2d(5.0, 6.0), gram));
  CHECK(untied.rho_hat == stats.rho_hat);

  SummaryStatistics tied = stats;
  CHECK(canonicalize_tied_labels(tied, Eigen::Vector2d(5.0, 5.0), gram));
  CHECK(tied.rho_hat(0, 0) == doctest::Approx(0.95));
  CHECK(tied.rho_hat(0, 1) == doctest::Approx(0.4));
  CHECK(tied.rho_hat(1, 0) == doctest::Approx(0.3));
  CHECK(tied.rho_hat(1, 1) == doctest::Approx(0.9));
}
