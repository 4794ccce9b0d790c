#include "hotdef/deflation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <limits>
#include <optional>
#include <string>

#include "hotdef/random.hpp"

namespace hotdef {

namespace {

constexpr double kMonotoneSlack = 1e-12;
// Newton refinement is tried once the eigen residual is this small relative to
// max(1, |objective|), then again every kPolishEvery iterations while the run
// stays active.
constexpr double kPolishResidual = 1e-2;
constexpr int kPolishEvery = 100;
constexpr int kPolishNewtonSteps = 8;
constexpr double kCycleStep = 1e-3;

struct RunResult {
  Eigen::VectorXd u;
  double objective = 0.0;
  int iterations = 0;
  bool monotone = true;
};

// Lexicographic comparison, used only to break exact objective ties.
bool lexicographically_greater(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  for (Index i = 0; i < a.size(); ++i) {
    if (a[i] != b[i]) return a[i] > b[i];
  }
  return false;
}

// Newton on T . u^(d-1) = lambda u, |u| = 1, started from a power iterate.
// Accepted only at a strict local maximizer on the sphere, i.e. where
// (d-1) T . u^(d-2) - lambda I is negative definite on the tangent space.
std::optional<std::pair<Eigen::VectorXd, double>> newton_polish(const SymmetricTensord& t,
                                                                Eigen::VectorXd u, double tol) {
  const Index n = t.dim();
  const double dm1 = static_cast<double>(t.order() - 1);
  for (int k = 0; k <= kPolishNewtonSteps; ++k) {
    const Eigen::MatrixXd m = contract_matrix(t, u);
    const Eigen::VectorXd g = m * u;
    const double lambda = u.dot(g);
    const Eigen::VectorXd res = g - lambda * u;
    Eigen::MatrixXd hess = dm1 * m;
    hess.diagonal().array() -= lambda;
    if (res.norm() <= tol) {
      if (!(lambda > 0.0)) return std::nullopt;
      const Eigen::MatrixXd proj = Eigen::MatrixXd::Identity(n, n) - u * u.transpose();
      const Eigen::MatrixXd tangent = proj * hess * proj - u * u.transpose();
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(tangent, Eigen::EigenvaluesOnly);
      if (eig.eigenvalues().maxCoeff() < 0.0) return std::make_pair(std::move(u), lambda);
      return std::nullopt;
    }
    if (k == kPolishNewtonSteps) break;
    Eigen::MatrixXd jac(n + 1, n + 1);
    jac.topLeftCorner(n, n) = hess;
    jac.topRightCorner(n, 1) = -u;
    jac.bottomLeftCorner(1, n) = -u.transpose();
    jac(n, n) = 0.0;
    Eigen::VectorXd rhs(n + 1);
    rhs << -res, 0.0;
    const Eigen::VectorXd delta = jac.colPivHouseholderQr().solve(rhs);
    if (!delta.allFinite()) return std::nullopt;
    u += delta.head(n);
    const double norm = u.norm();
    if (!(norm > 0.0)) return std::nullopt;
    u /= norm;
  }
  return std::nullopt;
}

struct ActiveRun {
  int restart = 0;
  int next_polish = 0;
  double previous_objective = -std::numeric_limits<double>::infinity();
  double last_step = std::numeric_limits<double>::infinity();
  Eigen::VectorXd previous;  ///< iterate before the current one
  bool monotone = true;
};

// Runs every restart in lock step so each iteration streams the tensor once.
// Restarts are independent; batching only changes the memory access pattern.
// Returns one slot per restart, empty when that restart did not converge.
std::vector<std::optional<RunResult>> power_runs(const SymmetricTensord& t,
                                                 Eigen::MatrixXd u,
                                                 const PowerIterOptions& opts,
                                                 double& best_residual) {
  std::vector<std::optional<RunResult>> results(static_cast<std::size_t>(u.cols()));
  std::vector<ActiveRun> active(static_cast<std::size_t>(u.cols()));
  for (std::size_t c = 0; c < active.size(); ++c) active[c].restart = static_cast<int>(c);

  for (int it = 0; it <= opts.max_iters && !active.empty(); ++it) {
    const Eigen::MatrixXd v = contract_vectors(t, u);
    std::vector<ActiveRun> still_active;
    std::vector<Index> keep;
    for (Index c = 0; c < u.cols(); ++c) {
      ActiveRun& run = active[static_cast<std::size_t>(c)];
      const double objective = v.col(c).dot(u.col(c));
      const double residual = (v.col(c) - objective * u.col(c)).norm();
      best_residual = std::min(best_residual, residual);
      if (run.last_step <= opts.tol && residual <= 10.0 * opts.tol) {
        results[static_cast<std::size_t>(run.restart)] =
            RunResult{u.col(c), objective, it, run.monotone};
        continue;
      }
      if (residual <= kPolishResidual * std::max(1.0, std::abs(objective)) &&
          it >= run.next_polish) {
        run.next_polish = it + kPolishEvery;
        if (auto polished = newton_polish(t, u.col(c), opts.tol)) {
          results[static_cast<std::size_t>(run.restart)] =
              RunResult{std::move(polished->first), polished->second, it, run.monotone};
          continue;
        }
      }
      const double norm = v.col(c).norm();
      if (!(norm > 0.0) || it == opts.max_iters) continue;
      if (objective < run.previous_objective - kMonotoneSlack) run.monotone = false;
      run.previous_objective = objective;
      Eigen::VectorXd next = v.col(c) / norm;
      run.last_step = std::min((next - u.col(c)).norm(), (next + u.col(c)).norm());
      // Settled on a 2-cycle: the run can never reach a fixed point.
      if (run.previous.size() == next.size() && run.last_step > kCycleStep &&
          std::min((next - run.previous).norm(), (next + run.previous).norm()) <= opts.tol) {
        continue;
      }
      run.previous = u.col(c);
      u.col(c) = next;
      keep.push_back(c);
      still_active.push_back(run);
    }
    Eigen::MatrixXd compact(u.rows(), static_cast<Index>(keep.size()));
    for (std::size_t k = 0; k < keep.size(); ++k) compact.col(static_cast<Index>(k)) = u.col(keep[k]);
    u = std::move(compact);
    active = std::move(still_active);
  }
  return results;
}

}  // namespace

void PowerIterOptions::validate() const {
  if (!(tol > 0.0)) throw std::invalid_argument("power iteration tol must be positive");
  if (restarts < 1) throw std::invalid_argument("power iteration needs at least one restart");
  if (max_iters < 1) throw std::invalid_argument("power iteration needs max_iters >= 1");
}

RankOneFit best_rank1(const SymmetricTensord& t, const PowerIterOptions& opts) {
  opts.validate();
  if (t.order() < 2) throw DimensionError("best_rank1 needs order >= 2");
  const Index n = t.dim();

  Eigen::MatrixXd inits(n, opts.restarts);
  for (int k = 0; k < opts.restarts; ++k) {
    const CounterNormals normals(derive_seed(opts.seed, static_cast<std::uint64_t>(k)));
    for (Index i = 0; i < n; ++i) inits(i, k) = normals(static_cast<std::uint64_t>(i));
    inits.col(k).normalize();
  }

  double best_residual = std::numeric_limits<double>::infinity();
  auto runs = power_runs(t, std::move(inits), opts, best_residual);
  std::optional<RunResult> best;
  int converged = 0;
  for (auto& run : runs) {
    if (!run) continue;
    ++converged;
    if (!best || run->objective > best->objective ||
        (run->objective == best->objective && lexicographically_greater(run->u, best->u))) {
      best = std::move(run);
    }
  }
  if (!best) {
    throw ConvergenceError("power iteration: no restart converged within " +
                               std::to_string(opts.max_iters) + " iterations",
                           best_residual);
  }

  RankOneFit fit;
  fit.u = UnitVectord::normalized(best->u);
  fit.objective = contract_scalar(t, fit.u.vec());
  fit.lambda_hat = fit.objective;
  fit.eig_residual = (contract_vector(t, fit.u.vec()) - fit.lambda_hat * fit.u.vec()).norm();
  fit.matrix_residual =
      (contract_matrix(t, fit.u.vec()) * fit.u.vec() - fit.lambda_hat * fit.u.vec()).norm();
  fit.iterations = best->iterations;
  fit.converged_restarts = converged;
  fit.objective_monotone = best->monotone;
  return fit;
}

DeflationResult deflate(const SymmetricTensord& s, int r, const PowerIterOptions& opts,
                        bool retain_tensors) {
  if (r < 1) throw std::invalid_argument("deflation rank must be at least 1");
  DeflationResult result;
  SymmetricTensord current = s;
  if (retain_tensors) result.residual_tensors.push_back(current);
  for (int step = 0; step < r; ++step) {
    PowerIterOptions step_opts = opts;
    step_opts.seed = derive_seed(opts.seed, 0x5e9ULL, static_cast<std::uint64_t>(step));
    try {
      result.fits.push_back(best_rank1(current, step_opts));
    } catch (const ConvergenceError& e) {
      throw ConvergenceError("deflation step " + std::to_string(step + 1) + ": " + e.what(),
                             e.best_residual());
    }
    const RankOneFit& fit = result.fits.back();
    current = subtract_rank1(current, fit.lambda_hat, fit.u.vec());
    if (retain_tensors) result.residual_tensors.push_back(current);
  }
  return result;
}

std::pair<DeflationResult, SummaryStatistics> deflate(const SymmetricTensord& s, int r,
                                                      const GroundTruth& truth,
                                                      const PowerIterOptions& opts,
                                                      bool retain_tensors) {
  DeflationResult result = deflate(s, r, opts, retain_tensors);
  SummaryStatistics stats = summary_statistics(result.fits, truth);
  return {std::move(result), std::move(stats)};
}

SummaryStatistics summary_statistics(const std::vector<RankOneFit>& fits,
                                     const Eigen::MatrixXd& components) {
  const auto r = static_cast<Index>(fits.size());
  Eigen::MatrixXd u(components.rows(), r);
  Eigen::VectorXd lambda(r);
  for (Index i = 0; i < r; ++i) {
    if (fits[static_cast<std::size_t>(i)].u.dim() != components.rows()) {
      throw DimensionError("fit dimension does not match ground truth");
    }
    u.col(i) = fits[static_cast<std::size_t>(i)].u.vec();
    lambda[i] = fits[static_cast<std::size_t>(i)].lambda_hat;
  }
  return SummaryStatistics{lambda, u.transpose() * components, u.transpose() * u};
}

SymmetricTensord reconstruct_residual(const SymmetricTensord& s,
                                      const std::vector<RankOneFit>& fits) {
  SymmetricTensord out = s;
  for (const RankOneFit& fit : fits) out = subtract_rank1(out, fit.lambda_hat, fit.u.vec());
  return out;
}

void align_signs(SummaryStatistics& stats, int d) {
  if (d % 2 != 0) return;
  const Index r = stats.lambda_hat.size();
  for (Index i = 0; i < r && i < stats.rho_hat.cols(); ++i) {
    if (stats.rho_hat(i, i) < 0.0) {
      stats.rho_hat.row(i) *= -1.0;
      stats.eta_hat.row(i) *= -1.0;
      stats.eta_hat.col(i) *= -1.0;
    }
  }
}

bool canonicalize_tied_labels(SummaryStatistics& stats, const Eigen::VectorXd& beta,
                              const Eigen::MatrixXd& gram) {
  const Index r = beta.size();
  if (stats.rho_hat.cols() != r || gram.rows() != r || gram.cols() != r) {
    throw DimensionError("canonicalize_tied_labels: rank mismatch");
  }
  std::vector<Index> perm(static_cast<std::size_t>(r));
  std::iota(perm.begin(), perm.end(), Index{0});
  const auto is_symmetry = [&](const std::vector<Index>& p) {
    for (Index i = 0; i < r; ++i) {
      if (beta[p[static_cast<std::size_t>(i)]] != beta[i]) return false;
      for (Index j = 0; j < r; ++j) {
        if (gram(p[static_cast<std::size_t>(i)], p[static_cast<std::size_t>(j)]) != gram(i, j)) {
          return false;
        }
      }
    }
    return true;
  };
  const auto diagonal = [&](const std::vector<Index>& p) {
    std::vector<double> diag;
    for (Index i = 0; i < std::min(stats.rho_hat.rows(), r); ++i) {
      diag.push_back(stats.rho_hat(i, p[static_cast<std::size_t>(i)]));
    }
    return diag;
  };

  std::vector<Index> best = perm;
  std::vector<double> best_diag = diagonal(best);
  while (std::next_permutation(perm.begin(), perm.end())) {
    if (!is_symmetry(perm)) continue;
    std::vector<double> diag = diagonal(perm);
    if (diag > best_diag) {
      best = perm;
      best_diag = std::move(diag);
    }
  }
  if (std::is_sorted(best.begin(), best.end())) return false;
  Eigen::MatrixXd relabeled(stats.rho_hat.rows(), r);
  for (Index j = 0; j < r; ++j) relabeled.col(j) = stats.rho_hat.col(best[static_cast<std::size_t>(j)]);
  stats.rho_hat = std::move(relabeled);
  return true;
}

}  // namespace hotdef
