#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <utility>
#include <vector>

#include "hotdef/spike_model.hpp"
#include "hotdef/symtensor.hpp"

namespace hotdef {

struct PowerIterOptions {
  int max_iters = 1000;
  double tol = 1e-10;  ///< on min(|u_{k+1} - u_k|, |u_{k+1} + u_k|)
  int restarts = 10;
  std::uint64_t seed = 0;

  void validate() const;
};

/// One best rank-1 fit lambda_hat * u^{(x)d} of a symmetric tensor.
///
/// Power iteration (with a Newton finish at local maximizers) only certifies a
/// critical point: the fit is the best of the converged restarts, not a proven
/// global maximizer. `converged_restarts` and `objective_monotone` are the
/// diagnostics kept for that caveat.
struct RankOneFit {
  double lambda_hat = 0.0;
  UnitVectord u = UnitVectord::basis(1, 0);
  double objective = 0.0;        ///< T . u^d (equals lambda_hat)
  double eig_residual = 0.0;     ///< |T . u^(d-1) - lambda_hat u|
  double matrix_residual = 0.0;  ///< |(T . u^(d-2)) u - lambda_hat u|
  int iterations = 0;            ///< of the winning restart
  int converged_restarts = 0;
  bool objective_monotone = true;  ///< winning run never lost more than 1e-12
};

struct DeflationResult {
  std::vector<RankOneFit> fits;
  /// S_0, ..., S_r when retention was requested, otherwise empty.
  std::vector<SymmetricTensord> residual_tensors;
};

struct SummaryStatistics {
  Eigen::VectorXd lambda_hat;  ///< r
  Eigen::MatrixXd rho_hat;     ///< rho_hat(i, j) = <u_i, x_j>
  Eigen::MatrixXd eta_hat;     ///< eta_hat(i, j) = <u_i, u_j>
};

/// argmax_{|u| = 1} T . u^d by power iteration from `opts.restarts` random
/// starts. Throws ConvergenceError if no restart converges.
RankOneFit best_rank1(const SymmetricTensord& t, const PowerIterOptions& opts);

/// Hotelling deflation: r successive best rank-1 fits, subtracting each
/// from the running residual. Step i uses a seed derived from opts.seed and i.
DeflationResult deflate(const SymmetricTensord& s, int r, const PowerIterOptions& opts,
                        bool retain_tensors = false);

std::pair<DeflationResult, SummaryStatistics> deflate(const SymmetricTensord& s, int r,
                                                      const GroundTruth& truth,
                                                      const PowerIterOptions& opts,
                                                      bool retain_tensors = false);

SummaryStatistics summary_statistics(const std::vector<RankOneFit>& fits,
                                     const Eigen::MatrixXd& components);

inline SummaryStatistics summary_statistics(const std::vector<RankOneFit>& fits,
                                            const GroundTruth& truth) {
  return summary_statistics(fits, truth.components);
}

/// S - sum_i lambda_hat_i u_i^{(x)d}: the last deflation residual rebuilt
/// from the fits alone.
SymmetricTensord reconstruct_residual(const SymmetricTensord& s,
                                      const std::vector<RankOneFit>& fits);

/// For even d, u and -u give the same fit; flip u_i so rho_hat(i, i) >= 0.
/// Odd d is left alone since lambda_hat >= 0 already fixes the sign.
void align_signs(SummaryStatistics& stats, int d);

/// Relabels ground-truth components among the permutations that leave
/// (beta, gram) exactly unchanged, picking the one whose diagonal
/// (rho_hat(0,0), rho_hat(1,1), ...) is lexicographically largest. Only tied
/// weights admit a non-identity choice; without ties this is a no-op.
/// Returns true if the labels changed.
bool canonicalize_tied_labels(SummaryStatistics& stats, const Eigen::VectorXd& beta,
                              const Eigen::MatrixXd& gram);

}  // namespace hotdef
