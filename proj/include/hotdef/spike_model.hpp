#pragma once

#include <Eigen/Dense>

#include <cstdint>

#include "hotdef/symtensor.hpp"

namespace hotdef {

/// Parameters of the spiked model sum_i beta_i x_i^{(x)d} + (noise_scale/sqrt(n)) W.
struct SpikeParams {
  Index n = 100;
  int d = 3;
  int r = 2;
  Eigen::VectorXd beta;   ///< r strictly positive weights
  Eigen::MatrixXd gram;   ///< r x r target correlations alpha_ij, unit diagonal
  double noise_scale = 1.0;
  std::uint64_t seed = 0;

  /// Throws ModelError / DimensionError on any violated invariant.
  void validate() const;
};

/// Gram matrix [[1, alpha], [alpha, 1]].
Eigen::MatrixXd two_component_gram(double alpha);

struct GroundTruth {
  Eigen::MatrixXd components;  ///< n x r, column i is x_i
  SpikeParams params;

  UnitVectord component(Index i) const {
    return UnitVectord::normalized(components.col(i));
  }
};

/// r unit vectors in R^n whose Gram matrix equals `gram` (to ~1e-12): a random
/// orthonormal n x r frame times the upper Cholesky factor of `gram`.
Eigen::MatrixXd correlated_unit_vectors(Index n, const Eigen::MatrixXd& gram,
                                        std::uint64_t seed);

/// Validates `params` and draws the components from the frame sub-stream.
GroundTruth make_ground_truth(const SpikeParams& params);

/// Symmetric Gaussian tensor: symmetrize(G) for G with i.i.d. N(0,1) entries
/// taken from a counter-based stream keyed by `seed`.
SymmetricTensord sample_noise(Index n, int d, std::uint64_t seed);

/// Signal plus scaled noise, noise drawn from the noise sub-stream of
/// truth.params.seed.
SymmetricTensord sample_spiked_tensor(const GroundTruth& truth);

/// Noise-free part sum_i beta_i x_i^{(x)d}.
SymmetricTensord signal_tensor(const GroundTruth& truth);

/// Sub-stream tags for SpikeParams::seed.
inline constexpr std::uint64_t kFrameStream = 1;
inline constexpr std::uint64_t kNoiseStream = 2;

}  // namespace hotdef
