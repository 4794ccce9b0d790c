#include "hotdef/spike_model.hpp"

#include <cmath>
#include <string>

#include "hotdef/random.hpp"

namespace hotdef {

namespace {

constexpr double kGramTolerance = 1e-12;

void validate_gram(const Eigen::MatrixXd& gram) {
  if (gram.rows() != gram.cols()) throw DimensionError("gram matrix must be square");
  for (Index i = 0; i < gram.rows(); ++i) {
    if (std::abs(gram(i, i) - 1.0) > kGramTolerance) {
      throw ModelError("gram matrix must have unit diagonal");
    }
    for (Index j = 0; j < i; ++j) {
      if (std::abs(gram(i, j) - gram(j, i)) > kGramTolerance) {
        throw ModelError("gram matrix must be symmetric");
      }
    }
  }
}

// Upper factor R with R^T R = gram. Cholesky when positive definite; the
// eigen route covers singular PSD matrices (e.g. alpha = 1).
Eigen::MatrixXd upper_factor(const Eigen::MatrixXd& gram) {
  Eigen::LLT<Eigen::MatrixXd> llt(gram);
  if (llt.info() == Eigen::Success) return llt.matrixU();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram);
  const double floor = -1e-12 * std::max(1.0, eig.eigenvalues().cwiseAbs().maxCoeff());
  if (eig.eigenvalues().minCoeff() < floor) {
    throw ModelError("gram matrix is not positive semidefinite");
  }
  const Eigen::VectorXd root = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return root.asDiagonal() * eig.eigenvectors().transpose();
}

}  // namespace

void SpikeParams::validate() const {
  if (n < 1) throw DimensionError("n must be positive");
  if (d < 2) throw DimensionError("order d must be at least 2");
  if (r < 1) throw DimensionError("rank r must be at least 1");
  if (r > n) throw DimensionError("rank r exceeds dimension n");
  if (beta.size() != r) throw DimensionError("beta must have r entries");
  if (gram.rows() != r || gram.cols() != r) throw DimensionError("gram must be r x r");
  for (Index i = 0; i < r; ++i) {
    if (!(beta[i] > 0.0)) throw ModelError("weights beta_i must be strictly positive");
  }
  if (!(noise_scale >= 0.0)) throw ModelError("noise_scale must be non-negative");
  validate_gram(gram);
}

Eigen::MatrixXd two_component_gram(double alpha) {
  Eigen::MatrixXd gram(2, 2);
  gram << 1.0, alpha, alpha, 1.0;
  return gram;
}

Eigen::MatrixXd correlated_unit_vectors(Index n, const Eigen::MatrixXd& gram,
                                        std::uint64_t seed) {
  validate_gram(gram);
  const Index r = gram.rows();
  if (r > n) throw DimensionError("rank r exceeds dimension n");
  const Eigen::MatrixXd factor = upper_factor(gram);

  const CounterNormals normals(seed);
  Eigen::MatrixXd gaussian(n, r);
  for (Index j = 0; j < r; ++j) {
    for (Index i = 0; i < n; ++i) {
      gaussian(i, j) = normals(static_cast<std::uint64_t>(j * n + i));
    }
  }
  const Eigen::HouseholderQR<Eigen::MatrixXd> qr(gaussian);
  const Eigen::MatrixXd frame = qr.householderQ() * Eigen::MatrixXd::Identity(n, r);
  Eigen::MatrixXd x = frame * factor;
  // Rounding only; the columns are unit norm in exact arithmetic.
  x.colwise().normalize();
  return x;
}

GroundTruth make_ground_truth(const SpikeParams& params) {
  params.validate();
  return GroundTruth{
      correlated_unit_vectors(params.n, params.gram, derive_seed(params.seed, kFrameStream)),
      params};
}

SymmetricTensord sample_noise(Index n, int d, std::uint64_t seed) {
  const CounterNormals normals(seed);
  Eigen::VectorXd raw(int_pow(n, d));
  for (Index i = 0; i < raw.size(); ++i) raw[i] = normals(static_cast<std::uint64_t>(i));
  return symmetrize(d, n, raw);
}

SymmetricTensord signal_tensor(const GroundTruth& truth) {
  const SpikeParams& p = truth.params;
  SymmetricTensord out(p.d, p.n);
  for (Index i = 0; i < p.r; ++i) {
    out += rank1<double>(p.beta[i], truth.components.col(i), p.d);
  }
  return out;
}

SymmetricTensord sample_spiked_tensor(const GroundTruth& truth) {
  const SpikeParams& p = truth.params;
  SymmetricTensord out = signal_tensor(truth);
  if (p.noise_scale != 0.0) {
    out += (p.noise_scale / std::sqrt(static_cast<double>(p.n))) *
           sample_noise(p.n, p.d, derive_seed(p.seed, kNoiseStream));
  }
  return out;
}

}  // namespace hotdef
