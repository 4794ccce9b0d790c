#include "hotdef/rmt_kernel.hpp"

#include <algorithm>
#include <limits>

namespace hotdef {

double ks_distance(const std::vector<double>& sorted, const SemicircleLaw& law) {
  if (sorted.empty()) return 1.0;
  const auto count = static_cast<double>(sorted.size());
  double worst = 0.0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const double f = law.cdf(sorted[i]);
    const auto k = static_cast<double>(i);
    worst = std::max({worst, (k + 1.0) / count - f, f - k / count});
  }
  return worst;
}

double SpectrumReport::distance_to_nearest(double value) const {
  double best = std::numeric_limits<double>::infinity();
  for (double mu : eigenvalues) best = std::min(best, std::abs(mu - value));
  return best;
}

SpectrumReport matrix_spectrum(const Eigen::MatrixXd& m, double gamma, double margin) {
  if (m.rows() != m.cols()) throw DimensionError("spectrum needs a square matrix");
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(m, Eigen::EigenvaluesOnly);
  if (eig.info() != Eigen::Success) throw NumericError("symmetric eigensolver failed");

  SpectrumReport report;
  report.gamma = gamma;
  report.margin = margin;
  report.eigenvalues.assign(eig.eigenvalues().data(),
                            eig.eigenvalues().data() + eig.eigenvalues().size());
  std::sort(report.eigenvalues.begin(), report.eigenvalues.end());

  const double edge = gamma * (1.0 + margin);
  std::vector<double> bulk;
  for (double mu : report.eigenvalues) {
    (std::abs(mu) > edge ? report.outliers : bulk).push_back(mu);
  }
  report.ks_distance = ks_distance(bulk, SemicircleLaw(gamma));
  return report;
}

SpectrumReport contraction_spectrum(const SymmetricTensord& t, const Eigen::VectorXd& u,
                                    double margin) {
  if (t.order() < 2) throw DimensionError("contraction spectrum needs order >= 2");
  return matrix_spectrum(contract_matrix(t, u), gamma_d(t.order()), margin);
}

}  // namespace hotdef
