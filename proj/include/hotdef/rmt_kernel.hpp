#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "hotdef/errors.hpp"
#include "hotdef/symtensor.hpp"

namespace hotdef {

/// Support radius 2 / sqrt(d (d - 1)) of the limiting semicircle.
inline double gamma_d(int d) {
  if (d < 2) throw DomainError("gamma_d needs d >= 2");
  return 2.0 / std::sqrt(static_cast<double>(d) * (d - 1));
}

/// Real-axis Stieltjes transform of the semicircle of radius gamma_d,
/// g(z) = (2/gamma^2)(-z + sqrt(z^2 - gamma^2)) with the root taking the sign
/// of z, so g(z) ~ -1/z at infinity. Evaluated as -2 / (z + sign(z) sqrt(.))
/// to avoid cancellation for large |z|.
///
/// `Scalar` may be an Eigen::AutoDiffScalar; derivatives then follow the
/// closed form.
template <typename Scalar>
Scalar stieltjes_g(const Scalar& z, int d) {
  using std::abs;
  using std::sqrt;
  const double gamma = gamma_d(d);
  if (!(abs(z) >= Scalar(gamma))) {
    throw DomainError("stieltjes_g: |z| below gamma_d (inside the bulk)");
  }
  const Scalar root = sqrt(z * z - Scalar(gamma * gamma));
  return z >= Scalar(0) ? Scalar(-2.0 / (z + root)) : Scalar(-2.0 / (z - root));
}

/// g'(z) = -g(z) / (sign(z) sqrt(z^2 - gamma^2)); from differentiating the
/// quadratic (gamma^2/4) g^2 + z g + 1 = 0.
inline double stieltjes_g_derivative(double z, int d) {
  const double gamma = gamma_d(d);
  const double g = stieltjes_g(z, d);
  const double root = std::sqrt(z * z - gamma * gamma);
  if (!(root > 0.0)) throw DomainError("stieltjes_g_derivative: branch point");
  return -g / (z >= 0.0 ? root : -root);
}

namespace detail {

template <typename Scalar>
Scalar reduced_argument(const Scalar& z, int d, const char* who) {
  const double threshold = gamma_d(d) * (d - 1);
  if (!(z >= Scalar(threshold))) {
    throw DomainError(std::string(who) + ": argument below gamma_d (d - 1)");
  }
  return z / Scalar(d - 1);
}

}  // namespace detail

/// h(z) = z + g(z / (d - 1)) / d.
template <typename Scalar>
Scalar h_func(const Scalar& z, int d) {
  return z + stieltjes_g(detail::reduced_argument(z, d, "h_func"), d) / Scalar(d);
}

/// q(z) = g(z / (d - 1)) / (d (d - 1)).
template <typename Scalar>
Scalar q_func(const Scalar& z, int d) {
  return stieltjes_g(detail::reduced_argument(z, d, "q_func"), d) /
         Scalar(static_cast<double>(d) * (d - 1));
}

/// f(z) = z + g(z / (d - 1)) / (d - 1): the eigenvalue side of the first
/// block of the limiting system. The rank-2 order-3 map uses the same f.
template <typename Scalar>
Scalar f_func(const Scalar& z, int d) {
  return z + stieltjes_g(detail::reduced_argument(z, d, "f_func"), d) / Scalar(d - 1);
}

class SemicircleLaw {
 public:
  explicit SemicircleLaw(double gamma) : gamma_(gamma) {
    if (!(gamma > 0.0)) throw DomainError("semicircle radius must be positive");
  }
  static SemicircleLaw for_order(int d) { return SemicircleLaw(gamma_d(d)); }

  double gamma() const { return gamma_; }

  double density(double x) const {
    if (std::abs(x) >= gamma_) return 0.0;
    return 2.0 / (std::numbers::pi * gamma_ * gamma_) * std::sqrt(gamma_ * gamma_ - x * x);
  }

  double cdf(double x) const {
    if (x <= -gamma_) return 0.0;
    if (x >= gamma_) return 1.0;
    const double t = x / gamma_;
    return 0.5 + (t * std::sqrt(1.0 - t * t) + std::asin(t)) / std::numbers::pi;
  }

 private:
  double gamma_;
};

/// Two-sided KS distance between the empirical CDF of `sorted` (ascending)
/// and `law`.
double ks_distance(const std::vector<double>& sorted, const SemicircleLaw& law);

struct SpectrumReport {
  std::vector<double> eigenvalues;  ///< ascending
  std::vector<double> outliers;     ///< |lambda| > gamma (1 + margin)
  double ks_distance = 0.0;         ///< bulk only, against SemicircleLaw(gamma)
  double gamma = 0.0;
  double margin = 0.0;

  /// Smallest |mu - value| over the eigenvalues mu.
  double distance_to_nearest(double value) const;
};

inline constexpr double kOutlierMargin = 0.02;

/// Eigenvalues of T . u^(d-2), their outliers and the bulk KS distance to
/// the semicircle of radius gamma_d. T is used as-is: pass the already
/// 1/sqrt(n)-scaled tensor.
SpectrumReport contraction_spectrum(const SymmetricTensord& t, const Eigen::VectorXd& u,
                                    double margin = kOutlierMargin);

/// Same analysis for an explicit symmetric matrix and radius.
SpectrumReport matrix_spectrum(const Eigen::MatrixXd& m, double gamma,
                               double margin = kOutlierMargin);

}  // namespace hotdef
