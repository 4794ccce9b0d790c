#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "hotdef/errors.hpp"
#include "hotdef/random.hpp"
#include "hotdef/rmt_kernel.hpp"
#include "hotdef/spike_model.hpp"

using namespace hotdef;

namespace {

// Composite Simpson in x = gamma sin(theta); independent of the closed forms.
double semicircle_integral(double gamma, auto&& fn) {
  const int panels = 4000;
  const double a = -std::numbers::pi / 2.0, b = std::numbers::pi / 2.0;
  const double h = (b - a) / panels;
  double sum = 0.0;
  for (int k = 0; k <= panels; ++k) {
    const double theta = a + k * h;
    const double c = std::cos(theta);
    const double w = (k == 0 || k == panels) ? 1.0 : (k % 2 == 1 ? 4.0 : 2.0);
    // density(x) dx = 2/(pi gamma^2) * gamma cos * gamma cos dtheta
    sum += w * 2.0 / std::numbers::pi * c * c * fn(gamma * std::sin(theta));
  }
  return sum * h / 3.0;
}

}  // namespace

TEST_CASE("semicircle radius per order") {
  CHECK(gamma_d(3) == doctest::Approx(2.0 / std::sqrt(6.0)));
  CHECK(gamma_d(2) == doctest::Approx(std::sqrt(2.0)));
  CHECK_THROWS(gamma_d(1));
}

TEST_CASE("g solves its quadratic and matches the Stieltjes integral") {
  for (int d : {2, 3, 4}) {
    const double gamma = gamma_d(d);
    for (double z : {gamma * 1.0001, gamma * 1.5, 3.0, 25.0}) {
      const double g = stieltjes_g(z, d);
      CHECK(std::abs(gamma * gamma / 4.0 * g * g + z * g + 1.0) < 1e-13);
      const double integral = semicircle_integral(gamma, [z](double x) { return 1.0 / (x - z); });
      CHECK(g == doctest::Approx(integral).epsilon(1e-8));
      CHECK(g < 0.0);
    }
    CHECK(stieltjes_g(-3.0, d) == doctest::Approx(-stieltjes_g(3.0, d)));
    CHECK_THROWS_AS(stieltjes_g(0.5 * gamma, d), DomainError);
  }
}

TEST_CASE("g decays like -1/z") {
  CHECK(stieltjes_g(1e6, 3) * 1e6 == doctest::Approx(-1.0).epsilon(1e-9));
}

TEST_CASE("g' matches a central difference") {
  for (double z : {1.0, 2.0, 5.0}) {
    const double h = 1e-6;
    const double fd = (stieltjes_g(z + h, 3) - stieltjes_g(z - h, 3)) / (2.0 * h);
    CHECK(stieltjes_g_derivative(z, 3) == doctest::Approx(fd).epsilon(1e-7));
  }
}

TEST_CASE("h, q and f follow from g at the reduced argument") {
  const int d = 3;
  const double z = 2.5;
  const double g = stieltjes_g(z / (d - 1), d);
  CHECK(h_func(z, d) == doctest::Approx(z + g / d));
  CHECK(q_func(z, d) == doctest::Approx(g / (d * (d - 1))));
  CHECK(f_func(z, d) == doctest::Approx(z + g / (d - 1)));
  // For large z, f(z) -> z - 1/z.
  CHECK(f_func(1e4, d) == doctest::Approx(1e4 - 1e-4).epsilon(1e-14));
  CHECK_THROWS_AS(f_func(0.5, d), DomainError);
  CHECK_THROWS_AS(h_func(0.5, d), DomainError);
}

TEST_CASE("semicircle density and CDF are consistent") {
  const SemicircleLaw law = SemicircleLaw::for_order(3);
  CHECK(semicircle_integral(law.gamma(), [](double) { return 1.0; }) ==
        doctest::Approx(1.0).epsilon(1e-10));
  CHECK(law.cdf(0.0) == doctest::Approx(0.5));
  CHECK(law.cdf(-law.gamma()) == 0.0);
  CHECK(law.cdf(2.0 * law.gamma()) == 1.0);
  const double x = 0.3 * law.gamma();
  const double h = 1e-6;
  CHECK((law.cdf(x + h) - law.cdf(x - h)) / (2.0 * h) == doctest::Approx(law.density(x)).epsilon(1e-7));
  CHECK(law.density(1.1 * law.gamma()) == 0.0);
  CHECK_THROWS_AS(SemicircleLaw(0.0), DomainError);
}

TEST_CASE("KS distance against a brute-force sup over the sample") {
  const SemicircleLaw law(1.0);
  std::vector<double> sample{-0.9, -0.2, 0.0, 0.1, 0.7};
  double expected = 0.0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const double f = law.cdf(sample[i]);
    expected = std::max({expected, std::abs(f - static_cast<double>(i) / 5.0),
                         std::abs(f - static_cast<double>(i + 1) / 5.0)});
  }
  CHECK(ks_distance(sample, law) == doctest::Approx(expected));
  CHECK(ks_distance({2.0}, law) == doctest::Approx(1.0));
}

TEST_CASE("noise contraction spectrum follows the semicircle") {
  const Index n = 120;
  const SymmetricTensord w = (1.0 / std::sqrt(static_cast<double>(n))) * sample_noise(n, 3, 42);
  const CounterNormals normals(43);
  Eigen::VectorXd u(n);
  for (Index i = 0; i < n; ++i) u[i] = normals(static_cast<std::uint64_t>(i));
  u.normalize();
  const SpectrumReport report = contraction_spectrum(w, u);
  CHECK(report.eigenvalues.size() == static_cast<std::size_t>(n));
  CHECK(std::is_sorted(report.eigenvalues.begin(), report.eigenvalues.end()));
  CHECK(report.ks_distance < 0.08);
  CHECK(report.gamma == doctest::Approx(gamma_d(3)));
}

TEST_CASE("outliers are split from the bulk") {
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(3, 3);
  m.diagonal() << -0.5, 0.2, 3.0;
  const SpectrumReport report = matrix_spectrum(m, 1.0);
  REQUIRE(report.outliers.size() == 1);
  CHECK(report.outliers[0] == doctest::Approx(3.0));
  CHECK(report.distance_to_nearest(2.9) == doctest::Approx(0.1));
  CHECK_THROWS(matrix_spectrum(Eigen::MatrixXd::Zero(2, 3), 1.0));
}
