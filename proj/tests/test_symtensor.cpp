#include <doctest.h>

#include <cmath>
#include <random>

#include "hotdef/random.hpp"
#include "hotdef/symtensor.hpp"

using namespace hotdef;

namespace {

Eigen::VectorXd random_vector(Index n, std::uint64_t seed) {
  const CounterNormals normals(seed);
  Eigen::VectorXd v(n);
  for (Index i = 0; i < n; ++i) v[i] = normals(static_cast<std::uint64_t>(i));
  return v;
}

// Brute-force T . u^3 over explicit triple loops.
double cubic_form(const SymmetricTensord& t, const Eigen::VectorXd& u) {
  double sum = 0.0;
  const Index n = t.dim();
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j)
      for (Index k = 0; k < n; ++k) sum += t({i, j, k}) * u[i] * u[j] * u[k];
  return sum;
}

}  // namespace

TEST_CASE("unit vectors enforce the norm invariant") {
  const auto u = UnitVectord::normalized(Eigen::Vector3d(3.0, 0.0, 4.0));
  CHECK(u.vec().norm() == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(u[0] == doctest::Approx(0.6));
  CHECK_THROWS_AS(UnitVectord::normalized(Eigen::Vector3d::Zero()), DimensionError);
  CHECK_THROWS_AS(UnitVectord::checked(Eigen::Vector3d(1.0, 1.0, 0.0)), DimensionError);
  CHECK_NOTHROW(UnitVectord::checked(Eigen::Vector3d(0.0, 1.0, 0.0)));
  CHECK((-u).vec()[2] == doctest::Approx(-0.8));
}

TEST_CASE("rank-1 tensor entries are products of coordinates") {
  const Eigen::Vector3d u(1.0, -2.0, 0.5);
  const SymmetricTensord t = rank1(2.0, Eigen::VectorXd(u), 3);
  CHECK(t.order() == 3);
  CHECK(t.dim() == 3);
  CHECK(t.size() == 27);
  CHECK(t({0, 1, 2}) == doctest::Approx(2.0 * 1.0 * -2.0 * 0.5));
  CHECK(t({2, 0, 1}) == t({0, 1, 2}));
  CHECK(t.symmetry_defect() == 0.0);
}

TEST_CASE("contractions agree with explicit loops") {
  const Index n = 5;
  const SymmetricTensord t = symmetrize(3, n, Eigen::VectorXd(random_vector(n * n * n, 3)));
  const Eigen::VectorXd u = random_vector(n, 9);

  CHECK(contract_scalar(t, u) == doctest::Approx(cubic_form(t, u)).epsilon(1e-13));

  const Eigen::VectorXd v = contract_vector(t, u);
  const Eigen::MatrixXd m = contract_matrix(t, u);
  for (Index i = 0; i < n; ++i) {
    double vi = 0.0;
    for (Index j = 0; j < n; ++j) {
      double mij = 0.0;
      for (Index k = 0; k < n; ++k) {
        mij += t({i, j, k}) * u[k];
        vi += t({i, j, k}) * u[j] * u[k];
      }
      CHECK(m(i, j) == doctest::Approx(mij).epsilon(1e-13));
    }
    CHECK(v[i] == doctest::Approx(vi).epsilon(1e-13));
  }
  CHECK((m - m.transpose()).norm() < 1e-13);
  CHECK((m * u - v).norm() < 1e-12);

  const SymmetricTensord one_mode = contract(t, u, 1);
  CHECK(one_mode.order() == 2);
  CHECK((Eigen::Map<const Eigen::MatrixXd>(one_mode.entries().data(), n, n) - m).norm() < 1e-12);
}

TEST_CASE("batched contraction matches column-wise contraction") {
  const Index n = 6;
  const SymmetricTensord t = symmetrize(3, n, Eigen::VectorXd(random_vector(n * n * n, 5)));
  Eigen::MatrixXd u(n, 4);
  for (Index c = 0; c < 4; ++c) u.col(c) = random_vector(n, 100 + static_cast<std::uint64_t>(c));
  const Eigen::MatrixXd batched = contract_vectors(t, u);
  for (Index c = 0; c < 4; ++c) {
    CHECK((batched.col(c) - contract_vector(t, u.col(c))).norm() < 1e-12);
  }
}

TEST_CASE("symmetrize produces a symmetric tensor and fixes symmetric input") {
  for (int d : {2, 3, 4}) {
    const Index n = 4;
    const SymmetricTensord t = symmetrize(d, n, Eigen::VectorXd(random_vector(int_pow(n, d), 17)));
    CHECK(t.symmetry_defect() < 1e-15);
    const SymmetricTensord again = symmetrize(d, n, Eigen::VectorXd(t.entries()));
    CHECK((again.entries() - t.entries()).lpNorm<Eigen::Infinity>() < 1e-14);
  }
  CHECK_THROWS_AS(symmetrize(3, 3, Eigen::VectorXd(Eigen::VectorXd::Zero(26))), DimensionError);
}

TEST_CASE("symmetrized Gaussian entries have the permutation-count variance") {
  // For i.i.d. N(0,1) input, an entry with k distinct index multiplicities
  // averages d!/|orbit| copies: variance |stabilizer| / d!.
  const Index n = 3;
  const int samples = 4000;
  double distinct = 0.0, pair = 0.0, diag = 0.0;
  for (int s = 0; s < samples; ++s) {
    const SymmetricTensord t =
        symmetrize(3, n, Eigen::VectorXd(random_vector(27, 1000 + static_cast<std::uint64_t>(s))));
    distinct += t({0, 1, 2}) * t({0, 1, 2});
    pair += t({0, 0, 1}) * t({0, 0, 1});
    diag += t({2, 2, 2}) * t({2, 2, 2});
  }
  CHECK(distinct / samples == doctest::Approx(1.0 / 6.0).epsilon(0.08));
  CHECK(pair / samples == doctest::Approx(1.0 / 3.0).epsilon(0.08));
  CHECK(diag / samples == doctest::Approx(1.0).epsilon(0.08));
}

TEST_CASE("subtracting the same rank-1 term returns to zero") {
  const auto u = UnitVectord::normalized(random_vector(4, 2));
  const SymmetricTensord t = rank1(3.0, u, 3);
  const SymmetricTensord z = subtract_rank1(t, 3.0, u.vec());
  CHECK(z.entries().lpNorm<Eigen::Infinity>() < 1e-15);
  CHECK(contract_scalar(t, u.vec()) == doctest::Approx(3.0));
}

TEST_CASE("shape mismatches are rejected") {
  const SymmetricTensord a(3, 4);
  const SymmetricTensord b(3, 5);
  CHECK_THROWS_AS(a + b, DimensionError);
  CHECK_THROWS_AS(contract_vector(a, Eigen::VectorXd::Ones(5)), DimensionError);
  CHECK_THROWS_AS(contract(a, Eigen::VectorXd::Ones(4), 4), DimensionError);
  CHECK_THROWS_AS(a({0, 1}), DimensionError);
  CHECK_THROWS_AS(SymmetricTensord(3, 0), DimensionError);
}
