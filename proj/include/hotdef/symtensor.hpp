#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "hotdef/errors.hpp"

namespace hotdef {

using Index = Eigen::Index;

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

inline Index int_pow(Index base, int exponent) {
  Index result = 1;
  for (int k = 0; k < exponent; ++k) result *= base;
  return result;
}

/// Vector on the unit sphere. The norm invariant is checked at construction.
template <typename Scalar>
class UnitVector {
 public:
  static constexpr double kNormTolerance = 1e-12;

  /// Rescales `v` onto the sphere. Throws on a zero vector.
  static UnitVector normalized(Vector<Scalar> v) {
    const Scalar norm = v.norm();
    if (!(norm > Scalar(0))) throw DimensionError("cannot normalize a zero vector");
    v /= norm;
    return UnitVector(std::move(v));
  }

  /// Adopts `v` as-is; throws if its norm is not 1 within kNormTolerance.
  static UnitVector checked(Vector<Scalar> v) {
    using std::abs;
    if (abs(v.norm() - Scalar(1)) > Scalar(kNormTolerance)) {
      throw DimensionError("vector is not unit norm");
    }
    return UnitVector(std::move(v));
  }

  static UnitVector basis(Index dim, Index i) {
    return UnitVector(Vector<Scalar>::Unit(dim, i));
  }

  Index dim() const { return coords_.size(); }
  const Vector<Scalar>& vec() const { return coords_; }
  Scalar operator[](Index i) const { return coords_[i]; }
  UnitVector operator-() const { return UnitVector(-coords_); }

 private:
  explicit UnitVector(Vector<Scalar> v) : coords_(std::move(v)) {}
  Vector<Scalar> coords_;
};

/// Dense order-d symmetric tensor over R^n, stored as the full n^d array.
///
/// Linear layout is row-major in the multi-index (last index fastest), so
/// the trailing index is contiguous and a single-mode contraction is one
/// matrix-vector product over an n x n^(k-1) view. Instances are immutable;
/// every operation returns a new tensor.
template <typename Scalar>
class SymmetricTensor {
 public:
  SymmetricTensor(int order, Index dim)
      : order_(order), dim_(dim), entries_(Vector<Scalar>::Zero(int_pow(dim, order))) {
    if (order < 0) throw DimensionError("tensor order must be non-negative");
    if (dim < 1) throw DimensionError("tensor dimension must be positive");
  }

  int order() const { return order_; }
  Index dim() const { return dim_; }
  Index size() const { return entries_.size(); }
  const Vector<Scalar>& entries() const { return entries_; }

  Index linear_index(std::span<const Index> idx) const {
    if (static_cast<int>(idx.size()) != order_) {
      throw DimensionError("multi-index length does not match tensor order");
    }
    Index lin = 0;
    for (Index i : idx) lin = lin * dim_ + i;
    return lin;
  }

  Scalar operator()(std::span<const Index> idx) const {
    return entries_[linear_index(idx)];
  }
  Scalar operator()(std::initializer_list<Index> idx) const {
    return (*this)(std::span<const Index>(idx.begin(), idx.size()));
  }

  /// Largest |T[i] - T[pi(i)]| over all multi-indices and permutations.
  /// Exhaustive; intended for tests on small tensors.
  Scalar symmetry_defect() const;

  SymmetricTensor& operator+=(const SymmetricTensor& other) {
    require_same_shape(other);
    entries_ += other.entries_;
    return *this;
  }
  SymmetricTensor& operator-=(const SymmetricTensor& other) {
    require_same_shape(other);
    entries_ -= other.entries_;
    return *this;
  }
  SymmetricTensor& operator*=(Scalar a) {
    entries_ *= a;
    return *this;
  }

  friend SymmetricTensor operator+(SymmetricTensor a, const SymmetricTensor& b) { return a += b; }
  friend SymmetricTensor operator-(SymmetricTensor a, const SymmetricTensor& b) { return a -= b; }
  friend SymmetricTensor operator*(Scalar s, SymmetricTensor a) { return a *= s; }
  friend SymmetricTensor operator*(SymmetricTensor a, Scalar s) { return a *= s; }

  template <typename S>
  friend SymmetricTensor<S> rank1(S weight, const Vector<S>& u, int order);
  template <typename S>
  friend SymmetricTensor<S> symmetrize(int order, Index dim, const Vector<S>& raw);
  template <typename S, typename Derived>
  friend SymmetricTensor<S> contract(const SymmetricTensor<S>& t,
                                     const Eigen::MatrixBase<Derived>& u, int m);

 private:
  SymmetricTensor(int order, Index dim, Vector<Scalar> entries)
      : order_(order), dim_(dim), entries_(std::move(entries)) {}

  void require_same_shape(const SymmetricTensor& other) const {
    if (order_ != other.order_ || dim_ != other.dim_) {
      throw DimensionError("tensor shapes differ");
    }
  }

  int order_;
  Index dim_;
  Vector<Scalar> entries_;
};

using SymmetricTensord = SymmetricTensor<double>;
using UnitVectord = UnitVector<double>;

namespace detail {

// Applies `m` successive single-mode contractions with `u` to an order-k
// array of dimension n. Each step maps n^k entries to n^(k-1).
template <typename Scalar, typename Derived>
Vector<Scalar> contract_entries(const Vector<Scalar>& entries, Index n, int k,
                                const Eigen::MatrixBase<Derived>& u, int m) {
  Vector<Scalar> current = entries;
  for (int step = 0; step < m; ++step, --k) {
    const Index cols = int_pow(n, k - 1);
    Eigen::Map<const Matrix<Scalar>> view(current.data(), n, cols);
    Vector<Scalar> next = view.transpose() * u;
    current = std::move(next);
  }
  return current;
}

template <typename Scalar, typename Derived>
void check_contraction(const SymmetricTensor<Scalar>& t, const Eigen::MatrixBase<Derived>& u,
                       int m) {
  if (u.size() != t.dim()) throw DimensionError("vector dimension does not match tensor");
  if (m < 0 || m > t.order()) throw DimensionError("contraction count out of range");
}

// Visits every non-decreasing multi-index of length `order` over [0, dim).
template <typename Fn>
void for_each_sorted_index(int order, Index dim, Fn&& fn) {
  std::vector<Index> idx(static_cast<std::size_t>(order), 0);
  if (order == 0) {
    fn(std::span<const Index>(idx));
    return;
  }
  while (true) {
    fn(std::span<const Index>(idx));
    int pos = order - 1;
    while (pos >= 0 && idx[static_cast<std::size_t>(pos)] == dim - 1) --pos;
    if (pos < 0) return;
    const Index v = ++idx[static_cast<std::size_t>(pos)];
    for (int j = pos + 1; j < order; ++j) idx[static_cast<std::size_t>(j)] = v;
  }
}

inline Index linear(std::span<const Index> idx, Index dim) {
  Index lin = 0;
  for (Index i : idx) lin = lin * dim + i;
  return lin;
}

}  // namespace detail

/// weight * u^{(x)order}.
template <typename Scalar>
SymmetricTensor<Scalar> rank1(Scalar weight, const Vector<Scalar>& u, int order) {
  if (order < 0) throw DimensionError("tensor order must be non-negative");
  const Index n = u.size();
  Vector<Scalar> entries(1);
  entries[0] = weight;
  // Outer product built mode by mode: new[c * n + a] = old[c] * u[a].
  for (int k = 0; k < order; ++k) {
    Vector<Scalar> next(entries.size() * n);
    Eigen::Map<Matrix<Scalar>>(next.data(), n, entries.size()).noalias() =
        u * entries.transpose();
    entries = std::move(next);
  }
  return SymmetricTensor<Scalar>(order, n, std::move(entries));
}

template <typename Scalar>
SymmetricTensor<Scalar> rank1(Scalar weight, const UnitVector<Scalar>& u, int order) {
  return rank1(weight, u.vec(), order);
}

/// Averages a raw n^order array over all order! index permutations.
template <typename Scalar>
SymmetricTensor<Scalar> symmetrize(int order, Index dim, const Vector<Scalar>& raw) {
  if (raw.size() != int_pow(dim, order)) {
    throw DimensionError("raw array size is not dim^order");
  }
  std::vector<int> positions(static_cast<std::size_t>(order));
  std::iota(positions.begin(), positions.end(), 0);
  Scalar factorial(1);
  for (int k = 2; k <= order; ++k) factorial *= Scalar(k);

  Vector<Scalar> out(raw.size());
  std::vector<Index> permuted(static_cast<std::size_t>(order));
  detail::for_each_sorted_index(order, dim, [&](std::span<const Index> sorted) {
    // All order! position permutations, repeats included, so the weight of
    // each raw entry matches (1/d!) * sum over permutations.
    Scalar sum(0);
    std::vector<int> perm = positions;
    do {
      for (std::size_t j = 0; j < perm.size(); ++j) {
        permuted[j] = sorted[static_cast<std::size_t>(perm[j])];
      }
      sum += raw[detail::linear(permuted, dim)];
    } while (std::next_permutation(perm.begin(), perm.end()));
    const Scalar value = sum / factorial;
    // Scatter to every distinct arrangement of the sorted values.
    std::vector<Index> values(sorted.begin(), sorted.end());
    do {
      out[detail::linear(values, dim)] = value;
    } while (std::next_permutation(values.begin(), values.end()));
  });
  return SymmetricTensor<Scalar>(order, dim, std::move(out));
}

/// T . u^m as an order-(d - m) symmetric tensor.
template <typename Scalar, typename Derived>
SymmetricTensor<Scalar> contract(const SymmetricTensor<Scalar>& t,
                                 const Eigen::MatrixBase<Derived>& u, int m) {
  detail::check_contraction(t, u, m);
  return SymmetricTensor<Scalar>(t.order() - m, t.dim(),
                                 detail::contract_entries(t.entries(), t.dim(), t.order(), u, m));
}

/// T . u^(d-2) as a dense symmetric n x n matrix.
template <typename Scalar, typename Derived>
Matrix<Scalar> contract_matrix(const SymmetricTensor<Scalar>& t,
                               const Eigen::MatrixBase<Derived>& u) {
  if (t.order() < 2) throw DimensionError("matrix contraction needs order >= 2");
  detail::check_contraction(t, u, t.order() - 2);
  const Vector<Scalar> flat =
      detail::contract_entries(t.entries(), t.dim(), t.order(), u, t.order() - 2);
  return Eigen::Map<const Matrix<Scalar>>(flat.data(), t.dim(), t.dim());
}

/// T . u^(d-1).
template <typename Scalar, typename Derived>
Vector<Scalar> contract_vector(const SymmetricTensor<Scalar>& t,
                               const Eigen::MatrixBase<Derived>& u) {
  if (t.order() < 1) throw DimensionError("vector contraction needs order >= 1");
  detail::check_contraction(t, u, t.order() - 1);
  return detail::contract_entries(t.entries(), t.dim(), t.order(), u, t.order() - 1);
}

/// Column-wise T . u_c^(d-1) for the columns u_c of `u`. The leading
/// contraction is one matrix product, so the tensor is streamed once for all
/// columns.
template <typename Scalar>
Matrix<Scalar> contract_vectors(const SymmetricTensor<Scalar>& t, const Matrix<Scalar>& u) {
  if (t.order() < 1) throw DimensionError("vector contraction needs order >= 1");
  if (u.rows() != t.dim()) throw DimensionError("vector dimension does not match tensor");
  const Index n = t.dim();
  if (t.order() == 1) return t.entries().replicate(1, u.cols());
  Eigen::Map<const Matrix<Scalar>> view(t.entries().data(), n, int_pow(n, t.order() - 1));
  Matrix<Scalar> leading = view.transpose() * u;
  if (t.order() == 2) return leading;
  Matrix<Scalar> out(n, u.cols());
  for (Index c = 0; c < u.cols(); ++c) {
    out.col(c) = detail::contract_entries(Vector<Scalar>(leading.col(c)), n, t.order() - 1,
                                          u.col(c), t.order() - 2);
  }
  return out;
}

/// T . u^d.
template <typename Scalar, typename Derived>
Scalar contract_scalar(const SymmetricTensor<Scalar>& t, const Eigen::MatrixBase<Derived>& u) {
  detail::check_contraction(t, u, t.order());
  return detail::contract_entries(t.entries(), t.dim(), t.order(), u, t.order())[0];
}

/// T - lambda u^{(x)d}.
template <typename Scalar, typename Derived>
SymmetricTensor<Scalar> subtract_rank1(const SymmetricTensor<Scalar>& t, Scalar lambda,
                                       const Eigen::MatrixBase<Derived>& u) {
  if (u.size() != t.dim()) throw DimensionError("vector dimension does not match tensor");
  return t - rank1<Scalar>(lambda, Vector<Scalar>(u), t.order());
}

template <typename Scalar>
Scalar SymmetricTensor<Scalar>::symmetry_defect() const {
  using std::abs;
  using std::max;
  Scalar worst(0);
  std::vector<Index> idx(static_cast<std::size_t>(order_));
  std::vector<Index> perm(static_cast<std::size_t>(order_));
  for (Index lin = 0; lin < size(); ++lin) {
    Index rest = lin;
    for (int j = order_ - 1; j >= 0; --j) {
      idx[static_cast<std::size_t>(j)] = rest % dim_;
      rest /= dim_;
    }
    perm = idx;
    std::sort(perm.begin(), perm.end());
    do {
      worst = max(worst, Scalar(abs(entries_[lin] - entries_[detail::linear(perm, dim_)])));
    } while (std::next_permutation(perm.begin(), perm.end()));
  }
  return worst;
}

}  // namespace hotdef
