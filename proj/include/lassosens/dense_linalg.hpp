#pragma once

// Dense real linear algebra shared by the solver, the sensitivity analysis
// and the experiment pipeline. Thin wrappers over Eigen that pin down the
// numerical-rank convention used everywhere else.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "lassosens/errors.hpp"

namespace lassosens {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// A singular value sigma counts as zero when sigma <= kRankTol * sigma_max.
inline constexpr double kRankTol = 1e-10;
/// Allowed relative deviation from unit norm for coherence-type inputs.
inline constexpr double kColNormTol = 1e-8;

/// Sorted, duplicate-free set of column indices.
class IndexSet {
 public:
  IndexSet() = default;

  explicit IndexSet(std::vector<Index> indices) : idx_(std::move(indices)) {
    for (std::size_t k = 0; k < idx_.size(); ++k) {
      if (idx_[k] < 0) throw InputError("IndexSet: negative index");
      if (k > 0 && idx_[k] <= idx_[k - 1])
        throw InputError("IndexSet: indices must be strictly increasing");
    }
  }

  IndexSet(std::initializer_list<Index> indices)
      : IndexSet(std::vector<Index>(indices)) {}

  static IndexSet all(Index n) {
    std::vector<Index> v(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i) v[static_cast<std::size_t>(i)] = i;
    return IndexSet(std::move(v));
  }

  /// {0..n-1} minus this set.
  IndexSet complement(Index n) const {
    std::vector<Index> out;
    std::size_t k = 0;
    for (Index i = 0; i < n; ++i) {
      if (k < idx_.size() && idx_[k] == i) {
        ++k;
        continue;
      }
      out.push_back(i);
    }
    return IndexSet(std::move(out));
  }

  /// Elements of this set that are not in `other`.
  IndexSet minus(const IndexSet& other) const {
    std::vector<Index> out;
    std::set_difference(idx_.begin(), idx_.end(), other.idx_.begin(),
                        other.idx_.end(), std::back_inserter(out));
    return IndexSet(std::move(out));
  }

  IndexSet united(const IndexSet& other) const {
    std::vector<Index> out;
    std::set_union(idx_.begin(), idx_.end(), other.idx_.begin(), other.idx_.end(),
                   std::back_inserter(out));
    return IndexSet(std::move(out));
  }

  bool contains(Index i) const {
    return std::binary_search(idx_.begin(), idx_.end(), i);
  }

  bool is_subset_of(const IndexSet& other) const {
    return std::includes(other.idx_.begin(), other.idx_.end(), idx_.begin(),
                         idx_.end());
  }

  std::size_t size() const noexcept { return idx_.size(); }
  bool empty() const noexcept { return idx_.empty(); }
  Index operator[](std::size_t k) const { return idx_[k]; }
  auto begin() const noexcept { return idx_.begin(); }
  auto end() const noexcept { return idx_.end(); }
  const std::vector<Index>& indices() const noexcept { return idx_; }

  friend bool operator==(const IndexSet&, const IndexSet&) = default;

 private:
  std::vector<Index> idx_;
};

inline bool all_finite(const Matrix& m) { return m.allFinite(); }

inline void require_finite(const Matrix& m, const char* what) {
  if (!m.allFinite())
    throw InputError(std::string(what) + ": entries must be finite");
}

/// The m x |S| matrix of the columns of `m` listed in `s`.
inline Matrix columns(const Matrix& m, const IndexSet& s) {
  Matrix out(m.rows(), static_cast<Index>(s.size()));
  for (std::size_t j = 0; j < s.size(); ++j) {
    const Index c = s[j];
    if (c >= m.cols())
      throw InputError("columns: index " + std::to_string(c) +
                       " out of range for " + std::to_string(m.cols()) +
                       " columns");
    out.col(static_cast<Index>(j)) = m.col(c);
  }
  return out;
}

/// Entries of `v` listed in `s`.
inline Vector entries(const Vector& v, const IndexSet& s) {
  Vector out(static_cast<Index>(s.size()));
  for (std::size_t j = 0; j < s.size(); ++j) {
    if (s[j] >= v.size()) throw InputError("entries: index out of range");
    out(static_cast<Index>(j)) = v(s[j]);
  }
  return out;
}

/// Scatter `w` (indexed by `s`) into a zero vector of length n.
inline Vector scatter(const Vector& w, const IndexSet& s, Index n) {
  Vector out = Vector::Zero(n);
  for (std::size_t j = 0; j < s.size(); ++j) out(s[j]) = w(static_cast<Index>(j));
  return out;
}

/// Singular values in decreasing order (min(rows, cols) of them).
inline Vector singular_values(const Matrix& m) {
  if (m.size() == 0) return Vector();
  Eigen::JacobiSVD<Matrix> svd(m);
  return svd.singularValues();
}

inline std::size_t numerical_rank(const Matrix& m) {
  const Vector sv = singular_values(m);
  if (sv.size() == 0 || sv(0) == 0.0) return 0;
  const double cut = kRankTol * sv(0);
  std::size_t r = 0;
  for (Index k = 0; k < sv.size(); ++k)
    if (sv(k) > cut) ++r;
  return r;
}

/// Zero-column matrices count as having full column rank.
inline bool has_full_column_rank(const Matrix& m) {
  return numerical_rank(m) == static_cast<std::size_t>(m.cols());
}

struct SvdExtremes {
  double sigma_min_pos = 0.0;
  double sigma_max = 0.0;
};

/// Smallest positive and largest singular value. Singular values at or
/// below kRankTol * sigma_max are not counted as positive.
inline SvdExtremes svd_extremes(const Matrix& m) {
  require_finite(m, "svd_extremes");
  const Vector sv = singular_values(m);
  if (sv.size() == 0 || sv(0) == 0.0)
    throw DegenerateInputError("svd_extremes: matrix is zero");
  SvdExtremes out;
  out.sigma_max = sv(0);
  out.sigma_min_pos = sv(0);
  for (Index k = 0; k < sv.size(); ++k)
    if (sv(k) > kRankTol * sv(0)) out.sigma_min_pos = sv(k);
  return out;
}

/// Solves (A_K^T A_K) w = v through the SVD of A_K, never forming the Gram
/// matrix: w = V diag(sigma^-2) V^T v.
inline Vector gram_solve(const Matrix& a_k, const Vector& v) {
  if (v.size() != a_k.cols())
    throw InputError("gram_solve: vector length must equal column count");
  if (a_k.cols() == 0) return Vector();
  Eigen::JacobiSVD<Matrix> svd(a_k, Eigen::ComputeThinV);
  const Vector& sv = svd.singularValues();
  std::size_t rank = 0;
  if (sv(0) > 0.0)
    for (Index k = 0; k < sv.size(); ++k)
      if (sv(k) > kRankTol * sv(0)) ++rank;
  if (rank < static_cast<std::size_t>(a_k.cols()))
    throw RankDeficiencyError("gram_solve: A_K is rank deficient", rank,
                              static_cast<std::size_t>(a_k.cols()));
  const Matrix& vmat = svd.matrixV();
  Vector coeff = vmat.transpose() * v;
  coeff.array() /= sv.array().square();
  return vmat * coeff;
}

/// Minimum-norm least-squares solution of A x ~ b.
inline Vector least_squares(const Matrix& a, const Vector& b) {
  if (b.size() != a.rows())
    throw InputError("least_squares: dimension mismatch");
  if (a.size() == 0) return Vector::Zero(a.cols());
  Eigen::JacobiSVD<Matrix> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  svd.setThreshold(kRankTol);
  return svd.solve(b);
}

/// Orthonormal basis (columns) of range(A), using the numerical rank.
inline Matrix range_basis(const Matrix& a) {
  if (a.size() == 0) return Matrix(a.rows(), 0);
  Eigen::JacobiSVD<Matrix> svd(a, Eigen::ComputeFullU);
  const Vector& sv = svd.singularValues();
  Index r = 0;
  if (sv(0) > 0.0)
    for (Index k = 0; k < sv.size(); ++k)
      if (sv(k) > kRankTol * sv(0)) ++r;
  return svd.matrixU().leftCols(r);
}

/// Orthonormal basis of the null space of A^T (the orthogonal complement of
/// range(A) in R^m).
inline Matrix left_null_space(const Matrix& a) {
  if (a.cols() == 0) return Matrix::Identity(a.rows(), a.rows());
  Eigen::JacobiSVD<Matrix> svd(a, Eigen::ComputeFullU);
  const Vector& sv = svd.singularValues();
  Index r = 0;
  if (sv(0) > 0.0)
    for (Index k = 0; k < sv.size(); ++k)
      if (sv(k) > kRankTol * sv(0)) ++r;
  return svd.matrixU().rightCols(a.rows() - r);
}

/// Euclidean projection of b onto range(A).
inline Vector project_range(const Matrix& a, const Vector& b) {
  if (b.size() != a.rows())
    throw InputError("project_range: dimension mismatch");
  const Matrix u = range_basis(a);
  if (u.cols() == 0) return Vector::Zero(b.size());
  return u * (u.transpose() * b);
}

/// Throws unless every column has unit Euclidean norm within kColNormTol.
inline void require_unit_columns(const Matrix& a, const char* what) {
  for (Index j = 0; j < a.cols(); ++j) {
    const double nrm = a.col(j).norm();
    if (!(std::abs(nrm - 1.0) <= kColNormTol))
      throw InputError(std::string(what) + ": column " + std::to_string(j) +
                       " has norm " + std::to_string(nrm) + ", expected 1");
  }
}

/// Mutual coherence max_{i != j} |<A_i, A_j>| of a unit-column matrix.
inline double coherence(const Matrix& a) {
  require_finite(a, "coherence");
  require_unit_columns(a, "coherence");
  const Matrix g = a.transpose() * a;
  double mu = 0.0;
  for (Index j = 0; j < g.cols(); ++j)
    for (Index i = 0; i < j; ++i) mu = std::max(mu, std::abs(g(i, j)));
  return mu;
}

/// Copy of `a` with every nonzero column scaled to unit norm.
inline Matrix normalize_columns(Matrix a) {
  for (Index j = 0; j < a.cols(); ++j) {
    const double nrm = a.col(j).norm();
    if (nrm > 0.0) a.col(j) /= nrm;
  }
  return a;
}

}  // namespace lassosens
