#pragma once

// Dense tableau simplex for
//     minimize c^T v  subject to  G v <= h,  v >= 0,   with h >= 0,
// so the slack basis at v = 0 is feasible and no phase one is needed.
// Bland's rule (lowest index enters, lowest basic index leaves on ties)
// guarantees termination on degenerate problems.

#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "lassosens/dense_linalg.hpp"
#include "lassosens/errors.hpp"

namespace lassosens::lp {

struct Result {
  Vector v;
  double value = 0.0;
  int pivots = 0;
};

inline Result minimize_from_origin(const Vector& c, const Matrix& g, const Vector& h,
                                   double pivot_tol = 1e-12, int max_pivots = 100000) {
  const Index rows = g.rows();
  const Index nvar = g.cols();
  if (c.size() != nvar || h.size() != rows)
    throw InputError("simplex: dimension mismatch");
  for (Index i = 0; i < rows; ++i)
    if (h(i) < 0.0) throw InputError("simplex: right-hand side must be >= 0");

  // Columns: [decision vars | slacks | rhs].
  const Index ncol = nvar + rows;
  Matrix tab = Matrix::Zero(rows, ncol + 1);
  tab.leftCols(nvar) = g;
  tab.block(0, nvar, rows, rows).setIdentity();
  tab.col(ncol) = h;
  Vector cost = Vector::Zero(ncol + 1);  // reduced costs; last entry = -objective
  cost.head(nvar) = c;
  std::vector<Index> basis(static_cast<std::size_t>(rows));
  for (Index i = 0; i < rows; ++i) basis[static_cast<std::size_t>(i)] = nvar + i;

  int pivots = 0;
  for (;;) {
    Index enter = -1;
    for (Index j = 0; j < ncol; ++j)
      if (cost(j) < -pivot_tol) {
        enter = j;
        break;
      }
    if (enter < 0) break;

    Index leave = -1;
    double best_ratio = std::numeric_limits<double>::infinity();
    for (Index i = 0; i < rows; ++i) {
      const double a = tab(i, enter);
      if (a <= pivot_tol) continue;
      const double ratio = tab(i, ncol) / a;
      if (ratio < best_ratio - 1e-15 ||
          (std::abs(ratio - best_ratio) <= 1e-15 && leave >= 0 &&
           basis[static_cast<std::size_t>(i)] < basis[static_cast<std::size_t>(leave)])) {
        best_ratio = ratio;
        leave = i;
      }
    }
    if (leave < 0) throw Error("simplex: objective unbounded below");
    if (++pivots > max_pivots) throw Error("simplex: pivot limit exceeded");

    tab.row(leave) /= tab(leave, enter);
    for (Index i = 0; i < rows; ++i) {
      if (i == leave) continue;
      const double f = tab(i, enter);
      if (f != 0.0) tab.row(i) -= f * tab.row(leave);
    }
    const double f = cost(enter);
    cost -= f * tab.row(leave).transpose();
    basis[static_cast<std::size_t>(leave)] = enter;
  }

  Result res;
  res.v = Vector::Zero(nvar);
  for (Index i = 0; i < rows; ++i) {
    const Index bvar = basis[static_cast<std::size_t>(i)];
    if (bvar < nvar) res.v(bvar) = tab(i, ncol);
  }
  res.value = c.dot(res.v);
  res.pivots = pivots;
  return res;
}

/// Minimizes ||C z + d||_inf over free z. Returns the optimal value and z.
struct MinimaxResult {
  Vector z;
  double value = 0.0;
};

inline MinimaxResult minimize_inf_norm(const Matrix& cm, const Vector& d) {
  const Index p = cm.rows();
  const Index k = cm.cols();
  if (d.size() != p) throw InputError("minimize_inf_norm: dimension mismatch");
  MinimaxResult out;
  out.z = Vector::Zero(k);
  if (p == 0) return out;
  const double t0 = d.lpNorm<Eigen::Infinity>();
  if (k == 0) {
    out.value = t0;
    return out;
  }
  // t = t0 + tau,  z = zp - zm,  tau = tp - tm:
  //    C z - tau <= t0 - d,   -C z - tau <= t0 + d.
  const Index nvar = 2 * k + 2;
  Matrix g(2 * p, nvar);
  g.block(0, 0, p, k) = cm;
  g.block(0, k, p, k) = -cm;
  g.block(p, 0, p, k) = -cm;
  g.block(p, k, p, k) = cm;
  g.col(2 * k).setConstant(-1.0);
  g.col(2 * k + 1).setConstant(1.0);
  Vector h(2 * p);
  h.head(p) = (t0 - d.array()).max(0.0).matrix();
  h.tail(p) = (t0 + d.array()).max(0.0).matrix();
  Vector c = Vector::Zero(nvar);
  c(2 * k) = 1.0;
  c(2 * k + 1) = -1.0;
  const Result r = minimize_from_origin(c, g, h);
  out.z = r.v.head(k) - r.v.segment(k, k);
  // Report the attained norm rather than the LP value to absorb round-off.
  out.value = (cm * out.z + d).lpNorm<Eigen::Infinity>();
  return out;
}

}  // namespace lassosens::lp
