#pragma once

// Variational sensitivity of the LASSO solution map at a computed solution:
// assumption tiers, value-function gradient, directional and full
// derivatives in (b, lambda), and local Lipschitz-modulus bounds.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "lassosens/dense_linalg.hpp"
#include "lassosens/errors.hpp"
#include "lassosens/lasso_solver.hpp"
#include "lassosens/simplex.hpp"

namespace lassosens {

enum class WeakVerdict { holds, fails, boundary_inconclusive };

inline const char* to_string(WeakVerdict v) {
  switch (v) {
    case WeakVerdict::holds: return "holds";
    case WeakVerdict::fails: return "fails";
    case WeakVerdict::boundary_inconclusive: return "boundary_inconclusive";
  }
  return "unknown";
}

struct AssumptionReport {
  WeakVerdict weak = WeakVerdict::fails;
  bool intermediate = false;
  bool strong = false;
  /// Dual certificate y with A_I^T y = sgn(x_I) minimizing ||A_{I^C}^T y||_inf;
  /// absent when A_I is rank deficient.
  std::optional<Vector> weak_certificate;
  /// ||A_{I^C}^T y||_inf at the certificate (the LP optimum).
  double weak_value = std::numeric_limits<double>::infinity();
  /// lambda - ||A_{I^C}^T (b - A_I x_I)||_inf.
  double strong_margin = 0.0;
  std::size_t rank_I = 0;
  std::size_t rank_J = 0;
  IndexSet support;
  IndexSet equicorrelation;
};

struct DirectionalDerivativeResult {
  Vector w;
  IndexSet k;
};

enum class BoundMode { strong, intermediate };

inline const char* to_string(BoundMode m) {
  return m == BoundMode::strong ? "strong" : "intermediate";
}

struct SensitivityReport {
  AssumptionReport assumptions;
  BoundMode mode = BoundMode::intermediate;
  double lipschitz_bl = 0.0;      ///< modulus of (b, lambda) -> x
  double lipschitz_lambda = 0.0;  ///< modulus of lambda -> x
  double lipschitz_A = 0.0;       ///< modulus of (A, b, lambda) -> x
  double sigma_min_I = 0.0;
  double sigma_max_I = 0.0;
  double sigma_min_J = 0.0;
  double sigma_max_J = 0.0;
};

namespace detail {

inline Vector signs(const Vector& v) {
  Vector s(v.size());
  for (Index i = 0; i < v.size(); ++i) s(i) = v(i) > 0.0 ? 1.0 : (v(i) < 0.0 ? -1.0 : 0.0);
  return s;
}

/// Smallest and largest singular value (smallest may be zero). Empty -> 0.
inline std::pair<double, double> sigma_range(const Matrix& m) {
  if (m.cols() == 0) return {0.0, 0.0};
  const Vector sv = singular_values(m);
  const double smin = m.cols() > m.rows() ? 0.0 : sv(sv.size() - 1);
  return {smin, sv(0)};
}

/// A^T (A x - b) / lambda restricted to `s`.
inline Vector scaled_correlation(const ProblemInstance& inst, const Vector& x,
                                 const IndexSet& s) {
  const Vector r = inst.a() * x - inst.b();
  return columns(inst.a(), s).transpose() * r / inst.lambda();
}

inline double strong_margin(const ProblemInstance& inst, const Vector& x,
                            const IndexSet& supp) {
  const IndexSet comp = supp.complement(inst.n());
  if (comp.empty()) return inst.lambda();
  const Vector r = inst.b() - columns(inst.a(), supp) * entries(x, supp);
  return inst.lambda() - (columns(inst.a(), comp).transpose() * r).lpNorm<Eigen::Infinity>();
}

inline void require_optimal(const ProblemInstance& inst, const Vector& x,
                            const Tolerances& tols, const char* what) {
  const double res = optimality_residual(inst, x);
  if (!(res <= 100.0 * tols.tol))
    throw PreconditionError(std::string(what) +
                            ": solution is not optimal (optimality residual " +
                            std::to_string(res) + ")");
}

/// q + (alpha / lambda) (A x - b)
inline Vector perturbed_data(const ProblemInstance& inst, const Vector& x,
                             const Vector& q, double alpha) {
  if (q.size() != inst.m())
    throw InputError("q has length " + std::to_string(q.size()) + ", expected " +
                     std::to_string(inst.m()));
  return q + (alpha / inst.lambda()) * (inst.a() * x - inst.b());
}

}  // namespace detail

/// Verdicts for the three assumption tiers at `sol`.
///
/// weak:         A_I full column rank and a certificate y with A_I^T y =
///               sgn(x_I), ||A_{I^C}^T y||_inf < 1. Decided by the minimax LP
///               over y = y0 + N z (y0 minimum-norm, N spanning null(A_I^T)).
/// intermediate: A_J full column rank.
/// strong:       A_I full column rank and
///               ||A_{I^C}^T (b - A_I x_I)||_inf < lambda.
inline AssumptionReport check_assumptions(const ProblemInstance& inst,
                                          const LassoSolution& sol,
                                          const Tolerances& tols = {}) {
  detail::require_optimal(inst, sol.x, tols, "check_assumptions");
  AssumptionReport rep;
  rep.support = support(sol.x, tols.eps_supp);
  rep.equicorrelation = equicorrelation(inst, sol.x, tols.eps_eq);
  const IndexSet& supp = rep.support;
  const Matrix a_i = columns(inst.a(), supp);
  const Matrix a_j = columns(inst.a(), rep.equicorrelation);
  rep.rank_I = numerical_rank(a_i);
  rep.rank_J = numerical_rank(a_j);
  const bool full_i = rep.rank_I == supp.size();
  rep.intermediate = rep.rank_J == rep.equicorrelation.size();
  rep.strong_margin = detail::strong_margin(inst, sol.x, supp);
  rep.strong = full_i && rep.strong_margin > tols.eps_strict * inst.lambda();

  if (!full_i) {
    rep.weak = WeakVerdict::fails;
    return rep;
  }
  const Vector sgn = detail::signs(entries(sol.x, supp));
  const Vector y0 = supp.empty() ? Vector(Vector::Zero(inst.m()))
                                 : least_squares(a_i.transpose(), sgn);
  const Matrix null_basis = left_null_space(a_i);
  const Matrix a_c = columns(inst.a(), supp.complement(inst.n()));
  const lp::MinimaxResult mm =
      lp::minimize_inf_norm(a_c.transpose() * null_basis, a_c.transpose() * y0);
  rep.weak_certificate = y0 + null_basis * mm.z;
  rep.weak_value = mm.value;
  if (mm.value < 1.0 - tols.eps_strict)
    rep.weak = WeakVerdict::holds;
  else if (mm.value > 1.0 + tols.eps_strict)
    rep.weak = WeakVerdict::fails;
  else
    rep.weak = WeakVerdict::boundary_inconclusive;
  return rep;
}

struct ValueGradient {
  Vector grad_b;
  double grad_lambda = 0.0;
};

/// Gradient of the optimal value p(b, lambda): (b - A x, ||x||_1).
inline ValueGradient value_gradient(const ProblemInstance& inst, const LassoSolution& sol) {
  detail::require_length(inst, sol.x);
  return {inst.b() - inst.a() * sol.x, sol.x.lpNorm<1>()};
}

/// Minimizer of 0.5 ||A x - b||^2 + (lambda / 2) ||x||^2, i.e. the solution of
/// (A^T A + lambda I) x = A^T b, via QR of the stacked matrix [A; sqrt(lambda) I].
inline Vector tikhonov_solution(const Matrix& a, const Vector& b, double lambda) {
  if (!(lambda > 0.0)) throw InputError("tikhonov_solution: lambda must be > 0");
  if (b.size() != a.rows()) throw InputError("tikhonov_solution: dimension mismatch");
  const Index m = a.rows();
  const Index n = a.cols();
  Matrix stacked(m + n, n);
  stacked.topRows(m) = a;
  stacked.bottomRows(n) = std::sqrt(lambda) * Matrix::Identity(n, n);
  Vector rhs = Vector::Zero(m + n);
  rhs.head(m) = b;
  return stacked.householderQr().solve(rhs);
}

/// Maximum |J \ I| for which candidate index sets are enumerated.
inline constexpr std::size_t kMaxEnumerationGap = 20;

/// Directional derivative of S(b, lambda) in direction (q, alpha). Enumerates
/// every K with I <= K <= J, solves the reduced Gram system on K and keeps the
/// candidate whose entries and stationarity slacks have the signs admitted by
/// the tangent cone of gph d||.||_1:
///   i in K \ I : w_i = 0 or sgn(w_i) = sgn(A_i^T (b - A x))
///   i in J \ K : sgn(A_i^T (b - A x)) * A_i^T (d - A w) <= 0
inline DirectionalDerivativeResult directional_derivative(const ProblemInstance& inst,
                                                          const LassoSolution& sol,
                                                          const Vector& q, double alpha,
                                                          const Tolerances& tols = {}) {
  detail::require_optimal(inst, sol.x, tols, "directional_derivative");
  const IndexSet supp = support(sol.x, tols.eps_supp);
  const IndexSet eq = equicorrelation(inst, sol.x, tols.eps_eq).united(supp);
  if (!has_full_column_rank(columns(inst.a(), eq)))
    throw PreconditionError("directional_derivative: A_J is rank deficient");
  const IndexSet free = eq.minus(supp);
  if (free.size() > kMaxEnumerationGap)
    throw UnsupportedRegimeError("directional_derivative: |J \\ I| = " +
                                 std::to_string(free.size()) + " exceeds " +
                                 std::to_string(kMaxEnumerationGap));

  const Vector d = detail::perturbed_data(inst, sol.x, q, alpha);
  const Vector corr = inst.a().transpose() * (inst.b() - inst.a() * sol.x);
  const double slack_tol =
      tols.eps_supp * std::max(1.0, (columns(inst.a(), eq).transpose() * d).lpNorm<Eigen::Infinity>());

  struct Candidate {
    std::size_t card;
    std::uint64_t mask;
    Vector w;
    IndexSet k;
  };
  std::vector<Candidate> passing;
  const std::uint64_t count = std::uint64_t{1} << free.size();
  for (std::uint64_t mask = 0; mask < count; ++mask) {
    std::vector<Index> extra;
    for (std::size_t j = 0; j < free.size(); ++j)
      if (mask & (std::uint64_t{1} << j)) extra.push_back(free[j]);
    const IndexSet k = supp.united(IndexSet(std::move(extra)));
    const Matrix a_k = columns(inst.a(), k);
    const Vector w = scatter(gram_solve(a_k, a_k.transpose() * d), k, inst.n());
    const Vector slack = inst.a().transpose() * (d - inst.a() * w);
    bool ok = true;
    for (std::size_t j = 0; j < free.size() && ok; ++j) {
      const Index i = free[j];
      const double sigma = corr(i) > 0.0 ? 1.0 : -1.0;
      if (k.contains(i)) {
        if (std::abs(w(i)) > tols.eps_supp && w(i) * sigma < 0.0) ok = false;
      } else if (sigma * slack(i) > slack_tol) {
        ok = false;
      }
    }
    if (ok) passing.push_back({k.size(), mask, w, k});
  }
  if (passing.empty())
    throw ConsistencyError("directional_derivative: no index set passes the sign conditions");
  std::stable_sort(passing.begin(), passing.end(),
                   [](const Candidate& l, const Candidate& r) { return l.card < r.card; });
  const Candidate& chosen = passing.front();
  const double tie_tol = std::max(tols.eps_supp, 1e-8 * std::max(1.0, chosen.w.norm()));
  for (const Candidate& c : passing)
    if ((c.w - chosen.w).lpNorm<Eigen::Infinity>() > tie_tol)
      throw ConsistencyError(
          "directional_derivative: several index sets pass with different derivatives");
  return {chosen.w, chosen.k};
}

/// Strong-assumption check without the weak-tier LP.
inline bool strong_holds(const ProblemInstance& inst, const LassoSolution& sol,
                         const Tolerances& tols = {}) {
  const IndexSet supp = support(sol.x, tols.eps_supp);
  return has_full_column_rank(columns(inst.a(), supp)) &&
         detail::strong_margin(inst, sol.x, supp) > tols.eps_strict * inst.lambda();
}

/// DS(b, lambda)(q, alpha) = L_I (A_I^T A_I)^{-1} A_I^T (q + (alpha/lambda)(A x - b)).
inline Vector derivative_strong(const ProblemInstance& inst, const LassoSolution& sol,
                                const Vector& q, double alpha,
                                const Tolerances& tols = {}) {
  detail::require_optimal(inst, sol.x, tols, "derivative_strong");
  if (!strong_holds(inst, sol, tols))
    throw PreconditionError("derivative_strong: strong assumption does not hold");
  const IndexSet supp = support(sol.x, tols.eps_supp);
  const Matrix a_i = columns(inst.a(), supp);
  const Vector d = detail::perturbed_data(inst, sol.x, q, alpha);
  return scatter(gram_solve(a_i, a_i.transpose() * d), supp, inst.n());
}

/// Jacobian of (b, lambda) -> x under the strong assumption, as an
/// n x (m + 1) matrix whose last column is dx/dlambda.
inline Matrix jacobian_strong(const ProblemInstance& inst, const LassoSolution& sol,
                              const Tolerances& tols = {}) {
  detail::require_optimal(inst, sol.x, tols, "jacobian_strong");
  if (!strong_holds(inst, sol, tols))
    throw PreconditionError("jacobian_strong: strong assumption does not hold");
  const IndexSet supp = support(sol.x, tols.eps_supp);
  Matrix jac = Matrix::Zero(inst.n(), inst.m() + 1);
  if (supp.empty()) return jac;
  const Matrix a_i = columns(inst.a(), supp);
  Eigen::JacobiSVD<Matrix> svd(a_i, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector& sv = svd.singularValues();
  // (A_I^T A_I)^{-1} A_I^T = V S^{-1} U^T
  const Matrix pinv =
      svd.matrixV() * sv.cwiseInverse().asDiagonal() * svd.matrixU().transpose();
  const Vector lam_col = pinv * (inst.a() * sol.x - inst.b()) / inst.lambda();
  for (std::size_t k = 0; k < supp.size(); ++k) {
    jac.row(supp[k]).head(inst.m()) = pinv.row(static_cast<Index>(k));
    jac(supp[k], inst.m()) = lam_col(static_cast<Index>(k));
  }
  return jac;
}

/// Local Lipschitz moduli. Uses M = I when the strong verdict is true and
/// M = J otherwise:
///   (b, lambda):  [s_max(A_M) + ||A_M^T (A x - b)/lambda||] / s_min(A_M)^2
///   lambda:       sqrt(|M|) / s_min(A_M)^2
///   (A, b, lambda): [s_max(A_M)(1 + ||x||) + c_M + ||A x - b||] / s_min(A_M)^2
/// with c_M = sqrt(|I|) in strong mode and ||A_J^T (A x - b)/lambda|| otherwise.
/// An empty M (x = 0 under the strong assumption) gives zero moduli.
inline SensitivityReport lipschitz_bounds(const ProblemInstance& inst,
                                          const LassoSolution& sol,
                                          const AssumptionReport& report) {
  if (!report.strong && !report.intermediate)
    throw UnsupportedRegimeError(
        "lipschitz_bounds: intermediate assumption (A_J full column rank) fails");
  SensitivityReport out;
  out.assumptions = report;
  out.mode = report.strong ? BoundMode::strong : BoundMode::intermediate;
  const IndexSet& supp = report.support;
  const IndexSet eq = report.equicorrelation.united(supp);
  const Matrix a_i = columns(inst.a(), supp);
  const Matrix a_j = columns(inst.a(), eq);
  std::tie(out.sigma_min_I, out.sigma_max_I) = detail::sigma_range(a_i);
  std::tie(out.sigma_min_J, out.sigma_max_J) = detail::sigma_range(a_j);

  const IndexSet& m_set = report.strong ? supp : eq;
  if (m_set.empty()) return out;
  const double smin = report.strong ? out.sigma_min_I : out.sigma_min_J;
  const double smax = report.strong ? out.sigma_max_I : out.sigma_max_J;
  if (!(smin > 0.0))
    throw UnsupportedRegimeError("lipschitz_bounds: A_M is rank deficient");
  const double inv2 = 1.0 / (smin * smin);
  const double corr = detail::scaled_correlation(inst, sol.x, m_set).norm();
  const double res = (inst.a() * sol.x - inst.b()).norm();
  const double card = std::sqrt(static_cast<double>(m_set.size()));
  out.lipschitz_bl = (smax + corr) * inv2;
  out.lipschitz_lambda = card * inv2;
  out.lipschitz_A =
      (smax * (1.0 + sol.x.norm()) + (report.strong ? card : corr) + res) * inv2;
  return out;
}

/// check_assumptions followed by lipschitz_bounds when a bound regime applies.
struct Analysis {
  AssumptionReport assumptions;
  std::optional<SensitivityReport> bounds;
};

inline Analysis analyze(const ProblemInstance& inst, const LassoSolution& sol,
                        const Tolerances& tols = {}) {
  Analysis out;
  out.assumptions = check_assumptions(inst, sol, tols);
  if (out.assumptions.strong || out.assumptions.intermediate)
    out.bounds = lipschitz_bounds(inst, sol, out.assumptions);
  return out;
}

struct FuchsResult {
  Vector x_bar;
  double lambda_max = std::numeric_limits<double>::infinity();
  bool condition_ok = false;
  double coherence = 0.0;
  IndexSet support;
  /// d x_bar / d lambda = -(A_I0^T A_I0)^{-1} sgn(s0), scattered to length n.
  Vector dlambda;
};

/// Explicit LASSO solution for b = A x0 with a sparse, incoherent x0:
///   x_I0 = s0 - lambda (A_I0^T A_I0)^{-1} sgn(s0),  zero elsewhere,
/// valid for lambda in [0, lambda_max).
inline FuchsResult fuchs_explicit(const Matrix& a, const Vector& x0, double lambda) {
  require_finite(a, "fuchs_explicit");
  require_unit_columns(a, "fuchs_explicit");
  if (x0.size() != a.cols()) throw InputError("fuchs_explicit: x0 length mismatch");
  if (!(lambda >= 0.0)) throw InputError("fuchs_explicit: lambda must be >= 0");
  FuchsResult out;
  out.support = support(x0, 0.0);
  if (out.support.empty()) throw InputError("fuchs_explicit: x0 must be nonzero");
  const Vector s0 = entries(x0, out.support);
  const Vector sgn = detail::signs(s0);
  const Matrix a_i = columns(a, out.support);
  const Vector dir = gram_solve(a_i, sgn);  // throws RankDeficiencyError
  out.x_bar = scatter(s0 - lambda * dir, out.support, a.cols());
  out.dlambda = scatter(-dir, out.support, a.cols());
  for (Index k = 0; k < s0.size(); ++k) {
    const double ratio = s0(k) / dir(k);
    if (ratio > 0.0) out.lambda_max = std::min(out.lambda_max, ratio);
  }
  out.coherence = a.cols() > 1 ? coherence(a) : 0.0;
  const double sparsity = static_cast<double>(out.support.size());
  const bool incoherent =
      out.coherence == 0.0 || sparsity < 0.5 * (1.0 + 1.0 / out.coherence);
  out.condition_ok = incoherent;  // full rank already enforced by gram_solve
  return out;
}

}  // namespace lassosens
