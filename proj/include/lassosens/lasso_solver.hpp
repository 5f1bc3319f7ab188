#pragma once

// LASSO solver:  minimize 0.5 * ||A x - b||^2 + lambda * ||x||_1.
//
// Monotone FISTA (fixed step 1/sigma_max(A)^2, function-value restart)
// certified by a Fenchel duality gap. Iterates are periodically "polished":
// the current support and sign pattern are frozen and the reduced
// stationarity system A_I^T A_I x_I = A_I^T b - lambda sgn(x_I) is solved
// exactly. A polished point is only accepted when its own duality gap meets
// the tolerance, so the certificate is the same either way.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "lassosens/dense_linalg.hpp"
#include "lassosens/errors.hpp"

namespace lassosens {

/// Classification tolerances shared by the solver and the sensitivity code.
struct Tolerances {
  double tol = 1e-10;         ///< relative duality-gap target
  double eps_supp = 1e-8;     ///< |x_i| > eps_supp  =>  i in supp(x)
  double eps_eq = 1e-6;       ///< relative slack for the equicorrelation set
  double eps_strict = 1e-8;   ///< relative margin for strict inequalities
};

/// The triple (A, b, lambda) of one LASSO problem. Validated on construction
/// and immutable afterwards.
class ProblemInstance {
 public:
  ProblemInstance(Matrix a, Vector b, double lambda)
      : a_(std::move(a)), b_(std::move(b)), lambda_(lambda) {
    if (a_.rows() == 0 || a_.cols() == 0)
      throw InputError("ProblemInstance: A must be non-empty");
    if (b_.size() != a_.rows())
      throw InputError("ProblemInstance: b has length " +
                       std::to_string(b_.size()) + " but A has " +
                       std::to_string(a_.rows()) + " rows");
    if (!(lambda_ > 0.0) || !std::isfinite(lambda_))
      throw InputError("ProblemInstance: lambda must be finite and > 0");
    require_finite(a_, "ProblemInstance A");
    require_finite(b_, "ProblemInstance b");
  }

  const Matrix& a() const noexcept { return a_; }
  const Vector& b() const noexcept { return b_; }
  double lambda() const noexcept { return lambda_; }
  Index m() const noexcept { return a_.rows(); }
  Index n() const noexcept { return a_.cols(); }

  ProblemInstance with_lambda(double lambda) const { return {a_, b_, lambda}; }
  ProblemInstance with_b(Vector b) const { return {a_, std::move(b), lambda_}; }

 private:
  Matrix a_;
  Vector b_;
  double lambda_;
};

struct LassoSolution {
  Vector x;
  double objective = 0.0;
  double dual_gap = 0.0;  ///< absolute gap P(x) - D(nu) at x
  int iterations = 0;
  IndexSet support;
  IndexSet equicorrelation;
};

struct SolveOptions {
  Tolerances tolerances;
  int max_iter = 200000;
  std::optional<Vector> warm_start;
  int gap_check_every = 5;
  int polish_every = 20;
  /// Called after every accelerated step with (iteration, objective).
  std::function<void(int, double)> observer;
};

/// Componentwise proximal map of tau * ||.||_1.
inline Vector soft_threshold(const Vector& v, double tau) {
  if (!(tau >= 0.0)) throw InputError("soft_threshold: tau must be >= 0");
  Vector out(v.size());
  for (Index i = 0; i < v.size(); ++i) {
    const double vi = v(i);
    out(i) = vi > tau ? vi - tau : (vi < -tau ? vi + tau : 0.0);
  }
  return out;
}

namespace detail {
inline void require_length(const ProblemInstance& inst, const Vector& x) {
  if (x.size() != inst.n())
    throw InputError("x has length " + std::to_string(x.size()) +
                     ", expected " + std::to_string(inst.n()));
}
}  // namespace detail

inline double objective(const ProblemInstance& inst, const Vector& x) {
  detail::require_length(inst, x);
  return 0.5 * (inst.a() * x - inst.b()).squaredNorm() +
         inst.lambda() * x.lpNorm<1>();
}

/// Fenchel duality gap at x using the scaled residual as dual point.
inline double dual_gap(const ProblemInstance& inst, const Vector& x) {
  detail::require_length(inst, x);
  const Vector r = inst.b() - inst.a() * x;
  const double corr = (inst.a().transpose() * r).lpNorm<Eigen::Infinity>();
  const double scale = corr == 0.0 ? 1.0 : std::min(1.0, inst.lambda() / corr);
  const Vector nu = scale * r;
  const double primal = 0.5 * r.squaredNorm() + inst.lambda() * x.lpNorm<1>();
  const double dual = 0.5 * inst.b().squaredNorm() - 0.5 * (nu - inst.b()).squaredNorm();
  return std::max(0.0, primal - dual);
}

/// Euclidean distance from A^T(b - Ax)/lambda to the subdifferential of
/// ||.||_1 at x.
inline double optimality_residual(const ProblemInstance& inst, const Vector& x) {
  detail::require_length(inst, x);
  const Vector g = inst.a().transpose() * (inst.b() - inst.a() * x) / inst.lambda();
  double acc = 0.0;
  for (Index i = 0; i < x.size(); ++i) {
    double d;
    if (x(i) > 0.0)
      d = std::abs(g(i) - 1.0);
    else if (x(i) < 0.0)
      d = std::abs(g(i) + 1.0);
    else
      d = std::max(std::abs(g(i)) - 1.0, 0.0);
    acc += d * d;
  }
  return std::sqrt(acc);
}

/// {i : |x_i| > eps_supp}.
inline IndexSet support(const Vector& x, double eps_supp) {
  if (!(eps_supp >= 0.0)) throw InputError("support: eps_supp must be >= 0");
  std::vector<Index> idx;
  for (Index i = 0; i < x.size(); ++i)
    if (std::abs(x(i)) > eps_supp) idx.push_back(i);
  return IndexSet(std::move(idx));
}

/// {i : | |A_i^T (b - Ax)| - lambda | <= eps_eq * lambda}.
inline IndexSet equicorrelation(const ProblemInstance& inst, const Vector& x,
                                double eps_eq) {
  detail::require_length(inst, x);
  const Vector c = inst.a().transpose() * (inst.b() - inst.a() * x);
  std::vector<Index> idx;
  for (Index i = 0; i < c.size(); ++i)
    if (std::abs(std::abs(c(i)) - inst.lambda()) <= eps_eq * inst.lambda())
      idx.push_back(i);
  return IndexSet(std::move(idx));
}

namespace detail {

inline bool gap_ok(double gap, double obj, double tol) {
  return gap <= tol * std::max(1.0, obj);
}

/// Solve the reduced stationarity system on {i : |x_i| > threshold} with the
/// sign pattern of x. Returns nullopt when the support is too large, rank
/// deficient or the solution flips a sign.
inline std::optional<Vector> polish(const ProblemInstance& inst, const Vector& x,
                                    double threshold) {
  std::vector<Index> idx;
  for (Index i = 0; i < x.size(); ++i)
    if (std::abs(x(i)) > threshold) idx.push_back(i);
  if (idx.empty() || static_cast<Index>(idx.size()) > inst.m()) return std::nullopt;
  const IndexSet s(std::move(idx));
  const Matrix a_s = columns(inst.a(), s);
  Vector sgn(static_cast<Index>(s.size()));
  for (std::size_t k = 0; k < s.size(); ++k)
    sgn(static_cast<Index>(k)) = x(s[k]) > 0.0 ? 1.0 : -1.0;
  Vector xs;
  try {
    xs = gram_solve(a_s, a_s.transpose() * inst.b() - inst.lambda() * sgn);
  } catch (const RankDeficiencyError&) {
    return std::nullopt;
  }
  for (Index k = 0; k < xs.size(); ++k)
    if (xs(k) * sgn(k) <= 0.0) return std::nullopt;
  return scatter(xs, s, inst.n());
}

}  // namespace detail

/// Assemble a LassoSolution (objective, gap, support, equicorrelation) for a
/// given point.
inline LassoSolution make_solution(const ProblemInstance& inst, Vector x,
                                   int iterations, const Tolerances& tols = {}) {
  LassoSolution sol;
  sol.objective = objective(inst, x);
  sol.dual_gap = dual_gap(inst, x);
  sol.iterations = iterations;
  sol.support = support(x, tols.eps_supp);
  sol.equicorrelation = equicorrelation(inst, x, tols.eps_eq);
  sol.x = std::move(x);
  return sol;
}

inline LassoSolution solve(const ProblemInstance& inst, const SolveOptions& opts) {
  const double tol = opts.tolerances.tol;
  if (!(tol > 0.0)) throw InputError("solve: tol must be > 0");
  if (opts.max_iter < 1) throw InputError("solve: max_iter must be >= 1");

  const Matrix& a = inst.a();
  const Vector& b = inst.b();
  const double lambda = inst.lambda();
  const Index n = inst.n();

  Vector x = Vector::Zero(n);
  if (opts.warm_start) {
    detail::require_length(inst, *opts.warm_start);
    x = *opts.warm_start;
  }

  const Vector atb = a.transpose() * b;
  if (atb.lpNorm<Eigen::Infinity>() <= lambda)
    return make_solution(inst, Vector::Zero(n), 0, opts.tolerances);

  const Vector sv = singular_values(a);
  const double lip = sv(0) * sv(0);
  const double step = 1.0 / lip;

  Vector best = x;
  double best_gap = dual_gap(inst, x);
  double fx = objective(inst, x);
  if (detail::gap_ok(best_gap, fx, tol) && !opts.warm_start)
    return make_solution(inst, x, 0, opts.tolerances);

  auto try_polish = [&](const Vector& from, Vector& out, double& out_gap) {
    const double scale = from.lpNorm<Eigen::Infinity>();
    bool found = false;
    for (double thr : {0.0, 1e-9 * scale, 1e-6 * scale, 1e-3 * scale}) {
      auto cand = detail::polish(inst, from, thr);
      if (!cand) continue;
      const double g = dual_gap(inst, *cand);
      if (g < out_gap) {
        out = std::move(*cand);
        out_gap = g;
        found = true;
      }
    }
    return found;
  };

  Vector y = x;
  double t = 1.0;
  for (int it = 1; it <= opts.max_iter; ++it) {
    Vector x_new = soft_threshold(y - step * (a.transpose() * (a * y - b)), lambda * step);
    double f_new = objective(inst, x_new);
    double t_new = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    if (f_new > fx) {
      // Function-value restart: plain proximal-gradient step from x.
      x_new = soft_threshold(x - step * (a.transpose() * (a * x - b)), lambda * step);
      f_new = objective(inst, x_new);
      t = 1.0;
      t_new = 1.0;
      y = x_new;
    } else {
      y = x_new + ((t - 1.0) / t_new) * (x_new - x);
    }
    x = std::move(x_new);
    fx = f_new;
    t = t_new;
    if (opts.observer) opts.observer(it, fx);

    const bool check = it % opts.gap_check_every == 0 || it == opts.max_iter;
    const bool polish_now = it % opts.polish_every == 0;
    if (!check && !polish_now) continue;

    const double gap = dual_gap(inst, x);
    if (gap < best_gap) {
      best = x;
      best_gap = gap;
    }
    if (detail::gap_ok(gap, fx, tol) || polish_now) {
      Vector polished;
      double pgap = gap;
      if (try_polish(x, polished, pgap) && pgap < best_gap) {
        best = polished;
        best_gap = pgap;
      }
      if (detail::gap_ok(best_gap, objective(inst, best), tol))
        return make_solution(inst, best, it, opts.tolerances);
    }
  }
  throw NonConvergenceError(
      "solve: relative duality gap did not reach " + std::to_string(tol) +
          " within " + std::to_string(opts.max_iter) + " iterations",
      best, best_gap);
}

inline LassoSolution solve(const ProblemInstance& inst, double tol = 1e-10,
                           int max_iter = 200000) {
  SolveOptions opts;
  opts.tolerances.tol = tol;
  opts.max_iter = max_iter;
  return solve(inst, opts);
}

}  // namespace lassosens
