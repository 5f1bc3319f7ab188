#pragma once

// Random-ensemble experiments: seeded subgaussian matrices, empirical
// restricted-isometry checks over column subsets, the high-probability
// bound calculators, and the lambda-sweep pipeline comparing the observed
// solution path with the local Lipschitz bound at the best lambda.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>

#include "lassosens/dense_linalg.hpp"
#include "lassosens/errors.hpp"
#include "lassosens/lasso_solver.hpp"
#include "lassosens/random.hpp"
#include "lassosens/sensitivity.hpp"

namespace lassosens {

enum class EnsembleKind { gaussian, rademacher };

inline const char* to_string(EnsembleKind k) {
  return k == EnsembleKind::gaussian ? "gaussian" : "rademacher";
}

struct EnsembleSpec {
  EnsembleKind kind = EnsembleKind::gaussian;
  Index m = 0;
  Index n = 0;
  bool normalized = true;  ///< divide entries by sqrt(m)
  std::uint64_t seed = 0;
};

/// Entries are drawn in row-major order from CounterRng(spec.seed).
inline Matrix generate_matrix(const EnsembleSpec& spec) {
  if (spec.m <= 0 || spec.n <= 0)
    throw InputError("generate_matrix: m and n must be positive");
  CounterRng rng(spec.seed);
  Matrix a(spec.m, spec.n);
  for (Index i = 0; i < spec.m; ++i)
    for (Index j = 0; j < spec.n; ++j)
      a(i, j) = spec.kind == EnsembleKind::gaussian ? rng.normal() : rng.rademacher();
  if (spec.normalized) a /= std::sqrt(static_cast<double>(spec.m));
  return a;
}

/// Reduces the mutual coherence of a matrix by alternating projection
/// between the set of Gram matrices with off-diagonal entries bounded by
/// `target` and the positive semidefinite matrices of rank m. Columns of the
/// result have unit norm. Stops once coherence(result) <= target.
inline Matrix decorrelate_columns(const Matrix& a, double target, int max_iter = 500) {
  const Index m = a.rows();
  const Index n = a.cols();
  Matrix cur = normalize_columns(a);
  // Clipping slightly below the target lets the iteration settle strictly
  // inside the feasible set.
  const double clip = 0.9 * target;
  for (int it = 0; it < max_iter; ++it) {
    if (coherence(cur) <= target) return cur;
    Matrix g = cur.transpose() * cur;
    for (Index j = 0; j < n; ++j)
      for (Index i = 0; i < n; ++i) {
        if (i == j) {
          g(i, j) = 1.0;
        } else if (std::abs(g(i, j)) > clip) {
          g(i, j) = std::copysign(clip, g(i, j));
        }
      }
    Eigen::SelfAdjointEigenSolver<Matrix> es(g);
    const Vector evals = es.eigenvalues().tail(m).cwiseMax(0.0);
    const Matrix evecs = es.eigenvectors().rightCols(m);
    cur = normalize_columns(evals.cwiseSqrt().asDiagonal() * evecs.transpose());
  }
  if (coherence(cur) > target)
    throw Error("decorrelate_columns: coherence target not reached");
  return cur;
}

struct SparseInstance {
  Matrix a;   ///< unit-norm columns
  Vector x0;  ///< s-sparse signal
};

/// Seeded unit-column instance with an s-sparse x0 satisfying the coherence
/// condition s < (1 + 1/mu(A)) / 2. Starts from a Gaussian matrix with
/// normalized columns and decorrelates it only when the condition fails.
/// Nonzeros of x0 sit on a uniformly drawn support with random signs and
/// magnitudes 1 + |N(0,1)|.
inline SparseInstance incoherent_instance(Index m, Index n, Index s, std::uint64_t seed) {
  if (s < 1 || s > std::min(m, n)) throw InputError("incoherent_instance: need 1 <= s <= min(m, n)");
  SparseInstance out;
  out.a = normalize_columns(generate_matrix({EnsembleKind::gaussian, m, n, false, seed}));
  const double limit = 1.0 / static_cast<double>(2 * s - 1);
  if (n > 1 && coherence(out.a) >= limit) out.a = decorrelate_columns(out.a, 0.9 * limit);
  CounterRng rng(seed ^ 0xA5A5A5A5A5A5A5A5ULL);
  std::vector<Index> supp;
  while (static_cast<Index>(supp.size()) < s) {
    const auto c = static_cast<Index>(rng.below(static_cast<std::uint64_t>(n)));
    if (std::find(supp.begin(), supp.end(), c) == supp.end()) supp.push_back(c);
  }
  out.x0 = Vector::Zero(n);
  for (Index c : supp) out.x0(c) = rng.rademacher() * (1.0 + std::abs(rng.normal()));
  return out;
}

enum class RipMode { exhaustive, sampled };

inline const char* to_string(RipMode m) {
  return m == RipMode::exhaustive ? "exhaustive" : "sampled";
}

struct RipReport {
  Index s = 0;
  RipMode mode = RipMode::exhaustive;
  std::uint64_t sample_count = 0;  ///< requested draws (sampled mode)
  std::uint64_t seed = 0;
  double min_sigma_min = 0.0;
  double max_sigma_max = 0.0;
  double delta_hat = 0.0;
  std::uint64_t subsets_checked = 0;
};

inline constexpr double kExhaustiveBudget = 2e6;

/// C(n, k) as a double (exact for the sizes we care about).
inline double binomial(Index n, Index k) {
  if (k < 0 || k > n) return 0.0;
  k = std::min(k, n - k);
  double r = 1.0;
  for (Index i = 1; i <= k; ++i) r = r * static_cast<double>(n - k + i) / static_cast<double>(i);
  return std::round(r);
}

namespace detail {
/// Smallest and largest singular value of the submatrix on `cols` (the
/// smallest is exactly zero-capable: no rank cut-off is applied).
inline std::pair<double, double> subset_extremes(const Matrix& a,
                                                 const std::vector<Index>& cols) {
  Matrix sub(a.rows(), static_cast<Index>(cols.size()));
  for (std::size_t j = 0; j < cols.size(); ++j) sub.col(static_cast<Index>(j)) = a.col(cols[j]);
  Eigen::JacobiSVD<Matrix> svd(sub);
  const Vector& sv = svd.singularValues();
  return {sv(sv.size() - 1), sv(0)};
}
}  // namespace detail

/// Extremal singular values over s-column submatrices, either over all
/// C(n, s) subsets (lexicographic order) or over `sample_count` subsets drawn
/// uniformly with CounterRng(seed).
inline RipReport empirical_rip(const Matrix& a, Index s, RipMode mode,
                               std::uint64_t sample_count = 10000, std::uint64_t seed = 0) {
  const Index m = a.rows();
  const Index n = a.cols();
  if (s < 1 || s > std::min(m, n))
    throw InputError("empirical_rip: need 1 <= s <= min(m, n)");
  RipReport rep;
  rep.s = s;
  rep.mode = mode;
  rep.seed = seed;
  rep.min_sigma_min = std::numeric_limits<double>::infinity();
  rep.max_sigma_max = 0.0;

  auto visit = [&](const std::vector<Index>& cols) {
    const auto [lo, hi] = detail::subset_extremes(a, cols);
    rep.min_sigma_min = std::min(rep.min_sigma_min, lo);
    rep.max_sigma_max = std::max(rep.max_sigma_max, hi);
    ++rep.subsets_checked;
  };

  if (mode == RipMode::exhaustive) {
    if (binomial(n, s) > kExhaustiveBudget)
      throw BudgetError("empirical_rip: C(" + std::to_string(n) + ", " + std::to_string(s) +
                        ") subsets exceed the exhaustive budget; use sampled mode");
    std::vector<Index> cols(static_cast<std::size_t>(s));
    for (Index j = 0; j < s; ++j) cols[static_cast<std::size_t>(j)] = j;
    for (;;) {
      visit(cols);
      Index pos = s - 1;
      while (pos >= 0 && cols[static_cast<std::size_t>(pos)] == n - s + pos) --pos;
      if (pos < 0) break;
      ++cols[static_cast<std::size_t>(pos)];
      for (Index j = pos + 1; j < s; ++j)
        cols[static_cast<std::size_t>(j)] = cols[static_cast<std::size_t>(j - 1)] + 1;
    }
  } else {
    if (sample_count == 0) throw InputError("empirical_rip: sample count must be positive");
    rep.sample_count = sample_count;
    CounterRng rng(seed);
    std::vector<Index> cols;
    for (std::uint64_t draw = 0; draw < sample_count; ++draw) {
      cols.clear();
      while (static_cast<Index>(cols.size()) < s) {
        const auto c = static_cast<Index>(rng.below(static_cast<std::uint64_t>(n)));
        if (std::find(cols.begin(), cols.end(), c) == cols.end()) cols.push_back(c);
      }
      std::sort(cols.begin(), cols.end());
      visit(cols);
    }
  }
  rep.delta_hat = std::max(1.0 - rep.min_sigma_min, rep.max_sigma_max - 1.0);
  return rep;
}

struct BoundInputs {
  Index s = 1;
  Index n = 200;
  Index m = 50;
  double delta = 0.5;
  double epsilon = 0.1;
  double beta = 1.0 / std::sqrt(std::numbers::ln2);
  double c_abs = 1.0;
};

struct BoundRecord {
  double m_min_sparse = 0.0;       ///< C d^-2 b^2 log b [s log(en/s) + log(3/eps)]
  double m_min_no_sparsity = 0.0;  ///< 37 C ((1+d)/(d(1-d)))^2 b^2 log b [...]
  std::int64_t t_foucart = 0;      ///< floor(36 g^2 s) + 1, g = (1+d)/(1-d)
  std::int64_t foucart_cap = 0;    ///< floor(36 g^2 s)
  double L_sparse = 0.0;           ///< sqrt(s) / (1-d)^2
  double L_no_sparsity = 0.0;      ///< 6 (1+d) sqrt(s) / (1-d)^3
  double lambda_threshold_factor = 0.0;  ///< 2 (1+d); lambda > factor * ||h||
  double c_abs = 1.0;
};

/// floor(36 g^2 s) with g = (1 + delta) / (1 - delta).
inline std::int64_t foucart_cap(Index s, double delta) {
  const double g = (1.0 + delta) / (1.0 - delta);
  return static_cast<std::int64_t>(std::floor(36.0 * g * g * static_cast<double>(s)));
}

inline BoundRecord bound_calculators(const BoundInputs& in) {
  if (!(in.delta > 0.0 && in.delta < 1.0))
    throw InputError("bound_calculators: delta must lie in (0, 1)");
  if (!(in.epsilon > 0.0 && in.epsilon < 1.0))
    throw InputError("bound_calculators: epsilon must lie in (0, 1)");
  if (in.s < 1 || in.n < in.s) throw InputError("bound_calculators: need 1 <= s <= n");
  if (!(in.beta >= 1.0 / std::sqrt(std::numbers::ln2) - 1e-12))
    throw InputError("bound_calculators: beta must be >= sqrt(1/ln 2)");
  if (!(in.c_abs > 0.0)) throw InputError("bound_calculators: C must be > 0");

  const double d = in.delta;
  const double s = static_cast<double>(in.s);
  const double n = static_cast<double>(in.n);
  const double complexity =
      s * std::log(std::numbers::e * n / s) + std::log(3.0 / in.epsilon);
  const double subg = in.beta * in.beta * std::log(in.beta);
  const double ratio = (1.0 + d) / (d * (1.0 - d));

  BoundRecord r;
  r.c_abs = in.c_abs;
  r.m_min_sparse = in.c_abs / (d * d) * subg * complexity;
  r.m_min_no_sparsity = 37.0 * in.c_abs * ratio * ratio * subg * complexity;
  r.foucart_cap = foucart_cap(in.s, d);
  r.t_foucart = r.foucart_cap + 1;
  r.L_sparse = std::sqrt(s) / ((1.0 - d) * (1.0 - d));
  r.L_no_sparsity = 6.0 * (1.0 + d) * std::sqrt(s) / std::pow(1.0 - d, 3);
  r.lambda_threshold_factor = 2.0 * (1.0 + d);
  return r;
}

struct FoucartCheck {
  std::int64_t observed_sparsity = 0;
  std::int64_t predicted_cap = 0;
  bool satisfied = false;
};

/// Solves the instance and compares ||x(lambda)||_0 with floor(36 g^2 s).
inline FoucartCheck foucart_sparsity_check(const Matrix& a, const Vector& b, double lambda,
                                           Index s, double delta,
                                           const Tolerances& tols = {}) {
  if (!(delta > 0.0 && delta < 1.0))
    throw InputError("foucart_sparsity_check: delta must lie in (0, 1)");
  SolveOptions opts;
  opts.tolerances = tols;
  const LassoSolution sol = solve(ProblemInstance(a, b, lambda), opts);
  FoucartCheck out;
  out.observed_sparsity = static_cast<std::int64_t>(support(sol.x, tols.eps_supp).size());
  out.predicted_cap = foucart_cap(s, delta);
  out.satisfied = out.observed_sparsity <= out.predicted_cap;
  return out;
}

enum class SignalModel { paper, unit, custom };

inline const char* to_string(SignalModel s) {
  switch (s) {
    case SignalModel::paper: return "paper";
    case SignalModel::unit: return "unit";
    case SignalModel::custom: return "custom";
  }
  return "unknown";
}

struct LambdaGrid {
  int count = 501;
  std::optional<double> center;  ///< default gamma * sqrt(2 log n)
  double log_span = 100.0;       ///< ratio between the largest and smallest value
};

struct ExperimentConfig {
  EnsembleSpec spec;
  Index s = 3;
  double gamma = 0.1;
  LambdaGrid lambda_grid;
  std::uint64_t trial_seed = 1;
  SignalModel signal_model = SignalModel::paper;
  Vector custom_signal;
  Tolerances tolerances;
  std::uint64_t rip_samples = 10000;  ///< subsets for the measured delta at order s
};

inline void validate(const ExperimentConfig& c) {
  if (c.spec.m <= 0 || c.spec.n <= 0) throw InputError("config: m and n must be positive");
  if (c.s < 1 || c.s > c.spec.n) throw InputError("config: need 1 <= s <= n");
  if (c.lambda_grid.count < 3) throw InputError("config: lambda grid needs >= 3 points");
  if (!(c.lambda_grid.log_span >= 1.0))
    throw InputError("config: lambda grid log_span must be >= 1");
  if (c.lambda_grid.center && !(*c.lambda_grid.center > 0.0))
    throw InputError("config: lambda grid center must be > 0");
  if (!(c.gamma >= 0.0)) throw InputError("config: gamma must be >= 0");
  if (c.signal_model == SignalModel::custom && c.custom_signal.size() != c.spec.n)
    throw InputError("config: custom signal must have length n");
}

/// Ascending, logarithmically spaced grid centered (geometrically) on the
/// grid center.
inline std::vector<double> lambda_values(const ExperimentConfig& c) {
  validate(c);
  const double center =
      c.lambda_grid.center.value_or(c.gamma * std::sqrt(2.0 * std::log(static_cast<double>(c.spec.n))));
  if (!(center > 0.0)) throw InputError("config: lambda grid center must be > 0");
  std::vector<double> out(static_cast<std::size_t>(c.lambda_grid.count));
  const double last = static_cast<double>(c.lambda_grid.count - 1);
  for (int k = 0; k < c.lambda_grid.count; ++k)
    out[static_cast<std::size_t>(k)] =
        center * std::pow(c.lambda_grid.log_span, static_cast<double>(k) / last - 0.5);
  return out;
}

struct SweepRow {
  double lambda = 0.0;
  double error = 0.0;  ///< ||x(lambda) - x(lambda*)||
  std::optional<double> bound;  ///< L |lambda - lambda*|, absent without L
  std::optional<double> ratio;  ///< bound / error (+inf when error == 0)
  double truth_error = 0.0;     ///< ||x(lambda) - x0||
  std::int64_t support_size = 0;
};

struct SweepResult {
  std::uint64_t seed = 0;
  std::uint64_t trial_seed = 0;
  std::size_t index_star = 0;
  double lambda_star = 0.0;
  std::int64_t support_size_star = 0;
  double sigma_min_I = 0.0;
  bool full_rank_at_star = false;
  std::optional<double> L_bound;
  bool strong_holds_at_star = false;
  /// ||A_{I^C}^T (b - A_I x_I)||_inf at lambda*.
  double inactive_correlation = 0.0;
  /// Largest k such that every grid row within k steps of lambda* has
  /// bound >= error; zero when no bound is available.
  std::size_t validity_steps = 0;
  double validity_lambda_lo = 0.0;
  double validity_lambda_hi = 0.0;
  double noise_norm = 0.0;  ///< ||gamma w||
  double b_norm = 0.0;
  bool noise_precondition_ok = false;  ///< ||h|| <= ||b|| / 3
  double delta_hat = 0.0;              ///< sampled RIP constant at order s
  std::vector<SweepRow> rows;
};

struct SweepData {
  Matrix a;
  Vector x0;
  Vector noise;  ///< gamma * w
  Vector b;
};

/// Builds A, x0 and b = A x0 + gamma w for a configuration. A uses
/// spec.seed; the signal and the noise use trial_seed (signal draws first).
inline SweepData sweep_data(const ExperimentConfig& c) {
  validate(c);
  SweepData d;
  d.a = generate_matrix(c.spec);
  const Index m = c.spec.m;
  const Index n = c.spec.n;
  CounterRng rng(c.trial_seed);
  d.x0 = Vector::Zero(n);
  switch (c.signal_model) {
    case SignalModel::paper: {
      const double md = static_cast<double>(m);
      for (Index j = 0; j < c.s; ++j) d.x0(j) = md + std::sqrt(md) * rng.normal();
      break;
    }
    case SignalModel::unit:
      d.x0.head(c.s).setOnes();
      break;
    case SignalModel::custom:
      d.x0 = c.custom_signal;
      break;
  }
  Vector w(m);
  for (Index i = 0; i < m; ++i) w(i) = rng.normal();
  d.noise = c.gamma * w;
  d.b = d.a * d.x0 + d.noise;
  return d;
}

inline SweepResult run_lambda_sweep(const ExperimentConfig& c) {
  const SweepData data = sweep_data(c);
  const std::vector<double> grid = lambda_values(c);
  const Tolerances& tols = c.tolerances;

  std::vector<LassoSolution> sols;
  sols.reserve(grid.size());
  std::optional<Vector> warm;
  for (double lam : grid) {
    SolveOptions opts;
    opts.tolerances = tols;
    opts.warm_start = warm;
    try {
      sols.push_back(solve(ProblemInstance(data.a, data.b, lam), opts));
    } catch (const NonConvergenceError& e) {
      throw NonConvergenceError("run_lambda_sweep: solver failed at lambda = " +
                                    std::to_string(lam) + ": " + e.what(),
                                e.best_iterate(), e.gap());
    }
    warm = sols.back().x;
  }

  SweepResult res;
  res.seed = c.spec.seed;
  res.trial_seed = c.trial_seed;
  res.rows.resize(grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k) {
    res.rows[k].lambda = grid[k];
    res.rows[k].truth_error = (sols[k].x - data.x0).norm();
    res.rows[k].support_size = static_cast<std::int64_t>(support(sols[k].x, tols.eps_supp).size());
  }
  // Strict improvement only, so ties keep the smallest lambda.
  std::size_t star = 0;
  for (std::size_t k = 1; k < grid.size(); ++k)
    if (res.rows[k].truth_error < res.rows[star].truth_error) star = k;
  res.index_star = star;
  res.lambda_star = grid[star];

  const ProblemInstance inst(data.a, data.b, res.lambda_star);
  const LassoSolution& sol_star = sols[star];
  const IndexSet supp = support(sol_star.x, tols.eps_supp);
  res.support_size_star = static_cast<std::int64_t>(supp.size());
  const Matrix a_i = columns(data.a, supp);
  res.full_rank_at_star = has_full_column_rank(a_i);
  res.sigma_min_I = detail::sigma_range(a_i).first;
  res.inactive_correlation = res.lambda_star - detail::strong_margin(inst, sol_star.x, supp);
  res.strong_holds_at_star = strong_holds(inst, sol_star, tols);
  if (res.full_rank_at_star && res.sigma_min_I > 0.0)
    res.L_bound = std::sqrt(static_cast<double>(supp.size())) / (res.sigma_min_I * res.sigma_min_I);

  for (std::size_t k = 0; k < grid.size(); ++k) {
    SweepRow& row = res.rows[k];
    row.error = k == star ? 0.0 : (sols[k].x - sol_star.x).norm();
    if (res.L_bound) {
      row.bound = k == star ? 0.0 : *res.L_bound * std::abs(grid[k] - res.lambda_star);
      row.ratio = row.error == 0.0 ? std::numeric_limits<double>::infinity()
                                   : *row.bound / row.error;
    }
  }

  res.validity_lambda_lo = res.validity_lambda_hi = res.lambda_star;
  if (res.L_bound) {
    auto holds = [&](std::size_t k) { return *res.rows[k].bound >= res.rows[k].error; };
    std::size_t steps = 0;
    for (std::size_t k = 1;; ++k) {
      const bool has_lo = k <= star;
      const bool has_hi = star + k < grid.size();
      if (!has_lo && !has_hi) break;
      if ((has_lo && !holds(star - k)) || (has_hi && !holds(star + k))) break;
      steps = k;
    }
    res.validity_steps = steps;
    res.validity_lambda_lo = grid[star >= steps ? star - steps : 0];
    res.validity_lambda_hi = grid[std::min(star + steps, grid.size() - 1)];
  }

  res.noise_norm = data.noise.norm();
  res.b_norm = data.b.norm();
  res.noise_precondition_ok = res.noise_norm <= res.b_norm / 3.0;
  const Index order = std::min<Index>(c.s, std::min(c.spec.m, c.spec.n));
  res.delta_hat =
      empirical_rip(data.a, order, RipMode::sampled, c.rip_samples, c.spec.seed ^ 0x5DEECE66DULL)
          .delta_hat;
  return res;
}

}  // namespace lassosens
