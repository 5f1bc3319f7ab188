#include <gtest/gtest.h>

#include <bit>
#include <cmath>

#include "lassosens/cs_experiments.hpp"

using namespace lassosens;

namespace {

// Visits every s-subset through bitmasks over [0, 2^n) and returns the
// extremal singular values via the eigenvalues of the Gram matrix.
std::pair<double, double> brute_force_rip(const Matrix& a, int s) {
  const int n = static_cast<int>(a.cols());
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
    if (std::popcount(mask) != s) continue;
    Matrix sub(a.rows(), s);
    int c = 0;
    for (int j = 0; j < n; ++j)
      if (mask & (1u << j)) sub.col(c++) = a.col(j);
    Eigen::SelfAdjointEigenSolver<Matrix> es(sub.transpose() * sub);
    lo = std::min(lo, std::sqrt(std::max(0.0, es.eigenvalues()(0))));
    hi = std::max(hi, std::sqrt(es.eigenvalues()(s - 1)));
  }
  return {lo, hi};
}

ExperimentConfig small_config() {
  ExperimentConfig c;
  c.spec = {EnsembleKind::gaussian, 30, 60, true, 11};
  c.s = 2;
  c.gamma = 0.1;
  c.lambda_grid.count = 21;
  c.trial_seed = 3;
  c.rip_samples = 500;
  return c;
}

}  // namespace

TEST(CounterRng, MatchesSplitMix64Reference) {
  // First outputs of the reference SplitMix64 generator seeded with 0.
  CounterRng rng(0);
  EXPECT_EQ(rng.next_u64(), 0xE220A8397B1DCDAFULL);
  EXPECT_EQ(rng.next_u64(), 0x6E789E6AA1B965F4ULL);
  EXPECT_EQ(rng.next_u64(), 0x06C45D188009454FULL);
}

TEST(CounterRng, UniformRangesAndBelow) {
  CounterRng rng(17);
  for (int i = 0; i < 10000; ++i) {
    const double u = rng.uniform();
    EXPECT_GE(u, 0.0);
    EXPECT_LT(u, 1.0);
    EXPECT_LT(rng.below(7), 7u);
  }
}

TEST(GenerateMatrix, DeterministicPerSeed) {
  const EnsembleSpec spec{EnsembleKind::gaussian, 10, 20, true, 42};
  EXPECT_EQ(generate_matrix(spec), generate_matrix(spec));
  EnsembleSpec other = spec;
  other.seed = 43;
  EXPECT_NE(generate_matrix(spec), generate_matrix(other));
  EXPECT_THROW(generate_matrix({EnsembleKind::gaussian, 0, 3, true, 1}), InputError);
}

TEST(GenerateMatrix, GaussianMoments) {
  const Matrix a = generate_matrix({EnsembleKind::gaussian, 200, 500, false, 7});
  const double count = 200.0 * 500.0;
  const double mean = a.sum() / count;
  const double var = (a.array() - mean).square().sum() / count;
  EXPECT_LT(std::abs(mean), 4.0 / std::sqrt(count));
  EXPECT_NEAR(var, 1.0, 0.02);
  const Matrix an = generate_matrix({EnsembleKind::gaussian, 200, 500, true, 7});
  EXPECT_LT((an * std::sqrt(200.0) - a).norm(), 1e-10);
}

TEST(GenerateMatrix, RademacherEntries) {
  const Matrix a = generate_matrix({EnsembleKind::rademacher, 50, 80, false, 9});
  EXPECT_TRUE((a.array().abs() == 1.0).all());
  EXPECT_LT(std::abs(a.mean()), 4.0 / std::sqrt(4000.0));
  const Matrix an = generate_matrix({EnsembleKind::rademacher, 50, 80, true, 9});
  for (Index j = 0; j < 80; ++j) EXPECT_NEAR(an.col(j).norm(), 1.0, 1e-14);
}

TEST(EmpiricalRip, Examples) {
  const RipReport id = empirical_rip(Matrix::Identity(5, 5), 2, RipMode::exhaustive);
  EXPECT_DOUBLE_EQ(id.min_sigma_min, 1.0);
  EXPECT_DOUBLE_EQ(id.max_sigma_max, 1.0);
  EXPECT_DOUBLE_EQ(id.delta_hat, 0.0);
  EXPECT_EQ(id.subsets_checked, 10u);

  Matrix dup(2, 3);
  dup << 1, 1, 0, 0, 0, 1;
  EXPECT_NEAR(empirical_rip(dup, 2, RipMode::exhaustive).min_sigma_min, 0.0, 1e-15);

  EXPECT_THROW(empirical_rip(Matrix::Identity(3, 3), 4, RipMode::exhaustive), InputError);
  EXPECT_THROW(
      empirical_rip(generate_matrix({EnsembleKind::gaussian, 10, 200, true, 1}), 5,
                    RipMode::exhaustive),
      BudgetError);
}

TEST(EmpiricalRip, ExhaustiveMatchesBruteForce) {
  const Matrix a = generate_matrix({EnsembleKind::gaussian, 30, 12, true, 5});
  const RipReport r = empirical_rip(a, 3, RipMode::exhaustive);
  const auto [lo, hi] = brute_force_rip(a, 3);
  EXPECT_EQ(r.subsets_checked, 220u);
  EXPECT_NEAR(r.min_sigma_min, lo, 1e-12);
  EXPECT_NEAR(r.max_sigma_max, hi, 1e-12);
  EXPECT_LE(r.min_sigma_min, r.max_sigma_max);
}

TEST(EmpiricalRip, SampledIsDeterministicAndInsideExhaustive) {
  const Matrix a = generate_matrix({EnsembleKind::gaussian, 20, 15, true, 6});
  const RipReport ex = empirical_rip(a, 3, RipMode::exhaustive);
  const RipReport s1 = empirical_rip(a, 3, RipMode::sampled, 200, 1);
  const RipReport s2 = empirical_rip(a, 3, RipMode::sampled, 200, 1);
  EXPECT_EQ(s1.min_sigma_min, s2.min_sigma_min);
  EXPECT_EQ(s1.max_sigma_max, s2.max_sigma_max);
  EXPECT_GE(s1.min_sigma_min, ex.min_sigma_min - 1e-14);
  EXPECT_LE(s1.max_sigma_max, ex.max_sigma_max + 1e-14);
  EXPECT_LE(s1.delta_hat, ex.delta_hat + 1e-14);
}

TEST(BoundCalculators, Examples) {
  BoundInputs in;
  in.s = 2;
  in.delta = 0.5;
  const BoundRecord r = bound_calculators(in);
  EXPECT_NEAR(r.L_sparse, std::sqrt(2.0) * 4.0, 1e-12);
  EXPECT_NEAR(r.L_no_sparsity, 6.0 * 1.5 * std::sqrt(2.0) * 8.0, 1e-12);
  EXPECT_EQ(r.foucart_cap, 648);
  EXPECT_EQ(r.t_foucart, 649);

  in.s = 4;
  in.delta = 0.5;
  EXPECT_NEAR(bound_calculators(in).L_sparse, 8.0, 1e-12);
  EXPECT_NEAR(bound_calculators(in).L_no_sparsity, 144.0, 1e-12);
  in.s = 1;
  in.delta = 0.1;
  EXPECT_EQ(bound_calculators(in).foucart_cap, 53);
  in.delta = 1e-12;
  EXPECT_EQ(bound_calculators(in).t_foucart, 37);
  EXPECT_NEAR(bound_calculators(in).lambda_threshold_factor, 2.0, 1e-11);
}

TEST(BoundCalculators, SampleComplexityFormula) {
  BoundInputs in;
  in.s = 3;
  in.n = 200;
  in.delta = 0.4;
  in.epsilon = 0.05;
  in.beta = 2.0;
  in.c_abs = 1.5;
  const double complexity = 3.0 * std::log(std::exp(1.0) * 200.0 / 3.0) + std::log(3.0 / 0.05);
  const double expect = 1.5 / 0.16 * 4.0 * std::log(2.0) * complexity;
  EXPECT_NEAR(bound_calculators(in).m_min_sparse, expect, 1e-9 * expect);
}

TEST(BoundCalculators, MonotoneInDelta) {
  BoundInputs in;
  in.s = 5;
  double prev_l = 0.0, prev_cap = 0.0, prev_m = std::numeric_limits<double>::infinity();
  for (double d = 0.05; d < 0.5; d += 0.05) {
    in.delta = d;
    const BoundRecord r = bound_calculators(in);
    EXPECT_GT(r.L_sparse, prev_l);
    EXPECT_GE(static_cast<double>(r.foucart_cap), prev_cap);
    EXPECT_LT(r.m_min_sparse, prev_m);
    prev_l = r.L_sparse;
    prev_cap = static_cast<double>(r.foucart_cap);
    prev_m = r.m_min_sparse;
  }
}

TEST(BoundCalculators, Validation) {
  BoundInputs in;
  in.delta = 1.0;
  EXPECT_THROW(bound_calculators(in), InputError);
  in.delta = 0.5;
  in.epsilon = 0.0;
  EXPECT_THROW(bound_calculators(in), InputError);
  in.epsilon = 0.1;
  in.beta = 1.0;
  EXPECT_THROW(bound_calculators(in), InputError);
}

TEST(FoucartCheck, IdentityHasSmallSupport) {
  Vector b(4);
  b << 3, 0.2, -2, 0.1;
  const FoucartCheck c = foucart_sparsity_check(Matrix::Identity(4, 4), b, 0.5, 1, 0.5);
  EXPECT_EQ(c.observed_sparsity, 2);
  EXPECT_EQ(c.predicted_cap, 324);
  EXPECT_TRUE(c.satisfied);
}

TEST(Decorrelate, ReachesTarget) {
  const Matrix a = normalize_columns(generate_matrix({EnsembleKind::gaussian, 20, 40, false, 1}));
  EXPECT_GT(coherence(a), 0.3);
  const Matrix d = decorrelate_columns(a, 0.3);
  EXPECT_LE(coherence(d), 0.3);
  for (Index j = 0; j < 40; ++j) EXPECT_NEAR(d.col(j).norm(), 1.0, 1e-12);
}

TEST(IncoherentInstance, MeetsConditionAndIsDeterministic) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const SparseInstance g = incoherent_instance(20, 40, 2, seed);
    EXPECT_LT(2.0, 0.5 * (1.0 + 1.0 / coherence(g.a)));
    EXPECT_EQ(support(g.x0, 0.0).size(), 2u);
    EXPECT_EQ(g.a, incoherent_instance(20, 40, 2, seed).a);
  }
}

TEST(LambdaGrid, GeometricAroundCenter) {
  ExperimentConfig c = small_config();
  c.lambda_grid.center = 0.2;
  c.lambda_grid.log_span = 100.0;
  const auto v = lambda_values(c);
  ASSERT_EQ(v.size(), 21u);
  EXPECT_NEAR(v.front(), 0.02, 1e-15);
  EXPECT_NEAR(v.back(), 2.0, 1e-14);
  EXPECT_NEAR(v[10], 0.2, 1e-15);
  for (std::size_t k = 1; k < v.size(); ++k) EXPECT_GT(v[k], v[k - 1]);
  c.lambda_grid.count = 2;
  EXPECT_THROW(lambda_values(c), InputError);
}

TEST(Sweep, RowInvariants) {
  const ExperimentConfig c = small_config();
  const SweepResult r = run_lambda_sweep(c);
  ASSERT_EQ(r.rows.size(), 21u);
  const SweepRow& star = r.rows[r.index_star];
  EXPECT_EQ(star.error, 0.0);
  if (star.bound) {
    EXPECT_EQ(*star.bound, 0.0);
  }
  for (std::size_t k = 0; k < r.rows.size(); ++k) {
    if (k < r.index_star) {
      EXPECT_GT(r.rows[k].truth_error, star.truth_error);
    } else if (k > r.index_star) {
      EXPECT_GE(r.rows[k].truth_error, star.truth_error);
    }
  }
  EXPECT_EQ(r.lambda_star, star.lambda);
  if (r.L_bound) {
    for (std::size_t k = 0; k < r.rows.size(); ++k) {
      const std::size_t dist = k > r.index_star ? k - r.index_star : r.index_star - k;
      if (dist <= r.validity_steps) {
        EXPECT_GE(*r.rows[k].bound, r.rows[k].error);
      }
    }
  }
}

TEST(Sweep, Deterministic) {
  const ExperimentConfig c = small_config();
  const SweepResult a = run_lambda_sweep(c);
  const SweepResult b = run_lambda_sweep(c);
  ASSERT_EQ(a.rows.size(), b.rows.size());
  for (std::size_t k = 0; k < a.rows.size(); ++k) {
    EXPECT_EQ(a.rows[k].error, b.rows[k].error);
    EXPECT_EQ(a.rows[k].truth_error, b.rows[k].truth_error);
  }
  EXPECT_EQ(a.delta_hat, b.delta_hat);
}

TEST(Sweep, SignalModels) {
  ExperimentConfig c = small_config();
  c.signal_model = SignalModel::unit;
  EXPECT_EQ(sweep_data(c).x0.head(2), Vector::Ones(2));
  c.signal_model = SignalModel::custom;
  c.custom_signal = Vector::Zero(3);
  EXPECT_THROW(sweep_data(c), InputError);
  c.custom_signal = Vector::Zero(60);
  c.custom_signal(5) = 2.0;
  EXPECT_EQ(sweep_data(c).x0, c.custom_signal);
}
