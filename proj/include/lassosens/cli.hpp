#pragma once

// Command-line front end. `run` parses arguments, dispatches to one
// subcommand and returns the process exit status:
//   0  success (demo-counterexample: every replayed claim holds)
//   1  a library error; a JSON error document is written to `err`
//   2  invalid invocation (bad flags, unreadable input, unwritable output)

#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "lassosens/cs_experiments.hpp"
#include "lassosens/io.hpp"
#include "lassosens/lasso_solver.hpp"
#include "lassosens/sensitivity.hpp"

namespace lassosens::cli {

using io::json;

namespace detail {

struct InvocationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline void require_readable(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvocationError("cannot read " + path);
}

inline void require_writable(const std::string& path) {
  if (path.empty() || path == "-") return;
  std::ofstream out(path, std::ios::app);
  if (!out) throw InvocationError("cannot write " + path);
}

inline void emit(const std::string& path, const std::string& text, std::ostream& out) {
  if (path.empty() || path == "-") {
    out << text;
    return;
  }
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw InvocationError("cannot write " + path);
  f << text;
}

inline void emit_json(const std::string& path, const json& j, std::ostream& out) {
  emit(path, j.dump(2) + "\n", out);
}

struct Common {
  std::string a_path;
  std::string b_path;
  double lambda = 0.0;
  std::string out_path;
  Tolerances tols;
  int max_iter = 200000;
};

inline void add_problem_flags(CLI::App* sub, Common& c) {
  sub->add_option("--A", c.a_path, "measurement matrix (CSV)")->required();
  sub->add_option("--b", c.b_path, "measurement vector (CSV)")->required();
  sub->add_option("--lambda", c.lambda, "regularization parameter (> 0)")->required();
}

inline void add_tolerance_flags(CLI::App* sub, Common& c) {
  sub->add_option("--tol", c.tols.tol, "relative duality-gap tolerance");
  sub->add_option("--eps-supp", c.tols.eps_supp, "support threshold");
  sub->add_option("--eps-eq", c.tols.eps_eq, "equicorrelation relative tolerance");
  sub->add_option("--eps-strict", c.tols.eps_strict, "strict-inequality relative margin");
  sub->add_option("--max-iter", c.max_iter, "solver iteration cap");
  sub->add_option("--out", c.out_path, "output file (default stdout)");
}

inline ProblemInstance load_problem(const Common& c) {
  return ProblemInstance(io::read_matrix(c.a_path), io::read_vector(c.b_path), c.lambda);
}

inline LassoSolution solve_problem(const ProblemInstance& inst, const Common& c) {
  SolveOptions opts;
  opts.tolerances = c.tols;
  opts.max_iter = c.max_iter;
  return solve(inst, opts);
}

struct Claim {
  std::string name;
  bool pass;
  std::string detail;
};

inline std::string fmt(double v) { return io::format_double(v); }

/// Replays every claim of the 2 x 3 counterexample with b = (1, 1).
inline json demo_counterexample(const Tolerances& tols, bool& all_pass) {
  Matrix a(2, 3);
  a << 1, 0, 2, 0, 2, -2;
  Vector b(2);
  b << 1, 1;
  std::vector<Claim> claims;
  auto claim = [&](std::string name, bool pass, std::string detail) {
    claims.push_back({std::move(name), pass, std::move(detail)});
  };
  SolveOptions opts;
  opts.tolerances = tols;

  // lambda = 1: unique solution, weak holds, strong and intermediate fail.
  const ProblemInstance inst1(a, b, 1.0);
  const LassoSolution sol1 = solve(inst1, opts);
  Vector expect1(3);
  expect1 << 0.0, 0.25, 0.0;
  claim("unique_solution_lambda_1", (sol1.x - expect1).lpNorm<Eigen::Infinity>() <= 1e-6,
        "x = (" + fmt(sol1.x(0)) + ", " + fmt(sol1.x(1)) + ", " + fmt(sol1.x(2)) + ")");
  const AssumptionReport rep1 = check_assumptions(inst1, sol1, tols);
  claim("weak_holds_lambda_1", rep1.weak == WeakVerdict::holds && rep1.weak_value <= 0.5,
        std::string("weak = ") + to_string(rep1.weak) + ", ||A_Ic^T y||_inf = " + fmt(rep1.weak_value));
  claim("strong_fails_lambda_1", !rep1.strong && std::abs(rep1.strong_margin) <= 1e-8,
        "strong_margin = " + fmt(rep1.strong_margin));
  claim("intermediate_fails_lambda_1", !rep1.intermediate && rep1.equicorrelation.size() == 3,
        "|J| = " + std::to_string(rep1.equicorrelation.size()) + ", rank(A_J) = " +
            std::to_string(rep1.rank_J));
  {
    Vector y(2);
    y << 0.5, 0.5;
    const double ai_y = a.col(1).dot(y);
    const double off = std::max(std::abs(a.col(0).dot(y)), std::abs(a.col(2).dot(y)));
    claim("certificate_y_half_half", std::abs(ai_y - 1.0) <= 1e-15 && std::abs(off - 0.5) <= 1e-15,
          "A_I^T y = " + fmt(ai_y) + ", ||A_Ic^T y||_inf = " + fmt(off));
  }

  // lambda = 0.5: a segment of solutions sharing residual and l1 norm.
  const double lam = 0.5;
  const ProblemInstance inst05(a, b, lam);
  {
    Vector ref;
    double ref_obj = 0.0, ref_l1 = 0.0, worst_res = 0.0, worst_diff = 0.0;
    for (int k = 0; k < 10; ++k) {
      const double t = 0.025 * k;  // t in [0, (1 - lambda) / 2)
      Vector x(3);
      x << 1.0 - lam - 2.0 * t, (2.0 - lam + 4.0 * t) / 4.0, t;
      const Vector r = b - a * x;
      worst_res = std::max(worst_res, optimality_residual(inst05, x));
      if (k == 0) {
        ref = r;
        ref_obj = objective(inst05, x);
        ref_l1 = x.lpNorm<1>();
      } else {
        worst_diff = std::max({worst_diff, (r - ref).lpNorm<Eigen::Infinity>(),
                               std::abs(objective(inst05, x) - ref_obj),
                               std::abs(x.lpNorm<1>() - ref_l1)});
      }
    }
    claim("nonunique_family_lambda_0.5", worst_res <= 1e-10 && worst_diff <= 1e-12,
          "max optimality residual " + fmt(worst_res) + ", max spread " + fmt(worst_diff));
    Vector xl(3);
    xl << 1.0 - lam, (2.0 - lam) / 4.0, 0.0;
    const AssumptionReport rep = check_assumptions(inst05, make_solution(inst05, xl, 0, tols), tols);
    claim("weak_violated_lambda_0.5", rep.weak != WeakVerdict::holds,
          std::string("weak = ") + to_string(rep.weak) + ", LP optimum " + fmt(rep.weak_value));
  }

  // lambda = 1.5: strong regime with x(lambda) = (0, (2 - lambda)/4, 0).
  const ProblemInstance inst15(a, b, 1.5);
  const LassoSolution sol15 = solve(inst15, opts);
  Vector expect15(3);
  expect15 << 0.0, 0.125, 0.0;
  claim("solution_lambda_1.5", (sol15.x - expect15).lpNorm<Eigen::Infinity>() <= 1e-6,
        "x = (" + fmt(sol15.x(0)) + ", " + fmt(sol15.x(1)) + ", " + fmt(sol15.x(2)) + ")");
  const AssumptionReport rep15 = check_assumptions(inst15, sol15, tols);
  claim("strong_holds_lambda_1.5", rep15.strong && std::abs(rep15.strong_margin - 0.5) <= 1e-8,
        "strong_margin = " + fmt(rep15.strong_margin));
  const Vector dx = derivative_strong(inst15, sol15, Vector::Zero(2), 1.0, tols);
  Vector expect_dx(3);
  expect_dx << 0.0, -0.25, 0.0;
  claim("dS_dlambda_lambda_1.5", (dx - expect_dx).lpNorm<Eigen::Infinity>() <= 1e-10,
        "dS/dlambda = (" + fmt(dx(0)) + ", " + fmt(dx(1)) + ", " + fmt(dx(2)) + ")");
  const SensitivityReport sens = lipschitz_bounds(inst15, sol15, rep15);
  claim("lipschitz_lambda_lambda_1.5", std::abs(sens.lipschitz_lambda - 0.25) <= 1e-12,
        "lipschitz_lambda = " + fmt(sens.lipschitz_lambda));

  all_pass = true;
  json arr = json::array();
  for (const Claim& c : claims) {
    all_pass = all_pass && c.pass;
    arr.push_back({{"name", c.name}, {"pass", c.pass}, {"detail", c.detail}});
  }
  return {{"schema_version", io::kSchemaVersion},
          {"unique_solution_lambda_1", io::to_json(sol1.x)},
          {"solution_lambda_1_5", io::to_json(sol15.x)},
          {"dS_dlambda_lambda_1_5", io::to_json(dx)},
          {"assumptions_lambda_1", io::to_json(rep1)},
          {"assumptions_lambda_1_5", io::to_json(rep15)},
          {"claims", arr},
          {"all_pass", all_pass}};
}

}  // namespace detail

inline int run(const std::vector<std::string>& args, std::ostream& out = std::cout,
               std::ostream& err = std::cerr) {
  using namespace detail;
  CLI::App app{"LASSO solver and solution-map sensitivity toolkit", "lassosens"};
  app.require_subcommand(1, 1);

  Common common;

  auto* solve_cmd = app.add_subcommand("solve", "solve one LASSO problem");
  add_problem_flags(solve_cmd, common);
  add_tolerance_flags(solve_cmd, common);

  auto* analyze_cmd = app.add_subcommand("analyze", "assumption tiers and Lipschitz bounds");
  add_problem_flags(analyze_cmd, common);
  add_tolerance_flags(analyze_cmd, common);

  std::string q_path;
  double alpha = 0.0;
  auto* deriv_cmd = app.add_subcommand("derivative", "directional derivative in (q, alpha)");
  add_problem_flags(deriv_cmd, common);
  add_tolerance_flags(deriv_cmd, common);
  deriv_cmd->add_option("--q", q_path, "direction in b (CSV, default zero)");
  deriv_cmd->add_option("--alpha", alpha, "direction in lambda");

  std::string config_path, csv_path, sidecar_path;
  auto* sweep_cmd = app.add_subcommand("sweep", "lambda sweep on a random ensemble");
  sweep_cmd->add_option("--config", config_path, "ExperimentConfig JSON")->required();
  sweep_cmd->add_option("--out-csv", csv_path, "rows lambda,error,bound,ratio")->required();
  sweep_cmd->add_option("--out-json", sidecar_path, "summary sidecar")->required();

  std::string rip_a_path, rip_kind = "gaussian", rip_mode = "exhaustive";
  Index rip_m = 0, rip_n = 0, rip_s = 0;
  std::uint64_t rip_seed = 0, rip_count = 10000, rip_sample_seed = 0;
  bool rip_raw = false;
  auto* rip_cmd = app.add_subcommand("rip", "extremal singular values of s-column submatrices");
  rip_cmd->add_option("--A", rip_a_path, "matrix CSV (otherwise generated)");
  rip_cmd->add_option("--kind", rip_kind, "gaussian | rademacher");
  rip_cmd->add_option("--m", rip_m, "rows of the generated matrix");
  rip_cmd->add_option("--n", rip_n, "columns of the generated matrix");
  rip_cmd->add_option("--seed", rip_seed, "generator seed");
  rip_cmd->add_flag("--unnormalized", rip_raw, "do not divide by sqrt(m)");
  rip_cmd->add_option("--s", rip_s, "sparsity order")->required();
  rip_cmd->add_option("--mode", rip_mode, "exhaustive | sampled");
  rip_cmd->add_option("--count", rip_count, "subsets drawn in sampled mode");
  rip_cmd->add_option("--sample-seed", rip_sample_seed, "seed for subset sampling");
  rip_cmd->add_option("--out", common.out_path, "output file (default stdout)");

  BoundInputs bounds;
  auto* bounds_cmd = app.add_subcommand("bounds", "high-probability bound calculators");
  bounds_cmd->add_option("--s", bounds.s, "sparsity")->required();
  bounds_cmd->add_option("--delta", bounds.delta, "RIP distortion in (0,1)")->required();
  bounds_cmd->add_option("--n", bounds.n, "ambient dimension");
  bounds_cmd->add_option("--m", bounds.m, "measurements");
  bounds_cmd->add_option("--epsilon", bounds.epsilon, "failure probability in (0,1)");
  bounds_cmd->add_option("--beta", bounds.beta, "subgaussian norm bound");
  bounds_cmd->add_option("--C", bounds.c_abs, "absolute constant");
  bounds_cmd->add_option("--out", common.out_path, "output file (default stdout)");

  std::string fuchs_a, fuchs_x0;
  std::optional<double> fuchs_lambda;
  Index fuchs_m = 20, fuchs_n = 40, fuchs_s = 2;
  std::uint64_t fuchs_seed = 1;
  auto* fuchs_cmd = app.add_subcommand("fuchs", "explicit incoherent solution vs. solver");
  fuchs_cmd->add_option("--A", fuchs_a, "unit-column matrix CSV (otherwise generated)");
  fuchs_cmd->add_option("--x0", fuchs_x0, "sparse signal CSV (required with --A)");
  fuchs_cmd->add_option("--lambda", fuchs_lambda, "lambda (default lambda_max / 2)");
  fuchs_cmd->add_option("--m", fuchs_m, "rows of the generated matrix");
  fuchs_cmd->add_option("--n", fuchs_n, "columns of the generated matrix");
  fuchs_cmd->add_option("--s", fuchs_s, "sparsity of the generated signal");
  fuchs_cmd->add_option("--seed", fuchs_seed, "generator seed");
  add_tolerance_flags(fuchs_cmd, common);

  auto* demo_cmd = app.add_subcommand("demo-counterexample",
                                      "replay the 2x3 uniqueness/nondegeneracy example");
  add_tolerance_flags(demo_cmd, common);

  std::vector<std::string> argv_store;
  argv_store.reserve(args.size() + 1);
  argv_store.push_back("lassosens");
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& s : argv_store) argv.push_back(s.data());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }

  try {
    // Invocation checks happen before any work.
    if (*solve_cmd || *analyze_cmd || *deriv_cmd) {
      require_readable(common.a_path);
      require_readable(common.b_path);
      if (!q_path.empty()) require_readable(q_path);
      require_writable(common.out_path);
    } else if (*sweep_cmd) {
      require_readable(config_path);
      require_writable(csv_path);
      require_writable(sidecar_path);
    } else if (*rip_cmd) {
      if (!rip_a_path.empty()) require_readable(rip_a_path);
      else if (rip_m <= 0 || rip_n <= 0)
        throw InvocationError("rip: give --A or both --m and --n");
      if (rip_mode != "exhaustive" && rip_mode != "sampled")
        throw InvocationError("rip: --mode must be exhaustive or sampled");
      require_writable(common.out_path);
    } else if (*fuchs_cmd) {
      if (!fuchs_a.empty()) {
        if (fuchs_x0.empty()) throw InvocationError("fuchs: --x0 is required with --A");
        require_readable(fuchs_a);
        require_readable(fuchs_x0);
      }
      require_writable(common.out_path);
    } else {
      require_writable(common.out_path);
    }
  } catch (const InvocationError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }

  try {
    if (*solve_cmd) {
      const ProblemInstance inst = load_problem(common);
      emit_json(common.out_path, io::to_json(solve_problem(inst, common)), out);
    } else if (*analyze_cmd) {
      const ProblemInstance inst = load_problem(common);
      const LassoSolution sol = solve_problem(inst, common);
      json j = io::to_json(analyze(inst, sol, common.tols));
      j["lambda"] = io::number(inst.lambda());
      j["solution"] = io::to_json(sol);
      emit_json(common.out_path, j, out);
    } else if (*deriv_cmd) {
      const ProblemInstance inst = load_problem(common);
      const LassoSolution sol = solve_problem(inst, common);
      const Vector q = q_path.empty() ? Vector(Vector::Zero(inst.m())) : io::read_vector(q_path);
      json j = io::to_json(directional_derivative(inst, sol, q, alpha, common.tols));
      j["alpha"] = io::number(alpha);
      j["q"] = io::to_json(q);
      j["x"] = io::to_json(sol.x);
      emit_json(common.out_path, j, out);
    } else if (*sweep_cmd) {
      const ExperimentConfig cfg = io::config_from_json(io::read_json(config_path));
      const SweepResult res = run_lambda_sweep(cfg);
      std::ostringstream csv;
      io::write_sweep_csv(csv, res);
      emit(csv_path, csv.str(), out);
      json side = io::to_json(res);
      side["config"] = io::to_json(cfg);
      emit_json(sidecar_path, side, out);
    } else if (*rip_cmd) {
      const Matrix a = !rip_a_path.empty()
                           ? io::read_matrix(rip_a_path)
                           : generate_matrix({io::ensemble_kind_from(rip_kind), rip_m, rip_n,
                                              !rip_raw, rip_seed});
      const RipMode mode = rip_mode == "sampled" ? RipMode::sampled : RipMode::exhaustive;
      emit_json(common.out_path, io::to_json(empirical_rip(a, rip_s, mode, rip_count, rip_sample_seed)),
                out);
    } else if (*bounds_cmd) {
      json j = io::to_json(bound_calculators(bounds));
      j["inputs"] = {{"s", bounds.s},         {"n", bounds.n},
                     {"m", bounds.m},         {"delta", bounds.delta},
                     {"epsilon", bounds.epsilon}, {"beta", bounds.beta}};
      emit_json(common.out_path, j, out);
    } else if (*fuchs_cmd) {
      Matrix a;
      Vector x0;
      if (!fuchs_a.empty()) {
        a = io::read_matrix(fuchs_a);
        x0 = io::read_vector(fuchs_x0);
      } else {
        SparseInstance gen = incoherent_instance(fuchs_m, fuchs_n, fuchs_s, fuchs_seed);
        a = std::move(gen.a);
        x0 = std::move(gen.x0);
      }
      const FuchsResult probe = fuchs_explicit(a, x0, 0.0);
      const double lam = fuchs_lambda.value_or(
          std::isinf(probe.lambda_max) ? 1.0 : 0.5 * probe.lambda_max);
      const FuchsResult fr = fuchs_explicit(a, x0, lam);
      json j = {{"schema_version", io::kSchemaVersion},
                {"lambda", io::number(lam)},
                {"lambda_max", io::number(fr.lambda_max)},
                {"coherence", io::number(fr.coherence)},
                {"condition_ok", fr.condition_ok},
                {"support", io::to_json(fr.support)},
                {"x_bar", io::to_json(fr.x_bar)}};
      if (lam > 0.0) {
        const ProblemInstance inst(a, a * x0, lam);
        const LassoSolution sol = solve_problem(inst, common);
        const double diff = (sol.x - fr.x_bar).lpNorm<Eigen::Infinity>();
        const bool strong = check_assumptions(inst, sol, common.tols).strong;
        const Matrix a_i = columns(a, fr.support);
        const double smin = svd_extremes(a_i).sigma_min_pos;
        const double dnorm = fr.dlambda.norm();
        const double dbound = std::sqrt(static_cast<double>(fr.support.size())) / (smin * smin);
        j["x_solver"] = io::to_json(sol.x);
        j["max_abs_diff"] = io::number(diff);
        j["strong"] = strong;
        j["dlambda_norm"] = io::number(dnorm);
        j["dlambda_bound"] = io::number(dbound);
        j["agree"] = diff <= 1e-6 && strong && dnorm <= dbound * (1.0 + 1e-12);
      }
      emit_json(common.out_path, j, out);
    } else if (*demo_cmd) {
      bool all_pass = false;
      emit_json(common.out_path, demo_counterexample(common.tols, all_pass), out);
      return all_pass ? 0 : 1;
    }
  } catch (const Error& e) {
    err << json{{"schema_version", io::kSchemaVersion}, {"error", e.kind()}, {"message", e.what()}}
               .dump()
        << "\n";
    return 1;
  } catch (const InvocationError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}

}  // namespace lassosens::cli
