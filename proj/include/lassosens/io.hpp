#pragma once

// File formats: dense CSV for matrices/vectors (no header, 17 significant
// digits) and JSON documents for configurations and reports. JSON never
// carries NaN/Inf literals; infinities are written as the strings "+inf"
// and "-inf".

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "lassosens/cs_experiments.hpp"
#include "lassosens/dense_linalg.hpp"
#include "lassosens/errors.hpp"
#include "lassosens/lasso_solver.hpp"
#include "lassosens/sensitivity.hpp"

namespace lassosens::io {

using nlohmann::json;

inline constexpr const char* kSchemaVersion = "1";

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline Matrix parse_csv_matrix(std::istream& in, const std::string& origin = "csv") {
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        std::size_t used = 0;
        const double v = std::stod(cell, &used);
        if (cell.find_first_not_of(" \t", used) != std::string::npos) throw std::invalid_argument(cell);
        row.push_back(v);
      } catch (const std::exception&) {
        throw InputError(origin + ":" + std::to_string(lineno) + ": cannot parse '" + cell + "'");
      }
    }
    if (!rows.empty() && row.size() != rows.front().size())
      throw InputError(origin + ":" + std::to_string(lineno) + ": ragged row");
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw InputError(origin + ": empty matrix");
  Matrix m(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j)
      m(static_cast<Index>(i), static_cast<Index>(j)) = rows[i][j];
  require_finite(m, origin.c_str());
  return m;
}

inline Matrix read_matrix(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path);
  return parse_csv_matrix(in, path);
}

/// A vector file is a single-column CSV; a single row is accepted too.
inline Vector read_vector(const std::string& path) {
  const Matrix m = read_matrix(path);
  if (m.cols() == 1) return m.col(0);
  if (m.rows() == 1) return m.row(0).transpose();
  throw InputError(path + ": expected a single-column vector");
}

inline void write_csv(std::ostream& out, const Matrix& m) {
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) {
      if (j) out << ',';
      out << format_double(m(i, j));
    }
    out << '\n';
  }
}

inline void write_matrix(const std::string& path, const Matrix& m) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path);
  write_csv(out, m);
}

inline void write_vector(const std::string& path, const Vector& v) {
  write_matrix(path, Matrix(v));
}

/// Finite doubles as numbers, infinities as "+inf"/"-inf", NaN as null.
inline json number(double v) {
  if (std::isnan(v)) return nullptr;
  if (std::isinf(v)) return v > 0 ? "+inf" : "-inf";
  return v;
}

inline json number(const std::optional<double>& v) {
  return v ? number(*v) : json(nullptr);
}

inline json to_json(const Vector& v) {
  json arr = json::array();
  for (Index i = 0; i < v.size(); ++i) arr.push_back(number(v(i)));
  return arr;
}

inline json to_json(const IndexSet& s) { return s.indices(); }

inline Vector vector_from_json(const json& j) {
  if (!j.is_array()) throw InputError("expected a JSON array of numbers");
  Vector v(static_cast<Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Index>(i)) = j[i].get<double>();
  return v;
}

inline json to_json(const LassoSolution& s) {
  return {{"schema_version", kSchemaVersion},
          {"x", to_json(s.x)},
          {"objective", number(s.objective)},
          {"dual_gap", number(s.dual_gap)},
          {"iterations", s.iterations},
          {"support", to_json(s.support)},
          {"equicorrelation", to_json(s.equicorrelation)}};
}

inline json to_json(const AssumptionReport& r) {
  return {{"weak", to_string(r.weak)},
          {"intermediate", r.intermediate},
          {"strong", r.strong},
          {"weak_certificate", r.weak_certificate ? to_json(*r.weak_certificate) : json(nullptr)},
          {"weak_value", number(r.weak_value)},
          {"strong_margin", number(r.strong_margin)},
          {"ranks", {{"I", r.rank_I}, {"J", r.rank_J}}},
          {"support", to_json(r.support)},
          {"equicorrelation", to_json(r.equicorrelation)}};
}

/// SensitivityReport fields; bound fields are null when no bound regime
/// applies (neither strong nor intermediate assumption holds).
inline json to_json(const Analysis& a) {
  json j = {{"schema_version", kSchemaVersion}, {"assumptions", to_json(a.assumptions)}};
  if (a.bounds) {
    const SensitivityReport& b = *a.bounds;
    j["mode"] = to_string(b.mode);
    j["lipschitz_bl"] = number(b.lipschitz_bl);
    j["lipschitz_lambda"] = number(b.lipschitz_lambda);
    j["lipschitz_A"] = number(b.lipschitz_A);
    j["sigma_min_I"] = number(b.sigma_min_I);
    j["sigma_max_I"] = number(b.sigma_max_I);
    j["sigma_min_J"] = number(b.sigma_min_J);
    j["sigma_max_J"] = number(b.sigma_max_J);
  } else {
    for (const char* k : {"mode", "lipschitz_bl", "lipschitz_lambda", "lipschitz_A",
                          "sigma_min_I", "sigma_max_I", "sigma_min_J", "sigma_max_J"})
      j[k] = nullptr;
  }
  return j;
}

inline json to_json(const DirectionalDerivativeResult& d) {
  return {{"schema_version", kSchemaVersion}, {"w", to_json(d.w)}, {"K", to_json(d.k)}};
}

inline json to_json(const RipReport& r) {
  json j = {{"schema_version", kSchemaVersion},
            {"s", r.s},
            {"mode", to_string(r.mode)},
            {"min_sigma_min", number(r.min_sigma_min)},
            {"max_sigma_max", number(r.max_sigma_max)},
            {"delta_hat", number(r.delta_hat)},
            {"subsets_checked", r.subsets_checked}};
  if (r.mode == RipMode::sampled) {
    j["sample_count"] = r.sample_count;
    j["seed"] = r.seed;
  }
  return j;
}

inline json to_json(const BoundRecord& b) {
  return {{"schema_version", kSchemaVersion},
          {"m_min_sparse", number(b.m_min_sparse)},
          {"m_min_no_sparsity", number(b.m_min_no_sparsity)},
          {"t_foucart", b.t_foucart},
          {"foucart_cap", b.foucart_cap},
          {"L_sparse", number(b.L_sparse)},
          {"L_no_sparsity", number(b.L_no_sparsity)},
          {"lambda_threshold_factor", number(b.lambda_threshold_factor)},
          {"C_abs", number(b.c_abs)}};
}

inline json to_json(const SweepResult& r) {
  return {{"schema_version", kSchemaVersion},
          {"seed", r.seed},
          {"trial_seed", r.trial_seed},
          {"lambda_star", number(r.lambda_star)},
          {"index_star", r.index_star},
          {"support_size_star", r.support_size_star},
          {"sigma_min_I", number(r.sigma_min_I)},
          {"full_rank_at_star", r.full_rank_at_star},
          {"L", number(r.L_bound)},
          {"strong_holds_at_star", r.strong_holds_at_star},
          {"inactive_correlation", number(r.inactive_correlation)},
          {"validity_steps", r.validity_steps},
          {"validity_lambda_lo", number(r.validity_lambda_lo)},
          {"validity_lambda_hi", number(r.validity_lambda_hi)},
          {"noise_norm", number(r.noise_norm)},
          {"b_norm", number(r.b_norm)},
          {"noise_precondition_ok", r.noise_precondition_ok},
          {"delta_hat", number(r.delta_hat)},
          {"grid_size", r.rows.size()}};
}

/// `lambda,error,bound,ratio`; bound and ratio are empty when no Lipschitz
/// bound is available and ratio is "+inf" at lambda*.
inline void write_sweep_csv(std::ostream& out, const SweepResult& r) {
  out << "lambda,error,bound,ratio\n";
  for (const SweepRow& row : r.rows) {
    out << format_double(row.lambda) << ',' << format_double(row.error) << ',';
    if (row.bound) out << format_double(*row.bound);
    out << ',';
    if (row.ratio) out << (std::isinf(*row.ratio) ? std::string("+inf") : format_double(*row.ratio));
    out << '\n';
  }
}

inline EnsembleKind ensemble_kind_from(const std::string& s) {
  if (s == "gaussian") return EnsembleKind::gaussian;
  if (s == "rademacher") return EnsembleKind::rademacher;
  throw InputError("unknown ensemble kind '" + s + "'");
}

/// Parses an ExperimentConfig document:
/// {"spec": {"kind", "m", "n", "normalized", "seed"}, "s", "gamma",
///  "lambda_grid": {"count", "center", "log_span"}, "trial_seed",
///  "signal_model": "paper"|"unit"|"custom", "custom_signal": [...],
///  "tol", "eps_supp", "eps_eq", "eps_strict", "rip_samples"}
inline ExperimentConfig config_from_json(const json& j) {
  try {
    ExperimentConfig c;
    const json& spec = j.at("spec");
    c.spec.kind = ensemble_kind_from(spec.value("kind", std::string("gaussian")));
    c.spec.m = spec.at("m").get<Index>();
    c.spec.n = spec.at("n").get<Index>();
    c.spec.normalized = spec.value("normalized", true);
    c.spec.seed = spec.value("seed", std::uint64_t{0});
    c.s = j.at("s").get<Index>();
    c.gamma = j.value("gamma", 0.1);
    if (j.contains("lambda_grid")) {
      const json& g = j.at("lambda_grid");
      c.lambda_grid.count = g.value("count", 501);
      if (g.contains("center") && !g.at("center").is_null())
        c.lambda_grid.center = g.at("center").get<double>();
      c.lambda_grid.log_span = g.value("log_span", 100.0);
    }
    c.trial_seed = j.value("trial_seed", std::uint64_t{1});
    const std::string model = j.value("signal_model", std::string("paper"));
    if (model == "paper") {
      c.signal_model = SignalModel::paper;
    } else if (model == "unit") {
      c.signal_model = SignalModel::unit;
    } else if (model == "custom") {
      c.signal_model = SignalModel::custom;
      c.custom_signal = vector_from_json(j.at("custom_signal"));
    } else {
      throw InputError("unknown signal_model '" + model + "'");
    }
    c.tolerances.tol = j.value("tol", c.tolerances.tol);
    c.tolerances.eps_supp = j.value("eps_supp", c.tolerances.eps_supp);
    c.tolerances.eps_eq = j.value("eps_eq", c.tolerances.eps_eq);
    c.tolerances.eps_strict = j.value("eps_strict", c.tolerances.eps_strict);
    c.rip_samples = j.value("rip_samples", c.rip_samples);
    validate(c);
    return c;
  } catch (const json::exception& e) {
    throw InputError(std::string("config: ") + e.what());
  }
}

inline json to_json(const ExperimentConfig& c) {
  json j = {{"spec",
             {{"kind", to_string(c.spec.kind)},
              {"m", c.spec.m},
              {"n", c.spec.n},
              {"normalized", c.spec.normalized},
              {"seed", c.spec.seed}}},
            {"s", c.s},
            {"gamma", c.gamma},
            {"lambda_grid",
             {{"count", c.lambda_grid.count},
              {"center", number(c.lambda_grid.center)},
              {"log_span", c.lambda_grid.log_span}}},
            {"trial_seed", c.trial_seed},
            {"signal_model", to_string(c.signal_model)},
            {"tol", c.tolerances.tol},
            {"eps_supp", c.tolerances.eps_supp},
            {"eps_eq", c.tolerances.eps_eq},
            {"eps_strict", c.tolerances.eps_strict},
            {"rip_samples", c.rip_samples}};
  if (c.signal_model == SignalModel::custom) j["custom_signal"] = to_json(c.custom_signal);
  return j;
}

inline json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw InputError(path + ": " + e.what());
  }
}

}  // namespace lassosens::io
