#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>

#include <Eigen/Dense>

namespace lassosens {

/// Base class of every error raised by the library. `kind()` is the stable
/// machine-readable tag written into CLI error documents.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual const char* kind() const noexcept { return "error"; }
};

class InputError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "input_error"; }
};

class DegenerateInputError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "degenerate_input"; }
};

class RankDeficiencyError : public Error {
 public:
  RankDeficiencyError(const std::string& what, std::size_t rank, std::size_t cols)
      : Error(what + " (numerical rank " + std::to_string(rank) + " < " +
              std::to_string(cols) + ")"),
        rank_(rank),
        cols_(cols) {}
  const char* kind() const noexcept override { return "rank_deficiency"; }
  std::size_t rank() const noexcept { return rank_; }
  std::size_t cols() const noexcept { return cols_; }

 private:
  std::size_t rank_;
  std::size_t cols_;
};

class NonConvergenceError : public Error {
 public:
  NonConvergenceError(const std::string& what, Eigen::VectorXd best, double gap)
      : Error(what), best_(std::move(best)), gap_(gap) {}
  const char* kind() const noexcept override { return "non_convergence"; }
  const Eigen::VectorXd& best_iterate() const noexcept { return best_; }
  double gap() const noexcept { return gap_; }

 private:
  Eigen::VectorXd best_;
  double gap_;
};

class PreconditionError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "precondition"; }
};

class UnsupportedRegimeError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "unsupported_regime"; }
};

/// Raised when an internal cross-check fails, usually a sign that the
/// classification tolerances are misconfigured for the instance.
class ConsistencyError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "internal_consistency"; }
};

class BudgetError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "budget_exceeded"; }
};

}  // namespace lassosens
