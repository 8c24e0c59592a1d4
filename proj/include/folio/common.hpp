#pragma once

// Shared error types and small numeric/string helpers used across the library.

#include <charconv>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include <Eigen/Core>

namespace folio {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Base class for all errors raised by the library.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Malformed or inconsistent input data (CSV contents, shapes, dates).
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Invalid or contradictory configuration values.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// An optimizer could not produce a usable solution.
class SolverError : public Error {
 public:
  using Error::Error;
};

/// Raised by the max-Sharpe solver when no asset has positive expected return.
class NoPositiveReturnError : public SolverError {
 public:
  explicit NoPositiveReturnError(const std::string& what) : SolverError(what) {}
};

/// Raised when an iterative solver exhausts its iteration budget. Carries the
/// last iterate so callers can inspect how far the solve progressed.
class NonConvergenceError : public SolverError {
 public:
  NonConvergenceError(const std::string& what, VectorXd last_iterate)
      : SolverError(what), last_iterate_(std::move(last_iterate)) {}

  const VectorXd& last_iterate() const { return last_iterate_; }

 private:
  VectorXd last_iterate_;
};

/// Shortest decimal string that round-trips to the same double.
inline std::string format_double(double x) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

/// Strict double parse: the whole token must be consumed. Returns nullopt on
/// any trailing garbage, empty input, or out-of-range value.
inline std::optional<double> parse_double(std::string_view tok) {
  if (tok.empty()) return std::nullopt;
  double value = 0.0;
  auto res = std::from_chars(tok.data(), tok.data() + tok.size(), value);
  if (res.ec != std::errc() || res.ptr != tok.data() + tok.size()) return std::nullopt;
  return value;
}

inline bool approx_equal(double a, double b, double tol) { return std::abs(a - b) <= tol; }

/// Sum of a weight vector minus one; used when checking simplex membership.
inline double simplex_gap(const VectorXd& w) { return w.sum() - 1.0; }

}  // namespace folio
