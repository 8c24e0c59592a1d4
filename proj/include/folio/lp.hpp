#pragma once

// Bounded-variable revised primal simplex:
//
//   minimize cᵀx  subject to  A x = b,  lower ≤ x ≤ upper,
//
// with upper bounds allowed to be +∞. The caller supplies a starting basic
// feasible solution (basis column indices plus the at-upper flags of the
// nonbasic variables); the CVaR solver constructs one in closed form, so no
// phase-1 is needed. The basis inverse is kept explicitly (the bases here are
// tiny, N+1 rows) with product-form updates and periodic refactorization.
// Dantzig pricing with lowest-index tie-breaking keeps runs deterministic;
// after a burst consecutive degenerate pivots the solver switches to Bland's
// rule, which cannot cycle.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include <Eigen/Dense>

#include "folio/common.hpp"

namespace folio {

struct LpProblem {
  MatrixXd A;      // m×n constraint matrix
  VectorXd b;      // m
  VectorXd c;      // n
  VectorXd lower;  // n, finite
  VectorXd upper;  // n, may contain +infinity
};

enum class LpStatus { optimal, unbounded, iteration_limit, bad_start };

struct LpSolution {
  LpStatus status = LpStatus::iteration_limit;
  VectorXd x;
  VectorXd duals;  // row multipliers y = c_Bᵀ B⁻¹ at the final basis
  double objective = 0.0;
};

/// `basis` lists the m basic columns; every other column starts at its lower
/// bound unless flagged in `at_upper`.
inline LpSolution solve_bounded_lp(const LpProblem& p, std::vector<Eigen::Index> basis,
                                   std::vector<std::uint8_t> at_upper) {
  const Eigen::Index m = p.A.rows();
  const Eigen::Index n = p.A.cols();
  const double inf = std::numeric_limits<double>::infinity();
  const double rc_tol = 1e-9 * (1.0 + p.c.cwiseAbs().maxCoeff());

  std::vector<std::uint8_t> is_basic(static_cast<std::size_t>(n), 0);
  for (const Eigen::Index j : basis) is_basic[static_cast<std::size_t>(j)] = 1;

  VectorXd x(n);
  for (Eigen::Index j = 0; j < n; ++j)
    x[j] = at_upper[static_cast<std::size_t>(j)] ? p.upper[j] : p.lower[j];

  MatrixXd b_inv;
  const auto refactor = [&]() {
    MatrixXd basis_mat(m, m);
    for (Eigen::Index k = 0; k < m; ++k) basis_mat.col(k) = p.A.col(basis[static_cast<std::size_t>(k)]);
    b_inv = basis_mat.partialPivLu().inverse();
    VectorXd rhs = p.b;
    for (Eigen::Index j = 0; j < n; ++j)
      if (!is_basic[static_cast<std::size_t>(j)] && x[j] != 0.0) rhs -= p.A.col(j) * x[j];
    const VectorXd x_b = b_inv * rhs;
    for (Eigen::Index k = 0; k < m; ++k) x[basis[static_cast<std::size_t>(k)]] = x_b[k];
  };
  refactor();
  for (Eigen::Index k = 0; k < m; ++k) {
    const Eigen::Index j = basis[static_cast<std::size_t>(k)];
    if (x[j] < p.lower[j] - 1e-7 || x[j] > p.upper[j] + 1e-7) {
      LpSolution bad;
      bad.status = LpStatus::bad_start;
      return bad;
    }
  }

  const int max_iter = 2000 + 40 * static_cast<int>(m + n);
  int degenerate_run = 0;
  bool bland = false;
  VectorXd y(m), d(m);
  for (int iter = 0; iter < max_iter; ++iter) {
    if (iter > 0 && iter % 64 == 0) refactor();
    // Duals and entering-variable pricing.
    VectorXd c_b(m);
    for (Eigen::Index k = 0; k < m; ++k) c_b[k] = p.c[basis[static_cast<std::size_t>(k)]];
    y.noalias() = b_inv.transpose() * c_b;

    Eigen::Index entering = -1;
    double best_violation = rc_tol;
    bool entering_increases = true;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (is_basic[static_cast<std::size_t>(j)]) continue;
      const double rc = p.c[j] - y.dot(p.A.col(j));
      const bool upper_flag = at_upper[static_cast<std::size_t>(j)] != 0;
      double violation = 0.0;
      if (!upper_flag && rc < -rc_tol)
        violation = -rc;
      else if (upper_flag && rc > rc_tol)
        violation = rc;
      else
        continue;
      if (bland) {
        entering = j;
        entering_increases = !upper_flag;
        break;
      }
      if (violation > best_violation) {
        best_violation = violation;
        entering = j;
        entering_increases = !upper_flag;
      }
    }
    if (entering < 0) {
      LpSolution sol;
      sol.status = LpStatus::optimal;
      sol.x = x;
      sol.duals = y;
      sol.objective = p.c.dot(x);
      return sol;
    }

    d.noalias() = b_inv * p.A.col(entering);
    // t = movement of the entering variable toward its opposite bound; basic
    // variable k moves by -sign·d_k·t.
    const double sign = entering_increases ? 1.0 : -1.0;
    double t_max = p.upper[entering] - p.lower[entering];  // bound flip distance
    Eigen::Index leaving_pos = -1;
    bool leaving_to_upper = false;
    for (Eigen::Index k = 0; k < m; ++k) {
      const double delta = -sign * d[k];
      const Eigen::Index j = basis[static_cast<std::size_t>(k)];
      double limit = inf;
      bool to_upper = false;
      if (delta < -1e-12) {
        limit = (x[j] - p.lower[j]) / (-delta);
      } else if (delta > 1e-12) {
        if (p.upper[j] == inf) continue;
        limit = (p.upper[j] - x[j]) / delta;
        to_upper = true;
      } else {
        continue;
      }
      limit = std::max(0.0, limit);
      const bool strictly_better = limit < t_max - 1e-12;
      const bool tie_lower_index =
          leaving_pos >= 0 && limit < t_max + 1e-12 &&
          j < basis[static_cast<std::size_t>(leaving_pos)];
      if (strictly_better || tie_lower_index) {
        t_max = std::min(t_max, limit);
        leaving_pos = k;
        leaving_to_upper = to_upper;
      }
    }
    if (t_max == inf || t_max > 1e290) {
      LpSolution sol;
      sol.status = LpStatus::unbounded;
      sol.x = x;
      sol.duals = y;
      return sol;
    }

    degenerate_run = (t_max <= 1e-12) ? degenerate_run + 1 : 0;
    if (degenerate_run > 100) bland = true;

    // Apply the step.
    x[entering] += sign * t_max;
    for (Eigen::Index k = 0; k < m; ++k) x[basis[static_cast<std::size_t>(k)]] -= sign * d[k] * t_max;

    if (leaving_pos < 0) {
      // Bound flip: entering variable traverses to its other bound.
      at_upper[static_cast<std::size_t>(entering)] = entering_increases ? 1 : 0;
      continue;
    }

    const Eigen::Index leaving = basis[static_cast<std::size_t>(leaving_pos)];
    x[leaving] = leaving_to_upper ? p.upper[leaving] : p.lower[leaving];
    at_upper[static_cast<std::size_t>(leaving)] = leaving_to_upper ? 1 : 0;
    is_basic[static_cast<std::size_t>(leaving)] = 0;
    is_basic[static_cast<std::size_t>(entering)] = 1;
    at_upper[static_cast<std::size_t>(entering)] = 0;
    basis[static_cast<std::size_t>(leaving_pos)] = entering;

    // Product-form update of B⁻¹ with the pivot element d[leaving_pos].
    const double pivot = d[leaving_pos];
    if (std::abs(pivot) < 1e-11) {
      refactor();
      continue;
    }
    b_inv.row(leaving_pos) /= pivot;
    for (Eigen::Index r = 0; r < m; ++r) {
      if (r == leaving_pos) continue;
      if (d[r] != 0.0) b_inv.row(r) -= d[r] * b_inv.row(leaving_pos);
    }
  }
  LpSolution sol;
  sol.status = LpStatus::iteration_limit;
  sol.x = x;
  sol.objective = p.c.dot(x);
  return sol;
}

}  // namespace folio
