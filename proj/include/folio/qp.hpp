#pragma once

// Primal active-set solver for the capped-simplex quadratic programs behind
// MinVar, the variance frontier, and (via a frontier sweep) max-Sharpe:
//
//   minimize   ½ wᵀQw + gᵀw
//   subject to Σw = 1, optionally aᵀw = b, and 0 ≤ w ≤ cap.
//
// The working set holds bound constraints; each iteration solves the
// equality-constrained subproblem on the free coordinates with a nullspace
// reduction (QR for the nullspace basis, LDLT on the reduced Hessian) and
// either takes the longest feasible step toward its solution or releases the
// bound with the most negative multiplier. Q must be positive semidefinite;
// a hair of ridge regularization is added only when the reduced Hessian is
// numerically singular, so exact arithmetic results (e.g. diag(1,4) →
// (0.8, 0.2)) are reproduced to machine precision.

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "folio/common.hpp"
#include "folio/simplex.hpp"

namespace folio {

struct QpEquality {
  VectorXd a;
  double b = 0.0;
};

namespace detail {

enum class BoundState : unsigned char { free_var, at_lower, at_upper };

}  // namespace detail

/// Solves the capped-simplex QP described above. `warm_start` must be feasible
/// when supplied; it seeds both the iterate and the working set, which makes
/// frontier sweeps with slowly moving targets nearly free.
inline VectorXd solve_capped_qp(const MatrixXd& Q, const VectorXd& g, const VectorXd& caps,
                                const std::optional<QpEquality>& extra = {},
                                const VectorXd* warm_start = nullptr) {
  using detail::BoundState;
  const Eigen::Index n = Q.rows();
  const double bound_tol = 1e-11;
  const double mult_tol = 1e-10;

  // Feasible point on the slice aᵀw = b, built by blending the extreme fills.
  const auto blend_onto_slice = [&]() {
    const VectorXd w_min = greedy_fill(-extra->a, caps);
    const VectorXd w_max = greedy_fill(extra->a, caps);
    const double lo = extra->a.dot(w_min);
    const double hi = extra->a.dot(w_max);
    if (extra->b < lo - 1e-9 || extra->b > hi + 1e-9)
      throw SolverError("QP equality target " + format_double(extra->b) +
                        " outside feasible range [" + format_double(lo) + ", " +
                        format_double(hi) + "]");
    const double span = hi - lo;
    const double theta = span > 0.0 ? std::clamp((extra->b - lo) / span, 0.0, 1.0) : 0.0;
    return VectorXd((1.0 - theta) * w_min + theta * w_max);
  };

  VectorXd w;
  if (warm_start) {
    w = tidy_weights(*warm_start, BoundsSpec{caps});
    if (extra) {
      // A warm start from a neighboring solve usually sits on a different
      // slice aᵀw = b′. The active-set iteration never leaves the starting
      // slice, so repair the start by sliding it along the segment toward the
      // greedy extreme that can reach the target (a convex combination of
      // feasible points, hence still feasible).
      const double cur = extra->a.dot(w);
      if (std::abs(cur - extra->b) > 1e-12 * (1.0 + std::abs(extra->b))) {
        const VectorXd w_ext =
            greedy_fill(extra->b > cur ? VectorXd(extra->a) : VectorXd(-extra->a), caps);
        const double ext = extra->a.dot(w_ext);
        const double theta = ext != cur ? (extra->b - cur) / (ext - cur) : -1.0;
        if (theta >= 0.0 && theta <= 1.0 + 1e-12)
          w = (1.0 - std::min(theta, 1.0)) * w + std::min(theta, 1.0) * w_ext;
        else
          w = blend_onto_slice();
      }
    }
  } else if (!extra) {
    w = water_fill_equal(n, caps);
  } else {
    w = blend_onto_slice();
  }

  std::vector<BoundState> state(static_cast<std::size_t>(n), BoundState::free_var);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (w[i] <= bound_tol)
      state[static_cast<std::size_t>(i)] = BoundState::at_lower;
    else if (w[i] >= caps[i] - bound_tol)
      state[static_cast<std::size_t>(i)] = BoundState::at_upper;
  }

  const int eq_rows = extra ? 2 : 1;
  const int max_iter = 120 + 30 * static_cast<int>(n);
  for (int iter = 0; iter < max_iter; ++iter) {
    std::vector<Eigen::Index> free_idx;
    for (Eigen::Index i = 0; i < n; ++i)
      if (state[static_cast<std::size_t>(i)] == BoundState::free_var) free_idx.push_back(i);
    const auto f = static_cast<Eigen::Index>(free_idx.size());

    const VectorXd grad = Q * w + g;

    // Nullspace basis of the equality rows restricted to free coordinates.
    MatrixXd eq_f(f, eq_rows);
    for (Eigen::Index k = 0; k < f; ++k) {
      eq_f(k, 0) = 1.0;
      if (extra) eq_f(k, 1) = extra->a[free_idx[static_cast<std::size_t>(k)]];
    }
    VectorXd step = VectorXd::Zero(n);
    Eigen::ColPivHouseholderQR<MatrixXd> qr(eq_f);
    const Eigen::Index rank = f > 0 ? qr.rank() : 0;
    const Eigen::Index null_dim = f - rank;
    if (null_dim > 0) {
      const MatrixXd q_full = qr.householderQ();
      const MatrixXd z = q_full.rightCols(null_dim);
      MatrixXd q_ff(f, f);
      VectorXd grad_f(f);
      for (Eigen::Index r = 0; r < f; ++r) {
        grad_f[r] = grad[free_idx[static_cast<std::size_t>(r)]];
        for (Eigen::Index c = 0; c < f; ++c)
          q_ff(r, c) = Q(free_idx[static_cast<std::size_t>(r)], free_idx[static_cast<std::size_t>(c)]);
      }
      MatrixXd h = z.transpose() * q_ff * z;
      h = 0.5 * (h + h.transpose()).eval();
      const double h_scale = std::max(1e-300, h.diagonal().cwiseAbs().maxCoeff());
      Eigen::LDLT<MatrixXd> ldlt(h);
      if (ldlt.info() != Eigen::Success || ldlt.vectorD().minCoeff() <= 1e-12 * h_scale) {
        h.diagonal().array() += 1e-10 * h_scale + 1e-300;
        ldlt.compute(h);
      }
      const VectorXd p = ldlt.solve(-z.transpose() * grad_f);
      const VectorXd d_f = z * p;
      for (Eigen::Index k = 0; k < f; ++k) step[free_idx[static_cast<std::size_t>(k)]] = d_f[k];
    }

    if (step.lpNorm<Eigen::Infinity>() > 1e-13) {
      // Longest feasible step toward the subproblem optimum.
      double alpha = 1.0;
      Eigen::Index blocking = -1;
      bool block_at_upper = false;
      for (const Eigen::Index i : free_idx) {
        double limit = 2.0;
        bool upper = false;
        if (step[i] < 0.0)
          limit = w[i] / (-step[i]);
        else if (step[i] > 0.0) {
          limit = (caps[i] - w[i]) / step[i];
          upper = true;
        }
        if (limit < alpha - 1e-15) {
          alpha = std::max(0.0, limit);
          blocking = i;
          block_at_upper = upper;
        }
      }
      w += alpha * step;
      if (blocking >= 0) {
        state[static_cast<std::size_t>(blocking)] =
            block_at_upper ? BoundState::at_upper : BoundState::at_lower;
        w[blocking] = block_at_upper ? caps[blocking] : 0.0;
        continue;
      }
      // Full step taken: fall through to the multiplier check below.
    }

    // Multipliers: ν solves eq_fᵀ ν ≈ grad_f; bound multipliers are the
    // reduced gradients of the held coordinates.
    const VectorXd grad_now = Q * w + g;
    Eigen::Vector2d nu = Eigen::Vector2d::Zero();
    if (f > 0) {
      VectorXd grad_f(f);
      for (Eigen::Index k = 0; k < f; ++k) grad_f[k] = grad_now[free_idx[static_cast<std::size_t>(k)]];
      const VectorXd nu_solved = qr.solve(grad_f);
      for (int r = 0; r < eq_rows; ++r) nu[r] = nu_solved[r];
    } else {
      // Fully bound-constrained vertex: choose ν minimizing the violation.
      MatrixXd eq_all(n, eq_rows);
      for (Eigen::Index i = 0; i < n; ++i) {
        eq_all(i, 0) = 1.0;
        if (extra) eq_all(i, 1) = extra->a[i];
      }
      const VectorXd nu_solved = eq_all.colPivHouseholderQr().solve(grad_now);
      for (int r = 0; r < eq_rows; ++r) nu[r] = nu_solved[r];
    }

    double worst = mult_tol;
    Eigen::Index release = -1;
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto s = state[static_cast<std::size_t>(i)];
      if (s == BoundState::free_var) continue;
      double eta = grad_now[i] - nu[0] - (extra ? nu[1] * extra->a[i] : 0.0);
      if (s == BoundState::at_upper) eta = -eta;
      if (-eta > worst) {
        worst = -eta;
        release = i;
      }
    }
    if (release < 0) return tidy_weights(w, BoundsSpec{caps});
    state[static_cast<std::size_t>(release)] = BoundState::free_var;
  }
  throw SolverError("QP active-set did not converge");
}

}  // namespace folio
