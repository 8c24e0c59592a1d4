#pragma once

// Allocation strategies over the (optionally capped) long-only simplex:
//
//   EW        equal weights (water-filled under caps)
//   MinVar    global minimum variance, active-set QP
//   MV-S      maximum Sharpe ratio via golden-section over the frontier's
//             target-return parameter with parabolic refinement
//   RR-MaxRet highest in-sample mean return, greedy fill under caps
//   MinCVaR   scenario CVaR linear program, solved in dual form
//   ERC       equal risk contributions, cyclical coordinate descent
//   MD        maximum Portfolio Diversification Index, multi-start
//             Nelder-Mead in a softmax reparameterization
//
// plus trace_frontier for minimum-variance / minimum-CVaR frontiers.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "folio/common.hpp"
#include "folio/lp.hpp"
#include "folio/moments.hpp"
#include "folio/neldermead.hpp"
#include "folio/qp.hpp"
#include "folio/rng.hpp"
#include "folio/simplex.hpp"

namespace folio {

// ---------------------------------------------------------------------------
// Equal weight and max return
// ---------------------------------------------------------------------------

inline VectorXd solve_ew(Eigen::Index n, const std::optional<BoundsSpec>& bounds = {}) {
  if (n < 1) throw ValidationError("solve_ew: need at least one asset");
  const VectorXd caps = caps_or_ones(bounds, n);
  VectorXd w = water_fill_equal(n, caps);
  check_weights(w, bounds);
  return w;
}

/// Unit weight on the highest-mean asset (ties → lowest index); under caps,
/// assets are filled to their caps in descending order of mean return.
inline VectorXd solve_max_return(const MomentEstimates& est,
                                 const std::optional<BoundsSpec>& bounds = {}) {
  const VectorXd caps = caps_or_ones(bounds, est.mu.size());
  VectorXd w = greedy_fill(est.mu, caps);
  check_weights(w, bounds);
  return w;
}

// ---------------------------------------------------------------------------
// Minimum variance
// ---------------------------------------------------------------------------

inline VectorXd solve_min_var(const MomentEstimates& est,
                              const std::optional<BoundsSpec>& bounds = {}) {
  const Eigen::Index n = est.sigma_mat.rows();
  const VectorXd caps = caps_or_ones(bounds, n);
  VectorXd w = solve_capped_qp(est.sigma_mat, VectorXd::Zero(n), caps);
  w = tidy_weights(w, BoundsSpec{caps});
  check_weights(w, bounds);
  return w;
}

// ---------------------------------------------------------------------------
// Maximum Sharpe ratio
// ---------------------------------------------------------------------------

namespace detail {

/// Minimum variance subject to μᵀw = target, warm-startable.
inline VectorXd min_var_at_target(const MomentEstimates& est, const VectorXd& caps, double target,
                                  const VectorXd* warm) {
  QpEquality eq{est.mu, target};
  return solve_capped_qp(est.sigma_mat, VectorXd::Zero(est.mu.size()), caps, eq, warm);
}

inline double sharpe_of(const VectorXd& w, const MomentEstimates& est) {
  const double ret = est.mu.dot(w);
  const double var = w.dot(est.sigma_mat * w);
  const double vol = std::sqrt(std::max(var, 0.0));
  if (vol < 1e-150) return ret > 0.0 ? 1e150 * (1.0 + ret) : (ret < 0.0 ? -1e150 : 0.0);
  return ret / vol;
}

}  // namespace detail

/// Maximizes wᵀμ/√(wᵀΣw) over the feasible simplex. The frontier's upper
/// branch has a quasiconcave Sharpe ratio in the target return, so a
/// golden-section search over r_T (each evaluation one warm-started QP)
/// followed by parabolic refinement reaches 1e−6 relative objective accuracy.
inline VectorXd solve_max_sharpe(const MomentEstimates& est,
                                 const std::optional<BoundsSpec>& bounds = {}) {
  const Eigen::Index n = est.mu.size();
  if (est.mu.maxCoeff() <= 0.0)
    throw NoPositiveReturnError("no-positive-return: all mean returns are non-positive");
  const VectorXd caps = caps_or_ones(bounds, n);

  VectorXd best_w = solve_min_var(est, BoundsSpec{caps});
  double best_s = detail::sharpe_of(best_w, est);
  const double r_low = est.mu.dot(best_w);
  const VectorXd w_top = greedy_fill(est.mu, caps);
  const double r_high = est.mu.dot(w_top);
  if (const double s_top = detail::sharpe_of(w_top, est); s_top > best_s) {
    best_s = s_top;
    best_w = w_top;
  }

  if (r_high - r_low > 1e-14 * (1.0 + std::abs(r_high))) {
    VectorXd warm = best_w;
    const auto eval = [&](double r) {
      warm = detail::min_var_at_target(est, caps, r, &warm);
      const double s = detail::sharpe_of(warm, est);
      if (s > best_s) {
        best_s = s;
        best_w = warm;
      }
      return s;
    };
    const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
    double a = r_low, b = r_high;
    double x1 = b - phi * (b - a), x2 = a + phi * (b - a);
    double f1 = eval(x1), f2 = eval(x2);
    for (int iter = 0; iter < 30; ++iter) {
      if (f1 < f2) {
        a = x1;
        x1 = x2;
        f1 = f2;
        x2 = a + phi * (b - a);
        f2 = eval(x2);
      } else {
        b = x2;
        x2 = x1;
        f2 = f1;
        x1 = b - phi * (b - a);
        f1 = eval(x1);
      }
    }
    // Parabolic refinement through the surviving bracket midpoints.
    for (int round = 0; round < 2; ++round) {
      const double xm = 0.5 * (x1 + x2);
      const double fm = eval(xm);
      const double denom = (x1 - xm) * (fm - f2) - (x2 - xm) * (fm - f1);
      if (std::abs(denom) > 1e-300) {
        const double num =
            (x1 - xm) * (x1 - xm) * (fm - f2) - (x2 - xm) * (x2 - xm) * (fm - f1);
        const double cand = xm - 0.5 * num / denom;
        if (cand > a && cand < b) eval(cand);
      }
    }
  }
  best_w = tidy_weights(best_w, BoundsSpec{caps});
  check_weights(best_w, bounds);
  return best_w;
}

// ---------------------------------------------------------------------------
// Minimum CVaR (scenario LP, solved through its dual)
// ---------------------------------------------------------------------------

namespace detail {

struct CvarLpResult {
  VectorXd w;
  double cvar = 0.0;
};

/// Minimizes ζ + (1/m)Σₛ[−wᵀxₛ − ζ]⁺ with m = ceil(α·K) over the capped
/// simplex, optionally subject to μᵀw = target. The LP is solved in dual
/// form, which has only N+1 rows regardless of the scenario count:
///
///   max λ + θ·target − Σⱼ capⱼηⱼ
///   s.t. Σₛ yₛ = 1, 0 ≤ yₛ ≤ 1/m,
///        −Σₛ yₛ xₛⱼ − λ − θμⱼ + ηⱼ ≥ 0, ηⱼ ≥ 0,
///
/// whose row multipliers at optimality are exactly the primal weights w (and
/// −ζ for the normalization row). A feasible starting basis exists in closed
/// form (mass 1/m on the first m scenarios), so no phase-1 pass is needed.
inline CvarLpResult min_cvar_lp(const MatrixXd& window, double alpha, const VectorXd& caps,
                                const std::optional<double>& target,
                                const VectorXd* mu_for_target) {
  const Eigen::Index K = window.rows();
  const Eigen::Index N = window.cols();
  const auto m_tail = static_cast<Eigen::Index>(std::ceil(alpha * static_cast<double>(K)));
  const double inv_m = 1.0 / static_cast<double>(m_tail);
  const double inf = std::numeric_limits<double>::infinity();

  std::vector<Eigen::Index> capped_assets;
  for (Eigen::Index j = 0; j < N; ++j)
    if (caps[j] < 1.0 - 1e-15) capped_assets.push_back(j);
  const auto n_eta = static_cast<Eigen::Index>(capped_assets.size());
  const Eigen::Index n_theta = target ? 2 : 0;
  const Eigen::Index rows = N + 1;
  const Eigen::Index cols = K + n_eta + 2 + n_theta + N;
  const Eigen::Index eta0 = K;
  const Eigen::Index lambda_pos = K + n_eta;
  const Eigen::Index theta0 = lambda_pos + 2;
  const Eigen::Index slack0 = theta0 + n_theta;

  LpProblem lp;
  lp.A = MatrixXd::Zero(rows, cols);
  lp.b = VectorXd::Zero(rows);
  lp.c = VectorXd::Zero(cols);
  lp.lower = VectorXd::Zero(cols);
  lp.upper = VectorXd::Constant(cols, inf);
  for (Eigen::Index s = 0; s < K; ++s) {
    lp.A.col(s).head(N) = -window.row(s).transpose();
    lp.A(N, s) = 1.0;
    lp.upper[s] = inv_m;
  }
  for (Eigen::Index e = 0; e < n_eta; ++e) {
    const Eigen::Index j = capped_assets[static_cast<std::size_t>(e)];
    lp.A(j, eta0 + e) = 1.0;
    lp.c[eta0 + e] = caps[j];
  }
  for (Eigen::Index j = 0; j < N; ++j) {
    lp.A(j, lambda_pos) = -1.0;
    lp.A(j, lambda_pos + 1) = 1.0;
    lp.A(j, slack0 + j) = -1.0;
    if (target) {
      lp.A(j, theta0) = -(*mu_for_target)[j];
      lp.A(j, theta0 + 1) = (*mu_for_target)[j];
    }
  }
  lp.c[lambda_pos] = -1.0;
  lp.c[lambda_pos + 1] = 1.0;
  lp.b[N] = 1.0;
  if (target) {
    lp.c[theta0] = -*target;
    lp.c[theta0 + 1] = *target;
  }

  // Closed-form starting basis: the first m scenarios carry mass 1/m (the
  // first of them basic), λ⁻ absorbs a positive column average if needed,
  // and surplus columns cover the remaining asset rows.
  std::vector<std::uint8_t> at_upper(static_cast<std::size_t>(cols), 0);
  for (Eigen::Index s = 1; s < m_tail; ++s) at_upper[static_cast<std::size_t>(s)] = 1;
  VectorXd avg = VectorXd::Zero(N);
  for (Eigen::Index s = 0; s < m_tail; ++s) avg += window.row(s).transpose();
  avg *= inv_m;
  std::vector<Eigen::Index> basis;
  basis.push_back(0);  // y_0
  Eigen::Index max_j = 0;
  avg.maxCoeff(&max_j);
  const bool need_lambda = avg[max_j] > 0.0;
  if (need_lambda) basis.push_back(lambda_pos + 1);  // λ⁻
  for (Eigen::Index j = 0; j < N; ++j)
    if (!(need_lambda && j == max_j)) basis.push_back(slack0 + j);

  const LpSolution sol = solve_bounded_lp(lp, std::move(basis), std::move(at_upper));
  if (sol.status != LpStatus::optimal)
    throw SolverError("MinCVaR LP failed (status " +
                      std::to_string(static_cast<int>(sol.status)) + ")");
  CvarLpResult out;
  out.w = sol.duals.head(N);
  out.cvar = -sol.objective;
  return out;
}

}  // namespace detail

/// Minimum-CVaR portfolio at tail level α over the window's K scenario rows.
/// If every scenario row is identical the objective is flat; the solver then
/// returns equal weights and sets *degenerate_flag.
inline VectorXd solve_min_cvar(const MatrixXd& window, double alpha,
                               const std::optional<BoundsSpec>& bounds = {},
                               bool* degenerate_flag = nullptr) {
  const Eigen::Index K = window.rows();
  const Eigen::Index N = window.cols();
  if (!(alpha > 0.0 && alpha < 0.5)) throw ValidationError("alpha must lie in (0, 0.5)");
  if (K < static_cast<Eigen::Index>(std::ceil(1.0 / alpha)))
    throw ValidationError("solve_min_cvar: need at least ceil(1/alpha) scenarios");
  const VectorXd caps = caps_or_ones(bounds, N);
  if (degenerate_flag) *degenerate_flag = false;

  const double scale = 1.0 + window.cwiseAbs().maxCoeff();
  if ((window.rowwise() - window.row(0)).cwiseAbs().maxCoeff() <= 1e-14 * scale) {
    if (degenerate_flag) *degenerate_flag = true;
    return solve_ew(N, bounds);
  }

  auto lp = detail::min_cvar_lp(window, alpha, caps, std::nullopt, nullptr);
  VectorXd w = tidy_weights(lp.w, BoundsSpec{caps});
  check_weights(w, bounds);
  const double empirical = empirical_var_cvar(window * w, alpha).cvar;
  if (std::abs(empirical - lp.cvar) > 1e-8)
    throw SolverError("MinCVaR consistency check failed: LP objective " +
                      format_double(lp.cvar) + " vs empirical CVaR " + format_double(empirical));
  return w;
}

// ---------------------------------------------------------------------------
// Equal risk contributions
// ---------------------------------------------------------------------------

struct ErcOptions {
  int max_sweeps = 10000;
  double tol = 1e-10;  // relative spread of risk contributions
};

namespace detail {

/// Relative spread (max−min)/mean of wᵢ(Σw)ᵢ over `active`.
inline double contribution_spread(const VectorXd& w, const MatrixXd& sigma,
                                  const std::vector<Eigen::Index>& active) {
  double lo = std::numeric_limits<double>::infinity(), hi = -lo, sum = 0.0;
  const VectorXd sw = sigma * w;
  for (const Eigen::Index i : active) {
    const double c = w[i] * sw[i];
    lo = std::min(lo, c);
    hi = std::max(hi, c);
    sum += c;
  }
  const double mean = sum / static_cast<double>(active.size());
  return mean > 0.0 ? (hi - lo) / mean : (hi - lo);
}

}  // namespace detail

namespace detail {

/// Uncapped ERC core: cyclical coordinate descent on the strictly convex
/// f(x) = ½xᵀΣx − Σᵢ ln xᵢ, whose unique stationary point satisfies
/// xᵢ(Σx)ᵢ = 1 for every i. Normalizing x to sum 1 yields the ERC weights.
inline VectorXd erc_unit_target(const MatrixXd& sigma, const ErcOptions& opts) {
  const Eigen::Index n = sigma.rows();
  VectorXd x(n);
  for (Eigen::Index i = 0; i < n; ++i) x[i] = 1.0 / std::sqrt(sigma(i, i));
  VectorXd sx = sigma * x;
  for (int sweep = 0; sweep < opts.max_sweeps; ++sweep) {
    for (Eigen::Index i = 0; i < n; ++i) {
      const double c = sx[i] - sigma(i, i) * x[i];
      const double root = (-c + std::sqrt(c * c + 4.0 * sigma(i, i))) / (2.0 * sigma(i, i));
      const double delta = root - x[i];
      if (delta != 0.0) {
        x[i] = root;
        sx += sigma.col(i) * delta;
      }
    }
    double worst = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) worst = std::max(worst, std::abs(x[i] * sx[i] - 1.0));
    if (worst < 0.25 * opts.tol) return x / x.sum();
  }
  VectorXd w = x / x.sum();
  std::vector<Eigen::Index> all(static_cast<std::size_t>(n));
  std::iota(all.begin(), all.end(), Eigen::Index{0});
  if (contribution_spread(w, sigma, all) > 1e-6)
    throw NonConvergenceError("ERC did not converge within sweep budget", w);
  return w;
}

/// Capped ERC core: capped coordinates held fixed, free coordinates swept
/// toward the common contribution level and rescaled to the free budget.
inline void erc_capped_sweeps(const MatrixXd& sigma, const VectorXd& caps,
                              const std::vector<Eigen::Index>& free_idx, double budget,
                              VectorXd& w, const ErcOptions& opts) {
  VectorXd sw = sigma * w;
  for (int sweep = 0; sweep < opts.max_sweeps; ++sweep) {
    double level = 0.0;
    for (const Eigen::Index i : free_idx) level += w[i] * sw[i];
    level /= static_cast<double>(free_idx.size());
    if (!(level > 0.0)) level = sigma.trace() / static_cast<double>(sigma.rows() * sigma.rows());
    for (const Eigen::Index i : free_idx) {
      const double c = sw[i] - sigma(i, i) * w[i];
      const double root =
          (-c + std::sqrt(c * c + 4.0 * sigma(i, i) * level)) / (2.0 * sigma(i, i));
      const double delta = root - w[i];
      if (delta != 0.0) {
        w[i] = root;
        sw += sigma.col(i) * delta;
      }
    }
    double free_sum = 0.0;
    for (const Eigen::Index i : free_idx) free_sum += w[i];
    if (free_sum > 0.0 && std::abs(free_sum - budget) > 1e-16 * budget) {
      const double rescale = budget / free_sum;
      for (const Eigen::Index i : free_idx) w[i] *= rescale;
      sw = sigma * w;
    }
    if (contribution_spread(w, sigma, free_idx) < opts.tol) return;
  }
  if (contribution_spread(w, sigma, free_idx) > 1e-6)
    throw NonConvergenceError("ERC did not converge within sweep budget", w / w.sum());
}

}  // namespace detail

/// Equal-risk-contribution portfolio: every asset contributes the same share
/// of portfolio volatility (uncapped), or — with binding caps — contributions
/// are equalized across the uncapped assets while offenders sit at their
/// caps. Singular Σ receives a ridge of 1e−10·trace(Σ)/N before solving.
inline VectorXd solve_erc(const MomentEstimates& est, const std::optional<BoundsSpec>& bounds = {},
                          const ErcOptions& opts = {}) {
  const Eigen::Index n = est.sigma_mat.rows();
  const VectorXd caps = caps_or_ones(bounds, n);
  if (n == 1) return VectorXd::Ones(1);

  MatrixXd sigma = est.sigma_mat;
  const double trace = sigma.trace();
  if (!(trace > 0.0)) throw SolverError("ERC: covariance matrix is zero");
  if (sigma.diagonal().minCoeff() <= 0.0 ||
      Eigen::LDLT<MatrixXd>(sigma).vectorD().minCoeff() <= 1e-14 * trace)
    sigma.diagonal().array() += 1e-10 * trace / static_cast<double>(n);

  VectorXd w = detail::erc_unit_target(sigma, opts);

  std::vector<Eigen::Index> free_idx(static_cast<std::size_t>(n));
  std::iota(free_idx.begin(), free_idx.end(), Eigen::Index{0});
  std::vector<std::uint8_t> at_cap(static_cast<std::size_t>(n), 0);
  for (int outer = 0; outer < 4 * static_cast<int>(n) + 8; ++outer) {
    // Pin the worst cap violator, if any, and re-solve over the free set.
    Eigen::Index worst_violator = -1;
    double worst_excess = 1e-12;
    for (const Eigen::Index i : free_idx) {
      if (w[i] - caps[i] > worst_excess) {
        worst_excess = w[i] - caps[i];
        worst_violator = i;
      }
    }
    if (worst_violator >= 0) {
      at_cap[static_cast<std::size_t>(worst_violator)] = 1;
      free_idx.erase(std::find(free_idx.begin(), free_idx.end(), worst_violator));
    } else if (!free_idx.empty() &&
               static_cast<Eigen::Index>(free_idx.size()) < n) {
      // No violators: release a capped asset whose contribution exceeds the
      // free level (its equalized weight would fall below the cap).
      const VectorXd sw = sigma * w;
      double level = 0.0;
      for (const Eigen::Index i : free_idx) level += w[i] * sw[i];
      level /= static_cast<double>(free_idx.size());
      Eigen::Index release = -1;
      double worst_over = std::max(1e-9 * level, 1e-18);
      for (Eigen::Index i = 0; i < n; ++i) {
        if (!at_cap[static_cast<std::size_t>(i)]) continue;
        if (w[i] * sw[i] - level > worst_over) {
          worst_over = w[i] * sw[i] - level;
          release = i;
        }
      }
      if (release < 0) break;
      at_cap[static_cast<std::size_t>(release)] = 0;
      free_idx.insert(std::upper_bound(free_idx.begin(), free_idx.end(), release), release);
    } else {
      break;
    }

    double budget = 1.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (at_cap[static_cast<std::size_t>(i)]) {
        w[i] = caps[i];
        budget -= caps[i];
      }
    }
    if (free_idx.empty() || budget <= 1e-12) {
      for (const Eigen::Index i : free_idx) w[i] = 0.0;
      break;
    }
    for (const Eigen::Index i : free_idx) w[i] = std::min(w[i], caps[i]);
    double free_sum = 0.0;
    for (const Eigen::Index i : free_idx) free_sum += w[i];
    for (const Eigen::Index i : free_idx)
      w[i] = free_sum > 0.0 ? w[i] * budget / free_sum
                            : budget / static_cast<double>(free_idx.size());
    detail::erc_capped_sweeps(sigma, caps, free_idx, budget, w, opts);
  }

  w = tidy_weights(w, BoundsSpec{caps});
  check_weights(w, bounds);
  return w;
}

// ---------------------------------------------------------------------------
// Maximum Portfolio Diversification Index
// ---------------------------------------------------------------------------

struct PdiOptions {
  int restarts = 10;
  /// 0 = automatic budget (grows with dimension).
  int max_evals_per_restart = 0;
};

/// PDI = 2·Σᵢ i·Wᵢ − 1 over descending normalized eigenvalues Wᵢ of the
/// covariance matrix C. Equals N when all eigenvalues are equal and 1 when a
/// single component carries all variance.
inline double pdi_from_covariance(const MatrixXd& cov) {
  const Eigen::Index n = cov.rows();
  Eigen::SelfAdjointEigenSolver<MatrixXd> eig;
  eig.compute(cov, Eigen::EigenvaluesOnly);
  const VectorXd lambda = eig.eigenvalues().cwiseMax(0.0);  // ascending
  const double total = lambda.sum();
  if (!(total > 0.0)) return 1.0;
  double acc = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double rank = static_cast<double>(n - i);  // descending position
    acc += rank * lambda[i];
  }
  return 2.0 * acc / total - 1.0;
}

/// PDI of portfolio w: eigenvalue spectrum of diag(w)·Σ·diag(w), the
/// covariance of the weighted return columns {wⱼ·X·ⱼ}.
inline double pdi_of_weights(const VectorXd& w, const MatrixXd& sigma) {
  const MatrixXd weighted_cov =
      w.asDiagonal() * sigma * w.asDiagonal();
  return pdi_from_covariance(weighted_cov);
}

/// Maximizes PDI over the capped simplex with seeded multi-start Nelder-Mead
/// in softmax coordinates (z → eᶻ/Σeᶻ, projected onto the caps when bounds
/// are present). The objective is non-convex and non-smooth at eigenvalue
/// crossings; restarts from equal weights, inverse volatility, and seeded
/// random points keep the search reproducible and robust.
inline VectorXd solve_max_pdi(const MatrixXd& window, const std::optional<BoundsSpec>& bounds,
                              std::uint64_t seed, const PdiOptions& opts = {}) {
  const Eigen::Index N = window.cols();
  if (N < 2) throw ValidationError("solve_max_pdi: need at least 2 assets");
  const MomentEstimates est = estimate_moments(window);
  const MatrixXd& sigma = est.sigma_mat;
  if (!(sigma.trace() > 0.0)) throw SolverError("solve_max_pdi: zero covariance");
  const VectorXd caps = caps_or_ones(bounds, N);
  const bool capped = bounds.has_value();

  const auto to_weights = [&](const VectorXd& z) {
    const VectorXd shifted = z.array() - z.maxCoeff();
    VectorXd w = shifted.array().exp();
    w /= w.sum();
    if (capped) w = project_capped_simplex(w, caps);
    return w;
  };
  Eigen::SelfAdjointEigenSolver<MatrixXd> eig;
  MatrixXd weighted(N, N);
  const auto neg_pdi = [&](const VectorXd& z) {
    const VectorXd w = to_weights(z);
    weighted.noalias() = w.asDiagonal() * sigma * w.asDiagonal();
    if (N <= 3)
      eig.computeDirect(weighted, Eigen::EigenvaluesOnly);
    else
      eig.compute(weighted, Eigen::EigenvaluesOnly);
    const VectorXd lambda = eig.eigenvalues().cwiseMax(0.0);
    const double total = lambda.sum();
    if (!(total > 0.0)) return -1.0;
    double acc = 0.0;
    for (Eigen::Index i = 0; i < N; ++i) acc += static_cast<double>(N - i) * lambda[i];
    return -(2.0 * acc / total - 1.0);
  };

  const int budget = opts.max_evals_per_restart > 0
                         ? opts.max_evals_per_restart
                         : std::max(400, 40 * static_cast<int>(N));
  NelderMeadOptions nm_opts;
  nm_opts.max_evals = budget;

  // Direct candidate portfolios cost one evaluation each and anchor the
  // search: equal weight and inverse volatility (the exact optimum for
  // uncorrelated assets).
  VectorXd best_w = water_fill_equal(N, caps);
  double best_f = -pdi_of_weights(best_w, sigma);
  {
    VectorXd inv_vol(N);
    for (Eigen::Index i = 0; i < N; ++i)
      inv_vol[i] = 1.0 / std::sqrt(std::max(sigma(i, i), 1e-30));
    inv_vol /= inv_vol.sum();
    if (capped) inv_vol = project_capped_simplex(inv_vol, caps);
    const double f = -pdi_of_weights(inv_vol, sigma);
    if (f < best_f) {
      best_f = f;
      best_w = inv_vol;
    }
  }

  const Rng root(seed);
  for (int restart = 0; restart < opts.restarts; ++restart) {
    VectorXd z0(N);
    if (restart == 0) {
      z0.setZero();  // equal weights
    } else if (restart == 1) {
      for (Eigen::Index i = 0; i < N; ++i)
        z0[i] = -0.5 * std::log(std::max(sigma(i, i), 1e-30));  // inverse volatility
    } else {
      Rng rng = root.stream(static_cast<std::uint64_t>(restart));
      for (Eigen::Index i = 0; i < N; ++i) z0[i] = rng.normal();
    }
    const NelderMeadResult res = nelder_mead(neg_pdi, z0, 0.7, nm_opts);
    if (res.f < best_f) {
      best_f = res.f;
      best_w = to_weights(res.x);
    }
  }

  best_w = tidy_weights(best_w, BoundsSpec{caps});
  check_weights(best_w, bounds);
  return best_w;
}

// ---------------------------------------------------------------------------
// Frontier tracing
// ---------------------------------------------------------------------------

enum class RiskMeasure { variance, cvar };

struct FrontierPoint {
  double target_return = 0.0;
  double risk = 0.0;
  VectorXd w;
};

struct Frontier {
  RiskMeasure risk_measure = RiskMeasure::variance;
  std::vector<FrontierPoint> points;
};

namespace detail {

inline std::vector<double> return_grid(const VectorXd& mu, const VectorXd& caps,
                                       Eigen::Index grid_size) {
  const double r_min = mu.dot(greedy_fill(-mu, caps));
  const double r_max = mu.dot(greedy_fill(mu, caps));
  std::vector<double> grid;
  if (r_max - r_min <= 1e-14 * (1.0 + std::abs(r_max))) {
    grid.push_back(r_min);
    return grid;
  }
  for (Eigen::Index i = 0; i < grid_size; ++i)
    grid.push_back(r_min + (r_max - r_min) * static_cast<double>(i) /
                               static_cast<double>(grid_size - 1));
  return grid;
}

}  // namespace detail

/// Minimum-variance frontier over a grid of target returns spanning the
/// feasible range. Infeasible targets are skipped, not errors.
inline Frontier trace_frontier(const MomentEstimates& est, Eigen::Index grid_size,
                               const std::optional<BoundsSpec>& bounds = {}) {
  if (grid_size < 2) throw ValidationError("trace_frontier: grid_size must be >= 2");
  const Eigen::Index n = est.mu.size();
  const VectorXd caps = caps_or_ones(bounds, n);
  Frontier frontier;
  frontier.risk_measure = RiskMeasure::variance;
  VectorXd warm;
  const VectorXd* warm_ptr = nullptr;
  for (const double r : detail::return_grid(est.mu, caps, grid_size)) {
    try {
      VectorXd w = detail::min_var_at_target(est, caps, r, warm_ptr);
      w = tidy_weights(w, BoundsSpec{caps});
      warm = w;
      warm_ptr = &warm;
      frontier.points.push_back({r, w.dot(est.sigma_mat * w), std::move(w)});
    } catch (const SolverError&) {
      // infeasible target: excluded from output
    }
  }
  return frontier;
}

/// Minimum-CVaR frontier at tail level α over the window's scenarios.
inline Frontier trace_frontier(const MatrixXd& window, double alpha, Eigen::Index grid_size,
                               const std::optional<BoundsSpec>& bounds = {}) {
  if (grid_size < 2) throw ValidationError("trace_frontier: grid_size must be >= 2");
  const Eigen::Index N = window.cols();
  if (!(alpha > 0.0 && alpha < 0.5)) throw ValidationError("alpha must lie in (0, 0.5)");
  const VectorXd caps = caps_or_ones(bounds, N);
  const MomentEstimates est = estimate_moments(window);
  Frontier frontier;
  frontier.risk_measure = RiskMeasure::cvar;
  for (const double r : detail::return_grid(est.mu, caps, grid_size)) {
    try {
      auto lp = detail::min_cvar_lp(window, alpha, caps, r, &est.mu);
      VectorXd w = tidy_weights(lp.w, BoundsSpec{caps});
      const double risk = empirical_var_cvar(window * w, alpha).cvar;
      frontier.points.push_back({r, risk, std::move(w)});
    } catch (const SolverError&) {
      // infeasible target: excluded from output
    }
  }
  return frontier;
}

// ---------------------------------------------------------------------------
// Strategy registry
// ---------------------------------------------------------------------------

enum class StrategyId { ew, min_var, max_sharpe, max_return, min_cvar, erc, max_pdi };

inline const char* strategy_name(StrategyId id) {
  switch (id) {
    case StrategyId::ew: return "EW";
    case StrategyId::min_var: return "MinVar";
    case StrategyId::max_sharpe: return "MV-S";
    case StrategyId::max_return: return "RR-MaxRet";
    case StrategyId::min_cvar: return "MinCVaR";
    case StrategyId::erc: return "ERC";
    case StrategyId::max_pdi: return "MD";
  }
  return "?";
}

inline std::optional<StrategyId> parse_strategy(const std::string& name) {
  for (const StrategyId id :
       {StrategyId::ew, StrategyId::min_var, StrategyId::max_sharpe, StrategyId::max_return,
        StrategyId::min_cvar, StrategyId::erc, StrategyId::max_pdi}) {
    if (name == strategy_name(id)) return id;
  }
  return std::nullopt;
}

/// Everything a strategy may need for one window solve.
struct StrategyInputs {
  const MatrixXd& window;
  const MomentEstimates& est;
  std::optional<BoundsSpec> caps;
  double alpha = 0.05;
  std::uint64_t seed = 0;
  PdiOptions pdi{};
  ErcOptions erc{};
};

inline VectorXd solve_strategy(StrategyId id, const StrategyInputs& in) {
  switch (id) {
    case StrategyId::ew: return solve_ew(in.window.cols(), in.caps);
    case StrategyId::min_var: return solve_min_var(in.est, in.caps);
    case StrategyId::max_sharpe: return solve_max_sharpe(in.est, in.caps);
    case StrategyId::max_return: return solve_max_return(in.est, in.caps);
    case StrategyId::min_cvar: return solve_min_cvar(in.window, in.alpha, in.caps);
    case StrategyId::erc: return solve_erc(in.est, in.caps, in.erc);
    case StrategyId::max_pdi: return solve_max_pdi(in.window, in.caps, in.seed, in.pdi);
  }
  throw SolverError("unknown strategy");
}

}  // namespace folio
