#pragma once

// Capped-simplex utilities shared by the allocation solvers: feasibility
// checks, closed-form fills (equal-weight water-filling, greedy max-return),
// and Euclidean projection onto {w : Σw = 1, 0 ≤ w ≤ cap}.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "folio/common.hpp"

namespace folio {

/// Per-asset upper bounds on weights. Feasibility requires Σ capᵢ ≥ 1.
struct BoundsSpec {
  VectorXd caps;
  /// Set when infeasible liquidity caps were proportionally rescaled to sum 1.
  bool repaired = false;
};

constexpr double kWeightTol = 1e-8;

inline void validate_bounds(const BoundsSpec& bounds, Eigen::Index n) {
  if (bounds.caps.size() != n)
    throw ValidationError("bounds dimension mismatch: caps has " +
                          std::to_string(bounds.caps.size()) + " entries for " +
                          std::to_string(n) + " assets");
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!(bounds.caps[i] > 0.0) || bounds.caps[i] > 1.0 + kWeightTol)
      throw ValidationError("cap " + std::to_string(i) + " out of (0,1]: " +
                            format_double(bounds.caps[i]));
  }
  if (bounds.caps.sum() < 1.0 - kWeightTol)
    throw SolverError("infeasible caps: sum " + format_double(bounds.caps.sum()) + " < 1");
}

inline VectorXd caps_or_ones(const std::optional<BoundsSpec>& bounds, Eigen::Index n) {
  if (!bounds) return VectorXd::Ones(n);
  validate_bounds(*bounds, n);
  return bounds->caps.cwiseMin(1.0);
}

/// Asserts the WeightVector invariants: wᵢ ≥ 0, Σw = 1 within 1e−8, and
/// wᵢ ≤ capᵢ within 1e−8 when caps are supplied.
inline void check_weights(const VectorXd& w, const std::optional<BoundsSpec>& bounds = {}) {
  for (Eigen::Index i = 0; i < w.size(); ++i) {
    if (!(w[i] >= -kWeightTol))
      throw SolverError("negative weight " + format_double(w[i]) + " at index " +
                        std::to_string(i));
  }
  if (std::abs(simplex_gap(w)) > kWeightTol)
    throw SolverError("weights sum to " + format_double(w.sum()) + ", not 1");
  if (bounds) {
    for (Eigen::Index i = 0; i < w.size(); ++i) {
      if (w[i] > bounds->caps[i] + kWeightTol)
        throw SolverError("weight " + format_double(w[i]) + " exceeds cap " +
                          format_double(bounds->caps[i]) + " at index " + std::to_string(i));
    }
  }
}

/// Clips tiny numerical violations (order 1e-12) without moving the solution:
/// negative dust is zeroed, caps are enforced, and the vector is renormalized.
inline VectorXd tidy_weights(VectorXd w, const std::optional<BoundsSpec>& bounds = {}) {
  w = w.cwiseMax(0.0);
  if (bounds) w = w.cwiseMin(bounds->caps);
  const double total = w.sum();
  // Renormalize only on a real violation: exact results (e.g. equal weights
  // 1/n) must pass through bit-for-bit, and dividing by a sum within an ulp
  // of 1 would perturb them without improving feasibility.
  if (total > 0.0 && std::abs(total - 1.0) > 1e-12) w /= total;
  if (bounds) {
    // Renormalizing can push a coordinate above its cap by a sliver; rescaling
    // never exceeds it by more than the violation we started from, so a second
    // clip plus spreading the deficit over slack coordinates restores both
    // constraints when the violation is tiny.
    for (int pass = 0; pass < 4 && (w.array() > bounds->caps.array() + 1e-15).any(); ++pass) {
      w = w.cwiseMin(bounds->caps);
      const double deficit = 1.0 - w.sum();
      if (deficit <= 0.0) break;
      double slack = 0.0;
      for (Eigen::Index i = 0; i < w.size(); ++i) slack += bounds->caps[i] - w[i];
      if (slack <= 0.0) break;
      for (Eigen::Index i = 0; i < w.size(); ++i)
        w[i] += deficit * (bounds->caps[i] - w[i]) / slack;
    }
  }
  return w;
}

/// Equal weights under caps by iterative water-filling: give every free asset
/// the equal share, cap the overflowing ones, redistribute the excess equally
/// over the remaining free assets, repeat.
inline VectorXd water_fill_equal(Eigen::Index n, const VectorXd& caps) {
  VectorXd w = VectorXd::Zero(n);
  std::vector<Eigen::Index> free_set(static_cast<std::size_t>(n));
  std::iota(free_set.begin(), free_set.end(), Eigen::Index{0});
  double remaining = 1.0;
  while (!free_set.empty() && remaining > 1e-15) {
    const double share = remaining / static_cast<double>(free_set.size());
    std::vector<Eigen::Index> still_free;
    bool capped_any = false;
    for (const Eigen::Index i : free_set) {
      if (caps[i] <= share + 1e-15) {
        w[i] = caps[i];
        remaining -= caps[i];
        capped_any = true;
      } else {
        still_free.push_back(i);
      }
    }
    if (!capped_any) {
      for (const Eigen::Index i : still_free) w[i] = share;
      remaining = 0.0;
    }
    free_set = std::move(still_free);
  }
  if (remaining > kWeightTol) throw SolverError("infeasible caps: cannot reach full investment");
  return w;
}

/// Fills assets in descending order of `score` up to their caps until the
/// weights sum to 1. Ties broken toward the lowest index.
inline VectorXd greedy_fill(const VectorXd& score, const VectorXd& caps) {
  const Eigen::Index n = score.size();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index a, Eigen::Index b) { return score[a] > score[b]; });
  VectorXd w = VectorXd::Zero(n);
  double remaining = 1.0;
  for (const Eigen::Index i : order) {
    const double take = std::min(caps[i], remaining);
    w[i] = take;
    remaining -= take;
    if (remaining <= 1e-15) break;
  }
  if (remaining > kWeightTol) throw SolverError("infeasible caps: cannot reach full investment");
  return w;
}

/// Euclidean projection of y onto {w : Σw = 1, 0 ≤ w ≤ cap} via bisection on
/// the shift τ in w = clip(y − τ, 0, cap).
inline VectorXd project_capped_simplex(const VectorXd& y, const VectorXd& caps) {
  const auto total_at = [&](double tau) {
    return (y.array() - tau).cwiseMax(0.0).cwiseMin(caps.array()).sum();
  };
  double lo = y.minCoeff() - caps.maxCoeff() - 1.0;
  double hi = y.maxCoeff() + 1.0;  // total_at(lo) ≥ 1 ≥ total_at(hi) = 0
  for (int iter = 0; iter < 200; ++iter) {
    const double mid = 0.5 * (lo + hi);
    if (total_at(mid) >= 1.0)
      lo = mid;
    else
      hi = mid;
  }
  const double tau = 0.5 * (lo + hi);
  VectorXd w = (y.array() - tau).cwiseMax(0.0).cwiseMin(caps.array());
  const double total = w.sum();
  if (total > 0.0) w /= total;
  return w;
}

}  // namespace folio
