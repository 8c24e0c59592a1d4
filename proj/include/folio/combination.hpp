#pragma once

// Model combination: average strategy weight vectors either naively (equal
// shares) or weighted by bootstrap-estimated outperformance probabilities.
//
// The bootstrap pipeline: pick an expected block length for the window (the
// automatic flat-top lag-window rule on the equal-weighted portfolio return
// series, unless a fixed length is configured), draw B stationary-bootstrap
// resamples of the window, solve every model on every resample, score each
// solve with the mean-variance certainty-equivalent utility computed from the
// resample's own moments, give the sample's vote to the best model (ties to
// the lowest model index), and average the votes into model shares π̂. The
// combined portfolio is Σ π̂ᵢ·wⁱ with wⁱ solved on the original window.

#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "folio/common.hpp"
#include "folio/moments.hpp"
#include "folio/rng.hpp"
#include "folio/simplex.hpp"

namespace folio {

/// Certainty-equivalent utility per day: wᵀμ̂ − (γ/2)·wᵀΣ̂w. Higher is better.
inline double ceq_loss(const VectorXd& w, const MomentEstimates& est, double gamma) {
  if (w.size() != est.mu.size() || est.sigma_mat.rows() != w.size())
    throw ValidationError("ceq_loss: dimension mismatch");
  return w.dot(est.mu) - 0.5 * gamma * w.dot(est.sigma_mat * w);
}

/// Equal-share average of m weight vectors.
inline VectorXd combine_naive(const std::vector<VectorXd>& weight_set) {
  if (weight_set.empty()) throw ValidationError("combine_naive: need at least one model");
  const Eigen::Index n = weight_set.front().size();
  VectorXd acc = VectorXd::Zero(n);
  for (const auto& w : weight_set) {
    if (w.size() != n) throw ValidationError("combine_naive: dimension mismatch");
    acc += w;
  }
  return acc / static_cast<double>(weight_set.size());
}

// ---------------------------------------------------------------------------
// Automatic block length (flat-top lag-window bandwidth rule)
// ---------------------------------------------------------------------------

namespace detail {

/// Flat-top (trapezoidal) lag window: 1 on [0,1/2], linear to 0 on [1/2,1].
inline double flat_top(double t) {
  const double a = std::abs(t);
  if (a <= 0.5) return 1.0;
  if (a <= 1.0) return 2.0 * (1.0 - a);
  return 0.0;
}

}  // namespace detail

/// Expected stationary-bootstrap block length for a univariate series via the
/// automatic selection rule: find the lag m̂ after which K_n consecutive
/// sample autocorrelations are insignificant (threshold 2·√(log₁₀n / n)),
/// smooth autocovariances with a flat-top window of width M = 2m̂, and set
/// b = (Ĝ²/ĝ(0)²)^{1/3}·n^{1/3}, clamped to [1, n/3].
inline double auto_block_length(const VectorXd& series) {
  const Eigen::Index n = series.size();
  if (n < 10) throw ValidationError("auto_block_length: series shorter than 10");
  const double nd = static_cast<double>(n);
  const double mean = series.mean();
  const VectorXd x = series.array() - mean;

  const auto kn = std::max<Eigen::Index>(5, static_cast<Eigen::Index>(std::ceil(std::log10(nd))));
  const Eigen::Index m_max =
      static_cast<Eigen::Index>(std::ceil(std::sqrt(nd))) + kn;
  const Eigen::Index max_lag = std::min(m_max + kn, n - 1);

  VectorXd autocov = VectorXd::Zero(max_lag + 1);
  for (Eigen::Index lag = 0; lag <= max_lag; ++lag) {
    double acc = 0.0;
    for (Eigen::Index t = 0; t + lag < n; ++t) acc += x[t] * x[t + lag];
    autocov[lag] = acc / nd;
  }
  // A constant series has zero autocovariance up to mean-subtraction rounding
  // residue, so compare against the squared data scale rather than zero.
  const double scale = series.squaredNorm() / nd;
  if (autocov[0] <= 1e-24 * std::max(scale, 1e-300)) return 1.0;

  const double threshold = 2.0 * std::sqrt(std::log10(nd) / nd);
  const auto significant = [&](Eigen::Index lag) {
    return std::abs(autocov[lag] / autocov[0]) > threshold;
  };

  // Smallest m with K_n consecutive insignificant lags m+1 … m+K_n; if no
  // such run exists, fall back to the largest significant lag.
  Eigen::Index m_hat = -1;
  for (Eigen::Index m = 0; m <= m_max && m + kn <= max_lag; ++m) {
    bool all_insignificant = true;
    for (Eigen::Index j = 1; j <= kn; ++j) {
      if (significant(m + j)) {
        all_insignificant = false;
        break;
      }
    }
    if (all_insignificant) {
      m_hat = m;
      break;
    }
  }
  if (m_hat < 0) {
    m_hat = 1;
    for (Eigen::Index lag = 1; lag <= max_lag; ++lag)
      if (significant(lag)) m_hat = lag;
  }

  const Eigen::Index m_width = std::min(std::max<Eigen::Index>(2 * m_hat, 1), max_lag);
  double g_hat = 0.0;    // Σ λ(k/M)·|k|·R̂(k) over k = −M..M
  double g_zero = 0.0;   // Σ λ(k/M)·R̂(k)
  for (Eigen::Index k = -m_width; k <= m_width; ++k) {
    const double lam = detail::flat_top(static_cast<double>(k) / static_cast<double>(m_width));
    const double cov = autocov[std::abs(k)];
    g_hat += lam * std::abs(static_cast<double>(k)) * cov;
    g_zero += lam * cov;
  }
  if (!(g_zero != 0.0)) return 1.0;

  const double ratio = (g_hat * g_hat) / (g_zero * g_zero);
  const double b = std::cbrt(ratio) * std::cbrt(nd);
  return std::clamp(b, 1.0, nd / 3.0);
}

// ---------------------------------------------------------------------------
// Stationary bootstrap
// ---------------------------------------------------------------------------

/// Resamples `count` rows of the window in wrapping blocks of geometric
/// length (restart probability 1/expected_block); all columns share the row
/// indices. Deterministic for a fixed seed.
inline MatrixXd stationary_bootstrap(const MatrixXd& window, double expected_block,
                                     Eigen::Index count, std::uint64_t seed) {
  const Eigen::Index K = window.rows();
  if (K < 1) throw ValidationError("stationary_bootstrap: empty window");
  if (!(expected_block >= 1.0))
    throw ValidationError("stationary_bootstrap: expected block length must be >= 1");
  const double restart_prob = 1.0 / expected_block;
  Rng rng(seed);
  MatrixXd out(count, window.cols());
  Eigen::Index idx = 0;
  for (Eigen::Index r = 0; r < count; ++r) {
    if (r == 0 || rng.uniform01() < restart_prob)
      idx = static_cast<Eigen::Index>(rng.uniform_int(static_cast<std::uint64_t>(K)));
    else
      idx = (idx + 1) % K;
    out.row(r) = window.row(idx);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Bootstrap combination
// ---------------------------------------------------------------------------

/// Relative shares of (beliefs in) the individual models.
struct ModelShares {
  VectorXd pi;
};

struct BootstrapConfig {
  int B = 100;                       // bootstrap sample count
  std::uint64_t seed = 0;
  double gamma = 1.0;                // risk aversion in the CEQ score
  std::optional<double> fixed_block; // expected block length; unset → automatic
};

/// A model: solves one K×N window into weights, seeded for reproducibility.
using StrategySolver = std::function<VectorXd(const MatrixXd& window, std::uint64_t seed)>;

struct BootstrapCombination {
  ModelShares shares;
  VectorXd weights;              // Σ π̂ᵢ·wⁱ on the original window
  std::vector<VectorXd> model_weights;  // wⁱ on the original window
  double expected_block = 1.0;   // block length used for resampling
};

namespace detail {

// Stream tags for deriving independent PRNG seeds from the base seed.
constexpr std::uint64_t kTagBootstrapSample = 0x626f6f74u;  // resample draws
constexpr std::uint64_t kTagBootstrapModel = 0x6d6f646cu;   // per-sample model solves
constexpr std::uint64_t kTagOriginalModel = 0x6f726967u;    // original-window solves

}  // namespace detail

inline BootstrapCombination combine_bootstrap(const std::vector<StrategySolver>& models,
                                              const MatrixXd& window, const BootstrapConfig& cfg,
                                              const std::optional<BoundsSpec>& caps = {}) {
  const auto m = static_cast<Eigen::Index>(models.size());
  if (m < 2) throw ValidationError("combine_bootstrap: need at least 2 models");
  if (cfg.B < 1) throw ValidationError("combine_bootstrap: B must be >= 1");
  if (cfg.fixed_block && !(*cfg.fixed_block >= 1.0))
    throw ValidationError("combine_bootstrap: fixed block length must be >= 1");
  const Eigen::Index K = window.rows();
  if (K < 10) throw ValidationError("combine_bootstrap: window shorter than 10 rows");

  BootstrapCombination result;
  result.expected_block =
      cfg.fixed_block ? *cfg.fixed_block : auto_block_length(window.rowwise().mean());

  VectorXd votes = VectorXd::Zero(m);
  for (int b = 0; b < cfg.B; ++b) {
    const auto bu = static_cast<std::uint64_t>(b);
    const MatrixXd sample = stationary_bootstrap(
        window, result.expected_block, K,
        detail::mix_tags(cfg.seed, detail::kTagBootstrapSample, bu, 0));
    const MomentEstimates est = estimate_moments(sample);
    Eigen::Index best = -1;
    double best_score = 0.0;
    for (Eigen::Index i = 0; i < m; ++i) {
      VectorXd w;
      try {
        w = models[static_cast<std::size_t>(i)](
            sample, detail::mix_tags(cfg.seed, detail::kTagBootstrapModel, bu,
                                     static_cast<std::uint64_t>(i)));
      } catch (const SolverError&) {
        continue;  // this sample's vote falls to the best among the succeeders
      }
      const double score = ceq_loss(w, est, cfg.gamma);
      if (best < 0 || score > best_score) {
        best = i;
        best_score = score;
      }
    }
    if (best < 0)
      throw SolverError("combine_bootstrap: every model failed on bootstrap sample " +
                        std::to_string(b));
    votes[best] += 1.0;
  }
  result.shares.pi = votes / static_cast<double>(cfg.B);

  // Solve on the original window; models that received no votes contribute
  // nothing and may fail without harm.
  result.model_weights.assign(static_cast<std::size_t>(m), VectorXd());
  VectorXd combined = VectorXd::Zero(window.cols());
  for (Eigen::Index i = 0; i < m; ++i) {
    VectorXd w;
    try {
      w = models[static_cast<std::size_t>(i)](
          window, detail::mix_tags(cfg.seed, detail::kTagOriginalModel,
                                   static_cast<std::uint64_t>(i), 0));
    } catch (const SolverError&) {
      if (result.shares.pi[i] > 0.0) throw;
      continue;
    }
    result.model_weights[static_cast<std::size_t>(i)] = w;
    combined += result.shares.pi[i] * w;
  }
  result.weights = tidy_weights(combined, caps);
  check_weights(result.weights, caps);
  return result;
}

}  // namespace folio
