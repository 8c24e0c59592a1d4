#pragma once

// Rolling-window out-of-sample engine. For each rebalance period the trailing
// K days feed moment estimation and the strategy solvers; the resulting target
// weights are held for the next k days while the realized returns accrue, then
// the weights drift with the realized growth and the window rolls forward.
//
// Per-period liquidity caps are recomputed from the trailing volume window
// when LIBRO is enabled. Combination strategies aggregate the base strategies
// listed in the same configuration: the naive combination averages their
// target weights, the bootstrap combination weights them by resampled
// outperformance shares.

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "folio/combination.hpp"
#include "folio/common.hpp"
#include "folio/liquidity.hpp"
#include "folio/moments.hpp"
#include "folio/panel.hpp"
#include "folio/rng.hpp"
#include "folio/simplex.hpp"
#include "folio/strategies.hpp"

namespace folio {

enum class CombinationKind { naive, bootstrap };

/// A configured strategy: one of the base solvers or a combination over all
/// base solvers in the same configuration.
using StrategyChoice = std::variant<StrategyId, CombinationKind>;

inline std::string choice_name(const StrategyChoice& choice) {
  if (const auto* id = std::get_if<StrategyId>(&choice)) return strategy_name(*id);
  return std::get<CombinationKind>(choice) == CombinationKind::naive ? "Comb-Naive"
                                                                     : "Comb-Boot";
}

inline std::optional<StrategyChoice> parse_choice(const std::string& name) {
  if (name == "Comb-Naive") return StrategyChoice(CombinationKind::naive);
  if (name == "Comb-Boot") return StrategyChoice(CombinationKind::bootstrap);
  if (const auto id = parse_strategy(name)) return StrategyChoice(*id);
  return std::nullopt;
}

/// How the daily out-of-sample portfolio return is computed from the asset
/// log returns X_d of each holding day.
enum class ReturnMode {
  /// ŵ_tᵀX_d with the rebalance-date target weights all period (default).
  target_log,
  /// w_dᵀX_d where the weights drift with realized growth day by day.
  drifted_log,
  /// Buy-and-hold compounding: Σⱼ w_{d,j}·(exp(X_{d,j}) − 1) with daily drift.
  compound,
};

struct BacktestConfig {
  int window_k_days = 252;  // estimation window length K
  int rebalance_days = 21;  // holding period k; {1,5,21} unless allow_any_k
  bool allow_any_k = false;
  std::vector<StrategyChoice> strategies;
  std::optional<LiquiditySpec> libro;
  double gamma = 1.0;        // risk aversion (certainty-equivalent reports)
  double alpha = 0.05;       // CVaR tail level
  std::uint64_t seed = 0;
  ReturnMode return_mode = ReturnMode::target_log;
  BootstrapConfig comb;      // bootstrap-combination settings (B, gamma, block)
  PdiOptions pdi;            // effort for direct MD solves
  ErcOptions erc;
  /// Effort for MD solves inside bootstrap resampling, where thousands of
  /// solves score candidate models and cheap approximations suffice.
  PdiOptions comb_pdi{2, 300};
};

struct BacktestRecord {
  std::string strategy;
  MatrixXd target_weights;   // T×N, one row per rebalance date
  MatrixXd drifted_weights;  // T×N, weights just before the next rebalance
  VectorXd daily_returns;    // T·k out-of-sample portfolio returns
  std::vector<Eigen::Index> rebalance_rows;  // panel row of each rebalance day
  std::vector<std::string> rebalance_dates;
};

/// Weights after holding `w` through a period of daily log returns: each
/// asset grows by Gⱼ = exp(Σ_d X_{d,j}) and the weights renormalize.
inline VectorXd drift_weights(const VectorXd& w, const MatrixXd& period_returns) {
  if (period_returns.cols() != w.size())
    throw ValidationError("drift_weights: dimension mismatch");
  const VectorXd growth = period_returns.colwise().sum().array().exp().matrix().transpose();
  const double denom = w.dot(growth);
  if (!(denom > 0.0)) throw SolverError("drift_weights: non-positive portfolio growth");
  return (w.array() * growth.array() / denom).matrix();
}

namespace detail {

constexpr std::uint64_t kTagStrategySolve = 0x736f6c76u;
constexpr std::uint64_t kTagComboBoot = 0x636f6d62u;

inline void validate_backtest_config(const BacktestConfig& cfg, Eigen::Index rows,
                                     bool have_volumes) {
  if (cfg.window_k_days < 2) throw ConfigError("backtest.window_days must be >= 2");
  if (cfg.rebalance_days < 1) throw ConfigError("backtest.rebalance_days must be >= 1");
  if (!cfg.allow_any_k && cfg.rebalance_days != 1 && cfg.rebalance_days != 5 &&
      cfg.rebalance_days != 21)
    throw ConfigError("backtest.rebalance_days must be 1, 5, or 21 (or pass allow_any_k)");
  if (rows < cfg.window_k_days + cfg.rebalance_days)
    throw ValidationError("panel too short: need at least window_days + rebalance_days rows");
  if (cfg.strategies.empty()) throw ConfigError("backtest.strategies must not be empty");
  if (!(cfg.gamma > 0.0)) throw ConfigError("backtest.gamma must be positive");
  if (!(cfg.alpha > 0.0) || cfg.alpha >= 1.0)
    throw ConfigError("backtest.alpha must lie in (0, 1)");
  if (cfg.libro) {
    validate_liquidity_spec(*cfg.libro);
    if (!have_volumes) throw ConfigError("LIBRO constraints require a volumes panel");
  }
  bool has_combo = false;
  int base_count = 0;
  for (const auto& choice : cfg.strategies) {
    if (std::holds_alternative<CombinationKind>(choice))
      has_combo = true;
    else
      ++base_count;
  }
  if (has_combo && base_count < 2)
    throw ConfigError("combination strategies require at least 2 base strategies");
}

}  // namespace detail

inline std::vector<BacktestRecord> run_backtest(const ReturnsPanel& panel,
                                                const std::optional<VolumePanel>& volumes,
                                                const BacktestConfig& cfg) {
  detail::validate_backtest_config(cfg, panel.rows(), volumes.has_value());
  if (volumes && volumes->values.rows() != panel.rows())
    throw ValidationError("volume panel is not aligned with the returns panel");

  const Eigen::Index K = cfg.window_k_days;
  const Eigen::Index k = cfg.rebalance_days;
  const Eigen::Index N = panel.cols();
  const Eigen::Index T = (panel.rows() - K) / k;
  const auto strategy_count = static_cast<Eigen::Index>(cfg.strategies.size());

  // The base strategies feed the combination strategies in config order.
  std::vector<std::size_t> base_positions;
  for (std::size_t s = 0; s < cfg.strategies.size(); ++s)
    if (std::holds_alternative<StrategyId>(cfg.strategies[s])) base_positions.push_back(s);

  std::vector<BacktestRecord> records(static_cast<std::size_t>(strategy_count));
  for (std::size_t s = 0; s < cfg.strategies.size(); ++s) {
    auto& rec = records[s];
    rec.strategy = choice_name(cfg.strategies[s]);
    rec.target_weights.resize(T, N);
    rec.drifted_weights.resize(T, N);
    rec.daily_returns.resize(T * k);
    rec.rebalance_rows.reserve(static_cast<std::size_t>(T));
    rec.rebalance_dates.reserve(static_cast<std::size_t>(T));
  }

  for (Eigen::Index t = 0; t < T; ++t) {
    const Eigen::Index window_start = t * k;
    const Eigen::Index rebalance_row = window_start + K;
    const MatrixXd window = panel.values.middleRows(window_start, K);
    const MatrixXd period = panel.values.middleRows(rebalance_row, k);
    const MomentEstimates est = estimate_moments(window);

    std::optional<BoundsSpec> caps;
    if (cfg.libro) caps = compute_caps(*volumes, rebalance_row, *cfg.libro, panel.assets);

    // Base strategies first: combination strategies reuse their weights.
    std::vector<VectorXd> base_weights;
    base_weights.reserve(base_positions.size());
    for (const std::size_t s : base_positions) {
      const StrategyId id = std::get<StrategyId>(cfg.strategies[s]);
      StrategyInputs inputs{window, est, caps, cfg.alpha,
                            detail::mix_tags(cfg.seed, detail::kTagStrategySolve,
                                             static_cast<std::uint64_t>(t),
                                             static_cast<std::uint64_t>(s)),
                            cfg.pdi, cfg.erc};
      try {
        base_weights.push_back(solve_strategy(id, inputs));
      } catch (const SolverError& err) {
        throw SolverError("strategy " + std::string(strategy_name(id)) + ", window " +
                          std::to_string(t) + ": " + err.what());
      }
    }

    std::size_t base_cursor = 0;
    for (std::size_t s = 0; s < cfg.strategies.size(); ++s) {
      VectorXd w;
      if (const auto* id = std::get_if<StrategyId>(&cfg.strategies[s])) {
        (void)id;
        w = base_weights[base_cursor++];
      } else if (std::get<CombinationKind>(cfg.strategies[s]) == CombinationKind::naive) {
        w = tidy_weights(combine_naive(base_weights), caps);
      } else {
        std::vector<StrategySolver> models;
        models.reserve(base_positions.size());
        for (const std::size_t b : base_positions) {
          const StrategyId id = std::get<StrategyId>(cfg.strategies[b]);
          models.push_back([&, id](const MatrixXd& sample, std::uint64_t seed) {
            const MomentEstimates sample_est = estimate_moments(sample);
            StrategyInputs inputs{sample,    sample_est,   caps, cfg.alpha,
                                  seed,      cfg.comb_pdi, cfg.erc};
            return solve_strategy(id, inputs);
          });
        }
        BootstrapConfig combo_cfg = cfg.comb;
        combo_cfg.seed = detail::mix_tags(cfg.seed, detail::kTagComboBoot,
                                          static_cast<std::uint64_t>(t), combo_cfg.seed);
        try {
          w = combine_bootstrap(models, window, combo_cfg, caps).weights;
        } catch (const SolverError& err) {
          throw SolverError("strategy Comb-Boot, window " + std::to_string(t) + ": " +
                            err.what());
        }
      }
      check_weights(w, caps);

      auto& rec = records[s];
      rec.target_weights.row(t) = w.transpose();
      rec.rebalance_rows.push_back(rebalance_row);
      rec.rebalance_dates.push_back(
          panel.dates[static_cast<std::size_t>(rebalance_row)]);
      rec.drifted_weights.row(t) = drift_weights(w, period).transpose();

      // Daily out-of-sample returns over the holding period.
      if (cfg.return_mode == ReturnMode::target_log) {
        rec.daily_returns.segment(t * k, k) = period * w;
      } else {
        VectorXd held = w;
        for (Eigen::Index d = 0; d < k; ++d) {
          const VectorXd gross = period.row(d).array().exp().matrix().transpose();
          const double growth = held.dot(gross);
          rec.daily_returns[t * k + d] = cfg.return_mode == ReturnMode::compound
                                             ? growth - 1.0
                                             : held.dot(period.row(d));
          if (!(growth > 0.0))
            throw SolverError("non-positive portfolio growth on day " +
                              std::to_string(rebalance_row + d));
          held = (held.array() * gross.array() / growth).matrix();
        }
      }
    }
  }
  return records;
}

}  // namespace folio
