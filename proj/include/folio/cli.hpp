#pragma once

// Command layer: each subcommand is a pure function from a resolved RunConfig
// to a set of report files. All computation happens before any file is
// written, so a failing run leaves the output directory untouched.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <folio/backtest.hpp>
#include <folio/combination.hpp>
#include <folio/config.hpp>
#include <folio/inference.hpp>
#include <folio/liquidity.hpp>
#include <folio/metrics.hpp>
#include <folio/moments.hpp>
#include <folio/panel.hpp>
#include <folio/report.hpp>
#include <folio/strategies.hpp>

namespace folio {

struct CommandResult {
  std::vector<std::filesystem::path> files;
};

namespace detail {

inline LoadResult load_configured_panel(const RunConfig& cfg,
                                        bool need_volumes) {
  if (need_volumes && !cfg.volumes_path)
    throw ConfigError(
        "data.volumes is required: liquidity caps need traded-volume history");
  LoadOptions opts;
  opts.drop_incomplete_assets = cfg.drop_incomplete_assets;
  LoadResult loaded = load_panel(cfg.returns_path, cfg.volumes_path, opts);
  apply_asset_metadata(loaded.returns, cfg);
  return loaded;
}

inline std::string bool_text(bool b) { return b ? "true" : "false"; }

/// Significance tier of a p-value: the smallest of 0.01/0.05/0.1 it clears,
/// or empty when not significant at 10% (or untestable).
inline std::string significance_tier(double p, bool degenerate) {
  if (degenerate || !(p < 0.1)) return "";
  if (p < 0.01) return "0.01";
  if (p < 0.05) return "0.05";
  return "0.1";
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Table builders
// ---------------------------------------------------------------------------

inline Table performance_table(const std::vector<PerformanceRow>& rows) {
  Table t{"performance",
          {"strategy", "cum_wealth", "sharpe", "adj_sharpe", "ceq", "turnover",
           "target_turnover"},
          {}};
  for (const PerformanceRow& r : rows)
    t.rows.push_back({r.strategy, r.cum_wealth, r.sharpe, r.adj_sharpe, r.ceq,
                      r.turnover, r.target_turnover});
  return t;
}

inline Table diversification_table(const std::vector<DiversificationRow>& rows) {
  Table t{"diversification", {"strategy", "dr_squared", "n_eff", "pdi"}, {}};
  for (const DiversificationRow& r : rows)
    t.rows.push_back({r.strategy, r.dr_squared, r.effective_n, r.pdi});
  return t;
}

/// Long-format weight paths: one row per (strategy, rebalance date, kind,
/// asset), kind being the target weights or the weights drifted to the end of
/// the holding period.
inline Table weights_table(const std::vector<BacktestRecord>& records,
                           const ReturnsPanel& panel) {
  Table t{"weights", {"strategy", "date", "kind", "asset", "weight"}, {}};
  for (const BacktestRecord& rec : records) {
    for (Eigen::Index row = 0; row < rec.target_weights.rows(); ++row) {
      const std::string& date =
          rec.rebalance_dates[static_cast<std::size_t>(row)];
      for (Eigen::Index j = 0; j < rec.target_weights.cols(); ++j) {
        const std::string& asset =
            panel.assets[static_cast<std::size_t>(j)].name;
        t.rows.push_back({rec.strategy, date, std::string("target"), asset,
                          rec.target_weights(row, j)});
        t.rows.push_back({rec.strategy, date, std::string("drifted"), asset,
                          rec.drifted_weights(row, j)});
      }
    }
  }
  return t;
}

/// Long-format daily out-of-sample return series per strategy.
inline Table returns_table(const std::vector<BacktestRecord>& records,
                           const ReturnsPanel& panel,
                           const BacktestConfig& cfg) {
  Table t{"returns", {"strategy", "date", "daily_return"}, {}};
  const Eigen::Index K = cfg.window_k_days;
  const Eigen::Index k = cfg.rebalance_days;
  for (const BacktestRecord& rec : records) {
    for (Eigen::Index d = 0; d < rec.daily_returns.size(); ++d) {
      const auto date_index = static_cast<std::size_t>(K + d);
      (void)k;
      t.rows.push_back(
          {rec.strategy, panel.dates[date_index], rec.daily_returns[d]});
    }
  }
  return t;
}

/// Pairwise HAC comparison matrix in long form: both metrics, every strategy
/// pair. Runs shorter than the test's minimum sample are reported as
/// degenerate rather than failing the whole command.
inline Table pvalue_table(const std::vector<BacktestRecord>& records,
                          double gamma, const HacOptions& hac) {
  Table t{"pvalues",
          {"metric", "first", "second", "difference", "statistic", "p_value",
           "significance", "degenerate"},
          {}};
  const double nan = std::numeric_limits<double>::quiet_NaN();
  const bool testable =
      !records.empty() && records.front().daily_returns.size() >= 30;
  for (const ComparisonMetric metric :
       {ComparisonMetric::sharpe, ComparisonMetric::ceq}) {
    for (std::size_t i = 0; i < records.size(); ++i) {
      for (std::size_t j = i + 1; j < records.size(); ++j) {
        if (testable) {
          const PairwiseTestResult r =
              lw_pairwise_test(records[i].daily_returns,
                               records[j].daily_returns, metric, gamma, hac);
          t.rows.push_back(
              {std::string(metric_name(metric)), records[i].strategy,
               records[j].strategy, r.difference, r.statistic, r.p_value,
               detail::significance_tier(r.p_value, r.degenerate),
               detail::bool_text(r.degenerate)});
        } else {
          t.rows.push_back({std::string(metric_name(metric)),
                            records[i].strategy, records[j].strategy, nan, nan,
                            nan, std::string(), detail::bool_text(true)});
        }
      }
    }
  }
  return t;
}

// ---------------------------------------------------------------------------
// Subcommands
// ---------------------------------------------------------------------------

/// `backtest`: rolling-window out-of-sample run. Writes the performance
/// table, diversification table, weight paths, daily return series, and (for
/// two or more strategies) the pairwise p-value matrix.
inline CommandResult run_backtest_command(const RunConfig& cfg) {
  const LoadResult loaded =
      detail::load_configured_panel(cfg, cfg.libro_enabled);
  const ReturnsPanel& panel = loaded.returns;

  const std::vector<BacktestRecord> records =
      run_backtest(panel, loaded.volumes, cfg.backtest);

  std::vector<Table> tables;
  tables.push_back(performance_table(
      performance_report(records, cfg.backtest.gamma, cfg.compound_wealth)));
  tables.push_back(diversification_table(
      diversification_report(panel, records, cfg.backtest.window_k_days)));
  tables.push_back(weights_table(records, panel));
  tables.push_back(returns_table(records, panel, cfg.backtest));
  if (records.size() >= 2)
    tables.push_back(pvalue_table(records, cfg.backtest.gamma, cfg.hac));

  const auto echo = echo_config(cfg);
  CommandResult result;
  for (const Table& t : tables)
    result.files.push_back(write_table(t, cfg, echo));
  return result;
}

/// `describe`: per-asset sample statistics over the full panel.
inline CommandResult run_describe_command(const RunConfig& cfg) {
  const LoadResult loaded = detail::load_configured_panel(cfg, false);
  const DescriptiveStats stats = descriptive_stats(loaded.returns);
  Table t{"describe",
          {"asset", "mean", "sd", "skewness", "excess_kurtosis", "minimum",
           "maximum"},
          {}};
  for (std::size_t j = 0; j < stats.assets.size(); ++j) {
    const auto i = static_cast<Eigen::Index>(j);
    t.rows.push_back({stats.assets[j], stats.mean[i], stats.sd[i],
                      stats.skewness[i], stats.excess_kurtosis[i],
                      stats.minimum[i], stats.maximum[i]});
  }
  CommandResult result;
  result.files.push_back(write_table(t, cfg, echo_config(cfg)));
  return result;
}

/// `spanning`: regresses each crypto-class asset on the traditional-class
/// benchmark set over the full panel. Rows where any of the three tests
/// rejects at the 10% level are flagged.
inline CommandResult run_spanning_command(const RunConfig& cfg) {
  const LoadResult loaded = detail::load_configured_panel(cfg, false);
  const ReturnsPanel& panel = loaded.returns;

  std::vector<Eigen::Index> bench;
  std::vector<Eigen::Index> cand;
  for (Eigen::Index j = 0; j < panel.cols(); ++j) {
    if (panel.assets[static_cast<std::size_t>(j)].asset_class ==
        AssetClass::crypto)
      cand.push_back(j);
    else
      bench.push_back(j);
  }
  if (bench.size() < 2)
    throw ConfigError(
        "spanning requires at least 2 benchmark (traditional-class) assets; "
        "got " +
        std::to_string(bench.size()));

  MatrixXd benchmarks(panel.rows(), static_cast<Eigen::Index>(bench.size()));
  for (std::size_t b = 0; b < bench.size(); ++b)
    benchmarks.col(static_cast<Eigen::Index>(b)) =
        panel.values.col(bench[b]);

  Table t{"spanning",
          {"candidate", "alpha", "f_hk", "p_hk", "f1", "p1", "f2", "p2",
           "exact", "flagged"},
          {}};
  for (const Eigen::Index j : cand) {
    const SpanningResult r =
        spanning_test(benchmarks, panel.values.col(j));
    const bool flagged = r.p_hk < 0.1 || r.p1 < 0.1 || r.p2 < 0.1;
    t.rows.push_back({panel.assets[static_cast<std::size_t>(j)].name, r.alpha,
                      r.f_hk, r.p_hk, r.f1, r.p1, r.f2, r.p2,
                      detail::bool_text(r.exact), detail::bool_text(flagged)});
  }

  CommandResult result;
  result.files.push_back(write_table(t, cfg, echo_config(cfg)));
  return result;
}

/// `frontier`: efficient-frontier surfaces. For every rebalance date of the
/// backtest schedule and every requested universe (traditional-only assets,
/// the full universe, and the LIBRO-capped full universe) traces one frontier
/// and emits it in long format: one row per (date, universe, grid point,
/// asset).
inline CommandResult run_frontier_command(const RunConfig& cfg) {
  // Universes that cannot exist under this config are dropped when they come
  // from the defaults but rejected when the user asked for them explicitly.
  std::vector<std::string> universes = cfg.frontier_universes;
  const bool explicit_universes = cfg.frontier_universes_explicit;
  const bool want_libro =
      std::find(universes.begin(), universes.end(), "libro") != universes.end();

  const LoadResult loaded = detail::load_configured_panel(
      cfg, want_libro && explicit_universes);
  const ReturnsPanel& panel = loaded.returns;

  std::vector<Eigen::Index> traditional;
  std::vector<Eigen::Index> all;
  for (Eigen::Index j = 0; j < panel.cols(); ++j) {
    all.push_back(j);
    if (panel.assets[static_cast<std::size_t>(j)].asset_class ==
        AssetClass::traditional)
      traditional.push_back(j);
  }

  auto drop = [&universes](const std::string& name) {
    universes.erase(std::remove(universes.begin(), universes.end(), name),
                    universes.end());
  };
  if (want_libro && !loaded.volumes) {
    if (explicit_universes)
      throw ConfigError(
          "frontier universe 'libro' requires data.volumes");
    drop("libro");
  }
  if (traditional.empty() &&
      std::find(universes.begin(), universes.end(), "traditional") !=
          universes.end()) {
    if (explicit_universes)
      throw ConfigError(
          "frontier universe 'traditional' is empty: every asset is "
          "crypto-class");
    drop("traditional");
  }
  if (universes.empty())
    throw ConfigError("frontier: no usable universes under this config");

  const Eigen::Index K = cfg.backtest.window_k_days;
  const Eigen::Index k = cfg.backtest.rebalance_days;
  if (K < 2) throw ConfigError("backtest.window_days must be >= 2");
  if (k < 1) throw ConfigError("backtest.rebalance_days must be >= 1");
  if (!cfg.backtest.allow_any_k && k != 1 && k != 5 && k != 21)
    throw ConfigError(
        "backtest.rebalance_days must be 1, 5, or 21 (or pass allow_any_k)");
  if (panel.rows() < K + k)
    throw ValidationError(
        "panel too short: need at least window_days + rebalance_days rows");
  const Eigen::Index T = (panel.rows() - K) / k;

  Table t{"frontier",
          {"date", "universe", "target_return", "risk", "asset", "weight"},
          {}};
  for (Eigen::Index ti = 0; ti < T; ++ti) {
    const Eigen::Index window_start = ti * k;
    const Eigen::Index rebalance_row = window_start + K;
    const std::string& date =
        panel.dates[static_cast<std::size_t>(rebalance_row)];

    for (const std::string& universe : universes) {
      const std::vector<Eigen::Index>& members =
          universe == "traditional" ? traditional : all;
      MatrixXd window(K, static_cast<Eigen::Index>(members.size()));
      for (std::size_t m = 0; m < members.size(); ++m)
        window.col(static_cast<Eigen::Index>(m)) =
            panel.values.block(window_start, members[m], K, 1);

      std::optional<BoundsSpec> caps;
      if (universe == "libro") {
        BoundsSpec full_caps = compute_caps(*loaded.volumes, rebalance_row,
                                            cfg.libro, panel.assets);
        caps = std::move(full_caps);
      }

      const Frontier frontier =
          cfg.frontier_measure == RiskMeasure::variance
              ? trace_frontier(estimate_moments(window), cfg.frontier_grid,
                               caps)
              : trace_frontier(window, cfg.backtest.alpha, cfg.frontier_grid,
                               caps);

      for (const FrontierPoint& point : frontier.points) {
        for (std::size_t m = 0; m < members.size(); ++m) {
          const std::string& asset =
              panel.assets[static_cast<std::size_t>(members[m])].name;
          t.rows.push_back({date, universe, point.target_return, point.risk,
                            asset, point.w[static_cast<Eigen::Index>(m)]});
        }
      }
    }
  }

  CommandResult result;
  result.files.push_back(write_table(t, cfg, echo_config(cfg)));
  return result;
}

/// `combine`: one-shot model combination on the most recent estimation
/// window. Writes the bootstrap vote shares, a weight table covering the
/// combined portfolios and every underlying model, and a small info table
/// (block length, window size).
inline CommandResult run_combine_command(const RunConfig& cfg) {
  const LoadResult loaded =
      detail::load_configured_panel(cfg, cfg.libro_enabled);
  const ReturnsPanel& panel = loaded.returns;
  const Eigen::Index K = cfg.backtest.window_k_days;
  if (panel.rows() < K)
    throw ValidationError("combine needs at least window_days = " +
                          std::to_string(K) + " rows, got " +
                          std::to_string(panel.rows()));
  const MatrixXd window = panel.values.bottomRows(K);

  std::optional<BoundsSpec> caps;
  if (cfg.libro_enabled)
    caps = compute_caps(*loaded.volumes, panel.rows(), cfg.libro,
                        panel.assets);

  std::vector<StrategyId> base;
  for (const StrategyChoice& choice : cfg.backtest.strategies)
    if (const auto* id = std::get_if<StrategyId>(&choice))
      base.push_back(*id);
  if (base.size() < 2)
    throw ConfigError(
        "combine needs at least 2 base strategies in backtest.strategies");

  std::vector<StrategySolver> models;
  models.reserve(base.size());
  for (const StrategyId id : base) {
    models.push_back([&cfg, &caps, id](const MatrixXd& sample,
                                       std::uint64_t seed) {
      const MomentEstimates sample_est = estimate_moments(sample);
      StrategyInputs inputs{sample,
                            sample_est,
                            caps,
                            cfg.backtest.alpha,
                            seed,
                            cfg.backtest.comb_pdi,
                            cfg.backtest.erc};
      return solve_strategy(id, inputs);
    });
  }

  const BootstrapCombination combo =
      combine_bootstrap(models, window, cfg.backtest.comb, caps);

  // Solve every model on the original window with the same seed scheme the
  // bootstrap uses, so the reported model portfolios line up with the votes.
  std::vector<VectorXd> model_weights(base.size());
  for (std::size_t s = 0; s < base.size(); ++s)
    model_weights[s] = models[s](
        window, detail::mix_tags(cfg.backtest.comb.seed,
                                 detail::kTagOriginalModel,
                                 static_cast<std::uint64_t>(s), 0));
  const VectorXd naive = tidy_weights(combine_naive(model_weights), caps);

  Table shares{"combine_shares", {"model", "share"}, {}};
  for (std::size_t s = 0; s < base.size(); ++s)
    shares.rows.push_back({std::string(strategy_name(base[s])),
                           combo.shares.pi[static_cast<Eigen::Index>(s)]});

  Table weights{"combine_weights", {"portfolio", "asset", "weight"}, {}};
  auto add_portfolio = [&weights, &panel](const std::string& name,
                                          const VectorXd& w) {
    for (Eigen::Index j = 0; j < w.size(); ++j)
      weights.rows.push_back(
          {name, panel.assets[static_cast<std::size_t>(j)].name, w[j]});
  };
  add_portfolio("Comb-Boot", combo.weights);
  add_portfolio("Comb-Naive", naive);
  for (std::size_t s = 0; s < base.size(); ++s)
    add_portfolio(strategy_name(base[s]), model_weights[s]);

  Table info{"combine_info", {"key", "value"}, {}};
  info.rows.push_back({std::string("expected_block"), combo.expected_block});
  info.rows.push_back(
      {std::string("window_rows"), static_cast<double>(K)});
  info.rows.push_back(
      {std::string("bootstrap_samples"),
       static_cast<double>(cfg.backtest.comb.B)});

  const auto echo = echo_config(cfg);
  CommandResult result;
  result.files.push_back(write_table(shares, cfg, echo));
  result.files.push_back(write_table(weights, cfg, echo));
  result.files.push_back(write_table(info, cfg, echo));
  return result;
}

}  // namespace folio
