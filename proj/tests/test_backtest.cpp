#include <doctest.h>

#include <cmath>
#include <optional>
#include <vector>

#include "folio/backtest.hpp"
#include "folio/rng.hpp"
#include "support/testutil.hpp"

using namespace folio;
namespace ft = folio::testing;

namespace {

/// Returns panel with `rows` days of random data, plus a parallel volume
/// panel filled with `volume`.
struct PanelPair {
  ReturnsPanel returns;
  VolumePanel volumes;
};

PanelPair make_pair_panel(Rng& rng, int rows, int cols, double volume = 5e9) {
  PanelPair pair;
  pair.returns = ft::make_panel(ft::random_window(rng, rows, cols, 0.0005, 0.01));
  pair.volumes.dates = pair.returns.dates;
  for (const auto& asset : pair.returns.assets) pair.volumes.assets.push_back(asset.name);
  pair.volumes.values = MatrixXd::Constant(rows, cols, volume);
  return pair;
}

BacktestConfig base_config(int K, int k) {
  BacktestConfig cfg;
  cfg.window_k_days = K;
  cfg.rebalance_days = k;
  cfg.allow_any_k = true;
  cfg.strategies = {StrategyChoice(StrategyId::ew)};
  return cfg;
}

}  // namespace

TEST_CASE("strategy choices parse and print round-trip") {
  for (const char* name :
       {"EW", "MinVar", "MV-S", "RR-MaxRet", "MinCVaR", "ERC", "MD", "Comb-Naive",
        "Comb-Boot"}) {
    const auto choice = parse_choice(name);
    REQUIRE(choice.has_value());
    CHECK(choice_name(*choice) == name);
  }
  CHECK_FALSE(parse_choice("NoSuchStrategy").has_value());
}

TEST_CASE("drift_weights follows realized growth") {
  VectorXd w(2);
  w << 0.5, 0.5;

  // One day: asset 1 grows by ln 2, asset 2 flat -> G = (2, 1) -> (2/3, 1/3).
  MatrixXd period(1, 2);
  period << std::log(2.0), 0.0;
  const VectorXd drifted = drift_weights(w, period);
  CHECK(drifted[0] == doctest::Approx(2.0 / 3.0).epsilon(1e-14));
  CHECK(drifted[1] == doctest::Approx(1.0 / 3.0).epsilon(1e-14));

  // Zero returns: identity.
  const VectorXd same = drift_weights(w, MatrixXd::Zero(3, 2));
  CHECK(same[0] == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(same[1] == doctest::Approx(0.5).epsilon(1e-15));

  // Single-asset portfolios cannot drift.
  VectorXd corner(2);
  corner << 1.0, 0.0;
  MatrixXd wild(2, 2);
  wild << 0.4, -0.8, -0.2, 0.6;
  const VectorXd still = drift_weights(corner, wild);
  CHECK(still[0] == 1.0);
  CHECK(still[1] == 0.0);

  // Multi-day growth compounds: two days of ln 2 -> G = (4, 1) -> (0.8, 0.2).
  MatrixXd two(2, 2);
  two << std::log(2.0), 0.0, std::log(2.0), 0.0;
  const VectorXd fourfold = drift_weights(w, two);
  CHECK(fourfold[0] == doctest::Approx(0.8).epsilon(1e-12));
  CHECK(fourfold[1] == doctest::Approx(0.2).epsilon(1e-12));

  CHECK_THROWS_AS(drift_weights(w, MatrixXd::Zero(2, 3)), ValidationError);
}

TEST_CASE("a panel of exactly K + k rows yields a single window") {
  Rng rng(101);
  const ReturnsPanel panel = ft::make_panel(ft::random_window(rng, 9, 2, 0.0, 0.01));
  BacktestConfig cfg = base_config(4, 5);
  cfg.allow_any_k = false;  // k = 5 is a stock rebalance period
  const auto records = run_backtest(panel, std::nullopt, cfg);
  REQUIRE(records.size() == 1);
  CHECK(records[0].strategy == "EW");
  CHECK(records[0].target_weights.rows() == 1);
  CHECK(records[0].daily_returns.size() == 5);
  CHECK(records[0].target_weights(0, 0) == 0.5);
  CHECK(records[0].rebalance_rows == std::vector<Eigen::Index>{4});
}

TEST_CASE("EW daily returns equal the cross-asset mean each day") {
  Rng rng(102);
  const ReturnsPanel panel = ft::make_panel(ft::random_window(rng, 12, 2, 0.0, 0.02));
  const auto records = run_backtest(panel, std::nullopt, base_config(4, 1));
  const auto& rec = records[0];
  REQUIRE(rec.daily_returns.size() == 8);
  for (Eigen::Index d = 0; d < 8; ++d) {
    const double expected = (panel.values(4 + d, 0) + panel.values(4 + d, 1)) / 2.0;
    CHECK(rec.daily_returns[d] == expected);
  }
}

TEST_CASE("an all-zero panel produces all-zero returns for every strategy") {
  const ReturnsPanel panel = ft::make_panel(MatrixXd::Zero(10, 3));
  BacktestConfig cfg = base_config(4, 1);
  // MinCVaR needs ceil(1/alpha) scenarios, so widen the tail for K = 4.
  cfg.alpha = 0.25;
  cfg.strategies = {StrategyChoice(StrategyId::ew), StrategyChoice(StrategyId::min_var),
                    StrategyChoice(StrategyId::max_return),
                    StrategyChoice(StrategyId::min_cvar)};
  const auto records = run_backtest(panel, std::nullopt, cfg);
  REQUIRE(records.size() == 4);
  for (const auto& rec : records) {
    CHECK(rec.daily_returns.cwiseAbs().maxCoeff() == 0.0);
    // Zero returns mean unit growth; drifting only renormalizes by the
    // weight sum, which is 1 up to rounding.
    CHECK((rec.drifted_weights - rec.target_weights).cwiseAbs().maxCoeff() <=
          1e-15);
  }
}

TEST_CASE("trailing days beyond the last full period are discarded") {
  Rng rng(103);
  const ReturnsPanel panel = ft::make_panel(ft::random_window(rng, 16, 2, 0.0, 0.01));
  // P - K = 12 days, k = 5 -> T = 2 full periods, 2 days discarded.
  const auto records = run_backtest(panel, std::nullopt, base_config(4, 5));
  CHECK(records[0].target_weights.rows() == 2);
  CHECK(records[0].daily_returns.size() == 10);
}

TEST_CASE("weights are strictly out-of-sample") {
  Rng rng(104);
  MatrixXd values = ft::random_window(rng, 14, 3, 0.0, 0.01);
  const ReturnsPanel panel_a = ft::make_panel(values);
  // Tamper with everything from the first rebalance date onward.
  MatrixXd tampered = values;
  tampered.bottomRows(8).setConstant(0.004);
  const ReturnsPanel panel_b = ft::make_panel(tampered);

  BacktestConfig cfg = base_config(6, 2);
  cfg.strategies = {StrategyChoice(StrategyId::min_var),
                    StrategyChoice(StrategyId::max_return)};
  const auto rec_a = run_backtest(panel_a, std::nullopt, cfg);
  const auto rec_b = run_backtest(panel_b, std::nullopt, cfg);
  // Window 0 estimates on rows 0..5, which the tampering never touched.
  for (std::size_t s = 0; s < rec_a.size(); ++s)
    CHECK(rec_a[s].target_weights.row(0) == rec_b[s].target_weights.row(0));
}

TEST_CASE("LIBRO caps are recomputed from the trailing volume window") {
  // Asset 0 dominates expected return, so RR-MaxRet pushes to its cap; the
  // cap moves from 0.25 to 0.5 as the trailing mean volume changes.
  ReturnsPanel panel = ft::make_panel(MatrixXd::Zero(6, 2));
  panel.values.col(0).setConstant(0.01);
  panel.values.col(1).setConstant(-0.002);

  VolumePanel volumes;
  volumes.dates = panel.dates;
  volumes.assets = {"AAA", "BBB"};
  volumes.values.resize(6, 2);
  volumes.values.col(0) << 2.5e8, 2.5e8, 2.5e8, 2.5e8, 1.25e9, 0.0;
  volumes.values.col(1).setConstant(9e9);

  BacktestConfig cfg = base_config(4, 1);
  cfg.strategies = {StrategyChoice(StrategyId::max_return)};
  cfg.libro = LiquiditySpec{1e7, 0.01, 4};
  const auto records = run_backtest(panel, volumes, cfg);
  REQUIRE(records[0].target_weights.rows() == 2);
  // Window 0: volume rows 0-3, mean 2.5e8 -> cap 0.25.
  CHECK(records[0].target_weights(0, 0) == doctest::Approx(0.25).epsilon(1e-12));
  // Window 1: volume rows 1-4, mean 5e8 -> cap 0.5.
  CHECK(records[0].target_weights(1, 0) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("naive combination rows average the base strategies") {
  Rng rng(105);
  const ReturnsPanel panel = ft::make_panel(ft::random_window(rng, 20, 3, 0.002, 0.01));
  BacktestConfig cfg = base_config(8, 5);
  cfg.strategies = {StrategyChoice(StrategyId::ew), StrategyChoice(StrategyId::max_return),
                    StrategyChoice(CombinationKind::naive)};
  const auto records = run_backtest(panel, std::nullopt, cfg);
  REQUIRE(records.size() == 3);
  const auto& naive = records[2];
  CHECK(naive.strategy == "Comb-Naive");
  for (Eigen::Index t = 0; t < naive.target_weights.rows(); ++t)
    for (Eigen::Index j = 0; j < 3; ++j)
      CHECK(naive.target_weights(t, j) ==
            doctest::Approx((records[0].target_weights(t, j) +
                             records[1].target_weights(t, j)) /
                            2.0)
                .epsilon(1e-12));
}

TEST_CASE("bootstrap combination follows a dominating base model") {
  // Asset 0 wins on every resample, so RR-MaxRet (all-in on asset 0) takes
  // every vote against EW and the combination equals its weights.
  Rng rng(106);
  MatrixXd values(26, 2);
  for (Eigen::Index r = 0; r < 26; ++r) {
    values(r, 0) = 0.012 + 0.001 * (rng.uniform01() - 0.5);
    values(r, 1) = -0.01 + 0.001 * (rng.uniform01() - 0.5);
  }
  const ReturnsPanel panel = ft::make_panel(values);
  BacktestConfig cfg = base_config(12, 7);
  cfg.strategies = {StrategyChoice(StrategyId::ew), StrategyChoice(StrategyId::max_return),
                    StrategyChoice(CombinationKind::bootstrap)};
  cfg.comb.B = 20;
  cfg.comb.fixed_block = 2.0;
  const auto records = run_backtest(panel, std::nullopt, cfg);
  const auto& boot = records[2];
  CHECK(boot.strategy == "Comb-Boot");
  for (Eigen::Index t = 0; t < boot.target_weights.rows(); ++t) {
    CHECK(boot.target_weights(t, 0) == 1.0);
    CHECK(boot.target_weights(t, 1) == 0.0);
  }
}

TEST_CASE("backtests are bitwise reproducible") {
  Rng rng(107);
  const ReturnsPanel panel = ft::make_panel(ft::random_window(rng, 40, 4, 0.001, 0.015));
  BacktestConfig cfg = base_config(15, 5);
  cfg.strategies = {StrategyChoice(StrategyId::min_var), StrategyChoice(StrategyId::erc),
                    StrategyChoice(StrategyId::max_pdi),
                    StrategyChoice(CombinationKind::bootstrap)};
  cfg.seed = 9001;
  cfg.comb.B = 10;
  cfg.comb.fixed_block = 2.0;
  const auto first = run_backtest(panel, std::nullopt, cfg);
  const auto second = run_backtest(panel, std::nullopt, cfg);
  REQUIRE(first.size() == second.size());
  for (std::size_t s = 0; s < first.size(); ++s) {
    CHECK(first[s].target_weights == second[s].target_weights);
    CHECK(first[s].drifted_weights == second[s].drifted_weights);
    CHECK(first[s].daily_returns == second[s].daily_returns);
  }
}

TEST_CASE("return modes differ in the documented way") {
  Rng rng(108);
  const ReturnsPanel panel = ft::make_panel(ft::random_window(rng, 13, 2, 0.0, 0.03));
  BacktestConfig cfg = base_config(8, 5);

  cfg.return_mode = ReturnMode::target_log;
  const auto log_rec = run_backtest(panel, std::nullopt, cfg)[0];
  cfg.return_mode = ReturnMode::drifted_log;
  const auto drift_rec = run_backtest(panel, std::nullopt, cfg)[0];
  cfg.return_mode = ReturnMode::compound;
  const auto comp_rec = run_backtest(panel, std::nullopt, cfg)[0];

  // Day 0 of the period: no drift has happened yet, so target and drifted
  // modes agree; compounding differs (gross vs log returns).
  CHECK(log_rec.daily_returns[0] == doctest::Approx(drift_rec.daily_returns[0]).epsilon(1e-15));
  VectorXd w = VectorXd::Constant(2, 0.5);
  const double gross0 =
      0.5 * std::exp(panel.values(8, 0)) + 0.5 * std::exp(panel.values(8, 1)) - 1.0;
  CHECK(comp_rec.daily_returns[0] == doctest::Approx(gross0).epsilon(1e-14));

  // Replicate the drifting recursion independently for the whole period.
  for (Eigen::Index d = 0; d < 5; ++d) {
    const VectorXd x = panel.values.row(8 + d).transpose();
    CHECK(drift_rec.daily_returns[d] == doctest::Approx(w.dot(x)).epsilon(1e-13));
    VectorXd gross = x.array().exp().matrix();
    const double growth = w.dot(gross);
    w = (w.array() * gross.array() / growth).matrix();
  }
  // After the full period the drifted record matches the one-shot formula.
  const VectorXd one_shot =
      drift_weights(VectorXd::Constant(2, 0.5), panel.values.middleRows(8, 5));
  CHECK(drift_rec.drifted_weights(0, 0) == doctest::Approx(one_shot[0]).epsilon(1e-12));
}

TEST_CASE("solver failures are annotated with strategy and window") {
  // All expected returns negative: MV-S cannot find a positive-return target.
  ReturnsPanel panel = ft::make_panel(MatrixXd::Constant(8, 2, -0.01));
  BacktestConfig cfg = base_config(4, 1);
  cfg.strategies = {StrategyChoice(StrategyId::max_sharpe)};
  try {
    run_backtest(panel, std::nullopt, cfg);
    FAIL("expected SolverError");
  } catch (const SolverError& err) {
    const std::string message = err.what();
    CHECK(message.find("MV-S") != std::string::npos);
    CHECK(message.find("window 0") != std::string::npos);
  }
}

TEST_CASE("backtest configuration is validated") {
  Rng rng(109);
  PanelPair pair = make_pair_panel(rng, 30, 2);

  BacktestConfig cfg = base_config(10, 7);
  cfg.allow_any_k = false;
  CHECK_THROWS_AS(run_backtest(pair.returns, std::nullopt, cfg), ConfigError);
  cfg.allow_any_k = true;
  CHECK_NOTHROW(run_backtest(pair.returns, std::nullopt, cfg));

  cfg = base_config(10, 5);
  cfg.strategies.clear();
  CHECK_THROWS_AS(run_backtest(pair.returns, std::nullopt, cfg), ConfigError);

  cfg = base_config(29, 5);
  CHECK_THROWS_AS(run_backtest(pair.returns, std::nullopt, cfg), ValidationError);

  cfg = base_config(10, 5);
  cfg.libro = LiquiditySpec{};
  CHECK_THROWS_AS(run_backtest(pair.returns, std::nullopt, cfg), ConfigError);
  CHECK_NOTHROW(run_backtest(pair.returns, pair.volumes, cfg));

  cfg = base_config(10, 5);
  cfg.strategies = {StrategyChoice(StrategyId::ew),
                    StrategyChoice(CombinationKind::naive)};
  CHECK_THROWS_AS(run_backtest(pair.returns, std::nullopt, cfg), ConfigError);

  cfg = base_config(10, 5);
  cfg.gamma = 0.0;
  CHECK_THROWS_AS(run_backtest(pair.returns, std::nullopt, cfg), ConfigError);
  cfg = base_config(10, 5);
  cfg.alpha = 1.0;
  CHECK_THROWS_AS(run_backtest(pair.returns, std::nullopt, cfg), ConfigError);
}
