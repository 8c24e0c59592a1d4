#pragma once

// Scoring of backtest records: performance measures (cumulative wealth,
// Sharpe and adjusted Sharpe ratios, certainty equivalent, turnover) and
// diversification measures (effective number of assets, diversification
// ratio, portfolio diversification index).
//
// Wealth accumulates additively, W_{t+1} = W_t + ŵᵀX_{t+1} with W₀ = 1; a
// compounding alternative is available behind the same flag as the backtest
// return mode. Undefined ratios (zero volatility) are reported as quiet NaN
// sentinels rather than errors so a full report can still be produced.

#include <cmath>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "folio/backtest.hpp"
#include "folio/common.hpp"
#include "folio/moments.hpp"
#include "folio/panel.hpp"
#include "folio/strategies.hpp"

namespace folio {

struct PerformanceRow {
  std::string strategy;
  double cum_wealth = 1.0;
  double sharpe = 0.0;           // NaN when volatility is zero
  double adj_sharpe = 0.0;       // NaN when volatility is zero
  double ceq = 0.0;              // per-day certainty equivalent
  double turnover = 0.0;         // NaN when fewer than 2 rebalances
  double target_turnover = 0.0;  // NaN when fewer than 2 rebalances
};

struct DiversificationPoint {
  double effective_n = 1.0;
  double dr_squared = 1.0;  // NaN when portfolio volatility is zero
  double pdi = 1.0;
};

struct DiversificationRow {
  std::string strategy;
  double effective_n = 1.0;
  double dr_squared = 1.0;
  double pdi = 1.0;
};

namespace detail {

inline double nan_sentinel() { return std::numeric_limits<double>::quiet_NaN(); }

}  // namespace detail

/// CW, SR, ASR, and CEQ from a record's daily returns. Turnover fields are
/// left at NaN; merge them from turnover_metrics when T >= 2.
inline PerformanceRow performance_metrics(const BacktestRecord& record, double gamma,
                                          bool compound_wealth = false) {
  const Eigen::Index n = record.daily_returns.size();
  if (n < 1) throw ValidationError("performance_metrics: empty daily returns");
  const VectorXd& r = record.daily_returns;

  PerformanceRow row;
  row.strategy = record.strategy;
  row.turnover = detail::nan_sentinel();
  row.target_turnover = detail::nan_sentinel();

  if (compound_wealth) {
    double w = 1.0;
    for (Eigen::Index t = 0; t < n; ++t) w *= 1.0 + r[t];
    row.cum_wealth = w;
  } else {
    row.cum_wealth = 1.0 + r.sum();
  }

  const double mean = r.mean();
  const VectorXd centered = r.array() - mean;
  const double sd =
      n > 1 ? std::sqrt(centered.squaredNorm() / static_cast<double>(n - 1)) : 0.0;
  row.ceq = mean - 0.5 * gamma * sd * sd;

  if (sd > 0.0) {
    const double sr = mean / sd;
    // Population central moments, matching the descriptive statistics module.
    const double m2 = centered.squaredNorm() / static_cast<double>(n);
    const double m3 = centered.array().cube().sum() / static_cast<double>(n);
    const double m4 = centered.array().square().square().sum() / static_cast<double>(n);
    const double skew = m3 / std::pow(m2, 1.5);
    const double exkurt = m4 / (m2 * m2) - 3.0;
    row.sharpe = sr;
    row.adj_sharpe = sr * (1.0 + skew / 6.0 * sr - exkurt / 24.0 * sr * sr);
  } else {
    row.sharpe = detail::nan_sentinel();
    row.adj_sharpe = detail::nan_sentinel();
  }
  return row;
}

/// (TO, TTO): mean absolute rebalancing trade against drifted and previous
/// target weights, averaged over the T−1 rebalance transitions.
inline std::pair<double, double> turnover_metrics(const BacktestRecord& record) {
  const Eigen::Index T = record.target_weights.rows();
  if (T < 2) throw ValidationError("turnover_metrics: need at least 2 rebalances");
  double to = 0.0;
  double tto = 0.0;
  for (Eigen::Index t = 0; t + 1 < T; ++t) {
    to += (record.target_weights.row(t + 1) - record.drifted_weights.row(t))
              .cwiseAbs()
              .sum();
    tto += (record.target_weights.row(t + 1) - record.target_weights.row(t))
               .cwiseAbs()
               .sum();
  }
  const double transitions = static_cast<double>(T - 1);
  return {to / transitions, tto / transitions};
}

/// Point-in-time diversification measures of a weight vector under the
/// moments estimated from its own window.
inline DiversificationPoint diversification_metrics(const VectorXd& w,
                                                    const MomentEstimates& est) {
  if (w.size() != est.vols.size())
    throw ValidationError("diversification_metrics: dimension mismatch");
  DiversificationPoint point;
  point.effective_n = 1.0 / w.squaredNorm();

  const double avg_vol = w.dot(est.vols);
  const double variance = w.dot(est.sigma_mat * w);
  point.dr_squared =
      variance > 0.0 ? (avg_vol * avg_vol) / variance : detail::nan_sentinel();

  point.pdi = pdi_of_weights(w, est.sigma_mat);
  return point;
}

/// Full performance table: one row per record, turnover merged when defined.
inline std::vector<PerformanceRow> performance_report(
    const std::vector<BacktestRecord>& records, double gamma,
    bool compound_wealth = false) {
  std::vector<PerformanceRow> rows;
  rows.reserve(records.size());
  for (const auto& record : records) {
    PerformanceRow row = performance_metrics(record, gamma, compound_wealth);
    if (record.target_weights.rows() >= 2) {
      const auto [to, tto] = turnover_metrics(record);
      row.turnover = to;
      row.target_turnover = tto;
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

/// Time-averaged diversification table: metrics evaluated at every rebalance
/// date under that date's estimation window, then averaged arithmetically.
inline std::vector<DiversificationRow> diversification_report(
    const ReturnsPanel& panel, const std::vector<BacktestRecord>& records,
    int window_k_days) {
  std::vector<DiversificationRow> rows;
  rows.reserve(records.size());
  if (records.empty()) return rows;

  const Eigen::Index T = records.front().target_weights.rows();
  // Estimation moments are shared across strategies at each rebalance date.
  std::vector<MomentEstimates> estimates;
  estimates.reserve(static_cast<std::size_t>(T));
  for (Eigen::Index t = 0; t < T; ++t) {
    const Eigen::Index start = records.front().rebalance_rows[static_cast<std::size_t>(t)] -
                               static_cast<Eigen::Index>(window_k_days);
    if (start < 0) throw ValidationError("diversification_report: window precedes panel");
    estimates.push_back(
        estimate_moments(panel.values.middleRows(start, window_k_days)));
  }

  for (const auto& record : records) {
    if (record.target_weights.rows() != T)
      throw ValidationError("diversification_report: records disagree on period count");
    DiversificationRow row;
    row.strategy = record.strategy;
    double neff = 0.0, dr2 = 0.0, pdi = 0.0;
    for (Eigen::Index t = 0; t < T; ++t) {
      const DiversificationPoint point = diversification_metrics(
          record.target_weights.row(t).transpose(), estimates[static_cast<std::size_t>(t)]);
      neff += point.effective_n;
      dr2 += point.dr_squared;
      pdi += point.pdi;
    }
    const double count = static_cast<double>(T);
    row.effective_n = neff / count;
    row.dr_squared = dr2 / count;
    row.pdi = pdi / count;
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace folio
