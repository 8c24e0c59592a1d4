#pragma once

// Statistical inference on backtest results: HAC-robust pairwise comparisons
// of Sharpe ratios and certainty equivalents between two return series, and
// regression-based mean-variance spanning tests (joint F test plus the
// step-down pair of single-restriction F tests).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>

#include <Eigen/Dense>
#include <boost/math/distributions/fisher_f.hpp>

#include <folio/common.hpp>

namespace folio {

/// Which performance functional a pairwise comparison tests.
enum class ComparisonMetric { sharpe, ceq };

inline const char* metric_name(ComparisonMetric metric) {
  return metric == ComparisonMetric::sharpe ? "sharpe" : "ceq";
}

inline std::optional<ComparisonMetric> parse_metric(std::string_view name) {
  if (name == "sharpe") return ComparisonMetric::sharpe;
  if (name == "ceq") return ComparisonMetric::ceq;
  return std::nullopt;
}

/// Options for the kernel long-run covariance estimator. A non-positive
/// bandwidth selects the Andrews AR(1) plug-in rule.
struct HacOptions {
  double bandwidth = 0.0;
};

struct PairwiseTestResult {
  double difference = 0.0;  ///< metric(first) - metric(second)
  double statistic = 0.0;   ///< asymptotically standard normal under H0
  double p_value = 1.0;     ///< two-sided
  double se = 0.0;          ///< delta-method standard error of the difference
  double bandwidth = 0.0;   ///< kernel bandwidth actually used
  bool degenerate = false;  ///< true when the statistic is undefined
};

namespace detail {

/// Parzen lag window: 1-6x^2+6|x|^3 on [0,1/2], 2(1-|x|)^3 on (1/2,1], else 0.
inline double parzen_kernel(double x) {
  const double a = std::abs(x);
  if (a <= 0.5) return 1.0 - 6.0 * a * a + 6.0 * a * a * a;
  if (a <= 1.0) {
    const double b = 1.0 - a;
    return 2.0 * b * b * b;
  }
  return 0.0;
}

/// Andrews (1991) AR(1) plug-in bandwidth for the Parzen kernel applied to the
/// columns of an already demeaned series. Returns 0 when every column is
/// degenerate, in which case the caller falls back to the lag-0 covariance.
inline double andrews_bandwidth(const MatrixXd& u) {
  const Eigen::Index n = u.rows();
  double num = 0.0;
  double den = 0.0;
  for (Eigen::Index a = 0; a < u.cols(); ++a) {
    double sxy = 0.0;
    double sxx = 0.0;
    for (Eigen::Index t = 1; t < n; ++t) {
      sxy += u(t, a) * u(t - 1, a);
      sxx += u(t - 1, a) * u(t - 1, a);
    }
    if (!(sxx > 0.0)) continue;
    // Clamp the AR coefficient away from the unit root so the (1-rho) powers
    // below stay finite.
    const double rho = std::clamp(sxy / sxx, -0.97, 0.97);
    double s2 = 0.0;
    for (Eigen::Index t = 1; t < n; ++t) {
      const double e = u(t, a) - rho * u(t - 1, a);
      s2 += e * e;
    }
    s2 /= static_cast<double>(n - 1);
    const double om = 1.0 - rho;
    const double om2 = om * om;
    const double om4 = om2 * om2;
    num += 4.0 * rho * rho * s2 * s2 / (om4 * om4);
    den += s2 * s2 / om4;
  }
  if (!(den > 0.0) || !std::isfinite(num)) return 0.0;
  const double alpha2 = num / den;
  return 2.6614 * std::pow(alpha2 * static_cast<double>(n), 0.2);
}

/// Kernel-weighted long-run covariance of the rows of a demeaned series:
/// Gamma(0) + sum_k w(k/S) (Gamma(k) + Gamma(k)'). Estimates the asymptotic
/// covariance of sqrt(n) times the sample mean.
inline MatrixXd hac_covariance(const MatrixXd& u, double bandwidth) {
  const Eigen::Index n = u.rows();
  const double nd = static_cast<double>(n);
  MatrixXd psi = (u.transpose() * u) / nd;
  if (bandwidth > 1.0) {  // the Parzen window vanishes at and beyond lag S
    const Eigen::Index max_lag = std::min<Eigen::Index>(
        n - 1, static_cast<Eigen::Index>(std::floor(bandwidth)));
    for (Eigen::Index k = 1; k <= max_lag; ++k) {
      const double w = parzen_kernel(static_cast<double>(k) / bandwidth);
      if (w <= 0.0) continue;
      const MatrixXd gamma_k =
          (u.bottomRows(n - k).transpose() * u.topRows(n - k)) / nd;
      psi.noalias() += w * (gamma_k + gamma_k.transpose());
    }
  }
  return psi;
}

/// Two-sided tail probability of a standard normal variate.
inline double normal_two_sided_p(double z) {
  return std::erfc(std::abs(z) / std::sqrt(2.0));
}

}  // namespace detail

/// HAC-robust test of equal Sharpe ratio or equal certainty equivalent between
/// two aligned return series. The statistic applies the delta method to the
/// first two noncentral moments of both series; the long-run covariance of
/// those moments uses a Parzen kernel with an Andrews plug-in bandwidth unless
/// one is supplied. `gamma` is the risk-aversion coefficient of the certainty
/// equivalent and is ignored for the Sharpe comparison.
///
/// Series with (numerically) zero variance make the Sharpe ratio undefined and
/// the comparison untestable; such calls return `degenerate = true` with
/// p-value 1 rather than failing.
inline PairwiseTestResult lw_pairwise_test(const VectorXd& returns_first,
                                           const VectorXd& returns_second,
                                           ComparisonMetric metric,
                                           double gamma = 1.0,
                                           const HacOptions& hac = {}) {
  const Eigen::Index n = returns_first.size();
  if (returns_second.size() != n)
    throw ValidationError("pairwise test requires two aligned return series");
  if (n < 30)
    throw ValidationError(
        "pairwise test requires at least 30 observations, got " +
        std::to_string(n));
  if (metric == ComparisonMetric::ceq && !(gamma > 0.0))
    throw ConfigError("risk aversion must be positive");

  MatrixXd nu(n, 4);
  nu.col(0) = returns_first;
  nu.col(1) = returns_second;
  nu.col(2) = returns_first.array().square();
  nu.col(3) = returns_second.array().square();

  const Eigen::Vector4d nubar = nu.colwise().mean();
  const double mu_1 = nubar[0];
  const double mu_2 = nubar[1];
  const double g_1 = nubar[2];
  const double g_2 = nubar[3];
  const double v_1 = g_1 - mu_1 * mu_1;
  const double v_2 = g_2 - mu_2 * mu_2;

  PairwiseTestResult out;
  const double nan = std::numeric_limits<double>::quiet_NaN();

  // A constant series leaves only rounding residue in the variance; compare
  // against the squared data scale rather than zero.
  const bool flat_1 = v_1 <= 1e-12 * std::max(g_1, 1e-300);
  const bool flat_2 = v_2 <= 1e-12 * std::max(g_2, 1e-300);

  Eigen::Vector4d grad;
  if (metric == ComparisonMetric::sharpe) {
    if (flat_1 || flat_2) {
      out.difference = nan;
      out.statistic = nan;
      out.degenerate = true;
      return out;
    }
    const double s1 = std::sqrt(v_1);
    const double s2 = std::sqrt(v_2);
    out.difference = mu_1 / s1 - mu_2 / s2;
    grad << g_1 / (s1 * s1 * s1), -g_2 / (s2 * s2 * s2),
        -mu_1 / (2.0 * s1 * s1 * s1), mu_2 / (2.0 * s2 * s2 * s2);
  } else {
    out.difference =
        (mu_1 - 0.5 * gamma * v_1) - (mu_2 - 0.5 * gamma * v_2);
    grad << 1.0 + gamma * mu_1, -(1.0 + gamma * mu_2), -0.5 * gamma,
        0.5 * gamma;
  }

  const MatrixXd u = nu.rowwise() - nubar.transpose();
  out.bandwidth = hac.bandwidth > 0.0 ? hac.bandwidth
                                      : detail::andrews_bandwidth(u);
  const MatrixXd psi = detail::hac_covariance(u, out.bandwidth);
  const double avar = grad.dot(psi * grad);
  out.se = avar > 0.0 ? std::sqrt(avar / static_cast<double>(n)) : 0.0;
  if (!(out.se > 0.0) || !std::isfinite(out.se)) {
    out.statistic = nan;
    out.p_value = 1.0;
    out.degenerate = true;
    return out;
  }
  out.statistic = out.difference / out.se;
  out.p_value = detail::normal_two_sided_p(out.statistic);
  return out;
}

/// Result of regressing one candidate return series on a benchmark set.
/// `f_hk`/`p_hk` jointly test intercept zero and slopes summing to one; `f1`
/// tests the intercept alone and `f2` the slope-sum restriction with the
/// intercept already imposed (the step-down decomposition). When the
/// benchmarks reproduce the candidate exactly the F statistics are pinned at
/// zero with p-value 1 and `exact` is set.
struct SpanningResult {
  double f_hk = 0.0;
  double p_hk = 1.0;
  double f1 = 0.0;
  double p1 = 1.0;
  double f2 = 0.0;
  double p2 = 1.0;
  double alpha = 0.0;   ///< unrestricted intercept
  VectorXd beta;        ///< unrestricted slopes
  double rss_u = 0.0;   ///< unrestricted residual sum of squares
  double rss_r1 = 0.0;  ///< residual sum of squares with intercept zero
  double rss_r2 = 0.0;  ///< ... with intercept zero and slopes summing to one
  bool exact = false;
};

/// Mean-variance spanning test of a candidate asset against a benchmark
/// universe, via three nested least-squares fits of the candidate's returns on
/// the benchmarks': unrestricted with intercept, intercept dropped, and
/// intercept dropped with slopes constrained to sum to one (substituted out
/// through the last benchmark column).
inline SpanningResult spanning_test(const MatrixXd& benchmarks,
                                    const VectorXd& candidate) {
  const Eigen::Index rows = benchmarks.rows();
  const Eigen::Index kb = benchmarks.cols();
  if (kb < 1) throw ValidationError("spanning test requires a benchmark set");
  if (candidate.size() != rows)
    throw ValidationError("candidate series must align with benchmark rows");
  if (rows < kb + 3)
    throw ValidationError(
        "spanning test requires at least " + std::to_string(kb + 3) +
        " observations for " + std::to_string(kb) + " benchmarks, got " +
        std::to_string(rows));

  MatrixXd design(rows, kb + 1);
  design.col(0).setOnes();
  design.rightCols(kb) = benchmarks;
  Eigen::ColPivHouseholderQR<MatrixXd> qr(design);
  if (qr.rank() < kb + 1)
    throw ValidationError("benchmark returns are collinear");
  const VectorXd coef_u = qr.solve(candidate);
  const double rss_u = (candidate - design * coef_u).squaredNorm();

  const VectorXd coef_r1 = benchmarks.colPivHouseholderQr().solve(candidate);
  const double rss_r1 = (candidate - benchmarks * coef_r1).squaredNorm();

  // Substituting beta_K = 1 - sum of the others turns the doubly restricted
  // fit into an ordinary regression of y - x_K on the benchmark differences.
  double rss_r2 = 0.0;
  const VectorXd shifted = candidate - benchmarks.col(kb - 1);
  if (kb == 1) {
    rss_r2 = shifted.squaredNorm();
  } else {
    const MatrixXd diffs =
        benchmarks.leftCols(kb - 1).colwise() - benchmarks.col(kb - 1);
    const VectorXd delta = diffs.colPivHouseholderQr().solve(shifted);
    rss_r2 = (shifted - diffs * delta).squaredNorm();
  }

  SpanningResult out;
  out.alpha = coef_u[0];
  out.beta = coef_u.tail(kb);
  out.rss_u = rss_u;
  out.rss_r1 = rss_r1;
  out.rss_r2 = rss_r2;

  if (rss_u <= 1e-12 * candidate.squaredNorm()) {
    out.exact = true;
    return out;
  }

  const double df_u = static_cast<double>(rows - kb - 1);
  const double df_r1 = static_cast<double>(rows - kb);
  // The three fits are nested, so the differences are nonnegative up to
  // rounding; clamp so rounding cannot produce a negative F.
  const double gap_hk = std::max(0.0, rss_r2 - rss_u);
  const double gap_1 = std::max(0.0, rss_r1 - rss_u);
  const double gap_2 = std::max(0.0, rss_r2 - rss_r1);
  out.f_hk = (gap_hk / 2.0) / (rss_u / df_u);
  out.f1 = gap_1 / (rss_u / df_u);
  out.f2 = gap_2 / (rss_r1 / df_r1);

  const boost::math::fisher_f dist_joint(2.0, df_u);
  const boost::math::fisher_f dist_alpha(1.0, df_u);
  const boost::math::fisher_f dist_sum(1.0, df_r1);
  out.p_hk = boost::math::cdf(boost::math::complement(dist_joint, out.f_hk));
  out.p1 = boost::math::cdf(boost::math::complement(dist_alpha, out.f1));
  out.p2 = boost::math::cdf(boost::math::complement(dist_sum, out.f2));
  return out;
}

}  // namespace folio
