// Acceptance gate: one self-contained check per release criterion, each
// printing a single [PASS]/[FAIL] line with its pinned tolerance and the
// observed value. Exit status is nonzero when any criterion fails.
//
// The checks deliberately re-implement their objective evaluators (variance,
// Sharpe, empirical CVaR, PDI) locally so the solvers are judged against
// independent arithmetic, not against the library's own metric code.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <folio/backtest.hpp>
#include <folio/cli.hpp>
#include <folio/combination.hpp>
#include <folio/config.hpp>
#include <folio/inference.hpp>
#include <folio/liquidity.hpp>
#include <folio/metrics.hpp>
#include <folio/moments.hpp>
#include <folio/panel.hpp>
#include <folio/rng.hpp>
#include <folio/simplex.hpp>
#include <folio/strategies.hpp>

namespace {

using namespace folio;

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(const std::chrono::steady_clock::time_point& t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

std::string fmt(const char* pattern, ...) {
  char buf[512];
  va_list args;
  va_start(args, pattern);
  std::vsnprintf(buf, sizeof(buf), pattern, args);
  va_end(args);
  return buf;
}

// --- local objective evaluators ---------------------------------------------

double local_variance(const VectorXd& w, const MatrixXd& sigma) {
  return w.dot(sigma * w);
}

double local_sharpe(const VectorXd& w, const VectorXd& mu,
                    const MatrixXd& sigma) {
  return mu.dot(w) / std::sqrt(local_variance(w, sigma));
}

double local_cvar(const MatrixXd& window, const VectorXd& w, double alpha) {
  const VectorXd r = window * w;
  const auto S = r.size();
  const auto m = static_cast<Eigen::Index>(
      std::ceil(alpha * static_cast<double>(S)));
  std::vector<double> sorted(r.data(), r.data() + S);
  std::partial_sort(sorted.begin(), sorted.begin() + m, sorted.end());
  double tail = 0.0;
  for (Eigen::Index i = 0; i < m; ++i) tail += sorted[static_cast<std::size_t>(i)];
  return -tail / static_cast<double>(m);
}

double local_pdi(const VectorXd& w, const MatrixXd& sigma) {
  const MatrixXd weighted = w.asDiagonal() * sigma * w.asDiagonal();
  Eigen::SelfAdjointEigenSolver<MatrixXd> eig;
  eig.compute(weighted, Eigen::EigenvaluesOnly);
  const VectorXd lambda = eig.eigenvalues().cwiseMax(0.0);  // ascending
  const double total = lambda.sum();
  if (!(total > 0.0)) return 1.0;
  const auto n = lambda.size();
  double acc = 0.0;
  for (Eigen::Index i = 0; i < n; ++i)
    acc += static_cast<double>(n - i) * lambda[i];
  return 2.0 * acc / total - 1.0;
}

// --- random instance helpers -------------------------------------------------

MatrixXd random_cov(Rng& rng, int n, double vol_lo, double vol_hi) {
  MatrixXd a(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a(i, j) = rng.normal();
  MatrixXd c = a * a.transpose() +
               0.05 * static_cast<double>(n) * MatrixXd::Identity(n, n);
  const VectorXd d = c.diagonal().cwiseSqrt().cwiseInverse();
  MatrixXd corr = d.asDiagonal() * c * d.asDiagonal();
  VectorXd vols(n);
  for (int i = 0; i < n; ++i)
    vols[i] = vol_lo + (vol_hi - vol_lo) * rng.uniform01();
  MatrixXd cov = vols.asDiagonal() * corr * vols.asDiagonal();
  return 0.5 * (cov + cov.transpose());
}

/// Covariance with elementwise-nonnegative correlations (Σ = AAᵀ + εI with
/// A ≥ 0). Long-only DR² ≤ N is only a theorem on this class; with negative
/// correlations the ratio is unbounded above.
MatrixXd random_nonneg_cov(Rng& rng, int n) {
  MatrixXd a(n, n + 2);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n + 2; ++j) a(i, j) = std::abs(rng.normal()) * 0.1;
  MatrixXd cov = a * a.transpose();
  cov.diagonal().array() += 1e-4;
  return cov;
}

MatrixXd random_window(Rng& rng, int rows, int cols, double mean,
                       double scale) {
  MatrixXd x(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) x(r, c) = mean + scale * rng.normal();
  return x;
}

VectorXd random_simplex_point(Rng& rng, int n) {
  VectorXd w(n);
  for (int i = 0; i < n; ++i) w[i] = rng.uniform01() + 1e-3;
  return w / w.sum();
}

/// All long-only weight vectors on the 0.01 lattice, n ∈ {2, 3}.
std::vector<VectorXd> simplex_grid_001(int n) {
  std::vector<VectorXd> grid;
  const int ticks = 100;
  if (n == 2) {
    for (int a = 0; a <= ticks; ++a) {
      VectorXd w(2);
      w << a / 100.0, (ticks - a) / 100.0;
      grid.push_back(std::move(w));
    }
  } else {
    for (int a = 0; a <= ticks; ++a)
      for (int b = 0; b <= ticks - a; ++b) {
        VectorXd w(3);
        w << a / 100.0, b / 100.0, (ticks - a - b) / 100.0;
        grid.push_back(std::move(w));
      }
  }
  return grid;
}

// --- criteria ----------------------------------------------------------------

Outcome c1_solver_vs_grid() {
  const auto t0 = std::chrono::steady_clock::now();
  Rng rng(90001);
  const std::vector<VectorXd> grid2 = simplex_grid_001(2);
  const std::vector<VectorXd> grid3 = simplex_grid_001(3);

  double worst_minvar = 0.0;   // |solver - grid|
  double worst_sharpe = 0.0;   // |solver - grid|
  double worst_cvar = 0.0;     // |solver - grid|
  double worst_pdi = 0.0;      // max(grid - solver, 0): one-sided
  for (int rep = 0; rep < 200; ++rep) {
    const int n = 2 + static_cast<int>(rng.uniform_int(2));
    const std::vector<VectorXd>& grid = n == 2 ? grid2 : grid3;

    // MinVar.
    {
      MomentEstimates est;
      est.sigma_mat = random_cov(rng, n, 0.05, 0.3);
      est.vols = est.sigma_mat.diagonal().cwiseSqrt();
      est.mu = VectorXd::Zero(n);
      const VectorXd w = solve_min_var(est);
      double best = 1e300;
      for (const VectorXd& g : grid)
        best = std::min(best, local_variance(g, est.sigma_mat));
      worst_minvar = std::max(
          worst_minvar, std::abs(local_variance(w, est.sigma_mat) - best));
    }

    // MV-S.
    {
      MomentEstimates est;
      est.sigma_mat = random_cov(rng, n, 0.1, 0.3);
      est.vols = est.sigma_mat.diagonal().cwiseSqrt();
      VectorXd mu(n);
      for (int i = 0; i < n; ++i) mu[i] = 0.004 * rng.normal();
      mu.array() += 0.004 - mu.maxCoeff();  // ensure a positive best mean
      est.mu = mu;
      const VectorXd w = solve_max_sharpe(est);
      double best = -1e300;
      for (const VectorXd& g : grid)
        best = std::max(best, local_sharpe(g, est.mu, est.sigma_mat));
      worst_sharpe = std::max(
          worst_sharpe,
          std::abs(local_sharpe(w, est.mu, est.sigma_mat) - best));
    }

    // MinCVaR.
    {
      const MatrixXd window = random_window(rng, 30, n, 0.002, 0.008);
      const double alpha = 0.2;
      const VectorXd w = solve_min_cvar(window, alpha);
      double best = 1e300;
      for (const VectorXd& g : grid)
        best = std::min(best, local_cvar(window, g, alpha));
      worst_cvar =
          std::max(worst_cvar, std::abs(local_cvar(window, w, alpha) - best));
    }

    // MaxPDI (one-sided: the solver must dominate the lattice; a 0.01 lattice
    // cannot certify the global maximum of a nonconvex objective).
    {
      MatrixXd window = random_window(rng, 30, n, 0.0, 0.01);
      for (int c = 0; c < n; ++c)
        window.col(c) *= 0.5 + 1.5 * rng.uniform01();
      const MomentEstimates est = estimate_moments(window);
      const VectorXd w =
          solve_max_pdi(window, {}, 90100u + static_cast<std::uint64_t>(rep));
      double best = -1e300;
      for (const VectorXd& g : grid)
        best = std::max(best, local_pdi(g, est.sigma_mat));
      worst_pdi = std::max(worst_pdi, best - local_pdi(w, est.sigma_mat));
    }
  }

  const double elapsed = seconds_since(t0);
  const double tol = 1e-3;
  const bool pass = worst_minvar <= tol && worst_sharpe <= tol &&
                    worst_cvar <= tol && worst_pdi <= tol && elapsed < 60.0;
  return {pass,
          fmt("200 instances vs 0.01 grid; gaps: MinVar %.2e, MV-S %.2e, "
              "MinCVaR %.2e, MaxPDI %.2e (tol 1e-3); %.1fs (< 60s)",
              worst_minvar, worst_sharpe, worst_cvar, worst_pdi, elapsed)};
}

Outcome c2_erc() {
  Rng rng(90002);
  double worst_spread = 0.0;
  for (int rep = 0; rep < 100; ++rep) {
    const int n = 2 + static_cast<int>(rng.uniform_int(9));
    MomentEstimates est;
    est.sigma_mat = random_cov(rng, n, 0.05, 0.4);
    est.vols = est.sigma_mat.diagonal().cwiseSqrt();
    est.mu = VectorXd::Zero(n);
    const VectorXd w = solve_erc(est);
    const VectorXd contrib = risk_contributions(w, est.sigma_mat);
    const double mean = contrib.mean();
    worst_spread = std::max(
        worst_spread, (contrib.maxCoeff() - contrib.minCoeff()) / mean);
  }

  double identity_gap = 0.0;
  for (const int n : {2, 3, 5, 7, 10}) {
    MomentEstimates est;
    est.sigma_mat = MatrixXd::Identity(n, n);
    est.vols = VectorXd::Ones(n);
    est.mu = VectorXd::Zero(n);
    const VectorXd w = solve_erc(est);
    identity_gap = std::max(
        identity_gap,
        (w - VectorXd::Constant(n, 1.0 / n)).cwiseAbs().maxCoeff());
  }

  const bool pass = worst_spread < 1e-6 && identity_gap == 0.0;
  return {pass,
          fmt("100 matrices N<=10; max relative contribution spread %.2e "
              "(< 1e-6); identity-covariance EW gap %.1e (exact)",
              worst_spread, identity_gap)};
}

Outcome c3_metric_bounds() {
  Rng rng(90003);
  double bound_violation = 0.0;
  for (int rep = 0; rep < 1000; ++rep) {
    const int n = 2 + static_cast<int>(rng.uniform_int(7));
    MomentEstimates est;
    est.sigma_mat = random_nonneg_cov(rng, n);
    est.vols = est.sigma_mat.diagonal().cwiseSqrt();
    est.mu = VectorXd::Zero(n);
    const VectorXd w = random_simplex_point(rng, n);
    const DiversificationPoint point = diversification_metrics(w, est);
    const double nd = n;
    bound_violation = std::max({bound_violation,
                                1.0 - point.effective_n,
                                point.effective_n - nd,
                                1.0 - point.dr_squared,
                                point.dr_squared - nd,
                                1.0 - point.pdi,
                                point.pdi - (nd + 1e-6)});
  }

  // Inverse-volatility weights on uncorrelated assets: DR² = N exactly.
  double invvol_gap = 0.0;
  for (int rep = 0; rep < 100; ++rep) {
    const int n = 2 + static_cast<int>(rng.uniform_int(7));
    VectorXd vols(n);
    for (int i = 0; i < n; ++i) vols[i] = 0.05 + 0.3 * rng.uniform01();
    MomentEstimates est;
    est.sigma_mat = vols.array().square().matrix().asDiagonal();
    est.vols = vols;
    est.mu = VectorXd::Zero(n);
    VectorXd w = vols.cwiseInverse();
    w /= w.sum();
    const DiversificationPoint point = diversification_metrics(w, est);
    invvol_gap = std::max(invvol_gap, std::abs(point.dr_squared - n));
  }

  const bool pass = bound_violation <= 1e-6 && invvol_gap <= 1e-8;
  return {pass,
          fmt("1000 draws: worst bound violation %.2e (<= 1e-6); "
              "inverse-vol DR² gap to N %.2e (<= 1e-8)",
              bound_violation, invvol_gap)};
}

Outcome c4_ew_tto() {
  Rng rng(90004);
  double worst = 0.0;
  int runs = 0;
  for (const auto& [rows, window, k] :
       std::vector<std::tuple<int, int, int>>{{150, 40, 21}, {90, 30, 5},
                                              {70, 50, 1}}) {
    ReturnsPanel panel;
    panel.values = random_window(rng, rows, 4, 0.0005, 0.012);
    for (int r = 0; r < rows; ++r)
      panel.dates.push_back("d" + std::to_string(r));
    for (int j = 0; j < 4; ++j)
      panel.assets.push_back(AssetInfo{"A" + std::to_string(j)});

    BacktestConfig cfg;
    cfg.window_k_days = window;
    cfg.rebalance_days = k;
    cfg.strategies = {StrategyChoice(StrategyId::ew)};
    const auto records = run_backtest(panel, std::nullopt, cfg);
    const auto perf = performance_report(records, cfg.gamma);
    worst = std::max(worst, std::abs(perf.at(0).target_turnover));
    ++runs;
  }
  return {worst == 0.0,
          fmt("%d synthetic backtests: max |EW target turnover| = %.1e "
              "(exactly 0 required)",
              runs, worst)};
}

Outcome c5_lw_size() {
  const auto t0 = std::chrono::steady_clock::now();
  Rng rng(90005);
  const int reps = 1000;
  const int T = 2000;
  int rejections = 0;
  VectorXd r1(T), r2(T);
  for (int rep = 0; rep < reps; ++rep) {
    for (int t = 0; t < T; ++t) {
      r1[t] = 0.0005 + 0.01 * rng.normal();
      r2[t] = 0.0005 + 0.01 * rng.normal();
    }
    const PairwiseTestResult res =
        lw_pairwise_test(r1, r2, ComparisonMetric::sharpe);
    if (res.p_value < 0.05) ++rejections;
  }
  const double rate = static_cast<double>(rejections) / reps;
  const double elapsed = seconds_since(t0);
  const bool pass = rate >= 0.03 && rate <= 0.07 && elapsed < 300.0;
  return {pass,
          fmt("null rejection rate %.3f over %d reps at T=%d (in [0.03, "
              "0.07]); %.1fs (< 300s)",
              rate, reps, T, elapsed)};
}

Outcome c6_spanning() {
  Rng rng(90006);

  // Exactly spanned candidate: all statistics collapse to zero.
  const int T_exact = 120;
  MatrixXd bench(T_exact, 2);
  for (int t = 0; t < T_exact; ++t) {
    bench(t, 0) = 0.0004 + 0.01 * rng.normal();
    bench(t, 1) = 0.0002 + 0.007 * rng.normal();
  }
  const VectorXd spanned = 0.3 * bench.col(0) + 0.7 * bench.col(1);
  const SpanningResult exact = spanning_test(bench, spanned);
  const bool exact_ok = exact.exact && exact.f_hk == 0.0 && exact.f1 == 0.0 &&
                        exact.f2 == 0.0;

  // F1 size under the null (alpha = 0) with normal errors.
  const int reps = 1000;
  const int T = 100;
  int rejections = 0;
  MatrixXd x(T, 2);
  for (int rep = 0; rep < reps; ++rep) {
    VectorXd y(T);
    for (int t = 0; t < T; ++t) {
      x(t, 0) = 0.0004 + 0.01 * rng.normal();
      x(t, 1) = 0.0002 + 0.007 * rng.normal();
      y[t] = 0.5 * x(t, 0) + 0.3 * x(t, 1) + 0.005 * rng.normal();
    }
    if (spanning_test(x, y).p1 < 0.05) ++rejections;
  }
  const double rate = static_cast<double>(rejections) / reps;
  const bool pass = exact_ok && rate >= 0.03 && rate <= 0.07;
  return {pass,
          fmt("exact candidate: F_HK=%g F1=%g F2=%g (all 0); F1 null "
              "rejection %.3f over %d reps (in [0.03, 0.07])",
              exact.f_hk, exact.f1, exact.f2, rate, reps)};
}

Outcome c7_bootstrap_combination() {
  // Unanimous dominance: model 0's constant portfolio beats model 1 on every
  // possible resample, so the vote must be exactly (1, 0).
  MatrixXd window(24, 2);
  Rng rng(90007);
  for (int t = 0; t < 24; ++t) {
    window(t, 0) = 0.01 + 0.001 * rng.normal();
    window(t, 1) = -0.01 + 0.001 * rng.normal();
  }
  auto constant_model = [](double first) {
    return StrategySolver([first](const MatrixXd&, std::uint64_t) {
      VectorXd w(2);
      w << first, 1.0 - first;
      return w;
    });
  };
  std::vector<StrategySolver> models = {constant_model(1.0),
                                        constant_model(0.0)};
  BootstrapConfig cfg;
  cfg.B = 500;
  cfg.seed = 41;
  const BootstrapCombination unanimous =
      combine_bootstrap(models, window, cfg);
  const bool unanimous_ok =
      unanimous.shares.pi[0] == 1.0 && unanimous.shares.pi[1] == 0.0;

  // Mirror symmetry: rows M+m are the column swap of rows m, so a column
  // swap equals an index rotation by M, and the stationary bootstrap's index
  // distribution is rotation-invariant: P(model 0 wins) = 1/2 exactly.
  const int M = 20;
  MatrixXd mirror(2 * M, 2);
  for (int m = 0; m < M; ++m) {
    const double a = 0.02 * (rng.uniform01() - 0.5);
    const double b = 0.02 * (rng.uniform01() - 0.5);
    mirror(m, 0) = a;
    mirror(m, 1) = b;
    mirror(M + m, 0) = b;
    mirror(M + m, 1) = a;
  }
  BootstrapConfig mirror_cfg;
  mirror_cfg.B = 1000;
  mirror_cfg.seed = 2024;
  // The paired construction makes the equal-weight series periodic, which is
  // adversarial for the automatic block-length rule; the symmetry holds for
  // any block length, so pin one.
  mirror_cfg.fixed_block = 2.0;
  const BootstrapCombination mirrored =
      combine_bootstrap(models, mirror, mirror_cfg);
  const double three_se = 3.0 * std::sqrt(0.25 / 1000.0);
  const double mirror_gap = std::abs(mirrored.shares.pi[0] - 0.5);

  // Byte-identical rerun.
  const BootstrapCombination again =
      combine_bootstrap(models, mirror, mirror_cfg);
  const bool identical =
      again.shares.pi == mirrored.shares.pi &&
      again.weights == mirrored.weights &&
      again.expected_block == mirrored.expected_block;

  const bool pass = unanimous_ok && mirror_gap <= three_se && identical;
  return {pass,
          fmt("unanimous vote pi=(%g, %g) (exact); mirror |pi0-0.5| = %.4f "
              "(<= 3 SE = %.4f at B=1000); rerun byte-identical: %s",
              unanimous.shares.pi[0], unanimous.shares.pi[1], mirror_gap,
              three_se, identical ? "yes" : "no")};
}

Outcome c8_frontier_shape() {
  // Two traditional assets plus one CC-like asset: high mean, high variance,
  // weakly correlated.
  MomentEstimates trad;
  trad.mu = VectorXd(2);
  trad.mu << 0.0003, 0.0005;
  trad.sigma_mat = MatrixXd(2, 2);
  trad.sigma_mat << 1.0e-4, 0.36e-4, 0.36e-4, 1.44e-4;
  trad.vols = trad.sigma_mat.diagonal().cwiseSqrt();

  MomentEstimates full;
  full.mu = VectorXd(3);
  full.mu << 0.0003, 0.0005, 0.005;
  full.sigma_mat = MatrixXd(3, 3);
  full.sigma_mat << 1.0e-4, 0.36e-4, 0.8e-4,  //
      0.36e-4, 1.44e-4, 0.96e-4,              //
      0.8e-4, 0.96e-4, 64.0e-4;
  full.vols = full.sigma_mat.diagonal().cwiseSqrt();

  const Frontier f_trad = trace_frontier(trad, 30);
  const Frontier f_full = trace_frontier(full, 30);

  auto max_target = [](const Frontier& f) {
    double best = -1e300;
    for (const auto& p : f.points) best = std::max(best, p.target_return);
    return best;
  };
  auto min_risk = [](const Frontier& f) {
    double best = 1e300;
    for (const auto& p : f.points) best = std::min(best, p.risk);
    return best;
  };

  const double trad_max = max_target(f_trad);
  const double full_max = max_target(f_full);
  const double trad_min_risk = min_risk(f_trad);
  const double full_min_risk = min_risk(f_full);

  // Binding LIBRO caps: tiny traded volume for the CC-like asset caps it at
  // 0.2 of the portfolio, which must pull the maximum attainable return down.
  MatrixXd volumes(10, 3);
  volumes.col(0).setConstant(1e12);
  volumes.col(1).setConstant(1e12);
  volumes.col(2).setConstant(2e8);
  LiquiditySpec spec;
  spec.investment_sum = 1e7;
  spec.volume_fraction = 0.01;
  spec.lookback = 10;
  const BoundsSpec caps = compute_caps(volumes, spec);
  const Frontier f_capped = trace_frontier(full, 30, caps);
  const double capped_max = max_target(f_capped);

  // The traced minimum is taken over a fixed-size return grid, so widening
  // the grid (the CC-like asset stretches its upper end) can sample the
  // min-variance region slightly more coarsely in either direction; "nearly
  // unchanged" is therefore a symmetric relative band.  Exact monotonicity
  // (a superset universe can never raise the true minimum variance) is
  // checked separately on the unconstrained min-variance solutions.
  const VectorXd w_trad = solve_min_var(trad);
  const VectorXd w_full = solve_min_var(full);
  const double exact_trad = w_trad.dot(trad.sigma_mat * w_trad);
  const double exact_full = w_full.dot(full.sigma_mat * w_full);

  const bool extends = full_max > trad_max + 1e-3;
  const bool min_risk_stable =
      std::abs(full_min_risk - trad_min_risk) <= 0.05 * trad_min_risk &&
      exact_full <= exact_trad + 1e-12;
  const bool caps_bind = capped_max < full_max - 1e-3;
  const bool pass = extends && min_risk_stable && caps_bind;
  return {pass,
          fmt("max return %.2e -> %.2e with CC-like asset (extends); "
              "traced min variance %.3e -> %.3e (within 5%%), exact "
              "%.3e -> %.3e (monotone); capped max %.2e (reduced)",
              trad_max, full_max, trad_min_risk, full_min_risk, exact_trad,
              exact_full, capped_max)};
}

Outcome c9_end_to_end() {
  namespace fs = std::filesystem;
  const auto t0 = std::chrono::steady_clock::now();

  // Synthetic panel: N=20, P=1500, mild factor structure.
  Rng rng(90009);
  const int P = 1500;
  const int N = 20;
  MatrixXd values(P, N);
  for (int t = 0; t < P; ++t) {
    const double market = 0.008 * rng.normal();
    for (int j = 0; j < N; ++j)
      values(t, j) = 0.0002 + 0.0001 * (j % 5) + 0.6 * market +
                     0.01 * (1.0 + 0.05 * j) * rng.normal();
  }

  const fs::path dir = fs::current_path() / "scratch_acceptance_e2e";
  fs::remove_all(dir);
  fs::create_directories(dir);
  ReturnsPanel panel;
  panel.values = values;
  for (int t = 0; t < P; ++t) {
    const int y = 2018 + t / 360, m = 1 + (t / 30) % 12, d = 1 + t % 30;
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d", y, m, d);
    panel.dates.push_back(buf);
  }
  for (int j = 0; j < N; ++j)
    panel.assets.push_back(AssetInfo{"A" + std::to_string(j)});
  save_panel(panel, dir / "returns.csv");

  IniMap ini{{"data.returns", (dir / "returns.csv").string()},
             {"backtest.window_days", "252"},
             {"backtest.rebalance", "monthly"},
             {"backtest.seed", "7"},
             {"comb.B", "25"},
             {"comb.seed", "7"},
             {"output.directory", (dir / "out").string()}};
  const RunConfig cfg = resolve_config(ini);

  // The < 60 s budget covers one full backtest; the repeat run below only
  // serves the bit-for-bit reproducibility check and is not timed.
  const CommandResult first = run_backtest_command(cfg);
  const double run_seconds = seconds_since(t0);
  std::map<std::string, std::string> snapshot;
  for (const auto& file : first.files) {
    std::ifstream in(file, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    snapshot[file.filename().string()] = ss.str();
  }

  const CommandResult second = run_backtest_command(cfg);
  bool identical = first.files.size() == second.files.size();
  for (const auto& file : second.files) {
    std::ifstream in(file, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    identical =
        identical && snapshot.at(file.filename().string()) == ss.str();
  }

  const bool pass = identical && run_seconds < 60.0;
  return {pass,
          fmt("N=20, P=1500, monthly, 9 strategies: one run %.1fs (< 60s); "
              "untimed rerun byte-identical: %s",
              run_seconds, identical ? "yes" : "no")};
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    Outcome (*fn)();
  };
  const std::vector<Criterion> criteria = {
      {"solver objectives vs exhaustive grid", &c1_solver_vs_grid},
      {"equal risk contribution exactness", &c2_erc},
      {"diversification metric bounds", &c3_metric_bounds},
      {"equal-weight target turnover", &c4_ew_tto},
      {"pairwise test size under the null", &c5_lw_size},
      {"spanning test exactness and size", &c6_spanning},
      {"bootstrap model combination", &c7_bootstrap_combination},
      {"frontier shape with a CC-like asset", &c8_frontier_shape},
      {"end-to-end determinism and scale", &c9_end_to_end},
  };

  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome outcome;
    try {
      outcome = criteria[i].fn();
    } catch (const std::exception& e) {
      outcome = {false, std::string("exception: ") + e.what()};
    }
    std::printf("[%s] %zu. %s: %s\n", outcome.pass ? "PASS" : "FAIL", i + 1,
                criteria[i].name, outcome.detail.c_str());
    std::fflush(stdout);
    if (!outcome.pass) ++failures;
  }
  if (failures) std::printf("%d of 9 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
