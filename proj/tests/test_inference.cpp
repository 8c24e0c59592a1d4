#include <doctest.h>

#include <folio/inference.hpp>
#include <folio/rng.hpp>

#include <cmath>
#include <cstdint>
#include <vector>

#include "support/testutil.hpp"

using namespace folio;
namespace ft = folio::testing;

namespace {

// Linear congruential uniforms on [-0.5, 0.5); multiply/add only, so the
// Python oracle reproduces the exact same doubles.
std::vector<double> lcg_stream(std::uint64_t seed, int count) {
  std::vector<double> out(static_cast<std::size_t>(count));
  std::uint64_t u = seed;
  for (int i = 0; i < count; ++i) {
    u = 6364136223846793005ULL * u + 1442695040888963407ULL;
    out[static_cast<std::size_t>(i)] =
        static_cast<double>(u >> 11) * 0x1.0p-53 - 0.5;
  }
  return out;
}

struct FrozenPair {
  VectorXd r1;
  VectorXd r2;
};

FrozenPair frozen_pair() {
  const auto z = lcg_stream(777, 400);
  FrozenPair out{VectorXd(200), VectorXd(200)};
  for (int t = 0; t < 200; ++t) {
    out.r1[t] = 0.002 + 0.01 * z[static_cast<std::size_t>(2 * t)];
    out.r2[t] = 0.001 + 0.006 * z[static_cast<std::size_t>(2 * t)] +
                0.008 * z[static_cast<std::size_t>(2 * t + 1)];
  }
  return out;
}

}  // namespace

TEST_CASE("parzen kernel matches its closed form at dyadic points") {
  CHECK(detail::parzen_kernel(0.0) == 1.0);
  CHECK(detail::parzen_kernel(0.25) == 0.71875);
  CHECK(detail::parzen_kernel(0.5) == 0.25);
  CHECK(detail::parzen_kernel(0.75) == 0.03125);
  CHECK(detail::parzen_kernel(1.0) == 0.0);
  CHECK(detail::parzen_kernel(1.5) == 0.0);
  CHECK(detail::parzen_kernel(-0.25) == 0.71875);
  CHECK(detail::parzen_kernel(-0.75) == 0.03125);
}

TEST_CASE("hac covariance with bandwidth at most one is the lag-zero matrix") {
  Rng rng(41);
  MatrixXd u = ft::random_window(rng, 40, 3, 0.0, 1.0);
  u.rowwise() -= u.colwise().mean();
  const MatrixXd lag0 = (u.transpose() * u) / 40.0;
  const MatrixXd psi = detail::hac_covariance(u, 1.0);
  CHECK((psi - lag0).cwiseAbs().maxCoeff() == 0.0);
  const MatrixXd psi_wide = detail::hac_covariance(u, 5.0);
  CHECK((psi_wide - lag0).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("lw_pairwise_test reproduces frozen oracle values") {
  const FrozenPair data = frozen_pair();

  SUBCASE("sharpe, automatic bandwidth") {
    const PairwiseTestResult r =
        lw_pairwise_test(data.r1, data.r2, ComparisonMetric::sharpe);
    CHECK(!r.degenerate);
    CHECK(r.difference == doctest::Approx(0.389667209656815).epsilon(1e-12));
    CHECK(r.bandwidth == doctest::Approx(4.647553000915458).epsilon(1e-10));
    CHECK(r.se == doctest::Approx(0.06064471069522271).epsilon(1e-10));
    CHECK(r.statistic == doctest::Approx(6.4254113044604075).epsilon(1e-9));
    CHECK(r.p_value ==
          doctest::Approx(1.3151343038625883e-10).epsilon(1e-7).scale(0.0));
  }

  SUBCASE("certainty equivalent, gamma 3, automatic bandwidth") {
    const PairwiseTestResult r =
        lw_pairwise_test(data.r1, data.r2, ComparisonMetric::ceq, 3.0);
    CHECK(!r.degenerate);
    CHECK(r.difference ==
          doctest::Approx(0.0011801158619050662).epsilon(1e-12).scale(0.0));
    CHECK(r.bandwidth == doctest::Approx(4.647553000915458).epsilon(1e-10));
    CHECK(r.se ==
          doctest::Approx(0.00016606418988425367).epsilon(1e-10).scale(0.0));
    CHECK(r.statistic == doctest::Approx(7.106383758759815).epsilon(1e-9));
    CHECK(r.p_value ==
          doctest::Approx(1.1912289710506805e-12).epsilon(1e-7).scale(0.0));
  }

  SUBCASE("sharpe, pinned bandwidth") {
    const PairwiseTestResult r = lw_pairwise_test(
        data.r1, data.r2, ComparisonMetric::sharpe, 1.0, HacOptions{4.0});
    CHECK(r.bandwidth == 4.0);
    CHECK(r.se == doctest::Approx(0.06063676776550734).epsilon(1e-10));
    CHECK(r.statistic == doctest::Approx(6.426252981750679).epsilon(1e-9));
    CHECK(r.p_value ==
          doctest::Approx(1.307876750301471e-10).epsilon(1e-7).scale(0.0));
  }
}

TEST_CASE("lw_pairwise_test recovers closed-form metric differences") {
  // Alternating dyadic series keep every moment exact: mean a, variance d^2.
  SUBCASE("sharpe difference for two phase-aligned alternating series") {
    VectorXd r1(32), r2(32);
    for (int t = 0; t < 32; ++t) {
      const double sign = (t % 2 == 0) ? -1.0 : 1.0;
      r1[t] = 0.03125 + sign * 0.0625;   // SR = 0.5
      r2[t] = 0.015625 + sign * 0.0625;  // SR = 0.25
    }
    const PairwiseTestResult r =
        lw_pairwise_test(r1, r2, ComparisonMetric::sharpe);
    CHECK(r.difference == 0.25);
  }

  SUBCASE("ceq difference against a riskless series") {
    VectorXd r1(32), r2(32);
    for (int t = 0; t < 32; ++t) {
      const double sign = (t % 2 == 0) ? -1.0 : 1.0;
      r1[t] = 0.25 + sign * 0.125;  // CEQ(gamma=2) = 0.25 - 0.125^2
      r2[t] = 0.125;                // riskless: CEQ = 0.125
    }
    const PairwiseTestResult r =
        lw_pairwise_test(r1, r2, ComparisonMetric::ceq, 2.0);
    CHECK(r.difference == 0.109375);
    CHECK(!r.degenerate);
    CHECK(r.p_value < 0.01);
  }
}

TEST_CASE("lw_pairwise_test degenerate inputs") {
  SUBCASE("identical series cannot be distinguished") {
    const FrozenPair data = frozen_pair();
    const PairwiseTestResult r =
        lw_pairwise_test(data.r1, data.r1, ComparisonMetric::sharpe);
    CHECK(r.difference == 0.0);
    CHECK(r.p_value == 1.0);
    CHECK((r.degenerate || r.statistic == 0.0));
  }

  SUBCASE("flat series has no sharpe ratio") {
    const FrozenPair data = frozen_pair();
    const VectorXd flat = VectorXd::Constant(200, 0.01);
    const PairwiseTestResult r =
        lw_pairwise_test(data.r1, flat, ComparisonMetric::sharpe);
    CHECK(r.degenerate);
    CHECK(r.p_value == 1.0);
    CHECK(std::isnan(r.difference));
  }

  SUBCASE("two constant series under the ceq metric") {
    const VectorXd c1 = VectorXd::Constant(40, 0.25);
    const VectorXd c2 = VectorXd::Constant(40, 0.125);
    const PairwiseTestResult r =
        lw_pairwise_test(c1, c2, ComparisonMetric::ceq, 1.0);
    CHECK(r.degenerate);
    CHECK(r.p_value == 1.0);
    CHECK(r.difference == 0.125);
  }
}

TEST_CASE("lw_pairwise_test symmetry and invariance") {
  const FrozenPair data = frozen_pair();

  SUBCASE("swapping the series negates the statistic") {
    const PairwiseTestResult a =
        lw_pairwise_test(data.r1, data.r2, ComparisonMetric::sharpe);
    const PairwiseTestResult b =
        lw_pairwise_test(data.r2, data.r1, ComparisonMetric::sharpe);
    CHECK(b.difference == doctest::Approx(-a.difference).epsilon(1e-12));
    CHECK(b.statistic == doctest::Approx(-a.statistic).epsilon(1e-12));
    CHECK(b.p_value == doctest::Approx(a.p_value).epsilon(1e-10).scale(0.0));
  }

  SUBCASE("sharpe statistic is invariant to a power-of-two rescale") {
    // Scaling by 4 is exact in binary floating point, and with a pinned
    // bandwidth every intermediate quantity rescales by an exact power of
    // two, so the statistic is reproduced bit for bit.
    const HacOptions hac{6.0};
    const PairwiseTestResult base =
        lw_pairwise_test(data.r1, data.r2, ComparisonMetric::sharpe, 1.0, hac);
    const PairwiseTestResult scaled = lw_pairwise_test(
        (4.0 * data.r1).eval(), (4.0 * data.r2).eval(),
        ComparisonMetric::sharpe, 1.0, hac);
    CHECK(scaled.statistic == base.statistic);
    CHECK(scaled.p_value == base.p_value);
    CHECK(scaled.difference == base.difference);
  }
}

TEST_CASE("lw_pairwise_test holds its size under the null") {
  // Correlated pairs with identical means and volatilities: the Sharpe null
  // is true, so the 5% rejection rate over 200 replications should stay
  // within a generous binomial band (finite-sample distortion included).
  const double sq = std::sqrt(0.5);
  int rejections = 0;
  for (int rep = 0; rep < 200; ++rep) {
    Rng rng(7000 + static_cast<std::uint64_t>(rep));
    VectorXd r1(300), r2(300);
    for (int t = 0; t < 300; ++t) {
      const double c = rng.normal();
      const double e1 = rng.normal();
      const double e2 = rng.normal();
      r1[t] = 0.0003 + 0.01 * sq * (c + e1);
      r2[t] = 0.0003 + 0.01 * sq * (c + e2);
    }
    const PairwiseTestResult r =
        lw_pairwise_test(r1, r2, ComparisonMetric::sharpe);
    if (r.p_value < 0.05) ++rejections;
  }
  CHECK(rejections >= 1);
  CHECK(rejections <= 26);
}

TEST_CASE("lw_pairwise_test input validation") {
  const VectorXd ok = VectorXd::LinSpaced(40, -0.01, 0.01);
  CHECK_THROWS_AS(lw_pairwise_test(ok, VectorXd::Zero(39),
                                   ComparisonMetric::sharpe),
                  ValidationError);
  CHECK_THROWS_AS(lw_pairwise_test(VectorXd::Zero(29), VectorXd::Zero(29),
                                   ComparisonMetric::sharpe),
                  ValidationError);
  CHECK_THROWS_AS(lw_pairwise_test(ok, ok, ComparisonMetric::ceq, 0.0),
                  ConfigError);
  CHECK_THROWS_AS(lw_pairwise_test(ok, ok, ComparisonMetric::ceq, -1.0),
                  ConfigError);
}

TEST_CASE("metric names round-trip") {
  CHECK(metric_name(ComparisonMetric::sharpe) == std::string("sharpe"));
  CHECK(metric_name(ComparisonMetric::ceq) == std::string("ceq"));
  CHECK(parse_metric("sharpe") == ComparisonMetric::sharpe);
  CHECK(parse_metric("ceq") == ComparisonMetric::ceq);
  CHECK(!parse_metric("Sharpe").has_value());
  CHECK(!parse_metric("").has_value());
}

namespace {

struct FrozenSpanning {
  MatrixXd x;
  VectorXd y;
};

FrozenSpanning frozen_spanning() {
  const auto w = lcg_stream(1234, 180);
  FrozenSpanning out{MatrixXd(60, 2), VectorXd(60)};
  for (int t = 0; t < 60; ++t) {
    out.x(t, 0) = 0.01 * w[static_cast<std::size_t>(3 * t)];
    out.x(t, 1) = 0.002 + 0.008 * w[static_cast<std::size_t>(3 * t + 1)];
    out.y[t] = 0.001 + 0.4 * out.x(t, 0) + 0.3 * out.x(t, 1) +
               0.005 * w[static_cast<std::size_t>(3 * t + 2)];
  }
  return out;
}

}  // namespace

TEST_CASE("spanning_test reproduces frozen oracle values") {
  const FrozenSpanning data = frozen_spanning();
  const SpanningResult r = spanning_test(data.x, data.y);
  CHECK(!r.exact);
  CHECK(r.alpha == doctest::Approx(0.000811402568994868).epsilon(1e-10));
  CHECK(r.beta[0] == doctest::Approx(0.359081489516056).epsilon(1e-9));
  CHECK(r.beta[1] == doctest::Approx(0.2061464816610796).epsilon(1e-9));
  CHECK(r.rss_u ==
        doctest::Approx(0.00014082262066567763).epsilon(1e-9).scale(0.0));
  CHECK(r.rss_r1 ==
        doctest::Approx(0.0001665534868767015).epsilon(1e-9).scale(0.0));
  CHECK(r.rss_r2 ==
        doctest::Approx(0.00017846057324080259).epsilon(1e-9).scale(0.0));
  CHECK(r.f_hk == doctest::Approx(7.617253842603027).epsilon(1e-7));
  CHECK(r.p_hk ==
        doctest::Approx(0.0011700621927418406).epsilon(1e-6).scale(0.0));
  CHECK(r.f1 == doctest::Approx(10.414941627242607).epsilon(1e-7));
  CHECK(r.p1 ==
        doctest::Approx(0.0020737159958189445).epsilon(1e-6).scale(0.0));
  CHECK(r.f2 == doctest::Approx(4.146481842371261).epsilon(1e-7));
  CHECK(r.p2 ==
        doctest::Approx(0.046295975687565216).epsilon(1e-6).scale(0.0));
}

TEST_CASE("spanning_test flags an exactly spanned candidate") {
  const FrozenSpanning data = frozen_spanning();
  const VectorXd spanned = 0.3 * data.x.col(0) + 0.7 * data.x.col(1);
  const SpanningResult r = spanning_test(data.x, spanned);
  CHECK(r.exact);
  CHECK(r.f_hk == 0.0);
  CHECK(r.p_hk == 1.0);
  CHECK(r.f1 == 0.0);
  CHECK(r.p1 == 1.0);
  CHECK(r.f2 == 0.0);
  CHECK(r.p2 == 1.0);
  CHECK(std::abs(r.alpha) <= 1e-12);
  CHECK(r.beta[0] == doctest::Approx(0.3).epsilon(1e-8));
  CHECK(r.beta[1] == doctest::Approx(0.7).epsilon(1e-8));
}

TEST_CASE("spanning_test detects a shifted candidate through the step-down") {
  const FrozenSpanning data = frozen_spanning();

  SUBCASE("intercept violation drives the alpha test") {
    // y = 0.01 + 0.5 x1 + 0.5 x2 + noise over ZERO-MEAN benchmarks. The
    // benchmarks must be mean-zero here: a benchmark whose mean rivals its
    // volatility can absorb the intercept in the no-intercept fit, shifting
    // the slope sum away from 1 and making the second-stage test reject for
    // a real (not spurious) reason.
    const auto w = lcg_stream(999, 180);
    MatrixXd x(60, 2);
    VectorXd y(60);
    for (int t = 0; t < 60; ++t) {
      x(t, 0) = 0.01 * w[static_cast<std::size_t>(3 * t)];
      x(t, 1) = 0.007 * w[static_cast<std::size_t>(3 * t + 1)];
      y[t] = 0.01 + 0.5 * x(t, 0) + 0.5 * x(t, 1) +
             0.004 * w[static_cast<std::size_t>(3 * t + 2)];
    }
    const SpanningResult r = spanning_test(x, y);
    CHECK(r.p1 < 1e-6);
    CHECK(r.p_hk < 1e-6);
    CHECK(r.p2 > 0.05);
  }

  SUBCASE("slope-sum violation drives the second test") {
    // y = 0.2 x1 + 0.2 x2 + tiny noise: no intercept, but slopes sum to 0.4.
    const auto w = lcg_stream(998, 60);
    VectorXd y(60);
    for (int t = 0; t < 60; ++t)
      y[t] = 0.2 * data.x(t, 0) + 0.2 * data.x(t, 1) +
             0.0001 * w[static_cast<std::size_t>(t)];
    const SpanningResult r = spanning_test(data.x, y);
    CHECK(r.p1 > 0.05);
    CHECK(r.p2 < 1e-6);
    CHECK(r.p_hk < 1e-6);
  }
}

TEST_CASE("spanning_test invariances") {
  const FrozenSpanning data = frozen_spanning();
  const SpanningResult base = spanning_test(data.x, data.y);

  SUBCASE("benchmark remix with unit column sums preserves the statistics") {
    // Columns of the mixing matrix sum to one, so the slope-sum restriction
    // describes the same set of portfolios in the remixed basis.
    Eigen::Matrix2d mix;
    mix << 0.7, 0.2, 0.3, 0.8;
    const MatrixXd remixed = data.x * mix;
    const SpanningResult r = spanning_test(remixed, data.y);
    CHECK(r.f_hk == doctest::Approx(base.f_hk).epsilon(1e-8));
    CHECK(r.f1 == doctest::Approx(base.f1).epsilon(1e-8));
    CHECK(r.f2 == doctest::Approx(base.f2).epsilon(1e-8));
    CHECK(r.p_hk == doctest::Approx(base.p_hk).epsilon(1e-8).scale(0.0));
  }

  SUBCASE("joint rescale of candidate and benchmarks preserves the statistics") {
    const SpanningResult r =
        spanning_test((4.0 * data.x).eval(), (4.0 * data.y).eval());
    CHECK(r.f_hk == doctest::Approx(base.f_hk).epsilon(1e-12));
    CHECK(r.f1 == doctest::Approx(base.f1).epsilon(1e-12));
    CHECK(r.f2 == doctest::Approx(base.f2).epsilon(1e-12));
  }
}

TEST_CASE("spanning_test with a single benchmark") {
  const auto w = lcg_stream(555, 80);
  MatrixXd x(40, 1);
  VectorXd y(40);
  for (int t = 0; t < 40; ++t) {
    x(t, 0) = 0.01 * w[static_cast<std::size_t>(2 * t)];
    y[t] = 0.9 * x(t, 0) + 0.002 * w[static_cast<std::size_t>(2 * t + 1)];
  }
  const SpanningResult r = spanning_test(x, y);
  CHECK(!r.exact);
  CHECK(r.rss_u <= r.rss_r1 + 1e-18);
  CHECK(r.rss_r1 <= r.rss_r2 + 1e-18);
  CHECK(r.p_hk >= 0.0);
  CHECK(r.p_hk <= 1.0);
  CHECK(r.p1 >= 0.0);
  CHECK(r.p1 <= 1.0);
  CHECK(r.p2 >= 0.0);
  CHECK(r.p2 <= 1.0);
}

TEST_CASE("spanning alpha test holds its size under the null") {
  // With iid normal errors and a true intercept of zero the alpha F test is
  // exactly F-distributed, so the 5% rejection rate over 300 replications
  // stays within a plain binomial band.
  int rejections = 0;
  for (int rep = 0; rep < 300; ++rep) {
    Rng rng(9100 + static_cast<std::uint64_t>(rep));
    MatrixXd x(80, 2);
    VectorXd y(80);
    for (int t = 0; t < 80; ++t) {
      x(t, 0) = 0.01 * rng.normal();
      x(t, 1) = 0.012 * rng.normal();
      y[t] = 0.5 * x(t, 0) + 0.5 * x(t, 1) + 0.004 * rng.normal();
    }
    const SpanningResult r = spanning_test(x, y);
    if (r.p1 < 0.05) ++rejections;
  }
  CHECK(rejections >= 3);
  CHECK(rejections <= 29);
}

TEST_CASE("spanning_test input validation") {
  const FrozenSpanning data = frozen_spanning();
  CHECK_THROWS_AS(spanning_test(MatrixXd(60, 0), data.y), ValidationError);
  CHECK_THROWS_AS(spanning_test(data.x, VectorXd::Zero(59)), ValidationError);
  CHECK_THROWS_AS(spanning_test(data.x.topRows(4), data.y.head(4)),
                  ValidationError);

  MatrixXd collinear(60, 2);
  collinear.col(0) = data.x.col(0);
  collinear.col(1) = 2.0 * data.x.col(0);
  CHECK_THROWS_AS(spanning_test(collinear, data.y), ValidationError);
}
