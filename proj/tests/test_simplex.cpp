#include <doctest.h>

#include <cmath>

#include "folio/qp.hpp"
#include "folio/rng.hpp"
#include "folio/simplex.hpp"
#include "support/testutil.hpp"

using namespace folio;
namespace ft = folio::testing;

TEST_CASE("water_fill_equal: plain and capped equal weights") {
  CHECK(water_fill_equal(4, VectorXd::Ones(4)).isApprox(VectorXd::Constant(4, 0.25), 0.0));
  CHECK(water_fill_equal(1, VectorXd::Ones(1))[0] == 1.0);
  VectorXd caps(3);
  caps << 0.1, 1.0, 1.0;
  const VectorXd w = water_fill_equal(3, caps);
  CHECK(w[0] == doctest::Approx(0.1).epsilon(1e-15));
  CHECK(w[1] == doctest::Approx(0.45).epsilon(1e-15));
  CHECK(w[2] == doctest::Approx(0.45).epsilon(1e-15));

  // Cascading caps: (0.05, 0.2, 1, 1) -> 0.05 and 0.2 both bind.
  VectorXd caps2(4);
  caps2 << 0.05, 0.2, 1.0, 1.0;
  const VectorXd w2 = water_fill_equal(4, caps2);
  CHECK(w2[0] == doctest::Approx(0.05).epsilon(1e-14));
  CHECK(w2[1] == doctest::Approx(0.2).epsilon(1e-14));
  CHECK(w2[2] == doctest::Approx(0.375).epsilon(1e-14));
  CHECK(w2[3] == doctest::Approx(0.375).epsilon(1e-14));
}

TEST_CASE("greedy_fill: argmax, ties, and capped fills") {
  VectorXd mu(3);
  mu << 0.01, 0.03, 0.02;
  VectorXd w = greedy_fill(mu, VectorXd::Ones(3));
  CHECK(w[0] == 0.0);
  CHECK(w[1] == 1.0);
  CHECK(w[2] == 0.0);

  VectorXd tie(2);
  tie << 0.03, 0.03;
  w = greedy_fill(tie, VectorXd::Ones(2));
  CHECK(w[0] == 1.0);
  CHECK(w[1] == 0.0);

  VectorXd mu3(3);
  mu3 << 0.03, 0.02, 0.01;
  VectorXd caps(3);
  caps << 0.5, 0.3, 1.0;
  w = greedy_fill(mu3, caps);
  CHECK(w[0] == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(w[1] == doctest::Approx(0.3).epsilon(1e-15));
  CHECK(w[2] == doctest::Approx(0.2).epsilon(1e-14));
}

TEST_CASE("bounds validation") {
  BoundsSpec bounds;
  bounds.caps = VectorXd::Constant(3, 0.5);
  CHECK_NOTHROW(validate_bounds(bounds, 3));
  CHECK_THROWS_AS(validate_bounds(bounds, 4), ValidationError);
  bounds.caps[0] = 0.0;
  CHECK_THROWS_AS(validate_bounds(bounds, 3), ValidationError);
  bounds.caps[0] = 1.5;
  CHECK_THROWS_AS(validate_bounds(bounds, 3), ValidationError);
  bounds.caps = VectorXd::Constant(3, 0.2);  // sums to 0.6 < 1
  CHECK_THROWS_AS(validate_bounds(bounds, 3), SolverError);
}

TEST_CASE("check_weights enforces the WeightVector invariants") {
  VectorXd good(2);
  good << 0.6, 0.4;
  CHECK_NOTHROW(check_weights(good));
  VectorXd negative(2);
  negative << -0.1, 1.1;
  CHECK_THROWS_AS(check_weights(negative), SolverError);
  VectorXd off_sum(2);
  off_sum << 0.6, 0.6;
  CHECK_THROWS_AS(check_weights(off_sum), SolverError);
  BoundsSpec bounds;
  bounds.caps = VectorXd::Constant(2, 0.55);
  CHECK_THROWS_AS(check_weights(good, bounds), SolverError);  // 0.6 > 0.55
  bounds.caps << 0.65, 1.0;
  CHECK_NOTHROW(check_weights(good, bounds));
}

TEST_CASE("tidy_weights clears numerical dust without moving the solution") {
  VectorXd w(3);
  w << -1e-13, 0.5 + 5e-14, 0.5;
  const VectorXd tidy = tidy_weights(w);
  CHECK(tidy[0] == 0.0);
  CHECK(std::abs(tidy.sum() - 1.0) < 1e-12);
  CHECK_NOTHROW(check_weights(tidy));

  // Dust-free exact weights pass through bit for bit.
  VectorXd exact(3);
  exact << 0.25, 0.25, 0.5;
  const VectorXd same = tidy_weights(exact);
  for (int i = 0; i < 3; ++i) CHECK(same[i] == exact[i]);
}

TEST_CASE("project_capped_simplex agrees with the QP definition of projection") {
  // min ½‖w−y‖² over the capped simplex equals min ½wᵀIw − yᵀw; solving the
  // latter with the active-set QP cross-validates both implementations.
  Rng rng(2024);
  for (int rep = 0; rep < 25; ++rep) {
    const int n = 2 + static_cast<int>(rng.uniform_int(4));
    VectorXd y(n);
    for (int i = 0; i < n; ++i) y[i] = 2.0 * rng.normal();
    const VectorXd caps = ft::random_caps(rng, n, 0.2, 1.0);
    const VectorXd via_bisection = project_capped_simplex(y, caps);
    const VectorXd via_qp = solve_capped_qp(MatrixXd::Identity(n, n), -y, caps);
    CHECK((via_bisection - via_qp).lpNorm<Eigen::Infinity>() < 1e-7);
    CHECK_NOTHROW(check_weights(via_bisection, BoundsSpec{caps}));
  }
}

TEST_CASE("project_capped_simplex is the identity on feasible points") {
  Rng rng(5);
  for (int rep = 0; rep < 10; ++rep) {
    const int n = 3;
    VectorXd w(n);
    for (int i = 0; i < n; ++i) w[i] = rng.uniform01() + 0.05;
    w /= w.sum();
    const VectorXd projected = project_capped_simplex(w, VectorXd::Ones(n));
    CHECK((projected - w).lpNorm<Eigen::Infinity>() < 1e-12);
  }
}
