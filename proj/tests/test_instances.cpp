#include <cmath>
#include <sstream>
#include <stdexcept>

#include "doctest.h"
#include "pricer/instances.hpp"
#include "pricer/model.hpp"
#include "pricer/rng.hpp"

using namespace pricer;

TEST_CASE("intel instance carries the published coefficients") {
  const MixedLogitInstance inst = intel_instance();
  REQUIRE(inst.num_alternatives() == 4);
  REQUIRE(inst.num_priced() == 3);
  CHECK(inst.customers == 1);
  CHECK(inst.classes == 7);
  CHECK_FALSE(inst.alternatives[3].priced);

  CHECK(inst.exo_utility[2](0, 0) == doctest::Approx(6.0054).epsilon(1e-12));
  CHECK(inst.exo_utility[0](0, 1) == doctest::Approx(3.2480).epsilon(1e-12));
  CHECK(inst.price_coef[2](0, 6) == doctest::Approx(-0.00144).epsilon(1e-12));
  CHECK(inst.price_coef[0](0, 0) == doctest::Approx(-0.00416).epsilon(1e-12));
  CHECK(inst.class_weight(5, 0) == doctest::Approx(0.2842).epsilon(1e-12));

  // the published weights sum to 0.9998 and are deliberately kept unnormalized
  CHECK(inst.class_weight.col(0).sum() == doctest::Approx(0.9998).epsilon(1e-12));

  // no-purchase has zero utility everywhere
  CHECK(inst.exo_utility[3].cwiseAbs().maxCoeff() == 0.0);
  CHECK(inst.price_coef[3].cwiseAbs().maxCoeff() == 0.0);

  CHECK(inst.price_lb.minCoeff() == 0.0);
  CHECK(inst.price_ub.maxCoeff() == doctest::Approx(5000.0));
}

TEST_CASE("random instances are deterministic per seed") {
  const MixedLogitInstance a = random_instance(42);
  const MixedLogitInstance b = random_instance(42);
  const MixedLogitInstance c = random_instance(43);
  REQUIRE(a.num_priced() == b.num_priced());
  bool identical = true, differs = false;
  for (int i = 0; i < a.num_priced(); ++i) {
    identical = identical &&
                (a.exo_utility[i] - b.exo_utility[i]).cwiseAbs().maxCoeff() == 0.0 &&
                (a.price_coef[i] - b.price_coef[i]).cwiseAbs().maxCoeff() == 0.0;
    differs = differs || (a.exo_utility[i] - c.exo_utility[i]).cwiseAbs().maxCoeff() > 0.0;
  }
  CHECK(identical);
  CHECK(differs);
}

TEST_CASE("random instance draws stay in their declared ranges") {
  RandomInstanceParams params;
  params.num_priced = 4;
  params.num_classes = 5;
  params.num_customers = 3;
  const MixedLogitInstance inst = random_instance(7, params);
  REQUIRE(inst.num_alternatives() == 5);
  REQUIRE(inst.num_priced() == 4);
  CHECK_FALSE(inst.alternatives[4].priced);
  for (int i = 0; i < 4; ++i)
    for (int n = 0; n < 3; ++n)
      for (int l = 0; l < 5; ++l) {
        CHECK(inst.exo_utility[i](n, l) >= params.q_low);
        CHECK(inst.exo_utility[i](n, l) <= params.q_high);
        CHECK(inst.price_coef[i](n, l) >= params.beta_low);
        CHECK(inst.price_coef[i](n, l) <= params.beta_high);
      }
  CHECK(inst.class_weight.minCoeff() == doctest::Approx(0.2));
  CHECK(inst.class_weight.maxCoeff() == doctest::Approx(0.2));
  CHECK(inst.exo_utility[4].cwiseAbs().maxCoeff() == 0.0);

  Eigen::VectorXd w(5);
  w << 0.5, 0.2, 0.1, 0.1, 0.1;
  RandomInstanceParams pw = params;
  pw.class_weights = w;
  const MixedLogitInstance inst2 = random_instance(7, pw);
  CHECK(inst2.class_weight.col(2) == w);
}

TEST_CASE("gaussian grid with one node degenerates to the mean") {
  const ParkingParams params;
  const auto grid = gaussian_grid(params, 1);
  REQUIRE(grid.size() == 1);
  CHECK(grid[0].beta_at == doctest::Approx(-0.788));
  CHECK(grid[0].beta_fee == doctest::Approx(-32.3));
  CHECK(grid[0].weight == doctest::Approx(1.0));
}

TEST_CASE("gaussian grid weights follow the density and sum to one") {
  const ParkingParams params;
  for (int n : {2, 3, 5}) {
    const auto grid = gaussian_grid(params, n);
    REQUIRE(static_cast<int>(grid.size()) == n * n);
    double sum = 0.0;
    for (const auto& g : grid) {
      CHECK(g.weight > 0.0);
      sum += g.weight;
      CHECK(g.beta_at >= params.taste_box_lo(0));
      CHECK(g.beta_at <= params.taste_box_hi(0));
      CHECK(g.beta_fee >= params.taste_box_lo(1));
      CHECK(g.beta_fee <= params.taste_box_hi(1));
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
  }

  // independent recomputation of one unnormalized weight ratio: the area factor
  // cancels, leaving the density ratio of two cell centers
  const auto grid = gaussian_grid(params, 3);
  auto density = [&](double x, double y) {
    const Eigen::Matrix2d& s = params.taste_cov;
    const double det = s(0, 0) * s(1, 1) - s(0, 1) * s(1, 0);
    const double dx = x - params.taste_mean(0), dy = y - params.taste_mean(1);
    const double quad =
        (dx * dx * s(1, 1) - 2.0 * dx * dy * s(0, 1) + dy * dy * s(0, 0)) / det;
    return std::exp(-0.5 * quad);
  };
  const double got = grid[0].weight / grid[4].weight;
  const double want = density(grid[0].beta_at, grid[0].beta_fee) /
                      density(grid[4].beta_at, grid[4].beta_fee);
  CHECK(got == doctest::Approx(want).epsilon(1e-9));
}

TEST_CASE("gaussian grid weights equal renormalized density at the cell centers") {
  const ParkingParams params;
  const int n = 4;
  const auto grid = gaussian_grid(params, n);
  REQUIRE(static_cast<int>(grid.size()) == n * n);
  const Eigen::Vector2d width = (params.taste_box_hi - params.taste_box_lo) / n;

  auto density = [&](double x, double y) {
    const Eigen::Matrix2d& s = params.taste_cov;
    const double det = s(0, 0) * s(1, 1) - s(0, 1) * s(1, 0);
    const double dx = x - params.taste_mean(0), dy = y - params.taste_mean(1);
    const double quad =
        (dx * dx * s(1, 1) - 2.0 * dx * dy * s(0, 1) + dy * dy * s(0, 0)) / det;
    return std::exp(-0.5 * quad) / (2.0 * 3.14159265358979323846 * std::sqrt(det));
  };

  double total = 0.0;
  std::vector<double> want(grid.size());
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) {
      const double cx = params.taste_box_lo(0) + (a + 0.5) * width(0);
      const double cy = params.taste_box_lo(1) + (b + 0.5) * width(1);
      const size_t k = static_cast<size_t>(a) * n + b;
      CHECK(grid[k].beta_at == doctest::Approx(cx).epsilon(1e-12));
      CHECK(grid[k].beta_fee == doctest::Approx(cy).epsilon(1e-12));
      want[k] = density(cx, cy) * width(0) * width(1);
      total += want[k];
    }
  for (size_t k = 0; k < grid.size(); ++k)
    CHECK(grid[k].weight == doctest::Approx(want[k] / total).epsilon(1e-9));
}

TEST_CASE("parking instance composes utilities from profile attributes") {
  const int N = 6;
  const ParkingScenario sc = parking_scenario(5, N, 1);
  const MixedLogitInstance& inst = sc.instance;
  const ParkingParams& pp = sc.params;
  REQUIRE(inst.customers == N);
  REQUIRE(inst.classes == 1);
  REQUIRE(inst.num_priced() == 2);
  CHECK_FALSE(inst.alternatives[0].priced);  // free street parking
  CHECK(inst.alternatives[1].name == "PSP");
  CHECK(inst.alternatives[2].name == "PUP");

  const double bat = -0.788, bfee = -32.3;  // grid of one: the taste mean
  for (int n = 0; n < N; ++n) {
    const CustomerProfile& c = sc.profiles[n];
    CHECK(c.access_time.minCoeff() >= 1.0);
    CHECK(c.access_time.maxCoeff() <= 15.0);
    CHECK(c.dest_time.minCoeff() >= 1.0);
    CHECK(c.dest_time.maxCoeff() <= 15.0);

    const double fsp = bat * c.access_time(0) + pp.beta_td * c.dest_time(0) +
                       pp.beta_origin * c.origin;
    const double psp = pp.asc_psp + bat * c.access_time(1) + pp.beta_td * c.dest_time(1);
    const double pup = pp.asc_pup + bat * c.access_time(2) + pp.beta_td * c.dest_time(2) +
                       pp.beta_age_veh * c.age_veh_le3;
    CHECK(inst.exo_utility[0](n, 0) == doctest::Approx(fsp).epsilon(1e-12));
    CHECK(inst.exo_utility[1](n, 0) == doctest::Approx(psp).epsilon(1e-12));
    CHECK(inst.exo_utility[2](n, 0) == doctest::Approx(pup).epsilon(1e-12));

    const double cpsp = bfee + pp.fee_psp_low_inc * c.low_inc + pp.fee_psp_resident * c.resident;
    const double cpup = bfee + pp.fee_pup_low_inc * c.low_inc + pp.fee_pup_resident * c.resident;
    CHECK(inst.price_coef[1](n, 0) == doctest::Approx(cpsp).epsilon(1e-12));
    CHECK(inst.price_coef[2](n, 0) == doctest::Approx(cpup).epsilon(1e-12));

    // a low-income resident at the taste mean prices underground parking at
    // -32.3 - 13.729 - 10.668 = -56.697
    if (c.low_inc == 1 && c.resident == 1)
      CHECK(inst.price_coef[2](n, 0) == doctest::Approx(-56.697).epsilon(1e-12));
  }

  CHECK(inst.price_ub.maxCoeff() == doctest::Approx(2.0));
  CHECK(inst.price_lb.minCoeff() == 0.0);

  const MixedLogitInstance twin = parking_instance(5, N, 1);
  CHECK(twin.exo_utility[1] == inst.exo_utility[1]);
  CHECK(twin.price_coef[2] == inst.price_coef[2]);
}

TEST_CASE("continuous taste evaluator collapses to the grid model at zero covariance") {
  ParkingParams params;
  params.taste_cov.setZero();
  const ParkingScenario sc = parking_scenario(9, 4, 1);

  Eigen::VectorXd prices(2);
  prices << 0.6, 1.1;
  const MonteCarloEstimate est =
      continuous_ml_revenue(params, sc.profiles, prices, 500, 1);
  CHECK(est.std_error == doctest::Approx(0.0).epsilon(1e-14));

  // grid of one at the mean is the same model the degenerate sampler hits
  const double grid_value = expected_revenue(sc.instance, prices);
  CHECK(est.value == doctest::Approx(grid_value).epsilon(1e-12));
}

TEST_CASE("monte-carlo standard error shrinks like the square root of samples") {
  const ParkingScenario sc = parking_scenario(11, 5, 1);
  Eigen::VectorXd prices(2);
  prices << 0.8, 1.3;
  const MonteCarloEstimate coarse =
      continuous_ml_revenue(sc.params, sc.profiles, prices, 2000, 3);
  const MonteCarloEstimate fine =
      continuous_ml_revenue(sc.params, sc.profiles, prices, 32000, 3);
  REQUIRE(coarse.std_error > 0.0);
  REQUIRE(fine.std_error > 0.0);
  const double ratio = coarse.std_error / fine.std_error;
  CHECK(ratio > 2.0);  // expected 4 with sampling noise around it
  CHECK(ratio < 8.0);
  CHECK(std::abs(coarse.value - fine.value) < 6.0 * coarse.std_error);
}

TEST_CASE("instance generators reject malformed parameters") {
  CHECK_THROWS_AS(gaussian_grid(ParkingParams{}, 0), std::invalid_argument);
  CHECK_THROWS_AS(parking_scenario(1, 0, 1), std::invalid_argument);
  RandomInstanceParams bad;
  bad.beta_high = 0.5;  // price coefficients must stay negative
  CHECK_THROWS_AS(random_instance(1, bad), std::invalid_argument);
  ParkingParams badcov;
  badcov.taste_cov(0, 1) = badcov.taste_cov(1, 0) = 100.0;  // not PSD
  CHECK_THROWS_AS(gaussian_grid(badcov, 2), std::invalid_argument);
}
