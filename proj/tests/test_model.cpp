#include <cmath>
#include <sstream>

#include "doctest.h"
#include "pricer/instances.hpp"
#include "pricer/local_search.hpp"
#include "pricer/model.hpp"
#include "pricer/rng.hpp"
#include "test_util.hpp"

using namespace pricer;

TEST_CASE("reference revenue at the published optimum") {
  MixedLogitInstance inst = intel_instance();
  Eigen::Vector3d p(608.2695, 365.079, 1209.09);
  // high-precision re-evaluation of the mixture sum at this price point
  CHECK(expected_revenue(inst, p) == doctest::Approx(362.33894210845716).epsilon(1e-13));
}

TEST_CASE("choice probabilities at the reference optimum") {
  MixedLogitInstance inst = intel_instance();
  Eigen::Vector3d p(608.2695, 365.079, 1209.09);
  Eigen::MatrixXd P = choice_probabilities(inst, p);
  REQUIRE(P.rows() == 4);
  REQUIRE(P.cols() == 1);
  CHECK(P(0, 0) == doctest::Approx(0.016874379914424633).epsilon(1e-12));
  CHECK(P(1, 0) == doctest::Approx(0.19355146899805032).epsilon(1e-12));
  CHECK(P(2, 0) == doctest::Approx(0.23274793003396007).epsilon(1e-12));
  CHECK(P(3, 0) == doctest::Approx(0.55662622105356498).epsilon(1e-12));
}

TEST_CASE("ratio denominator survives huge utility spreads") {
  // V = (0, 100, 200) for the first alternative's class: f = 1 + e^100 + e^200
  MixedLogitInstance inst;
  inst.alternatives = {{"a", true}, {"b", false}, {"c", false}};
  inst.customers = 1;
  inst.classes = 1;
  inst.price_coef = {Eigen::MatrixXd::Constant(1, 1, -1.0), Eigen::MatrixXd::Zero(1, 1),
                     Eigen::MatrixXd::Zero(1, 1)};
  inst.exo_utility = {Eigen::MatrixXd::Zero(1, 1), Eigen::MatrixXd::Constant(1, 1, 100.0),
                      Eigen::MatrixXd::Constant(1, 1, 200.0)};
  inst.class_weight = Eigen::MatrixXd::Ones(1, 1);
  inst.price_lb = Eigen::VectorXd::Zero(1);
  inst.price_ub = Eigen::VectorXd::Constant(1, 10.0);
  validate(inst);

  Eigen::VectorXd p = Eigen::VectorXd::Zero(1);
  // independently computed with 40-digit arithmetic
  CHECK(ratio_denominator(inst, p, 0, 0, 0) ==
        doctest::Approx(7.225973768125749258177e+86).epsilon(1e-13));
  CHECK(log_ratio_denominator(inst, p, 0, 0, 0) == doctest::Approx(200.0).epsilon(1e-15));
  // the top alternative's f is within a hair of 1
  CHECK(ratio_denominator(inst, p, 2, 0, 0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(ratio_denominator(inst, p, 1, 0, 0) == doctest::Approx(std::exp(100.0)).epsilon(1e-12));
}

TEST_CASE("probabilities: simplex structure, shift invariance, f consistency") {
  MixedLogitInstance inst = intel_instance();
  Rng rng(42);
  for (int trial = 0; trial < 20; ++trial) {
    Eigen::VectorXd p(3);
    for (int i = 0; i < 3; ++i) p(i) = rng.uniform(0.0, 5000.0);
    Eigen::MatrixXd P = choice_probabilities(inst, p);
    for (int n = 0; n < inst.customers; ++n) {
      const double wsum = inst.class_weight.col(n).sum();
      CHECK(P.col(n).sum() == doctest::Approx(wsum).epsilon(1e-12));
      for (int i = 0; i < inst.num_alternatives(); ++i) {
        CHECK(P(i, n) >= 0.0);
        CHECK(P(i, n) <= wsum + 1e-15);
      }
    }
    // P(i, n) must equal sum_l w[l][n] / f[i][n][l]
    for (int i = 0; i < inst.num_alternatives(); ++i) {
      double acc = 0.0;
      for (int l = 0; l < inst.classes; ++l)
        acc += inst.class_weight(l, 0) / ratio_denominator(inst, p, i, 0, l);
      CHECK(testutil::rel_err(P(i, 0), acc) < 1e-12);
    }
  }

  // adding a common constant to every alternative's utility changes nothing
  MixedLogitInstance shifted = inst;
  for (auto& m : shifted.exo_utility) m.array() += 3.25;
  Eigen::Vector3d p(700.0, 300.0, 1500.0);
  Eigen::MatrixXd a = choice_probabilities(inst, p);
  Eigen::MatrixXd b = choice_probabilities(shifted, p);
  CHECK((a - b).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("market shares are percentages summing to 100") {
  MixedLogitInstance inst = intel_instance();
  Eigen::Vector3d p(608.2695, 365.079, 1209.09);
  Eigen::VectorXd s = market_shares(inst, p);
  REQUIRE(s.size() == 4);
  CHECK(s.sum() == doctest::Approx(100.0).epsilon(1e-12));
  CHECK(s(0) == doctest::Approx(1.6877755465517739).epsilon(1e-12));
  CHECK(s(3) == doctest::Approx(55.673756856727842).epsilon(1e-12));
}

TEST_CASE("revenue gradient matches central differences") {
  MixedLogitInstance inst = intel_instance();
  Rng rng(7);
  for (int trial = 0; trial < 25; ++trial) {
    Eigen::VectorXd p(3);
    for (int i = 0; i < 3; ++i) p(i) = rng.uniform(0.0, 5000.0);
    Eigen::VectorXd g = revenue_gradient(inst, p);
    Eigen::VectorXd fd = testutil::fd_revenue_gradient(inst, p);
    for (int i = 0; i < 3; ++i)
      CHECK(std::abs(g(i) - fd(i)) <= 1e-5 * std::max(1.0, std::abs(fd(i))));
  }
}

TEST_CASE("f gradient matches central differences") {
  MixedLogitInstance inst = testutil::duopoly_instance(-0.8, -1.3, 1.0, 2.0);
  Rng rng(11);
  for (int trial = 0; trial < 25; ++trial) {
    Eigen::VectorXd p(2);
    p << rng.uniform(0.0, 6.0), rng.uniform(0.0, 6.0);
    for (int i = 0; i < inst.num_alternatives(); ++i) {
      Eigen::VectorXd g = f_gradient(inst, p, i, 0, 0);
      for (int m = 0; m < 2; ++m) {
        const double h = 1e-6 * (1.0 + std::abs(p(m)));
        Eigen::VectorXd hi = p, lo = p;
        hi(m) += h;
        lo(m) -= h;
        const double fd = (ratio_denominator(inst, hi, i, 0, 0) -
                           ratio_denominator(inst, lo, i, 0, 0)) /
                          (2.0 * h);
        CHECK(std::abs(g(m) - fd) <= 1e-5 * std::max(1.0, std::abs(fd)));
      }
    }
  }
}

TEST_CASE("log-f gradient is the probability-weighted coefficient field") {
  MixedLogitInstance inst = intel_instance();
  Eigen::Vector3d p(900.0, 400.0, 2200.0);
  for (int i = 0; i < inst.num_alternatives(); ++i) {
    for (int l = 0; l < inst.classes; ++l) {
      Eigen::VectorXd g = log_f_gradient(inst, p, i, 0, l);
      // entries stay bounded by the largest |beta| in the class
      double bmax = 0.0;
      for (int j : inst.priced_alts)
        bmax = std::max(bmax, std::abs(inst.price_coef[j](0, l)));
      CHECK(g.cwiseAbs().maxCoeff() <= 2.0 * bmax + 1e-18);
      // finite-difference cross-check on the log scale
      for (int m = 0; m < 3; ++m) {
        const double h = 1e-6 * (1.0 + std::abs(p(m)));
        Eigen::VectorXd hi = p, lo = p;
        hi(m) += h;
        lo(m) -= h;
        const double fd = (log_ratio_denominator(inst, hi, i, 0, l) -
                           log_ratio_denominator(inst, lo, i, 0, l)) /
                          (2.0 * h);
        CHECK(std::abs(g(m) - fd) <= 1e-6 * std::max(1.0, std::abs(fd)));
      }
    }
  }
}

TEST_CASE("monopoly closed form") {
  MixedLogitInstance inst = testutil::monopoly_instance();
  Eigen::VectorXd p(1);
  p << testutil::kMonopolyPrice;
  CHECK(expected_revenue(inst, p) ==
        doctest::Approx(testutil::kMonopolyRevenue).epsilon(1e-14));
  // interior optimum: gradient vanishes
  CHECK(std::abs(revenue_gradient(inst, p)(0)) < 1e-12);
  // the optimal price exceeds the optimal revenue by exactly 1
  CHECK(testutil::kMonopolyPrice - testutil::kMonopolyRevenue ==
        doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("revenue stays finite at extreme prices") {
  MixedLogitInstance inst = testutil::monopoly_instance(2000.0);
  Eigen::VectorXd p(1);
  p << 2000.0;  // utility spread 2000: naive exponentials overflow
  const double r = expected_revenue(inst, p);
  CHECK(std::isfinite(r));
  CHECK(r >= 0.0);
  CHECK(r < 1e-300);  // p * e^{-p} underflows to a denormal-or-zero value
  Eigen::VectorXd g = revenue_gradient(inst, p);
  CHECK(std::isfinite(g(0)));
}

TEST_CASE("validate fills the priced index maps") {
  MixedLogitInstance inst = intel_instance();
  REQUIRE(inst.priced_alts.size() == 3);
  CHECK(inst.priced_alts[0] == 0);
  CHECK(inst.priced_alts[1] == 1);
  CHECK(inst.priced_alts[2] == 2);
  REQUIRE(inst.priced_pos_of_alt.size() == 4);
  CHECK(inst.priced_pos_of_alt[3] == -1);
  CHECK(inst.priced_pos_of_alt[1] == 1);
}

TEST_CASE("validate rejects malformed instances") {
  SUBCASE("positive price coefficient on a priced alternative") {
    MixedLogitInstance inst = testutil::monopoly_instance();
    inst.price_coef[0](0, 0) = 0.5;
    CHECK_THROWS_AS(validate(inst), std::invalid_argument);
  }
  SUBCASE("zero price coefficient on a priced alternative") {
    MixedLogitInstance inst = testutil::monopoly_instance();
    inst.price_coef[0](0, 0) = 0.0;
    CHECK_THROWS_AS(validate(inst), std::invalid_argument);
  }
  SUBCASE("matrix count mismatch") {
    MixedLogitInstance inst = testutil::monopoly_instance();
    inst.price_coef.pop_back();
    CHECK_THROWS_AS(validate(inst), std::invalid_argument);
  }
  SUBCASE("weights far from normalized") {
    MixedLogitInstance inst = testutil::monopoly_instance();
    inst.class_weight(0, 0) = 1.5;
    CHECK_THROWS_AS(validate(inst), std::invalid_argument);
  }
  SUBCASE("negative weight") {
    MixedLogitInstance inst = testutil::duopoly_instance(-1.0, -1.0, 0.0, 0.0);
    inst.classes = 2;
    for (auto& m : inst.price_coef) m = m.replicate(1, 2).eval();
    for (auto& m : inst.exo_utility) m = m.replicate(1, 2).eval();
    inst.class_weight = Eigen::MatrixXd(2, 1);
    inst.class_weight << 1.5, -0.5;
    CHECK_THROWS_AS(validate(inst), std::invalid_argument);
  }
  SUBCASE("inverted box") {
    MixedLogitInstance inst = testutil::monopoly_instance();
    inst.price_lb(0) = 11.0;
    CHECK_THROWS_AS(validate(inst), std::invalid_argument);
  }
  SUBCASE("no priced alternative") {
    MixedLogitInstance inst = testutil::monopoly_instance();
    inst.alternatives[0].priced = false;
    inst.price_lb.resize(0);
    inst.price_ub.resize(0);
    CHECK_THROWS_AS(validate(inst), std::invalid_argument);
  }
  SUBCASE("empty intersection with the linear constraints") {
    MixedLogitInstance inst = testutil::monopoly_instance();
    LinearConstraints lc;
    lc.A = Eigen::MatrixXd::Constant(1, 1, 1.0);
    lc.b = Eigen::VectorXd::Constant(1, 50.0);  // p >= 50 with box [0, 10]
    inst.linear_constraints = lc;
    CHECK_THROWS_AS(validate(inst), std::invalid_argument);
  }
}

TEST_CASE("slightly unnormalized weights warn but survive") {
  MixedLogitInstance inst = testutil::monopoly_instance();
  inst.class_weight(0, 0) = 1.0 + 5e-4;
  std::ostringstream warn;
  validate(inst, &warn);
  CHECK(warn.str().find("weight") != std::string::npos);
  CHECK(inst.class_weight(0, 0) == doctest::Approx(1.0 + 5e-4).epsilon(1e-15));
}

TEST_CASE("box and constraint membership") {
  MixedLogitInstance inst = testutil::duopoly_instance(-1.0, -1.0, 0.0, 0.0);
  Eigen::Vector2d in(5.0, 5.0), edge(10.0, 0.0), out(10.1, 5.0);
  CHECK(in_box(inst, in));
  CHECK(in_box(inst, edge));
  CHECK_FALSE(in_box(inst, out));
  CHECK(satisfies_constraints(inst, in));

  LinearConstraints lc;  // p1 - p2 >= 1
  lc.A = Eigen::MatrixXd(1, 2);
  lc.A << 1.0, -1.0;
  lc.b = Eigen::VectorXd::Constant(1, 1.0);
  inst.linear_constraints = lc;
  validate(inst);
  CHECK(satisfies_constraints(inst, Eigen::Vector2d(3.0, 1.0)));
  CHECK_FALSE(satisfies_constraints(inst, Eigen::Vector2d(1.0, 3.0)));
}

TEST_CASE("instance box matches the declared bounds") {
  MixedLogitInstance inst = intel_instance();
  NodeBox box = instance_box(inst);
  CHECK(box.dims() == 3);
  CHECK(box.lb.isZero());
  CHECK((box.ub.array() == 5000.0).all());
  CHECK(box.center()(1) == doctest::Approx(2500.0));
  CHECK(box.half_diagonal() == doctest::Approx(2500.0 * std::sqrt(3.0)).epsilon(1e-14));
}
