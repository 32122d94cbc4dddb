#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "pricer/model.hpp"

namespace testutil {

// Single priced product (beta = -1, q = 0) against a zero-utility opt-out.
// Closed form: the optimal price solves p = 1 + e^{-p} ... in Lambert form
// p* = 1 + W(1/e), and the optimal revenue equals p* - 1.
inline pricer::MixedLogitInstance monopoly_instance(double ub = 10.0) {
  pricer::MixedLogitInstance inst;
  inst.name = "monopoly";
  inst.alternatives = {{"product", true}, {"walk_away", false}};
  inst.customers = 1;
  inst.classes = 1;
  inst.price_coef = {Eigen::MatrixXd::Constant(1, 1, -1.0), Eigen::MatrixXd::Zero(1, 1)};
  inst.exo_utility = {Eigen::MatrixXd::Zero(1, 1), Eigen::MatrixXd::Zero(1, 1)};
  inst.class_weight = Eigen::MatrixXd::Ones(1, 1);
  inst.price_lb = Eigen::VectorXd::Zero(1);
  inst.price_ub = Eigen::VectorXd::Constant(1, ub);
  pricer::validate(inst);
  return inst;
}

inline constexpr double kMonopolyPrice = 1.2784645427610738;
inline constexpr double kMonopolyRevenue = 0.2784645427610738;

// Two priced products, one class, one customer, zero-utility opt-out.
inline pricer::MixedLogitInstance duopoly_instance(double b1, double b2, double q1,
                                                   double q2, double ub = 10.0) {
  pricer::MixedLogitInstance inst;
  inst.name = "duopoly";
  inst.alternatives = {{"a", true}, {"b", true}, {"out", false}};
  inst.customers = 1;
  inst.classes = 1;
  inst.price_coef = {Eigen::MatrixXd::Constant(1, 1, b1),
                     Eigen::MatrixXd::Constant(1, 1, b2), Eigen::MatrixXd::Zero(1, 1)};
  inst.exo_utility = {Eigen::MatrixXd::Constant(1, 1, q1),
                      Eigen::MatrixXd::Constant(1, 1, q2), Eigen::MatrixXd::Zero(1, 1)};
  inst.class_weight = Eigen::MatrixXd::Ones(1, 1);
  inst.price_lb = Eigen::VectorXd::Zero(2);
  inst.price_ub = Eigen::VectorXd::Constant(2, ub);
  pricer::validate(inst);
  return inst;
}

// Central finite difference of expected_revenue, step scaled per coordinate.
inline Eigen::VectorXd fd_revenue_gradient(const pricer::MixedLogitInstance& inst,
                                           const Eigen::VectorXd& p) {
  Eigen::VectorXd g(p.size());
  for (int i = 0; i < p.size(); ++i) {
    const double h = 1e-6 * (1.0 + std::abs(p(i)));
    Eigen::VectorXd hi = p, lo = p;
    hi(i) += h;
    lo(i) -= h;
    g(i) = (pricer::expected_revenue(inst, hi) - pricer::expected_revenue(inst, lo)) /
           (2.0 * h);
  }
  return g;
}

inline double rel_err(double got, double want) {
  return std::abs(got - want) / std::max(1.0, std::abs(want));
}

}  // namespace testutil
