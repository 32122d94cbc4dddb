#include "pricer/local_search.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "pricer/lp.hpp"

namespace pricer {

namespace {

NodeBox effective_box(const MixedLogitInstance& inst, const NodeBox* box) {
  return box ? *box : instance_box(inst);
}

void append_polytope_rows(LinearProgram& lp, const MixedLogitInstance& inst, int d,
                          int total_vars) {
  if (!inst.linear_constraints) return;
  const auto& lc = *inst.linear_constraints;
  Eigen::VectorXd row = Eigen::VectorXd::Zero(total_vars);
  for (int r = 0; r < lc.A.rows(); ++r) {
    row.setZero();
    row.head(d) = lc.A.row(r).transpose();
    lp.add_row(row, Relation::GreaterEq, lc.b(r));
  }
}

}  // namespace

PriceVector trust_region_step(const MixedLogitInstance& inst, const PriceVector& p_k,
                              double radius, const NodeBox* box) {
  if (!(radius > 0)) throw std::invalid_argument("trust_region_step: radius must be > 0");
  const int d = inst.num_priced();
  const NodeBox bx = effective_box(inst, box);
  const Eigen::VectorXd g = revenue_gradient(inst, p_k.values);

  // variables (p, s): maximize g'p over ||p - p_k||_1 <= r via s_i >= |p_i - p_k,i|
  LinearProgram lp = LinearProgram::with_vars(2 * d);
  lp.objective.head(d) = g;
  lp.var_lb.head(d) = bx.lb;
  lp.var_ub.head(d) = bx.ub;
  lp.var_lb.tail(d).setZero();
  lp.var_ub.tail(d).setConstant(radius);

  Eigen::VectorXd row = Eigen::VectorXd::Zero(2 * d);
  for (int i = 0; i < d; ++i) {
    row.setZero();
    row(d + i) = 1.0;
    row(i) = -1.0;
    lp.add_row(row, Relation::GreaterEq, -p_k.values(i));  // s_i >= p_i - p_k,i
    row(i) = 1.0;
    lp.add_row(row, Relation::GreaterEq, p_k.values(i));  // s_i >= p_k,i - p_i
  }
  row.setZero();
  row.tail(d).setOnes();
  lp.add_row(row, Relation::LessEq, radius);
  append_polytope_rows(lp, inst, d, 2 * d);

  const LpSolution sol = solve_lp(lp);
  if (sol.status != LpStatus::Optimal)
    throw std::runtime_error("trust_region_step: step LP did not solve to optimality");

  PriceVector out;
  out.values = sol.x.head(d).cwiseMax(bx.lb).cwiseMin(bx.ub);
  out.feasible = true;
  return out;
}

static PriceVector random_feasibility_fallback(const MixedLogitInstance& inst, Rng& rng,
                                               const NodeBox& bx) {
  // random-objective vertex of box ∩ {A p >= b}
  const int d = inst.num_priced();
  LinearProgram lp = LinearProgram::with_vars(d);
  for (int i = 0; i < d; ++i) lp.objective(i) = rng.normal();
  lp.var_lb = bx.lb;
  lp.var_ub = bx.ub;
  append_polytope_rows(lp, inst, d, d);
  const LpSolution sol = solve_lp(lp);
  if (sol.status != LpStatus::Optimal)
    throw std::runtime_error("random_feasible_point: region is empty");
  PriceVector out;
  out.values = sol.x.cwiseMax(bx.lb).cwiseMin(bx.ub);
  out.feasible = true;
  return out;
}

PriceVector random_feasible_point(const MixedLogitInstance& inst, Rng& rng,
                                  const NodeBox* box) {
  const int d = inst.num_priced();
  const NodeBox bx = effective_box(inst, box);
  Eigen::VectorXd p(d);
  for (int attempt = 0; attempt < 1000; ++attempt) {
    for (int i = 0; i < d; ++i) p(i) = rng.uniform(bx.lb(i), bx.ub(i));
    if (satisfies_constraints(inst, p)) {
      PriceVector out;
      out.values = p;
      out.feasible = true;
      return out;
    }
  }
  return random_feasibility_fallback(inst, rng, bx);
}

LocalSearchResult local_search(const MixedLogitInstance& inst, const LocalSearchConfig& cfg,
                               const std::optional<PriceVector>& p0, const NodeBox* box) {
  if (!(cfg.theta > 0) || !(cfg.initial_radius > 0) || !(cfg.radius_shrink > 0) ||
      !(cfg.radius_shrink < 1) || !(cfg.min_radius > 0))
    throw std::invalid_argument("local_search: config out of range");

  LocalSearchResult res;
  PriceVector p_best;
  if (p0.has_value()) {
    p_best = *p0;
  } else {
    Rng rng(cfg.seed);
    p_best = random_feasible_point(inst, rng, box);
  }
  double f_best = expected_revenue(inst, p_best.values);

  constexpr int kMaxLpSolves = 100000;
  const double kFail = -std::numeric_limits<double>::infinity();
  double r = cfg.initial_radius;
  while (r >= cfg.min_radius && res.lp_solves < kMaxLpSolves) {
    PriceVector p1;
    double f1 = kFail;
    ++res.lp_solves;
    try {
      p1 = trust_region_step(inst, p_best, r, box);
      f1 = expected_revenue(inst, p1.values);
    } catch (const std::runtime_error&) {
      // treated as a non-improving probe; shrinking the radius usually repairs it
    }

    // accept while improving; the radius resets only after the follow-up solve,
    // so the first re-solve still runs at the entry radius
    while (f1 > f_best && res.lp_solves < kMaxLpSolves) {
      p_best = p1;
      f_best = f1;
      ++res.accepted_steps;
      ++res.lp_solves;
      try {
        p1 = trust_region_step(inst, p_best, r, box);
        f1 = expected_revenue(inst, p1.values);
      } catch (const std::runtime_error&) {
        f1 = kFail;
        break;
      }
      r = cfg.initial_radius;
    }

    if (std::abs(f1 - f_best) <= cfg.theta) {
      res.converged = true;
      break;
    }
    r *= cfg.radius_shrink;
  }

  res.prices = p_best;
  res.prices.feasible = true;
  res.value = f_best;
  return res;
}

}  // namespace pricer
