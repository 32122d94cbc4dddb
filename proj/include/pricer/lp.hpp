#pragma once

#include <Eigen/Dense>
#include <vector>

namespace pricer {

enum class Relation { LessEq, GreaterEq, Equal };

struct LpRow {
  Eigen::VectorXd a;
  Relation rel = Relation::LessEq;
  double rhs = 0.0;
};

// maximize c^T x subject to the rows and variable bounds.
// Lower bounds must be finite (0 by convention when defaulted); upper bounds may be +inf.
struct LinearProgram {
  int num_vars = 0;
  Eigen::VectorXd objective;
  std::vector<LpRow> rows;
  Eigen::VectorXd var_lb;
  Eigen::VectorXd var_ub;

  // all-zero objective, bounds [0, +inf)
  static LinearProgram with_vars(int n);
  void add_row(const Eigen::VectorXd& a, Relation rel, double rhs);
};

enum class LpStatus { Optimal, Infeasible, Unbounded, NumericalFailure };

struct LpSolution {
  LpStatus status = LpStatus::NumericalFailure;
  Eigen::VectorXd x;            // present iff Optimal
  double objective_value = 0.0; // present iff Optimal
  long pivots = 0;
};

// Bounded-variable primal simplex, realized on the constraint geometry: a vertex is
// |vars| active constraints drawn from {rows, variable bounds}; each pivot swaps one.
// Dantzig pricing with Bland's smallest-index rule after a degenerate stall; explicit
// phase 1 through a single infeasibility variable. Deterministic for fixed input.
//
// On Optimal: rows hold within 1e-7 * (1 + |rhs|), bounds within 1e-9, and the simplex
// optimality (KKT multiplier sign) conditions hold at the returned vertex.
LpSolution solve_lp(const LinearProgram& lp);

}  // namespace pricer
