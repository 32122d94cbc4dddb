#pragma once

#include <vector>

#include "pricer/lp.hpp"
#include "pricer/model.hpp"

namespace pricer {

// Feasible anchor points for the supporting-hyperplane cuts. FIFO-capped;
// near-duplicates (l-inf distance <= 1e-9) are dropped.
struct PointPool {
  std::vector<Eigen::VectorXd> points;
  int capacity = 20;

  // true if the point was actually inserted
  bool add(const Eigen::VectorXd& p);
};

// Bounds on tau[i][n][l] = 1 / f[i][n][l] over a node box; one matrix (n, l)
// per priced alternative. Invariant: 0 < lb <= ub <= 1.
struct TauBounds {
  std::vector<Eigen::MatrixXd> lb, ub;
};

// Variable layout of the relaxation LP: p block, then tau, then W.
// i and j index priced alternatives.
struct RelaxationLayout {
  int d = 0, N = 0, L = 0;

  int p_index(int i) const { return i; }
  int tau_index(int i, int n, int l) const { return d + (i * N + n) * L + l; }
  int w_index(int i, int j, int n, int l) const {
    return d + d * N * L + ((i * d + j) * N + n) * L + l;
  }
  int num_vars() const { return d + d * N * L + d * d * N * L; }
};

// 1 / (certified lower bound of min f over the box). The convex minimization runs
// as projected gradient descent on log f (backtracking line search, projected
// gradient norm 1e-8, at most 500 iterations); the first-order convexity bound at
// the final iterate certifies the result, so the returned value never undershoots
// the true maximum of tau.
double tau_upper_bound(const MixedLogitInstance& inst, const NodeBox& box, int i, int n,
                       int l);

// 1 / (max f over the box), exact: a convex function attains its box maximum at a
// vertex, and all 2^d vertices are enumerated. Guarded at d <= 20; beyond that it
// throws and points at tau_lower_bound_interval.
double tau_lower_bound(const MixedLogitInstance& inst, const NodeBox& box, int i, int n,
                       int l);

// Coordinate-interval fallback for large d: bounds each exp term of f by its
// box maximum. Valid but looser than vertex enumeration.
double tau_lower_bound_interval(const MixedLogitInstance& inst, const NodeBox& box, int i,
                                int n, int l);

TauBounds compute_tau_bounds(const MixedLogitInstance& inst, const NodeBox& box);

// The LP overestimator over the node box: variables (p, tau, W), objective
// sum w[l][n] W[i][i][n][l], with supporting-hyperplane rows per pool point,
// the tau-scaled constraint system, its two tightening families, and the four
// McCormick rows per bilinear term W[i][j][n][l] = tau[i][n][l] * p_j.
// The tau-linked families instantiate only genuine A-rows: fed the box
// inequalities they collapse to the McCormick rows, which are always present.
LinearProgram build_relaxation(const MixedLogitInstance& inst, const NodeBox& box,
                               const PointPool& pool, const TauBounds& tb,
                               RelaxationLayout* layout_out = nullptr);

struct NodeBoundResult {
  double upper_bound = 0.0;
  PriceVector p_candidate;
  bool numerical_failure = false;
  bool infeasible = false;  // LP infeasible (numerical edge) -> ub treated as +inf
};

// Computes TauBounds, builds and solves the relaxation, and returns the LP value
// with the p-part of the optimizer clipped into the box.
NodeBoundResult node_upper_bound(const MixedLogitInstance& inst, const NodeBox& box,
                                 const PointPool& pool);

}  // namespace pricer
