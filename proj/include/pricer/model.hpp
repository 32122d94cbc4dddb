#pragma once

#include <Eigen/Dense>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace pricer {

struct Alternative {
  std::string name;
  bool priced = true;  // false: price fixed, its whole utility lives in exo_utility
};

// Optional polytope A p >= b over the priced-price vector.
struct LinearConstraints {
  Eigen::MatrixXd A;  // m x |priced|
  Eigen::VectorXd b;  // m
};

// Static multi-product pricing instance under a discrete mixture of MNL classes.
//
// Dimensions: I alternatives, N customers, L taste classes. Utilities are affine
// in the decision price: V[i][n][l] = price_coef[i][n][l] * p_i + exo_utility[i][n][l]
// for priced i, and V = exo_utility alone for unpriced i. Class weights w[l][n]
// mix the per-class MNL probabilities.
struct MixedLogitInstance {
  std::string name;
  std::vector<Alternative> alternatives;
  int customers = 1;  // N
  int classes = 1;    // L

  // One N x L matrix per alternative; entry (n, l).
  std::vector<Eigen::MatrixXd> price_coef;
  std::vector<Eigen::MatrixXd> exo_utility;

  Eigen::MatrixXd class_weight;  // L x N

  Eigen::VectorXd price_lb;  // over priced alternatives, in alternative order
  Eigen::VectorXd price_ub;

  std::optional<LinearConstraints> linear_constraints;

  // Derived on validate(): alternative indices of the priced alternatives (in order),
  // and the inverse map (-1 for unpriced).
  std::vector<int> priced_alts;
  std::vector<int> priced_pos_of_alt;

  int num_alternatives() const { return static_cast<int>(alternatives.size()); }
  int num_priced() const { return static_cast<int>(priced_alts.size()); }
};

struct PriceVector {
  Eigen::VectorXd values;  // over priced alternatives
  bool feasible = false;   // set once box / A p >= b membership has been checked
};

// Axis-aligned price region, over priced alternatives. The search tree shrinks
// these; the instance box is the root.
struct NodeBox {
  Eigen::VectorXd lb, ub;

  int dims() const { return static_cast<int>(lb.size()); }
  Eigen::VectorXd center() const { return 0.5 * (lb + ub); }
  // half the box diagonal: the radius of the smallest enclosing ball
  double half_diagonal() const { return 0.5 * (ub - lb).norm(); }
};

NodeBox instance_box(const MixedLogitInstance& inst);

// Fills priced_alts, checks all structural invariants, and (when A-rows exist)
// verifies box ∩ {A p >= b} nonempty with an LP feasibility call. Near-normalized
// class weights (|sum - 1| <= 1e-3) are kept as-is with a warning; beyond that is
// an error. Throws std::invalid_argument on violations.
void validate(MixedLogitInstance& inst, std::ostream* warnings = nullptr);

bool in_box(const MixedLogitInstance& inst, const Eigen::VectorXd& p, double tol = 1e-9);
bool satisfies_constraints(const MixedLogitInstance& inst, const Eigen::VectorXd& p,
                           double tol = 1e-7);

double systematic_utility(const MixedLogitInstance& inst, const Eigen::VectorXd& p,
                          int i, int n, int l);

// f[i][n][l](p) = sum_j exp(V_j - V_i), evaluated as exp(logsumexp(V) - V_i).
// Finite for utility spreads up to ~700; always >= 1.
double ratio_denominator(const MixedLogitInstance& inst, const Eigen::VectorXd& p,
                         int i, int n, int l);

// P(i, n) = sum_l w[l][n] * softmax_i(V[.][n][l]). Columns sum to sum_l w[l][n].
Eigen::MatrixXd choice_probabilities(const MixedLogitInstance& inst, const Eigen::VectorXd& p);

// sum over priced i and all n of p_i * P(i, n)
double expected_revenue(const MixedLogitInstance& inst, const Eigen::VectorXd& p);

// Analytic gradient of expected_revenue over priced prices.
Eigen::VectorXd revenue_gradient(const MixedLogitInstance& inst, const Eigen::VectorXd& p);

// Analytic gradient of ratio_denominator(i, n, l) over priced prices:
// d f_i / d p_m = beta_m e^{V_m - V_i} - delta_im beta_i f_i.
Eigen::VectorXd f_gradient(const MixedLogitInstance& inst, const Eigen::VectorXd& p,
                           int i, int n, int l);

// log of ratio_denominator; finite even where f itself overflows. Convex in p
// (log of a sum of exponentials of affine maps).
double log_ratio_denominator(const MixedLogitInstance& inst, const Eigen::VectorXd& p,
                             int i, int n, int l);

// Gradient of log_ratio_denominator: d log f_i / d p_m = beta_m pi_m - delta_im beta_i.
// Entries are bounded by |beta|, regardless of the price box.
Eigen::VectorXd log_f_gradient(const MixedLogitInstance& inst, const Eigen::VectorXd& p,
                               int i, int n, int l);

// Percent of total choice mass per alternative; sums to 100 exactly up to rounding.
Eigen::VectorXd market_shares(const MixedLogitInstance& inst, const Eigen::VectorXd& p);

namespace detail {
// Per-class log-sum-exp state reused by the evaluators: a[j] = V_j - logsumexp(V),
// so softmax_j = exp(a[j]) and f_i = exp(-a[i]).
void shifted_log_probs(const MixedLogitInstance& inst, const Eigen::VectorXd& p,
                       int n, int l, Eigen::VectorXd& a);
}  // namespace detail

}  // namespace pricer
