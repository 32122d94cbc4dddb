#include "pricer/model.hpp"

#include <cmath>
#include <limits>
#include <set>
#include <sstream>
#include <stdexcept>

#include "pricer/lp.hpp"

namespace pricer {

namespace {

void require(bool cond, const std::string& msg) {
  if (!cond) throw std::invalid_argument(msg);
}

}  // namespace

void validate(MixedLogitInstance& inst, std::ostream* warnings) {
  const int I = inst.num_alternatives();
  require(I >= 1, "instance needs at least one alternative");
  require(inst.customers >= 1, "customers must be >= 1");
  require(inst.classes >= 1, "classes must be >= 1");

  std::set<std::string> names;
  inst.priced_alts.clear();
  inst.priced_pos_of_alt.assign(I, -1);
  for (int i = 0; i < I; ++i) {
    require(names.insert(inst.alternatives[i].name).second,
            "duplicate alternative name: " + inst.alternatives[i].name);
    if (inst.alternatives[i].priced) {
      inst.priced_pos_of_alt[i] = static_cast<int>(inst.priced_alts.size());
      inst.priced_alts.push_back(i);
    }
  }
  const int d = inst.num_priced();
  require(d >= 1, "at least one alternative must be priced");

  require(static_cast<int>(inst.price_coef.size()) == I, "price_coef must have one matrix per alternative");
  require(static_cast<int>(inst.exo_utility.size()) == I, "exo_utility must have one matrix per alternative");
  for (int i = 0; i < I; ++i) {
    require(inst.price_coef[i].rows() == inst.customers && inst.price_coef[i].cols() == inst.classes,
            "price_coef[" + std::to_string(i) + "] must be N x L");
    require(inst.exo_utility[i].rows() == inst.customers && inst.exo_utility[i].cols() == inst.classes,
            "exo_utility[" + std::to_string(i) + "] must be N x L");
    if (inst.alternatives[i].priced) {
      require((inst.price_coef[i].array() < 0.0).all(),
              "price coefficient must be strictly negative for priced alternative " +
                  inst.alternatives[i].name);
    }
  }

  require(inst.class_weight.rows() == inst.classes && inst.class_weight.cols() == inst.customers,
          "class_weight must be L x N");
  require((inst.class_weight.array() >= 0.0).all(), "class weights must be nonnegative");
  for (int n = 0; n < inst.customers; ++n) {
    const double s = inst.class_weight.col(n).sum();
    const double dev = std::abs(s - 1.0);
    if (dev > 1e-3) {
      std::ostringstream os;
      os << "class weights for customer " << n << " sum to " << s << ", expected 1";
      throw std::invalid_argument(os.str());
    }
    if (dev > 1e-12 && warnings) {
      *warnings << "warning: class weights for customer " << n << " sum to " << s
                << "; keeping them as given\n";
      warnings = nullptr;  // one warning per instance is enough
    }
  }

  require(inst.price_lb.size() == d && inst.price_ub.size() == d,
          "price bounds must cover exactly the priced alternatives");
  require((inst.price_lb.array() >= 0.0).all(), "price lower bounds must be >= 0");
  require((inst.price_lb.array() <= inst.price_ub.array()).all(), "price_lb must be <= price_ub");
  require(inst.price_ub.allFinite(), "price upper bounds must be finite");

  if (inst.linear_constraints) {
    const auto& lc = *inst.linear_constraints;
    require(lc.A.cols() == d, "constraint matrix must have |priced| columns");
    require(lc.A.rows() == lc.b.size(), "constraint rhs size mismatch");

    LinearProgram lp = LinearProgram::with_vars(d);
    lp.var_lb = inst.price_lb;
    lp.var_ub = inst.price_ub;
    for (Eigen::Index r = 0; r < lc.A.rows(); ++r)
      lp.add_row(lc.A.row(r).transpose(), Relation::GreaterEq, lc.b(r));
    const LpSolution sol = solve_lp(lp);
    require(sol.status == LpStatus::Optimal,
            "price box intersected with A p >= b is empty or numerically intractable");
  }
}

bool in_box(const MixedLogitInstance& inst, const Eigen::VectorXd& p, double tol) {
  return p.size() == inst.num_priced() &&
         (p.array() >= inst.price_lb.array() - tol).all() &&
         (p.array() <= inst.price_ub.array() + tol).all();
}

bool satisfies_constraints(const MixedLogitInstance& inst, const Eigen::VectorXd& p, double tol) {
  if (!inst.linear_constraints) return true;
  const auto& lc = *inst.linear_constraints;
  return ((lc.A * p - lc.b).array() >= -tol * (1.0 + lc.b.array().abs())).all();
}

namespace detail {

void shifted_log_probs(const MixedLogitInstance& inst, const Eigen::VectorXd& p,
                       int n, int l, Eigen::VectorXd& a) {
  const int I = inst.num_alternatives();
  a.resize(I);
  for (int i = 0; i < I; ++i) {
    const int pos = inst.priced_pos_of_alt[i];
    a(i) = inst.exo_utility[i](n, l);
    if (pos >= 0) a(i) += inst.price_coef[i](n, l) * p(pos);
  }
  const double m = a.maxCoeff();
  const double log_sum = m + std::log((a.array() - m).exp().sum());
  a.array() -= log_sum;
}

}  // namespace detail

double systematic_utility(const MixedLogitInstance& inst, const Eigen::VectorXd& p,
                          int i, int n, int l) {
  if (i < 0 || i >= inst.num_alternatives() || n < 0 || n >= inst.customers || l < 0 ||
      l >= inst.classes)
    throw std::invalid_argument("systematic_utility: index out of range");
  const int pos = inst.priced_pos_of_alt[i];
  double v = inst.exo_utility[i](n, l);
  if (pos >= 0) v += inst.price_coef[i](n, l) * p(pos);
  return v;
}

double ratio_denominator(const MixedLogitInstance& inst, const Eigen::VectorXd& p,
                         int i, int n, int l) {
  if (i < 0 || i >= inst.num_alternatives() || n < 0 || n >= inst.customers || l < 0 ||
      l >= inst.classes)
    throw std::invalid_argument("ratio_denominator: index out of range");
  Eigen::VectorXd a;
  detail::shifted_log_probs(inst, p, n, l, a);
  return std::exp(-a(i));
}

Eigen::MatrixXd choice_probabilities(const MixedLogitInstance& inst, const Eigen::VectorXd& p) {
  const int I = inst.num_alternatives();
  Eigen::MatrixXd P = Eigen::MatrixXd::Zero(I, inst.customers);
  Eigen::VectorXd a;
  for (int n = 0; n < inst.customers; ++n)
    for (int l = 0; l < inst.classes; ++l) {
      detail::shifted_log_probs(inst, p, n, l, a);
      P.col(n) += inst.class_weight(l, n) * a.array().exp().matrix();
    }
  return P;
}

double expected_revenue(const MixedLogitInstance& inst, const Eigen::VectorXd& p) {
  double total = 0.0;
  Eigen::VectorXd a;
  for (int n = 0; n < inst.customers; ++n)
    for (int l = 0; l < inst.classes; ++l) {
      detail::shifted_log_probs(inst, p, n, l, a);
      double r = 0.0;
      for (int pos = 0; pos < inst.num_priced(); ++pos)
        r += p(pos) * std::exp(a(inst.priced_alts[pos]));
      total += inst.class_weight(l, n) * r;
    }
  return total;
}

Eigen::VectorXd revenue_gradient(const MixedLogitInstance& inst, const Eigen::VectorXd& p) {
  // d/dp_m of sum w p_i pi_i, with pi the per-class softmax:
  // grad_m = sum_{n,l} w [ pi_m + beta_m pi_m (p_m - sum_i p_i pi_i) ].
  const int d = inst.num_priced();
  Eigen::VectorXd g = Eigen::VectorXd::Zero(d);
  Eigen::VectorXd a;
  for (int n = 0; n < inst.customers; ++n)
    for (int l = 0; l < inst.classes; ++l) {
      detail::shifted_log_probs(inst, p, n, l, a);
      double priced_rev = 0.0;
      for (int pos = 0; pos < d; ++pos)
        priced_rev += p(pos) * std::exp(a(inst.priced_alts[pos]));
      const double w = inst.class_weight(l, n);
      for (int pos = 0; pos < d; ++pos) {
        const int i = inst.priced_alts[pos];
        const double pi = std::exp(a(i));
        const double beta = inst.price_coef[i](n, l);
        g(pos) += w * pi * (1.0 + beta * (p(pos) - priced_rev));
      }
    }
  return g;
}

Eigen::VectorXd f_gradient(const MixedLogitInstance& inst, const Eigen::VectorXd& p,
                           int i, int n, int l) {
  if (i < 0 || i >= inst.num_alternatives() || n < 0 || n >= inst.customers || l < 0 ||
      l >= inst.classes)
    throw std::invalid_argument("f_gradient: index out of range");
  const int d = inst.num_priced();
  Eigen::VectorXd a;
  detail::shifted_log_probs(inst, p, n, l, a);
  const double f_i = std::exp(-a(i));
  Eigen::VectorXd g = Eigen::VectorXd::Zero(d);
  for (int pos = 0; pos < d; ++pos) {
    const int m = inst.priced_alts[pos];
    const double beta_m = inst.price_coef[m](n, l);
    g(pos) = beta_m * std::exp(a(m) - a(i));  // beta_m e^{V_m - V_i}
    if (m == i) g(pos) -= beta_m * f_i;
  }
  return g;
}

Eigen::VectorXd market_shares(const MixedLogitInstance& inst, const Eigen::VectorXd& p) {
  const Eigen::MatrixXd P = choice_probabilities(inst, p);
  Eigen::VectorXd mass = P.rowwise().sum();
  // Normalizing by total mass rather than N keeps the sum at exactly 100 even for
  // instances whose printed class weights do not sum to 1.
  return 100.0 * mass / mass.sum();
}

NodeBox instance_box(const MixedLogitInstance& inst) {
  return NodeBox{inst.price_lb, inst.price_ub};
}

double log_ratio_denominator(const MixedLogitInstance& inst, const Eigen::VectorXd& p,
                             int i, int n, int l) {
  if (i < 0 || i >= inst.num_alternatives() || n < 0 || n >= inst.customers || l < 0 ||
      l >= inst.classes)
    throw std::invalid_argument("log_ratio_denominator: index out of range");
  Eigen::VectorXd a;
  detail::shifted_log_probs(inst, p, n, l, a);
  return -a(i);
}

Eigen::VectorXd log_f_gradient(const MixedLogitInstance& inst, const Eigen::VectorXd& p,
                               int i, int n, int l) {
  if (i < 0 || i >= inst.num_alternatives() || n < 0 || n >= inst.customers || l < 0 ||
      l >= inst.classes)
    throw std::invalid_argument("log_f_gradient: index out of range");
  const int d = inst.num_priced();
  Eigen::VectorXd a;
  detail::shifted_log_probs(inst, p, n, l, a);
  Eigen::VectorXd g = Eigen::VectorXd::Zero(d);
  for (int pos = 0; pos < d; ++pos) {
    const int m = inst.priced_alts[pos];
    const double beta_m = inst.price_coef[m](n, l);
    g(pos) = beta_m * std::exp(a(m));  // beta_m pi_m
    if (m == i) g(pos) -= beta_m;
  }
  return g;
}

}  // namespace pricer
