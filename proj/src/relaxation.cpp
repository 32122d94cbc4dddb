#include "pricer/relaxation.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace pricer {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr int kVertexDimGuard = 20;

double clamp_positive(double v) {
  return std::max(v, std::numeric_limits<double>::min());
}

void check_triple(const MixedLogitInstance& inst, int i, int n, int l) {
  if (i < 0 || i >= inst.num_alternatives() || inst.priced_pos_of_alt[i] < 0 || n < 0 ||
      n >= inst.customers || l < 0 || l >= inst.classes)
    throw std::invalid_argument("tau bound: invalid (alternative, customer, class)");
}

// Certified lower bound on min over the box of log f[i][n][l]. Projected
// gradient descent locates a near-minimizer; the first-order convexity bound
// anchored there certifies the value, so the result never exceeds the true
// minimum even if the descent stopped early.
double certified_log_min_f(const MixedLogitInstance& inst, const NodeBox& box, int i,
                           int n, int l) {
  const int d = box.dims();
  Eigen::VectorXd p = box.center();
  double phi = log_ratio_denominator(inst, p, i, n, l);
  Eigen::VectorXd g = log_f_gradient(inst, p, i, n, l);

  const double width = (box.ub - box.lb).maxCoeff();
  double step = std::max(width, 1.0);
  for (int iter = 0; iter < 500; ++iter) {
    const Eigen::VectorXd pg = p - (p - g).cwiseMax(box.lb).cwiseMin(box.ub);
    if (pg.norm() <= 1e-8) break;

    bool moved = false;
    while (step > 1e-18) {
      const Eigen::VectorXd q = (p - step * g).cwiseMax(box.lb).cwiseMin(box.ub);
      const Eigen::VectorXd dq = q - p;
      if (dq.cwiseAbs().maxCoeff() == 0.0) break;
      const double phi_q = log_ratio_denominator(inst, q, i, n, l);
      if (phi_q <= phi + 1e-4 * g.dot(dq)) {
        p = q;
        phi = phi_q;
        g = log_f_gradient(inst, p, i, n, l);
        step *= 2.0;
        moved = true;
        break;
      }
      step *= 0.5;
    }
    if (!moved) break;
  }

  double cert = phi;
  for (int j = 0; j < d; ++j)
    cert += std::min(g(j) * (box.lb(j) - p(j)), g(j) * (box.ub(j) - p(j)));
  return std::max(0.0, cert);  // f >= 1 everywhere
}

// Max over the 2^d box vertices of log f; exact box maximum by convexity.
// Fills one value per priced alternative for the given (n, l).
void vertex_max_log_f(const MixedLogitInstance& inst, const NodeBox& box, int n, int l,
                      Eigen::VectorXd& out) {
  const int d = box.dims();
  out = Eigen::VectorXd::Constant(inst.num_priced(), -kInf);
  Eigen::VectorXd p(d), a;
  for (long mask = 0; mask < (1L << d); ++mask) {
    for (int j = 0; j < d; ++j) p(j) = (mask >> j) & 1 ? box.ub(j) : box.lb(j);
    detail::shifted_log_probs(inst, p, n, l, a);
    for (int pos = 0; pos < inst.num_priced(); ++pos)
      out(pos) = std::max(out(pos), -a(inst.priced_alts[pos]));
  }
}

void vertex_guard(int d) {
  if (d > kVertexDimGuard)
    throw std::invalid_argument(
        "tau_lower_bound: 2^d vertex enumeration is intractable for " + std::to_string(d) +
        " priced alternatives (guard: 20); configure the coordinate-interval bound "
        "(tau_lower_bound_interval) instead");
}

}  // namespace

bool PointPool::add(const Eigen::VectorXd& p) {
  for (const auto& q : points)
    if ((q - p).cwiseAbs().maxCoeff() <= 1e-9) return false;
  points.push_back(p);
  if (static_cast<int>(points.size()) > capacity) points.erase(points.begin());
  return true;
}

double tau_upper_bound(const MixedLogitInstance& inst, const NodeBox& box, int i, int n,
                       int l) {
  check_triple(inst, i, n, l);
  return clamp_positive(std::exp(-certified_log_min_f(inst, box, i, n, l)));
}

double tau_lower_bound(const MixedLogitInstance& inst, const NodeBox& box, int i, int n,
                       int l) {
  check_triple(inst, i, n, l);
  vertex_guard(box.dims());
  Eigen::VectorXd maxlog;
  vertex_max_log_f(inst, box, n, l, maxlog);
  return clamp_positive(std::exp(-maxlog(inst.priced_pos_of_alt[i])));
}

double tau_lower_bound_interval(const MixedLogitInstance& inst, const NodeBox& box, int i,
                                int n, int l) {
  check_triple(inst, i, n, l);
  // per-term box maximum of V_j - V_i, an affine function of (p_j, p_i);
  // log-sum-exp of those maxima bounds log max f from above
  const int I = inst.num_alternatives();
  const int pos_i = inst.priced_pos_of_alt[i];
  const double beta_i = pos_i >= 0 ? inst.price_coef[i](n, l) : 0.0;
  Eigen::VectorXd term_max(I);
  for (int j = 0; j < I; ++j) {
    double m = inst.exo_utility[j](n, l) - inst.exo_utility[i](n, l);
    const int pos_j = inst.priced_pos_of_alt[j];
    // gather the net coefficient per coordinate before maximizing, so the
    // j == i term stays exactly zero
    if (pos_j >= 0 && pos_j == pos_i) {
      // same coordinate on both sides: net coefficient beta_j - beta_i = 0
    } else {
      if (pos_j >= 0) {
        const double c = inst.price_coef[j](n, l);
        m += c >= 0 ? c * box.ub(pos_j) : c * box.lb(pos_j);
      }
      if (pos_i >= 0) {
        const double c = -beta_i;
        m += c >= 0 ? c * box.ub(pos_i) : c * box.lb(pos_i);
      }
    }
    term_max(j) = m;
  }
  const double shift = term_max.maxCoeff();
  const double lse = shift + std::log((term_max.array() - shift).exp().sum());
  return clamp_positive(std::exp(-lse));
}

TauBounds compute_tau_bounds(const MixedLogitInstance& inst, const NodeBox& box) {
  vertex_guard(box.dims());
  const int d = inst.num_priced();
  TauBounds tb;
  tb.lb.assign(d, Eigen::MatrixXd(inst.customers, inst.classes));
  tb.ub.assign(d, Eigen::MatrixXd(inst.customers, inst.classes));

  Eigen::VectorXd maxlog;
  for (int n = 0; n < inst.customers; ++n)
    for (int l = 0; l < inst.classes; ++l) {
      vertex_max_log_f(inst, box, n, l, maxlog);
      for (int pos = 0; pos < d; ++pos) {
        const int alt = inst.priced_alts[pos];
        const double ub = clamp_positive(std::exp(-certified_log_min_f(inst, box, alt, n, l)));
        const double lb = clamp_positive(std::exp(-maxlog(pos)));
        tb.ub[pos](n, l) = ub;
        tb.lb[pos](n, l) = std::min(lb, ub);  // guard fp rounding on point boxes
      }
    }
  return tb;
}

LinearProgram build_relaxation(const MixedLogitInstance& inst, const NodeBox& box,
                               const PointPool& pool, const TauBounds& tb,
                               RelaxationLayout* layout_out) {
  RelaxationLayout lay;
  lay.d = inst.num_priced();
  lay.N = inst.customers;
  lay.L = inst.classes;
  if (layout_out) *layout_out = lay;
  const int d = lay.d;
  const int nv = lay.num_vars();

  LinearProgram lp = LinearProgram::with_vars(nv);

  for (int i = 0; i < d; ++i)
    for (int n = 0; n < lay.N; ++n)
      for (int l = 0; l < lay.L; ++l)
        lp.objective(lay.w_index(i, i, n, l)) = inst.class_weight(l, n);

  // variable bounds: p in the box, tau in its certified bounds, W in the
  // interval product of the two
  lp.var_lb.head(d) = box.lb;
  lp.var_ub.head(d) = box.ub;
  for (int i = 0; i < d; ++i)
    for (int n = 0; n < lay.N; ++n)
      for (int l = 0; l < lay.L; ++l) {
        const double tlo = tb.lb[i](n, l), thi = tb.ub[i](n, l);
        lp.var_lb(lay.tau_index(i, n, l)) = tlo;
        lp.var_ub(lay.tau_index(i, n, l)) = thi;
        for (int j = 0; j < d; ++j) {
          const double c1 = tlo * box.lb(j), c2 = tlo * box.ub(j);
          const double c3 = thi * box.lb(j), c4 = thi * box.ub(j);
          lp.var_lb(lay.w_index(i, j, n, l)) = std::min(std::min(c1, c2), std::min(c3, c4));
          lp.var_ub(lay.w_index(i, j, n, l)) = std::max(std::max(c1, c2), std::max(c3, c4));
        }
      }

  // Every row is normalized to unit max coefficient, and rows the variable
  // boxes already imply (within tolerance) are dropped: with tau lower bounds
  // underflowing toward 0 the scaled tightenings degenerate into duplicates of
  // their parent rows, and the resulting near-ties stall the simplex.
  auto add_scaled = [&lp](Eigen::VectorXd& r, Relation rel, double rhs) {
    const double s = r.cwiseAbs().maxCoeff();
    if (s <= 0.0) return;
    double extreme = 0.0;  // tightest activity the variable bounds allow
    for (int k = 0; k < r.size(); ++k) {
      if (r(k) == 0.0) continue;
      const bool pick_hi = (rel == Relation::GreaterEq) == (r(k) < 0.0);
      extreme += r(k) * (pick_hi ? lp.var_ub(k) : lp.var_lb(k));
    }
    const double tol = 1e-9 * (1.0 + std::abs(rhs));
    if (rel == Relation::GreaterEq && extreme >= rhs - tol) return;
    if (rel == Relation::LessEq && extreme <= rhs + tol) return;
    r /= s;
    const double b = rhs / s;
    // anchors that cluster within ~1e-6 emit nearly identical hyperplanes;
    // near-parallel row pairs make every working set containing both
    // ill-conditioned. Keep one representative per direction, replacing it
    // wholesale when a tighter one arrives (both rows are valid cuts, so
    // either is sound alone; a spliced rhs on the other's coefficients is not).
    for (auto& old : lp.rows) {
      if (old.rel != rel) continue;
      if ((old.a - r).cwiseAbs().maxCoeff() > 1e-6) continue;
      const bool tighter = rel == Relation::LessEq ? b < old.rhs : b > old.rhs;
      if (tighter) {
        old.a = r;
        old.rhs = b;
      }
      return;
    }
    lp.add_row(r, rel, b);
  };

  // Polytope rows for the tau-linked families. Only genuine A-rows take part:
  // instantiating the families with the box written as A p >= b reproduces the
  // McCormick rows below exactly (substitute a = +/- e_j, b = lb_j / -ub_j),
  // so the box contributes nothing new there.
  std::vector<std::pair<Eigen::VectorXd, double>> rows_a;
  const bool has_lc = inst.linear_constraints.has_value();
  if (has_lc) {
    const auto& lc = *inst.linear_constraints;
    for (int r = 0; r < lc.A.rows(); ++r)
      rows_a.emplace_back(lc.A.row(r).transpose(), lc.b(r));
  }

  Eigen::VectorXd row(nv);

  // feasibility of the p block under the real polytope
  for (const auto& [a, b] : rows_a) {
    row.setZero();
    row.head(d) = a;
    add_scaled(row, Relation::GreaterEq, b);
  }

  // supporting hyperplanes of tau * f(p) <= 1 at each pool anchor, scaled by
  // 1/f(anchor): tau (1 - glog' p_k) + glog' W_i <= 1/f. The scaling keeps the
  // coefficients bounded by |beta| even where f(anchor) overflows.
  Eigen::VectorXd a_probs;
  for (const auto& pk : pool.points) {
    for (int n = 0; n < lay.N; ++n)
      for (int l = 0; l < lay.L; ++l) {
        detail::shifted_log_probs(inst, pk, n, l, a_probs);
        for (int i = 0; i < d; ++i) {
          const int alt = inst.priced_alts[i];
          Eigen::VectorXd glog(d);
          for (int j = 0; j < d; ++j) {
            const int altj = inst.priced_alts[j];
            glog(j) = inst.price_coef[altj](n, l) * std::exp(a_probs(altj));
            if (altj == alt) glog(j) -= inst.price_coef[altj](n, l);
          }
          row.setZero();
          row(lay.tau_index(i, n, l)) = 1.0 - glog.dot(pk);
          for (int j = 0; j < d; ++j) row(lay.w_index(i, j, n, l)) = glog(j);
          add_scaled(row, Relation::LessEq, std::exp(a_probs(alt)));
        }
      }
  }

  // per (i, n, l): A W_i >= b tau, and the tightening band
  // LB (A p - b) <= A W_i - b tau <= UB (A p - b). The LB side is emitted only
  // while LB carries numeric weight; near 0 it degenerates into the parent row.
  for (int i = 0; i < d; ++i)
    for (int n = 0; n < lay.N; ++n)
      for (int l = 0; l < lay.L; ++l) {
        const double tlo = tb.lb[i](n, l), thi = tb.ub[i](n, l);
        for (const auto& [a, b] : rows_a) {
          row.setZero();
          for (int j = 0; j < d; ++j) row(lay.w_index(i, j, n, l)) = a(j);
          row(lay.tau_index(i, n, l)) = -b;
          Eigen::VectorXd base = row;
          add_scaled(row, Relation::GreaterEq, 0.0);

          if (tlo >= 1e-9) {
            row = base;
            row.head(d) = -tlo * a;
            add_scaled(row, Relation::GreaterEq, -tlo * b);
          }

          row = base;
          row.head(d) = -thi * a;
          add_scaled(row, Relation::LessEq, -thi * b);
        }
      }

  // McCormick envelope of W[i][j][n][l] = tau[i][n][l] * p_j over
  // [tlo, thi] x [box.lb_j, box.ub_j]
  for (int i = 0; i < d; ++i)
    for (int n = 0; n < lay.N; ++n)
      for (int l = 0; l < lay.L; ++l) {
        const double tlo = tb.lb[i](n, l), thi = tb.ub[i](n, l);
        const int ti = lay.tau_index(i, n, l);
        for (int j = 0; j < d; ++j) {
          const int wi = lay.w_index(i, j, n, l);
          const double plo = box.lb(j), phi = box.ub(j);

          auto corner = [&](double tc, double pc, Relation rel) {
            row.setZero();
            row(wi) = 1.0;
            row(j) = -tc;
            row(ti) = -pc;
            add_scaled(row, rel, -tc * pc);
          };
          corner(tlo, plo, Relation::GreaterEq);
          corner(thi, phi, Relation::GreaterEq);
          corner(thi, plo, Relation::LessEq);
          corner(tlo, phi, Relation::LessEq);
        }
      }

  return lp;
}

NodeBoundResult node_upper_bound(const MixedLogitInstance& inst, const NodeBox& box,
                                 const PointPool& pool) {
  NodeBoundResult out;
  const TauBounds tb = compute_tau_bounds(inst, box);
  RelaxationLayout lay;
  const LinearProgram lp = build_relaxation(inst, box, pool, tb, &lay);
  const LpSolution sol = solve_lp(lp);

  switch (sol.status) {
    case LpStatus::Optimal:
      break;
    case LpStatus::Infeasible:
      out.infeasible = true;
      out.upper_bound = kInf;
      return out;
    default:
      out.numerical_failure = true;
      out.upper_bound = kInf;
      return out;
  }

  out.upper_bound = sol.objective_value;
  out.p_candidate.values = sol.x.head(lay.d).cwiseMax(box.lb).cwiseMin(box.ub);
  out.p_candidate.feasible = satisfies_constraints(inst, out.p_candidate.values);
  return out;
}

}  // namespace pricer
