#include "pricer/lp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace pricer {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kBoundTol = 1e-9;   // variable-bound feasibility
constexpr double kOptTol = 1e-9;     // multiplier (reduced cost) optimality
constexpr double kPivotTol = 1e-10;  // minimal acceptable basis pivot
constexpr double kDirTol = 1e-11;    // |n^T d| below this is treated as no motion
constexpr int kStallLimit = 40;      // degenerate pivots before Bland's rule
constexpr int kMaxPhase1Restarts = 8;
constexpr int kMaxRepairs = 50;      // working-set rebuilds per simplex run

double row_tol(double rhs) { return 1e-7 * (1.0 + std::abs(rhs)); }

// Constraint ids: [0, m) are rows, [m, m+n) are variable bounds.
// Every constraint is kept in ranged form lo <= n^T x <= hi.
struct Geometry {
  int n = 0;
  int m = 0;
  Eigen::MatrixXd A;       // m x n row normals
  Eigen::VectorXd lo, hi;  // m + n entries
  Eigen::VectorXd c;

  int total() const { return m + n; }

  void put_normal(int id, Eigen::Ref<Eigen::RowVectorXd, 0, Eigen::InnerStride<>> out) const {
    if (id < m) {
      out = A.row(id);
    } else {
      out.setZero();
      out(id - m) = 1.0;
    }
  }
};

enum class StepResult { Optimal, Unbounded, Budget, Singular };

bool push_to_vertex(const Geometry& g, Eigen::VectorXd& x, std::vector<int>& sel,
                    std::vector<int>& sel_side, bool* unbounded);

// Primal active-set simplex. The working set holds exactly n constraint ids,
// each pinned to one side; Ninv is the inverse of their normal matrix, so the
// working point is always the vertex Ninv * (active side values).
struct Simplex {
  const Geometry& g;
  Eigen::VectorXd x;
  std::vector<int> work;      // constraint ids, size n
  std::vector<int> side;      // 0 = at lo, 1 = at hi
  std::vector<char> in_work;  // size m + n
  Eigen::MatrixXd Ninv;
  long pivots = 0;
  long budget = 0;
  int stall = 0;
  int repairs = 0;
  bool bland = false;

  explicit Simplex(const Geometry& geom) : g(geom) {}

  void set_working(std::vector<int> ids, std::vector<int> sides) {
    work = std::move(ids);
    side = std::move(sides);
    in_work.assign(g.total(), 0);
    for (int id : work) in_work[id] = 1;
  }

  bool factor() {
    Eigen::MatrixXd N(g.n, g.n);
    for (int k = 0; k < g.n; ++k) g.put_normal(work[k], N.row(k));
    Eigen::FullPivLU<Eigen::MatrixXd> lu(N);
    lu.setThreshold(1e-12);
    if (!lu.isInvertible()) return false;
    Ninv = lu.inverse();
    return true;
  }

  Eigen::VectorXd vertex_of_working() const {
    Eigen::VectorXd s(g.n);
    for (int k = 0; k < g.n; ++k) s(k) = side[k] ? g.hi(work[k]) : g.lo(work[k]);
    return Ninv * s;
  }


  // Rebuilds the working set from its rank-selected independent, still-active
  // part, walking x back up to a full vertex. Degenerate vertices can hand the
  // rank-one updates a (near) dependent set: envelope rows over the same
  // variable block differ by a multiple of a unit normal, so at their shared
  // corners ties admit exactly singular combinations. The independence
  // threshold climbs with each attempt, and a rebuild that lands anywhere
  // infeasible is rolled back: a snap through a barely independent set can
  // throw x far outside the polytope, which phase 2 would never recover from.
  bool repair() {
    const Eigen::VectorXd x_in = x;
    const std::vector<int> work_in = work, side_in = side;
    const double thr =
        std::min(1e-6, 1e-12 * std::pow(100.0, static_cast<double>(repairs)));
    const Eigen::VectorXd Ax = g.A * x;
    std::vector<int> cand, cside;
    Eigen::RowVectorXd r(g.n);
    for (int k = 0; k < g.n; ++k) {
      const int id = work[k];
      const double act = id < g.m ? Ax(id) : x(id - g.m);
      const double bval = side[k] ? g.hi(id) : g.lo(id);
      if (std::abs(act - bval) > 1e-6 * (1.0 + std::abs(bval))) continue;
      cand.push_back(id);
      cside.push_back(side[k]);
    }
    Eigen::MatrixXd C(g.n, cand.size());
    for (size_t k = 0; k < cand.size(); ++k) {
      g.put_normal(cand[k], r);
      C.col(k) = r.transpose();
    }
    std::vector<int> sel, sel_side;
    if (!cand.empty()) {
      Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(C);
      qr.setThreshold(thr);
      const auto& perm = qr.colsPermutation().indices();
      for (int k = 0; k < static_cast<int>(qr.rank()); ++k) {
        sel.push_back(cand[perm(k)]);
        sel_side.push_back(cside[perm(k)]);
      }
    }
    bool unb = false;
    bool ok = static_cast<int>(sel.size()) == g.n ||
              push_to_vertex(g, x, sel, sel_side, &unb);
    if (ok) {
      set_working(std::move(sel), std::move(sel_side));
      ok = factor();
    }
    if (!ok) {
      x = x_in;
      set_working(work_in, side_in);
      return false;
    }
    // adopt the exact vertex only when it is trustworthy; otherwise keep the
    // tracked point, which the caller guarantees feasible
    const Eigen::VectorXd snap = vertex_of_working();
    if (point_feasible(snap)) x = snap;
    return true;
  }

  bool point_feasible(const Eigen::VectorXd& p) const {
    const Eigen::VectorXd act = g.A * p;
    for (int r = 0; r < g.m; ++r)
      if (act(r) > g.hi(r) + row_tol(g.hi(r)) || act(r) < g.lo(r) - row_tol(g.lo(r)))
        return false;
    for (int j = 0; j < g.n; ++j)
      if (p(j) < g.lo(g.m + j) - kBoundTol || p(j) > g.hi(g.m + j) + kBoundTol)
        return false;
    return true;
  }

  bool vertex_feasible() const { return point_feasible(x); }

  bool try_repair() {
    while (repairs < kMaxRepairs) {
      ++repairs;
      if (repair()) return true;
    }
    return false;
  }

  // re-factor and re-sync x, refusing any snap that leaves the polytope; a
  // pass through a barely independent working set can land anywhere, so a bad
  // snap keeps the tracked point and rebuilds the set around it instead
  bool stabilize() {
    const Eigen::VectorXd x_keep = x;
    if (factor()) {
      const Eigen::VectorXd snap = vertex_of_working();
      if (point_feasible(snap)) {
        x = snap;
        return true;
      }
    }
    x = x_keep;
    return try_repair();
  }

  StepResult run() {
    Eigen::VectorXd lambda(g.n), d(g.n), Ad(g.m), Ax(g.m), vrow(g.n);
    Eigen::RowVectorXd nr(g.n);
    int rejects = 0, bad_steps = 0, dir_fails = 0;
    while (true) {
      if (pivots >= budget) return StepResult::Budget;
      lambda.noalias() = Ninv.transpose() * g.c;

      // choose the working constraint to release; viol > 0 means the
      // multiplier sign permits improvement by stepping off that side
      int leave = -1;
      double worst = kOptTol;
      for (int k = 0; k < g.n; ++k) {
        const int id = work[k];
        if (g.lo(id) == g.hi(id)) continue;  // pinned both sides: sign-free
        const double viol = side[k] ? -lambda(k) : lambda(k);
        if (viol <= kOptTol) continue;
        if (bland) {
          if (leave == -1 || id < work[leave]) leave = k;
        } else if (viol > worst) {
          worst = viol;
          leave = k;
        }
      }
      if (leave == -1) return StepResult::Optimal;

      const double sigma = side[leave] ? -1.0 : 1.0;
      d.noalias() = sigma * Ninv.col(leave);
      const double dnorm = d.cwiseAbs().maxCoeff();

      // the direction must actually solve N d = sigma e_leave; rank-one
      // updates drift, and a direction through a stale or near-singular
      // inverse walks the point anywhere
      double resid = 0.0;
      for (int k = 0; k < g.n; ++k) {
        g.put_normal(work[k], nr);
        resid = std::max(resid, std::abs(nr.dot(d) - (k == leave ? sigma : 0.0)));
      }
      if (resid > 1e-9 * std::max(1.0, dnorm)) {
        ++pivots;  // keep degenerate recovery under the budget
        ++dir_fails;
        if (dir_fails > 2) {
          if (!try_repair()) return StepResult::Singular;
          dir_fails = 0;
        } else if (!stabilize()) {
          return StepResult::Singular;
        }
        continue;
      }
      dir_fails = 0;

      Ad.noalias() = g.A * d;
      Ax.noalias() = g.A * x;

      // two-pass ratio test over constraints outside the working set, plus the
      // leaving constraint's opposite side (a bound flip that keeps the basis
      // intact). Blocking needs motion above the cancellation noise of n . d,
      // which scales with |d|; anything below that is fuzz, not geometry.
      //
      // Ties must be judged in activity space, not in t: with rates ~1e8 a
      // fixed t window admits steps that cross a blocker by orders of
      // magnitude more than its feasibility tolerance. Pass one finds the
      // largest step T that keeps every blocker within its own tolerance
      // (window tol/rate per candidate); pass two picks the largest-rate
      // candidate whose exact ratio fits under T. The exact minimum always
      // fits, so the window is never empty, and stepping to the chosen exact
      // ratio crosses candidate s by at most (T - t_s) * rate_s <= tol_s.
      const double vtol = std::max(kDirTol, 1e-12 * dnorm);
      bool suppressed = false;
      const double span = g.hi(work[leave]) - g.lo(work[leave]);
      const int flip_tol_id = work[leave];
      const double flip_tol =
          flip_tol_id < g.m
              ? row_tol(side[leave] ? g.lo(flip_tol_id) : g.hi(flip_tol_id))
              : kBoundTol;
      // the leave row's rate along d is exactly 1 by construction of d
      double t_window = std::isfinite(span) ? span + flip_tol : kInf;
      for (int id = 0; id < g.total(); ++id) {
        if (in_work[id]) continue;
        const double v = id < g.m ? Ad(id) : d(id - g.m);
        double slack, rate, tol;
        if (v > vtol && std::isfinite(g.hi(id))) {
          const double act = id < g.m ? Ax(id) : x(id - g.m);
          slack = g.hi(id) - act;
          rate = v;
          tol = id < g.m ? row_tol(g.hi(id)) : kBoundTol;
        } else if (v < -vtol && std::isfinite(g.lo(id))) {
          const double act = id < g.m ? Ax(id) : x(id - g.m);
          slack = act - g.lo(id);
          rate = -v;
          tol = id < g.m ? row_tol(g.lo(id)) : kBoundTol;
        } else {
          if (std::abs(v) > kDirTol &&
              ((v > 0.0 && std::isfinite(g.hi(id))) ||
               (v < 0.0 && std::isfinite(g.lo(id)))))
            suppressed = true;  // a real blocker may hide under the fuzz
          continue;
        }
        t_window = std::min(t_window, (slack + tol) / rate);
      }
      t_window = std::max(t_window, 0.0);
      double best_t = kInf;
      int enter = -1;  // id, or -2 for the flip
      int enter_side = 0;
      double enter_rate = 0.0;
      if (std::isfinite(span) && span <= t_window) {
        best_t = span;
        enter = -2;
      }
      for (int id = 0; id < g.total(); ++id) {
        if (in_work[id]) continue;
        const double v = id < g.m ? Ad(id) : d(id - g.m);
        double t, rate;
        int sd;
        if (v > vtol && std::isfinite(g.hi(id))) {
          const double act = id < g.m ? Ax(id) : x(id - g.m);
          t = std::max(0.0, (g.hi(id) - act) / v);
          rate = v;
          sd = 1;
        } else if (v < -vtol && std::isfinite(g.lo(id))) {
          const double act = id < g.m ? Ax(id) : x(id - g.m);
          t = std::max(0.0, (act - g.lo(id)) / (-v));
          rate = -v;
          sd = 0;
        } else {
          continue;
        }
        if (t > t_window) continue;
        const bool take = enter < 0 || (bland ? id < enter : rate > enter_rate);
        if (take) {
          best_t = t;
          enter = id;
          enter_side = sd;
          enter_rate = rate;
        }
      }

      if (enter == -1) {
        if (!suppressed) return StepResult::Unbounded;
        // an open ray cannot be certified through suppressed blockers
        ++pivots;
        ++dir_fails;
        if (dir_fails > 2) {
          if (!try_repair()) return StepResult::Singular;
          dir_fails = 0;
        } else if (!stabilize()) {
          return StepResult::Singular;
        }
        continue;
      }

      ++pivots;
      stall = best_t <= 1e-12 ? stall + 1 : 0;
      if (stall > kStallLimit) bland = true;

      x += best_t * d;

      // post-step invariant: the move may not cross anything. A transiently
      // ill-conditioned working set can produce a garbage direction whose
      // "degenerate" step still physically moves x (tiny t, huge d); once off
      // the polytope the walk never returns on its own, so reject the step,
      // snap back onto the vertex, and escalate to a repair if it keeps up.
      bool clean = true;
      for (int r = 0; r < g.m && clean; ++r) {
        const double a_new = Ax(r) + best_t * Ad(r);
        clean = a_new <= g.hi(r) + row_tol(g.hi(r)) &&
                a_new >= g.lo(r) - row_tol(g.lo(r));
      }
      for (int j = 0; j < g.n && clean; ++j)
        clean = x(j) >= g.lo(g.m + j) - kBoundTol && x(j) <= g.hi(g.m + j) + kBoundTol;
      if (!clean) {
        x -= best_t * d;  // the tracked point is the trusted one
        ++bad_steps;
        if (bad_steps > 2) {
          if (!try_repair()) return StepResult::Singular;
        } else if (!stabilize()) {
          return StepResult::Singular;
        }
        continue;
      }
      bad_steps = 0;

      if (enter == -2) {
        side[leave] ^= 1;
        continue;
      }

      // working-row replacement: rank-one update of Ninv with pivot
      // alpha = n_enter^T Ninv e_leave
      if (enter < g.m)
        vrow.noalias() = Ninv.transpose() * g.A.row(enter).transpose();
      else
        vrow = Ninv.row(enter - g.m);
      // a tiny pivot re-prices identically after the snap-back, so repeated
      // rejects must escalate to a repair or they replay until the budget goes
      const double alpha = vrow(leave);
      if (std::abs(alpha) < kPivotTol) {
        ++rejects;
        if (rejects > 2) {
          if (!try_repair()) return StepResult::Singular;
          rejects = 0;
        } else if (!stabilize()) {
          return StepResult::Singular;
        }
        continue;
      }
      rejects = 0;
      const Eigen::VectorXd colk = Ninv.col(leave) / alpha;
      for (int j = 0; j < g.n; ++j) {
        if (j == leave || vrow(j) == 0.0) continue;
        Ninv.col(j) -= vrow(j) * colk;
      }
      Ninv.col(leave) = colk;
      in_work[work[leave]] = 0;
      in_work[enter] = 1;
      work[leave] = enter;
      side[leave] = enter_side;

      if (pivots % 128 == 0 && !stabilize()) return StepResult::Singular;
    }
  }
};

// Completes an independent, active-at-x partial set to a full vertex by
// walking null-space directions until fresh constraints block. A blocker with
// nonzero rate is automatically independent of the current set, so each pass
// adds exactly one constraint.
bool push_to_vertex(const Geometry& g, Eigen::VectorXd& x, std::vector<int>& sel,
                    std::vector<int>& sel_side, bool* unbounded) {
  *unbounded = false;
  int guard = 0;
  std::vector<char> chosen(g.total(), 0);
  for (int id : sel) chosen[id] = 1;
  while (static_cast<int>(sel.size()) < g.n) {
    if (++guard > g.n + 8) return false;
    Eigen::VectorXd d;
    if (sel.empty()) {
      d = Eigen::VectorXd::Zero(g.n);
      d(0) = 1.0;
    } else {
      Eigen::MatrixXd Ns(sel.size(), g.n);
      for (size_t k = 0; k < sel.size(); ++k) g.put_normal(sel[k], Ns.row(k));
      Eigen::FullPivLU<Eigen::MatrixXd> lu(Ns);
      lu.setThreshold(1e-12);
      const Eigen::MatrixXd kern = lu.kernel();
      if (kern.cols() == 0) return false;
      d = kern.col(0);
    }
    const double dn = d.cwiseAbs().maxCoeff();
    if (dn < 1e-14) return false;
    d /= dn;
    if (g.c.dot(d) < 0) d = -d;  // prefer walking uphill

    bool added = false;
    for (int attempt = 0; attempt < 2 && !added; ++attempt) {
      const Eigen::VectorXd Ad = g.A * d;
      const Eigen::VectorXd Ax = g.A * x;
      double best_t = kInf;
      int enter = -1, enter_side = 0;
      for (int id = 0; id < g.total(); ++id) {
        if (chosen[id]) continue;
        const double v = id < g.m ? Ad(id) : d(id - g.m);
        double t;
        int sd;
        if (v > kDirTol && std::isfinite(g.hi(id))) {
          const double act = id < g.m ? Ax(id) : x(id - g.m);
          t = std::max(0.0, (g.hi(id) - act) / v);
          sd = 1;
        } else if (v < -kDirTol && std::isfinite(g.lo(id))) {
          const double act = id < g.m ? Ax(id) : x(id - g.m);
          t = std::max(0.0, (act - g.lo(id)) / (-v));
          sd = 0;
        } else {
          continue;
        }
        if (t < best_t) {
          best_t = t;
          enter = id;
          enter_side = sd;
        }
      }
      if (enter >= 0) {
        x += best_t * d;
        sel.push_back(enter);
        sel_side.push_back(enter_side);
        chosen[enter] = 1;
        added = true;
      } else if (g.c.dot(d) > kOptTol) {
        *unbounded = true;
        return false;
      } else {
        d = -d;  // flat and open this way; finite lower bounds block the other
      }
    }
    if (!added) return false;
  }
  return true;
}

struct FeasibleVertex {
  bool ok = false;
  bool infeasible = false;
  bool unbounded_ray = false;
  Eigen::VectorXd x;
  std::vector<int> work, side;
};

// Phase 1: relax every violated row side through one auxiliary variable
// t in [0, t0] and minimize t from the all-lower-bounds corner. The corner
// plus t at its upper bound is a trivially factored starting vertex.
FeasibleVertex phase1(const Geometry& g, long budget, bool bland, bool* numerical) {
  FeasibleVertex out;
  Eigen::VectorXd x0 = g.lo.tail(g.n);
  // active set describing x0; must stay consistent across restarts or the aux
  // simplex starts from a vertex that does not exist
  std::vector<int> warm(g.n), warm_side(g.n, 0);
  for (int j = 0; j < g.n; ++j) warm[j] = g.m + j;

  double rhs_scale = 1.0;
  for (int r = 0; r < g.m; ++r) {
    if (std::isfinite(g.lo(r))) rhs_scale = std::max(rhs_scale, std::abs(g.lo(r)));
    if (std::isfinite(g.hi(r))) rhs_scale = std::max(rhs_scale, std::abs(g.hi(r)));
  }

  for (int restart = 0; restart < kMaxPhase1Restarts; ++restart) {
    Eigen::VectorXd act = g.A * x0;
    double t0 = 0.0;
    Eigen::VectorXd tcol = Eigen::VectorXd::Zero(g.m);
    std::vector<int> twin_src;  // violated rows whose far side is also finite
    for (int r = 0; r < g.m; ++r) {
      if (std::isfinite(g.hi(r)) && act(r) > g.hi(r)) {
        tcol(r) = -1.0;
        t0 = std::max(t0, act(r) - g.hi(r));
        if (std::isfinite(g.lo(r))) twin_src.push_back(r);
      } else if (std::isfinite(g.lo(r)) && act(r) < g.lo(r)) {
        tcol(r) = 1.0;
        t0 = std::max(t0, g.lo(r) - act(r));
        if (std::isfinite(g.hi(r))) twin_src.push_back(r);
      }
    }
    if (t0 == 0.0) {
      out.ok = true;
      out.x = x0;
      out.work = warm;
      out.side = warm_side;
      return out;
    }
    t0 *= 1.0 + 1e-12;

    // Coupling t to a row opens that row's relaxed side. A violated EQUALITY
    // row would lose its far side entirely (both sides live on one coupled
    // form), letting the aux optimum slide off it and the restarts oscillate;
    // an uncoupled twin row pins the still-satisfied side.
    const int e = static_cast<int>(twin_src.size());
    Geometry aux;
    aux.n = g.n + 1;
    aux.m = g.m + e;
    aux.A.resize(aux.m, aux.n);
    aux.A.topRows(g.m) << g.A, tcol;
    aux.lo.resize(aux.m + aux.n);
    aux.hi.resize(aux.m + aux.n);
    for (int r = 0; r < g.m; ++r) {
      aux.lo(r) = tcol(r) < 0 ? -kInf : g.lo(r);
      aux.hi(r) = tcol(r) > 0 ? kInf : g.hi(r);
    }
    for (int k = 0; k < e; ++k) {
      const int r = twin_src[k];
      aux.A.row(g.m + k) << g.A.row(r), 0.0;
      aux.lo(g.m + k) = tcol(r) < 0 ? g.lo(r) : -kInf;
      aux.hi(g.m + k) = tcol(r) > 0 ? g.hi(r) : kInf;
    }
    aux.lo.segment(aux.m, g.n) = g.lo.tail(g.n);
    aux.hi.segment(aux.m, g.n) = g.hi.tail(g.n);
    const int t_bound = aux.m + g.n;
    aux.lo(t_bound) = 0.0;
    aux.hi(t_bound) = t0;
    aux.c = Eigen::VectorXd::Zero(aux.n);
    aux.c(g.n) = -1.0;

    Simplex sx(aux);
    // start from the vertex (x0, t0): the warm ids active at x0, minus rows the
    // relaxation couples to t (their aux normals would drag x off the true face),
    // bound ids shifted past the twin rows, completed inside the aux geometry
    // when that leaves a deficit
    std::vector<int> ids, sides;
    ids.reserve(aux.n);
    sides.reserve(aux.n);
    for (size_t k = 0; k < warm.size(); ++k) {
      const int id = warm[k];
      if (id < g.m && tcol(id) != 0.0) continue;
      ids.push_back(id < g.m ? id : id + e);
      sides.push_back(warm_side[k]);
    }
    ids.push_back(t_bound);
    sides.push_back(1);  // t starts at t0
    Eigen::VectorXd xt(aux.n);
    xt << x0, t0;
    if (static_cast<int>(ids.size()) < aux.n) {
      bool unb = false;
      if (!push_to_vertex(aux, xt, ids, sides, &unb)) {
        *numerical = true;
        return out;
      }
    }
    sx.set_working(std::move(ids), std::move(sides));
    sx.budget = budget;
    sx.bland = bland;
    sx.x = xt;
    if (!sx.stabilize()) {  // re-syncs sx.x with the working vertex when sane
      *numerical = true;
      return out;
    }

    const StepResult res = sx.run();
    if (res != StepResult::Optimal) {
      *numerical = true;
      return out;
    }
    const double t_final = sx.x(g.n);
    if (t_final > 1e-8 * rhs_scale) {
      out.infeasible = true;
      return out;
    }

    // Rebuild an x-space vertex: map each aux working id back to its x-space
    // constraint, first occurrence wins. Rows coupled to t are tight on their
    // own only when t itself sits at a bound; twin rows map to their source
    // row's enforced side; bound ids shift back down. An independent subset is
    // rank-selected and completed by walking when mapping lost ids.
    Eigen::VectorXd x = sx.x.head(g.n);
    bool t_at_bound = false;
    for (int k = 0; k < aux.n; ++k) t_at_bound |= sx.work[k] == t_bound;

    std::vector<int> cand, cside;
    std::vector<char> seen(g.total(), 0);
    for (int k = 0; k < aux.n; ++k) {
      const int id = sx.work[k];
      if (id == t_bound) continue;
      int xid, xsd;
      if (id < g.m) {
        if (tcol(id) != 0.0 && !t_at_bound) continue;
        xid = id;
        xsd = sx.side[k];
      } else if (id < aux.m) {
        xid = twin_src[id - g.m];
        xsd = tcol(xid) < 0 ? 0 : 1;
      } else {
        xid = g.m + (id - aux.m);
        xsd = sx.side[k];
      }
      if (seen[xid]) continue;
      seen[xid] = 1;
      cand.push_back(xid);
      cside.push_back(xsd);
    }

    std::vector<int> sel, sel_side;
    Eigen::MatrixXd C(g.n, cand.size());
    for (size_t k = 0; k < cand.size(); ++k) {
      Eigen::RowVectorXd row(g.n);
      g.put_normal(cand[k], row);
      C.col(k) = row.transpose();
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(C);
    qr.setThreshold(1e-12);
    const int rank = cand.empty() ? 0 : static_cast<int>(qr.rank());
    const auto& perm = qr.colsPermutation().indices();
    for (int k = 0; k < rank; ++k) {
      sel.push_back(cand[perm(k)]);
      sel_side.push_back(cside[perm(k)]);
    }
    if (static_cast<int>(sel.size()) < g.n) {
      bool unb = false;
      if (!push_to_vertex(g, x, sel, sel_side, &unb)) {
        if (unb) {
          out.unbounded_ray = true;
        } else {
          *numerical = true;
        }
        return out;
      }
    }

    // sides relaxed away during this round may be violated at the new vertex
    const Eigen::VectorXd act2 = g.A * x;
    bool clean = true;
    for (int r = 0; r < g.m && clean; ++r)
      if (act2(r) > g.hi(r) + row_tol(g.hi(r)) || act2(r) < g.lo(r) - row_tol(g.lo(r)))
        clean = false;
    if (!clean) {
      x0 = x;
      warm = sel;
      warm_side = sel_side;
      continue;
    }
    out.ok = true;
    out.x = x;
    out.work = std::move(sel);
    out.side = std::move(sel_side);
    return out;
  }
  *numerical = true;
  return out;
}

}  // namespace

LinearProgram LinearProgram::with_vars(int n) {
  LinearProgram lp;
  lp.num_vars = n;
  lp.objective = Eigen::VectorXd::Zero(n);
  lp.var_lb = Eigen::VectorXd::Zero(n);
  lp.var_ub = Eigen::VectorXd::Constant(n, kInf);
  return lp;
}

void LinearProgram::add_row(const Eigen::VectorXd& a, Relation rel, double rhs) {
  rows.push_back(LpRow{a, rel, rhs});
}

LpSolution solve_lp(const LinearProgram& lp) {
  LpSolution sol;
  const int n = lp.num_vars;
  if (n <= 0) throw std::invalid_argument("solve_lp: num_vars must be positive");
  if (lp.objective.size() != n || lp.var_lb.size() != n || lp.var_ub.size() != n)
    throw std::invalid_argument("solve_lp: vector sizes disagree with num_vars");
  if (!lp.var_lb.allFinite())
    throw std::invalid_argument("solve_lp: variable lower bounds must be finite");
  for (int j = 0; j < n; ++j)
    if (lp.var_lb(j) > lp.var_ub(j))
      throw std::invalid_argument("solve_lp: var_lb exceeds var_ub");
  for (const auto& row : lp.rows) {
    if (row.a.size() != n) throw std::invalid_argument("solve_lp: row length mismatch");
    if (!row.a.allFinite() || !std::isfinite(row.rhs))
      throw std::invalid_argument("solve_lp: row coefficients must be finite");
  }

  Geometry g;
  g.n = n;
  g.m = static_cast<int>(lp.rows.size());
  g.A.resize(g.m, n);
  g.lo.resize(g.m + n);
  g.hi.resize(g.m + n);
  for (int r = 0; r < g.m; ++r) {
    g.A.row(r) = lp.rows[r].a.transpose();
    switch (lp.rows[r].rel) {
      case Relation::LessEq:
        g.lo(r) = -kInf;
        g.hi(r) = lp.rows[r].rhs;
        break;
      case Relation::GreaterEq:
        g.lo(r) = lp.rows[r].rhs;
        g.hi(r) = kInf;
        break;
      case Relation::Equal:
        g.lo(r) = g.hi(r) = lp.rows[r].rhs;
        break;
    }
  }
  g.lo.tail(n) = lp.var_lb;
  g.hi.tail(n) = lp.var_ub;
  g.c = lp.objective;

  const long base_budget = 2000 + 200L * n + 20L * g.m;

  // round 0 is the fast path; a second round restarts everything under
  // Bland's rule with a doubled budget when degeneracy defeated the first
  sol.status = LpStatus::NumericalFailure;
  for (int round = 0; round < 2; ++round) {
    const long budget = base_budget << round;
    const bool bland = round > 0;

    bool numerical = false;
    FeasibleVertex v = phase1(g, budget, bland, &numerical);
    if (v.infeasible) {
      sol.status = LpStatus::Infeasible;
      return sol;
    }
    if (v.unbounded_ray) {
      sol.status = LpStatus::Unbounded;
      return sol;
    }
    if (numerical || !v.ok) continue;

    Simplex sx(g);
    sx.set_working(std::move(v.work), std::move(v.side));
    sx.budget = budget;
    sx.bland = bland;
    sx.x = v.x;
    if (!sx.stabilize()) {
      // fall back to a from-scratch crash seeded by the tight variable bounds
      std::vector<int> sel, sel_side;
      for (int j = 0; j < n; ++j) {
        if (v.x(j) <= g.lo(g.m + j) + kBoundTol) {
          sel.push_back(g.m + j);
          sel_side.push_back(0);
        } else if (std::isfinite(g.hi(g.m + j)) && v.x(j) >= g.hi(g.m + j) - kBoundTol) {
          sel.push_back(g.m + j);
          sel_side.push_back(1);
        }
      }
      bool unb = false;
      Eigen::VectorXd x = v.x;
      if (!push_to_vertex(g, x, sel, sel_side, &unb)) {
        if (unb) {
          sol.status = LpStatus::Unbounded;
          return sol;
        }
        continue;
      }
      sx.set_working(std::move(sel), std::move(sel_side));
      sx.x = x;
      if (!sx.stabilize()) continue;
    }

    const StepResult res = sx.run();
    sol.pivots += sx.pivots;
    if (res == StepResult::Unbounded) {
      sol.status = LpStatus::Unbounded;
      return sol;
    }
    if (res != StepResult::Optimal) continue;

    // certify the result against the stated tolerances
    bool certified = true;
    const Eigen::VectorXd act = g.A * sx.x;
    for (int r = 0; r < g.m && certified; ++r) {
      const double tol = row_tol(lp.rows[r].rhs);
      certified = act(r) <= g.hi(r) + tol && act(r) >= g.lo(r) - tol;
    }
    for (int j = 0; j < n && certified; ++j)
      certified =
          sx.x(j) >= g.lo(g.m + j) - kBoundTol && sx.x(j) <= g.hi(g.m + j) + kBoundTol;
    if (!certified) continue;

    sol.status = LpStatus::Optimal;
    sol.x = sx.x;
    for (int j = 0; j < n; ++j)
      sol.x(j) = std::min(std::max(sol.x(j), g.lo(g.m + j)), g.hi(g.m + j));
    sol.objective_value = g.c.dot(sol.x);
    return sol;
  }
  return sol;
}

}  // namespace pricer
