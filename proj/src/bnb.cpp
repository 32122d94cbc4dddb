#include "pricer/bnb.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <condition_variable>
#include <cstdint>
#include <mutex>
#include <numeric>
#include <queue>
#include <set>
#include <stdexcept>
#include <thread>
#include <vector>

#include "pricer/lp.hpp"
#include "pricer/rng.hpp"

namespace pricer {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct NodeOrder {
  // max-heap on upper bound; ties go to the older (smaller id) node
  bool operator()(const Node& a, const Node& b) const {
    if (a.upper_bound != b.upper_bound) return a.upper_bound < b.upper_bound;
    return a.id > b.id;
  }
};

struct Candidate {
  Eigen::VectorXd p;
  double value = -kInf;
};

struct Outcome {
  Node node;  // pool already updated
  double node_ub = kInf;
  bool requeue = false;
  bool fathom_infeasible = false;
  std::vector<Candidate> candidates;
};

double fathom_threshold(double incumbent, double gap_tol) {
  if (!std::isfinite(incumbent)) return -kInf;
  return incumbent * (1.0 + 1e-9) + gap_tol * std::max(1.0, std::abs(incumbent));
}

// true when the box intersected with {A p >= b} is provably empty
bool region_certifiably_empty(const MixedLogitInstance& inst, const NodeBox& box) {
  if (!inst.linear_constraints) return false;
  const int d = box.dims();
  LinearProgram lp = LinearProgram::with_vars(d);
  lp.var_lb = box.lb;
  lp.var_ub = box.ub;
  const auto& lc = *inst.linear_constraints;
  for (int r = 0; r < lc.A.rows(); ++r)
    lp.add_row(lc.A.row(r).transpose(), Relation::GreaterEq, lc.b(r));
  return solve_lp(lp).status == LpStatus::Infeasible;
}

void perturb_pool(const MixedLogitInstance& inst, Node& node, std::uint64_t seed) {
  Rng rng(mix_seed(seed, static_cast<std::uint64_t>(node.id), 0xFEEDull));
  const Eigen::VectorXd width = node.box.ub - node.box.lb;
  for (auto& p : node.pool.points) {
    Eigen::VectorXd q = p;
    for (int j = 0; j < q.size(); ++j)
      q(j) += (2.0 * rng.uniform() - 1.0) * 1e-6 * std::max(width(j), 1e-6);
    q = q.cwiseMax(node.box.lb).cwiseMin(node.box.ub);
    if (satisfies_constraints(inst, q)) p = q;
  }
}

class Solver {
 public:
  Solver(const MixedLogitInstance& inst, const SolverConfig& cfg)
      : inst_(inst), cfg_(cfg), t0_(std::chrono::steady_clock::now()) {}

  SolveReport run() {
    Node root;
    root.box = instance_box(inst_);
    root.pool.capacity = cfg_.pool_capacity;
    root.id = next_id_++;
    push_node(std::move(root));

    if (cfg_.threads <= 1) {
      single_thread_loop();
    } else {
      parallel_loop();
    }

    tighten_bound();
    SolveReport rep;
    rep.incumbent = incumbent_;
    rep.incumbent_value = incumbent_value_;
    rep.global_upper_bound = bound_;
    rep.gap = current_gap();
    rep.status = status_;
    rep.trace = std::move(trace_);
    rep.nodes_explored_per_iteration = std::move(per_depth_);
    rep.solutions = std::move(solutions_);
    rep.nodes_processed = nodes_processed_;
    return rep;
  }

 private:
  double elapsed() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_).count();
  }

  // Reported bound is the running minimum of every valid bound seen, which
  // keeps the trace column nonincreasing even when LP tolerances wiggle.
  void tighten_bound() {
    double raw = incumbent_value_;
    if (!open_ubs_.empty()) raw = std::max(raw, *open_ubs_.rbegin());
    if (!inflight_ubs_.empty()) raw = std::max(raw, *inflight_ubs_.rbegin());
    if (raw < bound_) bound_ = raw;
  }

  double current_gap() const {
    if (!std::isfinite(incumbent_value_) || !std::isfinite(bound_)) return kInf;
    const double g = (bound_ - incumbent_value_) / std::max(1.0, std::abs(incumbent_value_));
    return std::max(0.0, g);
  }

  void push_node(Node n) {
    open_ubs_.insert(n.upper_bound);
    open_radii_.insert(n.box.half_diagonal());
    open_.push(std::move(n));
  }

  Node pop_node() {
    Node n = open_.top();
    open_.pop();
    open_ubs_.erase(open_ubs_.find(n.upper_bound));
    open_radii_.erase(open_radii_.find(n.box.half_diagonal()));
    return n;
  }

  double max_radius() const {
    double r = 0.0;
    if (!open_radii_.empty()) r = std::max(r, *open_radii_.rbegin());
    if (!inflight_radii_.empty()) r = std::max(r, *inflight_radii_.rbegin());
    return r;
  }

  void record_trace() {
    tighten_bound();
    TracePoint tp;
    tp.wall_time = cfg_.record_wall_times ? elapsed() : 0.0;
    tp.incumbent_value = incumbent_value_;
    tp.global_upper_bound = bound_;
    tp.open_nodes = static_cast<long>(open_.size() + inflight_ubs_.size());
    tp.max_box_radius = max_radius();
    trace_.push_back(tp);
  }

  void count_depth(int depth) {
    if (static_cast<int>(per_depth_.size()) <= depth) per_depth_.resize(depth + 1, 0);
    ++per_depth_[depth];
  }

  void offer_candidate(const Eigen::VectorXd& p, double value) {
    if (!std::isfinite(value) || p.size() == 0) return;
    if (value > incumbent_value_) {
      incumbent_value_ = value;
      incumbent_.values = p;
      incumbent_.feasible = true;
    }
    PriceVector pv;
    pv.values = p;
    pv.feasible = true;
    solutions_.push_back(std::move(pv));
    solution_values_.push_back(value);

    // keep near-ties of the best, deduplicated, best first, capped
    std::vector<size_t> order(solutions_.size());
    std::iota(order.begin(), order.end(), size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
      return solution_values_[a] > solution_values_[b];
    });
    const double keep =
        incumbent_value_ - cfg_.gap_tol * std::max(1.0, std::abs(incumbent_value_));
    std::vector<PriceVector> kept;
    std::vector<double> kept_vals;
    for (size_t k : order) {
      if (solution_values_[k] < keep) break;
      bool dup = false;
      for (const auto& other : kept)
        if ((other.values - solutions_[k].values).cwiseAbs().maxCoeff() <= 1e-9) {
          dup = true;
          break;
        }
      if (!dup) {
        kept.push_back(std::move(solutions_[k]));
        kept_vals.push_back(solution_values_[k]);
      }
      if (kept.size() >= 32) break;
    }
    solutions_ = std::move(kept);
    solution_values_ = std::move(kept_vals);
  }

  Outcome process(Node node) {
    Outcome out;

    // lower bounds: trust-region ascents from seeded starts inside the box
    bool start_failed = false;
    for (int s = 0; s < std::max(1, cfg_.local_starts); ++s) {
      LocalSearchConfig lcfg = cfg_.local;
      lcfg.seed = mix_seed(cfg_.seed, static_cast<std::uint64_t>(node.id),
                           static_cast<std::uint64_t>(s));
      try {
        LocalSearchResult r = local_search(inst_, lcfg, std::nullopt, &node.box);
        out.candidates.push_back({r.prices.values, r.value});
      } catch (const std::runtime_error&) {
        start_failed = true;
        break;
      }
    }
    if (start_failed && region_certifiably_empty(inst_, node.box)) {
      out.fathom_infeasible = true;
      out.node = std::move(node);
      return out;
    }

    // grow the anchor pool: best point found here, then the box center
    if (!out.candidates.empty()) {
      const auto best = std::max_element(
          out.candidates.begin(), out.candidates.end(),
          [](const Candidate& a, const Candidate& b) { return a.value < b.value; });
      node.pool.add(best->p);
    }
    const Eigen::VectorXd center = node.box.center();
    if (satisfies_constraints(inst_, center)) node.pool.add(center);

    NodeBoundResult nb = node_upper_bound(inst_, node.box, node.pool);
    if (nb.numerical_failure || nb.infeasible) {
      if (!node.retried) {
        perturb_pool(inst_, node, cfg_.seed);
        node.retried = true;
        out.requeue = true;
        out.node = std::move(node);
        return out;
      }
      if (nb.infeasible && region_certifiably_empty(inst_, node.box)) {
        out.fathom_infeasible = true;
        out.node = std::move(node);
        return out;
      }
      out.node_ub = node.upper_bound;  // conservative: keep the inherited bound
      out.node = std::move(node);
      return out;
    }

    out.node_ub = std::min(node.upper_bound, nb.upper_bound);
    if (nb.p_candidate.feasible) {
      const double val = expected_revenue(inst_, nb.p_candidate.values);
      out.candidates.push_back({nb.p_candidate.values, val});
      // polish the relaxation's price point
      LocalSearchConfig lcfg = cfg_.local;
      lcfg.seed = mix_seed(cfg_.seed, static_cast<std::uint64_t>(node.id), 0x705Cull);
      try {
        LocalSearchResult r = local_search(inst_, lcfg, nb.p_candidate, &node.box);
        out.candidates.push_back({r.prices.values, r.value});
      } catch (const std::runtime_error&) {
      }
    }
    out.node = std::move(node);
    return out;
  }

  // Folds a processed node back into the search state; true means stop.
  bool commit(Outcome out) {
    ++nodes_processed_;
    count_depth(out.node.depth);

    for (const auto& c : out.candidates) offer_candidate(c.p, c.value);

    if (out.requeue) {
      push_node(std::move(out.node));
    } else if (!out.fathom_infeasible &&
               out.node_ub > fathom_threshold(incumbent_value_, cfg_.gap_tol)) {
      Node parent = std::move(out.node);
      parent.upper_bound = out.node_ub;
      auto [left, right] = branch(parent);
      left.id = next_id_++;
      right.id = next_id_++;
      push_node(std::move(left));
      push_node(std::move(right));
    }

    record_trace();
    return limits_hit();
  }

  // Termination tests shared by both loops; true means stop.
  bool limits_hit() {
    tighten_bound();
    if (current_gap() <= cfg_.gap_tol) {
      status_ = SolveStatus::OptimalWithinTol;
      return true;
    }
    if (elapsed() > cfg_.time_limit) {
      status_ = SolveStatus::TimeLimit;
      return true;
    }
    if (nodes_processed_ >= cfg_.node_limit) {
      status_ = SolveStatus::NodeLimit;
      return true;
    }
    return false;
  }

  // Pruned at pop: the node cannot beat the incumbent by more than the
  // tolerance, so it is counted, traced, and dropped.
  bool prune_pop(const Node& node) {
    if (node.upper_bound > fathom_threshold(incumbent_value_, cfg_.gap_tol)) return false;
    ++nodes_processed_;
    count_depth(node.depth);
    record_trace();
    return true;
  }

  void single_thread_loop() {
    while (!open_.empty()) {
      if (elapsed() > cfg_.time_limit) {
        status_ = SolveStatus::TimeLimit;
        return;
      }
      Node node = pop_node();
      if (prune_pop(node)) {
        if (nodes_processed_ >= cfg_.node_limit && !open_.empty()) {
          status_ = SolveStatus::NodeLimit;
          return;
        }
        continue;
      }
      if (commit(process(std::move(node)))) return;
    }
    status_ = SolveStatus::OptimalWithinTol;
  }

  void parallel_loop() {
    std::mutex mu;
    std::condition_variable cv;
    int active = 0;
    bool stop = false;

    auto worker = [&]() {
      std::unique_lock<std::mutex> lk(mu);
      while (true) {
        cv.wait(lk, [&] { return stop || !open_.empty() || active == 0; });
        if (stop) return;
        if (open_.empty()) {
          if (active == 0) return;  // tree exhausted
          continue;                 // spurious wake; re-wait
        }
        if (elapsed() > cfg_.time_limit) {
          status_ = SolveStatus::TimeLimit;
          stop = true;
          cv.notify_all();
          return;
        }
        Node node = pop_node();
        if (prune_pop(node)) {
          if (nodes_processed_ >= cfg_.node_limit && !open_.empty()) {
            status_ = SolveStatus::NodeLimit;
            stop = true;
            cv.notify_all();
            return;
          }
          continue;
        }
        ++active;
        const double inherited_ub = node.upper_bound;
        const double inherited_radius = node.box.half_diagonal();
        inflight_ubs_.insert(inherited_ub);
        inflight_radii_.insert(inherited_radius);
        lk.unlock();
        Outcome out = process(std::move(node));
        lk.lock();
        inflight_ubs_.erase(inflight_ubs_.find(inherited_ub));
        inflight_radii_.erase(inflight_radii_.find(inherited_radius));
        --active;
        const bool done = commit(std::move(out));
        if (done) {
          stop = true;
          cv.notify_all();
          return;
        }
        cv.notify_all();
      }
    };

    std::vector<std::thread> pool;
    pool.reserve(static_cast<size_t>(cfg_.threads));
    for (int t = 0; t < cfg_.threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
    if (!stop && open_.empty()) status_ = SolveStatus::OptimalWithinTol;
  }

  const MixedLogitInstance& inst_;
  const SolverConfig& cfg_;
  std::chrono::steady_clock::time_point t0_;

  std::priority_queue<Node, std::vector<Node>, NodeOrder> open_;
  std::multiset<double> open_ubs_;
  std::multiset<double> open_radii_;
  std::multiset<double> inflight_ubs_;
  std::multiset<double> inflight_radii_;

  PriceVector incumbent_;
  double incumbent_value_ = -kInf;
  double bound_ = kInf;
  std::vector<PriceVector> solutions_;
  std::vector<double> solution_values_;

  std::vector<TracePoint> trace_;
  std::vector<long> per_depth_;
  long nodes_processed_ = 0;
  long next_id_ = 0;
  SolveStatus status_ = SolveStatus::OptimalWithinTol;
};

}  // namespace

int select_branch_dim(const NodeBox& box) {
  int best = -1;
  double w = 0.0;
  for (int j = 0; j < box.dims(); ++j) {
    const double width = box.ub(j) - box.lb(j);
    if (width > w) {
      w = width;
      best = j;
    }
  }
  if (best < 0)
    throw std::invalid_argument("select_branch_dim: box is degenerate in every dimension");
  return best;
}

std::pair<Node, Node> branch(const Node& node) {
  const int dim = select_branch_dim(node.box);
  const double mid = 0.5 * (node.box.lb(dim) + node.box.ub(dim));
  Node left = node, right = node;
  left.retried = right.retried = false;
  left.depth = right.depth = node.depth + 1;
  left.box.ub(dim) = mid;
  right.box.lb(dim) = mid;
  return {std::move(left), std::move(right)};
}

SolveReport solve(const MixedLogitInstance& inst, const SolverConfig& cfg) {
  if (!(cfg.gap_tol > 0)) throw std::invalid_argument("solve: gap_tol must be positive");
  if (cfg.node_limit <= 0) throw std::invalid_argument("solve: node_limit must be positive");
  if (cfg.threads < 1) throw std::invalid_argument("solve: threads must be at least 1");
  if (inst.num_priced() == 0)
    throw std::invalid_argument("solve: instance has no priced alternatives");
  if (region_certifiably_empty(inst, instance_box(inst)))
    throw std::invalid_argument("solve: feasible region is empty");
  Solver s(inst, cfg);
  return s.run();
}

}  // namespace pricer
