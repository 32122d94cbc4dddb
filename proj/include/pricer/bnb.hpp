#pragma once

#include <cstdint>
#include <limits>
#include <vector>

#include "pricer/local_search.hpp"
#include "pricer/model.hpp"
#include "pricer/relaxation.hpp"

namespace pricer {

struct SolverConfig {
  double gap_tol = 1e-5;  // relative, with a max(1, |incumbent|) floor
  double time_limit = std::numeric_limits<double>::infinity();  // seconds
  long node_limit = std::numeric_limits<long>::max();
  std::uint64_t seed = 0;
  int local_starts = 1;  // local-search restarts per node
  int threads = 1;       // determinism is guaranteed single-threaded only
  int pool_capacity = 20;
  LocalSearchConfig local;
  bool record_wall_times = true;  // false: trace wall_time column written as 0
};

struct Node {
  NodeBox box;
  PointPool pool;
  double upper_bound = std::numeric_limits<double>::infinity();
  int depth = 0;
  long id = 0;
  bool retried = false;  // one relaxation retry after a numerical failure
};

enum class SolveStatus { OptimalWithinTol, TimeLimit, NodeLimit };

struct TracePoint {
  double wall_time = 0.0;
  double incumbent_value = 0.0;
  double global_upper_bound = 0.0;
  long open_nodes = 0;
  double max_box_radius = 0.0;  // max half-diagonal over open boxes
};

struct SolveReport {
  PriceVector incumbent;
  double incumbent_value = 0.0;
  double global_upper_bound = 0.0;
  double gap = 0.0;
  SolveStatus status = SolveStatus::OptimalWithinTol;
  std::vector<TracePoint> trace;
  std::vector<long> nodes_explored_per_iteration;  // indexed by tree depth
  std::vector<PriceVector> solutions;  // incumbents within tolerance of the best
  long nodes_processed = 0;
};

// Smallest index attaining the maximal box width. Throws on a degenerate box.
int select_branch_dim(const NodeBox& box);

// Midpoint split on select_branch_dim; children inherit pool and bound.
std::pair<Node, Node> branch(const Node& node);

// Best-first spatial branch-and-bound: local search inside each node box for
// incumbents, the LP relaxation for node upper bounds, midpoint branching, and
// fathoming against the incumbent plus gap tolerance.
SolveReport solve(const MixedLogitInstance& inst, const SolverConfig& cfg = {});

}  // namespace pricer
