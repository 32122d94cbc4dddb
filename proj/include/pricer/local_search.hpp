#pragma once

#include <cstdint>
#include <optional>

#include "pricer/model.hpp"
#include "pricer/rng.hpp"

namespace pricer {

struct LocalSearchConfig {
  double theta = 1e-8;          // stationarity tolerance on the probe-value gap
  double initial_radius = 1.0;  // l1 trust-region radius after each accepted step
  double radius_shrink = 0.1;
  double min_radius = 1e-9;  // floor guarding against floating-point stagnation
  std::uint64_t seed = 0;    // drives the random start when no p0 is given
};

struct LocalSearchResult {
  PriceVector prices;
  double value = 0.0;
  int accepted_steps = 0;
  int lp_solves = 0;
  // true: the probe-gap test |f1 - f_best| <= theta fired; false: radius floor
  bool converged = false;
};

// Maximizes the local linear model g_k' p over the l1 ball ||p - p_k||_1 <= r
// intersected with the box (node box when given) and A p >= b. Encoded as an LP
// with split variables s_i >= |p_i - p_k,i|, sum s_i <= r.
// Throws std::runtime_error if the LP solve breaks down numerically.
PriceVector trust_region_step(const MixedLogitInstance& inst, const PriceVector& p_k,
                              double radius, const NodeBox* box = nullptr);

// Uniform draw over the box, rejected against A p >= b (up to 1000 tries), then
// an LP fallback with a random objective. Throws if the region is infeasible.
PriceVector random_feasible_point(const MixedLogitInstance& inst, Rng& rng,
                                  const NodeBox* box = nullptr);

// Trust-region ascent: accept improving probes (resetting the radius), shrink the
// radius tenfold on failure, stop once the probe gap falls within theta or the
// radius floor is reached. Always returns the best point seen.
LocalSearchResult local_search(const MixedLogitInstance& inst, const LocalSearchConfig& cfg,
                               const std::optional<PriceVector>& p0 = std::nullopt,
                               const NodeBox* box = nullptr);

}  // namespace pricer
