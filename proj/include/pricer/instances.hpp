#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "pricer/model.hpp"

namespace pricer {

// Three processor products plus a zero-utility no-purchase alternative; one
// customer segment, seven taste classes. Class weights are kept exactly as
// published (they sum to 0.9998), which the loader accepts with a warning.
MixedLogitInstance intel_instance();

struct RandomInstanceParams {
  int num_priced = 3;
  int num_classes = 7;
  int num_customers = 1;
  double q_low = -5.0, q_high = 5.0;
  double beta_low = -5.0, beta_high = -0.025;
  double price_upper = 100.0;
  // default: uniform 1/L; override to reuse published weights
  std::optional<Eigen::VectorXd> class_weights;
};

// Seeded synthetic family: q ~ U[q_low, q_high], beta ~ U[beta_low, beta_high],
// plus a zero-utility no-purchase alternative. Deterministic per seed.
MixedLogitInstance random_instance(std::uint64_t seed,
                                   const RandomInstanceParams& params = {});

struct ParkingParams {
  double asc_psp = 32.0;
  double asc_pup = 34.0;
  double beta_td = -0.612;
  double beta_origin = -5.762;
  double beta_age_veh = 4.037;
  double fee_psp_low_inc = -10.995;
  double fee_psp_resident = -11.44;
  double fee_pup_low_inc = -13.729;
  double fee_pup_resident = -10.668;

  // random taste coefficients (beta_AT, beta_FEE): bivariate normal
  Eigen::Vector2d taste_mean{-0.788, -32.3};
  Eigen::Matrix2d taste_cov{{1.1236, -12.8}, {-12.8, 201.64}};

  // 0.99 confidence rectangle of the taste distribution; the grid lives here
  Eigen::Vector2d taste_box_lo{-3.6, -68.52};
  Eigen::Vector2d taste_box_hi{1.94, 3.92};

  double price_upper = 2.0;
};

struct GridPoint {
  double beta_at = 0.0;
  double beta_fee = 0.0;
  double weight = 0.0;
};

// n x n cell centers over the confidence rectangle, weighted by normal density
// times cell area and renormalized to sum 1. n = 1 degenerates to the mean with
// weight 1 (the plain-MNL case).
std::vector<GridPoint> gaussian_grid(const ParkingParams& params, int n);

// Synthetic customer; alternative order is FSP, PSP, PUP.
struct CustomerProfile {
  Eigen::Vector3d access_time;  // minutes, per alternative
  Eigen::Vector3d dest_time;    // minutes, per alternative
  int origin = 0;
  int low_inc = 0;
  int resident = 0;
  int age_veh_le3 = 0;
};

struct ParkingScenario {
  MixedLogitInstance instance;
  ParkingParams params;
  std::vector<CustomerProfile> profiles;
};

// Free street parking (unpriced) vs. paid street / underground parking, with
// taste heterogeneity discretized on the Gaussian grid. Customer attributes are
// synthetic: access and destination times U[1, 15] minutes, dummies
// Bernoulli(1/2), all seeded.
ParkingScenario parking_scenario(std::uint64_t seed, int num_customers, int n_grid);
MixedLogitInstance parking_instance(std::uint64_t seed, int num_customers, int n_grid);

struct MonteCarloEstimate {
  double value = 0.0;
  double std_error = 0.0;
};

// Monte-Carlo revenue under the continuous taste distribution (Cholesky sampling
// of the bivariate normal), for comparing against the grid-discretized model.
MonteCarloEstimate continuous_ml_revenue(const ParkingParams& params,
                                         const std::vector<CustomerProfile>& profiles,
                                         const Eigen::VectorXd& prices, long samples,
                                         std::uint64_t seed);

}  // namespace pricer
