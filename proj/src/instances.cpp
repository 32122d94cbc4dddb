#include "pricer/instances.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "pricer/rng.hpp"

namespace pricer {

namespace {

constexpr double kPi = 3.141592653589793238462643383279502884;

// Published fourth-generation SKU coefficients: seven customer segments,
// columns are segments, rows are products.
constexpr double kIntelWeights[7] = {0.0753, 0.1126, 0.1285, 0.1180,
                                     0.0859, 0.2842, 0.1953};
constexpr double kIntelExo[3][7] = {
    {-1.0334, 3.2480, -0.9336, 1.7094, 0.4187, -0.8904, -0.9804},
    {0.7840, 4.7161, -0.3438, 1.8777, 2.1771, -0.4310, -0.4907},
    {6.0054, 3.8771, 1.3506, 2.3611, 1.1723, 0.8889, 0.9163}};
constexpr double kIntelPriceCoef[3][7] = {
    {-0.00416, -0.01840, -0.00525, -0.01165, -0.01015, -0.00325, -0.00331},
    {-0.00312, -0.01354, -0.00394, -0.00874, -0.00639, -0.00244, -0.00248},
    {-0.00181, -0.00744, -0.00229, -0.00508, -0.00167, -0.00142, -0.00144}};

double bivariate_normal_pdf(const Eigen::Vector2d& x, const Eigen::Vector2d& mean,
                            const Eigen::Matrix2d& cov) {
  const double det = cov(0, 0) * cov(1, 1) - cov(0, 1) * cov(1, 0);
  if (!(det > 0))
    throw std::invalid_argument("gaussian_grid: covariance must be positive definite");
  const Eigen::Vector2d d = x - mean;
  const double quad = (d(0) * d(0) * cov(1, 1) - 2.0 * d(0) * d(1) * cov(0, 1) +
                       d(1) * d(1) * cov(0, 0)) /
                      det;
  return std::exp(-0.5 * quad) / (2.0 * kPi * std::sqrt(det));
}

// Lower-triangular Cholesky factor of a 2x2 PSD matrix; tolerates the
// degenerate (zero) case used to pin the estimator against the MNL evaluation.
Eigen::Matrix2d chol2(const Eigen::Matrix2d& cov) {
  Eigen::Matrix2d l = Eigen::Matrix2d::Zero();
  l(0, 0) = std::sqrt(std::max(cov(0, 0), 0.0));
  l(1, 0) = l(0, 0) > 0 ? cov(1, 0) / l(0, 0) : 0.0;
  l(1, 1) = std::sqrt(std::max(cov(1, 1) - l(1, 0) * l(1, 0), 0.0));
  return l;
}

double psp_price_coef(const ParkingParams& pp, const CustomerProfile& c, double beta_fee) {
  return beta_fee + pp.fee_psp_low_inc * c.low_inc + pp.fee_psp_resident * c.resident;
}

double pup_price_coef(const ParkingParams& pp, const CustomerProfile& c, double beta_fee) {
  return beta_fee + pp.fee_pup_low_inc * c.low_inc + pp.fee_pup_resident * c.resident;
}

double fsp_exo(const ParkingParams& pp, const CustomerProfile& c, double beta_at) {
  return beta_at * c.access_time(0) + pp.beta_td * c.dest_time(0) +
         pp.beta_origin * c.origin;
}

double psp_exo(const ParkingParams& pp, const CustomerProfile& c, double beta_at) {
  return pp.asc_psp + beta_at * c.access_time(1) + pp.beta_td * c.dest_time(1);
}

double pup_exo(const ParkingParams& pp, const CustomerProfile& c, double beta_at) {
  return pp.asc_pup + beta_at * c.access_time(2) + pp.beta_td * c.dest_time(2) +
         pp.beta_age_veh * c.age_veh_le3;
}

}  // namespace

MixedLogitInstance intel_instance() {
  MixedLogitInstance inst;
  inst.name = "intel";
  inst.alternatives = {{"sku1", true}, {"sku2", true}, {"sku3", true},
                       {"no_purchase", false}};
  inst.customers = 1;
  inst.classes = 7;
  inst.price_coef.assign(4, Eigen::MatrixXd::Zero(1, 7));
  inst.exo_utility.assign(4, Eigen::MatrixXd::Zero(1, 7));
  for (int i = 0; i < 3; ++i)
    for (int k = 0; k < 7; ++k) {
      inst.price_coef[i](0, k) = kIntelPriceCoef[i][k];
      inst.exo_utility[i](0, k) = kIntelExo[i][k];
    }
  inst.class_weight.resize(7, 1);
  for (int k = 0; k < 7; ++k) inst.class_weight(k, 0) = kIntelWeights[k];
  inst.price_lb = Eigen::VectorXd::Zero(3);
  inst.price_ub = Eigen::VectorXd::Constant(3, 5000.0);
  validate(inst);
  return inst;
}

MixedLogitInstance random_instance(std::uint64_t seed, const RandomInstanceParams& params) {
  if (params.num_priced < 1)
    throw std::invalid_argument("random_instance: num_priced must be at least 1");
  if (params.num_classes < 1 || params.num_customers < 1)
    throw std::invalid_argument("random_instance: dimensions must be at least 1");
  if (!(params.beta_high < 0) || !(params.beta_low <= params.beta_high))
    throw std::invalid_argument("random_instance: beta range must be negative");
  if (!(params.q_low <= params.q_high))
    throw std::invalid_argument("random_instance: q range is inverted");
  if (!(params.price_upper > 0))
    throw std::invalid_argument("random_instance: price_upper must be positive");

  const int I = params.num_priced;
  const int N = params.num_customers;
  const int L = params.num_classes;

  MixedLogitInstance inst;
  inst.name = "random-" + std::to_string(seed);
  for (int i = 0; i < I; ++i)
    inst.alternatives.push_back({"product" + std::to_string(i + 1), true});
  inst.alternatives.push_back({"no_purchase", false});
  inst.customers = N;
  inst.classes = L;
  inst.price_coef.assign(I + 1, Eigen::MatrixXd::Zero(N, L));
  inst.exo_utility.assign(I + 1, Eigen::MatrixXd::Zero(N, L));

  // draw order (fixed for reproducibility): per product, per customer, per
  // class: exogenous utility first, then price coefficient
  Rng rng(seed);
  for (int i = 0; i < I; ++i)
    for (int n = 0; n < N; ++n)
      for (int l = 0; l < L; ++l) {
        inst.exo_utility[i](n, l) = rng.uniform(params.q_low, params.q_high);
        inst.price_coef[i](n, l) = rng.uniform(params.beta_low, params.beta_high);
      }

  inst.class_weight.resize(L, N);
  if (params.class_weights) {
    if (params.class_weights->size() != L)
      throw std::invalid_argument("random_instance: class_weights must have one entry per class");
    for (int n = 0; n < N; ++n) inst.class_weight.col(n) = *params.class_weights;
  } else {
    inst.class_weight.setConstant(1.0 / L);
  }

  inst.price_lb = Eigen::VectorXd::Zero(I);
  inst.price_ub = Eigen::VectorXd::Constant(I, params.price_upper);
  validate(inst);
  return inst;
}

std::vector<GridPoint> gaussian_grid(const ParkingParams& params, int n) {
  if (n < 1) throw std::invalid_argument("gaussian_grid: n must be at least 1");
  if (n == 1) return {{params.taste_mean(0), params.taste_mean(1), 1.0}};

  const Eigen::Vector2d width = (params.taste_box_hi - params.taste_box_lo) / n;
  std::vector<GridPoint> grid;
  grid.reserve(static_cast<size_t>(n) * n);
  double total = 0.0;
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) {
      Eigen::Vector2d c = params.taste_box_lo;
      c(0) += (a + 0.5) * width(0);
      c(1) += (b + 0.5) * width(1);
      const double w =
          bivariate_normal_pdf(c, params.taste_mean, params.taste_cov) * width(0) * width(1);
      grid.push_back({c(0), c(1), w});
      total += w;
    }
  for (auto& g : grid) g.weight /= total;
  return grid;
}

ParkingScenario parking_scenario(std::uint64_t seed, int num_customers, int n_grid) {
  if (num_customers < 1)
    throw std::invalid_argument("parking_scenario: num_customers must be at least 1");
  ParkingScenario sc;
  sc.params = ParkingParams{};
  const std::vector<GridPoint> grid = gaussian_grid(sc.params, n_grid);
  const int N = num_customers;
  const int L = static_cast<int>(grid.size());

  // draw order (fixed for reproducibility): per customer, access times for
  // FSP/PSP/PUP, destination times likewise, then the four dummies
  Rng rng(seed);
  sc.profiles.resize(N);
  for (auto& c : sc.profiles) {
    for (int i = 0; i < 3; ++i) c.access_time(i) = rng.uniform(1.0, 15.0);
    for (int i = 0; i < 3; ++i) c.dest_time(i) = rng.uniform(1.0, 15.0);
    c.origin = rng.bernoulli() ? 1 : 0;
    c.low_inc = rng.bernoulli() ? 1 : 0;
    c.resident = rng.bernoulli() ? 1 : 0;
    c.age_veh_le3 = rng.bernoulli() ? 1 : 0;
  }

  MixedLogitInstance& inst = sc.instance;
  inst.name = "parking-c" + std::to_string(N) + "-g" + std::to_string(n_grid) + "-s" +
              std::to_string(seed);
  inst.alternatives = {{"FSP", false}, {"PSP", true}, {"PUP", true}};
  inst.customers = N;
  inst.classes = L;
  inst.price_coef.assign(3, Eigen::MatrixXd::Zero(N, L));
  inst.exo_utility.assign(3, Eigen::MatrixXd::Zero(N, L));
  for (int n = 0; n < N; ++n) {
    const CustomerProfile& c = sc.profiles[n];
    for (int l = 0; l < L; ++l) {
      const double bat = grid[l].beta_at;
      const double bfee = grid[l].beta_fee;
      inst.exo_utility[0](n, l) = fsp_exo(sc.params, c, bat);
      inst.exo_utility[1](n, l) = psp_exo(sc.params, c, bat);
      inst.exo_utility[2](n, l) = pup_exo(sc.params, c, bat);
      inst.price_coef[1](n, l) = psp_price_coef(sc.params, c, bfee);
      inst.price_coef[2](n, l) = pup_price_coef(sc.params, c, bfee);
    }
  }
  inst.class_weight.resize(L, N);
  for (int l = 0; l < L; ++l) inst.class_weight.row(l).setConstant(grid[l].weight);
  inst.price_lb = Eigen::VectorXd::Zero(2);
  inst.price_ub = Eigen::VectorXd::Constant(2, sc.params.price_upper);
  validate(inst);
  return sc;
}

MixedLogitInstance parking_instance(std::uint64_t seed, int num_customers, int n_grid) {
  return parking_scenario(seed, num_customers, n_grid).instance;
}

MonteCarloEstimate continuous_ml_revenue(const ParkingParams& params,
                                         const std::vector<CustomerProfile>& profiles,
                                         const Eigen::VectorXd& prices, long samples,
                                         std::uint64_t seed) {
  if (samples < 1)
    throw std::invalid_argument("continuous_ml_revenue: samples must be at least 1");
  if (prices.size() != 2)
    throw std::invalid_argument("continuous_ml_revenue: expected (PSP, PUP) prices");

  const Eigen::Matrix2d l = chol2(params.taste_cov);
  Rng rng(seed);
  double sum = 0.0, sumsq = 0.0;
  for (long s = 0; s < samples; ++s) {
    const double z0 = rng.normal();
    const double z1 = rng.normal();
    const double bat = params.taste_mean(0) + l(0, 0) * z0;
    const double bfee = params.taste_mean(1) + l(1, 0) * z0 + l(1, 1) * z1;

    double total = 0.0;
    for (const CustomerProfile& c : profiles) {
      const double v0 = fsp_exo(params, c, bat);
      const double v1 = psp_exo(params, c, bat) + psp_price_coef(params, c, bfee) * prices(0);
      const double v2 = pup_exo(params, c, bat) + pup_price_coef(params, c, bfee) * prices(1);
      const double m = std::max(v0, std::max(v1, v2));
      const double e0 = std::exp(v0 - m), e1 = std::exp(v1 - m), e2 = std::exp(v2 - m);
      const double denom = e0 + e1 + e2;
      total += (prices(0) * e1 + prices(1) * e2) / denom;
    }
    sum += total;
    sumsq += total * total;
  }

  MonteCarloEstimate est;
  est.value = sum / samples;
  if (samples > 1) {
    const double var = std::max(0.0, (sumsq - samples * est.value * est.value) / (samples - 1));
    est.std_error = std::sqrt(var / samples);
  }
  return est;
}

}  // namespace pricer
