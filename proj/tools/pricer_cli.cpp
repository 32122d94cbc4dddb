#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "pricer/bnb.hpp"
#include "pricer/instances.hpp"
#include "pricer/io.hpp"
#include "pricer/local_search.hpp"
#include "pricer/model.hpp"

namespace {

struct InstanceArgs {
  std::string path;
  std::string builtin;
};

void add_instance_flags(CLI::App* cmd, InstanceArgs& args) {
  auto* p = cmd->add_option("--instance", args.path, "Instance file (JSON)");
  auto* b = cmd->add_option("--builtin", args.builtin, "Built-in instance name")
                ->check(CLI::IsMember({"intel"}));
  p->excludes(b);
}

pricer::LoadedInstance resolve_instance(const InstanceArgs& args) {
  if (!args.builtin.empty()) {
    pricer::LoadedInstance li;
    li.instance = pricer::intel_instance();
    return li;
  }
  if (args.path.empty())
    throw std::runtime_error("one of --instance or --builtin is required");
  return pricer::load_instance(args.path);
}

std::string join_path(const std::string& dir, const std::string& file) {
  if (dir.empty() || dir == ".") return file;
  if (dir.back() == '/') return dir + file;
  return dir + "/" + file;
}

int run_solve(const InstanceArgs& iargs, const pricer::SolverConfig& cfg,
              const std::string& out_dir, bool wall_times) {
  const pricer::LoadedInstance li = resolve_instance(iargs);
  const pricer::SolveReport rep = pricer::solve(li.instance, cfg);

  if (!out_dir.empty() && out_dir != ".") std::filesystem::create_directories(out_dir);
  pricer::write_result(rep, li.instance, join_path(out_dir, "result.json"));
  pricer::write_trace(rep, join_path(out_dir, "trace.txt"), wall_times);

  std::cout << "status " << (rep.status == pricer::SolveStatus::OptimalWithinTol
                                 ? "optimal"
                                 : rep.status == pricer::SolveStatus::TimeLimit
                                       ? "time_limit"
                                       : "node_limit")
            << "\n";
  std::cout << "value " << pricer::format_double(rep.incumbent_value) << "\n";
  std::cout << "upper_bound " << pricer::format_double(rep.global_upper_bound) << "\n";
  std::cout << "gap " << pricer::format_double(rep.gap) << "\n";
  std::cout << "nodes " << rep.nodes_processed << "\n";
  std::cout << "prices";
  for (int i = 0; i < rep.incumbent.values.size(); ++i)
    std::cout << ' ' << pricer::format_double(rep.incumbent.values(i));
  std::cout << "\n";
  return rep.status == pricer::SolveStatus::OptimalWithinTol ? 0 : 2;
}

int run_local(const InstanceArgs& iargs, std::uint64_t seed, int starts,
              pricer::LocalSearchConfig lcfg) {
  const pricer::LoadedInstance li = resolve_instance(iargs);
  double best = -std::numeric_limits<double>::infinity();
  Eigen::VectorXd best_p;
  for (int s = 0; s < starts; ++s) {
    lcfg.seed = pricer::mix_seed(seed, static_cast<std::uint64_t>(s));
    const pricer::LocalSearchResult r = pricer::local_search(li.instance, lcfg);
    if (r.value > best) {
      best = r.value;
      best_p = r.prices.values;
    }
  }
  std::cout << "value " << pricer::format_double(best) << "\n";
  std::cout << "prices";
  for (int i = 0; i < best_p.size(); ++i)
    std::cout << ' ' << pricer::format_double(best_p(i));
  std::cout << "\n";
  return 0;
}

int run_evaluate(const InstanceArgs& iargs, const std::vector<double>& price_list,
                 long mc_samples, std::uint64_t mc_seed) {
  const pricer::LoadedInstance li = resolve_instance(iargs);
  const pricer::MixedLogitInstance& inst = li.instance;
  if (static_cast<int>(price_list.size()) != inst.num_priced())
    throw std::runtime_error("expected " + std::to_string(inst.num_priced()) +
                             " prices, got " + std::to_string(price_list.size()));
  Eigen::VectorXd p(inst.num_priced());
  for (size_t i = 0; i < price_list.size(); ++i) p(static_cast<int>(i)) = price_list[i];
  if (!pricer::in_box(inst, p)) throw std::runtime_error("prices are outside the price box");
  if (!pricer::satisfies_constraints(inst, p))
    throw std::runtime_error("prices violate the instance's linear constraints");

  std::cout << "revenue " << pricer::format_double(pricer::expected_revenue(inst, p))
            << "\n";
  const Eigen::VectorXd shares = pricer::market_shares(inst, p);
  for (int i = 0; i < inst.num_alternatives(); ++i)
    std::cout << "share " << inst.alternatives[i].name << ' '
              << pricer::format_double(shares(i)) << "\n";

  if (mc_samples > 0) {
    if (!li.parking)
      throw std::runtime_error("--mc-samples needs an instance with a parking scenario");
    const pricer::MonteCarloEstimate est = pricer::continuous_ml_revenue(
        li.parking->params, li.parking->profiles, p, mc_samples, mc_seed);
    std::cout << "continuous_value " << pricer::format_double(est.value) << "\n";
    std::cout << "continuous_std_error " << pricer::format_double(est.std_error) << "\n";
  }
  return 0;
}

int run_generate(const std::string& family, std::uint64_t seed, int products, int classes,
                 int customers, int n_grid, double price_upper, const std::string& out) {
  if (family == "intel") {
    pricer::save_instance(pricer::intel_instance(), out);
  } else if (family == "random") {
    pricer::RandomInstanceParams params;
    params.num_priced = products;
    params.num_classes = classes;
    params.num_customers = customers;
    params.price_upper = price_upper;
    pricer::save_instance(pricer::random_instance(seed, params), out);
  } else if (family == "parking") {
    const pricer::ParkingScenario sc = pricer::parking_scenario(seed, customers, n_grid);
    pricer::save_instance(sc.instance, out, &sc);
  } else {
    throw std::runtime_error("unknown family: " + family);
  }
  std::cout << "wrote " << out << "\n";
  return 0;
}

int run_surface(const InstanceArgs& iargs, int resolution, const std::string& out_dir) {
  const pricer::LoadedInstance li = resolve_instance(iargs);
  const pricer::MixedLogitInstance& inst = li.instance;
  if (inst.num_priced() != 2)
    throw std::runtime_error("surface needs exactly 2 priced alternatives, instance has " +
                             std::to_string(inst.num_priced()));
  const std::string path = join_path(out_dir, "surface.txt");
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + path);
  os << "p1 p2 revenue\n";
  Eigen::VectorXd p(2);
  for (int a = 0; a < resolution; ++a) {
    p(0) = inst.price_lb(0) +
           (inst.price_ub(0) - inst.price_lb(0)) * a / (resolution - 1);
    for (int b = 0; b < resolution; ++b) {
      p(1) = inst.price_lb(1) +
             (inst.price_ub(1) - inst.price_lb(1)) * b / (resolution - 1);
      os << pricer::format_double(p(0)) << ' ' << pricer::format_double(p(1)) << ' '
         << pricer::format_double(pricer::expected_revenue(inst, p)) << '\n';
    }
  }
  std::cout << "wrote " << path << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Global price optimizer for discrete mixed-logit demand"};
  app.require_subcommand(1);

  // solve
  auto* solve = app.add_subcommand("solve", "Branch-and-bound with an optimality certificate");
  InstanceArgs solve_inst;
  add_instance_flags(solve, solve_inst);
  pricer::SolverConfig cfg;
  std::string solve_out = ".";
  bool no_wall_times = false;
  solve->add_option("--gap", cfg.gap_tol, "Relative optimality gap target")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  solve->add_option("--time-limit", cfg.time_limit, "Wall-clock limit in seconds");
  solve->add_option("--node-limit", cfg.node_limit, "Maximum processed nodes");
  solve->add_option("--seed", cfg.seed, "Seed for all randomized components")
      ->capture_default_str();
  solve->add_option("--threads", cfg.threads, "Worker threads (1 = deterministic)")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  solve->add_option("--local-starts", cfg.local_starts, "Local searches per node")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  solve->add_option("--out", solve_out, "Directory for result.json and trace.txt")
      ->capture_default_str();
  solve->add_flag("--no-wall-times", no_wall_times,
                  "Write zeros in the trace time column (reproducible output)");

  // local
  auto* local = app.add_subcommand("local", "Trust-region local search only");
  InstanceArgs local_inst;
  add_instance_flags(local, local_inst);
  std::uint64_t local_seed = 0;
  int local_starts = 10;
  local->add_option("--seed", local_seed, "Base seed")->capture_default_str();
  local->add_option("--starts", local_starts, "Random restarts")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();

  // evaluate
  auto* evaluate = app.add_subcommand("evaluate", "Expected revenue and market shares");
  InstanceArgs eval_inst;
  add_instance_flags(evaluate, eval_inst);
  std::vector<double> eval_prices;
  long mc_samples = 0;
  std::uint64_t mc_seed = 0;
  evaluate->add_option("--prices", eval_prices, "Comma-separated prices, one per priced alternative")
      ->delimiter(',')
      ->required();
  evaluate->add_option("--mc-samples", mc_samples,
                       "Also evaluate the continuous-taste revenue (parking instances)");
  evaluate->add_option("--mc-seed", mc_seed, "Seed for the continuous evaluation")
      ->capture_default_str();

  // generate
  auto* generate = app.add_subcommand("generate", "Write a benchmark instance file");
  std::string family;
  std::uint64_t gen_seed = 0;
  int gen_products = 3, gen_classes = 7, gen_customers = 1, gen_n_grid = 3;
  double gen_price_upper = 100.0;
  std::string gen_out = "instance.json";
  generate->add_option("--family", family, "random, parking, or intel")
      ->check(CLI::IsMember({"random", "parking", "intel"}))
      ->required();
  generate->add_option("--seed", gen_seed, "Generator seed")->capture_default_str();
  generate->add_option("--products", gen_products, "Priced products (random family)")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  generate->add_option("--classes", gen_classes, "Taste classes (random family)")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  generate->add_option("--customers", gen_customers, "Customers (random and parking)")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  generate->add_option("--n-grid", gen_n_grid, "Taste grid resolution per axis (parking)")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  generate->add_option("--price-upper", gen_price_upper, "Price box upper bound (random family)")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  generate->add_option("--out", gen_out, "Output file")->capture_default_str();

  // surface
  auto* surface = app.add_subcommand("surface", "Revenue grid over a 2-product price box");
  InstanceArgs surf_inst;
  add_instance_flags(surface, surf_inst);
  int resolution = 41;
  std::string surf_out = ".";
  surface->add_option("--resolution", resolution, "Grid points per axis")
      ->check(CLI::Range(2, 100000))
      ->capture_default_str();
  surface->add_option("--out", surf_out, "Directory for surface.txt")->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (solve->parsed()) {
      cfg.record_wall_times = !no_wall_times;
      return run_solve(solve_inst, cfg, solve_out, !no_wall_times);
    }
    if (local->parsed()) return run_local(local_inst, local_seed, local_starts, {});
    if (evaluate->parsed()) return run_evaluate(eval_inst, eval_prices, mc_samples, mc_seed);
    if (generate->parsed())
      return run_generate(family, gen_seed, gen_products, gen_classes, gen_customers,
                          gen_n_grid, gen_price_upper, gen_out);
    if (surface->parsed()) return run_surface(surf_inst, resolution, surf_out);
  } catch (const pricer::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
