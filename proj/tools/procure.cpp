// Copyright 2026 The Procure Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Command-line surface: generators, one-shot mechanism runs, the Monte-Carlo
// benchmark harness, the budget-smoothed solver, and the invariant suite.
// Every command is deterministic given its flags and --seed.

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "procure/bench.hpp"
#include "procure/core.hpp"
#include "procure/instances.hpp"
#include "procure/knapsack.hpp"
#include "procure/mechanisms.hpp"
#include "procure/smoothed.hpp"
#include "procure/verify.hpp"

namespace {

using namespace procure;

std::uint64_t default_seed() {
  if (const char* env = std::getenv("PROCURE_SEED")) {
    try {
      return std::stoull(env);
    } catch (const std::exception&) {
      std::cerr << "warning: ignoring non-numeric PROCURE_SEED\n";
    }
  }
  return 42;
}

std::vector<double> parse_double_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(std::stod(item));
  return out;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write: " + path);
  return out;
}

void warn_small_bidder(const Market& market, double budget) {
  double r = market.small_bidder_ratio(budget);
  if (r > 0.1)
    std::cerr << "warning: largest cost is " << r
              << " of the budget; mechanism guarantees assume small bidders\n";
}

// The five synthetic cost distributions of the benchmark table.
std::vector<CostDistribution> table_distributions() {
  return {
      CostDistribution::normal(20.0, 5.0),
      CostDistribution::uniform(0.0, 40.0),
      CostDistribution::exponential(20.0),
      CostDistribution::mixture({{0.5, 10.0, 3.0}, {0.5, 30.0, 3.0}}),
      CostDistribution::mixture({{1.0 / 3.0, 5.0, 3.0}, {1.0 / 3.0, 20.0, 3.0}, {1.0 / 3.0, 35.0, 3.0}}),
  };
}

std::vector<MechanismKind> all_mechanisms() {
  return {MechanismKind::cutoff, MechanismKind::agn, MechanismKind::greedy, MechanismKind::rs_greedy};
}

BudgetDistribution preset_distribution(const std::string& name) {
  if (name == "single") return BudgetDistribution::uniform_over({1.0});
  if (name == "uniform-1-10") {
    std::vector<double> rhos;
    for (int k = 1; k <= 10; ++k) rhos.push_back(k / 10.0);
    return BudgetDistribution::uniform_over(rhos);
  }
  if (name == "log-uniform-1-8") return BudgetDistribution::uniform_over({0.125, 0.25, 0.5, 1.0});
  if (name == "log-uniform-1-512") {
    std::vector<double> rhos;
    for (int k = 0; k < 10; ++k) rhos.push_back(std::pow(2.0, k) / 512.0);
    return BudgetDistribution::uniform_over(rhos);
  }
  if (name == "microworkers") return BudgetDistribution::microworkers();
  throw std::invalid_argument("unknown smoothed preset: " + name);
}

void print_smoothed(std::ostream& out, const SmoothedResult& result, std::uint64_t seed) {
  out << "# seed=" << seed << "\n";
  char buf[160];
  std::snprintf(buf, sizeof(buf), "ratio,%.6f\n", result.ratio);
  out << buf;
  out << "rho,mech_utility,opt_utility,budget_ratio,cutoff_cost\n";
  for (const auto& row : result.per_budget) {
    std::snprintf(buf, sizeof(buf), "%.6f,%.6f,%.6f,%.6f,%.6f\n", row.rho, row.mech_utility,
                  row.opt_utility, row.ratio, row.cutoff_cost);
    out << buf;
  }
  out << "piece,breakpoint,slope\n";
  for (std::size_t i = 0; i < result.curve.pieces(); ++i) {
    std::snprintf(buf, sizeof(buf), "%zu,%.9f,%.9f\n", i + 1, result.curve.breakpoints[i],
                  result.curve.slopes[i]);
    out << buf;
  }
}

void write_budgets_sidecar(const std::string& market_path, const std::vector<double>& budgets,
                           std::uint64_t seed) {
  std::string path = market_path;
  std::size_t dot = path.rfind('.');
  path = (dot == std::string::npos ? path : path.substr(0, dot)) + ".budgets.csv";
  std::ofstream out = open_out(path);
  out << "# seed=" << seed << "\n";
  out << "budget\n";
  char buf[64];
  for (double b : budgets) {
    std::snprintf(buf, sizeof(buf), "%.17g\n", b);
    out << buf;
  }
  std::cout << "wrote " << path << "\n";
}

int run_ratio(const std::string& market_path, double budget, const std::string& mechanisms,
              std::uint64_t seed) {
  Market market = Market::load_csv(market_path);
  warn_small_bidder(market, budget);
  std::vector<MechanismKind> kinds;
  if (mechanisms == "all") {
    kinds = all_mechanisms();
  } else {
    std::stringstream ss(mechanisms);
    std::string item;
    while (std::getline(ss, item, ',')) kinds.push_back(mechanism_from_string(item));
  }
  std::cout << "# seed=" << seed << "\n";
  std::cout << "mechanism,utility,payment,opt_utility,ratio\n";
  double opt = non_ic_optimum(market, budget).utility;
  char buf[192];
  for (MechanismKind kind : kinds) {
    std::uint64_t mech_seed = Rng::stream(seed, {0, detail::fnv1a(to_string(kind))}).next_u64();
    MechanismOutcome outcome = run_mechanism(kind, market, budget, mech_seed);
    std::snprintf(buf, sizeof(buf), "%s,%.6f,%.6f,%.6f,%.6f\n", to_string(kind),
                  outcome.total_utility, outcome.total_payment, opt,
                  competitive_ratio(outcome, market, budget));
    std::cout << buf;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"budget-feasible procurement mechanisms: generators, benchmarks, smoothed analysis"};
  app.require_subcommand(1);
  app.set_config("--config", "", "flat key=value config file; flags take precedence");

  std::uint64_t seed = default_seed();
  unsigned threads = 0;

  // ---- gen ----
  auto* gen = app.add_subcommand("gen", "write a market CSV (plus budget sidecar for adversarial families)");
  gen->require_subcommand(1);

  auto* gen_syn = gen->add_subcommand("synthetic", "n unit-utility sellers with i.i.d. costs");
  std::string syn_dist = "normal:20,5", syn_out = "market.csv";
  std::size_t syn_n = 1000;
  gen_syn->add_option("--dist", syn_dist, "normal:M,S | uniform:LO,HI | exp:MEAN | mixnormal:W,M,S;...");
  gen_syn->add_option("--n", syn_n, "sellers");
  gen_syn->add_option("--out", syn_out, "output market CSV");
  gen_syn->add_option("--seed", seed, "RNG seed");

  auto* gen_agn = gen->add_subcommand("agn-hard", "market keeping the log-rule mechanism at its worst ratio");
  std::string agn_budgets = "1,2.5,6.25", agn_out = "agn_hard.csv";
  double agn_base = 0.0;
  std::size_t agn_n = 10000;
  gen_agn->add_option("--budgets", agn_budgets, "budget ratios, first must be 1");
  gen_agn->add_option("--base-budget", agn_base, "first budget (default: n, so the base cost is 1)");
  gen_agn->add_option("--n", agn_n, "sellers per bucket");
  gen_agn->add_option("--out", agn_out, "output market CSV");

  auto* gen_lb = gen->add_subcommand("lower-bound", "geometric market capping every mechanism's smoothed ratio");
  GeometricMarketSpec lb_spec;
  std::string lb_out = "lower_bound.csv";
  gen_lb->add_option("--m", lb_spec.groups, "number of non-zero groups");
  gen_lb->add_option("--n", lb_spec.sellers_per_group, "sellers per group");
  gen_lb->add_option("--q", lb_spec.q, "cost-per-utility growth factor");
  gen_lb->add_option("--w", lb_spec.w, "utility growth factor");
  gen_lb->add_option("--out", lb_out, "output market CSV");

  auto* gen_bayes = gen->add_subcommand("bayesian", "sample unit-utility sellers from a market curve");
  std::string bay_breaks = "0.36787944117144233", bay_slopes = "1", bay_out = "bayesian.csv";
  std::size_t bay_n = 100000;
  gen_bayes->add_option("--breakpoints", bay_breaks, "curve breakpoints F_1..F_m");
  gen_bayes->add_option("--slopes", bay_slopes, "curve slopes a_1..a_m");
  gen_bayes->add_option("--n", bay_n, "sellers");
  gen_bayes->add_option("--seed", seed, "RNG seed");
  gen_bayes->add_option("--out", bay_out, "output market CSV");

  // ---- bench ----
  auto* bench = app.add_subcommand("bench", "Monte-Carlo competitive-ratio benchmarks");
  std::string bench_preset, bench_mechanism = "all", bench_dist = "normal:20,5", bench_market,
              bench_out;
  std::size_t bench_n = 1000, bench_runs = 100;
  double bench_budget = 20000.0;
  bench->add_option("--preset", bench_preset, "table1 | figure1");
  bench->add_option("--mechanism", bench_mechanism, "all or comma list of greedy,rs_greedy,agn,cutoff");
  bench->add_option("--dist", bench_dist, "cost distribution for synthetic instances");
  bench->add_option("--market", bench_market, "fixed market CSV (one-shot ratio mode)");
  bench->add_option("--n", bench_n, "sellers per synthetic instance");
  bench->add_option("--budget", bench_budget, "buyer budget");
  bench->add_option("--runs", bench_runs, "Monte-Carlo runs");
  bench->add_option("--seed", seed, "RNG seed");
  bench->add_option("--threads", threads, "worker threads (0 = all cores)");
  bench->add_option("--out", bench_out, "output CSV");

  // ---- smoothed ----
  auto* smoothed = app.add_subcommand("smoothed", "worst-market expected ratio for a budget distribution");
  std::string sm_preset, sm_rhos, sm_probs, sm_dist_file, sm_out;
  std::size_t sm_restarts = 64;
  smoothed->add_option("--preset", sm_preset,
                       "single | uniform-1-10 | log-uniform-1-8 | log-uniform-1-512 | microworkers | two-budget-sweep");
  smoothed->add_option("--rhos", sm_rhos, "comma list of budget perturbation factors");
  smoothed->add_option("--probs", sm_probs, "comma list of weights (default uniform)");
  smoothed->add_option("--dist-file", sm_dist_file, "CSV rho,prob");
  smoothed->add_option("--restarts", sm_restarts, "optimizer restarts");
  smoothed->add_option("--seed", seed, "RNG seed");
  smoothed->add_option("--threads", threads, "worker threads (0 = all cores)");
  smoothed->add_option("--out", sm_out, "output CSV");

  // ---- ratio ----
  auto* ratio = app.add_subcommand("ratio", "one-shot mechanism vs non-IC optimum on a market file");
  std::string ratio_market, ratio_mechanism = "all";
  double ratio_budget = 0.0;
  ratio->add_option("--market", ratio_market, "market CSV")->required();
  ratio->add_option("--budget", ratio_budget, "buyer budget")->required();
  ratio->add_option("--mechanism", ratio_mechanism, "all or comma list");
  ratio->add_option("--seed", seed, "RNG seed");

  // ---- verify ----
  auto* verify = app.add_subcommand("verify", "run the invariant suite");
  std::string verify_property_name;
  std::size_t verify_samples = 0, verify_n = 0;
  verify->add_option("--property", verify_property_name, "run a single named property");
  verify->add_option("--samples", verify_samples, "sample count override");
  verify->add_option("--n", verify_n, "market size cap override");
  verify->add_option("--seed", seed, "RNG seed");

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen_syn->parsed()) {
      Market market = gen_synthetic(syn_n, CostDistribution::parse(syn_dist), seed);
      market.save_csv(syn_out);
      std::cout << "wrote " << syn_out << " (" << market.size() << " sellers, seed=" << seed << ")\n";
    } else if (gen_agn->parsed()) {
      double base = agn_base > 0.0 ? agn_base : static_cast<double>(agn_n);
      AgnHardMarket hard = gen_agn_hard(base, parse_double_list(agn_budgets), agn_n);
      hard.market.save_csv(agn_out);
      std::cout << "wrote " << agn_out << " (" << hard.market.size() << " sellers)\n";
      write_budgets_sidecar(agn_out, hard.budgets, seed);
    } else if (gen_lb->parsed()) {
      LowerBoundMarket lb = gen_lower_bound_market(lb_spec);
      lb.market.save_csv(lb_out);
      std::cout << "wrote " << lb_out << " (" << lb.market.size() << " sellers)\n";
      write_budgets_sidecar(lb_out, lb.budgets, seed);
    } else if (gen_bayes->parsed()) {
      PiecewiseCurve curve{parse_double_list(bay_breaks), parse_double_list(bay_slopes)};
      Market market = sample_bayesian_market(curve, bay_n, seed);
      market.save_csv(bay_out);
      std::cout << "wrote " << bay_out << " (" << market.size() << " sellers, seed=" << seed << ")\n";
    } else if (bench->parsed()) {
      if (bench_preset == "table1") {
        BenchReport all;
        all.seed = seed;
        for (const CostDistribution& dist : table_distributions()) {
          ExperimentSpec spec;
          spec.mechanisms = all_mechanisms();
          spec.dist = dist;
          spec.n = bench_n;
          spec.budget = bench_budget;
          spec.runs = bench_runs;
          spec.seed = seed;
          BenchReport part = run_experiment(spec, threads);
          all.rows.insert(all.rows.end(), part.rows.begin(), part.rows.end());
        }
        if (!bench_out.empty()) {
          auto out = open_out(bench_out);
          all.write_csv(out);
          std::cout << "wrote " << bench_out << "\n";
        } else {
          all.write_csv(std::cout);
        }
      } else if (bench_preset == "figure1") {
        GapReport all;
        all.seed = seed;
        std::vector<CostDistribution> dists = {CostDistribution::normal(20.0, 5.0),
                                               CostDistribution::uniform(0.0, 40.0),
                                               CostDistribution::exponential(20.0)};
        for (const CostDistribution& dist : dists) {
          GapReport part = gap_sweep(dist, {125, 250, 500, 1000, 2000}, 20.0, 20, seed, threads);
          all.rows.insert(all.rows.end(), part.rows.begin(), part.rows.end());
        }
        if (!bench_out.empty()) {
          auto out = open_out(bench_out);
          all.write_csv(out);
          std::cout << "wrote " << bench_out << "\n";
        } else {
          all.write_csv(std::cout);
        }
      } else if (!bench_market.empty()) {
        return run_ratio(bench_market, bench_budget, bench_mechanism, seed);
      } else {
        ExperimentSpec spec;
        if (bench_mechanism == "all") {
          spec.mechanisms = all_mechanisms();
        } else {
          std::stringstream ss(bench_mechanism);
          std::string item;
          while (std::getline(ss, item, ',')) spec.mechanisms.push_back(mechanism_from_string(item));
        }
        spec.dist = CostDistribution::parse(bench_dist);
        spec.n = bench_n;
        spec.budget = bench_budget;
        spec.runs = bench_runs;
        spec.seed = seed;
        BenchReport report = run_experiment(spec, threads);
        if (!bench_out.empty()) {
          auto out = open_out(bench_out);
          report.write_csv(out);
          std::cout << "wrote " << bench_out << "\n";
        } else {
          report.write_csv(std::cout);
        }
      }
    } else if (smoothed->parsed()) {
      if (sm_preset == "two-budget-sweep") {
        std::ostringstream body;
        body << "# seed=" << seed << "\n";
        body << "rho,ratio\n";
        char buf[64];
        for (int k = 1; k <= 99; ++k) {
          double rho = k / 100.0;
          BudgetDistribution dist = BudgetDistribution::uniform_over({rho, 1.0});
          SmoothedResult result = optimize_worst_curve(dist, sm_restarts, seed, threads);
          std::snprintf(buf, sizeof(buf), "%.2f,%.6f\n", rho, result.ratio);
          body << buf;
        }
        if (!sm_out.empty()) {
          auto out = open_out(sm_out);
          out << body.str();
          std::cout << "wrote " << sm_out << "\n";
        } else {
          std::cout << body.str();
        }
      } else {
        BudgetDistribution dist = BudgetDistribution::uniform_over({1.0});
        if (!sm_preset.empty()) {
          dist = preset_distribution(sm_preset);
        } else if (!sm_dist_file.empty()) {
          std::ifstream in(sm_dist_file);
          if (!in) throw std::runtime_error("cannot open: " + sm_dist_file);
          dist = BudgetDistribution::from_csv(in);
        } else if (!sm_rhos.empty()) {
          std::vector<double> rhos = parse_double_list(sm_rhos);
          if (sm_probs.empty()) {
            dist = BudgetDistribution::uniform_over(rhos);
          } else {
            std::vector<double> probs = parse_double_list(sm_probs);
            if (probs.size() != rhos.size())
              throw std::invalid_argument("--rhos and --probs must have equal length");
            std::vector<BudgetDistribution::Point> pts;
            for (std::size_t i = 0; i < rhos.size(); ++i) pts.push_back({rhos[i], probs[i]});
            dist = BudgetDistribution::from_points(std::move(pts));
          }
        } else {
          throw std::invalid_argument("smoothed: give --preset, --rhos or --dist-file");
        }
        SmoothedResult result = optimize_worst_curve(dist, sm_restarts, seed, threads);
        print_smoothed(std::cout, result, seed);
        if (!sm_out.empty()) {
          auto out = open_out(sm_out);
          print_smoothed(out, result, seed);
          std::cout << "wrote " << sm_out << "\n";
        }
      }
    } else if (ratio->parsed()) {
      return run_ratio(ratio_market, ratio_budget, ratio_mechanism, seed);
    } else if (verify->parsed()) {
      VerifyOptions opts;
      opts.samples = verify_samples;
      opts.n = verify_n;
      opts.seed = seed;
      std::vector<PropertyResult> results;
      if (!verify_property_name.empty())
        results.push_back(verify_property(verify_property_name, opts));
      else
        results = verify_all(opts);
      std::cout << "# seed=" << seed << "\n";
      bool all_pass = true;
      for (const PropertyResult& r : results) {
        std::cout << (r.pass ? "[PASS] " : "[FAIL] ") << r.name << ": " << r.detail << "\n";
        all_pass = all_pass && r.pass;
      }
      return all_pass ? 0 : 1;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
