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

#pragma once

// Fast invariant suite behind the `verify` CLI command: each property checks
// one identity or dominance claim against an independent route (quadrature,
// brute force, exhaustive grids) on seeded random inputs.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "procure/bench.hpp"
#include "procure/core.hpp"
#include "procure/instances.hpp"
#include "procure/knapsack.hpp"
#include "procure/mechanisms.hpp"
#include "procure/rng.hpp"
#include "procure/smoothed.hpp"

namespace procure {

struct PropertyResult {
  std::string name;
  bool pass = false;
  std::string detail;
};

struct VerifyOptions {
  std::size_t samples = 0;  // 0 = per-property default
  std::size_t n = 0;        // 0 = per-property default market size cap
  std::uint64_t seed = 42;
};

namespace detail {

inline double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                               double fa, double fm, double fb, double whole, double tol,
                               int depth) {
  double m = 0.5 * (a + b);
  double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  double flm = f(lm), frm = f(rm);
  double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  if (depth <= 0 || std::abs(left + right - whole) <= 15.0 * tol)
    return left + right + (left + right - whole) / 15.0;
  return adaptive_simpson(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) +
         adaptive_simpson(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1);
}

inline double integrate(const std::function<double(double)>& f, double a, double b, double tol) {
  if (b <= a) return 0.0;
  double m = 0.5 * (a + b);
  double fa = f(a), fm = f(m), fb = f(b);
  double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return adaptive_simpson(f, a, b, fa, fm, fb, whole, tol, 48);
}

inline Market random_market(Rng& rng, std::size_t max_n) {
  std::size_t n = 1 + static_cast<std::size_t>(rng.below(max_n));
  std::vector<Seller> sellers;
  sellers.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    double cost;
    switch (rng.below(4)) {
      case 0: cost = 0.0; break;                                // exact zero-cost mass
      case 1: cost = rng.uniform(0.0, 10.0); break;
      case 2: cost = std::max(0.0, rng.normal(5.0, 3.0)); break;
      default: cost = rng.exponential(4.0); break;
    }
    double utility = rng.below(3) == 0 ? 1.0 : rng.uniform(0.25, 4.0);
    sellers.push_back({cost, utility});
  }
  // occasionally force exact cost-per-utility ties
  if (n >= 2 && rng.below(2) == 0) {
    std::vector<Seller>& s = sellers;
    std::size_t a = static_cast<std::size_t>(rng.below(n));
    std::size_t b = static_cast<std::size_t>(rng.below(n));
    if (a != b && s[a].utility > 0.0) s[b].cost = s[a].cost / s[a].utility * s[b].utility;
  }
  return Market(std::move(sellers));
}

inline TwoStepRule random_rule(Rng& rng) {
  TwoStepRule rule;
  rule.t = rng.uniform(0.0, 0.999);
  double p = rng.uniform(0.0, 8.0), q = rng.uniform(0.0, 8.0);
  rule.high_price = std::max(p, q);
  if (rng.below(4) == 0)
    rule.low_price.reset();
  else
    rule.low_price = std::min(p, q);
  return rule;
}

}  // namespace detail

// --- individual properties ----------------------------------------------

/// Closed-form payment of the logarithmic rule against direct quadrature of
/// gamma*f(gamma) + tail integral of f.
inline PropertyResult property_fact_d1(const VerifyOptions& opt) {
  std::size_t samples = opt.samples ? opt.samples : 400;
  Rng rng = Rng::stream(opt.seed, {detail::fnv1a("fact-d1")});
  double worst = 0.0;
  for (std::size_t s = 0; s < samples; ++s) {
    AgnRule rule{std::exp(rng.uniform(std::log(0.05), std::log(20.0)))};
    double end = rule.support_end();
    double gamma = rng.uniform(0.0, end * 0.999);
    double tail = detail::integrate([&](double z) { return rule.evaluate(z); }, gamma, end, 1e-12);
    double reference = gamma * rule.evaluate(gamma) + tail;
    double err = std::abs(rule.payment_per_utility(gamma) - reference) / std::max(1e-30, reference);
    worst = std::max(worst, err);
  }
  std::ostringstream detail;
  detail << "max rel err " << worst << " over " << samples << " samples (tol 1e-8)";
  return {"fact-d1", worst <= 1e-8, detail.str()};
}

/// lambert_w_minus1(w e^w) returns w across the branch.
inline PropertyResult property_lambert_w(const VerifyOptions& opt) {
  std::size_t samples = opt.samples ? opt.samples : 1000;
  Rng rng = Rng::stream(opt.seed, {detail::fnv1a("lambert-w")});
  std::vector<double> ws = {-1.0, -1.0001, -1.001, -1.01, -1.1, -1.5, -2.0, -3.0, -5.0, -10.0, -20.0, -30.0};
  for (std::size_t s = 0; s < samples; ++s) ws.push_back(rng.uniform(-30.0, -1.0));
  double worst = 0.0;
  for (double w : ws) {
    double x = w * std::exp(w);
    double back = lambert_w_minus1(x);
    worst = std::max(worst, std::abs(back - w) / std::abs(w));
  }
  bool domain_ok = true;
  try {
    lambert_w_minus1(0.5);
    domain_ok = false;
  } catch (const std::domain_error&) {
  }
  try {
    lambert_w_minus1(-0.5);
    domain_ok = false;
  } catch (const std::domain_error&) {
  }
  std::ostringstream detail;
  detail << "max rel err " << worst << " (tol 1e-10), domain checks "
         << (domain_ok ? "ok" : "FAILED");
  return {"lambert-w", worst <= 1e-10 && domain_ok, detail.str()};
}

/// Direct Myerson totals equal the two-price lottery totals.
inline PropertyResult property_accounting(const VerifyOptions& opt) {
  std::size_t samples = opt.samples ? opt.samples : 500;
  Rng rng = Rng::stream(opt.seed, {detail::fnv1a("accounting")});
  double worst = 0.0;
  for (std::size_t s = 0; s < samples; ++s) {
    Market market = detail::random_market(rng, opt.n ? opt.n : 60);
    TwoStepRule rule = detail::random_rule(rng);
    auto [u1, b1] = rule_totals(rule, market.sellers());
    auto [u2, b2] = rule_totals_via_prices(rule, market.sellers());
    worst = std::max(worst, std::abs(u1 - u2) / std::max(1.0, std::abs(u1)));
    worst = std::max(worst, std::abs(b1 - b2) / std::max(1.0, std::abs(b1)));
    double prob = 0.0;
    for (const PriceOffer& offer : lottery_decompose(rule)) prob += offer.probability;
    worst = std::max(worst, std::abs(prob - 1.0));
  }
  std::ostringstream detail;
  detail << "max rel err " << worst << " over " << samples << " rules (tol 1e-10)";
  return {"accounting", worst <= 1e-10, detail.str()};
}

/// Reporting the true cost-per-utility maximizes a seller's profit over a
/// grid of alternative reports.
inline PropertyResult property_truthfulness(const VerifyOptions& opt) {
  std::size_t samples = opt.samples ? opt.samples : 200;
  Rng rng = Rng::stream(opt.seed, {detail::fnv1a("truthfulness")});
  bool ok = true;
  for (std::size_t s = 0; s < samples && ok; ++s) {
    TwoStepRule rule = detail::random_rule(rng);
    std::vector<double> grid = {0.0, rule.high_price, rule.high_price * 0.999,
                                rule.high_price * 1.001, rule.high_price + 1.0};
    if (rule.low_price) {
      grid.push_back(*rule.low_price);
      grid.push_back(*rule.low_price * 0.999);
      grid.push_back(*rule.low_price * 1.001);
    }
    for (int i = 0; i < 40; ++i) grid.push_back(rng.uniform(0.0, rule.high_price * 1.5));
    for (double truth : grid) {
      double at_truth = rule.payment_per_utility(truth) - rule.evaluate(truth) * truth;
      for (double report : grid) {
        double profit = rule.payment_per_utility(report) - rule.evaluate(report) * truth;
        if (profit > at_truth + 1e-9) ok = false;
      }
      // individual rationality at the truth
      if (rule.evaluate(truth) > 0.0 && at_truth < -1e-12) ok = false;
    }
  }
  return {"truthfulness", ok, ok ? "profit maximized at truthful report" : "profitable deviation found"};
}

/// Total payment never exceeds the budget, on any realization.
inline PropertyResult property_budget_feasibility(const VerifyOptions& opt) {
  std::size_t samples = opt.samples ? opt.samples : 1000;
  Rng rng = Rng::stream(opt.seed, {detail::fnv1a("budget-feasibility")});
  const MechanismKind kinds[] = {MechanismKind::greedy, MechanismKind::rs_greedy,
                                 MechanismKind::agn, MechanismKind::cutoff};
  double worst = -1.0;
  for (std::size_t s = 0; s < samples; ++s) {
    Market market = detail::random_market(rng, opt.n ? opt.n : 60);
    double budget = rng.uniform(0.0, 2.0 * std::max(market.total_cost(), 1.0));
    MechanismOutcome outcome = run_mechanism(kinds[s % 4], market, budget, rng.next_u64());
    worst = std::max(worst, outcome.total_payment - budget);
  }
  std::ostringstream detail;
  detail << "max overshoot " << worst << " over " << samples << " tuples (tol 1e-9)";
  return {"budget-feasibility", worst <= 1e-9, detail.str()};
}

/// Fractional knapsack is concave in the budget.
inline PropertyResult property_knapsack_concavity(const VerifyOptions& opt) {
  std::size_t samples = opt.samples ? opt.samples : 200;
  Rng rng = Rng::stream(opt.seed, {detail::fnv1a("knapsack-concavity")});
  bool ok = true;
  for (std::size_t s = 0; s < samples && ok; ++s) {
    Market market = detail::random_market(rng, opt.n ? opt.n : 60);
    double budget = rng.uniform(0.0, 1.5 * std::max(market.total_cost(), 1.0));
    double full = non_ic_optimum(market, budget).utility;
    double prev = full;
    for (int k = 1; k <= 9; ++k) {
      double theta = 0.1 * k;
      double shrunk = non_ic_optimum(market, (1.0 - theta) * budget).utility;
      if (shrunk < (1.0 - theta) * full - 1e-9) ok = false;
      if (shrunk > prev + 1e-9) ok = false;  // monotone non-decreasing in budget
      prev = shrunk;
    }
  }
  return {"knapsack-concavity", ok,
          ok ? "shrunk budgets keep a proportional utility share" : "concavity violated"};
}

/// Fractional optimum dominates the exact 0/1 optimum and matches it when the
/// fractional solution is integral.
inline PropertyResult property_knapsack_exact(const VerifyOptions& opt) {
  std::size_t samples = opt.samples ? opt.samples : 300;
  Rng rng = Rng::stream(opt.seed, {detail::fnv1a("knapsack-exact")});
  bool ok = true;
  for (std::size_t s = 0; s < samples && ok; ++s) {
    std::size_t n = 1 + static_cast<std::size_t>(rng.below(12));
    std::vector<Seller> sellers;
    for (std::size_t i = 0; i < n; ++i)
      sellers.push_back({static_cast<double>(rng.below(9) + (rng.below(5) == 0 ? 0 : 1)),
                         static_cast<double>(1 + rng.below(5))});
    Market market(std::move(sellers));
    double budget = static_cast<double>(rng.below(24));
    KnapsackSolution frac = non_ic_optimum(market, budget);
    double best01 = 0.0;  // brute force over all subsets
    std::size_t count = market.size();
    for (std::uint64_t mask = 0; mask < (1ull << count); ++mask) {
      double cost = 0.0, util = 0.0;
      for (std::size_t i = 0; i < count; ++i)
        if (mask & (1ull << i)) {
          cost += market.sellers()[i].cost;
          util += market.sellers()[i].utility;
        }
      if (cost <= budget) best01 = std::max(best01, util);
    }
    if (frac.utility < best01 - 1e-9) ok = false;
    bool integral = true;
    for (double f : frac.fractions)
      if (f > 1e-12 && f < 1.0 - 1e-12) integral = false;
    if (integral && std::abs(frac.utility - best01) > 1e-9) ok = false;
  }
  return {"knapsack-exact", ok,
          ok ? "fractional >= 0/1, equal when integral" : "disagrees with brute force"};
}

/// Greedy dominates the cutoff rule, the logarithmic rule, and every
/// budget-feasible two-step rule on a price grid over observed
/// cost-per-utility values.
inline PropertyResult property_instance_optimality(const VerifyOptions& opt) {
  std::size_t samples = opt.samples ? opt.samples : 100;
  std::size_t max_n = opt.n ? opt.n : 50;
  Rng rng = Rng::stream(opt.seed, {detail::fnv1a("instance-optimality")});
  double worst_excess = -1.0;
  for (std::size_t s = 0; s < samples; ++s) {
    Market market = detail::random_market(rng, max_n);
    double budget = rng.uniform(0.1, 1.2 * std::max(market.total_cost(), 1.0));
    double greedy_utility = greedy(market, budget).outcome.total_utility;
    double slack = 1e-9 * std::max(1.0, greedy_utility);

    double best_rival = std::max(cutoff(market, budget).outcome.total_utility,
                                 agn(market, budget).outcome.total_utility);

    // price grid: prefix utilities over distinct gammas
    detail::MergedMarket merged = detail::merge_by_gamma(market);
    std::vector<double> prices = {0.0};
    prices.insert(prices.end(), merged.gamma.begin(), merged.gamma.end());
    std::vector<double> below = {merged.zero_utility};  // utility at gamma <= price
    for (double u : merged.utility) below.push_back(below.back() + u);
    for (std::size_t hi = 0; hi < prices.size(); ++hi) {
      for (std::size_t lo = 0; lo <= hi + 1; ++lo) {
        bool absent = lo > hi;  // one extra slot encodes the dropped low price
        double u_lo = absent ? 0.0 : below[lo];
        double b_lo = absent ? 0.0 : prices[lo] * below[lo];
        for (int ti = 0; ti < 20; ++ti) {
          double t = 0.05 * ti;
          double utility = (1.0 - t) * u_lo + t * below[hi];
          double payment = (1.0 - t) * b_lo + t * prices[hi] * below[hi];
          if (payment <= budget * (1.0 + 1e-12)) best_rival = std::max(best_rival, utility);
        }
      }
    }
    worst_excess = std::max(worst_excess, best_rival - greedy_utility - slack);
  }
  std::ostringstream detail;
  detail << "max rival excess " << worst_excess << " over " << samples << " markets (tol 1e-9 slack)";
  return {"instance-optimality", worst_excess <= 0.0, detail.str()};
}

// --- registry --------------------------------------------------------------

inline const std::vector<std::string>& verify_property_names() {
  static const std::vector<std::string> names = {
      "fact-d1",        "lambert-w",          "accounting",     "truthfulness",
      "budget-feasibility", "knapsack-concavity", "knapsack-exact", "instance-optimality"};
  return names;
}

inline PropertyResult verify_property(const std::string& name, const VerifyOptions& opt) {
  if (name == "fact-d1") return property_fact_d1(opt);
  if (name == "lambert-w") return property_lambert_w(opt);
  if (name == "accounting") return property_accounting(opt);
  if (name == "truthfulness") return property_truthfulness(opt);
  if (name == "budget-feasibility") return property_budget_feasibility(opt);
  if (name == "knapsack-concavity") return property_knapsack_concavity(opt);
  if (name == "knapsack-exact") return property_knapsack_exact(opt);
  if (name == "instance-optimality") return property_instance_optimality(opt);
  throw std::invalid_argument("unknown property: " + name);
}

inline std::vector<PropertyResult> verify_all(const VerifyOptions& opt) {
  std::vector<PropertyResult> results;
  for (const std::string& name : verify_property_names()) results.push_back(verify_property(name, opt));
  return results;
}

}  // namespace procure
