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

// The four procurement mechanisms under study:
//   greedy     instance-optimal uniform step rule (complete information)
//   rs_greedy  random-sampling proxy of greedy (private costs)
//   agn        logarithmic allocation rule, worst-case optimal
//   cutoff     best single posted price with marginal rationing
//
// All of them pay through the truthful payment rule of their allocation
// function and never exceed the budget on any realization.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <vector>

#include "procure/core.hpp"
#include "procure/rng.hpp"

namespace procure {

struct GreedyResult {
  TwoStepRule rule;
  MechanismOutcome outcome;
};

namespace detail {

// Prefix view of a merged market used by the greedy step search:
//   S_k = total utility of groups 1..k,
//   A_k = gamma_k * (zero_utility + S_k).
// The full payment of raising the allocation to 1 on groups (i..j] is
// A_j - A_{i-1}, so the marginal utility per marginal payment of a step is
// the slope between the points (A_{i-1}, S_{i-1}) and (A_j, S_j). Greedy's
// step sequence is therefore the walk along the upper convex hull of these
// points; collinear vertices are kept so ties resolve to the smallest group
// index, matching the documented tie-break.
struct GreedyPrefixes {
  std::vector<double> spend;    // A_0..A_n'
  std::vector<double> utility;  // S_0..S_n'
};

inline GreedyPrefixes greedy_prefixes(const MergedMarket& merged) {
  std::size_t n = merged.gamma.size();
  GreedyPrefixes p;
  p.spend.resize(n + 1);
  p.utility.resize(n + 1);
  p.spend[0] = 0.0;
  p.utility[0] = 0.0;
  double running = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    running += merged.utility[k];
    p.utility[k + 1] = running;
    p.spend[k + 1] = merged.gamma[k] * (merged.zero_utility + running);
  }
  return p;
}

inline std::vector<std::size_t> upper_hull_keep_collinear(const GreedyPrefixes& p) {
  std::vector<std::size_t> hull;
  for (std::size_t k = 0; k < p.spend.size(); ++k) {
    while (hull.size() >= 2) {
      std::size_t a = hull[hull.size() - 2], b = hull[hull.size() - 1];
      // drop b when it lies strictly below the chord a -> k
      double lhs = (p.utility[k] - p.utility[b]) * (p.spend[b] - p.spend[a]);
      double rhs = (p.utility[b] - p.utility[a]) * (p.spend[k] - p.spend[b]);
      if (lhs > rhs)
        hull.pop_back();
      else
        break;
    }
    hull.push_back(k);
  }
  return hull;
}

inline TwoStepRule greedy_rule(const MergedMarket& merged, double budget) {
  const std::size_t n = merged.gamma.size();
  TwoStepRule rule;
  rule.low_price = 0.0;  // the zero-cost mass is always fully bought
  if (n == 0) return rule;

  GreedyPrefixes p = greedy_prefixes(merged);
  std::vector<std::size_t> hull = upper_hull_keep_collinear(p);

  double remaining = budget;
  std::size_t prev = 0;  // last fully covered vertex (group index)
  for (std::size_t h = 1; h < hull.size(); ++h) {
    std::size_t v = hull[h];
    double step_cost = p.spend[v] - p.spend[prev];
    if (remaining > step_cost) {
      remaining -= step_cost;
      prev = v;
      continue;
    }
    double t = remaining / step_cost;
    if (t >= 1.0) {  // budget exactly covers the step
      prev = v;
      break;
    }
    rule.t = t;
    rule.low_price = prev >= 1 ? merged.gamma[prev - 1] : 0.0;
    rule.high_price = merged.gamma[v - 1];
    return rule;
  }
  // everything up to the last reached vertex is fully bought
  double top = prev >= 1 ? merged.gamma[prev - 1] : 0.0;
  rule.t = 0.0;
  rule.low_price = top;
  rule.high_price = top;
  return rule;
}

inline MechanismOutcome apply_rule(const TwoStepRule& rule, const Market& market) {
  const auto& sellers = market.sellers();
  std::vector<double> fractions(sellers.size()), payments(sellers.size());
  for (std::size_t i = 0; i < sellers.size(); ++i) {
    double g = sellers[i].gamma();
    fractions[i] = rule.evaluate(g);
    payments[i] = rule.payment_per_utility(g) * sellers[i].utility;
  }
  return MechanismOutcome::from_parts(std::move(fractions), std::move(payments), market);
}

}  // namespace detail

/// Complete-information greedy: merges equal cost-per-utility sellers, then
/// repeatedly raises the allocation to 1 on the group range with the best
/// marginal utility per marginal payment while the budget covers the full
/// step, and finishes with one fractional step that lands exactly on the
/// budget. The resulting allocation is a two-step rule; payments follow it
/// through the truthful payment formula on the original sellers.
inline GreedyResult greedy(const Market& market, double budget) {
  if (!(budget >= 0.0)) throw std::invalid_argument("greedy: budget must be >= 0");
  detail::MergedMarket merged = detail::merge_by_gamma(market);
  TwoStepRule rule = detail::greedy_rule(merged, budget);
  return {rule, detail::apply_rule(rule, market)};
}

/// Parameters of the random-sampling proxy. All-zero parameters (the
/// benchmark setting) skip the pre-purchase and truncation steps entirely.
struct RsGreedyParams {
  double epsilon1 = 0.0;  // budget share of the pre-purchase step
  double delta1 = 0.0;    // per-half budget shrink while fitting rules
  double eta = 0.0;       // truncation threshold scale
  std::size_t top_c = 0;  // sellers pre-purchased by highest utility
  std::uint64_t seed = 0;
};

/// Random-Sampling-Greedy: pre-purchase the top utilities, split the rest in
/// half uniformly at random, fit a greedy rule on each half with budget
/// (1-delta1)B/2, truncate, then cross-apply each rule to the opposite half
/// in ascending cost-per-utility order until that half's spending cap
/// (1-epsilon1)B/2 is hit; the seller at the cap is bought fractionally so
/// spending lands exactly on it.
inline MechanismOutcome rs_greedy(const Market& market, double budget,
                                  const RsGreedyParams& params) {
  if (!(budget >= 0.0)) throw std::invalid_argument("rs_greedy: budget must be >= 0");
  if (!(params.epsilon1 >= 0.0 && params.epsilon1 < 1.0) ||
      !(params.delta1 >= 0.0 && params.delta1 < 1.0) || !(params.eta >= 0.0 && params.eta < 1.0))
    throw std::invalid_argument("rs_greedy: epsilon1, delta1, eta must lie in [0,1)");
  const auto& sellers = market.sellers();
  const std::size_t n = sellers.size();
  if (params.top_c > n) throw std::invalid_argument("rs_greedy: top_c exceeds market size");

  std::vector<double> fractions(n, 0.0), payments(n, 0.0);

  // Pre-purchase: offer epsilon1*B/C to each of the top-C utility sellers.
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return sellers[a].utility > sellers[b].utility;
  });
  double top_utility = 0.0;
  std::vector<bool> in_top(n, false);
  if (params.top_c > 0) {
    double offer = params.epsilon1 * budget / static_cast<double>(params.top_c);
    for (std::size_t k = 0; k < params.top_c; ++k) {
      std::size_t i = order[k];
      in_top[i] = true;
      top_utility += sellers[i].utility;
      if (sellers[i].cost <= offer) {  // posted price; the seller may decline
        fractions[i] = 1.0;
        payments[i] = offer;
      }
    }
  }

  // Uniformly random even split of the rest; the extra seller goes to X.
  std::vector<std::size_t> rest;
  rest.reserve(n);
  for (std::size_t i = 0; i < n; ++i)
    if (!in_top[i]) rest.push_back(i);
  Rng rng = Rng::stream(params.seed, {0x7273677265656479ull});
  rng.shuffle(rest);
  std::size_t half = (rest.size() + 1) / 2;
  std::vector<std::size_t> groups[2];
  groups[0].assign(rest.begin(), rest.begin() + static_cast<std::ptrdiff_t>(half));
  groups[1].assign(rest.begin() + static_cast<std::ptrdiff_t>(half), rest.end());

  // Utility below a price over all non-pre-purchased sellers, for truncation.
  auto rest_utility_below = [&](double price) {
    double u = 0.0;
    for (std::size_t i : rest)
      if (sellers[i].gamma() <= price) u += sellers[i].utility;
    return u;
  };

  double fit_budget = (1.0 - params.delta1) * budget / 2.0;
  double cap = (1.0 - params.epsilon1) * budget / 2.0;

  for (int side = 0; side < 2; ++side) {
    const auto& source = groups[side];
    const auto& target = groups[1 - side];
    if (source.empty() || target.empty()) continue;

    std::vector<Seller> source_sellers;
    source_sellers.reserve(source.size());
    for (std::size_t i : source) source_sellers.push_back(sellers[i]);
    TwoStepRule rule = detail::greedy_rule(detail::merge_by_gamma(Market(source_sellers)), fit_budget);

    // Truncation: drop the low price when the utility it reaches outside the
    // pre-purchased set is small relative to the pre-purchased utility.
    if (params.eta > 0.0 && params.top_c > 0 && rule.low_price) {
      double threshold = top_utility / (params.eta * static_cast<double>(params.top_c));
      if (rest_utility_below(*rule.low_price) < threshold) rule.low_price.reset();
    }

    // Sequential cross-application in ascending cost-per-utility order.
    std::vector<std::size_t> targets = target;
    std::stable_sort(targets.begin(), targets.end(), [&](std::size_t a, std::size_t b) {
      return sellers[a].gamma() < sellers[b].gamma();
    });
    double spent = 0.0;
    for (std::size_t i : targets) {
      double g = sellers[i].gamma();
      double f = rule.evaluate(g);
      double pay = rule.payment_per_utility(g) * sellers[i].utility;
      if (f <= 0.0) continue;
      if (pay <= 0.0) {
        fractions[i] = f;
        continue;
      }
      if (spent + pay > cap) {
        double scale = (cap - spent) / pay;
        fractions[i] = scale * f;
        payments[i] = cap - spent;
        spent = cap;
        break;
      }
      fractions[i] = f;
      payments[i] = pay;
      spent += pay;
    }
  }

  return MechanismOutcome::from_parts(std::move(fractions), std::move(payments), market);
}

/// Allocation rule of the logarithmic mechanism at price scale r:
/// f(g) = ln(e - g/r) below the support end r(e-1), zero beyond. Its
/// truthful payment has the closed form r*e*f(g) - r*(e-1) + g.
struct AgnRule {
  double r = 0.0;

  double support_end() const { return r * (std::numbers::e - 1.0); }

  double evaluate(double gamma) const {
    if (r <= 0.0 || gamma >= support_end()) return 0.0;
    return std::log(std::numbers::e - gamma / r);
  }

  double payment_per_utility(double gamma) const {
    if (r <= 0.0 || gamma >= support_end()) return 0.0;
    return r * std::numbers::e * evaluate(gamma) - r * (std::numbers::e - 1.0) + gamma;
  }
};

struct AgnResult {
  AgnRule rule;
  MechanismOutcome outcome;
  // True when every seller has zero cost, where the price scale is
  // irrelevant: everything is bought and nothing is paid.
  bool degenerate = false;
};

namespace detail {

inline double agn_total_payment(const Market& market, double r) {
  AgnRule rule{r};
  double total = 0.0;
  for (const Seller& s : market.sellers()) total += rule.payment_per_utility(s.gamma()) * s.utility;
  return total;
}

}  // namespace detail

/// Logarithmic-rule mechanism: picks the largest price scale r whose total
/// truthful payment fits the budget (payment is continuous and strictly
/// increasing in r, so a doubling bracket plus bisection finds it), then buys
/// f_r of every item.
inline AgnResult agn(const Market& market, double budget) {
  if (!(budget >= 0.0)) throw std::invalid_argument("agn: budget must be >= 0");
  const auto& sellers = market.sellers();

  double max_gamma = 0.0;
  for (const Seller& s : sellers) max_gamma = std::max(max_gamma, s.gamma());
  if (market.empty() || max_gamma <= 0.0) {
    // All costs zero: r is irrelevant; buy everything, pay nothing.
    std::vector<double> fractions(sellers.size(), 1.0), payments(sellers.size(), 0.0);
    AgnResult res{AgnRule{0.0}, MechanismOutcome::from_parts(std::move(fractions), std::move(payments), market),
                  true};
    return res;
  }

  double lo = 0.0;  // payment 0 <= budget
  double hi = std::max({max_gamma / (std::numbers::e - 1.0), budget / market.total_utility(), 1e-300});
  int guard = 0;
  while (detail::agn_total_payment(market, hi) <= budget && guard++ < 4000) hi *= 2.0;
  for (int it = 0; it < 200 && (hi - lo) > 1e-12 * hi; ++it) {
    double mid = 0.5 * (lo + hi);
    if (detail::agn_total_payment(market, mid) <= budget)
      lo = mid;
    else
      hi = mid;
  }

  AgnRule rule{lo};
  std::vector<double> fractions(sellers.size()), payments(sellers.size());
  for (std::size_t i = 0; i < sellers.size(); ++i) {
    double g = sellers[i].gamma();
    // zero-cost sellers sit at f(0)=1 for every r; at r=0 (zero budget) the
    // limiting rule still buys them and pays nothing
    if (g <= 0.0 && rule.r <= 0.0) {
      fractions[i] = 1.0;
      payments[i] = 0.0;
      continue;
    }
    fractions[i] = rule.evaluate(g);
    payments[i] = rule.payment_per_utility(g) * sellers[i].utility;
  }
  return {rule, MechanismOutcome::from_parts(std::move(fractions), std::move(payments), market), false};
}

struct CutoffResult {
  double price = 0.0;
  MechanismOutcome outcome;
};

/// Best single posted price with proper tie breaking: candidate prices are
/// the distinct cost-per-utility values (plus zero); at price p every seller
/// strictly below sells fully at p per utility, and the group exactly at p is
/// rationed proportionally so the spend lands on the budget.
inline CutoffResult cutoff(const Market& market, double budget) {
  if (!(budget >= 0.0)) throw std::invalid_argument("cutoff: budget must be >= 0");
  const auto& sellers = market.sellers();

  std::vector<std::size_t> order(sellers.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return sellers[a].gamma() < sellers[b].gamma();
  });

  double best_utility = 0.0, best_price = 0.0, best_alpha = 1.0;
  std::size_t best_end = 0;  // sellers strictly below the best price, in order[]

  double below_utility = 0.0;
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    double g = sellers[order[i]].gamma();
    double group_utility = 0.0;
    while (j < order.size() && gamma_equal(g, sellers[order[j]].gamma())) {
      group_utility += sellers[order[j]].utility;
      ++j;
    }
    double utility, alpha;
    if (g <= 0.0) {
      utility = below_utility + group_utility;
      alpha = 1.0;
    } else if (g * below_utility > budget) {
      // sellers strictly below the price cannot be rationed; infeasible and
      // dominated by a smaller candidate price
      below_utility += group_utility;
      i = j;
      continue;
    } else {
      double affordable = budget / g - below_utility;
      alpha = group_utility > 0.0 ? std::clamp(affordable / group_utility, 0.0, 1.0) : 1.0;
      utility = below_utility + alpha * group_utility;
    }
    if (utility > best_utility * (1.0 + 1e-15) + 1e-300) {
      best_utility = utility;
      best_price = g;
      best_alpha = alpha;
      best_end = i;
    }
    below_utility += group_utility;
    i = j;
  }

  std::vector<double> fractions(sellers.size(), 0.0), payments(sellers.size(), 0.0);
  if (best_utility > 0.0) {
    for (std::size_t k = 0; k < order.size(); ++k) {
      std::size_t idx = order[k];
      double g = sellers[idx].gamma();
      if (!gamma_equal(g, best_price) && g > best_price) break;
      double f = (k < best_end || !gamma_equal(g, best_price)) ? 1.0 : best_alpha;
      // everything at or below the cutoff is paid the cutoff price
      fractions[idx] = f;
      payments[idx] = f * sellers[idx].utility * best_price;
    }
  }
  return {best_price, MechanismOutcome::from_parts(std::move(fractions), std::move(payments), market)};
}

enum class MechanismKind { greedy, rs_greedy, agn, cutoff };

inline const char* to_string(MechanismKind kind) {
  switch (kind) {
    case MechanismKind::greedy: return "greedy";
    case MechanismKind::rs_greedy: return "rs_greedy";
    case MechanismKind::agn: return "agn";
    case MechanismKind::cutoff: return "cutoff";
  }
  return "?";
}

inline MechanismKind mechanism_from_string(const std::string& name) {
  if (name == "greedy") return MechanismKind::greedy;
  if (name == "rs_greedy" || name == "rs-greedy") return MechanismKind::rs_greedy;
  if (name == "agn") return MechanismKind::agn;
  if (name == "cutoff") return MechanismKind::cutoff;
  throw std::invalid_argument("unknown mechanism: " + name);
}

/// Uniform entry point used by the benchmark harness. The seed only matters
/// for rs_greedy; the other three are deterministic.
inline MechanismOutcome run_mechanism(MechanismKind kind, const Market& market, double budget,
                                      std::uint64_t seed) {
  switch (kind) {
    case MechanismKind::greedy: return greedy(market, budget).outcome;
    case MechanismKind::rs_greedy: {
      RsGreedyParams params;
      params.seed = seed;
      return rs_greedy(market, budget, params);
    }
    case MechanismKind::agn: return agn(market, budget).outcome;
    case MechanismKind::cutoff: return cutoff(market, budget).outcome;
  }
  throw std::logic_error("unreachable");
}

}  // namespace procure
