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

// Fractional knapsack benchmark: the utility a buyer with public costs could
// extract. Every competitive ratio in this project is measured against it.

#include <algorithm>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "procure/core.hpp"

namespace procure {

struct KnapsackSolution {
  double utility = 0.0;
  std::vector<double> fractions;  // per seller, in market order
  double spend = 0.0;
};

/// Best utility achievable with public costs: fill by ascending cost-per-
/// utility, splitting the one marginal gamma-group proportionally. Budget 0
/// still buys every zero-cost seller.
inline KnapsackSolution non_ic_optimum(const Market& market, double budget) {
  if (!(budget >= 0.0)) throw std::invalid_argument("non_ic_optimum: budget must be >= 0");
  const auto& sellers = market.sellers();
  KnapsackSolution sol;
  sol.fractions.assign(sellers.size(), 0.0);

  std::vector<std::size_t> order(sellers.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return sellers[a].gamma() < sellers[b].gamma();
  });

  double remaining = budget;
  std::size_t i = 0;
  while (i < order.size()) {
    // gamma-group [i, j)
    std::size_t j = i;
    double group_cost = 0.0, group_utility = 0.0;
    double g = sellers[order[i]].gamma();
    while (j < order.size() && gamma_equal(g, sellers[order[j]].gamma())) {
      group_cost += sellers[order[j]].cost;
      group_utility += sellers[order[j]].utility;
      ++j;
    }
    if (group_cost <= remaining) {
      for (std::size_t k = i; k < j; ++k) sol.fractions[order[k]] = 1.0;
      sol.utility += group_utility;
      sol.spend += group_cost;
      remaining -= group_cost;
    } else {
      // proportional split across the tied group
      double x = group_cost > 0.0 ? remaining / group_cost : 1.0;
      for (std::size_t k = i; k < j; ++k) sol.fractions[order[k]] = x;
      sol.utility += x * group_utility;
      sol.spend += remaining;
      remaining = 0.0;
      break;
    }
    i = j;
  }
  return sol;
}

/// Mechanism utility over the non-IC optimum, in [0,1]. When the instance has
/// no value at all (optimum 0), both sides are 0 and the ratio is 1.
inline double competitive_ratio(const MechanismOutcome& outcome, const Market& market,
                                double budget) {
  double opt = non_ic_optimum(market, budget).utility;
  if (opt <= 0.0) return 1.0;
  double r = outcome.total_utility / opt;
  return std::clamp(r, 0.0, 1.0);
}

}  // namespace procure
