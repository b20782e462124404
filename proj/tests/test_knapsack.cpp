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

#include <cmath>

#include <catch2/catch_amalgamated.hpp>

#include "procure/knapsack.hpp"
#include "procure/mechanisms.hpp"
#include "procure/rng.hpp"

using namespace procure;

TEST_CASE("non-IC optimum on simple instances") {
  SECTION("budget covers everything") {
    Market market({{1, 1}, {1, 1}, {1, 1}, {1, 1}});
    KnapsackSolution sol = non_ic_optimum(market, 4.0);
    CHECK(sol.utility == Catch::Approx(4.0));
    CHECK(sol.spend == Catch::Approx(4.0));
  }
  SECTION("fractional marginal item") {
    Market market({{1, 1}, {2, 1}});
    KnapsackSolution sol = non_ic_optimum(market, 2.0);
    CHECK(sol.utility == Catch::Approx(1.5));
    CHECK(sol.fractions[0] == Catch::Approx(1.0));
    CHECK(sol.fractions[1] == Catch::Approx(0.5));
    CHECK(sol.spend == Catch::Approx(2.0));
  }
  SECTION("zero budget buys exactly the free sellers") {
    Market market({{0, 2}, {0, 1}, {1, 5}});
    KnapsackSolution sol = non_ic_optimum(market, 0.0);
    CHECK(sol.utility == Catch::Approx(3.0));
    CHECK(sol.spend == 0.0);
  }
  SECTION("equal-gamma group splits proportionally") {
    Market market({{2, 2}, {1, 1}, {10, 1}});
    KnapsackSolution sol = non_ic_optimum(market, 1.5);
    CHECK(sol.fractions[0] == Catch::Approx(0.5));
    CHECK(sol.fractions[1] == Catch::Approx(0.5));
    CHECK(sol.fractions[2] == 0.0);
    CHECK(sol.utility == Catch::Approx(1.5));
  }
}

TEST_CASE("competitive ratio") {
  Market market({{1, 1}, {2, 1}});
  SECTION("optimal outcome gives 1") {
    KnapsackSolution opt = non_ic_optimum(market, 2.0);
    MechanismOutcome outcome;
    outcome.total_utility = opt.utility;
    CHECK(competitive_ratio(outcome, market, 2.0) == Catch::Approx(1.0));
  }
  SECTION("greedy on the two-seller example gives 8/9") {
    MechanismOutcome outcome = greedy(market, 2.0).outcome;
    CHECK(competitive_ratio(outcome, market, 2.0) == Catch::Approx(8.0 / 9.0).epsilon(1e-12));
  }
  SECTION("empty-value instance gives 1 by convention") {
    Market costly({{5, 1}});
    MechanismOutcome outcome = greedy(costly, 0.0).outcome;
    CHECK(competitive_ratio(outcome, costly, 0.0) == 1.0);
  }
}

TEST_CASE("knapsack is concave and monotone in the budget") {
  Rng rng(7211);
  for (int trial = 0; trial < 60; ++trial) {
    std::vector<Seller> sellers;
    std::size_t n = 1 + rng.below(50);
    for (std::size_t i = 0; i < n; ++i)
      sellers.push_back({rng.below(5) == 0 ? 0.0 : rng.uniform(0.0, 9.0), rng.uniform(0.1, 2.0)});
    Market market(std::move(sellers));
    double budget = rng.uniform(0.0, 1.2 * market.total_cost());
    double full = non_ic_optimum(market, budget).utility;
    double prev = full;
    for (int k = 1; k <= 9; ++k) {
      double theta = 0.1 * k;
      double shrunk = non_ic_optimum(market, (1.0 - theta) * budget).utility;
      REQUIRE(shrunk >= (1.0 - theta) * full - 1e-9);
      REQUIRE(shrunk <= prev + 1e-9);
      prev = shrunk;
    }
  }
}

TEST_CASE("fractional optimum dominates brute-force 0/1 on small integer instances") {
  Rng rng(931);
  for (int trial = 0; trial < 200; ++trial) {
    std::size_t n = 1 + rng.below(12);
    std::vector<Seller> sellers;
    for (std::size_t i = 0; i < n; ++i)
      sellers.push_back({static_cast<double>(rng.below(9)), static_cast<double>(1 + rng.below(4))});
    Market market(std::move(sellers));
    double budget = static_cast<double>(rng.below(20));

    KnapsackSolution frac = non_ic_optimum(market, budget);
    double best01 = 0.0;
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
    REQUIRE(frac.utility >= best01 - 1e-9);
    bool integral = true;
    for (double f : frac.fractions)
      if (f > 1e-12 && f < 1.0 - 1e-12) integral = false;
    if (integral) REQUIRE(frac.utility == Catch::Approx(best01).margin(1e-9));
  }
}
