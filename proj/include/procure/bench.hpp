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

// Seeded Monte-Carlo harness over mechanism x instance grids. Each run draws
// one instance that all mechanisms see (paired comparison); RS-Greedy's
// internal randomness comes from a stream independent of instance
// generation. Runs fan out across threads and reduce in run order, so output
// is identical for any thread count.

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "procure/core.hpp"
#include "procure/instances.hpp"
#include "procure/knapsack.hpp"
#include "procure/mechanisms.hpp"

namespace procure {

namespace detail {

inline std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xCBF29CE484222325ull;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001B3ull;
  }
  return h;
}

template <class Fn>
inline void parallel_runs(std::size_t count, unsigned threads, Fn&& fn) {
  unsigned workers = threads == 0 ? std::max(1u, std::thread::hardware_concurrency()) : threads;
  workers = std::min<unsigned>(workers, count == 0 ? 1u : static_cast<unsigned>(count));
  std::atomic<std::size_t> cursor{0};
  std::vector<std::exception_ptr> errors(count);
  auto work = [&] {
    for (;;) {
      std::size_t i = cursor.fetch_add(1);
      if (i >= count) return;
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < workers; ++t) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  for (std::size_t i = 0; i < count; ++i) {
    if (!errors[i]) continue;
    try {
      std::rethrow_exception(errors[i]);
    } catch (const std::exception& e) {
      throw std::runtime_error("run " + std::to_string(i) + ": " + e.what());
    }
  }
}

struct RunningStats {
  double mean = 0.0, stddev = 0.0, min = 0.0, max = 0.0;
};

inline RunningStats summarize(const std::vector<double>& values) {
  RunningStats s;
  if (values.empty()) return s;
  double total = 0.0;
  s.min = s.max = values[0];
  for (double v : values) {
    total += v;
    s.min = std::min(s.min, v);
    s.max = std::max(s.max, v);
  }
  s.mean = total / static_cast<double>(values.size());
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.stddev = std::sqrt(ss / static_cast<double>(values.size() - 1));  // sample std
  }
  return s;
}

}  // namespace detail

struct ExperimentSpec {
  std::vector<MechanismKind> mechanisms;
  CostDistribution dist = CostDistribution::uniform(0.0, 1.0);
  std::size_t n = 0;
  std::optional<Market> fixed_market;  // overrides (dist, n) when set
  double budget = 0.0;
  std::size_t runs = 1;
  std::uint64_t seed = 42;
  std::string label;

  void validate() const {
    if (mechanisms.empty()) throw std::invalid_argument("experiment: no mechanisms");
    if (runs < 1) throw std::invalid_argument("experiment: runs must be >= 1");
    if (!(budget > 0.0)) throw std::invalid_argument("experiment: budget must be > 0");
    if (!fixed_market && n < 1) throw std::invalid_argument("experiment: n must be >= 1");
  }
};

struct BenchRow {
  MechanismKind mechanism = MechanismKind::greedy;
  std::string instance;
  std::size_t runs = 0;
  double mean_ratio = 0.0;
  double std_ratio = 0.0;
  double min_ratio = 0.0;
  double max_ratio = 0.0;
  double seconds = 0.0;  // informational; everything else is seed-deterministic
};

struct BenchReport {
  std::uint64_t seed = 42;
  std::vector<BenchRow> rows;

  void write_csv(std::ostream& out) const {
    out << "# seed=" << seed << "\n";
    out << "mechanism,instance,runs,mean_ratio,std_ratio,min_ratio,max_ratio,seconds\n";
    char buf[256];
    for (const BenchRow& r : rows) {
      std::snprintf(buf, sizeof(buf), "%s,%s,%zu,%.6f,%.6f,%.6f,%.6f,%.6f\n", to_string(r.mechanism),
                    r.instance.c_str(), r.runs, r.mean_ratio, r.std_ratio, r.min_ratio, r.max_ratio,
                    r.seconds);
      out << buf;
    }
  }
};

/// Runs every mechanism in the spec over `runs` seeded instances and
/// aggregates competitive ratios. Deterministic given the spec.
inline BenchReport run_experiment(const ExperimentSpec& spec, unsigned threads = 0) {
  spec.validate();
  const std::size_t n_mech = spec.mechanisms.size();
  std::vector<std::vector<double>> ratios(n_mech, std::vector<double>(spec.runs, 0.0));
  std::vector<std::atomic<std::int64_t>> nanos(n_mech);
  for (auto& a : nanos) a.store(0);

  detail::parallel_runs(spec.runs, threads, [&](std::size_t run) {
    Market market = spec.fixed_market
                        ? *spec.fixed_market
                        : gen_synthetic(spec.n, spec.dist,
                                        Rng::stream(spec.seed, {run, detail::fnv1a("instance")}).next_u64());
    for (std::size_t k = 0; k < n_mech; ++k) {
      auto start = std::chrono::steady_clock::now();
      std::uint64_t mech_seed =
          Rng::stream(spec.seed, {run, detail::fnv1a(to_string(spec.mechanisms[k]))}).next_u64();
      MechanismOutcome outcome = run_mechanism(spec.mechanisms[k], market, spec.budget, mech_seed);
      ratios[k][run] = competitive_ratio(outcome, market, spec.budget);
      auto stop = std::chrono::steady_clock::now();
      nanos[k].fetch_add(std::chrono::duration_cast<std::chrono::nanoseconds>(stop - start).count());
    }
  });

  BenchReport report;
  report.seed = spec.seed;
  std::string instance = !spec.label.empty()
                             ? spec.label
                             : (spec.fixed_market ? std::string("market")
                                                  : spec.dist.label() + ";n=" + std::to_string(spec.n));
  for (std::size_t k = 0; k < n_mech; ++k) {
    detail::RunningStats s = detail::summarize(ratios[k]);
    BenchRow row;
    row.mechanism = spec.mechanisms[k];
    row.instance = instance;
    row.runs = spec.runs;
    row.mean_ratio = s.mean;
    row.std_ratio = s.stddev;
    row.min_ratio = s.min;
    row.max_ratio = s.max;
    row.seconds = static_cast<double>(nanos[k].load()) * 1e-9;
    report.rows.push_back(std::move(row));
  }
  return report;
}

struct GapRow {
  std::string instance;
  std::size_t n = 0;
  std::size_t runs = 0;
  double mean_gap = 0.0;  // signed: greedy ratio minus rs_greedy ratio
  double std_gap = 0.0;
};

struct GapReport {
  std::uint64_t seed = 42;
  std::vector<GapRow> rows;

  void write_csv(std::ostream& out) const {
    out << "# seed=" << seed << "\n";
    out << "instance,n,runs,mean_gap,std_gap\n";
    char buf[192];
    for (const GapRow& r : rows) {
      std::snprintf(buf, sizeof(buf), "%s,%zu,%zu,%.6f,%.6f\n", r.instance.c_str(), r.n, r.runs,
                    r.mean_gap, r.std_gap);
      out << buf;
    }
  }
};

/// Greedy-vs-RS-Greedy ratio gap as the market grows, with the budget scaled
/// per seller. The gap is signed per run (RS-Greedy can win a lucky draw) and
/// shrinks toward zero as n grows.
inline GapReport gap_sweep(const CostDistribution& dist, const std::vector<std::size_t>& n_values,
                           double budget_per_seller, std::size_t runs, std::uint64_t seed,
                           unsigned threads = 0) {
  if (n_values.empty()) throw std::invalid_argument("gap_sweep: no market sizes");
  for (std::size_t i = 1; i < n_values.size(); ++i)
    if (n_values[i] <= n_values[i - 1])
      throw std::invalid_argument("gap_sweep: market sizes must be increasing");
  if (runs < 1) throw std::invalid_argument("gap_sweep: runs must be >= 1");

  GapReport report;
  report.seed = seed;
  for (std::size_t size_idx = 0; size_idx < n_values.size(); ++size_idx) {
    std::size_t n = n_values[size_idx];
    double budget = budget_per_seller * static_cast<double>(n);
    std::vector<double> gaps(runs, 0.0);
    detail::parallel_runs(runs, threads, [&](std::size_t run) {
      Market market = gen_synthetic(
          n, dist, Rng::stream(seed, {size_idx, run, detail::fnv1a("instance")}).next_u64());
      double greedy_ratio = competitive_ratio(greedy(market, budget).outcome, market, budget);
      RsGreedyParams params;
      params.seed = Rng::stream(seed, {size_idx, run, detail::fnv1a("rs_greedy")}).next_u64();
      double rs_ratio = competitive_ratio(rs_greedy(market, budget, params), market, budget);
      gaps[run] = greedy_ratio - rs_ratio;
    });
    detail::RunningStats s = detail::summarize(gaps);
    report.rows.push_back({dist.label(), n, runs, s.mean, s.stddev});
  }
  return report;
}

}  // namespace procure
