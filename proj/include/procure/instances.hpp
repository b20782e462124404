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

// Instance generators: synthetic unit-utility markets, the market family on
// which the logarithmic mechanism is stuck at its worst-case ratio for a
// whole range of budgets, the geometric market capping every mechanism's
// smoothed ratio, and sampling from worst-case market curves.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "procure/core.hpp"
#include "procure/rng.hpp"
#include "procure/smoothed.hpp"

namespace procure {

/// Cost distribution for synthetic markets. Draws are clamped at zero.
class CostDistribution {
 public:
  struct NormalComponent {
    double weight = 0.0, mu = 0.0, sigma = 0.0;
  };

  static CostDistribution normal(double mu, double sigma) {
    if (!(sigma > 0.0)) throw std::invalid_argument("normal: sigma must be > 0");
    CostDistribution d;
    d.kind_ = Kind::normal;
    d.a_ = mu;
    d.b_ = sigma;
    return d;
  }

  static CostDistribution uniform(double lo, double hi) {
    if (!(hi >= lo)) throw std::invalid_argument("uniform: hi must be >= lo");
    CostDistribution d;
    d.kind_ = Kind::uniform;
    d.a_ = lo;
    d.b_ = hi;
    return d;
  }

  static CostDistribution exponential(double mean) {
    if (!(mean > 0.0)) throw std::invalid_argument("exponential: mean must be > 0");
    CostDistribution d;
    d.kind_ = Kind::exponential;
    d.a_ = mean;
    return d;
  }

  static CostDistribution mixture(std::vector<NormalComponent> components) {
    if (components.empty()) throw std::invalid_argument("mixture: empty");
    double total = 0.0;
    for (const auto& c : components) {
      if (!(c.weight > 0.0)) throw std::invalid_argument("mixture: weights must be > 0");
      if (!(c.sigma > 0.0)) throw std::invalid_argument("mixture: sigma must be > 0");
      total += c.weight;
    }
    CostDistribution d;
    d.kind_ = Kind::mixture;
    d.components_ = std::move(components);
    for (auto& c : d.components_) c.weight /= total;
    return d;
  }

  double sample(Rng& rng) const {
    double draw = 0.0;
    switch (kind_) {
      case Kind::normal: draw = rng.normal(a_, b_); break;
      case Kind::uniform: draw = rng.uniform(a_, b_); break;
      case Kind::exponential: draw = rng.exponential(a_); break;
      case Kind::mixture: {
        double u = rng.uniform();
        double acc = 0.0;
        const NormalComponent* pick = &components_.back();
        for (const auto& c : components_) {
          acc += c.weight;
          if (u < acc) {
            pick = &c;
            break;
          }
        }
        draw = rng.normal(pick->mu, pick->sigma);
        break;
      }
    }
    return std::max(draw, 0.0);
  }

  std::string label() const {
    std::ostringstream out;
    switch (kind_) {
      case Kind::normal: out << "normal(" << a_ << ";" << b_ << ")"; break;
      case Kind::uniform: out << "uniform(" << a_ << ";" << b_ << ")"; break;
      case Kind::exponential: out << "exp(" << a_ << ")"; break;
      case Kind::mixture:
        out << "mix(";
        for (std::size_t i = 0; i < components_.size(); ++i) {
          if (i) out << "+";
          out << components_[i].weight << "*normal(" << components_[i].mu << ";"
              << components_[i].sigma << ")";
        }
        out << ")";
        break;
    }
    return out.str();
  }

  /// Accepts "normal:MU,SIGMA", "uniform:LO,HI", "exp:MEAN" and
  /// "mixnormal:W,MU,SIGMA;W,MU,SIGMA;...".
  static CostDistribution parse(const std::string& text) {
    std::size_t colon = text.find(':');
    if (colon == std::string::npos) throw std::invalid_argument("distribution: expected kind:params");
    std::string kind = text.substr(0, colon);
    std::string rest = text.substr(colon + 1);
    auto nums = [](const std::string& s, char sep) {
      std::vector<double> vals;
      std::stringstream ss(s);
      std::string item;
      while (std::getline(ss, item, sep)) vals.push_back(std::stod(item));
      return vals;
    };
    if (kind == "normal") {
      auto v = nums(rest, ',');
      if (v.size() != 2) throw std::invalid_argument("normal: expected MU,SIGMA");
      return normal(v[0], v[1]);
    }
    if (kind == "uniform") {
      auto v = nums(rest, ',');
      if (v.size() != 2) throw std::invalid_argument("uniform: expected LO,HI");
      return uniform(v[0], v[1]);
    }
    if (kind == "exp") {
      auto v = nums(rest, ',');
      if (v.size() != 1) throw std::invalid_argument("exp: expected MEAN");
      return exponential(v[0]);
    }
    if (kind == "mixnormal") {
      std::vector<NormalComponent> comps;
      std::stringstream ss(rest);
      std::string part;
      while (std::getline(ss, part, ';')) {
        auto v = nums(part, ',');
        if (v.size() != 3) throw std::invalid_argument("mixnormal: expected W,MU,SIGMA;...");
        comps.push_back({v[0], v[1], v[2]});
      }
      return mixture(std::move(comps));
    }
    throw std::invalid_argument("unknown distribution kind: " + kind);
  }

 private:
  enum class Kind { normal, uniform, exponential, mixture };
  Kind kind_ = Kind::normal;
  double a_ = 0.0, b_ = 0.0;
  std::vector<NormalComponent> components_;
};

/// n unit-utility sellers with i.i.d. costs; deterministic per seed.
inline Market gen_synthetic(std::size_t n, const CostDistribution& dist, std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("gen_synthetic: n must be >= 1");
  Rng rng = Rng::stream(seed, {0x73796E7468ull});
  std::vector<Seller> sellers;
  sellers.reserve(n);
  for (std::size_t i = 0; i < n; ++i) sellers.push_back({dist.sample(rng), 1.0});
  return Market(std::move(sellers));
}

/// Hard market family for the logarithmic mechanism, built bucket by bucket:
/// bucket costs sit exactly at the previous price scale's support end, and
/// bucket masses are chosen so the mechanism's payment at scale r_i exhausts
/// the i-th companion budget while its bought fraction stays at the
/// worst-case level on every bucket.
struct AgnHardMarket {
  Market market;
  std::vector<double> budgets;        // companion budgets B_i
  std::vector<double> bucket_costs;   // c_i, strictly increasing
  std::vector<double> bucket_weights; // lambda_i (bucket i holds ~lambda_i * n sellers)
  std::vector<double> price_scales;   // r_i solving the bought-fraction equation
};

inline AgnHardMarket gen_agn_hard(double base_budget, const std::vector<double>& budget_ratios,
                                  std::size_t per_bucket_n) {
  if (!(base_budget > 0.0)) throw std::invalid_argument("gen_agn_hard: base budget must be > 0");
  if (per_bucket_n < 1) throw std::invalid_argument("gen_agn_hard: n must be >= 1");
  if (budget_ratios.empty() || std::abs(budget_ratios.front() - 1.0) > 1e-12)
    throw std::invalid_argument("gen_agn_hard: first budget ratio must be 1");
  for (std::size_t i = 1; i < budget_ratios.size(); ++i)
    if (!(budget_ratios[i] > budget_ratios[i - 1]))
      throw std::invalid_argument("gen_agn_hard: budget ratios must be strictly increasing");

  constexpr double kE = std::numbers::e;
  const std::size_t m = budget_ratios.size();
  const double n = static_cast<double>(per_bucket_n);

  AgnHardMarket out;
  out.bucket_costs = {base_budget / n};
  out.bucket_weights = {1.0};

  // weighted mass of ln(e - c_j/r) across buckets, minus the target level
  auto level_gap = [&](double r) {
    double acc = 0.0, total = 0.0;
    for (std::size_t j = 0; j < out.bucket_costs.size(); ++j) {
      acc += out.bucket_weights[j] * std::log(kE - out.bucket_costs[j] / r);
      total += out.bucket_weights[j];
    }
    return acc - (1.0 - 1.0 / kE) * total;
  };

  for (std::size_t i = 0; i < m; ++i) {
    double c_max = out.bucket_costs.back();
    double lo = std::max(c_max / (kE - 1.0) * (1.0 + 1e-15),
                         out.price_scales.empty() ? 0.0 : out.price_scales.back());
    double hi = std::max(lo * 2.0, c_max);
    int guard = 0;
    while (level_gap(hi) < 0.0) {
      hi *= 2.0;
      if (++guard > 400) throw std::runtime_error("gen_agn_hard: cannot bracket price scale");
    }
    if (level_gap(lo) > 0.0) throw std::runtime_error("gen_agn_hard: bracketing failed at low end");
    for (int it = 0; it < 200 && (hi - lo) > 1e-12 * hi; ++it) {
      double mid = 0.5 * (lo + hi);
      (level_gap(mid) < 0.0 ? lo : hi) = mid;
    }
    double r = 0.5 * (lo + hi);
    out.price_scales.push_back(r);
    if (i + 1 < m) {
      double next_cost = r * (kE - 1.0);
      double spend = 0.0;
      for (std::size_t j = 0; j < out.bucket_costs.size(); ++j)
        spend += out.bucket_weights[j] * out.bucket_costs[j];
      double next_weight = (budget_ratios[i + 1] / budget_ratios[i] - 1.0) * spend / next_cost;
      out.bucket_costs.push_back(next_cost);
      out.bucket_weights.push_back(next_weight);
    }
  }

  // Bucket i carries total utility lambda_i * n, split over round(lambda_i*n)
  // near-unit sellers so the bucket totals are exact.
  std::vector<Seller> sellers;
  for (std::size_t i = 0; i < m; ++i) {
    double mass = out.bucket_weights[i] * n;
    long long rounded = std::llround(mass);
    std::size_t count = rounded < 1 ? 1 : static_cast<std::size_t>(rounded);
    double utility = mass / static_cast<double>(count);
    for (std::size_t k = 0; k < count; ++k)
      sellers.push_back({out.bucket_costs[i] * utility, utility});
  }
  out.market = Market(std::move(sellers));
  out.budgets.reserve(m);
  for (double ratio : budget_ratios) out.budgets.push_back(base_budget * ratio);
  return out;
}

/// Geometric market of the smoothed-ratio upper bound: group utilities grow
/// by w, cost-per-utility by q, plus a free zeroth group.
struct GeometricMarketSpec {
  double q = 1.0 + 1.0 / std::numbers::sqrt2;
  double w = 2.0;
  std::size_t groups = 8;           // m
  std::size_t sellers_per_group = 1;  // n; groups split n-ways keep bidders small

  void validate() const {
    if (!(q > 1.0)) throw std::invalid_argument("geometric market: q must be > 1");
    if (!(w > 1.0)) throw std::invalid_argument("geometric market: w must be > 1");
    if (groups < 1) throw std::invalid_argument("geometric market: need at least one group");
    if (sellers_per_group < 1) throw std::invalid_argument("geometric market: n must be >= 1");
  }
};

struct LowerBoundMarket {
  Market market;
  std::vector<double> budgets;  // B_i = sum_{j<=i} (w*q)^(j-1)
};

inline LowerBoundMarket gen_lower_bound_market(const GeometricMarketSpec& spec) {
  spec.validate();
  const double n = static_cast<double>(spec.sellers_per_group);
  std::vector<Seller> sellers;
  sellers.reserve((spec.groups + 1) * spec.sellers_per_group);
  for (std::size_t k = 0; k < spec.sellers_per_group; ++k) sellers.push_back({0.0, 1.0 / n});
  double group_utility = 1.0, gamma = 1.0, budget = 0.0;
  LowerBoundMarket out;
  for (std::size_t i = 1; i <= spec.groups; ++i) {
    double u = group_utility / n;
    for (std::size_t k = 0; k < spec.sellers_per_group; ++k) sellers.push_back({gamma * u, u});
    budget += group_utility * gamma;
    out.budgets.push_back(budget);
    group_utility *= spec.w;
    gamma *= spec.q;
  }
  out.market = Market(std::move(sellers));
  return out;
}

/// n unit-utility sellers with i.i.d. costs drawn from the market curve's
/// cost distribution (an atom at zero of mass F_1, then inverse-CDF sampling
/// of the closed-form segments).
inline Market sample_bayesian_market(const PiecewiseCurve& curve, std::size_t n,
                                     std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("sample_bayesian_market: n must be >= 1");
  detail::CurveGeometry geo = detail::analyze_curve(curve);
  Rng rng = Rng::stream(seed, {0x6261796573ull});
  std::vector<Seller> sellers;
  sellers.reserve(n);
  const std::size_t m = curve.pieces();
  for (std::size_t i = 0; i < n; ++i) {
    double u = rng.uniform();
    double cost = 0.0;
    if (u > geo.f[0]) {
      for (std::size_t j = 0; j < m; ++j) {
        if (geo.degenerate(j)) continue;
        if (u <= geo.f[j + 1] || j + 1 == m) {
          cost = std::max(0.0, curve.slopes[j] - geo.intercept[j] / u);
          break;
        }
      }
    }
    sellers.push_back({cost, 1.0});
  }
  return Market(std::move(sellers));
}

/// The step candidates greedy scores from a fixed start group: marginal
/// utility, the payment of a full step, and their ratio.
struct GreedyStepCandidate {
  std::size_t first_group = 0;  // 1-based group index i
  std::size_t last_group = 0;   // 1-based group index j >= i
  double marginal_utility = 0.0;
  double full_step_payment = 0.0;
  double efficiency = 0.0;
};

inline std::vector<GreedyStepCandidate> greedy_step_candidates(const Market& market,
                                                               std::size_t first_group) {
  detail::MergedMarket merged = detail::merge_by_gamma(market);
  const std::size_t n = merged.gamma.size();
  if (first_group < 1 || first_group > n)
    throw std::invalid_argument("greedy_step_candidates: group index out of range");
  std::vector<GreedyStepCandidate> out;
  double below_utility = merged.zero_utility;
  for (std::size_t k = 0; k + 1 < first_group; ++k) below_utility += merged.utility[k];
  double prev_gamma = first_group >= 2 ? merged.gamma[first_group - 2] : 0.0;
  double span_utility = 0.0;
  for (std::size_t j = first_group; j <= n; ++j) {
    span_utility += merged.utility[j - 1];
    double gamma = merged.gamma[j - 1];
    GreedyStepCandidate c;
    c.first_group = first_group;
    c.last_group = j;
    c.marginal_utility = span_utility;
    c.full_step_payment = (gamma - prev_gamma) * below_utility + gamma * span_utility;
    c.efficiency = c.marginal_utility / c.full_step_payment;
    out.push_back(c);
  }
  return out;
}

}  // namespace procure
