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

// Budget-smoothed analysis: the worst market for a distribution of budget
// perturbations is described by a convex piecewise-linear curve of
// cost*CDF(cost) against CDF(cost). This module evaluates the expected
// competitive ratio of the best mechanism on such a curve in closed form and
// minimizes it over curves with a multi-start derivative-free search.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <istream>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "procure/rng.hpp"

namespace procure {

/// Branch W_{-1} of the inverse of w*e^w, defined on [-1/e, 0) with values in
/// (-inf, -1]. Asymptotic initial guess refined by Halley steps, with a
/// series start and bisection fallback near the branch point where Halley
/// degenerates.
inline double lambert_w_minus1(double x) {
  constexpr double kBranchX = -0.36787944117144233;  // -1/e to double precision
  if (!(x < 0.0)) throw std::domain_error("lambert_w_minus1: x must be negative");
  if (x < kBranchX) {
    if (x > kBranchX * (1.0 + 1e-12)) return -1.0;  // roundoff below the branch point
    throw std::domain_error("lambert_w_minus1: x below -1/e");
  }

  double w;
  double sigma = 1.0 + std::numbers::e * x;  // 0 at the branch point
  if (sigma <= 0.0) return -1.0;
  if (sigma < 1e-12) {
    return -1.0 - std::sqrt(2.0 * sigma);  // below the precision floor of the iteration
  }
  if (x < -0.27) {
    // branch-point series in p = sqrt(2*(1+e*x)); accurate start for the
    // whole near-branch band where the asymptotic guess is useless
    double p = std::sqrt(2.0 * sigma);
    w = -1.0 - p - p * p / 3.0 - 11.0 * p * p * p / 72.0 - 43.0 * p * p * p * p / 540.0;
  } else {
    double l1 = std::log(-x);
    w = l1 - std::log(-l1);
  }

  bool converged = false;
  for (int it = 0; it < 60; ++it) {
    double ew = std::exp(w);
    double f = w * ew - x;
    double fp = ew * (1.0 + w);
    double denom = fp - f * (w + 2.0) / (2.0 * (w + 1.0));
    if (fp == 0.0 || denom == 0.0 || !std::isfinite(denom)) break;
    double step = f / denom;
    double next = w - step;
    if (!(next <= -1.0) || !std::isfinite(next)) break;  // left the branch; bisect instead
    w = next;
    if (std::abs(step) <= 1e-14 * std::abs(w)) {
      converged = true;
      break;
    }
  }
  if (!converged) {
    // w*e^w decreases from 0 toward -1/e as w runs from -inf to -1, so the
    // root sits in [lo, -1] once w(lo)*e^lo >= x; larger mid values give
    // smaller w*e^w.
    double lo = -2.0;
    while (lo * std::exp(lo) < x) lo *= 2.0;
    double hi = -1.0;
    for (int it = 0; it < 200 && (hi - lo) > 1e-16 * std::abs(lo); ++it) {
      double mid = 0.5 * (lo + hi);
      if (mid * std::exp(mid) >= x)
        lo = mid;
      else
        hi = mid;
    }
    w = 0.5 * (lo + hi);
  }
  return std::min(w, -1.0);
}

/// Distribution of budget perturbation factors: factors are scaled so the
/// largest is 1 and weights sum to 1.
struct BudgetDistribution {
  struct Point {
    double rho = 0.0;
    double prob = 0.0;
  };
  std::vector<Point> points;

  std::size_t size() const { return points.size(); }

  static BudgetDistribution from_points(std::vector<Point> raw) {
    if (raw.empty()) throw std::invalid_argument("budget distribution: empty");
    double max_rho = 0.0, total = 0.0;
    for (const Point& p : raw) {
      if (!(p.rho > 0.0) || !std::isfinite(p.rho))
        throw std::invalid_argument("budget distribution: factors must be positive");
      if (!(p.prob > 0.0) || !std::isfinite(p.prob))
        throw std::invalid_argument("budget distribution: weights must be positive");
      max_rho = std::max(max_rho, p.rho);
      total += p.prob;
    }
    BudgetDistribution dist;
    dist.points.reserve(raw.size());
    for (const Point& p : raw) dist.points.push_back({p.rho / max_rho, p.prob / total});
    std::sort(dist.points.begin(), dist.points.end(),
              [](const Point& a, const Point& b) { return a.rho < b.rho; });
    for (std::size_t i = 1; i < dist.points.size(); ++i)
      if (!(dist.points[i].rho > dist.points[i - 1].rho))
        throw std::invalid_argument("budget distribution: factors must be distinct");
    return dist;
  }

  static BudgetDistribution uniform_over(const std::vector<double>& rhos) {
    std::vector<Point> pts;
    pts.reserve(rhos.size());
    for (double r : rhos) pts.push_back({r, 1.0});
    return from_points(std::move(pts));
  }

  /// Top-10 budget perturbations observed on a microtask platform.
  static BudgetDistribution microworkers() {
    return uniform_over({0.124, 0.126, 0.154, 0.172, 0.236, 0.281, 0.299, 0.544, 0.625, 1.0});
  }

  // CSV wire format: header "rho,prob", one point per row.
  static BudgetDistribution from_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("distribution csv: empty input");
    auto strip = [](std::string s) {
      s.erase(0, s.find_first_not_of(" \t\r\n"));
      s.erase(s.find_last_not_of(" \t\r\n") + 1);
      return s;
    };
    if (strip(line) != "rho,prob")
      throw std::runtime_error("distribution csv: expected header 'rho,prob'");
    std::vector<Point> pts;
    while (std::getline(in, line)) {
      std::string t = strip(line);
      if (t.empty()) continue;
      std::size_t comma = t.find(',');
      if (comma == std::string::npos) throw std::runtime_error("distribution csv: expected 'rho,prob'");
      pts.push_back({std::stod(t.substr(0, comma)), std::stod(t.substr(comma + 1))});
    }
    return from_points(std::move(pts));
  }
};

/// A convex piecewise-linear cost*CDF-vs-CDF curve describing a market of
/// unit-utility sellers: an atom of mass breakpoints[0] at cost zero, then m
/// linear pieces with non-decreasing slopes. Segment j carries the CDF
/// F(c) = b_j / (a_j - c).
struct PiecewiseCurve {
  std::vector<double> breakpoints;  // F_1 <= ... <= F_m (F_{m+1} = 1 implied)
  std::vector<double> slopes;       // 0 < a_1 <= ... <= a_m

  std::size_t pieces() const { return slopes.size(); }

  void validate() const {
    if (breakpoints.empty() || breakpoints.size() != slopes.size())
      throw std::invalid_argument("curve: need one breakpoint per slope");
    double prev_f = 0.0;
    for (double f : breakpoints) {
      if (!(f >= prev_f) || !(f <= 1.0) || !std::isfinite(f))
        throw std::invalid_argument("curve: breakpoints must be non-decreasing in [0,1]");
      prev_f = f;
    }
    double prev_a = 0.0;
    for (double a : slopes) {
      if (!(a > 0.0) || !std::isfinite(a) || !(a >= prev_a))
        throw std::invalid_argument("curve: slopes must be positive and non-decreasing");
      prev_a = a;
    }
  }
};

namespace detail {

inline constexpr double kDegenerateSegment = 1e-14;

/// Everything derivable from a curve: curve heights y_i, segment intercepts
/// b_i, breakpoint costs c_i, and the cumulative cheapest-first purchase cost
/// K_i at each breakpoint. K_{m+1} is the budget that buys the whole market.
struct CurveGeometry {
  std::vector<double> f;         // F_1..F_{m+1}
  std::vector<double> height;    // y_1..y_{m+1}, curve value at F_i
  std::vector<double> intercept; // b_1..b_m (meaningful on non-degenerate segments)
  std::vector<double> cost;      // c_1..c_{m+1}, cost at which the CDF reaches F_i
  std::vector<double> knap_cost; // K_1..K_{m+1}
  double total_budget = 0.0;     // K_{m+1}

  bool degenerate(std::size_t seg) const { return f[seg + 1] - f[seg] <= kDegenerateSegment; }
};

inline CurveGeometry analyze_curve(const PiecewiseCurve& curve) {
  curve.validate();
  const std::size_t m = curve.pieces();
  CurveGeometry geo;
  geo.f = curve.breakpoints;
  geo.f.push_back(1.0);
  if (geo.f[m] < geo.f[m - 1])
    throw std::invalid_argument("curve: breakpoints exceed 1");
  geo.height.assign(m + 1, 0.0);
  geo.intercept.assign(m, 0.0);
  geo.cost.assign(m + 1, 0.0);
  geo.knap_cost.assign(m + 1, 0.0);
  for (std::size_t j = 0; j < m; ++j) {
    geo.height[j + 1] = geo.height[j] + curve.slopes[j] * (geo.f[j + 1] - geo.f[j]);
    geo.intercept[j] = curve.slopes[j] * geo.f[j] - geo.height[j];
    if (!geo.degenerate(j)) {
      if (!(geo.intercept[j] > 0.0))
        throw std::invalid_argument("curve: segment intercept must be positive");
      geo.knap_cost[j + 1] = geo.knap_cost[j] + (geo.height[j + 1] - geo.height[j]) -
                             geo.intercept[j] * std::log(geo.f[j + 1] / geo.f[j]);
    } else {
      geo.knap_cost[j + 1] = geo.knap_cost[j];
    }
    geo.cost[j + 1] =
        geo.f[j + 1] > 0.0 ? curve.slopes[j] - geo.intercept[j] / geo.f[j + 1] : 0.0;
  }
  // geo.cost[0] is 0: the curve starts at height zero, i.e. at the atom.
  geo.total_budget = geo.knap_cost[m];
  return geo;
}

}  // namespace detail

struct SmoothedResult {
  double ratio = 0.0;
  PiecewiseCurve curve;
  struct PerBudget {
    double rho = 0.0;
    double mech_utility = 0.0;  // best truthful mechanism's utility at rho*B
    double opt_utility = 0.0;   // non-IC optimum's utility at rho*B
    double ratio = 0.0;
    double cutoff_cost = 0.0;   // cutoff price achieving mech_utility
  };
  std::vector<PerBudget> per_budget;
};

/// Expected competitive ratio of the best truthful mechanism against the
/// non-IC optimum on the market described by `curve`, when the budget is the
/// full-purchase cost scaled by each perturbation factor.
///
/// At budget rho*B the optimum buys the cheapest g_k mass where the running
/// cost reaches rho*B (solved through W_{-1}); the best mechanism is a cutoff
/// rule paying cost*F(cost) = rho*B, whose bought mass f_k is linear in the
/// budget on each segment.
inline SmoothedResult eval_curve_ratio(const PiecewiseCurve& curve, const BudgetDistribution& dist) {
  detail::CurveGeometry geo = detail::analyze_curve(curve);
  const std::size_t m = curve.pieces();
  const double budget_full = geo.total_budget;
  if (!(budget_full > 0.0)) throw std::invalid_argument("curve: zero total cost");

  SmoothedResult result;
  result.curve = curve;
  for (const auto& point : dist.points) {
    double target = point.rho * budget_full;

    // Non-IC optimum: lowest non-degenerate segment whose cumulative cost
    // covers the target (ties at breakpoints resolve downward).
    std::size_t gi = m;
    for (std::size_t j = 0; j < m; ++j) {
      if (geo.degenerate(j)) continue;
      gi = j;
      if (target <= geo.knap_cost[j + 1]) break;
    }
    if (gi == m) throw std::invalid_argument("curve: no usable segment");
    double b = geo.intercept[gi], a = curve.slopes[gi];
    double h = target - geo.knap_cost[gi] + geo.height[gi] + b - b * std::log(geo.f[gi]);
    double z = -(a / b) * std::exp(-h / b);
    z = std::clamp(z, -1.0 / std::numbers::e, -std::numeric_limits<double>::min());
    double opt_mass = std::clamp(-(b / a) * lambert_w_minus1(z), geo.f[gi], geo.f[gi + 1]);

    // Best mechanism: cutoff whose payment curve height reaches the target.
    std::size_t fi = m;
    for (std::size_t j = 0; j < m; ++j) {
      if (geo.degenerate(j)) continue;
      fi = j;
      if (target <= geo.height[j + 1]) break;
    }
    double mech_mass = std::clamp((target + geo.intercept[fi]) / curve.slopes[fi], geo.f[fi],
                                  geo.f[fi + 1]);

    SmoothedResult::PerBudget row;
    row.rho = point.rho;
    row.mech_utility = mech_mass;
    row.opt_utility = opt_mass;
    row.ratio = std::min(mech_mass / opt_mass, 1.0);
    row.cutoff_cost = mech_mass > 0.0 ? target / mech_mass : 0.0;
    result.per_budget.push_back(row);
    result.ratio += point.prob * row.ratio;
  }
  return result;
}

namespace detail {

struct NelderMeadResult {
  std::vector<double> x;
  double value = std::numeric_limits<double>::infinity();
};

/// Plain Nelder-Mead simplex search (reflection 1, expansion 2, contraction
/// 0.5, shrink 0.5). Deterministic given the start point.
inline NelderMeadResult nelder_mead(const std::function<double(const std::vector<double>&)>& objective,
                                    std::vector<double> start, double init_step, int max_evals,
                                    double f_tol) {
  const std::size_t dim = start.size();
  std::vector<std::vector<double>> simplex(dim + 1, start);
  std::vector<double> value(dim + 1);
  int evals = 0;
  for (std::size_t i = 0; i < dim; ++i) simplex[i + 1][i] += init_step;
  for (std::size_t i = 0; i <= dim; ++i) value[i] = (++evals, objective(simplex[i]));

  while (evals < max_evals) {
    std::vector<std::size_t> order(dim + 1);
    for (std::size_t i = 0; i <= dim; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return value[a] < value[b];
    });
    std::size_t best = order[0], worst = order[dim], second = order[dim - 1];
    if (value[worst] - value[best] <= f_tol) break;

    std::vector<double> centroid(dim, 0.0);
    for (std::size_t i = 0; i <= dim; ++i) {
      if (i == worst) continue;
      for (std::size_t d = 0; d < dim; ++d) centroid[d] += simplex[i][d];
    }
    for (double& c : centroid) c /= static_cast<double>(dim);

    auto blend = [&](double coef) {
      std::vector<double> x(dim);
      for (std::size_t d = 0; d < dim; ++d)
        x[d] = centroid[d] + coef * (simplex[worst][d] - centroid[d]);
      return x;
    };

    std::vector<double> reflected = blend(-1.0);
    double fr = (++evals, objective(reflected));
    if (fr < value[best]) {
      std::vector<double> expanded = blend(-2.0);
      double fe = (++evals, objective(expanded));
      if (fe < fr) {
        simplex[worst] = std::move(expanded);
        value[worst] = fe;
      } else {
        simplex[worst] = std::move(reflected);
        value[worst] = fr;
      }
      continue;
    }
    if (fr < value[second]) {
      simplex[worst] = std::move(reflected);
      value[worst] = fr;
      continue;
    }
    std::vector<double> contracted = blend(fr < value[worst] ? -0.5 : 0.5);
    double fc = (++evals, objective(contracted));
    if (fc < std::min(fr, value[worst])) {
      simplex[worst] = std::move(contracted);
      value[worst] = fc;
      continue;
    }
    for (std::size_t i = 0; i <= dim; ++i) {  // shrink toward the best vertex
      if (i == best) continue;
      for (std::size_t d = 0; d < dim; ++d)
        simplex[i][d] = simplex[best][d] + 0.5 * (simplex[i][d] - simplex[best][d]);
      value[i] = (++evals, objective(simplex[i]));
    }
  }

  std::size_t best = 0;
  for (std::size_t i = 1; i <= dim; ++i)
    if (value[i] < value[best]) best = i;
  return {simplex[best], value[best]};
}

/// Unconstrained parametrization of a valid curve: breakpoints through a
/// stick-breaking softmax over m+1 slots (so 0 < F_1 <= ... <= F_m < 1) and
/// slopes through cumulative positive increments.
inline PiecewiseCurve curve_from_params(const std::vector<double>& x, std::size_t m) {
  auto squash = [](double v) { return std::clamp(v, -40.0, 40.0); };
  std::vector<double> weight(m + 1);
  double total = 0.0;
  for (std::size_t i = 0; i <= m; ++i) {
    weight[i] = std::exp(squash(i < m ? x[i] : 0.0));
    total += weight[i];
  }
  PiecewiseCurve curve;
  curve.breakpoints.resize(m);
  double cum = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    cum += weight[i] / total;
    curve.breakpoints[i] = cum;
  }
  curve.slopes.resize(m);
  double slope = std::exp(squash(x[m]));
  curve.slopes[0] = slope;
  for (std::size_t i = 1; i < m; ++i) {
    slope += std::exp(squash(x[m + i]));
    curve.slopes[i] = slope;
  }
  return curve;
}

}  // namespace detail

/// Minimizes eval_curve_ratio over valid curves with as many pieces as the
/// distribution has support points, by multi-start Nelder-Mead on the
/// unconstrained parametrization. The returned ratio is an upper bound on
/// the true optimum (the program is non-convex). Restarts run concurrently;
/// the reduction picks the smallest objective, ties broken by restart index.
inline SmoothedResult optimize_worst_curve(const BudgetDistribution& dist, std::size_t restarts,
                                           std::uint64_t seed, unsigned threads = 0) {
  if (restarts < 1) throw std::invalid_argument("optimize_worst_curve: need at least one restart");
  const std::size_t m = dist.size();
  const std::size_t dim = 2 * m;

  auto objective = [&](const std::vector<double>& x) {
    try {
      PiecewiseCurve curve = detail::curve_from_params(x, m);
      double value = eval_curve_ratio(curve, dist).ratio;
      return std::isfinite(value) ? value : 10.0;
    } catch (const std::exception&) {
      return 10.0;
    }
  };

  std::vector<detail::NelderMeadResult> found(restarts);
  unsigned workers = threads == 0 ? std::max(1u, std::thread::hardware_concurrency()) : threads;
  workers = std::min<unsigned>(workers, static_cast<unsigned>(restarts));
  std::atomic<std::size_t> cursor{0};
  auto work = [&] {
    for (;;) {
      std::size_t r = cursor.fetch_add(1);
      if (r >= restarts) return;
      std::vector<double> x0(dim, 0.0);
      if (r > 0) {
        Rng rng = Rng::stream(seed, {0x736D6F6F746865ull, r});
        for (double& v : x0) v = rng.normal(0.0, 1.5);
      }
      found[r] = detail::nelder_mead(objective, std::move(x0), 0.7, 20000, 1e-12);
    }
  };
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < workers; ++t) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();

  std::size_t best = 0;
  for (std::size_t r = 1; r < restarts; ++r)
    if (found[r].value < found[best].value) best = r;

  // Analytic single-budget fallback: the worst one-piece curve has its atom
  // at mass 1/e, giving ratio 1 + (1/e)ln(1/e).
  if (m == 1) {
    PiecewiseCurve relu{{1.0 / std::numbers::e}, {1.0}};
    if (eval_curve_ratio(relu, dist).ratio < found[best].value)
      return eval_curve_ratio(relu, dist);
  }
  if (!(found[best].value <= 1.0))
    throw std::runtime_error("optimize_worst_curve: search failed to find a feasible curve");
  PiecewiseCurve curve = detail::curve_from_params(found[best].x, m);
  // the objective only depends on the curve's shape; pin the scale at a_1 = 1
  double scale = curve.slopes[0] > 0.0 ? curve.slopes[0] : 1.0;
  for (double& a : curve.slopes) a /= scale;
  return eval_curve_ratio(curve, dist);
}

}  // namespace procure
