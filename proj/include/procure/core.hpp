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

// Market data model, monotone step allocation rules and their truthful
// (Myerson) payments, and the posted-price accounting identities used
// throughout the mechanisms.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <limits>
#include <numeric>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace procure {

// Relative tolerance for treating two cost-per-utility values as equal when
// grouping sellers. Continuous draws never tie; constructed instances tie
// exactly, so anything this close is a deliberate tie.
inline constexpr double kGammaGroupTol = 1e-12;

/// One seller: a privately-costed item with a public utility.
struct Seller {
  double cost = 0.0;
  double utility = 0.0;

  /// Cost per unit of utility. Only meaningful for utility > 0; the market
  /// drops zero-utility sellers at construction.
  double gamma() const { return cost / utility; }
};

inline bool gamma_equal(double a, double b) {
  return std::abs(a - b) <= kGammaGroupTol * std::max(std::abs(a), std::abs(b));
}

/// A finite list of sellers. Construction validates non-negative costs and
/// utilities and drops sellers with zero utility (they contribute nothing and
/// have no cost-per-utility).
class Market {
 public:
  Market() = default;

  explicit Market(std::vector<Seller> sellers) {
    sellers_.reserve(sellers.size());
    for (const Seller& s : sellers) {
      if (!(s.cost >= 0.0) || !std::isfinite(s.cost))
        throw std::invalid_argument("Market: seller cost must be finite and >= 0");
      if (!(s.utility >= 0.0) || !std::isfinite(s.utility))
        throw std::invalid_argument("Market: seller utility must be finite and >= 0");
      if (s.utility > 0.0) sellers_.push_back(s);
    }
  }

  const std::vector<Seller>& sellers() const { return sellers_; }
  std::size_t size() const { return sellers_.size(); }
  bool empty() const { return sellers_.empty(); }

  double total_utility() const {
    double u = 0.0;
    for (const Seller& s : sellers_) u += s.utility;
    return u;
  }

  double total_cost() const {
    double c = 0.0;
    for (const Seller& s : sellers_) c += s.cost;
    return c;
  }

  double max_cost() const {
    double c = 0.0;
    for (const Seller& s : sellers_) c = std::max(c, s.cost);
    return c;
  }

  /// max_i cost_i / budget. Callers may warn when this is not small; the
  /// mechanisms' guarantees assume every individual cost is tiny next to B.
  double small_bidder_ratio(double budget) const {
    if (budget <= 0.0) return std::numeric_limits<double>::infinity();
    return max_cost() / budget;
  }

  // --- CSV wire format: header "cost,utility", one seller per row. ---

  static Market from_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("market csv: empty input");
    if (trim(line) != "cost,utility")
      throw std::runtime_error("market csv: expected header 'cost,utility'");
    std::vector<Seller> sellers;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
      ++lineno;
      std::string t = trim(line);
      if (t.empty()) continue;
      std::size_t comma = t.find(',');
      if (comma == std::string::npos)
        throw std::runtime_error("market csv: line " + std::to_string(lineno) + ": expected 'cost,utility'");
      double cost = parse_double(t.substr(0, comma), lineno);
      double utility = parse_double(t.substr(comma + 1), lineno);
      if (cost < 0.0 || utility < 0.0)
        throw std::runtime_error("market csv: line " + std::to_string(lineno) + ": negative value");
      sellers.push_back({cost, utility});
    }
    return Market(std::move(sellers));
  }

  static Market load_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open market file: " + path);
    return from_csv(in);
  }

  void to_csv(std::ostream& out) const {
    out << "cost,utility\n";
    char buf[64];
    for (const Seller& s : sellers_) {
      std::snprintf(buf, sizeof(buf), "%.17g,%.17g\n", s.cost, s.utility);
      out << buf;
    }
  }

  void save_csv(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write market file: " + path);
    to_csv(out);
  }

 private:
  static std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
  }

  static double parse_double(const std::string& s, std::size_t lineno) {
    try {
      std::size_t pos = 0;
      double v = std::stod(s, &pos);
      while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
      if (pos != s.size()) throw std::invalid_argument("trailing junk");
      if (!std::isfinite(v)) throw std::invalid_argument("non-finite");
      return v;
    } catch (const std::exception&) {
      throw std::runtime_error("market csv: line " + std::to_string(lineno) + ": bad number '" + s + "'");
    }
  }

  std::vector<Seller> sellers_;
};

/// A non-increasing (<=2)-step allocation rule over cost-per-utility:
///
///   evaluate(g) = 1  for g <= low_price   (when low_price is present)
///               = t  for g <= high_price  (above low_price, or always when
///                                          low_price is absent)
///               = 0  otherwise.
///
/// An absent low_price means no seller accepts the low offer (all costs are
/// non-negative); it stands in for a low price strictly below zero.
struct TwoStepRule {
  double t = 0.0;
  std::optional<double> low_price;
  double high_price = 0.0;

  void validate() const {
    if (!(t >= 0.0 && t < 1.0))
      throw std::invalid_argument("TwoStepRule: t must lie in [0,1)");
    if (!std::isfinite(high_price) || high_price < 0.0)
      throw std::invalid_argument("TwoStepRule: high_price must be finite and >= 0 (unbounded support has a divergent payment integral)");
    if (low_price) {
      if (!std::isfinite(*low_price) || *low_price < 0.0)
        throw std::invalid_argument("TwoStepRule: low_price must be finite and >= 0");
      if (*low_price > high_price)
        throw std::invalid_argument("TwoStepRule: low_price must be <= high_price");
    }
  }

  double evaluate(double gamma) const {
    if (low_price && gamma <= *low_price) return 1.0;
    if (gamma <= high_price) return t;
    return 0.0;
  }

  /// Truthful payment per unit of utility for a report of `gamma`:
  /// gamma * f(gamma) plus the tail integral of f, in closed form.
  double payment_per_utility(double gamma) const {
    if (low_price && gamma <= *low_price) return *low_price + t * (high_price - *low_price);
    if (gamma <= high_price) return t * high_price;
    return 0.0;
  }
};

/// The payment rule associated with a monotone step allocation rule.
/// Rejects rules whose payment integral diverges (validate()).
inline double myerson_payment(const TwoStepRule& rule, double gamma) {
  rule.validate();
  if (!(gamma >= 0.0)) throw std::invalid_argument("myerson_payment: gamma must be >= 0");
  return rule.payment_per_utility(gamma);
}

/// One arm of the posted-price lottery equivalent to a TwoStepRule. An empty
/// price is the null offer (nothing is bought, nothing is paid).
struct PriceOffer {
  std::optional<double> price;
  double probability = 0.0;
};

/// A TwoStepRule as a lottery over at most two posted prices: the high price
/// with probability t, otherwise the low price (or no offer when the low
/// price is absent). Probabilities sum to one.
inline std::vector<PriceOffer> lottery_decompose(const TwoStepRule& rule) {
  rule.validate();
  std::vector<PriceOffer> offers;
  offers.push_back({rule.high_price, rule.t});
  if (rule.low_price)
    offers.push_back({*rule.low_price, 1.0 - rule.t});
  else
    offers.push_back({std::nullopt, 1.0 - rule.t});
  return offers;
}

/// Utility and payment totals of a posted price p over a seller set:
/// every seller with gamma <= p sells fully and is paid p per utility.
inline std::pair<double, double> posted_price_totals(double price, std::span<const Seller> sellers) {
  double utility = 0.0;
  for (const Seller& s : sellers)
    if (s.gamma() <= price) utility += s.utility;
  return {utility, price * utility};
}

/// Total utility and total payment of a rule applied to a seller set, by
/// direct Myerson summation.
inline std::pair<double, double> rule_totals(const TwoStepRule& rule, std::span<const Seller> sellers) {
  rule.validate();
  double utility = 0.0, payment = 0.0;
  for (const Seller& s : sellers) {
    double g = s.gamma();
    utility += rule.evaluate(g) * s.utility;
    payment += rule.payment_per_utility(g) * s.utility;
  }
  return {utility, payment};
}

/// Same totals through the lottery view: a (1-t) weight on the low posted
/// price and a t weight on the high one. Agrees with rule_totals up to
/// floating-point noise; kept as the second route of the accounting check.
inline std::pair<double, double> rule_totals_via_prices(const TwoStepRule& rule,
                                                        std::span<const Seller> sellers) {
  rule.validate();
  auto [u_hi, b_hi] = posted_price_totals(rule.high_price, sellers);
  double u_lo = 0.0, b_lo = 0.0;
  if (rule.low_price) {
    auto [u, b] = posted_price_totals(*rule.low_price, sellers);
    u_lo = u;
    b_lo = b;
  }
  return {(1.0 - rule.t) * u_lo + rule.t * u_hi, (1.0 - rule.t) * b_lo + rule.t * b_hi};
}

/// Per-seller result of running a mechanism: fractions bought and payments
/// made, indexed like the market's seller list.
struct MechanismOutcome {
  std::vector<double> fractions;
  std::vector<double> payments;
  double total_utility = 0.0;
  double total_payment = 0.0;

  static MechanismOutcome from_parts(std::vector<double> fractions, std::vector<double> payments,
                                     const Market& market) {
    MechanismOutcome out;
    out.fractions = std::move(fractions);
    out.payments = std::move(payments);
    const auto& sellers = market.sellers();
    for (std::size_t i = 0; i < sellers.size(); ++i) {
      out.total_utility += out.fractions[i] * sellers[i].utility;
      out.total_payment += out.payments[i];
    }
    return out;
  }
};

namespace detail {

/// Sellers merged by equal cost-per-utility and sorted, with the zero-cost
/// mass pulled out. The mechanisms all operate on this view.
struct MergedMarket {
  double zero_utility = 0.0;        // total utility of zero-cost sellers
  std::vector<double> gamma;        // ascending, strictly positive
  std::vector<double> utility;      // total utility per gamma group
};

inline MergedMarket merge_by_gamma(const Market& market) {
  const auto& sellers = market.sellers();
  std::vector<std::size_t> order(sellers.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return sellers[a].gamma() < sellers[b].gamma();
  });
  MergedMarket merged;
  for (std::size_t idx : order) {
    double g = sellers[idx].gamma();
    double u = sellers[idx].utility;
    if (g <= 0.0) {
      merged.zero_utility += u;
      continue;
    }
    if (!merged.gamma.empty() && gamma_equal(merged.gamma.back(), g)) {
      merged.utility.back() += u;
      // keep the largest member as the group representative so that every
      // member satisfies gamma <= representative
      merged.gamma.back() = std::max(merged.gamma.back(), g);
    } else {
      merged.gamma.push_back(g);
      merged.utility.push_back(u);
    }
  }
  return merged;
}

}  // namespace detail

}  // namespace procure
