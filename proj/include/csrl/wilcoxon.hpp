#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "csrl/mathutil.hpp"

namespace csrl {

enum class WilcoxonMethod { Auto, Exact, NormalApprox };

struct WilcoxonResult {
  double statistic = 0.0;  // rank sum of the first sample, midrank ties
  double p_value = 1.0;    // two-sided
  WilcoxonMethod used = WilcoxonMethod::Exact;
};

namespace detail {

struct PooledRanks {
  std::vector<long long> doubled;  // 2 * midrank per pooled item, x first
  long long doubled_sum_x = 0;
  std::vector<long long> tie_sizes;
};

inline PooledRanks pool_midranks(std::span<const double> x, std::span<const double> y) {
  struct Item {
    double value;
    bool from_x;
  };
  std::vector<Item> pooled;
  pooled.reserve(x.size() + y.size());
  for (double v : x) {
    if (std::isnan(v)) throw std::invalid_argument("wilcoxon_rank_sum: NaN sample value");
    pooled.push_back({v, true});
  }
  for (double v : y) {
    if (std::isnan(v)) throw std::invalid_argument("wilcoxon_rank_sum: NaN sample value");
    pooled.push_back({v, false});
  }
  std::stable_sort(pooled.begin(), pooled.end(),
                   [](const Item& a, const Item& b) { return a.value < b.value; });

  PooledRanks out;
  out.doubled.resize(pooled.size());
  std::size_t i = 0;
  while (i < pooled.size()) {
    std::size_t j = i;
    while (j + 1 < pooled.size() && pooled[j + 1].value == pooled[i].value) ++j;
    // Ranks i+1 .. j+1 share the midrank; doubled midrank = i + j + 2.
    long long doubled_rank = static_cast<long long>(i) + static_cast<long long>(j) + 2;
    for (std::size_t t = i; t <= j; ++t) {
      out.doubled[t] = doubled_rank;
      if (pooled[t].from_x) out.doubled_sum_x += doubled_rank;
    }
    out.tie_sizes.push_back(static_cast<long long>(j - i + 1));
    i = j + 1;
  }
  return out;
}

/// Exact null distribution: counts of size-n subsets of the pooled doubled
/// ranks by subset sum, via the standard knapsack recurrence. Counts stay
/// below 2^53 for the sizes the auto rule admits, so doubles hold them
/// exactly.
inline double exact_two_sided_p(const PooledRanks& ranks, std::size_t n) {
  const std::size_t total_items = ranks.doubled.size();
  long long max_sum = 0;
  for (long long d : ranks.doubled) max_sum += d;

  std::vector<std::vector<double>> dp(n + 1,
                                      std::vector<double>(static_cast<std::size_t>(max_sum) + 1, 0.0));
  dp[0][0] = 1.0;
  std::size_t processed = 0;
  for (long long d : ranks.doubled) {
    ++processed;
    std::size_t k_hi = std::min(n, processed);
    for (std::size_t k = k_hi; k >= 1; --k) {
      auto& row = dp[k];
      const auto& prev = dp[k - 1];
      for (long long w = max_sum - d; w >= 0; --w) {
        if (prev[static_cast<std::size_t>(w)] != 0.0)
          row[static_cast<std::size_t>(w + d)] += prev[static_cast<std::size_t>(w)];
      }
    }
  }

  const auto& final_row = dp[n];
  double total = 0.0, below = 0.0, above = 0.0;
  for (long long w = 0; w <= max_sum; ++w) {
    double c = final_row[static_cast<std::size_t>(w)];
    if (c == 0.0) continue;
    total += c;
    if (w <= ranks.doubled_sum_x) below += c;
    if (w >= ranks.doubled_sum_x) above += c;
  }
  double p = 2.0 * std::min(below, above) / total;
  return std::min(1.0, p);
}

inline double normal_two_sided_p(const PooledRanks& ranks, std::size_t n, std::size_t m) {
  double N = static_cast<double>(n + m);
  double w = static_cast<double>(ranks.doubled_sum_x) / 2.0;
  double mean_w = static_cast<double>(n) * (N + 1.0) / 2.0;
  double tie_term = 0.0;
  for (long long t : ranks.tie_sizes) {
    double td = static_cast<double>(t);
    tie_term += td * td * td - td;
  }
  double var_w = static_cast<double>(n) * static_cast<double>(m) / 12.0 *
                 ((N + 1.0) - tie_term / (N * (N - 1.0)));
  if (var_w <= 0.0) return 1.0;
  double diff = w - mean_w;
  double cc = (diff > 0.0) ? -0.5 : (diff < 0.0 ? 0.5 : 0.0);  // continuity correction
  double z = (diff + cc) / std::sqrt(var_w);
  double p = 2.0 * (1.0 - normal_cdf(std::fabs(z)));
  return std::min(1.0, std::max(0.0, p));
}

}  // namespace detail

/// Two-sided Wilcoxon rank-sum test with midrank tie handling. Small samples
/// use the exact conditional distribution; larger ones the tie- and
/// continuity-corrected normal approximation.
inline WilcoxonResult wilcoxon_rank_sum(std::span<const double> x, std::span<const double> y,
                                        WilcoxonMethod method = WilcoxonMethod::Auto) {
  if (x.empty() || y.empty())
    throw std::invalid_argument("wilcoxon_rank_sum: both samples must be non-empty");

  auto ranks = detail::pool_midranks(x, y);

  WilcoxonMethod used = method;
  if (method == WilcoxonMethod::Auto)
    used = (x.size() < 20 && y.size() < 20) ? WilcoxonMethod::Exact : WilcoxonMethod::NormalApprox;
  if (used == WilcoxonMethod::Exact && x.size() + y.size() > 56)
    throw std::invalid_argument("wilcoxon_rank_sum: exact branch limited to n+m <= 56");

  WilcoxonResult out;
  out.statistic = static_cast<double>(ranks.doubled_sum_x) / 2.0;
  out.used = used;
  out.p_value = (used == WilcoxonMethod::Exact)
                    ? detail::exact_two_sided_p(ranks, x.size())
                    : detail::normal_two_sided_p(ranks, x.size(), y.size());
  return out;
}

}  // namespace csrl
