#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "csrl/mathutil.hpp"
#include "csrl/qlearning.hpp"
#include "csrl/rng.hpp"

namespace csrl {

/// State importance of one state: population variance of its action values
/// under a uniform action distribution.
inline double si_exact(std::span<const double> q_row) {
  if (q_row.size() < 2) throw std::invalid_argument("si_exact: need at least 2 actions");
  return population_variance(q_row);
}

/// Axis-aligned box of continuous action bounds, one (lo, hi) pair per dim.
using ActionBounds = std::vector<std::pair<double, double>>;

/// Monte Carlo state importance for continuous actions: population variance
/// of qf(s, a) over n actions sampled uniformly from the bounds.
template <typename QFunction>
double si_monte_carlo(QFunction&& qf, int s, int n, const ActionBounds& bounds, Rng& rng) {
  if (n < 2) throw std::invalid_argument("si_monte_carlo: need n >= 2");
  if (bounds.empty()) throw std::invalid_argument("si_monte_carlo: empty action bounds");
  for (const auto& [lo, hi] : bounds)
    if (!std::isfinite(lo) || !std::isfinite(hi) || !(lo <= hi))
      throw std::invalid_argument("si_monte_carlo: bounds must be finite and ordered");

  std::vector<double> action(bounds.size());
  double mean = 0.0, m2 = 0.0;  // Welford
  for (int i = 0; i < n; ++i) {
    for (std::size_t d = 0; d < bounds.size(); ++d)
      action[d] = rng.uniform_in(bounds[d].first, bounds[d].second);
    double v = qf(s, std::span<const double>(action));
    if (!std::isfinite(v)) {
      std::ostringstream msg;
      msg << "si_monte_carlo: non-finite Q value at action (";
      for (std::size_t d = 0; d < action.size(); ++d) msg << (d ? ", " : "") << action[d];
      msg << ")";
      throw std::runtime_error(msg.str());
    }
    double delta = v - mean;
    mean += delta / (i + 1);
    m2 += delta * (v - mean);
  }
  return m2 / n;
}

/// Threshold separating the upper q fraction of SI values: the (1-q) quantile
/// with linear interpolation. Criticality is the strict test SI > threshold.
inline double compute_threshold(std::vector<double> si_values, double q) {
  if (si_values.empty()) throw std::invalid_argument("compute_threshold: empty collection");
  if (!(q > 0.0 && q < 1.0)) throw std::invalid_argument("compute_threshold: q outside (0,1)");
  return quantile_linear(std::move(si_values), 1.0 - q);
}

/// Per-state SI values, the active threshold, and the critical-state set.
struct SiMap {
  std::unordered_map<int, double> si;
  double threshold = std::numeric_limits<double>::infinity();
  double critical_ratio = 0.0;
  std::unordered_set<int> critical;

  bool has_values() const { return !si.empty(); }
  bool is_critical(int s) const { return critical.count(s) > 0; }
};

inline SiMap build_si_map(const std::vector<std::pair<int, double>>& state_si, double q) {
  if (state_si.empty()) throw std::invalid_argument("build_si_map: empty input");
  std::vector<double> values;
  values.reserve(state_si.size());
  for (const auto& [s, v] : state_si) values.push_back(v);
  SiMap map;
  map.critical_ratio = q;
  map.threshold = compute_threshold(values, q);
  for (const auto& [s, v] : state_si) {
    map.si[s] = v;
    if (v > map.threshold) map.critical.insert(s);
  }
  return map;
}

/// FIFO ring of the most recently visited states.
class RecentStateBuffer {
 public:
  explicit RecentStateBuffer(std::size_t capacity = 1000, long long refresh_period = 1000)
      : capacity_(capacity), refresh_period_(refresh_period) {
    if (capacity == 0) throw std::invalid_argument("RecentStateBuffer: zero capacity");
    ring_.reserve(capacity);
  }

  void push(int state) {
    if (ring_.size() < capacity_) {
      ring_.push_back(state);
    } else {
      ring_[head_] = state;
      head_ = (head_ + 1) % capacity_;
    }
  }

  std::size_t size() const { return ring_.size(); }
  std::size_t capacity() const { return capacity_; }
  long long refresh_period() const { return refresh_period_; }
  bool empty() const { return ring_.empty(); }

  /// Distinct states currently held, in first-seen order.
  std::vector<int> unique_states() const {
    std::vector<int> out;
    std::unordered_set<int> seen;
    for (std::size_t i = 0; i < ring_.size(); ++i) {
      int s = ring_[(head_ + i) % ring_.size()];
      if (seen.insert(s).second) out.push_back(s);
    }
    return out;
  }

 private:
  std::size_t capacity_;
  long long refresh_period_;
  std::vector<int> ring_;
  std::size_t head_ = 0;
};

/// Recompute SI over the buffered states and swap in a fresh SiMap.
/// si_of maps a state id to its SI value.
template <typename SiFn>
SiMap refresh_critical_set(const RecentStateBuffer& buffer, SiFn&& si_of, double q) {
  if (buffer.empty()) throw std::invalid_argument("refresh_critical_set: empty buffer");
  std::vector<std::pair<int, double>> state_si;
  for (int s : buffer.unique_states()) state_si.emplace_back(s, si_of(s));
  return build_si_map(state_si, q);
}

/// SI of every listed state from a tabular Q-function.
inline std::vector<std::pair<int, double>> si_of_states(const QTable& q,
                                                        std::span<const int> states) {
  std::vector<std::pair<int, double>> out;
  out.reserve(states.size());
  for (int s : states) out.emplace_back(s, si_exact(q.row(s)));
  return out;
}

struct TopKEntry {
  int state = 0;
  std::vector<double> coords;
  double si = 0.0;
};

/// Step-stamped record of the K highest-SI states in a metric embedding.
struct TopKRecord {
  long long step = 0;
  std::vector<TopKEntry> entries;
};

template <typename CoordFn>
TopKRecord top_k_by_si(long long step, const std::vector<std::pair<int, double>>& state_si,
                       std::size_t k, CoordFn&& coords_of) {
  std::vector<std::pair<int, double>> sorted = state_si;
  std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  TopKRecord rec;
  rec.step = step;
  for (std::size_t i = 0; i < sorted.size() && i < k; ++i)
    rec.entries.push_back({sorted[i].first, coords_of(sorted[i].first), sorted[i].second});
  return rec;
}

inline double euclidean_distance(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::invalid_argument("euclidean_distance: dim mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    double d = a[i] - b[i];
    s += d * d;
  }
  return std::sqrt(s);
}

/// Set-to-set distance: minimum over all cross pairs.
inline double min_cross_distance(const TopKRecord& a, const TopKRecord& b) {
  if (a.entries.empty() || b.entries.empty())
    throw std::invalid_argument("min_cross_distance: empty record");
  double best = std::numeric_limits<double>::infinity();
  for (const auto& ea : a.entries)
    for (const auto& eb : b.entries)
      best = std::min(best, euclidean_distance(ea.coords, eb.coords));
  return best;
}

struct MatchPoint {
  long long step = 0;
  double distance = 0.0;
  double ratio = 0.0;  // m_t = 1 - d_t / d_max
};

/// Match-ratio series m_t = 1 - d_t / d_max against the final top-K record,
/// where d_t is the minimum cross-pair distance and d_max the largest d_t.
/// A degenerate all-zero distance series maps to m_t = 1 everywhere.
inline std::vector<MatchPoint> match_ratio_series(std::span<const TopKRecord> checkpoints,
                                                  const TopKRecord& final_record) {
  if (checkpoints.size() < 2)
    throw std::invalid_argument("match_ratio_series: need at least 2 checkpoints");
  std::vector<MatchPoint> out;
  out.reserve(checkpoints.size());
  double d_max = 0.0;
  for (const auto& rec : checkpoints) {
    MatchPoint p;
    p.step = rec.step;
    p.distance = min_cross_distance(rec, final_record);
    d_max = std::max(d_max, p.distance);
    out.push_back(p);
  }
  for (auto& p : out) p.ratio = (d_max == 0.0) ? 1.0 : 1.0 - p.distance / d_max;
  return out;
}

/// SI values over a full state grid normalized to [0, 1]; an all-zero map
/// stays all-zero.
inline std::vector<double> normalized_si_grid(std::span<const double> si_by_state) {
  double mx = 0.0;
  for (double v : si_by_state) mx = std::max(mx, v);
  std::vector<double> out(si_by_state.begin(), si_by_state.end());
  if (mx > 0.0)
    for (double& v : out) v /= mx;
  return out;
}

/// CSV rows (state, row, col, si, is_critical) for an SiMap.
template <typename CoordFn>
std::string si_map_to_csv(const SiMap& map, CoordFn&& coords_of) {
  std::vector<int> states;
  states.reserve(map.si.size());
  for (const auto& [s, v] : map.si) states.push_back(s);
  std::sort(states.begin(), states.end());
  std::ostringstream out;
  out << "state,row,col,si,is_critical\n";
  out.precision(17);
  for (int s : states) {
    auto [r, c] = coords_of(s);
    out << s << ',' << r << ',' << c << ',' << map.si.at(s) << ','
        << (map.is_critical(s) ? 1 : 0) << '\n';
  }
  return out.str();
}

}  // namespace csrl
