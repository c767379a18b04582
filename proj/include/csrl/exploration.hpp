#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "csrl/qlearning.hpp"
#include "csrl/rng.hpp"
#include "csrl/state_importance.hpp"

namespace csrl {

class ScheduleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Adjusted non-critical exploration rate that equalizes the overall
/// exploitation probability with plain epsilon-greedy:
///   eps' = (eps - (1-k)q) / (1-q).
/// Values outside [0,1] beyond float slop signal an inconsistent schedule.
inline double epsilon_prime(double eps, double k, double q) {
  if (!(q > 0.0 && q < 1.0)) throw std::invalid_argument("epsilon_prime: q outside (0,1)");
  double value = (eps - (1.0 - k) * q) / (1.0 - q);
  constexpr double kSlop = 1e-12;
  if (value < -kSlop || value > 1.0 + kSlop)
    throw ScheduleError("epsilon_prime: result " + std::to_string(value) +
                        " outside [0,1]; eps/k/q are inconsistent");
  return std::clamp(value, 0.0, 1.0);
}

/// Linear epsilon annealing plus the critical-state parameters k and q.
struct ScheduleSpec {
  double eps_start = 0.905;
  double eps_end = 0.005;
  long long anneal_steps = 100000;
  double k = 0.95;
  double q = 0.1;

  /// eps(t): linear in t, clamped to the end value after anneal_steps.
  double epsilon_at(long long t) const {
    if (anneal_steps <= 0) return eps_end;
    double frac = std::min(1.0, static_cast<double>(std::max<long long>(t, 0)) /
                                    static_cast<double>(anneal_steps));
    return eps_start + (eps_end - eps_start) * frac;
  }

  double epsilon_prime_at(long long t) const { return epsilon_prime(epsilon_at(t), k, q); }

  void validate() const {
    if (!(eps_start >= 0.0 && eps_start <= 1.0) || !(eps_end >= 0.0 && eps_end <= 1.0))
      throw ScheduleError("ScheduleSpec: eps outside [0,1]");
    if (anneal_steps <= 0) throw ScheduleError("ScheduleSpec: anneal_steps must be positive");
    if (!(k > 0.0 && k <= 1.0)) throw ScheduleError("ScheduleSpec: k outside (0,1]");
    if (!(q > 0.0 && q < 1.0)) throw ScheduleError("ScheduleSpec: q outside (0,1)");
    epsilon_prime(eps_start, k, q);  // both endpoints must map into [0,1]
    epsilon_prime(eps_end, k, q);
  }
};

enum class PolicyKind { EpsilonGreedy, Proposed, EExploitation, Default };

inline std::string to_string(PolicyKind kind) {
  switch (kind) {
    case PolicyKind::EpsilonGreedy: return "egreedy";
    case PolicyKind::Proposed: return "proposed";
    case PolicyKind::EExploitation: return "eexploitation";
    case PolicyKind::Default: return "default";
  }
  return "unknown";
}

inline PolicyKind policy_kind_from_string(const std::string& name) {
  if (name == "egreedy") return PolicyKind::EpsilonGreedy;
  if (name == "proposed") return PolicyKind::Proposed;
  if (name == "eexploitation") return PolicyKind::EExploitation;
  if (name == "default") return PolicyKind::Default;
  throw std::invalid_argument("unknown policy kind: " + name);
}

struct PolicySpec {
  PolicyKind kind = PolicyKind::EpsilonGreedy;
  ScheduleSpec schedule;
  std::optional<double> exploitation_ratio;  // EExploitation only

  /// e = q*k unless set explicitly.
  double e() const { return exploitation_ratio.value_or(schedule.q * schedule.k); }

  void validate() const {
    schedule.validate();
    double ev = e();
    if (!(ev >= 0.0 && ev <= 1.0)) throw ScheduleError("PolicySpec: e outside [0,1]");
  }
};

struct ActionChoice {
  int action = 0;
  bool deliberate_exploit = false;  // counts toward the exploitation rate
};

/// Softmax over the Q row with unit temperature; the tabular stand-in for a
/// stochastic base policy.
inline int sample_softmax(const QTable& q, int s, Rng& rng) {
  auto row = q.row(s);
  double mx = *std::max_element(row.begin(), row.end());
  std::vector<double> w(row.size());
  double total = 0.0;
  for (std::size_t a = 0; a < row.size(); ++a) {
    w[a] = std::exp(row[a] - mx);
    total += w[a];
  }
  double u = rng.uniform_double() * total;
  double acc = 0.0;
  for (std::size_t a = 0; a < row.size(); ++a) {
    acc += w[a];
    if (u < acc) return static_cast<int>(a);
  }
  return static_cast<int>(row.size()) - 1;
}

/// One action draw under the configured policy.
///
/// EpsilonGreedy: random action w.p. eps(t), greedy otherwise.
/// Proposed: on critical states greedy w.p. k, random otherwise; elsewhere
///   epsilon-greedy at rate eps'(t). With no SI map yet (before the first
///   refresh) every state takes the non-critical branch.
/// EExploitation: greedy w.p. e, softmax otherwise.
/// Default: softmax always.
///
/// "Random action" draws uniformly over all actions including the greedy one;
/// deliberate_exploit marks only the deliberate greedy branch.
inline ActionChoice select_action(const PolicySpec& policy, int s, const QTable& q,
                                  const SiMap& si_map, long long t, Rng& rng) {
  auto random_action = [&]() { return rng.uniform_index(q.action_count); };
  auto exploit = [&]() { return greedy_action(q, s, TieRule::UniformRandom, &rng); };

  switch (policy.kind) {
    case PolicyKind::EpsilonGreedy: {
      double eps = policy.schedule.epsilon_at(t);
      if (rng.bernoulli(eps)) return {random_action(), false};
      return {exploit(), true};
    }
    case PolicyKind::Proposed: {
      if (si_map.has_values() && si_map.is_critical(s)) {
        if (rng.bernoulli(policy.schedule.k)) return {exploit(), true};
        return {random_action(), false};
      }
      double eps_prime = policy.schedule.epsilon_prime_at(t);
      if (rng.bernoulli(eps_prime)) return {random_action(), false};
      return {exploit(), true};
    }
    case PolicyKind::EExploitation: {
      if (rng.bernoulli(policy.e())) return {exploit(), true};
      return {sample_softmax(q, s, rng), false};
    }
    case PolicyKind::Default:
      return {sample_softmax(q, s, rng), false};
  }
  throw std::logic_error("select_action: unreachable");
}

/// Analytic probability of a deliberate greedy choice, given the fraction of
/// time spent in critical states.
inline double exploitation_rate(const PolicySpec& policy, double critical_fraction,
                                long long t) {
  if (!(critical_fraction >= 0.0 && critical_fraction <= 1.0))
    throw std::invalid_argument("exploitation_rate: critical_fraction outside [0,1]");
  switch (policy.kind) {
    case PolicyKind::EpsilonGreedy:
      return 1.0 - policy.schedule.epsilon_at(t);
    case PolicyKind::Proposed: {
      double eps_prime = policy.schedule.epsilon_prime_at(t);
      return critical_fraction * policy.schedule.k +
             (1.0 - critical_fraction) * (1.0 - eps_prime);
    }
    case PolicyKind::EExploitation:
      return policy.e();
    case PolicyKind::Default:
      return 0.0;
  }
  throw std::logic_error("exploitation_rate: unreachable");
}

}  // namespace csrl
