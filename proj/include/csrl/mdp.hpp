#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace csrl {

struct Transition {
  int next_state = 0;
  double reward = 0.0;
  bool terminal = false;
};

/// Deterministic finite MDP: every non-terminal (state, action) pair has
/// exactly one transition entry. Terminal states carry no outgoing entries.
class DiscreteMdp {
 public:
  DiscreteMdp(int state_count, int action_count, int initial_state, double discount)
      : state_count_(state_count),
        action_count_(action_count),
        initial_state_(initial_state),
        discount_(discount),
        table_(static_cast<std::size_t>(state_count) * action_count),
        has_entry_(static_cast<std::size_t>(state_count) * action_count, false),
        terminal_(state_count, false) {
    if (state_count <= 0 || action_count <= 0)
      throw std::invalid_argument("DiscreteMdp: non-positive state or action count");
    if (initial_state < 0 || initial_state >= state_count)
      throw std::invalid_argument("DiscreteMdp: initial state out of range");
    if (!(discount >= 0.0 && discount <= 1.0))
      throw std::invalid_argument("DiscreteMdp: discount outside [0,1]");
  }

  int state_count() const { return state_count_; }
  int action_count() const { return action_count_; }
  int initial_state() const { return initial_state_; }
  double discount() const { return discount_; }

  void set_transition(int s, int a, Transition t) {
    check_state(s);
    check_action(a);
    if (t.next_state < 0 || t.next_state >= state_count_)
      throw std::invalid_argument("set_transition: next state out of range");
    table_[index(s, a)] = t;
    has_entry_[index(s, a)] = true;
  }

  void mark_terminal(int s) {
    check_state(s);
    terminal_[s] = true;
  }

  bool is_terminal(int s) const {
    check_state(s);
    return terminal_[s];
  }

  /// Throws unless every non-terminal (s, a) has exactly one entry.
  void validate() const {
    for (int s = 0; s < state_count_; ++s) {
      for (int a = 0; a < action_count_; ++a) {
        if (!terminal_[s] && !has_entry_[index(s, a)])
          throw std::invalid_argument("DiscreteMdp: missing transition for state " +
                                      std::to_string(s) + " action " + std::to_string(a));
      }
    }
  }

  Transition step(int s, int a) const {
    check_state(s);
    check_action(a);
    if (terminal_[s]) throw std::invalid_argument("step: state is terminal");
    if (!has_entry_[index(s, a)]) throw std::invalid_argument("step: no transition entry");
    return table_[index(s, a)];
  }

 private:
  std::size_t index(int s, int a) const {
    return static_cast<std::size_t>(s) * action_count_ + a;
  }
  void check_state(int s) const {
    if (s < 0 || s >= state_count_) throw std::invalid_argument("unknown state id");
  }
  void check_action(int a) const {
    if (a < 0 || a >= action_count_) throw std::invalid_argument("unknown action id");
  }

  int state_count_;
  int action_count_;
  int initial_state_;
  double discount_;
  std::vector<Transition> table_;
  std::vector<bool> has_entry_;
  std::vector<bool> terminal_;
};

struct TrajectoryStep {
  int state = 0;
  int action = 0;
  double reward = 0.0;
  int next_state = 0;
};

class Trajectory {
 public:
  void push(TrajectoryStep step) {
    if (!steps_.empty() && steps_.back().next_state != step.state)
      throw std::invalid_argument("Trajectory: steps do not chain");
    if (terminal_) throw std::invalid_argument("Trajectory: already terminated");
    steps_.push_back(step);
  }

  void mark_terminal() { terminal_ = true; }

  bool terminal() const { return terminal_; }
  bool empty() const { return steps_.empty(); }
  std::size_t size() const { return steps_.size(); }
  const std::vector<TrajectoryStep>& steps() const { return steps_; }

  double discounted_return(double gamma) const {
    double g = 0.0;
    double w = 1.0;
    for (const auto& s : steps_) {
      g += w * s.reward;
      w *= gamma;
    }
    return g;
  }

 private:
  std::vector<TrajectoryStep> steps_;
  bool terminal_ = false;
};

/// Exact distribution over outcome returns, p(c|s) or p(c|s,a).
class ReturnDistribution {
 public:
  void add(double outcome, double probability) { mass_[outcome] += probability; }

  const std::map<double, double>& mass() const { return mass_; }

  double total_probability() const {
    double t = 0.0;
    for (const auto& [c, p] : mass_) t += p;
    return t;
  }

  double mean() const {
    double m = 0.0;
    for (const auto& [c, p] : mass_) m += c * p;
    return m;
  }

  double variance() const {
    double m = mean();
    double v = 0.0;
    for (const auto& [c, p] : mass_) v += p * (c - m) * (c - m);
    return v;
  }

  /// Probability-weighted mixture of several distributions.
  static ReturnDistribution mixture(std::span<const ReturnDistribution> parts,
                                    std::span<const double> weights) {
    if (parts.size() != weights.size())
      throw std::invalid_argument("mixture: size mismatch");
    ReturnDistribution out;
    for (std::size_t i = 0; i < parts.size(); ++i)
      for (const auto& [c, p] : parts[i].mass()) out.add(c, weights[i] * p);
    return out;
  }

 private:
  std::map<double, double> mass_;
};

class EnumerationBudgetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Probabilities over actions in a given state; must sum to 1.
using StochasticPolicy = std::function<std::vector<double>(int state)>;

struct EnumerationOptions {
  std::optional<int> forced_first_action;  // enables p(c|s,a)
  double mass_cutoff = 1e-9;               // branches below this mass are closed out
  long long trajectory_budget = 10000;
  int step_cap = 10000;
};

/// Brute-force return-distribution oracle: enumerates every trajectory from s
/// under the policy and accumulates the exact probability of each discounted
/// return. Branches are truncated once their mass drops below the cutoff, so
/// probabilities always sum to 1; on acyclic MDPs the result is exact.
inline ReturnDistribution return_distribution(const DiscreteMdp& env, int s,
                                              const StochasticPolicy& policy,
                                              EnumerationOptions opts = {}) {
  ReturnDistribution dist;
  long long leaves = 0;

  struct Frame {
    int state;
    double prob;
    double acc_return;
    double discount_pow;
    int depth;
  };

  std::vector<Frame> stack;
  stack.push_back({s, 1.0, 0.0, 1.0, 0});

  while (!stack.empty()) {
    Frame f = stack.back();
    stack.pop_back();

    if (env.is_terminal(f.state) || f.depth >= opts.step_cap || f.prob < opts.mass_cutoff) {
      dist.add(f.acc_return, f.prob);
      if (++leaves > opts.trajectory_budget)
        throw EnumerationBudgetError("return_distribution: trajectory budget exceeded");
      continue;
    }

    std::vector<double> probs;
    if (f.depth == 0 && opts.forced_first_action) {
      probs.assign(env.action_count(), 0.0);
      int a = *opts.forced_first_action;
      if (a < 0 || a >= env.action_count())
        throw std::invalid_argument("return_distribution: forced action out of range");
      probs[a] = 1.0;
    } else {
      probs = policy(f.state);
      if (static_cast<int>(probs.size()) != env.action_count())
        throw std::invalid_argument("return_distribution: policy size mismatch");
    }

    for (int a = 0; a < env.action_count(); ++a) {
      if (probs[a] <= 0.0) continue;
      Transition t = env.step(f.state, a);
      Frame next;
      next.state = t.next_state;
      next.prob = f.prob * probs[a];
      next.acc_return = f.acc_return + f.discount_pow * t.reward;
      next.discount_pow = f.discount_pow * env.discount();
      next.depth = f.depth + 1;
      if (t.terminal) {
        dist.add(next.acc_return, next.prob);
        if (++leaves > opts.trajectory_budget)
          throw EnumerationBudgetError("return_distribution: trajectory budget exceeded");
      } else {
        stack.push_back(next);
      }
    }
  }
  return dist;
}

inline StochasticPolicy uniform_policy(int action_count) {
  return [action_count](int) {
    return std::vector<double>(action_count, 1.0 / action_count);
  };
}

}  // namespace csrl
