#pragma once

#include <algorithm>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "csrl/cliff_maze.hpp"
#include "csrl/mdp.hpp"
#include "csrl/rng.hpp"

namespace csrl {

/// Dense action-value table with the learning parameters it was trained with.
struct QTable {
  int state_count = 0;
  int action_count = 0;
  double alpha = 0.3;
  double gamma = 0.99;
  std::vector<double> values;  // state-major

  QTable() = default;
  QTable(int states, int actions, double alpha_, double gamma_)
      : state_count(states),
        action_count(actions),
        alpha(alpha_),
        gamma(gamma_),
        values(static_cast<std::size_t>(states) * actions, 0.0) {
    if (states <= 0 || actions <= 0) throw std::invalid_argument("QTable: bad shape");
    if (!(alpha > 0.0 && alpha <= 1.0)) throw std::invalid_argument("QTable: alpha outside (0,1]");
    if (!(gamma >= 0.0 && gamma <= 1.0)) throw std::invalid_argument("QTable: gamma outside [0,1]");
  }

  double& q(int s, int a) { return values[static_cast<std::size_t>(s) * action_count + a]; }
  double q(int s, int a) const { return values[static_cast<std::size_t>(s) * action_count + a]; }

  std::span<const double> row(int s) const {
    if (s < 0 || s >= state_count) throw std::invalid_argument("QTable::row: state out of range");
    return {values.data() + static_cast<std::size_t>(s) * action_count,
            static_cast<std::size_t>(action_count)};
  }

  double max_q(int s) const {
    auto r = row(s);
    return *std::max_element(r.begin(), r.end());
  }
};

struct Checkpoint {
  long long step = 0;
  std::vector<double> q_snapshot;
};

/// One-episode Q-learning sweep, processed from the end of the trajectory so
/// that later targets feed earlier updates within the same episode. Terminal
/// steps use the raw reward as target.
inline void update_episode(QTable& q, const Trajectory& traj) {
  if (traj.empty()) throw std::invalid_argument("update_episode: empty trajectory");
  const auto& steps = traj.steps();
  for (auto it = steps.rbegin(); it != steps.rend(); ++it) {
    bool is_last = (it == steps.rbegin());
    double target = it->reward;
    if (!(is_last && traj.terminal())) target += q.gamma * q.max_q(it->next_state);
    double& cell = q.q(it->state, it->action);
    cell += q.alpha * (target - cell);
  }
}

enum class TieRule { FixedOrder, UniformRandom };

/// Argmax over the Q row. FixedOrder takes the lowest-index maximizer
/// (evaluation); UniformRandom draws among maximizers (exploration).
inline int greedy_action(const QTable& q, int s, TieRule rule, Rng* rng = nullptr) {
  auto r = q.row(s);
  double best = r[0];
  for (double v : r) best = std::max(best, v);
  if (rule == TieRule::FixedOrder) {
    for (int a = 0; a < q.action_count; ++a)
      if (r[a] == best) return a;
    return 0;
  }
  if (rng == nullptr) throw std::invalid_argument("greedy_action: UniformRandom needs an rng");
  int ties = 0;
  for (int a = 0; a < q.action_count; ++a)
    if (r[a] == best) ++ties;
  int pick = rng->uniform_index(ties);
  for (int a = 0; a < q.action_count; ++a) {
    if (r[a] == best && pick-- == 0) return a;
  }
  return q.action_count - 1;
}

struct RolloutResult {
  bool reached_goal = false;
  int steps = 0;
  double discounted_return = 0.0;
  bool cut = false;  // stopped by cap or cycle instead of a terminal
};

/// Deterministic greedy rollout (fixed-order ties) from the initial state.
/// The policy and environment are both deterministic, so revisiting a state
/// means an endless zero-progress loop; the rollout cuts there.
inline RolloutResult greedy_rollout(const DiscreteMdp& env, const QTable& q, int goal_state,
                                    int step_cap = 10000) {
  RolloutResult out;
  std::vector<bool> visited(env.state_count(), false);
  int s = env.initial_state();
  double w = 1.0;
  while (out.steps < step_cap) {
    if (env.is_terminal(s)) {
      out.reached_goal = (s == goal_state);
      return out;
    }
    if (visited[s]) {
      out.cut = true;
      return out;
    }
    visited[s] = true;
    int a = greedy_action(q, s, TieRule::FixedOrder);
    Transition t = env.step(s, a);
    out.discounted_return += w * t.reward;
    w *= env.discount();
    ++out.steps;
    s = t.next_state;
    if (t.terminal) {
      out.reached_goal = (t.next_state == goal_state);
      return out;
    }
  }
  out.cut = true;
  return out;
}

/// True iff the greedy rollout reaches the goal in exactly the BFS-optimal
/// number of steps.
inline bool greedy_rollout_is_optimal(const CliffMaze& maze, const DiscreteMdp& env,
                                      const QTable& q) {
  auto optimal = maze.shortest_path_length();
  if (!optimal) return false;
  RolloutResult r = greedy_rollout(env, q, maze.goal_state());
  return r.reached_goal && r.steps == *optimal;
}

}  // namespace csrl
