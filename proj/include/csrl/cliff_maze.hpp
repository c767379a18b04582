#pragma once

#include <deque>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "csrl/mdp.hpp"

namespace csrl {

/// Grid actions, row 0 at the top.
enum MazeAction : int { kUp = 0, kDown = 1, kLeft = 2, kRight = 3 };
inline constexpr int kMazeActionCount = 4;

/// Cliff-maze description. The standard layout is an 11x11 grid with start in
/// the upper-left corner, goal in the lower-right corner, and cliffs in every
/// cell of the center column except the center cell. Entering the goal pays
/// +1, entering a cliff pays -1, every other step pays 0; moving off-grid
/// leaves the agent in place. Episodes end exactly on goal or cliff entry.
struct CliffMaze {
  int width = 11;
  int height = 11;
  int start_row = 0;
  int start_col = 0;
  int goal_row = 10;
  int goal_col = 10;
  std::set<std::pair<int, int>> cliffs;

  static CliffMaze standard() {
    CliffMaze m;
    int center_col = m.width / 2;
    int center_row = m.height / 2;
    for (int r = 0; r < m.height; ++r)
      if (r != center_row) m.cliffs.insert({r, center_col});
    return m;
  }

  static CliffMaze without_cliffs() { return CliffMaze{}; }

  int state_count() const { return width * height; }
  int state_of(int row, int col) const { return row * width + col; }
  std::pair<int, int> coords_of(int state) const { return {state / width, state % width}; }
  int start_state() const { return state_of(start_row, start_col); }
  int goal_state() const { return state_of(goal_row, goal_col); }

  bool in_bounds(int row, int col) const {
    return row >= 0 && row < height && col >= 0 && col < width;
  }
  bool is_cliff(int row, int col) const { return cliffs.count({row, col}) > 0; }
  bool is_goal(int row, int col) const { return row == goal_row && col == goal_col; }
  bool is_terminal_cell(int row, int col) const { return is_cliff(row, col) || is_goal(row, col); }

  /// Target cell of an action; off-grid moves stay in place.
  std::pair<int, int> move(int row, int col, int action) const {
    int nr = row, nc = col;
    switch (action) {
      case kUp: nr = row - 1; break;
      case kDown: nr = row + 1; break;
      case kLeft: nc = col - 1; break;
      case kRight: nc = col + 1; break;
      default: throw std::invalid_argument("CliffMaze::move: unknown action");
    }
    if (!in_bounds(nr, nc)) return {row, col};
    return {nr, nc};
  }

  DiscreteMdp to_mdp(double discount = 0.99) const {
    DiscreteMdp mdp(state_count(), kMazeActionCount, start_state(), discount);
    for (int r = 0; r < height; ++r) {
      for (int c = 0; c < width; ++c) {
        if (is_terminal_cell(r, c)) {
          mdp.mark_terminal(state_of(r, c));
          continue;
        }
        for (int a = 0; a < kMazeActionCount; ++a) {
          auto [nr, nc] = move(r, c, a);
          Transition t;
          t.next_state = state_of(nr, nc);
          t.reward = is_goal(nr, nc) ? 1.0 : (is_cliff(nr, nc) ? -1.0 : 0.0);
          t.terminal = is_terminal_cell(nr, nc);
          mdp.set_transition(state_of(r, c), a, t);
        }
      }
    }
    mdp.validate();
    return mdp;
  }

  /// Breadth-first count of steps from start to goal avoiding cliffs.
  /// Empty when no cliff-free path exists.
  std::optional<int> shortest_path_length() const {
    if (start_row == goal_row && start_col == goal_col) return 0;
    std::vector<int> dist(state_count(), -1);
    std::deque<int> queue;
    dist[start_state()] = 0;
    queue.push_back(start_state());
    while (!queue.empty()) {
      int s = queue.front();
      queue.pop_front();
      auto [r, c] = coords_of(s);
      for (int a = 0; a < kMazeActionCount; ++a) {
        auto [nr, nc] = move(r, c, a);
        if (nr == r && nc == c) continue;
        if (is_cliff(nr, nc)) continue;
        int ns = state_of(nr, nc);
        if (dist[ns] >= 0) continue;
        dist[ns] = dist[s] + 1;
        if (ns == goal_state()) return dist[ns];
        queue.push_back(ns);
      }
    }
    return std::nullopt;
  }

  /// Plain-text grid: S start, G goal, C cliff, . free; one row per line.
  std::string to_grid_text() const {
    std::ostringstream out;
    for (int r = 0; r < height; ++r) {
      for (int c = 0; c < width; ++c) {
        char ch = '.';
        if (is_cliff(r, c)) ch = 'C';
        if (r == start_row && c == start_col) ch = 'S';
        if (is_goal(r, c)) ch = 'G';
        out << ch;
      }
      out << '\n';
    }
    return out.str();
  }

  static CliffMaze from_grid_text(const std::string& text) {
    std::vector<std::string> rows;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line))
      if (!line.empty()) rows.push_back(line);
    if (rows.empty()) throw std::invalid_argument("from_grid_text: empty grid");
    CliffMaze m;
    m.height = static_cast<int>(rows.size());
    m.width = static_cast<int>(rows[0].size());
    m.cliffs.clear();
    bool saw_start = false, saw_goal = false;
    for (int r = 0; r < m.height; ++r) {
      if (static_cast<int>(rows[r].size()) != m.width)
        throw std::invalid_argument("from_grid_text: ragged grid");
      for (int c = 0; c < m.width; ++c) {
        switch (rows[r][c]) {
          case 'S': m.start_row = r; m.start_col = c; saw_start = true; break;
          case 'G': m.goal_row = r; m.goal_col = c; saw_goal = true; break;
          case 'C': m.cliffs.insert({r, c}); break;
          case '.': break;
          default: throw std::invalid_argument("from_grid_text: unknown cell character");
        }
      }
    }
    if (!saw_start || !saw_goal)
      throw std::invalid_argument("from_grid_text: grid must contain S and G");
    return m;
  }
};

}  // namespace csrl
