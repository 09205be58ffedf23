// 4-connected grid shortest paths over a level's wall mask.
#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <deque>
#include <limits>
#include <optional>
#include <queue>
#include <string>
#include <tuple>
#include <vector>

#include "pinsky/game.hpp"
#include "pinsky/level.hpp"

namespace pinsky {

/// Passability grid. Only walls block; keys, doors and monsters are open floor
/// for path measurement.
class WallMask {
 public:
  WallMask() = default;
  explicit WallMask(const Level& level)
      : width_(level.width()), height_(level.height()), wall_(level.cells().size(), 0) {
    for (std::size_t i = 0; i < wall_.size(); ++i) wall_[i] = level.cells()[i] == Tile::wall ? 1 : 0;
  }
  WallMask(int width, int height, std::vector<std::uint8_t> walls)
      : width_(width), height_(height), wall_(std::move(walls)) {}

  int width() const { return width_; }
  int height() const { return height_; }
  bool in_bounds(Cell p) const { return p.row >= 0 && p.col >= 0 && p.row < height_ && p.col < width_; }
  bool is_wall(Cell p) const { return wall_[index(p)] != 0; }
  std::size_t index(Cell p) const {
    return static_cast<std::size_t>(p.row) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(p.col);
  }

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> wall_;
};

struct PathQuery {
  const WallMask* grid = nullptr;
  Cell start;
  Cell goal;
};

struct PathResult {
  static constexpr int kUnreachable = -1;

  int cost = kUnreachable;
  std::vector<Cell> path;  // start..goal inclusive when reachable

  bool reachable() const { return cost != kUnreachable; }
};

namespace detail {

inline constexpr std::array<std::array<int, 2>, 4> kSteps{{{-1, 0}, {1, 0}, {0, -1}, {0, 1}}};

inline void check_query(const PathQuery& q) {
  if (q.grid == nullptr) throw ContractViolation("path query without a grid");
  for (Cell p : {q.start, q.goal}) {
    if (!q.grid->in_bounds(p)) throw ContractViolation("path endpoint outside the grid");
    if (q.grid->is_wall(p)) throw ContractViolation("path endpoint lies on a wall");
  }
}

inline std::vector<Cell> trace(const WallMask& g, const std::vector<int>& parent, Cell goal) {
  std::vector<Cell> path;
  int cur = static_cast<int>(g.index(goal));
  while (cur >= 0) {
    path.push_back({cur / g.width(), cur % g.width()});
    cur = parent[static_cast<std::size_t>(cur)];
  }
  std::reverse(path.begin(), path.end());
  return path;
}

}  // namespace detail

/// A* with the Manhattan heuristic. Open-list priority is (f, g, row, col)
/// ascending, so equal-cost searches always expand in the same order.
inline PathResult astar(const PathQuery& q) {
  detail::check_query(q);
  const WallMask& g = *q.grid;
  const std::size_t n = static_cast<std::size_t>(g.width()) * static_cast<std::size_t>(g.height());
  constexpr int kInf = std::numeric_limits<int>::max();
  std::vector<int> best(n, kInf);
  std::vector<int> parent(n, -1);
  std::vector<std::uint8_t> closed(n, 0);

  using Entry = std::tuple<int, int, int, int>;  // f, g, row, col
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> open;
  best[g.index(q.start)] = 0;
  open.emplace(manhattan(q.start, q.goal), 0, q.start.row, q.start.col);

  while (!open.empty()) {
    auto [f, cost, r, c] = open.top();
    open.pop();
    const Cell cur{r, c};
    const std::size_t ci = g.index(cur);
    if (closed[ci]) continue;
    closed[ci] = 1;
    if (cur == q.goal) {
      PathResult out;
      out.cost = cost;
      out.path = detail::trace(g, parent, q.goal);
      return out;
    }
    for (auto [dr, dc] : detail::kSteps) {
      const Cell nb{r + dr, c + dc};
      if (!g.in_bounds(nb) || g.is_wall(nb)) continue;
      const std::size_t ni = g.index(nb);
      if (closed[ni] || cost + 1 >= best[ni]) continue;
      best[ni] = cost + 1;
      parent[ni] = static_cast<int>(ci);
      open.emplace(cost + 1 + manhattan(nb, q.goal), cost + 1, nb.row, nb.col);
    }
  }
  return {};
}

/// Exhaustive breadth-first expansion; the reference that A* is checked against.
inline PathResult bfs_oracle(const PathQuery& q) {
  detail::check_query(q);
  const WallMask& g = *q.grid;
  const std::size_t n = static_cast<std::size_t>(g.width()) * static_cast<std::size_t>(g.height());
  std::vector<int> dist(n, -1);
  std::vector<int> parent(n, -1);
  std::deque<Cell> frontier{q.start};
  dist[g.index(q.start)] = 0;
  while (!frontier.empty()) {
    const Cell cur = frontier.front();
    frontier.pop_front();
    for (auto [dr, dc] : detail::kSteps) {
      const Cell nb{cur.row + dr, cur.col + dc};
      if (!g.in_bounds(nb) || g.is_wall(nb)) continue;
      const std::size_t ni = g.index(nb);
      if (dist[ni] >= 0) continue;
      dist[ni] = dist[g.index(cur)] + 1;
      parent[ni] = static_cast<int>(g.index(cur));
      frontier.push_back(nb);
    }
  }
  PathResult out;
  out.cost = dist[g.index(q.goal)];
  if (out.reachable()) out.path = detail::trace(g, parent, q.goal);
  return out;
}

}  // namespace pinsky
