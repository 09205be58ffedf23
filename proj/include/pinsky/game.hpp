// Deterministic dZelda simulation: avatar movement, key/door objectives,
// greedy-chasing monsters, and the two reward schemes.
#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>
#include <type_traits>
#include <unordered_set>
#include <utility>
#include <vector>

#include "pinsky/level.hpp"

namespace pinsky {

enum class Action : std::uint8_t { up, down, left, right, attack };
inline constexpr int kActionCount = 5;
inline constexpr std::array<Action, kActionCount> kAllActions{Action::up, Action::down, Action::left,
                                                             Action::right, Action::attack};

enum class Orientation : std::uint8_t { north, south, east, west };
inline constexpr int kOrientationCount = 4;

enum class Status : std::uint8_t { running, won, lost, timeout };

enum class RewardKind : std::uint8_t { default_reward, aligned };

inline std::string_view action_name(Action a) {
  switch (a) {
    case Action::up: return "up";
    case Action::down: return "down";
    case Action::left: return "left";
    case Action::right: return "right";
    case Action::attack: return "attack";
  }
  return "?";
}

inline std::string_view status_name(Status s) {
  switch (s) {
    case Status::running: return "running";
    case Status::won: return "won";
    case Status::lost: return "lost";
    case Status::timeout: return "timeout";
  }
  return "?";
}

inline Cell offset(Cell p, Orientation o) {
  switch (o) {
    case Orientation::north: return {p.row - 1, p.col};
    case Orientation::south: return {p.row + 1, p.col};
    case Orientation::east: return {p.row, p.col + 1};
    case Orientation::west: return {p.row, p.col - 1};
  }
  return p;
}

inline Orientation move_direction(Action a) {
  switch (a) {
    case Action::up: return Orientation::north;
    case Action::down: return Orientation::south;
    case Action::left: return Orientation::west;
    default: return Orientation::east;
  }
}

class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

struct EventCounters {
  int kills = 0;
  int key_pickups = 0;
  int doors_opened = 0;

  friend bool operator==(const EventCounters&, const EventCounters&) = default;
};

/// Static per-level data shared by every state of an episode.
struct Board {
  Level level;
  std::vector<Cell> doors;  // row-major; door_visited is indexed the same way
  int max_game_len = 0;

  bool is_wall(Cell p) const { return level.at(p) == Tile::wall; }
  int door_index(Cell p) const {
    for (std::size_t i = 0; i < doors.size(); ++i)
      if (doors[i] == p) return static_cast<int>(i);
    return -1;
  }
};

struct GameState {
  std::shared_ptr<const Board> board;
  Cell avatar;
  Orientation orientation = Orientation::south;
  bool has_key = false;
  std::vector<Cell> keys;               // keys still on the map
  std::vector<std::uint8_t> door_visited;
  std::vector<Cell> monsters;           // alive monsters only
  int step = 0;
  Status status = Status::running;
  EventCounters events;

  const Level& level() const { return board->level; }
  int max_game_len() const { return board->max_game_len; }

  int doors_visited_count() const {
    int n = 0;
    for (auto v : door_visited) n += v ? 1 : 0;
    return n;
  }
  bool all_doors_visited() const { return doors_visited_count() == static_cast<int>(door_visited.size()); }

  bool has_key_at(Cell p) const {
    for (auto k : keys)
      if (k == p) return true;
    return false;
  }
  int monster_at(Cell p) const {
    for (std::size_t i = 0; i < monsters.size(); ++i)
      if (monsters[i] == p) return static_cast<int>(i);
    return -1;
  }

  /// Dynamic tile at `p` as the observation sees it. Avatar beats monster beats
  /// the static layer.
  Tile tile_at(Cell p) const {
    if (p == avatar) return Tile::avatar;
    if (monster_at(p) >= 0) return Tile::monster;
    const Tile base = level().at(p);
    switch (base) {
      case Tile::wall: return Tile::wall;
      case Tile::door: return Tile::door;
      case Tile::key: return has_key_at(p) ? Tile::key : Tile::floor;
      default: return Tile::floor;
    }
  }

  /// Everything that determines future play except the step counter.
  std::string dynamic_key() const {
    std::string k;
    k.reserve(8 + 4 * (keys.size() + monsters.size()) + door_visited.size());
    auto put = [&](Cell c) {
      for (int v : {c.row, c.col}) {
        k.push_back(static_cast<char>(v & 0xff));
        k.push_back(static_cast<char>(v >> 8));
      }
    };
    put(avatar);
    k.push_back(static_cast<char>(orientation));
    k.push_back(has_key ? 1 : 0);
    k.push_back(static_cast<char>(keys.size()));
    for (auto c : keys) put(c);
    for (auto v : door_visited) k.push_back(static_cast<char>(v));
    for (auto c : monsters) put(c);
    return k;
  }

  friend bool operator==(const GameState& a, const GameState& b) {
    return a.board == b.board && a.avatar == b.avatar && a.orientation == b.orientation &&
           a.has_key == b.has_key && a.keys == b.keys && a.door_visited == b.door_visited &&
           a.monsters == b.monsters && a.step == b.step && a.status == b.status &&
           a.events == b.events;
  }
};

inline std::shared_ptr<const Board> make_board(const Level& level, int max_game_len) {
  level.validate();
  if (max_game_len <= 0) throw ContractViolation("maxGameLen must be positive");
  auto b = std::make_shared<Board>();
  b->level = level;
  b->doors = level.find(Tile::door);
  b->max_game_len = max_game_len;
  return b;
}

inline GameState init_state(std::shared_ptr<const Board> board) {
  GameState s;
  s.avatar = board->level.avatar_spawn();
  s.orientation = Orientation::south;
  s.keys = board->level.find(Tile::key);
  s.monsters = board->level.find(Tile::monster);
  s.door_visited.assign(board->doors.size(), 0);
  s.board = std::move(board);
  return s;
}

/// Throws LevelError naming the violated invariant when `level` is invalid.
inline GameState init_state(const Level& level, int max_game_len) {
  return init_state(make_board(level, max_game_len));
}

namespace detail {

inline bool monster_blocked(const GameState& s, Cell p, std::size_t self) {
  if (s.board->is_wall(p)) return true;
  for (std::size_t j = 0; j < s.monsters.size(); ++j)
    if (j != self && s.monsters[j] == p) return true;
  return false;
}

// One greedy step toward the avatar along the axis of larger distance
// (horizontal on ties), falling back to the other axis, else staying.
inline void move_monster(GameState& s, std::size_t i) {
  const Cell m = s.monsters[i];
  const int dr = s.avatar.row - m.row;
  const int dc = s.avatar.col - m.col;
  if (dr == 0 && dc == 0) return;
  const int adr = dr < 0 ? -dr : dr;
  const int adc = dc < 0 ? -dc : dc;
  const Cell horizontal{m.row, m.col + (dc > 0 ? 1 : -1)};
  const Cell vertical{m.row + (dr > 0 ? 1 : -1), m.col};
  const bool horizontal_first = adc >= adr;
  const Cell first = horizontal_first ? horizontal : vertical;
  const Cell second = horizontal_first ? vertical : horizontal;
  const bool second_useful = horizontal_first ? adr > 0 : adc > 0;
  if (!monster_blocked(s, first, i)) {
    s.monsters[i] = first;
  } else if (second_useful && !monster_blocked(s, second, i)) {
    s.monsters[i] = second;
  }
}

}  // namespace detail

/// Advances the game by one tick in place.
inline void step_in_place(GameState& s, Action action) {
  if (s.status != Status::running) throw ContractViolation("step on a terminated game");

  // (1) avatar acts
  if (action == Action::attack) {
    const Cell target = offset(s.avatar, s.orientation);
    if (int idx = s.monster_at(target); idx >= 0) {
      s.monsters.erase(s.monsters.begin() + idx);
      ++s.events.kills;
    }
  } else {
    s.orientation = move_direction(action);
    const Cell target = offset(s.avatar, s.orientation);
    const Tile base = s.level().at(target);
    bool passable = base != Tile::wall;
    if (base == Tile::door && !s.has_key) passable = false;
    if (passable) {
      s.avatar = target;
      if (base == Tile::key) {
        for (std::size_t k = 0; k < s.keys.size(); ++k)
          if (s.keys[k] == target) {
            s.keys.erase(s.keys.begin() + static_cast<std::ptrdiff_t>(k));
            s.has_key = true;
            ++s.events.key_pickups;
            break;
          }
      } else if (base == Tile::door) {
        const int d = s.board->door_index(target);
        if (!s.door_visited[static_cast<std::size_t>(d)]) {
          s.door_visited[static_cast<std::size_t>(d)] = 1;
          ++s.events.doors_opened;
        }
      }
    }
  }

  // (2) monsters chase
  for (std::size_t i = 0; i < s.monsters.size(); ++i) detail::move_monster(s, i);

  // (3) contact, (4) win
  if (s.monster_at(s.avatar) >= 0) {
    s.status = Status::lost;
  } else if (s.has_key && s.all_doors_visited()) {
    s.status = Status::won;
  }

  // (5) clock
  ++s.step;
  if (s.status == Status::running && s.step >= s.max_game_len()) s.status = Status::timeout;
}

inline GameState step(GameState s, Action action) {
  step_in_place(s, action);
  return s;
}

struct EpisodeResult {
  Status final_status = Status::running;
  int n_steps = 0;
  double reward = 0.0;
  bool win = false;
  EventCounters events;

  friend bool operator==(const EpisodeResult&, const EpisodeResult&) = default;
};

inline double aligned_reward(Status status, int n_steps, int max_game_len) {
  const double frac = static_cast<double>(n_steps) / static_cast<double>(max_game_len);
  if (status == Status::won) return 1.0 - frac;
  // Deaths and timeouts share the survival branch; a timeout lands on 0.
  return -1.0 + frac;
}

inline double episode_reward(const EpisodeResult& r, RewardKind kind, int max_game_len) {
  if (kind == RewardKind::default_reward)
    return static_cast<double>(r.events.kills + r.events.key_pickups + r.events.doors_opened);
  return aligned_reward(r.final_status, r.n_steps, max_game_len);
}

inline EpisodeResult make_result(const GameState& s, RewardKind kind) {
  EpisodeResult r;
  r.final_status = s.status;
  r.n_steps = s.step;
  r.win = s.status == Status::won;
  r.events = s.events;
  r.reward = episode_reward(r, kind, s.max_game_len());
  return r;
}

/// Agents whose action depends only on the current state may declare
/// `static constexpr bool memoryless = true;`. For those, a repeated state
/// means the episode loops until timeout and the rollout can stop early.
template <class Agent>
concept MemorylessAgent = requires { requires std::remove_cvref_t<Agent>::memoryless; };

template <class Agent>
EpisodeResult rollout(std::shared_ptr<const Board> board, Agent&& agent, RewardKind kind) {
  GameState s = init_state(std::move(board));
  if constexpr (MemorylessAgent<Agent>) {
    std::unordered_set<std::string> seen;
    while (s.status == Status::running) {
      if (!seen.insert(s.dynamic_key()).second) {
        // A revisited state repeats forever; no event can fire inside the cycle.
        s.step = s.max_game_len();
        s.status = Status::timeout;
        break;
      }
      step_in_place(s, agent(std::as_const(s)));
    }
  } else {
    while (s.status == Status::running) step_in_place(s, agent(std::as_const(s)));
  }
  return make_result(s, kind);
}

template <class Agent>
EpisodeResult rollout(const Level& level, Agent&& agent, RewardKind kind, int max_game_len) {
  return rollout(make_board(level, max_game_len), std::forward<Agent>(agent), kind);
}

/// ASCII frame of the dynamic state, in the level text alphabet.
inline std::string render(const GameState& s) {
  std::string out;
  const Level& lv = s.level();
  for (int r = 0; r < lv.height(); ++r) {
    for (int c = 0; c < lv.width(); ++c) out.push_back(tile_char(s.tile_at({r, c})));
    out.push_back('\n');
  }
  return out;
}

}  // namespace pinsky
