// Non-learning agents: uniform random play and UCT tree search.
#pragma once

#include <array>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "pinsky/game.hpp"
#include "pinsky/random.hpp"

namespace pinsky {

class RandomAgent {
 public:
  explicit RandomAgent(std::uint64_t seed) : rng_(seed) {}

  Action operator()(const GameState&) { return static_cast<Action>(uniform_index(rng_, kActionCount)); }

 private:
  Rng rng_;
};

inline RandomAgent random_agent(std::uint64_t seed) { return RandomAgent(seed); }

struct MctsBudget {
  enum class Mode : std::uint8_t { node_expansions, wallclock_ms };
  Mode mode = Mode::node_expansions;
  int amount = 300;

  friend bool operator==(const MctsBudget&, const MctsBudget&) = default;
};

struct MctsSettings {
  double exploration = 1.4142135623730951;  // sqrt(2)
  int rollout_depth = 40;
};

/// Plain UCT over the dZelda forward model. Every decision builds a fresh tree
/// from the current state; leaves are scored with the aligned terminal value
/// (0 when the rollout hits its depth cap still running).
class MctsAgent {
 public:
  MctsAgent(MctsBudget budget, std::uint64_t seed, MctsSettings settings = {})
      : budget_(budget), settings_(settings), rng_(seed) {
    if (budget_.amount <= 0) throw ContractViolation("MCTS budget must be positive");
  }

  Action operator()(const GameState& root_state) {
    if (root_state.status != Status::running) throw ContractViolation("MCTS asked to act on a finished game");
    nodes_.clear();
    nodes_.push_back(Node{root_state, -1});

    const auto start = std::chrono::steady_clock::now();
    for (int iter = 0;; ++iter) {
      if (budget_.mode == MctsBudget::Mode::node_expansions) {
        if (iter >= budget_.amount) break;
      } else if (iter > 0) {
        const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(
            std::chrono::steady_clock::now() - start).count();
        if (ms >= budget_.amount) break;
      }
      iterate();
    }

    const Node& root = nodes_.front();
    int best = -1;
    int best_visits = -1;
    for (int a = 0; a < kActionCount; ++a) {
      const int child = root.children[static_cast<std::size_t>(a)];
      if (child < 0) continue;
      if (nodes_[static_cast<std::size_t>(child)].visits > best_visits) {
        best_visits = nodes_[static_cast<std::size_t>(child)].visits;
        best = a;
      }
    }
    return static_cast<Action>(best < 0 ? 0 : best);
  }

 private:
  struct Node {
    GameState state;
    int parent = -1;
    std::array<int, kActionCount> children{-1, -1, -1, -1, -1};
    int untried = 0;  // next action to expand
    int visits = 0;
    double value = 0.0;
  };

  static double terminal_value(const GameState& s) {
    if (s.status == Status::won || s.status == Status::lost)
      return aligned_reward(s.status, s.step, s.max_game_len());
    return 0.0;
  }

  void iterate() {
    int cur = 0;
    // selection
    while (nodes_[static_cast<std::size_t>(cur)].state.status == Status::running &&
           nodes_[static_cast<std::size_t>(cur)].untried >= kActionCount) {
      cur = select_child(cur);
    }
    // expansion
    if (nodes_[static_cast<std::size_t>(cur)].state.status == Status::running) {
      Node& parent = nodes_[static_cast<std::size_t>(cur)];
      const int a = parent.untried++;
      GameState next = step(parent.state, static_cast<Action>(a));
      const int id = static_cast<int>(nodes_.size());
      parent.children[static_cast<std::size_t>(a)] = id;
      nodes_.push_back(Node{std::move(next), cur});
      cur = id;
    }
    // simulation
    GameState sim = nodes_[static_cast<std::size_t>(cur)].state;
    for (int d = 0; d < settings_.rollout_depth && sim.status == Status::running; ++d)
      step_in_place(sim, static_cast<Action>(uniform_index(rng_, kActionCount)));
    const double v = terminal_value(sim);
    // backpropagation
    for (int n = cur; n >= 0; n = nodes_[static_cast<std::size_t>(n)].parent) {
      ++nodes_[static_cast<std::size_t>(n)].visits;
      nodes_[static_cast<std::size_t>(n)].value += v;
    }
  }

  int select_child(int id) const {
    const Node& n = nodes_[static_cast<std::size_t>(id)];
    const double log_n = std::log(static_cast<double>(n.visits));
    int best = -1;
    double best_score = -1e300;
    for (int a = 0; a < kActionCount; ++a) {
      const Node& c = nodes_[static_cast<std::size_t>(n.children[static_cast<std::size_t>(a)])];
      const double mean = c.value / c.visits;
      const double score = mean + settings_.exploration * std::sqrt(log_n / c.visits);
      if (score > best_score) {
        best_score = score;
        best = n.children[static_cast<std::size_t>(a)];
      }
    }
    return best;
  }

  MctsBudget budget_;
  MctsSettings settings_;
  Rng rng_;
  std::vector<Node> nodes_;
};

inline MctsAgent mcts_agent(MctsBudget budget, std::uint64_t seed) { return MctsAgent(budget, seed); }

}  // namespace pinsky
