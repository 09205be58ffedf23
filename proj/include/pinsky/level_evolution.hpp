// Level mutation and the playability gate (random agent must fail, MCTS must win).
#pragma once

#include <algorithm>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "pinsky/agents.hpp"
#include "pinsky/game.hpp"
#include "pinsky/level.hpp"
#include "pinsky/parallel.hpp"
#include "pinsky/random.hpp"

namespace pinsky {

struct MutationConfig {
  double mutation_rate = 0.8;
  double add_bias = 0.5;  // share of edits that add an object
  std::vector<Tile> allowed_objects{Tile::wall, Tile::monster, Tile::key, Tile::door};
  int max_children = 8;
  int max_retries = 32;  // redraws per edit before giving up on the whole mutation

  void validate() const {
    if (!(mutation_rate >= 0.0 && mutation_rate <= 1.0)) throw ContractViolation("mutationRate must be in [0,1]");
    if (!(add_bias >= 0.0 && add_bias <= 1.0)) throw ContractViolation("add_bias must be in [0,1]");
    for (Tile t : allowed_objects)
      if (t == Tile::avatar || t == Tile::floor)
        throw ContractViolation("allowed_objects may only hold wall, monster, key or door");
    if (max_children < 0) throw ContractViolation("maxChildren must be non-negative");
    if (max_retries <= 0) throw ContractViolation("max_retries must be positive");
  }
};

enum class EditKind : std::uint8_t { add, remove, move };

struct EditTally {
  int add = 0;
  int remove = 0;
  int move = 0;
  int total() const { return add + remove + move; }
};

struct MutationOutcome {
  Level level;
  bool mutated = false;           // at least one edit applied
  bool retries_exhausted = false; // an edit could not be placed; level is the parent clone
  EditTally drawn;                // every drawn edit kind, including redraws
  EditTally applied;
};

namespace detail {

inline std::vector<Cell> interior_cells(const Level& lv, Tile t) {
  std::vector<Cell> out;
  for (int r = 1; r + 1 < lv.height(); ++r)
    for (int c = 1; c + 1 < lv.width(); ++c)
      if (lv.at({r, c}) == t) out.push_back({r, c});
  return out;
}

inline bool try_edit(Level& lv, EditKind kind, const MutationConfig& cfg, Rng& rng) {
  auto allowed = [&](Tile t) {
    return std::find(cfg.allowed_objects.begin(), cfg.allowed_objects.end(), t) != cfg.allowed_objects.end();
  };
  switch (kind) {
    case EditKind::add: {
      std::vector<Tile> kinds;
      for (Tile t : {Tile::wall, Tile::monster, Tile::key, Tile::door}) {
        if (!allowed(t)) continue;
        if (t == Tile::door && lv.variant() == Variant::singleDoor) continue;
        kinds.push_back(t);
      }
      auto floor = interior_cells(lv, Tile::floor);
      if (kinds.empty() || floor.empty()) return false;
      const Tile t = kinds[static_cast<std::size_t>(uniform_index(rng, static_cast<int>(kinds.size())))];
      lv.at(floor[static_cast<std::size_t>(uniform_index(rng, static_cast<int>(floor.size())))]) = t;
      return true;
    }
    case EditKind::remove: {
      std::vector<Cell> candidates;
      const bool spare_key = lv.count(Tile::key) > 1;
      const bool spare_door = lv.count(Tile::door) > 1;
      for (int r = 1; r + 1 < lv.height(); ++r)
        for (int c = 1; c + 1 < lv.width(); ++c) {
          const Tile t = lv.at({r, c});
          if (t == Tile::floor || t == Tile::avatar || !allowed(t)) continue;
          if (t == Tile::key && !spare_key) continue;
          if (t == Tile::door && !spare_door) continue;
          candidates.push_back({r, c});
        }
      if (candidates.empty()) return false;
      lv.at(candidates[static_cast<std::size_t>(uniform_index(rng, static_cast<int>(candidates.size())))]) = Tile::floor;
      return true;
    }
    case EditKind::move: {
      std::vector<Cell> objects;
      for (int r = 1; r + 1 < lv.height(); ++r)
        for (int c = 1; c + 1 < lv.width(); ++c) {
          const Tile t = lv.at({r, c});
          if (t != Tile::floor && (t == Tile::avatar || allowed(t))) objects.push_back({r, c});
        }
      auto floor = interior_cells(lv, Tile::floor);
      if (objects.empty() || floor.empty()) return false;
      const Cell from = objects[static_cast<std::size_t>(uniform_index(rng, static_cast<int>(objects.size())))];
      const Cell to = floor[static_cast<std::size_t>(uniform_index(rng, static_cast<int>(floor.size())))];
      lv.at(to) = lv.at(from);
      lv.at(from) = Tile::floor;
      return true;
    }
  }
  return false;
}

}  // namespace detail

/// With probability mutationRate applies k >= 1 edits (k geometric, mean 2).
/// Each edit adds with probability add_bias, otherwise removes or moves with
/// equal odds. Edits that cannot be applied or would break the level are redrawn.
inline MutationOutcome mutate(const Level& parent, const MutationConfig& cfg, std::uint64_t seed) {
  parent.validate();
  cfg.validate();
  Rng rng(seed);
  MutationOutcome out;
  out.level = parent;
  if (!(uniform01(rng) < cfg.mutation_rate)) return out;

  int edits = 1;
  while (uniform01(rng) < 0.5) ++edits;

  Level child = parent;
  for (int e = 0; e < edits; ++e) {
    bool done = false;
    for (int attempt = 0; attempt < cfg.max_retries && !done; ++attempt) {
      const double u = uniform01(rng);
      const EditKind kind = u < cfg.add_bias                              ? EditKind::add
                            : u < cfg.add_bias + (1.0 - cfg.add_bias) / 2 ? EditKind::remove
                                                                          : EditKind::move;
      (kind == EditKind::add ? out.drawn.add : kind == EditKind::remove ? out.drawn.remove : out.drawn.move)++;
      Level trial = child;
      if (!detail::try_edit(trial, kind, cfg, rng) || !trial.valid()) continue;
      child = std::move(trial);
      (kind == EditKind::add ? out.applied.add : kind == EditKind::remove ? out.applied.remove : out.applied.move)++;
      done = true;
    }
    if (!done) {
      out.retries_exhausted = true;
      out.applied = {};
      return out;
    }
  }
  out.level = std::move(child);
  out.mutated = true;
  return out;
}

struct McVerdict {
  enum class Kind : std::uint8_t { too_easy, too_hard, viable };
  Kind kind = Kind::too_hard;
  int random_wins = 0;
  int random_trials = 0;
  int mcts_wins = 0;
  int mcts_trials = 0;
};

inline std::string_view verdict_name(McVerdict::Kind k) {
  switch (k) {
    case McVerdict::Kind::too_easy: return "too_easy";
    case McVerdict::Kind::too_hard: return "too_hard";
    case McVerdict::Kind::viable: return "viable";
  }
  return "?";
}

struct GateArgs {
  int random_trials = 20;
  int mcts_trials = 3;
  MctsBudget budget{};
  int max_game_len = 500;
};

/// All random trials are played; MCTS trials stop at the first win.
inline McVerdict mc_gate(const Level& level, const GateArgs& args, std::uint64_t seed) {
  if (args.random_trials <= 0 || args.mcts_trials <= 0) throw ContractViolation("mc_gate needs positive trial counts");
  auto board = make_board(level, args.max_game_len);
  McVerdict v;
  for (int i = 0; i < args.random_trials; ++i) {
    RandomAgent agent(derive_seed(seed, {1, static_cast<std::uint64_t>(i)}));
    ++v.random_trials;
    if (rollout(board, agent, RewardKind::aligned).win) ++v.random_wins;
  }
  if (v.random_wins > 0) {
    v.kind = McVerdict::Kind::too_easy;
    return v;
  }
  for (int i = 0; i < args.mcts_trials; ++i) {
    MctsAgent agent(args.budget, derive_seed(seed, {2, static_cast<std::uint64_t>(i)}));
    ++v.mcts_trials;
    if (rollout(board, agent, RewardKind::aligned).win) {
      ++v.mcts_wins;
      break;
    }
  }
  v.kind = v.mcts_wins > 0 ? McVerdict::Kind::viable : McVerdict::Kind::too_hard;
  return v;
}

struct ParentLevel {
  int env_id = 0;
  Level level;
};

struct Candidate {
  int parent_id = 0;
  Level level;
  bool mutated = false;
  bool gated = false;  // false when the gate is disabled
  McVerdict verdict;

  bool accepted() const { return !gated || verdict.kind == McVerdict::Kind::viable; }
};

/// Samples `max_children` parents uniformly with replacement, mutates each and
/// gates each. Every candidate is returned with its verdict; callers keep the
/// accepted ones. With `gate_enabled == false` every child is accepted.
inline std::vector<Candidate> reproduce(const std::vector<ParentLevel>& population, const MutationConfig& cfg,
                                        const GateArgs& gate, bool gate_enabled, std::uint64_t seed, int jobs = 1) {
  if (population.empty()) throw ContractViolation("reproduce needs a non-empty population");
  Rng rng(derive_seed(seed, {0}));
  std::vector<Candidate> out(static_cast<std::size_t>(std::max(0, cfg.max_children)));
  for (std::size_t i = 0; i < out.size(); ++i) {
    const auto& parent = population[static_cast<std::size_t>(uniform_index(rng, static_cast<int>(population.size())))];
    auto m = mutate(parent.level, cfg, derive_seed(seed, {1, i}));
    out[i].parent_id = parent.env_id;
    out[i].level = std::move(m.level);
    out[i].mutated = m.mutated;
  }
  if (gate_enabled) {
    parallel_for(out.size(), jobs, [&](std::size_t i) {
      out[i].verdict = mc_gate(out[i].level, gate, derive_seed(seed, {2, i}));
      out[i].gated = true;
    });
  }
  return out;
}

inline std::vector<Candidate> viable_only(std::vector<Candidate> all) {
  std::erase_if(all, [](const Candidate& c) { return !c.accepted(); });
  return all;
}

}  // namespace pinsky
