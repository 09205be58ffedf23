// The outer coevolutionary loop: paired levels and agents, offspring
// generation, per-pair optimization, all-pairs transfer tournaments and
// age-based culling, all recorded to a RunLog.
#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <functional>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "pinsky/config.hpp"
#include "pinsky/differential_evolution.hpp"
#include "pinsky/game.hpp"
#include "pinsky/level_evolution.hpp"
#include "pinsky/parallel.hpp"
#include "pinsky/policy.hpp"
#include "pinsky/random.hpp"
#include "pinsky/run_log.hpp"

namespace pinsky {

struct PairRecord {
  int env_id = 0;
  std::optional<int> parent_id;
  Level level;
  std::shared_ptr<const Board> board;
  std::shared_ptr<const PolicyParams> agent;
  int born_at = 0;
  std::optional<int> solved_at;
  std::optional<int> first_solver_origin;
  bool active = true;
};

struct MetaPopulation {
  std::vector<PairRecord> pairs;  // indexed by env_id
  std::vector<int> active_ids;    // ascending env_id

  PairRecord& pair(int env_id) { return pairs.at(static_cast<std::size_t>(env_id)); }
  const PairRecord& pair(int env_id) const { return pairs.at(static_cast<std::size_t>(env_id)); }

  int add(Level level, std::optional<int> parent, std::shared_ptr<const PolicyParams> agent, int t, int max_game_len) {
    PairRecord p;
    p.env_id = static_cast<int>(pairs.size());
    p.parent_id = parent;
    p.board = make_board(level, max_game_len);
    p.level = std::move(level);
    p.agent = std::move(agent);
    p.born_at = t;
    pairs.push_back(std::move(p));
    active_ids.push_back(pairs.back().env_id);
    return pairs.back().env_id;
  }
};

struct TransferEvent {
  int from_env = 0;
  int to_env = 0;
  int t = 0;
  double challenger_score = 0.0;
  double incumbent_score = 0.0;
};

struct SolveEvent {
  int env_id = 0;
  int origin_env = 0;
  int t = 0;
  double reward = 0.0;
};

/// Score matrix of a tournament: scores[i][j] is agent of active pair j
/// playing the level of active pair i (indices into `ids`).
struct TournamentMatrix {
  std::vector<int> ids;
  std::vector<std::vector<double>> scores;
  std::vector<std::vector<EpisodeResult>> results;
};

/// Best agent per level from a score snapshot. The incumbent keeps its level
/// unless someone strictly beats it; among tied challengers the lowest env_id wins.
inline std::vector<TransferEvent> select_transfers(const std::vector<int>& ids,
                                                   const std::vector<std::vector<double>>& scores, int t) {
  std::vector<TransferEvent> out;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    std::size_t best = i;
    for (std::size_t j = 0; j < ids.size(); ++j) {
      if (j == i) continue;
      const double s = scores[i][j];
      if (s > scores[i][best] || (s == scores[i][best] && best != i && ids[j] < ids[best])) best = j;
    }
    if (best != i) out.push_back({ids[best], ids[i], t, scores[i][best], scores[i][i]});
  }
  return out;
}

inline TournamentMatrix evaluate_tournament(const MetaPopulation& pop, const Architecture& arch, RewardKind kind,
                                            int jobs = 1) {
  TournamentMatrix m;
  m.ids = pop.active_ids;
  const std::size_t n = m.ids.size();
  m.scores.assign(n, std::vector<double>(n, 0.0));
  m.results.assign(n, std::vector<EpisodeResult>(n));
  parallel_for(n * n, jobs, [&](std::size_t k) {
    const std::size_t i = k / n, j = k % n;
    PolicyAgent agent(arch, pop.pair(m.ids[j]).agent);
    m.results[i][j] = rollout(pop.pair(m.ids[i]).board, agent, kind);
    m.scores[i][j] = m.results[i][j].reward;
  });
  return m;
}

/// Synchronous update: all replacements are decided from one snapshot, and
/// transfers copy the challenger's agent (the source pair keeps its own).
inline std::vector<TransferEvent> tournament_update(MetaPopulation& pop, const TournamentMatrix& m, int t) {
  auto transfers = select_transfers(m.ids, m.scores, t);
  std::vector<std::shared_ptr<const PolicyParams>> snapshot;
  for (const auto& tr : transfers) snapshot.push_back(pop.pair(tr.from_env).agent);
  for (std::size_t k = 0; k < transfers.size(); ++k) pop.pair(transfers[k].to_env).agent = snapshot[k];
  return transfers;
}

/// Deactivates the lowest env_ids until at most `max_envs` pairs are active.
inline std::vector<int> cull_oldest(MetaPopulation& pop, int max_envs) {
  std::vector<int> culled;
  std::sort(pop.active_ids.begin(), pop.active_ids.end());
  while (static_cast<int>(pop.active_ids.size()) > max_envs) {
    const int id = pop.active_ids.front();
    pop.active_ids.erase(pop.active_ids.begin());
    pop.pair(id).active = false;
    culled.push_back(id);
  }
  return culled;
}

/// First-win latch for a pair's level.
inline std::optional<SolveEvent> detect_solve(PairRecord& pair, const EpisodeResult& result, int t, int origin_env) {
  if (!result.win || pair.solved_at) return std::nullopt;
  pair.solved_at = t;
  pair.first_solver_origin = origin_env;
  return SolveEvent{pair.env_id, origin_env, t, result.reward};
}

/// Receives agent snapshots (file name relative to the run directory, params).
using AgentSink = std::function<void(const std::string&, const PolicyParams&)>;

struct RunOptions {
  std::ostream* log_sink = nullptr;
  AgentSink agent_sink;
  std::optional<Level> seed_level;  // overrides config.seed_level
  /// Called once per finished loop with (t, population); may be empty.
  std::function<void(int, const MetaPopulation&)> on_loop;
};

inline Level resolve_seed_level(const RunConfig& cfg) {
  if (cfg.seed_level.empty()) return default_seed_level(cfg.width, cfg.height, cfg.variant);
  std::ifstream f(cfg.seed_level);
  if (!f) throw ConfigError("seed_level", "seed level file not found: " + cfg.seed_level);
  std::stringstream ss;
  ss << f.rdbuf();
  Level lv;
  try {
    lv = parse_level(ss.str());
  } catch (const LevelError& e) {
    throw ConfigError("seed_level", cfg.seed_level + ": " + e.what());
  }
  if (lv.variant() != cfg.variant)
    throw ConfigError("seed_level", cfg.seed_level + ": level variant does not match config variant");
  return lv;
}

namespace detail {

inline Json pair_created_event(const PairRecord& p, bool mutated) {
  Json e;
  e["type"] = "pair_created";
  e["t"] = p.born_at;
  e["env_id"] = p.env_id;
  e["parent_id"] = p.parent_id ? Json(*p.parent_id) : Json(nullptr);
  e["mutated"] = mutated;
  e["level"] = serialize_level(p.level);
  return e;
}

inline std::string solve_agent_file(int env_id) { return "agents/solve_env" + std::to_string(env_id) + ".bin"; }
inline std::string final_agent_file(int env_id) { return "agents/final_env" + std::to_string(env_id) + ".bin"; }

}  // namespace detail

/// Executes the outer loop and returns the full event stream. When a log sink
/// is given, events are written as they happen, so an aborted run still leaves
/// a replayable (run_end-less) prefix behind.
inline RunLog run(const RunConfig& cfg, const RunOptions& opts = {}) {
  cfg.validate();
  const Level seed_level = opts.seed_level ? *opts.seed_level : resolve_seed_level(cfg);
  seed_level.validate();
  if (seed_level.width() != cfg.width || seed_level.height() != cfg.height)
    throw ConfigError("seed_level", "seed level is " + std::to_string(seed_level.width()) + "x" +
                                        std::to_string(seed_level.height()) + " but config asks for " +
                                        std::to_string(cfg.width) + "x" + std::to_string(cfg.height));

  const Architecture arch = Architecture::for_level(seed_level);
  const RewardKind kind = cfg.reward_kind();
  const DeConfig de = cfg.de();
  const MutationConfig mut = cfg.mutation();
  const GateArgs gate = cfg.gate();
  const std::uint64_t seed = cfg.seed;

  RunLog log(opts.log_sink);
  {
    Json h;
    h["type"] = "header";
    h["schema"] = kRunLogSchema;
    h["seed"] = seed;
    h["config"] = config_to_json(cfg);
    h["architecture"] = {{"descriptor", arch.descriptor()}, {"hash", arch.hash()}, {"params", arch.param_count()}};
    log.append(std::move(h));
  }

  MetaPopulation pop;
  auto root_agent = std::make_shared<const PolicyParams>(init_params(arch, derive_seed(seed, {0xA9E47})));
  pop.add(seed_level, std::nullopt, root_agent, 0, cfg.max_game_len);
  log.append(detail::pair_created_event(pop.pairs.back(), false));

  auto record_solve = [&](PairRecord& pair, const EpisodeResult& r, int t, int origin,
                          const std::shared_ptr<const PolicyParams>& agent, const char* phase) {
    if (auto s = detect_solve(pair, r, t, origin)) {
      const std::string file = detail::solve_agent_file(pair.env_id);
      if (opts.agent_sink) opts.agent_sink(file, *agent);
      Json e;
      e["type"] = "solve";
      e["t"] = t;
      e["env_id"] = s->env_id;
      e["origin_env"] = s->origin_env;
      e["reward"] = s->reward;
      e["phase"] = phase;
      e["agent_file"] = file;
      log.append(std::move(e));
    }
  };

  for (int t = 0; t < cfg.num_poet_loops; ++t) {
    // offspring
    if (t % cfg.mutation_timer == 0) {
      std::vector<ParentLevel> parents;
      for (int id : pop.active_ids) parents.push_back({id, pop.pair(id).level});
      auto candidates = reproduce(parents, mut, gate, cfg.mc_enabled, derive_seed(seed, {1, static_cast<std::uint64_t>(t)}), cfg.jobs);
      for (std::size_t k = 0; k < candidates.size(); ++k) {
        auto& c = candidates[k];
        std::optional<int> env_id;
        if (c.accepted()) env_id = pop.add(c.level, c.parent_id, pop.pair(c.parent_id).agent, t, cfg.max_game_len);
        if (c.gated) {
          Json e;
          e["type"] = "mc_result";
          e["t"] = t;
          e["candidate"] = k;
          e["parent_id"] = c.parent_id;
          e["verdict"] = std::string(verdict_name(c.verdict.kind));
          e["random_wins"] = c.verdict.random_wins;
          e["random_trials"] = c.verdict.random_trials;
          e["mcts_wins"] = c.verdict.mcts_wins;
          e["mcts_trials"] = c.verdict.mcts_trials;
          e["accepted"] = c.accepted();
          e["env_id"] = env_id ? Json(*env_id) : Json(nullptr);
          log.append(std::move(e));
        }
        if (env_id) log.append(detail::pair_created_event(pop.pair(*env_id), c.mutated));
      }
      for (int id : cull_oldest(pop, cfg.max_envs)) {
        log.append(Json{{"type", "cull"}, {"t", t}, {"env_id", id}});
      }
    }

    // inner loop, then re-evaluation of each optimized agent on its own level
    const std::vector<int> ids = pop.active_ids;
    std::vector<OptimizeResult> opt(ids.size());
    parallel_for(ids.size(), cfg.jobs, [&](std::size_t k) {
      const PairRecord& p = pop.pair(ids[k]);
      LevelFitness fit{p.board, arch, kind};
      opt[k] = optimize_pair(*p.agent, fit, de, derive_seed(seed, {2, static_cast<std::uint64_t>(t), static_cast<std::uint64_t>(ids[k])}));
    });
    for (std::size_t k = 0; k < ids.size(); ++k) {
      PairRecord& p = pop.pair(ids[k]);
      p.agent = std::make_shared<const PolicyParams>(std::move(opt[k].params));
      Json e;
      e["type"] = "opt_summary";
      e["t"] = t;
      e["env_id"] = p.env_id;
      e["best_fitness"] = opt[k].fitness;
      e["evals"] = opt[k].evaluations;
      e["generations"] = opt[k].generations;
      e["win"] = opt[k].result.win;
      log.append(std::move(e));
      record_solve(p, opt[k].result, t, p.env_id, p.agent, "optimize");
    }

    // transfer tournament
    if (t % cfg.transfer_timer == 0 && pop.active_ids.size() > 1) {
      auto m = evaluate_tournament(pop, arch, kind, cfg.jobs);
      for (std::size_t i = 0; i < m.ids.size(); ++i) {
        PairRecord& target = pop.pair(m.ids[i]);
        // incumbent first, then challengers by env_id
        std::vector<std::size_t> order{i};
        for (std::size_t j = 0; j < m.ids.size(); ++j)
          if (j != i) order.push_back(j);
        for (std::size_t j : order)
          record_solve(target, m.results[i][j], t, m.ids[j], pop.pair(m.ids[j]).agent, "tournament");
      }
      for (const auto& tr : tournament_update(pop, m, t)) {
        Json e;
        e["type"] = "transfer";
        e["t"] = t;
        e["from_env"] = tr.from_env;
        e["to_env"] = tr.to_env;
        e["challenger_score"] = tr.challenger_score;
        e["incumbent_score"] = tr.incumbent_score;
        log.append(std::move(e));
      }
    }

    log.append(Json{{"type", "loop_tick"}, {"t", t}, {"active", pop.active_ids}});
    if (opts.on_loop) opts.on_loop(t, pop);
  }

  Json end;
  end["type"] = "run_end";
  end["t"] = cfg.num_poet_loops;
  end["loops"] = cfg.num_poet_loops;
  end["pairs"] = pop.pairs.size();
  Json finals = Json::object();
  for (int id : pop.active_ids) {
    const std::string file = detail::final_agent_file(id);
    if (opts.agent_sink) opts.agent_sink(file, *pop.pair(id).agent);
    finals[std::to_string(id)] = file;
  }
  end["final_agents"] = finals;
  log.append(std::move(end));
  return log;
}

}  // namespace pinsky
