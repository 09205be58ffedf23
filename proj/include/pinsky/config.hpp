// Run configuration: defaults, flat key=value files, and named experiment presets.
#pragma once

#include <charconv>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "pinsky/agents.hpp"
#include "pinsky/differential_evolution.hpp"
#include "pinsky/level.hpp"
#include "pinsky/level_evolution.hpp"

namespace pinsky {

class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& field, const std::string& message)
      : std::runtime_error(field + ": " + message), field_(field) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

/// Everything that determines a run. Defaults are the full-scale values;
/// `apply_desk_scale` shrinks the budgets to something a laptop finishes.
struct RunConfig {
  // outer-loop and inner-loop budgets
  int max_game_len = 500;
  int n_games = 1500;
  int pop_size = 50;
  int mutation_timer = 25;
  int max_children = 8;
  double mutation_rate = 0.8;
  int transfer_timer = 10;
  int max_envs = 30;
  int num_poet_loops = 5000;
  bool aligned_reward = false;

  // domain
  Variant variant = Variant::singleDoor;
  bool mc_enabled = true;
  int width = 13;
  int height = 9;
  std::uint64_t seed = 0;
  std::string seed_level;  // path; empty = built-in seed level

  // gate and agents
  MctsBudget::Mode mcts_mode = MctsBudget::Mode::node_expansions;
  int mcts_budget = 300;
  int random_trials = 20;
  int mcts_trials = 3;
  double add_bias = 0.5;
  double de_f = 0.5;
  double de_cr = 0.7;
  double de_init_sigma = 0.1;

  // execution only; never affects results, so not echoed into logs
  std::string output_dir = "pinsky_out";
  int jobs = 1;

  RewardKind reward_kind() const { return aligned_reward ? RewardKind::aligned : RewardKind::default_reward; }
  MctsBudget mcts() const { return {mcts_mode, mcts_budget}; }

  DeConfig de() const {
    DeConfig d;
    d.pop_size = pop_size;
    d.F = de_f;
    d.CR = de_cr;
    d.evals_per_step = n_games;
    d.init_sigma = de_init_sigma;
    return d;
  }

  MutationConfig mutation() const {
    MutationConfig m;
    m.mutation_rate = mutation_rate;
    m.add_bias = add_bias;
    m.max_children = max_children;
    return m;
  }

  GateArgs gate() const {
    GateArgs g;
    g.random_trials = random_trials;
    g.mcts_trials = mcts_trials;
    g.budget = mcts();
    g.max_game_len = max_game_len;
    return g;
  }

  void apply_desk_scale() {
    width = 13;
    height = 9;
    max_game_len = 200;
    n_games = 160;
    pop_size = 16;
    max_envs = 10;
    num_poet_loops = 200;
  }

  void validate() const {
    auto positive = [](const char* f, long v) {
      if (v <= 0) throw ConfigError(f, "must be positive, got " + std::to_string(v));
    };
    positive("max_game_len", max_game_len);
    positive("n_games", n_games);
    positive("pop_size", pop_size);
    positive("mutation_timer", mutation_timer);
    positive("transfer_timer", transfer_timer);
    positive("max_envs", max_envs);
    positive("mcts_budget", mcts_budget);
    positive("random_trials", random_trials);
    positive("mcts_trials", mcts_trials);
    if (max_children < 0) throw ConfigError("max_children", "must be non-negative");
    if (num_poet_loops < 0) throw ConfigError("num_poet_loops", "must be non-negative");
    if (pop_size < 4) throw ConfigError("pop_size", "DE/rand/1 needs at least 4 members");
    if (n_games < pop_size) throw ConfigError("n_games", "must be >= pop_size");
    if (width < 5 || height < 4) throw ConfigError("width", "grid must be at least 5x4");
    auto prob = [](const char* f, double v) {
      if (!(v >= 0.0 && v <= 1.0)) throw ConfigError(f, "must be in [0,1]");
    };
    prob("mutation_rate", mutation_rate);
    prob("add_bias", add_bias);
    prob("de_cr", de_cr);
    if (!(de_f > 0.0 && de_f <= 2.0)) throw ConfigError("de_f", "must be in (0,2]");
    if (!(de_init_sigma >= 0.0)) throw ConfigError("de_init_sigma", "must be non-negative");
    if (jobs < 0) throw ConfigError("jobs", "must be non-negative");
  }
};

namespace detail {

inline bool parse_bool(const std::string& field, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError(field, "expected a boolean, got '" + v + "'");
}

inline long long parse_int(const std::string& field, const std::string& v) {
  try {
    std::size_t used = 0;
    long long x = std::stoll(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw ConfigError(field, "expected an integer, got '" + v + "'");
  }
}

inline double parse_double(const std::string& field, const std::string& v) {
  try {
    std::size_t used = 0;
    double x = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw ConfigError(field, "expected a number, got '" + v + "'");
  }
}

inline std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace detail

struct ConfigField {
  std::string key;
  std::string help;
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, const std::string&)> set;
  bool echoed = true;  // part of the reproducibility header
};

inline const std::vector<ConfigField>& config_fields() {
  using detail::parse_bool;
  using detail::parse_double;
  using detail::parse_int;
  // shortest text that reads back to the same double
  auto num = [](double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
  };
  static const std::vector<ConfigField> fields = {
      {"max_game_len", "max actions per game", [](const RunConfig& c) { return std::to_string(c.max_game_len); },
       [](RunConfig& c, const std::string& v) { c.max_game_len = static_cast<int>(parse_int("max_game_len", v)); }},
      {"n_games", "inner-loop evaluations per optimization step", [](const RunConfig& c) { return std::to_string(c.n_games); },
       [](RunConfig& c, const std::string& v) { c.n_games = static_cast<int>(parse_int("n_games", v)); }},
      {"pop_size", "inner-loop population size", [](const RunConfig& c) { return std::to_string(c.pop_size); },
       [](RunConfig& c, const std::string& v) { c.pop_size = static_cast<int>(parse_int("pop_size", v)); }},
      {"mutation_timer", "outer loops between mutation steps", [](const RunConfig& c) { return std::to_string(c.mutation_timer); },
       [](RunConfig& c, const std::string& v) { c.mutation_timer = static_cast<int>(parse_int("mutation_timer", v)); }},
      {"max_children", "max offspring per mutation step", [](const RunConfig& c) { return std::to_string(c.max_children); },
       [](RunConfig& c, const std::string& v) { c.max_children = static_cast<int>(parse_int("max_children", v)); }},
      {"mutation_rate", "parent level mutation rate", [num](const RunConfig& c) { return num(c.mutation_rate); },
       [](RunConfig& c, const std::string& v) { c.mutation_rate = parse_double("mutation_rate", v); }},
      {"transfer_timer", "outer loops between transfer attempts", [](const RunConfig& c) { return std::to_string(c.transfer_timer); },
       [](RunConfig& c, const std::string& v) { c.transfer_timer = static_cast<int>(parse_int("transfer_timer", v)); }},
      {"max_envs", "agent-environment meta-population size", [](const RunConfig& c) { return std::to_string(c.max_envs); },
       [](RunConfig& c, const std::string& v) { c.max_envs = static_cast<int>(parse_int("max_envs", v)); }},
      {"num_poet_loops", "outer loops to run", [](const RunConfig& c) { return std::to_string(c.num_poet_loops); },
       [](RunConfig& c, const std::string& v) { c.num_poet_loops = static_cast<int>(parse_int("num_poet_loops", v)); }},
      {"aligned_reward", "use the aligned reward instead of the built-in one", [](const RunConfig& c) { return std::string(c.aligned_reward ? "true" : "false"); },
       [](RunConfig& c, const std::string& v) { c.aligned_reward = parse_bool("aligned_reward", v); }},
      {"variant", "singleDoor or multiDoor", [](const RunConfig& c) { return std::string(variant_name(c.variant)); },
       [](RunConfig& c, const std::string& v) {
         try {
           c.variant = parse_variant(v);
         } catch (const LevelError&) {
           throw ConfigError("variant", "expected singleDoor or multiDoor, got '" + v + "'");
         }
       }},
      {"mc_enabled", "apply the playability gate to offspring", [](const RunConfig& c) { return std::string(c.mc_enabled ? "true" : "false"); },
       [](RunConfig& c, const std::string& v) { c.mc_enabled = parse_bool("mc_enabled", v); }},
      {"width", "level width in tiles", [](const RunConfig& c) { return std::to_string(c.width); },
       [](RunConfig& c, const std::string& v) { c.width = static_cast<int>(parse_int("width", v)); }},
      {"height", "level height in tiles", [](const RunConfig& c) { return std::to_string(c.height); },
       [](RunConfig& c, const std::string& v) { c.height = static_cast<int>(parse_int("height", v)); }},
      {"seed", "run seed", [](const RunConfig& c) { return std::to_string(c.seed); },
       [](RunConfig& c, const std::string& v) {
         const auto x = parse_int("seed", v);
         if (x < 0) throw ConfigError("seed", "must be non-negative");
         c.seed = static_cast<std::uint64_t>(x);
       }},
      {"seed_level", "seed level file (empty: built-in)", [](const RunConfig& c) { return c.seed_level; },
       [](RunConfig& c, const std::string& v) { c.seed_level = v; }},
      {"mcts_mode", "node_expansions or wallclock_ms", [](const RunConfig& c) {
         return std::string(c.mcts_mode == MctsBudget::Mode::node_expansions ? "node_expansions" : "wallclock_ms"); },
       [](RunConfig& c, const std::string& v) {
         if (v == "node_expansions") c.mcts_mode = MctsBudget::Mode::node_expansions;
         else if (v == "wallclock_ms") c.mcts_mode = MctsBudget::Mode::wallclock_ms;
         else throw ConfigError("mcts_mode", "expected node_expansions or wallclock_ms, got '" + v + "'");
       }},
      {"mcts_budget", "MCTS budget per action (expansions or ms)", [](const RunConfig& c) { return std::to_string(c.mcts_budget); },
       [](RunConfig& c, const std::string& v) { c.mcts_budget = static_cast<int>(parse_int("mcts_budget", v)); }},
      {"random_trials", "random-agent episodes per gate check", [](const RunConfig& c) { return std::to_string(c.random_trials); },
       [](RunConfig& c, const std::string& v) { c.random_trials = static_cast<int>(parse_int("random_trials", v)); }},
      {"mcts_trials", "MCTS episodes per gate check", [](const RunConfig& c) { return std::to_string(c.mcts_trials); },
       [](RunConfig& c, const std::string& v) { c.mcts_trials = static_cast<int>(parse_int("mcts_trials", v)); }},
      {"add_bias", "share of mutation edits that add objects", [num](const RunConfig& c) { return num(c.add_bias); },
       [](RunConfig& c, const std::string& v) { c.add_bias = parse_double("add_bias", v); }},
      {"de_f", "DE differential weight", [num](const RunConfig& c) { return num(c.de_f); },
       [](RunConfig& c, const std::string& v) { c.de_f = parse_double("de_f", v); }},
      {"de_cr", "DE crossover probability", [num](const RunConfig& c) { return num(c.de_cr); },
       [](RunConfig& c, const std::string& v) { c.de_cr = parse_double("de_cr", v); }},
      {"de_init_sigma", "DE warm-start perturbation scale", [num](const RunConfig& c) { return num(c.de_init_sigma); },
       [](RunConfig& c, const std::string& v) { c.de_init_sigma = parse_double("de_init_sigma", v); }},
      {"output_dir", "output directory", [](const RunConfig& c) { return c.output_dir; },
       [](RunConfig& c, const std::string& v) { c.output_dir = v; }, false},
      {"jobs", "worker threads for evaluations (0 = all cores)", [](const RunConfig& c) { return std::to_string(c.jobs); },
       [](RunConfig& c, const std::string& v) { c.jobs = static_cast<int>(parse_int("jobs", v)); }, false},
  };
  return fields;
}

inline void set_config_value(RunConfig& c, const std::string& key, const std::string& value) {
  for (const auto& f : config_fields())
    if (f.key == key) {
      f.set(c, value);
      return;
    }
  throw ConfigError(key, "unknown configuration key");
}

/// Flat `key = value` lines; '#' starts a comment.
inline void apply_config_text(RunConfig& c, std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(lineno), "expected 'key = value'");
    set_config_value(c, detail::trim(line.substr(0, eq)), detail::trim(line.substr(eq + 1)));
  }
}

inline void apply_config_file(RunConfig& c, const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("config", "cannot read config file '" + path + "'");
  std::stringstream ss;
  ss << f.rdbuf();
  apply_config_text(c, ss.str());
}

/// Reproducibility echo: every result-affecting field, in declaration order.
inline nlohmann::ordered_json config_to_json(const RunConfig& c) {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  for (const auto& f : config_fields())
    if (f.echoed) j[f.key] = f.get(c);
  return j;
}

inline RunConfig config_from_json(const nlohmann::ordered_json& j) {
  RunConfig c;
  for (auto it = j.begin(); it != j.end(); ++it) set_config_value(c, it.key(), it.value().get<std::string>());
  return c;
}

struct ExperimentPreset {
  std::string name;
  Variant variant;
  bool aligned_reward;
  bool mc_enabled;
};

/// The experimental conditions, desk-scaled. noMC only exists with the aligned reward.
inline const std::vector<ExperimentPreset>& experiment_presets() {
  static const std::vector<ExperimentPreset> presets = {
      {"singledoor-default", Variant::singleDoor, false, true},
      {"singledoor-aligned", Variant::singleDoor, true, true},
      {"singledoor-aligned-nomc", Variant::singleDoor, true, false},
      {"multidoor-default", Variant::multiDoor, false, true},
      {"multidoor-aligned", Variant::multiDoor, true, true},
      {"multidoor-aligned-nomc", Variant::multiDoor, true, false},
  };
  return presets;
}

inline void apply_preset(RunConfig& c, const std::string& name) {
  if (name == "desk") {
    c.apply_desk_scale();
    return;
  }
  for (const auto& p : experiment_presets())
    if (p.name == name) {
      c.apply_desk_scale();
      c.variant = p.variant;
      c.aligned_reward = p.aligned_reward;
      c.mc_enabled = p.mc_enabled;
      return;
    }
  std::string known = "desk";
  for (const auto& p : experiment_presets()) known += ", " + p.name;
  throw ConfigError("preset", "unknown preset '" + name + "' (known: " + known + ")");
}

}  // namespace pinsky
