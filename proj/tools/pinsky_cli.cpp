// pinsky: run the coevolution loop, analyze a run log, replay an agent.
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "pinsky/analysis.hpp"
#include "pinsky/config.hpp"
#include "pinsky/poet.hpp"
#include "pinsky/policy.hpp"

namespace fs = std::filesystem;
using namespace pinsky;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitRuntime = 2;

std::string default_out_dir() {
  if (const char* env = std::getenv("PINSKY_OUT"); env && *env) return env;
  return RunConfig{}.output_dir;
}

struct RunArgs {
  std::string config_file;
  std::string preset;
  std::string out;
  std::optional<int> loops;
  std::optional<int> jobs;
  std::map<std::string, std::string> overrides;
};

struct AnalyzeArgs {
  std::string log;
  double gamma = 0.85;
  std::string out;
  std::string compare;
  bool allow_partial = false;
  std::optional<int> window_begin;
  std::optional<int> window_end;
};

struct ReplayArgs {
  std::string log;
  int env = 0;
  std::string agent;
  bool quiet = false;
};

int cmd_run(const RunArgs& a) {
  RunConfig cfg;
  if (!a.preset.empty()) apply_preset(cfg, a.preset);
  if (!a.config_file.empty()) apply_config_file(cfg, a.config_file);
  for (const auto& [k, v] : a.overrides) set_config_value(cfg, k, v);
  if (a.loops) cfg.num_poet_loops = *a.loops;
  if (a.jobs) cfg.jobs = *a.jobs;
  cfg.output_dir = a.out;
  cfg.validate();
  // Fail on a bad seed level before touching the output directory.
  const Level seed_level = resolve_seed_level(cfg);

  const fs::path dir = cfg.output_dir;
  fs::create_directories(dir / "agents");
  std::ofstream log_file(dir / "run.jsonl", std::ios::binary | std::ios::trunc);
  if (!log_file) throw std::runtime_error("cannot write " + (dir / "run.jsonl").string());
  const Architecture arch = Architecture::for_level(seed_level);

  RunOptions opts;
  opts.log_sink = &log_file;
  opts.seed_level = seed_level;
  opts.agent_sink = [&](const std::string& name, const PolicyParams& p) { save_params((dir / name).string(), arch, p); };
  opts.on_loop = [&](int t, const MetaPopulation& pop) {
    if ((t + 1) % 10 == 0 || t + 1 == cfg.num_poet_loops)
      std::cerr << "loop " << (t + 1) << "/" << cfg.num_poet_loops << "  active " << pop.active_ids.size()
                << "  pairs " << pop.pairs.size() << "\n";
  };
  const RunLog log = run(cfg, opts);
  std::cout << "wrote " << (dir / "run.jsonl").string() << " (" << log.lines().size() << " events, "
            << log.count("pair_created") << " pairs, " << log.count("transfer") << " transfers, "
            << log.count("solve") << " solves)\n";
  return 0;
}

int cmd_analyze(const AnalyzeArgs& a) {
  const RunData run = load_run_log_file(a.log, a.allow_partial);
  std::optional<TreeWindow> window;
  if (a.window_begin || a.window_end) {
    window = TreeWindow{a.window_begin.value_or(0), a.window_end.value_or(a.window_begin.value_or(0))};
  }
  const AnalysisReport r = analyze(run, a.gamma, window);
  std::optional<RankTestResult> comparison;
  if (!a.compare.empty()) {
    const RunData other = load_run_log_file(a.compare, a.allow_partial);
    const AnalysisReport ro = analyze(other, a.gamma);
    comparison = rank_test(total_series(r.curves), total_series(ro.curves));
  }
  const fs::path out = a.out.empty() ? fs::path(a.log).parent_path() / "analysis" : fs::path(a.out);
  write_report(out, r, run, comparison);

  // raw counts, not the reduced fraction
  auto ratio = [](const std::optional<Ratio>& x, long n, long d) -> std::string {
    if (!x) return "undefined";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.4f (%ld/%ld)", x->value(), n, d);
    return buf;
  };
  const auto& s = r.solve;
  const auto intra = r.counts.intra_fraction();
  std::printf("%-32s %s\n", "log", a.log.c_str());
  std::printf("%-32s %d%s\n", "loops", run.loops, run.complete ? "" : " (partial)");
  std::printf("%-32s %zu\n", "levels", run.pairs.size());
  std::printf("%-32s %.2f\n", "gamma", r.gamma);
  std::printf("%-32s %zu\n", "species", r.species_count());
  std::printf("%-32s %.4f\n", "largest species share", r.largest_species_share());
  std::printf("%-32s %ld\n", "transfers", static_cast<long>(r.counts.total));
  if (intra)
    std::printf("%-32s %.2f%%\n", "intra-species transfers", 100.0 * *intra);
  else
    std::printf("%-32s %s\n", "intra-species transfers", "undefined (no transfers)");
  std::printf("%-32s %s\n", "P(solved)", ratio(s.p_solved(), s.solved, s.levels).c_str());
  std::printf("%-32s %s\n", "P(solved | IST)", ratio(s.p_solved_given_ist(), s.solved_and_ist, s.ist).c_str());
  std::printf("%-32s %s\n", "P(IST | solved)", ratio(s.p_ist_given_solved(), s.solved_and_ist, s.solved).c_str());
  std::printf("%-32s %.2f%%\n", "solved", r.solve.solved_percent());
  if (comparison)
    std::printf("%-32s U=%.1f z=%.4f p=%.6g\n", "transfer-curve rank test", comparison->u_a, comparison->z,
                comparison->p_value);
  std::printf("%-32s %s\n", "report", out.string().c_str());
  return 0;
}

int cmd_replay(const ReplayArgs& a) {
  const RunData run = load_run_log_file(a.log, true);
  if (a.env < 0 || static_cast<std::size_t>(a.env) >= run.pairs.size())
    throw std::runtime_error("unknown env id " + std::to_string(a.env) + " (log has " + std::to_string(run.pairs.size()) +
                             " pairs)");
  const RunConfig cfg = config_from_json(run.header.at("config"));
  const LoggedPair& pair = run.pairs[static_cast<std::size_t>(a.env)];
  const Architecture arch = Architecture::for_level(pair.level);
  const auto logged_hash = run.header.at("architecture").at("hash").get<std::uint64_t>();
  if (logged_hash != arch.hash())
    throw ParamsFormatError("architecture hash mismatch between log header and level of env " + std::to_string(a.env));

  const LoggedSolve* solve = nullptr;
  for (const auto& s : run.solves)
    if (s.env_id == a.env) solve = &s;
  std::string agent_file = a.agent;
  if (agent_file.empty()) {
    if (solve) {
      agent_file = solve->agent_file;
    } else if (auto it = run.final_agents.find(a.env); it != run.final_agents.end()) {
      agent_file = it->second;
    } else {
      throw std::runtime_error("env " + std::to_string(a.env) + " has no logged agent; pass --agent");
    }
  }
  fs::path agent_path = agent_file;
  if (agent_path.is_relative() && !fs::exists(agent_path)) agent_path = fs::path(a.log).parent_path() / agent_path;
  const PolicyParams params = load_params(agent_path.string(), arch);

  PolicyAgent agent(arch, params);
  GameState s = init_state(pair.level, cfg.max_game_len);
  if (!a.quiet) std::cout << "t=0\n" << render(s);
  while (s.status == Status::running) {
    const Action act = agent(s);
    step_in_place(s, act);
    if (!a.quiet) std::cout << "t=" << s.step << " " << action_name(act) << "\n" << render(s);
  }
  const EpisodeResult r = make_result(s, cfg.reward_kind());
  std::printf("status %s steps %d reward %.17g\n", std::string(status_name(r.final_status)).c_str(), r.n_steps, r.reward);
  if (solve && agent_file == solve->agent_file) {
    if (r.reward != solve->reward || !r.win) {
      std::printf("MISMATCH logged reward %.17g\n", solve->reward);
      return kExitRuntime;
    }
    std::printf("matches logged solve reward %.17g\n", solve->reward);
  }
  return 0;
}

std::string field_help(const ConfigField& f, const RunConfig& defaults) {
  const std::string d = f.get(defaults);
  return f.help + " (default: " + (d.empty() ? "none" : d) + ")";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"pinsky: open-ended coevolution of gridworld levels and agents"};
  app.require_subcommand(1);

  RunArgs ra;
  ra.out = default_out_dir();
  auto* run_cmd = app.add_subcommand("run", "run the coevolution loop; writes <out>/run.jsonl and <out>/agents/");
  run_cmd->add_option("--config", ra.config_file, "key = value config file, applied after --preset");
  {
    std::string names = "desk";
    for (const auto& p : experiment_presets()) names += ", " + p.name;
    run_cmd->add_option("--preset", ra.preset, "named setting bundle: " + names);
  }
  run_cmd->add_option("--out", ra.out, "output directory (default: $PINSKY_OUT or pinsky_out)");
  run_cmd->add_option("--loops", ra.loops, "alias for --num_poet_loops");
  run_cmd->add_option("--jobs", ra.jobs, "worker threads, 0 = all cores (default: 1)");
  const RunConfig defaults;
  for (const auto& f : config_fields()) {
    if (f.key == "output_dir" || f.key == "jobs") continue;
    run_cmd->add_option_function<std::string>(
        "--" + f.key, [&ra, key = f.key](const std::string& v) { ra.overrides[key] = v; }, field_help(f, defaults));
  }

  AnalyzeArgs aa;
  auto* analyze_cmd = app.add_subcommand("analyze", "speciate levels and compute transfer statistics from a run log");
  analyze_cmd->add_option("--log", aa.log, "run log (run.jsonl)")->required();
  analyze_cmd->add_option("--gamma", aa.gamma, "speciation similarity threshold (default: 0.85)")->check(CLI::Range(0.5, 0.99));
  analyze_cmd->add_option("--out", aa.out, "report directory (default: <log dir>/analysis)");
  analyze_cmd->add_option("--compare", aa.compare, "second run log for a rank test on total transfer curves");
  analyze_cmd->add_flag("--allow-partial", aa.allow_partial, "accept a log without run_end");
  analyze_cmd->add_option("--tree-from", aa.window_begin, "first loop of transfer edges in tree.dot (default: latest loop with transfers)");
  analyze_cmd->add_option("--tree-to", aa.window_end, "last loop of transfer edges in tree.dot (default: --tree-from)");

  ReplayArgs pa;
  auto* replay_cmd = app.add_subcommand("replay", "re-simulate an agent on a logged level, printing every frame");
  replay_cmd->add_option("--log", pa.log, "run log (run.jsonl)")->required();
  replay_cmd->add_option("--env", pa.env, "env id to replay")->required();
  replay_cmd->add_option("--agent", pa.agent, "policy file (default: the env's solving agent, else its final agent)");
  replay_cmd->add_flag("--quiet", pa.quiet, "print only the outcome");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitUsage;
  }

  try {
    if (*run_cmd) return cmd_run(ra);
    if (*analyze_cmd) return cmd_analyze(aa);
    if (*replay_cmd) return cmd_replay(pa);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitUsage;
}
