// Post-hoc transfer-dynamics analysis of a RunLog: level embeddings, cosine
// speciation, transfer curves and matrices, conditional solve probabilities,
// phylogeny export and a rank test for comparing transfer curves.
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <numeric>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "pinsky/config.hpp"
#include "pinsky/level.hpp"
#include "pinsky/pathfinding.hpp"
#include "pinsky/run_log.hpp"

namespace pinsky {

// ---------------------------------------------------------------------------
// Reading logs

class RunLogError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct LoggedPair {
  int env_id = 0;
  std::optional<int> parent_id;
  Level level;
  int born_at = 0;
  bool mutated = false;
  bool active_at_end = false;
  std::optional<int> solved_at;
  std::optional<int> solver_origin;
};

struct LoggedTransfer {
  int from_env = 0;
  int to_env = 0;
  int t = 0;
  double challenger_score = 0.0;
  double incumbent_score = 0.0;
};

struct LoggedSolve {
  int env_id = 0;
  int origin_env = 0;
  int t = 0;
  double reward = 0.0;
  std::string agent_file;
};

struct RunData {
  Json header;
  bool mc_enabled = true;
  int loops = 0;  // number of completed outer loops
  bool complete = false;
  std::vector<LoggedPair> pairs;  // by env_id
  std::vector<LoggedTransfer> transfers;
  std::vector<LoggedSolve> solves;
  std::map<std::string, long> event_counts;
  std::map<int, std::string> final_agents;
};

namespace detail {

inline std::string describe_event(const Json& e, long line) {
  std::ostringstream os;
  os << "line " << line << " (" << e.value("type", std::string("?"));
  if (e.contains("t")) os << ", t=" << e["t"].dump();
  os << ")";
  return os.str();
}

inline std::optional<int> opt_int(const Json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<int>();
}

}  // namespace detail

/// Parses a RunLog. Malformed lines, decreasing loop indices and (unless
/// `allow_partial`) a missing run_end record are errors naming the last valid event.
inline RunData load_run_log(std::istream& in, bool allow_partial = false) {
  RunData d;
  std::string line;
  long lineno = 0;
  std::string last_valid = "none";
  int last_t = 0;
  std::vector<int> last_active;
  bool have_tick = false;
  auto fail = [&](const std::string& what) {
    throw RunLogError("run log " + what + " at line " + std::to_string(lineno) + "; last valid event: " + last_valid);
  };
  bool had_final_newline = true;
  while (std::getline(in, line)) {
    ++lineno;
    had_final_newline = !in.eof();
    if (line.empty()) continue;
    if (d.complete) fail("has data after run_end");
    Json e;
    try {
      e = Json::parse(line);
    } catch (const std::exception&) {
      fail("is truncated or malformed");
    }
    if (!e.is_object() || !e.contains("type")) fail("has an event without a type");
    const std::string type = e["type"].get<std::string>();
    try {
      if (lineno == 1) {
        if (type != "header") fail("does not start with a header");
        if (e.value("schema", std::string()) != kRunLogSchema) fail("has an unsupported schema");
        d.header = e;
        d.mc_enabled = config_from_json(e["config"]).mc_enabled;
      } else {
        const int t = e.at("t").get<int>();
        if (t < last_t) fail("has a decreasing loop index");
        last_t = t;
        if (type == "pair_created") {
          LoggedPair p;
          p.env_id = e.at("env_id").get<int>();
          if (p.env_id != static_cast<int>(d.pairs.size())) fail("has out-of-order env ids");
          p.parent_id = detail::opt_int(e.at("parent_id"));
          p.level = parse_level(e.at("level").get<std::string>());
          p.born_at = t;
          p.mutated = e.value("mutated", false);
          d.pairs.push_back(std::move(p));
        } else if (type == "transfer") {
          d.transfers.push_back({e.at("from_env").get<int>(), e.at("to_env").get<int>(), t,
                                 e.at("challenger_score").get<double>(), e.at("incumbent_score").get<double>()});
        } else if (type == "solve") {
          LoggedSolve s{e.at("env_id").get<int>(), e.at("origin_env").get<int>(), t, e.at("reward").get<double>(),
                        e.value("agent_file", std::string())};
          auto& p = d.pairs.at(static_cast<std::size_t>(s.env_id));
          if (p.solved_at) fail("has a second solve for one env");
          p.solved_at = t;
          p.solver_origin = s.origin_env;
          d.solves.push_back(std::move(s));
        } else if (type == "loop_tick") {
          last_active = e.at("active").get<std::vector<int>>();
          have_tick = true;
          d.loops = std::max(d.loops, t + 1);
        } else if (type == "run_end") {
          d.complete = true;
          d.loops = e.at("loops").get<int>();
          for (auto it = e["final_agents"].begin(); it != e["final_agents"].end(); ++it)
            d.final_agents[std::stoi(it.key())] = it.value().get<std::string>();
        }
      }
    } catch (const RunLogError&) {
      throw;
    } catch (const std::exception& ex) {
      fail(std::string("has an invalid ") + type + " event (" + ex.what() + ")");
    }
    ++d.event_counts[type];
    last_valid = detail::describe_event(e, lineno);
  }
  if (lineno == 0) throw RunLogError("run log is empty");
  if (!had_final_newline && !d.complete) fail("is truncated (no final newline)");
  if (!d.complete && !allow_partial)
    throw RunLogError("run log is truncated (no run_end record); last valid event: " + last_valid);
  for (auto& p : d.pairs) p.active_at_end = false;
  if (have_tick) {
    for (int id : last_active) d.pairs.at(static_cast<std::size_t>(id)).active_at_end = true;
  } else if (!d.pairs.empty()) {
    d.pairs.front().active_at_end = true;
  }
  return d;
}

inline RunData load_run_log_file(const std::string& path, bool allow_partial = false) {
  std::ifstream f(path);
  if (!f) throw RunLogError("cannot read run log '" + path + "'");
  return load_run_log(f, allow_partial);
}

// ---------------------------------------------------------------------------
// Level embedding

/// <doors, monsters, interior walls, keys, path avatar->nearest key,
///  greedy door tour from that key>
struct EmbeddingVector {
  std::array<int, 6> x{};
  bool substituted = false;  // an unreachable leg was replaced by width*height

  std::vector<double> as_doubles() const { return {x.begin(), x.end()}; }
  friend bool operator==(const EmbeddingVector&, const EmbeddingVector&) = default;
};

inline EmbeddingVector embed_level(const Level& level) {
  level.validate();
  EmbeddingVector v;
  const auto doors = level.find(Tile::door);
  const auto keys = level.find(Tile::key);
  v.x[0] = static_cast<int>(doors.size());
  v.x[1] = level.count(Tile::monster);
  v.x[2] = level.interior_wall_count();
  v.x[3] = static_cast<int>(keys.size());

  const WallMask mask(level);
  const int unreachable_cost = level.width() * level.height();
  // nearest target from `from`; ties keep the earliest in row-major order
  auto nearest = [&](Cell from, const std::vector<Cell>& targets, const std::vector<bool>& skip) {
    std::size_t best = targets.size();
    int best_cost = 0;
    bool best_reachable = false;
    for (std::size_t i = 0; i < targets.size(); ++i) {
      if (skip[i]) continue;
      const auto r = astar({&mask, from, targets[i]});
      const int cost = r.reachable() ? r.cost : unreachable_cost;
      if (best == targets.size() || cost < best_cost) {
        best = i;
        best_cost = cost;
        best_reachable = r.reachable();
      }
    }
    if (!best_reachable) v.substituted = true;
    return std::pair{best, best_cost};
  };
  const Cell avatar = level.avatar_spawn();
  auto [key_i, key_cost] = nearest(avatar, keys, std::vector<bool>(keys.size(), false));
  v.x[4] = key_cost;

  std::vector<bool> visited(doors.size(), false);
  Cell at = keys[key_i];
  int tour = 0;
  for (std::size_t n = 0; n < doors.size(); ++n) {
    auto [d, cost] = nearest(at, doors, visited);
    tour += cost;
    visited[d] = true;
    at = doors[d];
  }
  v.x[5] = tour;
  return v;
}

// ---------------------------------------------------------------------------
// Cosine speciation

inline std::vector<double> unit(const std::vector<double>& v) {
  double n = 0.0;
  for (double x : v) n += x * x;
  if (n == 0.0) throw ContractViolation("cannot normalize a zero vector");
  n = std::sqrt(n);
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i] / n;
  return out;
}

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double cosine_similarity(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw ContractViolation("cosine similarity of vectors with different sizes");
  return dot(unit(a), unit(b));
}

inline double cosine_similarity(const EmbeddingVector& a, const EmbeddingVector& b) {
  return cosine_similarity(a.as_doubles(), b.as_doubles());
}

struct Representative {
  int env_id = 0;
  std::vector<double> unit_vector;
};

struct SpeciesArchive {
  double gamma = 0.85;
  std::vector<Representative> representatives;  // discovery order = species id

  std::size_t size() const { return representatives.size(); }
};

struct EmbeddedLevel {
  int env_id = 0;
  std::vector<double> vector;
};

/// Scans levels in the given (creation) order; a level founds a species when
/// its similarity to every existing representative is below gamma.
inline SpeciesArchive speciate(const std::vector<EmbeddedLevel>& levels, double gamma) {
  if (levels.empty()) throw ContractViolation("speciate needs at least one level");
  SpeciesArchive archive;
  archive.gamma = gamma;
  for (const auto& l : levels) {
    auto u = unit(l.vector);
    bool novel = true;
    for (const auto& rep : archive.representatives)
      if (dot(u, rep.unit_vector) >= gamma) {
        novel = false;
        break;
      }
    if (novel) archive.representatives.push_back({l.env_id, std::move(u)});
  }
  return archive;
}

/// Species id per level: the representative of maximal similarity, earliest on ties.
inline std::map<int, int> classify(const std::vector<EmbeddedLevel>& levels, const SpeciesArchive& archive) {
  if (archive.representatives.empty()) throw ContractViolation("classify needs a non-empty archive");
  std::map<int, int> out;
  for (const auto& l : levels) {
    const auto u = unit(l.vector);
    int best = 0;
    double best_sim = -2.0;
    for (std::size_t s = 0; s < archive.representatives.size(); ++s) {
      const double sim = dot(u, archive.representatives[s].unit_vector);
      if (sim > best_sim) {
        best_sim = sim;
        best = static_cast<int>(s);
      }
    }
    // exact self-match for representatives regardless of rounding
    for (std::size_t s = 0; s < archive.representatives.size(); ++s)
      if (archive.representatives[s].env_id == l.env_id) best = static_cast<int>(s);
    out[l.env_id] = best;
  }
  return out;
}

inline std::vector<EmbeddedLevel> embed_pairs(const std::vector<LoggedPair>& pairs,
                                              std::vector<EmbeddingVector>* raw = nullptr) {
  std::vector<EmbeddedLevel> out;
  for (const auto& p : pairs) {
    auto e = embed_level(p.level);
    out.push_back({p.env_id, e.as_doubles()});
    if (raw) raw->push_back(e);
  }
  return out;
}

inline std::vector<int> species_support(const std::map<int, int>& assignment, std::size_t n_species) {
  std::vector<int> support(n_species, 0);
  for (const auto& [env, s] : assignment) ++support[static_cast<std::size_t>(s)];
  return support;
}

// ---------------------------------------------------------------------------
// Transfer accounting

struct TransferCurves {
  std::vector<long> total;                   // [t]
  std::vector<std::vector<long>> incoming;   // [species][t]
  std::vector<std::vector<long>> outgoing;   // [species][t]

  long net(std::size_t species, std::size_t t) const { return incoming[species][t] - outgoing[species][t]; }
  std::size_t loops() const { return total.size(); }
};

/// Per-loop totals and per-species in/out counts. A transfer counts as
/// outgoing for the source level's species and incoming for the destination's.
inline TransferCurves transfer_curves(const std::vector<LoggedTransfer>& transfers, const std::map<int, int>& assignment,
                                      std::size_t n_species, int loops) {
  int span = std::max(loops, 0);
  for (const auto& tr : transfers) span = std::max(span, tr.t + 1);
  TransferCurves c;
  c.total.assign(static_cast<std::size_t>(span), 0);
  c.incoming.assign(n_species, std::vector<long>(static_cast<std::size_t>(span), 0));
  c.outgoing.assign(n_species, std::vector<long>(static_cast<std::size_t>(span), 0));
  for (const auto& tr : transfers) {
    const auto t = static_cast<std::size_t>(tr.t);
    ++c.total[t];
    ++c.outgoing[static_cast<std::size_t>(assignment.at(tr.from_env))][t];
    ++c.incoming[static_cast<std::size_t>(assignment.at(tr.to_env))][t];
  }
  return c;
}

struct TransferMatrix {
  std::vector<std::vector<double>> values;  // [from species][to species]
  bool normalized = false;
  long total = 0;
  std::string warning;

  double sum() const {
    double s = 0.0;
    for (const auto& row : values)
      for (double v : row) s += v;
    return s;
  }
  double diagonal() const {
    double s = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) s += values[i][i];
    return s;
  }
  /// Share of transfers that stay within a species; nullopt without transfers.
  std::optional<double> intra_fraction() const {
    if (total == 0) return std::nullopt;
    return normalized ? diagonal() : diagonal() / static_cast<double>(total);
  }
};

/// Atemporal from-species x to-species tally over every transfer in the run.
inline TransferMatrix transfer_matrix(const std::vector<LoggedTransfer>& transfers, const std::map<int, int>& assignment,
                                      std::size_t n_species, bool normalize) {
  TransferMatrix m;
  m.values.assign(n_species, std::vector<double>(n_species, 0.0));
  for (const auto& tr : transfers) {
    m.values[static_cast<std::size_t>(assignment.at(tr.from_env))][static_cast<std::size_t>(assignment.at(tr.to_env))] += 1.0;
    ++m.total;
  }
  if (normalize) {
    if (m.total == 0) {
      m.warning = "no transfers; matrix left as raw counts";
    } else {
      for (auto& row : m.values)
        for (auto& v : row) v /= static_cast<double>(m.total);
      m.normalized = true;
    }
  }
  return m;
}

/// Exact non-negative fraction.
struct Ratio {
  long long num = 0;
  long long den = 1;

  static Ratio of(long long n, long long d) {
    if (d == 0) throw ContractViolation("ratio with zero denominator");
    const long long g = std::gcd(n, d);
    return {g ? n / g : 0, g ? d / g : 1};
  }
  double value() const { return static_cast<double>(num) / static_cast<double>(den); }
  friend Ratio operator*(Ratio a, Ratio b) { return of(a.num * b.num, a.den * b.den); }
  friend bool operator==(const Ratio&, const Ratio&) = default;
};

struct SolveStats {
  long levels = 0;           // viable levels considered
  long solved = 0;
  long ist = 0;              // levels that received an inter-species transfer
  long solved_and_ist = 0;
  bool viability_flagged = false;  // gate disabled: not every level is known viable

  std::optional<Ratio> p_solved() const { return levels ? std::optional(Ratio::of(solved, levels)) : std::nullopt; }
  std::optional<Ratio> p_ist() const { return levels ? std::optional(Ratio::of(ist, levels)) : std::nullopt; }
  std::optional<Ratio> p_solved_given_ist() const {
    return ist ? std::optional(Ratio::of(solved_and_ist, ist)) : std::nullopt;
  }
  std::optional<Ratio> p_ist_given_solved() const {
    return solved ? std::optional(Ratio::of(solved_and_ist, solved)) : std::nullopt;
  }
  /// P(IST | solved) / P(solved), reported alongside the direct count.
  std::optional<double> ist_given_solved_over_solved() const {
    if (!solved || !levels) return std::nullopt;
    return p_ist_given_solved()->value() / p_solved()->value();
  }
  /// p(s|IST) p(IST) == p(IST|s) p(s), checked on exact fractions.
  std::optional<bool> bayes_identity_holds() const {
    if (!ist || !solved || !levels) return std::nullopt;
    return *p_solved_given_ist() * *p_ist() == *p_ist_given_solved() * *p_solved();
  }
  double solved_percent() const { return levels ? 100.0 * static_cast<double>(solved) / static_cast<double>(levels) : 0.0; }
};

/// Counts over all levels in the log. IST(e): e ever received an agent from a
/// level of a different species.
inline SolveStats conditional_solve_probability(const std::vector<LoggedPair>& pairs,
                                                const std::vector<LoggedTransfer>& transfers,
                                                const std::map<int, int>& assignment, bool mc_enabled) {
  SolveStats s;
  s.viability_flagged = !mc_enabled;
  std::vector<bool> ist(pairs.size(), false);
  for (const auto& tr : transfers)
    if (assignment.at(tr.from_env) != assignment.at(tr.to_env)) ist[static_cast<std::size_t>(tr.to_env)] = true;
  for (const auto& p : pairs) {
    ++s.levels;
    const bool solved = p.solved_at.has_value();
    const bool got_ist = ist[static_cast<std::size_t>(p.env_id)];
    s.solved += solved;
    s.ist += got_ist;
    s.solved_and_ist += solved && got_ist;
  }
  return s;
}

// ---------------------------------------------------------------------------
// Phylogeny export

struct TreeWindow {
  int t_begin = 0;
  int t_end = 0;  // inclusive
};

/// Transfers of the latest loop that had any; nullopt when the run has none.
inline std::optional<TreeWindow> latest_transfer_window(const std::vector<LoggedTransfer>& transfers) {
  if (transfers.empty()) return std::nullopt;
  int t = 0;
  for (const auto& tr : transfers) t = std::max(t, tr.t);
  return TreeWindow{t, t};
}

struct TreeExport {
  std::string dot;
  int nodes = 0;
  int lineage_edges = 0;
  int transfer_edges = 0;
};

/// Graphviz digraph: one node per pair, black lineage edges parent->child,
/// red transfer edges (agent source -> destination) for transfers inside `window`.
inline TreeExport export_tree(const std::vector<LoggedPair>& pairs, const std::vector<LoggedTransfer>& transfers,
                              const std::map<int, int>& assignment, std::optional<TreeWindow> window) {
  TreeExport out;
  std::ostringstream os;
  os << "digraph pinsky {\n";
  os << "  node [style=filled];\n";
  for (const auto& p : pairs) {
    os << "  n" << p.env_id << " [label=\"" << p.env_id << "\", species=" << assignment.at(p.env_id)
       << ", active=" << (p.active_at_end ? "true" : "false") << ", solved=" << (p.solved_at ? "true" : "false")
       << ", shape=" << (p.active_at_end ? "box" : "ellipse") << "];\n";
    ++out.nodes;
  }
  for (const auto& p : pairs)
    if (p.parent_id) {
      os << "  n" << *p.parent_id << " -> n" << p.env_id << " [kind=lineage, color=black];\n";
      ++out.lineage_edges;
    }
  if (window)
    for (const auto& tr : transfers)
      if (tr.t >= window->t_begin && tr.t <= window->t_end) {
        os << "  n" << tr.from_env << " -> n" << tr.to_env << " [kind=transfer, color=red, t=" << tr.t << "];\n";
        ++out.transfer_edges;
      }
  os << "}\n";
  out.dot = os.str();
  return out;
}

// ---------------------------------------------------------------------------
// Mann-Whitney U

struct RankTestResult {
  double u_a = 0.0;
  double u_b = 0.0;
  double z = 0.0;
  double p_value = 1.0;
};

/// Two-sided Mann-Whitney U, normal approximation with tie correction and no
/// continuity correction. Degenerate (zero-variance) input gives p = 1.
inline RankTestResult rank_test(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.empty() || b.empty()) throw ContractViolation("rank_test needs two non-empty samples");
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  std::vector<std::pair<double, int>> all;
  for (double x : a) all.push_back({x, 0});
  for (double x : b) all.push_back({x, 1});
  std::sort(all.begin(), all.end(), [](const auto& l, const auto& r) { return l.first < r.first; });
  const std::size_t n = all.size();
  double rank_sum_a = 0.0;
  double tie_term = 0.0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && all[j].first == all[i].first) ++j;
    const double mid = (static_cast<double>(i) + static_cast<double>(j) + 1.0) / 2.0;  // 1-based midrank
    const double tcount = static_cast<double>(j - i);
    tie_term += tcount * tcount * tcount - tcount;
    for (std::size_t k = i; k < j; ++k)
      if (all[k].second == 0) rank_sum_a += mid;
    i = j;
  }
  RankTestResult r;
  r.u_a = rank_sum_a - na * (na + 1.0) / 2.0;
  r.u_b = na * nb - r.u_a;
  const double N = na + nb;
  const double var = na * nb / 12.0 * ((N + 1.0) - tie_term / (N * (N - 1.0)));
  if (!(var > 0.0)) return r;
  r.z = (r.u_a - na * nb / 2.0) / std::sqrt(var);
  r.p_value = std::min(1.0, std::erfc(std::fabs(r.z) / std::sqrt(2.0)));
  return r;
}

// ---------------------------------------------------------------------------
// Full pipeline

struct AnalysisReport {
  double gamma = 0.85;
  std::vector<EmbeddingVector> embeddings;  // by env_id
  SpeciesArchive archive;
  std::map<int, int> assignment;
  std::vector<int> support;
  TransferCurves curves;
  TransferMatrix counts;
  TransferMatrix fractions;
  SolveStats solve;
  TreeExport tree;
  std::optional<TreeWindow> tree_window;

  std::size_t species_count() const { return archive.size(); }
  double largest_species_share() const {
    if (assignment.empty()) return 0.0;
    return static_cast<double>(*std::max_element(support.begin(), support.end())) / static_cast<double>(assignment.size());
  }
};

inline AnalysisReport analyze(const RunData& run, double gamma, std::optional<TreeWindow> window = std::nullopt) {
  if (!(gamma > 0.0 && gamma < 1.0)) throw ContractViolation("gamma must be in (0,1)");
  if (run.pairs.empty()) throw RunLogError("run log has no pairs");
  AnalysisReport r;
  r.gamma = gamma;
  const auto embedded = embed_pairs(run.pairs, &r.embeddings);
  r.archive = speciate(embedded, gamma);
  r.assignment = classify(embedded, r.archive);
  r.support = species_support(r.assignment, r.archive.size());
  r.curves = transfer_curves(run.transfers, r.assignment, r.archive.size(), run.loops);
  r.counts = transfer_matrix(run.transfers, r.assignment, r.archive.size(), false);
  r.fractions = transfer_matrix(run.transfers, r.assignment, r.archive.size(), true);
  r.solve = conditional_solve_probability(run.pairs, run.transfers, r.assignment, run.mc_enabled);
  r.tree_window = window ? window : latest_transfer_window(run.transfers);
  r.tree = export_tree(run.pairs, run.transfers, r.assignment, r.tree_window);
  return r;
}

inline std::vector<double> total_series(const TransferCurves& c) { return {c.total.begin(), c.total.end()}; }

namespace detail {

inline Json ratio_json(const std::optional<Ratio>& r) {
  if (!r) return nullptr;
  return Json{{"num", r->num}, {"den", r->den}, {"value", r->value()}};
}

inline void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream f(p, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + p.string());
  f << text;
}

}  // namespace detail

inline Json summary_json(const AnalysisReport& r, const RunData& run, const std::optional<RankTestResult>& comparison) {
  Json s;
  s["gamma"] = r.gamma;
  s["levels"] = run.pairs.size();
  s["loops"] = run.loops;
  s["mc_enabled"] = run.mc_enabled;
  s["species_count"] = r.species_count();
  s["largest_species_share"] = r.largest_species_share();
  Json reps = Json::array();
  for (const auto& rep : r.archive.representatives) reps.push_back(rep.env_id);
  s["representatives"] = reps;
  s["support"] = r.support;
  s["event_counts"] = run.event_counts;
  s["transfers"] = r.counts.total;
  const auto intra = r.counts.intra_fraction();
  s["intra_species_transfer_fraction"] = intra ? Json(*intra) : Json(nullptr);
  if (!r.fractions.warning.empty()) s["matrix_warning"] = r.fractions.warning;
  Json p;
  p["levels"] = r.solve.levels;
  p["solved"] = r.solve.solved;
  p["ist"] = r.solve.ist;
  p["solved_and_ist"] = r.solve.solved_and_ist;
  p["p_solved"] = detail::ratio_json(r.solve.p_solved());
  p["p_ist"] = detail::ratio_json(r.solve.p_ist());
  p["p_solved_given_ist"] = detail::ratio_json(r.solve.p_solved_given_ist());
  p["p_ist_given_solved"] = detail::ratio_json(r.solve.p_ist_given_solved());
  const auto lit = r.solve.ist_given_solved_over_solved();
  p["p_ist_given_solved_over_p_solved"] = lit ? Json(*lit) : Json(nullptr);
  const auto bayes = r.solve.bayes_identity_holds();
  p["bayes_identity_holds"] = bayes ? Json(*bayes) : Json(nullptr);
  if (!r.solve.p_solved_given_ist()) p["note"] = "p_solved_given_ist undefined: no inter-species transfers";
  s["solve_probabilities"] = p;
  s["solved_percent"] = r.solve.solved_percent();
  s["viability_flagged"] = r.solve.viability_flagged;
  s["embedding_substitutions"] = std::count_if(r.embeddings.begin(), r.embeddings.end(),
                                               [](const EmbeddingVector& e) { return e.substituted; });
  if (r.tree_window) s["tree_window"] = {r.tree_window->t_begin, r.tree_window->t_end};
  if (comparison) {
    s["rank_test"] = {{"u_this", comparison->u_a}, {"u_other", comparison->u_b}, {"z", comparison->z},
                      {"p_value", comparison->p_value}};
  }
  // Full-scale figures (5000 loops, 30 pairs) for context only; desk-scale
  // runs are not expected to land near them.
  s["full_scale_reference"] = {
      {"singleDoor", {{"solved_percent", 62}, {"p_solved_given_ist", 0.74}}},
      {"singleDoor aligned 1", {{"solved_percent", 90}, {"p_solved_given_ist", 0.39}}},
      {"singleDoor aligned 2", {{"solved_percent", 83}, {"p_solved_given_ist", 0.41}}},
      {"singleDoor aligned noMC", {{"solved_percent", 61}, {"p_solved_given_ist", 0.41}}},
      {"multiDoor 1", {{"solved_percent", 13}, {"p_solved_given_ist", 0.75}}},
      {"multiDoor 2", {{"solved_percent", 8}, {"p_solved_given_ist", 0.49}}},
      {"multiDoor aligned", {{"solved_percent", 29}, {"p_solved_given_ist", 0.47}}},
      {"multiDoor aligned noMC", {{"solved_percent", 10}, {"p_solved_given_ist", 0.31}}},
  };
  return s;
}

/// Writes species_support.csv, transfer_curves.csv, transfer_matrix.csv,
/// summary.json and tree.dot into `dir`.
inline void write_report(const std::filesystem::path& dir, const AnalysisReport& r, const RunData& run,
                         const std::optional<RankTestResult>& comparison = std::nullopt) {
  std::filesystem::create_directories(dir);
  {
    std::ostringstream os;
    os << "species,representative_env,support\n";
    for (std::size_t s = 0; s < r.archive.size(); ++s)
      os << s << "," << r.archive.representatives[s].env_id << "," << r.support[s] << "\n";
    detail::write_file(dir / "species_support.csv", os.str());
  }
  {
    std::ostringstream os;
    os << "t,total";
    for (std::size_t s = 0; s < r.archive.size(); ++s) os << ",in_" << s << ",out_" << s << ",net_" << s;
    os << "\n";
    for (std::size_t t = 0; t < r.curves.loops(); ++t) {
      os << t << "," << r.curves.total[t];
      for (std::size_t s = 0; s < r.archive.size(); ++s)
        os << "," << r.curves.incoming[s][t] << "," << r.curves.outgoing[s][t] << "," << r.curves.net(s, t);
      os << "\n";
    }
    detail::write_file(dir / "transfer_curves.csv", os.str());
  }
  {
    std::ostringstream os;
    os.precision(17);
    os << "from_species,to_species,count,fraction\n";
    for (std::size_t i = 0; i < r.archive.size(); ++i)
      for (std::size_t j = 0; j < r.archive.size(); ++j) {
        os << i << "," << j << "," << static_cast<long>(r.counts.values[i][j]) << ",";
        if (r.fractions.normalized) os << r.fractions.values[i][j];
        os << "\n";
      }
    detail::write_file(dir / "transfer_matrix.csv", os.str());
  }
  detail::write_file(dir / "summary.json", summary_json(r, run, comparison).dump(2) + "\n");
  detail::write_file(dir / "tree.dot", r.tree.dot);
}

}  // namespace pinsky
