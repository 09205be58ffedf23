// Append-only run event stream, one JSON object per line.
//
// Schema "pinsky-runlog/1". The first line is a header:
//   {"type":"header","schema":"pinsky-runlog/1","seed":S,"config":{...},"architecture":{...}}
// followed by events, each carrying "type" and the loop index "t":
//   pair_created  env_id, parent_id (null for the root), mutated, level (ASCII level text)
//   mc_result     candidate, parent_id, verdict, random_wins, random_trials,
//                 mcts_wins, mcts_trials, accepted, env_id (null when rejected)
//   opt_summary   env_id, best_fitness, evals, generations, win
//   transfer      from_env, to_env, challenger_score, incumbent_score
//   solve         env_id, origin_env, reward, phase ("optimize"|"tournament"), agent_file
//   cull          env_id
//   loop_tick     active (env ids after the loop)
//   run_end       loops, pairs, final_agents ({env_id: file})
// Loop indices never decrease along the stream; a log without run_end is truncated.
#pragma once

#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

namespace pinsky {

using Json = nlohmann::ordered_json;

inline constexpr const char* kRunLogSchema = "pinsky-runlog/1";

class RunLog {
 public:
  RunLog() = default;
  /// Mirrors every appended line to `sink` (flushed per event).
  explicit RunLog(std::ostream* sink) : sink_(sink) {}

  void append(Json event) {
    std::string line = event.dump();
    if (sink_) {
      *sink_ << line << '\n';
      sink_->flush();
    }
    lines_.push_back(std::move(line));
    events_.push_back(std::move(event));
  }

  const std::vector<Json>& events() const { return events_; }
  const std::vector<std::string>& lines() const { return lines_; }

  std::string text() const {
    std::string out;
    for (const auto& l : lines_) {
      out += l;
      out.push_back('\n');
    }
    return out;
  }

  std::size_t count(const std::string& type) const {
    std::size_t n = 0;
    for (const auto& e : events_)
      if (e.value("type", "") == type) ++n;
    return n;
  }

 private:
  std::ostream* sink_ = nullptr;
  std::vector<Json> events_;
  std::vector<std::string> lines_;
};

}  // namespace pinsky
