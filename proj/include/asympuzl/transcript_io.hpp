#pragma once

#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "asympuzl/engine.hpp"
#include "asympuzl/errors.hpp"

namespace asympuzl {

// One persisted episode: a header record, one record per turn, and an
// outcome record, each on its own JSON line. Records contain no wall-clock
// state, so identical runs persist byte-identically.
struct StoredEpisode {
  std::string experiment;
  std::string agent_label;
  EpisodeTranscript transcript;
};

namespace transcript_detail {

using nlohmann::json;

inline json cells_to_json(const std::vector<Cell>& cells) {
  json arr = json::array();
  for (const Cell& cell : cells) {
    json item;
    item["shape"] = cell.shape ? json(*cell.shape) : json(nullptr);
    item["color"] = cell.color ? json(*cell.color) : json(nullptr);
    arr.push_back(std::move(item));
  }
  return arr;
}

inline std::vector<Cell> cells_from_json(const json& arr) {
  std::vector<Cell> cells;
  for (const json& item : arr) {
    Cell cell;
    if (item.contains("shape") && item["shape"].is_string()) {
      cell.shape = item["shape"].get<std::string>();
    }
    if (item.contains("color") && item["color"].is_string()) {
      cell.color = item["color"].get<std::string>();
    }
    cells.push_back(std::move(cell));
  }
  return cells;
}

inline json agent_turn_to_json(const AgentTurn& half) {
  json turn;
  turn["system"] = half.prompt_system;
  turn["user"] = half.prompt_user;
  turn["raw"] = half.raw_output;
  turn["message"] = half.message;
  turn["parse_ok"] = half.parse_ok;
  json actions = json::array();
  for (const ActionOutcome& outcome : half.outcomes) {
    actions.push_back({{"replace", outcome.action.position},
                       {"shape", outcome.action.shape},
                       {"color", outcome.action.color},
                       {"applied", outcome.applied},
                       {"reason", outcome.reject_reason}});
  }
  turn["actions"] = std::move(actions);
  if (half.attempts > 1) {
    turn["attempts"] = half.attempts;
  }
  if (half.usage) {
    turn["usage"] = {{"prompt_tokens", half.usage->prompt_tokens},
                     {"output_tokens", half.usage->output_tokens}};
  }
  return turn;
}

inline AgentTurn agent_turn_from_json(const json& turn) {
  AgentTurn half;
  half.prompt_system = turn.value("system", "");
  half.prompt_user = turn.value("user", "");
  half.raw_output = turn.value("raw", "");
  half.message = turn.value("message", "");
  half.parse_ok = turn.value("parse_ok", false);
  if (turn.contains("actions")) {
    for (const json& entry : turn["actions"]) {
      ActionOutcome outcome;
      outcome.action.position = entry.value("replace", std::int64_t{0});
      outcome.action.shape = entry.value("shape", "");
      outcome.action.color = entry.value("color", "");
      outcome.applied = entry.value("applied", false);
      outcome.reject_reason = entry.value("reason", "");
      half.outcomes.push_back(std::move(outcome));
    }
  }
  half.attempts = turn.value("attempts", 1);
  if (turn.contains("usage") && turn["usage"].is_object()) {
    TokenUsage usage;
    usage.prompt_tokens = turn["usage"].value("prompt_tokens", 0);
    usage.output_tokens = turn["usage"].value("output_tokens", 0);
    half.usage = usage;
  }
  return half;
}

inline json state_to_json(const SolvedState& state) {
  return json{{"a_solved", state.a_solved},
              {"b_solved", state.b_solved},
              {"a_wrong", state.a_wrong},
              {"b_wrong", state.b_wrong}};
}

inline SolvedState state_from_json(const json& obj) {
  SolvedState state;
  state.a_solved = obj.value("a_solved", false);
  state.b_solved = obj.value("b_solved", false);
  if (obj.contains("a_wrong")) {
    state.a_wrong = obj["a_wrong"].get<std::vector<int>>();
  }
  if (obj.contains("b_wrong")) {
    state.b_wrong = obj["b_wrong"].get<std::vector<int>>();
  }
  return state;
}

} // namespace transcript_detail

inline void write_transcript_jsonl(std::ostream& out, const StoredEpisode& episode) {
  using nlohmann::json;
  const EpisodeTranscript& t = episode.transcript;

  json header;
  header["record"] = "header";
  header["experiment"] = episode.experiment;
  header["agent"] = episode.agent_label;
  header["mode"] = t.single_agent ? "single" : "pair";
  header["size"] = t.config.spec.size;
  header["seed"] = t.config.spec.seed;
  header["feedback"] = feedback_mode_name(t.config.feedback);
  header["max_turns"] = t.config.max_turns;
  header["history_length"] = t.config.history_length;
  header["shape_vocab"] = t.config.spec.shape_vocab;
  header["color_vocab"] = t.config.spec.color_vocab;
  header["ground_truth"] = transcript_detail::cells_to_json(t.ground_truth.cells);
  header["view_a"] = transcript_detail::cells_to_json(t.view_a.cells);
  header["view_b"] = transcript_detail::cells_to_json(t.view_b.cells);
  out << header.dump() << '\n';

  for (const TurnRecord& turn : t.turns) {
    json record;
    record["record"] = "turn";
    record["turn"] = turn.turn_index;
    record["a"] = transcript_detail::agent_turn_to_json(turn.a);
    if (!t.single_agent) {
      record["b"] = transcript_detail::agent_turn_to_json(turn.b);
    }
    record["state"] = transcript_detail::state_to_json(turn.end_state);
    out << record.dump() << '\n';
  }

  json outcome;
  outcome["record"] = "outcome";
  outcome["solved_at_turn"] = t.solved_at_turn ? nlohmann::json(*t.solved_at_turn) : nlohmann::json(nullptr);
  outcome["errored"] = t.errored;
  if (t.errored) {
    outcome["error"] = t.error_reason;
  }
  outcome["final_a"] = transcript_detail::cells_to_json(t.final_a.cells);
  outcome["final_b"] = transcript_detail::cells_to_json(t.final_b.cells);
  out << outcome.dump() << '\n';
}

// Reads one persisted episode. Malformed lines are skipped with a warning;
// a file without a leading header record is rejected entirely.
inline std::optional<StoredEpisode> read_transcript_jsonl(std::istream& in,
                                                          std::vector<std::string>* warnings) {
  using nlohmann::json;
  auto warn = [&](const std::string& message) {
    if (warnings != nullptr) {
      warnings->push_back(message);
    }
  };

  StoredEpisode episode;
  EpisodeTranscript& t = episode.transcript;
  bool have_header = false;
  bool have_outcome = false;
  std::string line;
  int line_number = 0;

  while (std::getline(in, line)) {
    ++line_number;
    if (line.empty()) {
      continue;
    }
    json record = json::parse(line, nullptr, false);
    if (record.is_discarded() || !record.is_object() || !record.contains("record")) {
      warn("line " + std::to_string(line_number) + ": malformed record skipped");
      continue;
    }
    const std::string kind = record.value("record", "");
    if (kind == "header") {
      episode.experiment = record.value("experiment", "");
      episode.agent_label = record.value("agent", "");
      t.single_agent = record.value("mode", "pair") == "single";
      t.config.spec.size = record.value("size", 0);
      t.config.spec.seed = record.value("seed", std::uint64_t{0});
      try {
        t.config.feedback = parse_feedback_mode(record.value("feedback", "none"));
      } catch (const ConfigError&) {
        warn("line " + std::to_string(line_number) + ": unknown feedback mode");
      }
      t.config.max_turns = record.value("max_turns", 0);
      t.config.history_length = record.value("history_length", 1);
      if (record.contains("shape_vocab")) {
        t.config.spec.shape_vocab = record["shape_vocab"].get<std::vector<std::string>>();
      }
      if (record.contains("color_vocab")) {
        t.config.spec.color_vocab = record["color_vocab"].get<std::vector<std::string>>();
      }
      if (record.contains("ground_truth")) {
        t.ground_truth.cells = transcript_detail::cells_from_json(record["ground_truth"]);
      }
      if (record.contains("view_a")) {
        t.view_a.role = AgentRole::A;
        t.view_a.cells = transcript_detail::cells_from_json(record["view_a"]);
      }
      if (record.contains("view_b")) {
        t.view_b.role = AgentRole::B;
        t.view_b.cells = transcript_detail::cells_from_json(record["view_b"]);
      }
      have_header = true;
    } else if (kind == "turn") {
      if (!have_header) {
        warn("line " + std::to_string(line_number) + ": turn before header skipped");
        continue;
      }
      TurnRecord turn;
      turn.turn_index = record.value("turn", 0);
      if (record.contains("a")) {
        turn.a = transcript_detail::agent_turn_from_json(record["a"]);
      }
      if (record.contains("b")) {
        turn.b = transcript_detail::agent_turn_from_json(record["b"]);
      }
      if (record.contains("state")) {
        turn.end_state = transcript_detail::state_from_json(record["state"]);
      }
      t.turns.push_back(std::move(turn));
    } else if (kind == "outcome") {
      if (record.contains("solved_at_turn") && record["solved_at_turn"].is_number_integer()) {
        t.solved_at_turn = record["solved_at_turn"].get<int>();
      }
      t.errored = record.value("errored", false);
      t.error_reason = record.value("error", "");
      if (record.contains("final_a")) {
        t.final_a.role = AgentRole::A;
        t.final_a.cells = transcript_detail::cells_from_json(record["final_a"]);
      }
      if (record.contains("final_b")) {
        t.final_b.role = AgentRole::B;
        t.final_b.cells = transcript_detail::cells_from_json(record["final_b"]);
      }
      have_outcome = true;
    } else {
      warn("line " + std::to_string(line_number) + ": unknown record kind \"" + kind + "\"");
    }
  }

  if (!have_header) {
    warn("no header record; episode rejected");
    return std::nullopt;
  }
  if (!have_outcome) {
    warn("missing outcome record; episode rejected");
    return std::nullopt;
  }
  return episode;
}

inline std::string transcript_to_string(const StoredEpisode& episode) {
  std::ostringstream out;
  write_transcript_jsonl(out, episode);
  return out.str();
}

} // namespace asympuzl
