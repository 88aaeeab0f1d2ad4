#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "asympuzl/engine.hpp"
#include "asympuzl/errors.hpp"

namespace asympuzl::metrics {

struct EpisodeOutcome {
  std::optional<int> solved_at_turn;
  bool errored = false;

  bool solved() const { return !errored && solved_at_turn.has_value(); }
};

// Errored episodes count as failures: the denominator is every episode run.
inline double success_percentage(const std::vector<EpisodeOutcome>& outcomes) {
  if (outcomes.empty()) {
    throw ConfigError("success_percentage is undefined for an empty result set");
  }
  std::size_t solved = 0;
  for (const EpisodeOutcome& outcome : outcomes) {
    if (outcome.solved()) {
      ++solved;
    }
  }
  return 100.0 * static_cast<double>(solved) / static_cast<double>(outcomes.size());
}

struct ConfidenceInterval {
  double point = 0.0; // percentages
  double low = 0.0;
  double high = 0.0;
  int n = 0;
  double z = 1.96;
};

// Wilson score interval for a binomial proportion, in percent.
inline ConfidenceInterval wilson_ci(int successes, int trials, double z = 1.96) {
  if (trials < 1) {
    throw ConfigError("wilson_ci requires at least one trial");
  }
  if (successes < 0 || successes > trials) {
    throw ConfigError("wilson_ci successes out of range");
  }
  const double n = static_cast<double>(trials);
  const double p = static_cast<double>(successes) / n;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / n;
  const double center = (p + z2 / (2.0 * n)) / denom;
  const double half = z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / denom;

  ConfidenceInterval ci;
  ci.point = 100.0 * p;
  ci.low = 100.0 * std::max(0.0, center - half);
  ci.high = 100.0 * std::min(1.0, center + half);
  ci.n = trials;
  ci.z = z;
  return ci;
}

// Cumulative success curve: share of episodes solved within k turns, for
// k = 1..max_turns. Non-decreasing; the final value equals
// success_percentage.
inline std::vector<std::pair<int, double>> success_at_turn_k(
    const std::vector<EpisodeOutcome>& outcomes, int max_turns) {
  std::vector<std::pair<int, double>> curve;
  if (outcomes.empty()) {
    return curve;
  }
  curve.reserve(static_cast<std::size_t>(max_turns));
  for (int k = 1; k <= max_turns; ++k) {
    std::size_t solved = 0;
    for (const EpisodeOutcome& outcome : outcomes) {
      if (outcome.solved() && *outcome.solved_at_turn <= k) {
        ++solved;
      }
    }
    curve.emplace_back(k, 100.0 * static_cast<double>(solved) /
                              static_cast<double>(outcomes.size()));
  }
  return curve;
}

struct ActionsPerPosition {
  double agent_a = 0.0;
  double agent_b = 0.0;
};

// Applied (not rejected) modifications per position, per agent.
inline ActionsPerPosition actions_per_position(const EpisodeTranscript& transcript) {
  long long applied_a = 0;
  long long applied_b = 0;
  for (const TurnRecord& turn : transcript.turns) {
    for (const ActionOutcome& outcome : turn.a.outcomes) {
      applied_a += outcome.applied ? 1 : 0;
    }
    for (const ActionOutcome& outcome : turn.b.outcomes) {
      applied_b += outcome.applied ? 1 : 0;
    }
  }
  const double n = static_cast<double>(transcript.config.spec.size);
  return ActionsPerPosition{static_cast<double>(applied_a) / n,
                            static_cast<double>(applied_b) / n};
}

using TokenCounter = std::function<int(std::string_view)>;

// Default counter: a token is a maximal run of alphanumeric characters or a
// single other non-space character. Deterministic, but not comparable to any
// specific model tokenizer; ratios are indicative only.
inline int heuristic_token_count(std::string_view text) {
  int count = 0;
  std::size_t i = 0;
  while (i < text.size()) {
    const unsigned char c = static_cast<unsigned char>(text[i]);
    if (std::isspace(c)) {
      ++i;
    } else if (std::isalnum(c)) {
      ++count;
      while (i < text.size() && std::isalnum(static_cast<unsigned char>(text[i]))) {
        ++i;
      }
    } else {
      ++count;
      ++i;
    }
  }
  return count;
}

// Per-episode quantities every report needs; token counts are produced with
// the pluggable counter at extraction time.
struct EpisodeRecord {
  std::uint64_t seed = 0;
  std::optional<int> solved_at_turn;
  bool errored = false;
  double actions_per_position_a = 0.0;
  double actions_per_position_b = 0.0;
  long long output_tokens_a = 0;
  long long message_tokens_a = 0;
  int turns_a = 0;
  long long output_tokens_b = 0;
  long long message_tokens_b = 0;
  int turns_b = 0;
};

inline EpisodeRecord make_episode_record(const EpisodeTranscript& transcript,
                                         const TokenCounter& counter = heuristic_token_count) {
  EpisodeRecord record;
  record.seed = transcript.config.spec.seed;
  record.solved_at_turn = transcript.solved_at_turn;
  record.errored = transcript.errored;
  const ActionsPerPosition actions = actions_per_position(transcript);
  record.actions_per_position_a = actions.agent_a;
  record.actions_per_position_b = actions.agent_b;
  for (const TurnRecord& turn : transcript.turns) {
    record.output_tokens_a += counter(turn.a.raw_output);
    record.message_tokens_a += counter(turn.a.message);
    ++record.turns_a;
    if (!transcript.single_agent) {
      record.output_tokens_b += counter(turn.b.raw_output);
      record.message_tokens_b += counter(turn.b.message);
      ++record.turns_b;
    }
  }
  return record;
}

// One experiment grid cell group: all episodes sharing (agent, size,
// feedback mode).
struct RunResult {
  std::string agent;
  int size = 0;
  FeedbackMode feedback = FeedbackMode::NoFeedback;
  int max_turns = 0;
  bool single_agent = false;
  std::vector<EpisodeRecord> episodes;
};

inline std::vector<EpisodeOutcome> outcomes_of(const RunResult& group) {
  std::vector<EpisodeOutcome> outcomes;
  outcomes.reserve(group.episodes.size());
  for (const EpisodeRecord& episode : group.episodes) {
    outcomes.push_back(EpisodeOutcome{episode.solved_at_turn, episode.errored});
  }
  return outcomes;
}

struct TokenStats {
  double output_mean_a = 0.0;
  double message_mean_a = 0.0;
  double ratio_pct_a = 0.0;
  double output_mean_b = 0.0;
  double message_mean_b = 0.0;
  double ratio_pct_b = 0.0;
};

// Per-turn pooling across all episodes of a group; the ratio is taken on the
// pooled means.
inline TokenStats token_stats(const std::vector<EpisodeRecord>& episodes) {
  long long out_a = 0, msg_a = 0, out_b = 0, msg_b = 0;
  long long turns_a = 0, turns_b = 0;
  for (const EpisodeRecord& episode : episodes) {
    out_a += episode.output_tokens_a;
    msg_a += episode.message_tokens_a;
    turns_a += episode.turns_a;
    out_b += episode.output_tokens_b;
    msg_b += episode.message_tokens_b;
    turns_b += episode.turns_b;
  }
  TokenStats stats;
  if (turns_a > 0) {
    stats.output_mean_a = static_cast<double>(out_a) / static_cast<double>(turns_a);
    stats.message_mean_a = static_cast<double>(msg_a) / static_cast<double>(turns_a);
  }
  if (turns_b > 0) {
    stats.output_mean_b = static_cast<double>(out_b) / static_cast<double>(turns_b);
    stats.message_mean_b = static_cast<double>(msg_b) / static_cast<double>(turns_b);
  }
  stats.ratio_pct_a = stats.output_mean_a > 0 ? 100.0 * stats.message_mean_a / stats.output_mean_a : 0.0;
  stats.ratio_pct_b = stats.output_mean_b > 0 ? 100.0 * stats.message_mean_b / stats.output_mean_b : 0.0;
  return stats;
}

inline TokenStats token_stats(const std::vector<const EpisodeTranscript*>& transcripts,
                              const TokenCounter& counter = heuristic_token_count) {
  std::vector<EpisodeRecord> records;
  records.reserve(transcripts.size());
  for (const EpisodeTranscript* transcript : transcripts) {
    records.push_back(make_episode_record(*transcript, counter));
  }
  return token_stats(records);
}

// ---------------------------------------------------------------------------
// Report emission
// ---------------------------------------------------------------------------

enum class ReportFormat { Csv, TableText, SvgCurves };

namespace detail {

inline std::string fmt(double value, int decimals) {
  char buffer[64];
  std::snprintf(buffer, sizeof(buffer), "%.*f", decimals, value);
  return buffer;
}

inline std::string fmt1(double value) { return fmt(value, 1); }

inline std::string ci_cell(const ConfidenceInterval& ci) {
  return fmt1(ci.point) + " (" + fmt1(ci.low) + " - " + fmt1(ci.high) + ")";
}

inline std::string group_mode(const RunResult& group) {
  return group.single_agent ? "single" : "pair";
}

inline int feedback_order(FeedbackMode mode) { return static_cast<int>(mode); }

inline std::vector<RunResult> sorted_groups(std::vector<RunResult> groups) {
  std::sort(groups.begin(), groups.end(), [](const RunResult& lhs, const RunResult& rhs) {
    if (lhs.agent != rhs.agent) return lhs.agent < rhs.agent;
    if (lhs.single_agent != rhs.single_agent) return !lhs.single_agent;
    if (lhs.size != rhs.size) return lhs.size < rhs.size;
    return feedback_order(lhs.feedback) < feedback_order(rhs.feedback);
  });
  for (RunResult& group : groups) {
    std::sort(group.episodes.begin(), group.episodes.end(),
              [](const EpisodeRecord& lhs, const EpisodeRecord& rhs) { return lhs.seed < rhs.seed; });
  }
  return groups;
}

inline void write_text_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw IoError("cannot write " + path.string());
  }
  out << content;
  if (!out) {
    throw IoError("failed writing " + path.string());
  }
}

inline std::string render_table(const std::vector<std::vector<std::string>>& rows) {
  std::vector<std::size_t> widths;
  for (const auto& row : rows) {
    if (widths.size() < row.size()) {
      widths.resize(row.size(), 0);
    }
    for (std::size_t i = 0; i < row.size(); ++i) {
      widths[i] = std::max(widths[i], row[i].size());
    }
  }
  std::string out;
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i > 0) {
        out += "  ";
      }
      out += row[i];
      if (i + 1 < row.size()) {
        out.append(widths[i] - row[i].size(), ' ');
      }
    }
    out += '\n';
  }
  return out;
}

inline std::string summary_csv(const std::vector<RunResult>& groups) {
  std::string csv =
      "agent,size,feedback,mode,episodes,solved,errored,success_pct,wilson_low,wilson_high,"
      "actions_per_position_a,actions_per_position_b,output_tokens_a,message_tokens_a,"
      "message_ratio_pct_a,output_tokens_b,message_tokens_b,message_ratio_pct_b\n";
  for (const RunResult& group : groups) {
    const auto outcomes = outcomes_of(group);
    int solved = 0;
    int errored = 0;
    for (const EpisodeOutcome& outcome : outcomes) {
      solved += outcome.solved() ? 1 : 0;
      errored += outcome.errored ? 1 : 0;
    }
    const auto ci = wilson_ci(solved, static_cast<int>(outcomes.size()));
    double mean_a = 0.0;
    double mean_b = 0.0;
    for (const EpisodeRecord& episode : group.episodes) {
      mean_a += episode.actions_per_position_a;
      mean_b += episode.actions_per_position_b;
    }
    mean_a /= static_cast<double>(group.episodes.size());
    mean_b /= static_cast<double>(group.episodes.size());
    const TokenStats tokens = token_stats(group.episodes);

    csv += group.agent + "," + std::to_string(group.size) + "," +
           feedback_mode_name(group.feedback) + "," + group_mode(group) + "," +
           std::to_string(group.episodes.size()) + "," + std::to_string(solved) + "," +
           std::to_string(errored) + "," + fmt1(ci.point) + "," + fmt1(ci.low) + "," +
           fmt1(ci.high) + "," + fmt(mean_a, 4) + "," + fmt(mean_b, 4) + "," +
           fmt(tokens.output_mean_a, 4) + "," + fmt(tokens.message_mean_a, 4) + "," +
           fmt(tokens.ratio_pct_a, 4) + "," + fmt(tokens.output_mean_b, 4) + "," +
           fmt(tokens.message_mean_b, 4) + "," + fmt(tokens.ratio_pct_b, 4) + "\n";
  }
  return csv;
}

inline std::string success_cell(const RunResult& group) {
  const auto outcomes = outcomes_of(group);
  int solved = 0;
  for (const EpisodeOutcome& outcome : outcomes) {
    solved += outcome.solved() ? 1 : 0;
  }
  return ci_cell(wilson_ci(solved, static_cast<int>(outcomes.size())));
}

inline std::string tables_text(const std::vector<RunResult>& groups) {
  std::string out;

  std::set<std::string> agents;
  std::set<int> sizes;
  std::set<int> feedback_orders;
  for (const RunResult& group : groups) {
    agents.insert(group.agent);
    sizes.insert(group.size);
    feedback_orders.insert(feedback_order(group.feedback));
  }
  auto find_group = [&](const std::string& agent, int size,
                        int feedback) -> const RunResult* {
    for (const RunResult& group : groups) {
      if (group.agent == agent && group.size == size && feedback_order(group.feedback) == feedback) {
        return &group;
      }
    }
    return nullptr;
  };

  // Success by feedback mode, one block per size.
  for (int size : sizes) {
    out += "# Success percentage with Wilson 95% CI - size " + std::to_string(size) + "\n";
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> header{"agent"};
    for (int feedback : feedback_orders) {
      header.push_back(feedback_mode_name(static_cast<FeedbackMode>(feedback)));
    }
    rows.push_back(header);
    for (const std::string& agent : agents) {
      std::vector<std::string> row{agent};
      bool any = false;
      for (int feedback : feedback_orders) {
        const RunResult* group = find_group(agent, size, feedback);
        row.push_back(group ? success_cell(*group) : "-");
        any = any || group != nullptr;
      }
      if (any) {
        rows.push_back(std::move(row));
      }
    }
    out += render_table(rows) + "\n";
  }

  // Success by puzzle size, one block per feedback mode.
  for (int feedback : feedback_orders) {
    out += "# Success percentage with Wilson 95% CI - feedback " +
           std::string(feedback_mode_name(static_cast<FeedbackMode>(feedback))) + "\n";
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> header{"agent"};
    for (int size : sizes) {
      header.push_back("size " + std::to_string(size));
    }
    rows.push_back(header);
    for (const std::string& agent : agents) {
      std::vector<std::string> row{agent};
      bool any = false;
      for (int size : sizes) {
        const RunResult* group = find_group(agent, size, feedback);
        row.push_back(group ? success_cell(*group) : "-");
        any = any || group != nullptr;
      }
      if (any) {
        rows.push_back(std::move(row));
      }
    }
    out += render_table(rows) + "\n";
  }

  // Actions per position and token usage over all groups.
  out += "# Mean actions per position\n";
  std::vector<std::vector<std::string>> action_rows{{"agent", "size", "feedback", "mode",
                                                     "agent A", "agent B"}};
  for (const RunResult& group : groups) {
    double mean_a = 0.0;
    double mean_b = 0.0;
    for (const EpisodeRecord& episode : group.episodes) {
      mean_a += episode.actions_per_position_a;
      mean_b += episode.actions_per_position_b;
    }
    mean_a /= static_cast<double>(group.episodes.size());
    mean_b /= static_cast<double>(group.episodes.size());
    action_rows.push_back({group.agent, std::to_string(group.size),
                           feedback_mode_name(group.feedback), group_mode(group), fmt1(mean_a),
                           fmt1(mean_b)});
  }
  out += render_table(action_rows) + "\n";

  out += "# Token usage per turn (heuristic counter)\n";
  std::vector<std::vector<std::string>> token_rows{{"agent", "size", "feedback", "mode",
                                                    "A output", "A message", "A ratio %",
                                                    "B output", "B message", "B ratio %"}};
  for (const RunResult& group : groups) {
    const TokenStats tokens = token_stats(group.episodes);
    token_rows.push_back({group.agent, std::to_string(group.size),
                          feedback_mode_name(group.feedback), group_mode(group),
                          fmt1(tokens.output_mean_a), fmt1(tokens.message_mean_a),
                          fmt1(tokens.ratio_pct_a), fmt1(tokens.output_mean_b),
                          fmt1(tokens.message_mean_b), fmt1(tokens.ratio_pct_b)});
  }
  out += render_table(token_rows);
  return out;
}

inline std::string success_curve_csv(const std::vector<RunResult>& groups) {
  std::string csv = "agent,size,feedback,mode,k,cumulative_pct\n";
  for (const RunResult& group : groups) {
    const auto curve = success_at_turn_k(outcomes_of(group), group.max_turns);
    for (const auto& [k, pct] : curve) {
      csv += group.agent + "," + std::to_string(group.size) + "," +
             feedback_mode_name(group.feedback) + "," + group_mode(group) + "," +
             std::to_string(k) + "," + fmt(pct, 4) + "\n";
    }
  }
  return csv;
}

inline std::string success_curve_svg(const std::vector<RunResult>& groups) {
  static const std::vector<std::string> palette = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728",
                                                   "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};
  const double width = 720.0;
  const double height = 480.0;
  const double left = 60.0;
  const double right = width - 20.0;
  const double top = 20.0;
  const double bottom = height - 50.0;

  int max_k = 1;
  for (const RunResult& group : groups) {
    max_k = std::max(max_k, group.max_turns);
  }
  auto x_of = [&](double k) { return left + (right - left) * k / static_cast<double>(max_k); };
  auto y_of = [&](double pct) { return bottom - (bottom - top) * pct / 100.0; };

  std::string svg;
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"720\" height=\"480\" "
         "viewBox=\"0 0 720 480\">\n";
  svg += "<rect width=\"720\" height=\"480\" fill=\"white\"/>\n";
  for (int pct = 0; pct <= 100; pct += 25) {
    svg += "<line x1=\"" + fmt1(left) + "\" y1=\"" + fmt1(y_of(pct)) + "\" x2=\"" + fmt1(right) +
           "\" y2=\"" + fmt1(y_of(pct)) + "\" stroke=\"#dddddd\"/>\n";
    svg += "<text x=\"" + fmt1(left - 8) + "\" y=\"" + fmt1(y_of(pct) + 4) +
           "\" font-size=\"12\" text-anchor=\"end\">" + std::to_string(pct) + "</text>\n";
  }
  for (int k = 0; k <= max_k; ++k) {
    svg += "<text x=\"" + fmt1(x_of(k)) + "\" y=\"" + fmt1(bottom + 18) +
           "\" font-size=\"12\" text-anchor=\"middle\">" + std::to_string(k) + "</text>\n";
  }
  svg += "<line x1=\"" + fmt1(left) + "\" y1=\"" + fmt1(top) + "\" x2=\"" + fmt1(left) +
         "\" y2=\"" + fmt1(bottom) + "\" stroke=\"black\"/>\n";
  svg += "<line x1=\"" + fmt1(left) + "\" y1=\"" + fmt1(bottom) + "\" x2=\"" + fmt1(right) +
         "\" y2=\"" + fmt1(bottom) + "\" stroke=\"black\"/>\n";
  svg += "<text x=\"" + fmt1((left + right) / 2) + "\" y=\"" + fmt1(height - 14) +
         "\" font-size=\"13\" text-anchor=\"middle\">turn k</text>\n";

  std::size_t index = 0;
  for (const RunResult& group : groups) {
    const std::string& color = palette[index % palette.size()];
    const auto curve = success_at_turn_k(outcomes_of(group), group.max_turns);
    std::string points = fmt1(x_of(0)) + "," + fmt1(y_of(0));
    for (const auto& [k, pct] : curve) {
      points += " " + fmt1(x_of(k)) + "," + fmt1(y_of(pct));
    }
    svg += "<polyline fill=\"none\" stroke=\"" + color + "\" stroke-width=\"2\" points=\"" +
           points + "\"/>\n";
    const std::string label = group.agent + " size " + std::to_string(group.size) + " " +
                              feedback_mode_name(group.feedback);
    const double ly = top + 16.0 * static_cast<double>(index + 1);
    svg += "<rect x=\"" + fmt1(left + 10) + "\" y=\"" + fmt1(ly - 9) +
           "\" width=\"10\" height=\"10\" fill=\"" + color + "\"/>\n";
    svg += "<text x=\"" + fmt1(left + 26) + "\" y=\"" + fmt1(ly) + "\" font-size=\"12\">" + label +
           "</text>\n";
    ++index;
  }
  svg += "</svg>\n";
  return svg;
}

} // namespace detail

// Writes summary.csv, tables.txt, success_at_k.csv and success_at_k.svg into
// `dir`. Output bytes are a pure function of the results.
inline std::vector<std::filesystem::path> emit_report(
    const std::vector<RunResult>& results, const std::filesystem::path& dir,
    const std::set<ReportFormat>& formats = {ReportFormat::Csv, ReportFormat::TableText,
                                             ReportFormat::SvgCurves}) {
  if (results.empty()) {
    throw ConfigError("emit_report refused: no results");
  }
  for (const RunResult& group : results) {
    if (group.episodes.empty()) {
      throw ConfigError("emit_report refused: group " + group.agent + " has no episodes");
    }
  }
  std::filesystem::create_directories(dir);
  const auto groups = detail::sorted_groups(results);

  std::vector<std::filesystem::path> written;
  if (formats.count(ReportFormat::Csv)) {
    auto summary = dir / "summary.csv";
    detail::write_text_file(summary, detail::summary_csv(groups));
    written.push_back(summary);
    auto curve = dir / "success_at_k.csv";
    detail::write_text_file(curve, detail::success_curve_csv(groups));
    written.push_back(curve);
  }
  if (formats.count(ReportFormat::TableText)) {
    auto tables = dir / "tables.txt";
    detail::write_text_file(tables, detail::tables_text(groups));
    written.push_back(tables);
  }
  if (formats.count(ReportFormat::SvgCurves)) {
    auto svg = dir / "success_at_k.svg";
    detail::write_text_file(svg, detail::success_curve_svg(groups));
    written.push_back(svg);
  }
  return written;
}

} // namespace asympuzl::metrics
