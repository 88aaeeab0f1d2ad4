#pragma once

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <ostream>
#include <string>
#include <thread>
#include <tuple>
#include <utility>
#include <vector>

#include "asympuzl/agent.hpp"
#include "asympuzl/engine.hpp"
#include "asympuzl/llm_agent.hpp"
#include "asympuzl/metrics.hpp"
#include "asympuzl/run_config.hpp"
#include "asympuzl/transcript_io.hpp"

namespace asympuzl::cli {

namespace runner_detail {

inline std::uint64_t fnv1a64(std::string_view text) {
  std::uint64_t hash = 1469598103934665603ull;
  for (unsigned char c : text) {
    hash ^= c;
    hash *= 1099511628211ull;
  }
  return hash;
}

inline std::string hex16(std::uint64_t value) {
  static const char digits[] = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = digits[value & 0xf];
    value >>= 4;
  }
  return out;
}

inline std::string sanitize(std::string_view name) {
  std::string out;
  out.reserve(name.size());
  for (char c : name) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
                    c == '-' || c == '_' || c == '.';
    out.push_back(ok ? c : '-');
  }
  return out.empty() ? std::string("agent") : out;
}

} // namespace runner_detail

struct GridCell {
  AgentSpec agent;
  int size = 0;
  FeedbackMode feedback = FeedbackMode::NoFeedback;
  std::uint64_t seed = 0;
};

// Resumability key: every config field that influences the episode content.
inline std::string cell_content_key(const RunConfig& config, const GridCell& cell) {
  std::string key;
  key += config.experiment + "\n";
  key += cell.agent.label + "\n";
  key += config.single_agent ? "single\n" : "pair\n";
  key += std::to_string(cell.size) + "\n";
  key += feedback_mode_name(cell.feedback);
  key += "\n";
  key += std::to_string(cell.seed) + "\n";
  key += std::to_string(config.max_turn_multiplier) + "\n";
  key += std::to_string(config.history_length) + "\n";
  key += join(config.shape_vocab, ",") + "\n";
  key += join(config.color_vocab, ",") + "\n";
  return key;
}

inline std::string cell_filename(const RunConfig& config, const GridCell& cell) {
  const std::string hash = runner_detail::hex16(runner_detail::fnv1a64(cell_content_key(config, cell)));
  std::string name = runner_detail::sanitize(cell.agent.label);
  name += "__s" + std::to_string(cell.size);
  name += "__";
  name += config.single_agent ? "single" : feedback_mode_name(cell.feedback);
  name += "__seed" + std::to_string(cell.seed);
  name += "__" + hash + ".jsonl";
  return name;
}

struct AgentPair {
  std::unique_ptr<Agent> a;
  std::unique_ptr<Agent> b;
};

inline AgentPair make_agent_pair(const AgentSpec& spec,
                                 const std::shared_ptr<llm::ConcurrencyLimiter>& limiter) {
  switch (spec.kind) {
  case AgentKind::Oracle:
    return AgentPair{std::make_unique<OracleAliceAgent>(), std::make_unique<OracleBobAgent>()};
  case AgentKind::Silent:
    return AgentPair{std::make_unique<SilentAgent>(), std::make_unique<SilentAgent>()};
  case AgentKind::Repeater:
    return AgentPair{std::make_unique<RepeaterAgent>(), std::make_unique<RepeaterAgent>()};
  case AgentKind::Model: {
    llm::ModelConfig model = spec.model;
    model.limiter = limiter;
    return AgentPair{std::make_unique<LlmAgent>(model), std::make_unique<LlmAgent>(model)};
  }
  }
  throw InternalError("unhandled agent kind");
}

inline std::unique_ptr<Agent> make_single_agent(const AgentSpec& spec,
                                                const std::shared_ptr<llm::ConcurrencyLimiter>& limiter) {
  switch (spec.kind) {
  case AgentKind::Oracle:
    return std::make_unique<SingleOracleAgent>();
  case AgentKind::Silent:
    return std::make_unique<SilentAgent>();
  case AgentKind::Repeater:
    return std::make_unique<RepeaterAgent>();
  case AgentKind::Model: {
    llm::ModelConfig model = spec.model;
    model.limiter = limiter;
    return std::make_unique<LlmAgent>(model);
  }
  }
  throw InternalError("unhandled agent kind");
}

inline EpisodeConfig make_episode_config(const RunConfig& config, const GridCell& cell) {
  EpisodeConfig episode;
  episode.spec.size = cell.size;
  episode.spec.seed = cell.seed;
  episode.spec.shape_vocab = config.shape_vocab;
  episode.spec.color_vocab = config.color_vocab;
  episode.feedback = cell.feedback;
  episode.max_turns = config.max_turn_multiplier * cell.size;
  episode.history_length = config.history_length;
  return episode;
}

inline std::vector<GridCell> build_grid(const RunConfig& config) {
  std::vector<GridCell> cells;
  const std::vector<FeedbackMode> modes =
      config.single_agent ? std::vector<FeedbackMode>{FeedbackMode::NoFeedback}
                          : config.feedback_modes;
  for (const AgentSpec& agent : config.agents) {
    for (int size : config.sizes) {
      for (FeedbackMode mode : modes) {
        for (std::uint64_t seed : config.seeds) {
          cells.push_back(GridCell{agent, size, mode, seed});
        }
      }
    }
  }
  return cells;
}

// Loads every *.jsonl episode under dir, sorted by filename so downstream
// aggregation is order-independent.
inline std::vector<StoredEpisode> load_transcripts(const std::filesystem::path& dir,
                                                   std::vector<std::string>* warnings) {
  std::vector<std::filesystem::path> files;
  if (std::filesystem::exists(dir)) {
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
      if (entry.is_regular_file() && entry.path().extension() == ".jsonl") {
        files.push_back(entry.path());
      }
    }
  }
  std::sort(files.begin(), files.end());

  std::vector<StoredEpisode> episodes;
  for (const auto& file : files) {
    std::ifstream in(file);
    if (!in) {
      if (warnings != nullptr) {
        warnings->push_back(file.string() + ": cannot open");
      }
      continue;
    }
    std::vector<std::string> file_warnings;
    auto episode = read_transcript_jsonl(in, &file_warnings);
    if (warnings != nullptr) {
      for (const std::string& warning : file_warnings) {
        warnings->push_back(file.filename().string() + ": " + warning);
      }
    }
    if (episode) {
      episodes.push_back(std::move(*episode));
    }
  }
  return episodes;
}

inline std::vector<metrics::RunResult> group_results(
    const std::vector<StoredEpisode>& episodes,
    const metrics::TokenCounter& counter = metrics::heuristic_token_count) {
  std::map<std::tuple<std::string, bool, int, int>, metrics::RunResult> groups;
  for (const StoredEpisode& episode : episodes) {
    const EpisodeTranscript& t = episode.transcript;
    auto key = std::make_tuple(episode.agent_label, t.single_agent, t.config.spec.size,
                               static_cast<int>(t.config.feedback));
    auto [it, inserted] = groups.try_emplace(key);
    metrics::RunResult& group = it->second;
    if (inserted) {
      group.agent = episode.agent_label;
      group.single_agent = t.single_agent;
      group.size = t.config.spec.size;
      group.feedback = t.config.feedback;
    }
    group.max_turns = std::max(group.max_turns, t.config.max_turns);
    group.episodes.push_back(metrics::make_episode_record(t, counter));
  }
  std::vector<metrics::RunResult> out;
  out.reserve(groups.size());
  for (auto& [key, group] : groups) {
    out.push_back(std::move(group));
  }
  return out;
}

struct RunStats {
  int executed = 0;
  int skipped = 0;
  int errored = 0; // episodes persisted with an error outcome
  std::vector<std::string> failures; // cells that produced no transcript
};

// Executes the configured grid. Existing episode files are skipped, so a rerun
// resumes where the previous one stopped; each episode is written atomically
// (tmp file + rename). Reports are then regenerated from the persisted
// transcripts so that re-running `report` reproduces them byte for byte.
inline RunStats cmd_run(const RunConfig& config, std::ostream& log) {
  std::filesystem::create_directories(config.output_dir);
  const auto cells = build_grid(config);
  auto limiter = std::make_shared<llm::ConcurrencyLimiter>(config.concurrency);

  RunStats stats;
  std::mutex mutex;
  std::atomic<std::size_t> next{0};

  auto worker = [&] {
    while (true) {
      const std::size_t index = next.fetch_add(1);
      if (index >= cells.size()) {
        return;
      }
      const GridCell& cell = cells[index];
      const auto path = config.output_dir / cell_filename(config, cell);
      if (std::filesystem::exists(path)) {
        std::lock_guard lock(mutex);
        ++stats.skipped;
        continue;
      }
      try {
        StoredEpisode episode;
        episode.experiment = config.experiment;
        episode.agent_label = cell.agent.label;
        const EpisodeConfig episode_config = make_episode_config(config, cell);
        if (config.single_agent) {
          auto agent = make_single_agent(cell.agent, limiter);
          episode.transcript = run_single_agent(episode_config, *agent);
        } else {
          auto pair = make_agent_pair(cell.agent, limiter);
          episode.transcript = run_episode(episode_config, *pair.a, *pair.b);
        }
        const auto tmp = path.string() + ".tmp";
        {
          std::ofstream out(tmp, std::ios::binary);
          if (!out) {
            throw IoError("cannot write " + tmp);
          }
          write_transcript_jsonl(out, episode);
        }
        std::filesystem::rename(tmp, path);
        std::lock_guard lock(mutex);
        ++stats.executed;
        if (episode.transcript.errored) {
          ++stats.errored;
        }
      } catch (const std::exception& e) {
        std::lock_guard lock(mutex);
        stats.failures.push_back(path.filename().string() + ": " + e.what());
      }
    }
  };

  const int workers = std::max(1, std::min<int>(config.concurrency, static_cast<int>(cells.size())));
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (int i = 0; i < workers; ++i) {
    pool.emplace_back(worker);
  }
  for (std::thread& thread : pool) {
    thread.join();
  }

  log << "episodes executed: " << stats.executed << ", skipped: " << stats.skipped
      << ", errored: " << stats.errored << "\n";
  for (const std::string& failure : stats.failures) {
    log << "cell failed: " << failure << "\n";
  }

  std::vector<std::string> warnings;
  const auto episodes = load_transcripts(config.output_dir, &warnings);
  for (const std::string& warning : warnings) {
    log << "warning: " << warning << "\n";
  }
  if (!episodes.empty()) {
    const auto written = metrics::emit_report(group_results(episodes), config.output_dir);
    for (const auto& file : written) {
      log << "wrote " << file.string() << "\n";
    }
  }
  return stats;
}

// Recomputes every report from the persisted transcripts alone. Corrupt lines
// are skipped; the exclusions are logged and noted next to the report.
inline void cmd_report(const std::filesystem::path& dir, std::ostream& log) {
  std::vector<std::string> warnings;
  const auto episodes = load_transcripts(dir, &warnings);
  for (const std::string& warning : warnings) {
    log << "warning: " << warning << "\n";
  }
  if (episodes.empty()) {
    throw ConfigError("no transcripts found under " + dir.string());
  }
  const auto written = metrics::emit_report(group_results(episodes), dir);
  for (const auto& file : written) {
    log << "wrote " << file.string() << "\n";
  }
  if (!warnings.empty()) {
    std::ofstream notes(dir / "report_notes.txt", std::ios::binary);
    notes << "excluded records: " << warnings.size() << "\n";
    for (const std::string& warning : warnings) {
      notes << warning << "\n";
    }
    log << "report excluded " << warnings.size() << " malformed record(s); see report_notes.txt\n";
  }
}

struct OracleCheckResult {
  int pair_episodes = 0;
  int single_episodes = 0;
  std::vector<std::string> violations;

  bool ok() const { return violations.empty(); }
};

// Structural optimality sweep: the oracle pair must solve every puzzle in
// exactly two turns with Agent A touching each position exactly once and
// Agent B at most once (exactly once iff its permutation has no fixed
// point); the single-agent oracle must solve in one attempt.
inline OracleCheckResult oracle_check(const std::vector<int>& sizes, int pair_seeds,
                                      int single_seeds, std::ostream& log) {
  OracleCheckResult result;

  for (int size : sizes) {
    int violations_before = static_cast<int>(result.violations.size());
    for (int seed = 0; seed < pair_seeds; ++seed) {
      EpisodeConfig config;
      config.spec.size = size;
      config.spec.seed = static_cast<std::uint64_t>(seed);
      config.feedback = FeedbackMode::Both;
      OracleAliceAgent alice;
      OracleBobAgent bob;
      const EpisodeTranscript transcript = run_episode(config, alice, bob);
      ++result.pair_episodes;

      auto violation = [&](const std::string& what) {
        result.violations.push_back("pair size=" + std::to_string(size) +
                                    " seed=" + std::to_string(seed) + ": " + what);
      };
      if (!transcript.solved_at_turn || *transcript.solved_at_turn != 2) {
        violation("expected solved at turn 2, got " +
                  (transcript.solved_at_turn ? std::to_string(*transcript.solved_at_turn)
                                             : std::string("unsolved")));
        continue;
      }
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
      int fixed_points = 0;
      for (std::size_t i = 0; i < transcript.view_b.cells.size(); ++i) {
        fixed_points += transcript.view_b.cells[i] == transcript.ground_truth.cells[i] ? 1 : 0;
      }
      if (applied_a != size) {
        violation("agent A applied " + std::to_string(applied_a) + " actions, expected " +
                  std::to_string(size));
      }
      if (applied_b != size - fixed_points) {
        violation("agent B applied " + std::to_string(applied_b) + " actions, expected " +
                  std::to_string(size - fixed_points));
      }
    }
    log << "pair size " << size << ": " << pair_seeds << " episodes, "
        << (static_cast<int>(result.violations.size()) == violations_before ? "ok" : "VIOLATIONS")
        << "\n";
  }

  for (int size : sizes) {
    int violations_before = static_cast<int>(result.violations.size());
    for (int seed = 0; seed < single_seeds; ++seed) {
      EpisodeConfig config;
      config.spec.size = size;
      config.spec.seed = static_cast<std::uint64_t>(seed);
      SingleOracleAgent oracle;
      const EpisodeTranscript transcript = run_single_agent(config, oracle);
      ++result.single_episodes;
      if (!transcript.solved_at_turn || *transcript.solved_at_turn != 1) {
        result.violations.push_back("single size=" + std::to_string(size) +
                                    " seed=" + std::to_string(seed) +
                                    ": expected solved in one attempt");
      }
    }
    log << "single size " << size << ": " << single_seeds << " episodes, "
        << (static_cast<int>(result.violations.size()) == violations_before ? "ok" : "VIOLATIONS")
        << "\n";
  }

  return result;
}

} // namespace asympuzl::cli
