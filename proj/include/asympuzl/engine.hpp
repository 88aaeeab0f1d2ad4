#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "asympuzl/agent.hpp"
#include "asympuzl/errors.hpp"
#include "asympuzl/feedback.hpp"
#include "asympuzl/puzzle.hpp"

namespace asympuzl {

inline int default_max_turns(int size) { return 2 * size; }

struct EpisodeConfig {
  PuzzleSpec spec;
  FeedbackMode feedback = FeedbackMode::NoFeedback;
  int max_turns = 0; // <= 0 resolves to default_max_turns(size)
  int history_length = 1;
};

struct AgentTurn {
  std::string prompt_system;
  std::string prompt_user;
  std::string raw_output;
  std::string message;
  bool parse_ok = false;
  std::vector<ActionOutcome> outcomes;
  std::optional<TokenUsage> usage;
  int attempts = 1;
};

struct TurnRecord {
  int turn_index = 0;
  AgentTurn a;
  AgentTurn b;
  SolvedState end_state; // hypotheses vs ground truth after both halves
};

struct EpisodeTranscript {
  EpisodeConfig config;
  bool single_agent = false;
  GroundTruth ground_truth;
  AgentView view_a;
  AgentView view_b;
  std::vector<TurnRecord> turns;
  std::optional<int> solved_at_turn;
  bool errored = false;
  std::string error_reason;
  WorkingHypothesis final_a;
  WorkingHypothesis final_b;
};

// The windowed conversation a recipient sees: its own last `history_length`
// messages plus the other agent's last `history_length`, in emission order.
// With the default length of 1 this is [own previous message, partner's
// latest message].
inline std::vector<ChatMessage> message_window(const std::vector<ChatMessage>& history,
                                               int history_length, AgentRole recipient) {
  if (history_length <= 0) {
    return {};
  }
  std::vector<bool> keep(history.size(), false);
  int own = 0;
  int other = 0;
  for (std::size_t i = history.size(); i > 0; --i) {
    const ChatMessage& msg = history[i - 1];
    int& count = msg.author == recipient ? own : other;
    if (count < history_length) {
      keep[i - 1] = true;
      ++count;
    }
  }
  std::vector<ChatMessage> window;
  for (std::size_t i = 0; i < history.size(); ++i) {
    if (keep[i]) {
      window.push_back(history[i]);
    }
  }
  return window;
}

namespace detail {

inline EpisodeConfig resolve_config(EpisodeConfig config) {
  validate_spec(config.spec);
  if (config.max_turns <= 0) {
    config.max_turns = default_max_turns(config.spec.size);
  }
  if (config.history_length < 0) {
    throw ConfigError("history_length must be non-negative");
  }
  return config;
}

inline Observation make_observation(AgentRole role, const EpisodeConfig& config,
                                    const AgentView& view, const WorkingHypothesis& hyp,
                                    std::optional<std::string> feedback,
                                    std::vector<ChatMessage> conversation) {
  Observation obs;
  obs.role = role;
  obs.instruction_text = pair_instruction(role, config.spec.size);
  obs.clues_text = render_clues(view);
  obs.hypothesis_text = render_cells(hyp.cells);
  obs.feedback_text = std::move(feedback);
  obs.conversation = std::move(conversation);
  obs.format_text = action_format_text();
  return obs;
}

inline AgentTurn record_turn_half(const Observation& obs, const AgentOutput& out,
                                  std::vector<ActionOutcome> outcomes) {
  AgentTurn half;
  PromptPair prompt = build_prompt(obs);
  half.prompt_system = std::move(prompt.system_text);
  half.prompt_user = std::move(prompt.user_text);
  half.raw_output = out.raw_text;
  half.message = out.message;
  half.parse_ok = out.parse_ok;
  half.outcomes = std::move(outcomes);
  half.usage = out.usage;
  half.attempts = out.attempts;
  return half;
}

} // namespace detail

// One full episode: per turn, A is prompted and acts, its message is
// delivered to B within the same turn, B acts, then the joint solved state is
// re-evaluated. Feedback shown at turn t reflects the hypotheses at the end
// of turn t-1, so turn 1 carries none. Stops early on joint success; a
// transport failure marks the episode errored but leaves the transcript
// serializable.
inline EpisodeTranscript run_episode(const EpisodeConfig& raw_config, Agent& agent_a,
                                     Agent& agent_b) {
  const EpisodeConfig config = detail::resolve_config(raw_config);
  GeneratedPuzzle puzzle = generate_puzzle(config.spec);

  EpisodeTranscript transcript;
  transcript.config = config;
  transcript.ground_truth = puzzle.ground_truth;
  transcript.view_a = puzzle.view_a;
  transcript.view_b = puzzle.view_b;

  WorkingHypothesis hyp_a = init_hypothesis(puzzle.view_a);
  WorkingHypothesis hyp_b = init_hypothesis(puzzle.view_b);
  std::vector<ChatMessage> history;
  SolvedState previous_state;
  bool has_previous = false;

  for (int turn = 1; turn <= config.max_turns; ++turn) {
    TurnRecord record;
    record.turn_index = turn;

    auto half_turn = [&](AgentRole role, Agent& agent, const AgentView& view,
                         WorkingHypothesis& hyp) -> std::optional<AgentTurn> {
      std::optional<std::string> feedback;
      if (has_previous) {
        feedback = compute_feedback(config.feedback, previous_state, role);
      }
      Observation obs = detail::make_observation(
          role, config, view, hyp, std::move(feedback),
          message_window(history, config.history_length, role));
      AgentOutput out;
      try {
        out = agent.act(obs);
      } catch (const TransportError& e) {
        transcript.errored = true;
        transcript.error_reason = std::string("agent ") + role_letter(role) + " transport failure at turn " +
                                  std::to_string(turn) + ": " + e.what();
        return std::nullopt;
      } catch (const ProtocolError& e) {
        transcript.errored = true;
        transcript.error_reason = std::string("agent ") + role_letter(role) + " protocol failure at turn " +
                                  std::to_string(turn) + ": " + e.what();
        return std::nullopt;
      }
      auto outcomes = apply_actions(hyp, out.actions, config.spec);
      history.push_back(ChatMessage{role, out.message});
      return detail::record_turn_half(obs, out, std::move(outcomes));
    };

    auto half_a = half_turn(AgentRole::A, agent_a, puzzle.view_a, hyp_a);
    if (!half_a) {
      break;
    }
    record.a = std::move(*half_a);

    auto half_b = half_turn(AgentRole::B, agent_b, puzzle.view_b, hyp_b);
    if (!half_b) {
      break;
    }
    record.b = std::move(*half_b);

    record.end_state = make_solved_state(hyp_a, hyp_b, puzzle.ground_truth);
    previous_state = record.end_state;
    has_previous = true;
    transcript.turns.push_back(std::move(record));

    if (joint_solved(previous_state)) {
      transcript.solved_at_turn = turn;
      break;
    }
  }

  transcript.final_a = std::move(hyp_a);
  transcript.final_b = std::move(hyp_b);
  return transcript;
}

// Full-information single-agent mode: both views in one prompt, one attempt,
// no feedback and no conversation.
inline EpisodeTranscript run_single_agent(const EpisodeConfig& raw_config, Agent& agent) {
  EpisodeConfig config = detail::resolve_config(raw_config);
  config.max_turns = 1;
  config.feedback = FeedbackMode::NoFeedback;
  GeneratedPuzzle puzzle = generate_puzzle(config.spec);

  EpisodeTranscript transcript;
  transcript.config = config;
  transcript.single_agent = true;
  transcript.ground_truth = puzzle.ground_truth;
  transcript.view_a = puzzle.view_a;
  transcript.view_b = puzzle.view_b;

  WorkingHypothesis hyp = init_hypothesis(puzzle.view_a);

  Observation obs;
  obs.role = AgentRole::A;
  obs.single_agent = true;
  obs.instruction_text = single_agent_instruction(config.spec.size);
  obs.clues_text = render_clues(puzzle.view_a);
  obs.extra_clues_text = render_clues(puzzle.view_b);
  obs.hypothesis_text = render_cells(hyp.cells);
  obs.format_text = action_format_text();

  AgentOutput out;
  bool acted = false;
  try {
    out = agent.act(obs);
    acted = true;
  } catch (const TransportError& e) {
    transcript.errored = true;
    transcript.error_reason = std::string("agent transport failure: ") + e.what();
  } catch (const ProtocolError& e) {
    transcript.errored = true;
    transcript.error_reason = std::string("agent protocol failure: ") + e.what();
  }

  if (acted) {
    TurnRecord record;
    record.turn_index = 1;
    auto outcomes = apply_actions(hyp, out.actions, config.spec);
    record.a = detail::record_turn_half(obs, out, std::move(outcomes));
    record.end_state.a_wrong = wrong_positions(hyp, puzzle.ground_truth);
    record.end_state.a_solved = record.end_state.a_wrong.empty();
    // Single-agent episodes have no B side; it is recorded as vacuously
    // solved so the joint predicate reduces to A's.
    record.end_state.b_solved = true;
    transcript.turns.push_back(std::move(record));
    if (transcript.turns.back().end_state.a_solved) {
      transcript.solved_at_turn = 1;
    }
  }

  transcript.final_a = std::move(hyp);
  transcript.final_b = init_hypothesis(puzzle.view_b);
  return transcript;
}

} // namespace asympuzl
