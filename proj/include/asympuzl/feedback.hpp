#pragma once

#include <optional>
#include <string>
#include <vector>

#include "asympuzl/errors.hpp"
#include "asympuzl/puzzle.hpp"
#include "asympuzl/strings.hpp"

namespace asympuzl {

// Six feedback granularities, fixed per episode.
enum class FeedbackMode { NoFeedback, Own, OwnDetailed, Joint, Both, BothDetailed };

inline const char* feedback_mode_name(FeedbackMode mode) {
  switch (mode) {
  case FeedbackMode::NoFeedback: return "none";
  case FeedbackMode::Own: return "own";
  case FeedbackMode::OwnDetailed: return "own_detailed";
  case FeedbackMode::Joint: return "joint";
  case FeedbackMode::Both: return "both";
  case FeedbackMode::BothDetailed: return "both_detailed";
  }
  return "none";
}

inline FeedbackMode parse_feedback_mode(const std::string& name) {
  for (FeedbackMode mode : {FeedbackMode::NoFeedback, FeedbackMode::Own, FeedbackMode::OwnDetailed,
                            FeedbackMode::Joint, FeedbackMode::Both, FeedbackMode::BothDetailed}) {
    if (name == feedback_mode_name(mode)) {
      return mode;
    }
  }
  throw ConfigError("unknown feedback mode \"" + name +
                    "\" (expected none|own|own_detailed|joint|both|both_detailed)");
}

inline const std::vector<FeedbackMode>& all_feedback_modes() {
  static const std::vector<FeedbackMode> modes = {
      FeedbackMode::NoFeedback, FeedbackMode::Own,  FeedbackMode::OwnDetailed,
      FeedbackMode::Joint,      FeedbackMode::Both, FeedbackMode::BothDetailed};
  return modes;
}

struct SolvedState {
  bool a_solved = false;
  bool b_solved = false;
  std::vector<int> a_wrong;
  std::vector<int> b_wrong;
};

inline SolvedState make_solved_state(const WorkingHypothesis& hyp_a,
                                     const WorkingHypothesis& hyp_b, const GroundTruth& gt) {
  SolvedState state;
  state.a_wrong = wrong_positions(hyp_a, gt);
  state.b_wrong = wrong_positions(hyp_b, gt);
  state.a_solved = state.a_wrong.empty();
  state.b_solved = state.b_wrong.empty();
  return state;
}

inline bool joint_solved(const SolvedState& state) { return state.a_solved && state.b_solved; }

namespace detail {

inline std::string position_list(const std::vector<int>& positions) {
  std::vector<std::string> parts;
  parts.reserve(positions.size());
  for (int p : positions) {
    parts.push_back(std::to_string(p));
  }
  return join(parts, ", ");
}

inline std::string agent_status_sentence(AgentRole role, bool solved,
                                         const std::vector<int>& wrong, bool detailed) {
  std::string text = std::string("Agent ") + role_letter(role) + "'s part of the puzzle is " +
                     (solved ? "solved." : "unsolved.");
  if (detailed && !solved) {
    text += " Incorrect positions: " + position_list(wrong) + ".";
  }
  return text;
}

} // namespace detail

// Renders the feedback a recipient sees at the start of a turn, from the
// solved state at the end of the previous turn. Discloses only solved flags
// and position indices, never attribute values. NoFeedback yields nothing
// (the section is omitted from the prompt).
inline std::optional<std::string> compute_feedback(FeedbackMode mode, const SolvedState& state,
                                                   AgentRole recipient) {
  const bool own_solved = recipient == AgentRole::A ? state.a_solved : state.b_solved;
  const std::vector<int>& own_wrong = recipient == AgentRole::A ? state.a_wrong : state.b_wrong;

  switch (mode) {
  case FeedbackMode::NoFeedback:
    return std::nullopt;
  case FeedbackMode::Own:
    return std::string("Your part of the puzzle is ") + (own_solved ? "solved." : "unsolved.");
  case FeedbackMode::OwnDetailed: {
    std::string text =
        std::string("Your part of the puzzle is ") + (own_solved ? "solved." : "unsolved.");
    if (!own_solved) {
      text += " Incorrect positions: " + detail::position_list(own_wrong) + ".";
    }
    return text;
  }
  case FeedbackMode::Joint:
    return std::string("The puzzle is ") + (joint_solved(state) ? "solved." : "unsolved.");
  case FeedbackMode::Both:
    return std::string("Agent A's part of the puzzle is ") +
           (state.a_solved ? "solved" : "unsolved") + " and Agent B's part of the puzzle is " +
           (state.b_solved ? "solved." : "unsolved.");
  case FeedbackMode::BothDetailed:
    return detail::agent_status_sentence(AgentRole::A, state.a_solved, state.a_wrong, true) + " " +
           detail::agent_status_sentence(AgentRole::B, state.b_solved, state.b_wrong, true);
  }
  return std::nullopt;
}

} // namespace asympuzl
