#pragma once

#include <algorithm>
#include <cstdlib>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"

#include "asympuzl/puzzle.hpp"
#include "asympuzl/strings.hpp"

namespace asympuzl {

struct ChatMessage {
  AgentRole author = AgentRole::A;
  std::string text;
};

// Everything an agent is shown on its move, already windowed and rendered.
struct Observation {
  AgentRole role = AgentRole::A;
  bool single_agent = false;
  std::string instruction_text;
  std::string clues_text;
  std::optional<std::string> extra_clues_text; // single-agent mode: the partner view
  std::string hypothesis_text;
  std::optional<std::string> feedback_text;
  std::vector<ChatMessage> conversation;
  std::string format_text;
};

struct TokenUsage {
  int prompt_tokens = 0;
  int output_tokens = 0;
};

// The message is the only channel to the partner; actions are never shared.
struct AgentOutput {
  std::string raw_text;
  std::string message;
  std::vector<Action> actions;
  bool parse_ok = false;
  std::optional<TokenUsage> usage; // present when an endpoint reported it
  int attempts = 1;
};

class Agent {
public:
  virtual ~Agent() = default;
  virtual std::string name() const = 0;
  virtual AgentOutput act(const Observation& obs) = 0;
};

// ---------------------------------------------------------------------------
// Prompt construction
// ---------------------------------------------------------------------------

inline std::string pair_instruction(AgentRole role, int size) {
  const char me = role_letter(role);
  const char partner = role_letter(other_role(role));
  std::string text;
  text += std::string("You are Agent ") + me + ".\n";
  text += "Your goal is to solve a symbolic puzzle with " + std::to_string(size) + " positions.\n";
  text += "Each position must have the correct (shape, color) pair.\n";
  if (role == AgentRole::B) {
    text += "- You see the correct shape–color mappings, but in random order.\n";
    text += std::string("- Agent ") + partner + " knows the correct order of shapes but not the colors.\n";
  } else {
    text += "- You see the correct order of shapes, but not the colors.\n";
    text += std::string("- Agent ") + partner + " knows the correct shape–color mappings, but in random order.\n";
  }
  text += std::string("Communicate with Agent ") + partner +
          " and update your hypothesis until the puzzle is solved.";
  return text;
}

inline std::string single_agent_instruction(int size) {
  std::string text;
  text += "You are solving a symbolic puzzle on your own.\n";
  text += "Your goal is to solve a symbolic puzzle with " + std::to_string(size) + " positions.\n";
  text += "Each position must have the correct (shape, color) pair.\n";
  text += "- You see the correct order of shapes, but not the colors.\n";
  text += "- You are also given the correct shape–color mappings, but in random order.\n";
  text += "Update your working hypothesis until every position is correct. You have a single attempt.";
  return text;
}

inline std::string action_format_text() {
  return R"(Each action must follow this format:

{"replace": <position>, "by": {"shape": <shape>, "color": <color>}}

Note: <position> uses 1-based indexing (position 1 is the first item, position 2 is the second item, etc.)
Your answer MUST END WITH a **valid JSON object** and include the following fields:
- "message": What you want to tell and ask to the other agent (the only thing the other agent will receive).
- "actions": A list of actions to take (the other agent will not see your actions).

Example:
```json
{
  "message": "Please confirm the color of the circle.",
  "actions": [
    {
      "replace": 1,
      "by": {
        "shape": "circle",
        "color": "red"
      }
    }
  ]
}
```
)";
}

struct PromptPair {
  std::string system_text;
  std::string user_text;
};

// Renders the per-turn prompt. The feedback section is omitted when there is
// no feedback; the conversation section is omitted when the window is empty.
inline PromptPair build_prompt(const Observation& obs) {
  std::string user = "# Puzzle State\n";
  user += "Initial clues:\n" + obs.clues_text + "\n\n";
  if (obs.extra_clues_text) {
    user += "Additional clues:\n" + *obs.extra_clues_text + "\n\n";
  }
  user += "Your current working hypothesis:\n" + obs.hypothesis_text + "\n\n";
  if (obs.feedback_text) {
    user += "Feedback:\n" + *obs.feedback_text + "\n\n";
  }
  if (!obs.conversation.empty()) {
    user += "Recent conversation:\n";
    for (const ChatMessage& msg : obs.conversation) {
      user += std::string(1, role_letter(msg.author)) + ": " + msg.text + "\n";
    }
    user += "\n";
  }
  user += "Output format:\n" + obs.format_text;
  return PromptPair{obs.instruction_text, user};
}

// ---------------------------------------------------------------------------
// Output parsing
// ---------------------------------------------------------------------------

namespace detail {

struct Span {
  std::size_t begin = 0;
  std::size_t end = 0; // index of the closing brace
};

// Balanced {...} spans, tracking JSON string/escape state so braces inside
// string literals do not open spans.
inline std::vector<Span> balanced_object_spans(std::string_view text) {
  std::vector<Span> spans;
  std::vector<std::size_t> stack;
  bool in_string = false;
  bool escaped = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (in_string) {
      if (escaped) {
        escaped = false;
      } else if (c == '\\') {
        escaped = true;
      } else if (c == '"') {
        in_string = false;
      }
      continue;
    }
    if (c == '"') {
      in_string = true;
    } else if (c == '{') {
      stack.push_back(i);
    } else if (c == '}' && !stack.empty()) {
      spans.push_back(Span{stack.back(), i});
      stack.pop_back();
    }
  }
  return spans;
}

// Last syntactically valid JSON object in the text: latest-ending span wins,
// outermost first among spans that end together.
inline std::optional<nlohmann::json> last_object_in(std::string_view text) {
  auto spans = balanced_object_spans(text);
  std::sort(spans.begin(), spans.end(), [](const Span& lhs, const Span& rhs) {
    if (lhs.end != rhs.end) {
      return lhs.end > rhs.end;
    }
    return lhs.begin < rhs.begin;
  });
  for (const Span& span : spans) {
    auto candidate = std::string(text.substr(span.begin, span.end - span.begin + 1));
    nlohmann::json parsed = nlohmann::json::parse(candidate, nullptr, false);
    if (!parsed.is_discarded() && parsed.is_object()) {
      return parsed;
    }
  }
  return std::nullopt;
}

// Contents of ``` fenced blocks whose info string is empty or "json",
// in order of appearance. An unterminated final fence runs to end of text.
inline std::vector<std::string> fenced_blocks(std::string_view text) {
  std::vector<std::string> blocks;
  std::size_t pos = 0;
  while (true) {
    std::size_t open = text.find("```", pos);
    if (open == std::string_view::npos) {
      break;
    }
    std::size_t info_end = text.find('\n', open + 3);
    if (info_end == std::string_view::npos) {
      break;
    }
    const std::string info = ascii_lower(trim(text.substr(open + 3, info_end - open - 3)));
    std::size_t close = text.find("```", info_end + 1);
    std::size_t content_end = close == std::string_view::npos ? text.size() : close;
    if (info.empty() || info == "json") {
      blocks.emplace_back(text.substr(info_end + 1, content_end - info_end - 1));
    }
    if (close == std::string_view::npos) {
      break;
    }
    pos = close + 3;
  }
  return blocks;
}

inline std::optional<nlohmann::json> extract_payload(std::string_view text) {
  auto blocks = fenced_blocks(text);
  for (auto it = blocks.rbegin(); it != blocks.rend(); ++it) {
    if (auto obj = last_object_in(*it)) {
      return obj;
    }
  }
  return last_object_in(text);
}

} // namespace detail

// Total over arbitrary text: extracts the last valid JSON object (a fenced
// ```json block takes precedence over a bare object scan), then requires a
// string "message" and an "actions" array of {"replace", "by": {shape,
// color}} entries. Attribute names are lowercased; extra fields are ignored.
// Any failure yields parse_ok=false with an empty message and no actions.
inline AgentOutput parse_agent_output(const std::string& raw) {
  AgentOutput out;
  out.raw_text = raw;

  auto payload = detail::extract_payload(raw);
  if (!payload) {
    return out;
  }
  const nlohmann::json& obj = *payload;
  if (!obj.contains("message") || !obj["message"].is_string() || !obj.contains("actions") ||
      !obj["actions"].is_array()) {
    return out;
  }

  std::vector<Action> actions;
  for (const nlohmann::json& entry : obj["actions"]) {
    if (!entry.is_object() || !entry.contains("replace") ||
        !entry["replace"].is_number_integer() || !entry.contains("by") ||
        !entry["by"].is_object()) {
      return out;
    }
    const nlohmann::json& by = entry["by"];
    if (!by.contains("shape") || !by["shape"].is_string() || !by.contains("color") ||
        !by["color"].is_string()) {
      return out;
    }
    Action action;
    action.position = entry["replace"].get<std::int64_t>();
    action.shape = ascii_lower(trim(by["shape"].get<std::string>()));
    action.color = ascii_lower(trim(by["color"].get<std::string>()));
    if (action.shape.empty() || action.color.empty()) {
      return out;
    }
    actions.push_back(std::move(action));
  }

  out.message = obj["message"].get<std::string>();
  out.actions = std::move(actions);
  out.parse_ok = true;
  return out;
}

// Canonical serialization of an agent payload; re-parses to equal actions.
inline std::string serialize_agent_output(const std::string& message,
                                          const std::vector<Action>& actions) {
  nlohmann::json payload;
  payload["message"] = message;
  payload["actions"] = nlohmann::json::array();
  for (const Action& action : actions) {
    payload["actions"].push_back(
        {{"replace", action.position}, {"by", {{"shape", action.shape}, {"color", action.color}}}});
  }
  return payload.dump(2);
}

// ---------------------------------------------------------------------------
// Clue/message parsing used by the scripted agents
// ---------------------------------------------------------------------------

struct ParsedClue {
  int position = 0;
  std::string shape;
  std::optional<std::string> color; // nullopt when rendered as "unknown"
};

// Inverse of render_cells for well-formed clue text; malformed sentences are
// skipped.
inline std::vector<ParsedClue> parse_clue_text(std::string_view text) {
  std::vector<ParsedClue> clues;
  constexpr std::string_view kPosition = "Position ";
  constexpr std::string_view kThe = ": the ";
  constexpr std::string_view kIs = " is ";
  std::size_t pos = 0;
  while (true) {
    std::size_t start = text.find(kPosition, pos);
    if (start == std::string_view::npos) {
      break;
    }
    std::size_t the = text.find(kThe, start);
    std::size_t is = the == std::string_view::npos ? std::string_view::npos : text.find(kIs, the);
    std::size_t dot = is == std::string_view::npos ? std::string_view::npos : text.find('.', is);
    if (dot == std::string_view::npos) {
      break;
    }
    ParsedClue clue;
    const std::string index_text(trim(text.substr(start + kPosition.size(),
                                                  the - start - kPosition.size())));
    char* end = nullptr;
    clue.position = static_cast<int>(std::strtol(index_text.c_str(), &end, 10));
    clue.shape = std::string(trim(text.substr(the + kThe.size(), is - the - kThe.size())));
    const std::string color(trim(text.substr(is + kIs.size(), dot - is - kIs.size())));
    if (color != "unknown") {
      clue.color = color;
    }
    if (clue.position > 0 && !clue.shape.empty() && end != nullptr && *end == '\0') {
      clues.push_back(std::move(clue));
    }
    pos = dot + 1;
  }
  return clues;
}

namespace oracle {

inline constexpr std::string_view kOrderPrefix = "The correct order of shapes is: ";
inline constexpr std::string_view kPairsPrefix = "The shape-color pairs are: ";
inline constexpr std::string_view kColorsApplied =
    "Thank you. I have updated every position with your colors.";
inline constexpr std::string_view kAck = "Acknowledged.";

inline std::string order_message(const std::vector<ParsedClue>& clues) {
  std::vector<std::string> shapes;
  shapes.reserve(clues.size());
  for (const ParsedClue& clue : clues) {
    shapes.push_back(clue.shape);
  }
  return std::string(kOrderPrefix) + join(shapes, ", ") + ".";
}

inline std::string pairs_message(const std::vector<ParsedClue>& clues) {
  std::vector<std::string> pairs;
  pairs.reserve(clues.size());
  for (const ParsedClue& clue : clues) {
    pairs.push_back(clue.shape + " is " + clue.color.value_or("unknown"));
  }
  return std::string(kPairsPrefix) + join(pairs, ", ") + ".";
}

inline std::optional<std::vector<std::string>> parse_order_message(std::string_view text) {
  std::size_t start = text.find(kOrderPrefix);
  if (start == std::string_view::npos) {
    return std::nullopt;
  }
  std::size_t dot = text.find('.', start + kOrderPrefix.size());
  if (dot == std::string_view::npos) {
    return std::nullopt;
  }
  std::vector<std::string> shapes;
  for (const std::string& part :
       split(text.substr(start + kOrderPrefix.size(), dot - start - kOrderPrefix.size()), ",")) {
    shapes.emplace_back(trim(part));
  }
  return shapes;
}

inline std::optional<std::map<std::string, std::string>> parse_pairs_message(
    std::string_view text) {
  std::size_t start = text.find(kPairsPrefix);
  if (start == std::string_view::npos) {
    return std::nullopt;
  }
  std::size_t dot = text.find('.', start + kPairsPrefix.size());
  if (dot == std::string_view::npos) {
    return std::nullopt;
  }
  std::map<std::string, std::string> pairs;
  for (const std::string& part :
       split(text.substr(start + kPairsPrefix.size(), dot - start - kPairsPrefix.size()), ",")) {
    auto words = split(std::string(trim(part)), " is ");
    if (words.size() != 2) {
      return std::nullopt;
    }
    pairs[std::string(trim(words[0]))] = std::string(trim(words[1]));
  }
  return pairs;
}

inline std::optional<std::string> latest_message_from(const std::vector<ChatMessage>& conversation,
                                                      AgentRole author) {
  for (auto it = conversation.rbegin(); it != conversation.rend(); ++it) {
    if (it->author == author) {
      return it->text;
    }
  }
  return std::nullopt;
}

// Replacement actions that move the parsed hypothesis onto the target cells;
// one action per mismatched position.
inline std::vector<Action> actions_towards(const std::vector<ParsedClue>& hypothesis,
                                           const std::vector<std::pair<std::string, std::string>>& target) {
  std::vector<Action> actions;
  for (std::size_t i = 0; i < target.size(); ++i) {
    bool matches = i < hypothesis.size() && hypothesis[i].shape == target[i].first &&
                   hypothesis[i].color && *hypothesis[i].color == target[i].second;
    if (!matches) {
      actions.push_back(Action{static_cast<std::int64_t>(i) + 1, target[i].first, target[i].second});
    }
  }
  return actions;
}

} // namespace oracle

inline AgentOutput make_scripted_output(std::string message, std::vector<Action> actions) {
  AgentOutput out;
  out.raw_text = serialize_agent_output(message, actions);
  out.message = std::move(message);
  out.actions = std::move(actions);
  out.parse_ok = true;
  return out;
}

// Optimal Agent A. Turn 1: announces its shape order and waits. Once the
// partner has shared its shape-to-color mapping, assigns every color in a
// single move (one action per still-unsolved position).
class OracleAliceAgent : public Agent {
public:
  std::string name() const override { return "oracle_alice"; }

  AgentOutput act(const Observation& obs) override {
    const auto clues = parse_clue_text(obs.clues_text);
    const auto hypothesis = parse_clue_text(obs.hypothesis_text);

    if (auto partner = oracle::latest_message_from(obs.conversation, other_role(obs.role))) {
      if (auto pairs = oracle::parse_pairs_message(*partner)) {
        std::vector<std::pair<std::string, std::string>> target;
        target.reserve(clues.size());
        bool complete = true;
        for (const ParsedClue& clue : clues) {
          auto it = pairs->find(clue.shape);
          if (it == pairs->end()) {
            complete = false;
            break;
          }
          target.emplace_back(clue.shape, it->second);
        }
        if (complete) {
          return make_scripted_output(std::string(oracle::kColorsApplied),
                                      oracle::actions_towards(hypothesis, target));
        }
      }
    }
    return make_scripted_output(oracle::order_message(clues), {});
  }
};

// Optimal Agent B. Shares its shape-to-color mapping on its first move and,
// as soon as the partner's shape order is known, permutes its pairs into that
// order (at most one action per misplaced position).
class OracleBobAgent : public Agent {
public:
  std::string name() const override { return "oracle_bob"; }

  AgentOutput act(const Observation& obs) override {
    const auto clues = parse_clue_text(obs.clues_text);
    const auto hypothesis = parse_clue_text(obs.hypothesis_text);

    std::map<std::string, std::string> pair_map;
    for (const ParsedClue& clue : clues) {
      pair_map[clue.shape] = clue.color.value_or("unknown");
    }

    std::vector<Action> actions;
    if (auto partner = oracle::latest_message_from(obs.conversation, other_role(obs.role))) {
      if (auto order = oracle::parse_order_message(*partner)) {
        if (order->size() == clues.size()) {
          std::vector<std::pair<std::string, std::string>> target;
          target.reserve(order->size());
          bool complete = true;
          for (const std::string& shape : *order) {
            auto it = pair_map.find(shape);
            if (it == pair_map.end()) {
              complete = false;
              break;
            }
            target.emplace_back(shape, it->second);
          }
          if (complete) {
            actions = oracle::actions_towards(hypothesis, target);
          }
        }
      }
    }

    auto own_last = oracle::latest_message_from(obs.conversation, obs.role);
    std::string message = own_last && starts_with(*own_last, oracle::kPairsPrefix)
                              ? std::string(oracle::kAck)
                              : oracle::pairs_message(clues);
    return make_scripted_output(std::move(message), std::move(actions));
  }
};

// Full-information oracle for the single-agent mode: merges the shape order
// from its own clues with the shape-to-color mapping from the additional
// clues and solves in one attempt.
class SingleOracleAgent : public Agent {
public:
  std::string name() const override { return "oracle_single"; }

  AgentOutput act(const Observation& obs) override {
    const auto clues = parse_clue_text(obs.clues_text);
    const auto hypothesis = parse_clue_text(obs.hypothesis_text);
    if (!obs.extra_clues_text) {
      return make_scripted_output("", {});
    }
    std::map<std::string, std::string> pair_map;
    for (const ParsedClue& clue : parse_clue_text(*obs.extra_clues_text)) {
      pair_map[clue.shape] = clue.color.value_or("unknown");
    }
    std::vector<std::pair<std::string, std::string>> target;
    target.reserve(clues.size());
    for (const ParsedClue& clue : clues) {
      auto it = pair_map.find(clue.shape);
      if (it == pair_map.end()) {
        return make_scripted_output("", {});
      }
      target.emplace_back(clue.shape, it->second);
    }
    return make_scripted_output("Merged both clue sets.",
                                oracle::actions_towards(hypothesis, target));
  }
};

// Baseline that shares nothing and never edits its hypothesis.
class SilentAgent : public Agent {
public:
  std::string name() const override { return "silent"; }

  AgentOutput act(const Observation&) override { return make_scripted_output("", {}); }
};

// Baseline that ignores the partner and re-emits its own previous message
// verbatim, never acting.
class RepeaterAgent : public Agent {
public:
  static constexpr std::string_view kFirstMessage =
      "I will keep working on my part of the puzzle.";

  std::string name() const override { return "repeater"; }

  AgentOutput act(const Observation&) override {
    std::string message = last_message_.value_or(std::string(kFirstMessage));
    last_message_ = message;
    return make_scripted_output(std::move(message), {});
  }

private:
  std::optional<std::string> last_message_;
};

} // namespace asympuzl
