#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "asympuzl/errors.hpp"
#include "asympuzl/rng.hpp"
#include "asympuzl/strings.hpp"

namespace asympuzl {

enum class AgentRole { A, B };

inline char role_letter(AgentRole role) { return role == AgentRole::A ? 'A' : 'B'; }

inline AgentRole other_role(AgentRole role) {
  return role == AgentRole::A ? AgentRole::B : AgentRole::A;
}

// Built-in vocabularies. 24 entries each so that distinct attributes are
// available up to the largest supported puzzle sizes; the first five match
// the names used throughout the prompt examples.
inline const std::vector<std::string>& default_shape_vocab() {
  static const std::vector<std::string> shapes = {
      "square",  "triangle", "rectangle", "circle",   "pentagon", "hexagon",
      "heptagon", "octagon",  "rhombus",   "trapezoid", "ellipse",  "star",
      "cross",    "arrow",    "heart",     "diamond",   "crescent", "ring",
      "spiral",   "wedge",    "prism",     "cone",      "cylinder", "cube"};
  return shapes;
}

inline const std::vector<std::string>& default_color_vocab() {
  static const std::vector<std::string> colors = {
      "blue",   "red",    "cyan",   "green", "yellow", "orange",
      "purple", "magenta", "pink",  "brown", "black",  "white",
      "gray",   "violet", "indigo", "teal",  "maroon", "olive",
      "navy",   "lime",   "coral",  "gold",  "silver", "beige"};
  return colors;
}

struct PuzzleSpec {
  int size = 5;
  std::uint64_t seed = 0;
  std::vector<std::string> shape_vocab = default_shape_vocab();
  std::vector<std::string> color_vocab = default_color_vocab();
};

inline void validate_spec(const PuzzleSpec& spec) {
  if (spec.size < 2) {
    throw ConfigError("puzzle size must be at least 2, got " + std::to_string(spec.size));
  }
  auto check_vocab = [&](const std::vector<std::string>& vocab, const char* label) {
    if (static_cast<int>(vocab.size()) < spec.size) {
      throw ConfigError(std::string(label) + " vocabulary has " + std::to_string(vocab.size()) +
                        " entries, need at least " + std::to_string(spec.size));
    }
    std::set<std::string> unique(vocab.begin(), vocab.end());
    if (unique.size() != vocab.size()) {
      throw ConfigError(std::string(label) + " vocabulary contains duplicate entries");
    }
  };
  check_vocab(spec.shape_vocab, "shape");
  check_vocab(spec.color_vocab, "color");
}

struct Cell {
  std::optional<std::string> shape;
  std::optional<std::string> color;

  bool operator==(const Cell&) const = default;
};

struct GroundTruth {
  std::vector<Cell> cells;
};

struct AgentView {
  AgentRole role = AgentRole::A;
  std::vector<Cell> cells;
};

struct WorkingHypothesis {
  AgentRole role = AgentRole::A;
  std::vector<Cell> cells;
};

// A full-cell replacement instruction. Positions are 1-based; range and
// vocabulary membership are checked when the action is applied, not here.
struct Action {
  std::int64_t position = 0;
  std::string shape;
  std::string color;

  bool operator==(const Action&) const = default;
};

struct ActionOutcome {
  Action action;
  bool applied = false;
  std::string reject_reason; // empty when applied
};

struct GeneratedPuzzle {
  GroundTruth ground_truth;
  AgentView view_a;
  AgentView view_b;
};

// Samples `size` distinct shapes and colors, pairs them uniformly at random,
// then derives the two complementary views: A keeps positions and shapes but
// loses colors, B keeps full pairs under a uniformly random non-identity
// permutation. Pure function of the PuzzleSpec.
inline GeneratedPuzzle generate_puzzle(const PuzzleSpec& spec) {
  validate_spec(spec);
  SeededRng rng(spec.seed);
  const std::size_t n = static_cast<std::size_t>(spec.size);

  auto sample = [&](const std::vector<std::string>& vocab) {
    auto order = rng.permutation(vocab.size());
    std::vector<std::string> picked(n);
    for (std::size_t i = 0; i < n; ++i) {
      picked[i] = vocab[order[i]];
    }
    return picked;
  };
  const auto shapes = sample(spec.shape_vocab);
  const auto colors = sample(spec.color_vocab);

  GeneratedPuzzle out;
  out.ground_truth.cells.resize(n);
  out.view_a.role = AgentRole::A;
  out.view_a.cells.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    out.ground_truth.cells[i] = Cell{shapes[i], colors[i]};
    out.view_a.cells[i] = Cell{shapes[i], std::nullopt};
  }

  const auto perm = rng.non_identity_permutation(n);
  out.view_b.role = AgentRole::B;
  out.view_b.cells.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    out.view_b.cells[i] = out.ground_truth.cells[perm[i]];
  }
  return out;
}

inline WorkingHypothesis init_hypothesis(const AgentView& view) {
  return WorkingHypothesis{view.role, view.cells};
}

inline bool vocab_contains(const std::vector<std::string>& vocab, const std::string& value) {
  return std::find(vocab.begin(), vocab.end(), value) != vocab.end();
}

// Applies actions in list order; later actions may overwrite earlier ones.
// Rejected actions never abort the turn. Attribute names are lowercased
// before the vocabulary check and stored in canonical form.
inline std::vector<ActionOutcome> apply_actions(WorkingHypothesis& hyp,
                                                const std::vector<Action>& actions,
                                                const PuzzleSpec& spec) {
  std::vector<ActionOutcome> outcomes;
  outcomes.reserve(actions.size());
  const std::int64_t n = static_cast<std::int64_t>(hyp.cells.size());
  for (const Action& action : actions) {
    ActionOutcome outcome{action, false, ""};
    const std::string shape = ascii_lower(trim(action.shape));
    const std::string color = ascii_lower(trim(action.color));
    if (action.position < 1 || action.position > n) {
      outcome.reject_reason = "position out of range";
    } else if (!vocab_contains(spec.shape_vocab, shape)) {
      outcome.reject_reason = "unknown shape";
    } else if (!vocab_contains(spec.color_vocab, color)) {
      outcome.reject_reason = "unknown color";
    } else {
      hyp.cells[static_cast<std::size_t>(action.position - 1)] = Cell{shape, color};
      outcome.applied = true;
    }
    outcomes.push_back(std::move(outcome));
  }
  return outcomes;
}

// Ascending 1-based positions whose cell differs from the ground truth;
// a missing attribute always counts as wrong.
inline std::vector<int> wrong_positions(const WorkingHypothesis& hyp, const GroundTruth& gt) {
  if (hyp.cells.size() != gt.cells.size()) {
    throw InternalError("hypothesis/ground-truth size mismatch: " +
                        std::to_string(hyp.cells.size()) + " vs " +
                        std::to_string(gt.cells.size()));
  }
  std::vector<int> wrong;
  for (std::size_t i = 0; i < hyp.cells.size(); ++i) {
    const Cell& cell = hyp.cells[i];
    if (!cell.shape || !cell.color || cell != gt.cells[i]) {
      wrong.push_back(static_cast<int>(i) + 1);
    }
  }
  return wrong;
}

inline bool is_solved(const WorkingHypothesis& hyp, const GroundTruth& gt) {
  if (hyp.cells.size() != gt.cells.size()) {
    throw InternalError("hypothesis/ground-truth size mismatch: " +
                        std::to_string(hyp.cells.size()) + " vs " +
                        std::to_string(gt.cells.size()));
  }
  for (std::size_t i = 0; i < hyp.cells.size(); ++i) {
    const Cell& cell = hyp.cells[i];
    if (!cell.shape || !cell.color || cell != gt.cells[i]) {
      return false;
    }
  }
  return true;
}

// "Position {i}: the {shape} is {color}." with "unknown" for absent
// attributes, sentences joined by single spaces.
inline std::string render_cells(const std::vector<Cell>& cells) {
  std::string out;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i > 0) {
      out += ' ';
    }
    out += "Position " + std::to_string(i + 1) + ": the " +
           cells[i].shape.value_or("unknown") + " is " + cells[i].color.value_or("unknown") + ".";
  }
  return out;
}

inline std::string render_clues(const AgentView& view) { return render_cells(view.cells); }

} // namespace asympuzl
