#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "asympuzl/errors.hpp"
#include "asympuzl/feedback.hpp"
#include "asympuzl/llm_client.hpp"
#include "asympuzl/puzzle.hpp"

namespace asympuzl::cli {

enum class AgentKind { Oracle, Silent, Repeater, Model };

struct AgentSpec {
  AgentKind kind = AgentKind::Oracle;
  std::string label;
  llm::ModelConfig model; // populated when kind == Model
};

// Defaults reproduce the reference protocol with no flags: seeds 0..29,
// temperature 0.0, 4096 output tokens, history length 1, max turns = 2x size.
struct RunConfig {
  std::string experiment = "experiment";
  bool single_agent = false;
  std::vector<AgentSpec> agents;
  std::vector<int> sizes = {5};
  std::vector<std::uint64_t> seeds = default_seeds();
  std::vector<FeedbackMode> feedback_modes = {FeedbackMode::NoFeedback};
  int max_turn_multiplier = 2;
  int history_length = 1;
  std::filesystem::path output_dir;
  int concurrency = 4;
  std::vector<std::string> shape_vocab = default_shape_vocab();
  std::vector<std::string> color_vocab = default_color_vocab();

  static std::vector<std::uint64_t> default_seeds() {
    std::vector<std::uint64_t> seeds(30);
    for (std::size_t i = 0; i < seeds.size(); ++i) {
      seeds[i] = i;
    }
    return seeds;
  }
};

namespace config_detail {

using nlohmann::json;

[[noreturn]] inline void fail(const std::string& path, const std::string& what) {
  throw ConfigError("config error at " + path + ": " + what);
}

inline std::string expect_string(const json& value, const std::string& path) {
  if (!value.is_string()) {
    fail(path, "expected string");
  }
  return value.get<std::string>();
}

inline long long expect_int(const json& value, const std::string& path) {
  if (!value.is_number_integer()) {
    fail(path, "expected integer");
  }
  return value.get<long long>();
}

inline double expect_number(const json& value, const std::string& path) {
  if (!value.is_number()) {
    fail(path, "expected number");
  }
  return value.get<double>();
}

inline std::vector<std::string> expect_string_array(const json& value, const std::string& path) {
  if (!value.is_array()) {
    fail(path, "expected array of strings");
  }
  std::vector<std::string> out;
  for (std::size_t i = 0; i < value.size(); ++i) {
    out.push_back(expect_string(value[i], path + "[" + std::to_string(i) + "]"));
  }
  return out;
}

inline AgentSpec parse_agent(const json& entry, const std::string& path) {
  AgentSpec spec;
  if (entry.is_string()) {
    const std::string name = entry.get<std::string>();
    if (name == "oracle") {
      spec.kind = AgentKind::Oracle;
    } else if (name == "silent") {
      spec.kind = AgentKind::Silent;
    } else if (name == "repeater") {
      spec.kind = AgentKind::Repeater;
    } else {
      fail(path, "unknown scripted agent \"" + name + "\" (expected oracle|silent|repeater)");
    }
    spec.label = name;
    return spec;
  }
  if (!entry.is_object()) {
    fail(path, "expected scripted agent name or model object");
  }
  spec.kind = AgentKind::Model;
  if (!entry.contains("name")) {
    fail(path + ".name", "required");
  }
  spec.label = expect_string(entry["name"], path + ".name");
  spec.model.name = spec.label;
  if (!entry.contains("endpoint")) {
    fail(path + ".endpoint", "required");
  }
  spec.model.base_url = expect_string(entry["endpoint"], path + ".endpoint");
  spec.model.model = entry.contains("model") ? expect_string(entry["model"], path + ".model")
                                             : spec.label;
  if (entry.contains("temperature")) {
    spec.model.temperature = expect_number(entry["temperature"], path + ".temperature");
    if (spec.model.temperature < 0) {
      fail(path + ".temperature", "must be >= 0");
    }
  }
  if (entry.contains("max_output_tokens")) {
    spec.model.max_output_tokens =
        static_cast<int>(expect_int(entry["max_output_tokens"], path + ".max_output_tokens"));
    if (spec.model.max_output_tokens <= 0) {
      fail(path + ".max_output_tokens", "must be positive");
    }
  }
  if (entry.contains("timeout_s")) {
    spec.model.timeout = std::chrono::seconds(expect_int(entry["timeout_s"], path + ".timeout_s"));
  }
  if (entry.contains("max_attempts")) {
    spec.model.retry.max_attempts =
        static_cast<int>(expect_int(entry["max_attempts"], path + ".max_attempts"));
    if (spec.model.retry.max_attempts < 1) {
      fail(path + ".max_attempts", "must be >= 1");
    }
  }
  if (entry.contains("backoff_ms")) {
    spec.model.retry.initial_backoff =
        std::chrono::milliseconds(expect_int(entry["backoff_ms"], path + ".backoff_ms"));
  }
  if (entry.contains("api_key_env")) {
    spec.model.api_key_env = expect_string(entry["api_key_env"], path + ".api_key_env");
  }
  return spec;
}

} // namespace config_detail

inline RunConfig parse_run_config(const nlohmann::json& root) {
  using config_detail::expect_int;
  using config_detail::expect_string;
  using config_detail::expect_string_array;
  using config_detail::fail;

  if (!root.is_object()) {
    fail("$", "expected a JSON object");
  }
  RunConfig config;
  if (root.contains("experiment")) {
    config.experiment = expect_string(root["experiment"], "experiment");
  }
  if (root.contains("mode")) {
    const std::string mode = expect_string(root["mode"], "mode");
    if (mode == "single") {
      config.single_agent = true;
    } else if (mode != "pair") {
      fail("mode", "expected \"pair\" or \"single\"");
    }
  }
  if (!root.contains("agents")) {
    fail("agents", "required");
  }
  if (!root["agents"].is_array() || root["agents"].empty()) {
    fail("agents", "expected non-empty array");
  }
  for (std::size_t i = 0; i < root["agents"].size(); ++i) {
    config.agents.push_back(
        config_detail::parse_agent(root["agents"][i], "agents[" + std::to_string(i) + "]"));
  }
  if (root.contains("sizes")) {
    if (!root["sizes"].is_array() || root["sizes"].empty()) {
      fail("sizes", "expected non-empty array of integers");
    }
    config.sizes.clear();
    for (std::size_t i = 0; i < root["sizes"].size(); ++i) {
      const long long size = expect_int(root["sizes"][i], "sizes[" + std::to_string(i) + "]");
      if (size < 2) {
        fail("sizes[" + std::to_string(i) + "]", "puzzle size must be >= 2");
      }
      config.sizes.push_back(static_cast<int>(size));
    }
  }
  if (root.contains("seeds")) {
    config.seeds.clear();
    const auto& seeds = root["seeds"];
    if (seeds.is_array()) {
      for (std::size_t i = 0; i < seeds.size(); ++i) {
        const long long seed = expect_int(seeds[i], "seeds[" + std::to_string(i) + "]");
        if (seed < 0) {
          fail("seeds[" + std::to_string(i) + "]", "must be non-negative");
        }
        config.seeds.push_back(static_cast<std::uint64_t>(seed));
      }
    } else if (seeds.is_object()) {
      const long long start = seeds.contains("start") ? expect_int(seeds["start"], "seeds.start") : 0;
      if (!seeds.contains("count")) {
        fail("seeds.count", "required");
      }
      const long long count = expect_int(seeds["count"], "seeds.count");
      if (start < 0 || count < 1) {
        fail("seeds", "start must be >= 0 and count >= 1");
      }
      for (long long i = 0; i < count; ++i) {
        config.seeds.push_back(static_cast<std::uint64_t>(start + i));
      }
    } else {
      fail("seeds", "expected array or {start, count} object");
    }
    if (config.seeds.empty()) {
      fail("seeds", "expected at least one seed");
    }
  }
  if (root.contains("feedback_modes")) {
    if (!root["feedback_modes"].is_array() || root["feedback_modes"].empty()) {
      fail("feedback_modes", "expected non-empty array");
    }
    config.feedback_modes.clear();
    for (std::size_t i = 0; i < root["feedback_modes"].size(); ++i) {
      const std::string path = "feedback_modes[" + std::to_string(i) + "]";
      try {
        config.feedback_modes.push_back(parse_feedback_mode(expect_string(root["feedback_modes"][i], path)));
      } catch (const ConfigError& e) {
        fail(path, e.what());
      }
    }
  }
  if (root.contains("max_turn_multiplier")) {
    config.max_turn_multiplier =
        static_cast<int>(expect_int(root["max_turn_multiplier"], "max_turn_multiplier"));
    if (config.max_turn_multiplier < 1) {
      fail("max_turn_multiplier", "must be >= 1");
    }
  }
  if (root.contains("history_length")) {
    config.history_length = static_cast<int>(expect_int(root["history_length"], "history_length"));
    if (config.history_length < 0) {
      fail("history_length", "must be >= 0");
    }
  }
  if (!root.contains("output_dir")) {
    fail("output_dir", "required");
  }
  config.output_dir = expect_string(root["output_dir"], "output_dir");
  if (config.output_dir.empty()) {
    fail("output_dir", "must not be empty");
  }
  if (root.contains("concurrency")) {
    config.concurrency = static_cast<int>(expect_int(root["concurrency"], "concurrency"));
    if (config.concurrency < 1) {
      fail("concurrency", "must be >= 1");
    }
  }
  if (root.contains("shape_vocab")) {
    config.shape_vocab = expect_string_array(root["shape_vocab"], "shape_vocab");
  }
  if (root.contains("color_vocab")) {
    config.color_vocab = expect_string_array(root["color_vocab"], "color_vocab");
  }

  // The vocabularies must cover the largest requested size.
  for (int size : config.sizes) {
    PuzzleSpec spec;
    spec.size = size;
    spec.shape_vocab = config.shape_vocab;
    spec.color_vocab = config.color_vocab;
    try {
      validate_spec(spec);
    } catch (const ConfigError& e) {
      fail("sizes", e.what());
    }
  }
  return config;
}

inline RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigError("cannot open config file " + path.string());
  }
  nlohmann::json root = nlohmann::json::parse(in, nullptr, false);
  if (root.is_discarded()) {
    throw ConfigError("config file " + path.string() + " is not valid JSON");
  }
  return parse_run_config(root);
}

} // namespace asympuzl::cli
