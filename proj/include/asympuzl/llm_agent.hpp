#pragma once

#include <string>

#include "asympuzl/agent.hpp"
#include "asympuzl/llm_client.hpp"

namespace asympuzl {

// Agent backed by a chat-completion endpoint: renders the prompt, queries the
// model, and parses the trailing JSON payload. A parse failure is soft (no
// actions, empty message); transport failures propagate to the engine after
// the client's retries are exhausted.
class LlmAgent : public Agent {
public:
  explicit LlmAgent(llm::ModelConfig config) : config_(std::move(config)) {}

  std::string name() const override { return config_.name; }

  AgentOutput act(const Observation& obs) override {
    PromptPair prompt = build_prompt(obs);
    llm::ChatExchange exchange = llm::chat(config_, prompt.system_text, prompt.user_text);
    AgentOutput out = parse_agent_output(exchange.response_text);
    out.usage = exchange.usage;
    out.attempts = exchange.attempts;
    return out;
  }

  const llm::ModelConfig& config() const { return config_; }

private:
  llm::ModelConfig config_;
};

} // namespace asympuzl
