#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdlib>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <utility>

#include "httplib.h"
#include "json.hpp"

#include "asympuzl/agent.hpp"
#include "asympuzl/errors.hpp"

namespace asympuzl::llm {

// Caps the number of in-flight requests; extra callers block.
class ConcurrencyLimiter {
public:
  explicit ConcurrencyLimiter(int limit) : limit_(limit < 1 ? 1 : limit), available_(limit_) {}

  void acquire() {
    std::unique_lock lock(mutex_);
    cv_.wait(lock, [&] { return available_ > 0; });
    --available_;
  }

  void release() {
    {
      std::lock_guard lock(mutex_);
      ++available_;
    }
    cv_.notify_one();
  }

  int limit() const { return limit_; }

  class Guard {
  public:
    explicit Guard(ConcurrencyLimiter& limiter) : limiter_(limiter) { limiter_.acquire(); }
    ~Guard() { limiter_.release(); }
    Guard(const Guard&) = delete;
    Guard& operator=(const Guard&) = delete;

  private:
    ConcurrencyLimiter& limiter_;
  };

private:
  const int limit_;
  std::mutex mutex_;
  std::condition_variable cv_;
  int available_;
};

struct RetryPolicy {
  int max_attempts = 3;
  std::chrono::milliseconds initial_backoff{500};
  double backoff_multiplier = 2.0;
};

struct ModelConfig {
  std::string name;                // label used for grouping results
  std::string base_url;            // e.g. "http://127.0.0.1:8000/v1"
  std::string model;               // model identifier sent on the wire
  double temperature = 0.0;
  int max_output_tokens = 4096;
  std::chrono::seconds timeout{120};
  RetryPolicy retry;
  std::string api_key_env;         // empty: no Authorization header
  std::shared_ptr<ConcurrencyLimiter> limiter; // shared across calls; optional
};

struct ChatExchange {
  std::string response_text;
  std::optional<TokenUsage> usage;
  int attempts = 0;
  std::chrono::milliseconds latency{0};
};

namespace detail {

struct SplitUrl {
  std::string host; // scheme://host[:port]
  std::string path_prefix;
};

inline SplitUrl split_base_url(const std::string& base_url) {
  auto scheme_end = base_url.find("://");
  if (scheme_end == std::string::npos) {
    throw ConfigError("endpoint URL must include a scheme: " + base_url);
  }
  auto path_start = base_url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) {
    return SplitUrl{base_url, ""};
  }
  std::string prefix = base_url.substr(path_start);
  while (!prefix.empty() && prefix.back() == '/') {
    prefix.pop_back();
  }
  return SplitUrl{base_url.substr(0, path_start), prefix};
}

inline bool retryable_status(int status) { return status == 429 || status >= 500; }

} // namespace detail

inline nlohmann::json chat_request_body(const ModelConfig& config, const std::string& system_text,
                                        const std::string& user_text) {
  return nlohmann::json{{"model", config.model},
                        {"messages",
                         {{{"role", "system"}, {"content", system_text}},
                          {{"role", "user"}, {"content", user_text}}}},
                        {"temperature", config.temperature},
                        {"max_tokens", config.max_output_tokens}};
}

// One chat completion against an OpenAI-compatible endpoint. Retries
// connection failures, timeouts, 429 and 5xx with exponential backoff; other
// 4xx responses and malformed bodies fail immediately as protocol errors.
inline ChatExchange chat(const ModelConfig& config, const std::string& system_text,
                         const std::string& user_text) {
  if (config.temperature < 0) {
    throw ConfigError("temperature must be >= 0");
  }
  if (config.max_output_tokens <= 0) {
    throw ConfigError("max_output_tokens must be positive");
  }

  std::string api_key;
  if (!config.api_key_env.empty()) {
    const char* value = std::getenv(config.api_key_env.c_str());
    if (value == nullptr || *value == '\0') {
      throw ConfigError("environment variable " + config.api_key_env +
                        " is required for model " + config.name + " but not set");
    }
    api_key = value;
  }

  std::optional<ConcurrencyLimiter::Guard> guard;
  if (config.limiter) {
    guard.emplace(*config.limiter);
  }

  const auto url = detail::split_base_url(config.base_url);
  const std::string body = chat_request_body(config, system_text, user_text).dump();
  const std::string path = url.path_prefix + "/chat/completions";

  const auto start = std::chrono::steady_clock::now();
  auto backoff = config.retry.initial_backoff;
  std::string last_error;

  for (int attempt = 1; attempt <= config.retry.max_attempts; ++attempt) {
    httplib::Client client(url.host);
    client.set_connection_timeout(config.timeout.count(), 0);
    client.set_read_timeout(config.timeout.count(), 0);
    client.set_write_timeout(config.timeout.count(), 0);
    httplib::Headers headers;
    if (!api_key.empty()) {
      headers.emplace("Authorization", "Bearer " + api_key);
    }

    auto res = client.Post(path, headers, body, "application/json");
    if (!res) {
      last_error = "connection failure: " + httplib::to_string(res.error());
    } else if (res->status == 200) {
      nlohmann::json payload = nlohmann::json::parse(res->body, nullptr, false);
      if (payload.is_discarded() || !payload.contains("choices") || !payload["choices"].is_array() ||
          payload["choices"].empty() || !payload["choices"][0].contains("message") ||
          !payload["choices"][0]["message"].contains("content") ||
          !payload["choices"][0]["message"]["content"].is_string()) {
        throw ProtocolError("malformed chat completion response from " + config.base_url);
      }
      ChatExchange exchange;
      exchange.response_text = payload["choices"][0]["message"]["content"].get<std::string>();
      exchange.attempts = attempt;
      exchange.latency = std::chrono::duration_cast<std::chrono::milliseconds>(
          std::chrono::steady_clock::now() - start);
      if (payload.contains("usage") && payload["usage"].is_object()) {
        const auto& usage = payload["usage"];
        TokenUsage tokens;
        tokens.prompt_tokens = usage.value("prompt_tokens", 0);
        tokens.output_tokens = usage.value("completion_tokens", 0);
        exchange.usage = tokens;
      }
      return exchange;
    } else if (detail::retryable_status(res->status)) {
      last_error = "HTTP " + std::to_string(res->status);
    } else {
      throw ProtocolError("request rejected with HTTP " + std::to_string(res->status) + ": " +
                          res->body);
    }

    if (attempt < config.retry.max_attempts) {
      std::this_thread::sleep_for(backoff);
      backoff = std::chrono::milliseconds(
          static_cast<long long>(static_cast<double>(backoff.count()) * config.retry.backoff_multiplier));
    }
  }
  throw TransportError("chat completion failed after " + std::to_string(config.retry.max_attempts) +
                       " attempts (" + last_error + ")");
}

} // namespace asympuzl::llm
