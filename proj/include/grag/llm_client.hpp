#pragma once

#include <atomic>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <semaphore>
#include <string>

#include "grag/retry.hpp"
#include "grag/textualize.hpp"

namespace grag {

struct CompletionRequest {
    std::string model_id;
    std::string system;
    std::string user;
    int max_tokens = 1024;
    double temperature = 0.0;

    // Throws ValidationError: user must be non-empty, max_tokens > 0, temperature >= 0.
    void validate() const;
};

struct TokenUsage {
    int prompt_tokens = 0;
    int completion_tokens = 0;
};

struct CompletionResponse {
    std::string text;
    double latency_s = 0.0;
    std::optional<TokenUsage> usage;
};

// Splits a bundle into roles: system prompt in the system role, the rest in the user role.
CompletionRequest make_request(const PromptBundle& bundle, std::string model_id, int max_tokens = 1024,
                               double temperature = 0.0);

class LlmClient {
public:
    virtual ~LlmClient() = default;
    // Safe to call concurrently.
    virtual CompletionResponse complete(const CompletionRequest& req) = 0;
    virtual std::string name() const = 0;
};

enum class MockMode { script, echo, fixed };

// Deterministic stand-in for a chat model.
//   script: the response of the longest key found in the user message
//           (ties by key order), else the fallback text
//   echo:   the graph block of the user message, or the whole message without fences
//   fixed:  always the same text
class MockLlmClient : public LlmClient {
public:
    static std::shared_ptr<MockLlmClient> scripted(std::map<std::string, std::string> responses,
                                                   std::string fallback = "No scripted answer.");
    static std::shared_ptr<MockLlmClient> echo();
    static std::shared_ptr<MockLlmClient> fixed(std::string text);

    // Either {"mode": "script"|"echo"|"fixed", "responses": {..}, "fallback": .., "text": ..}
    // or a bare {"substring": "response", ..} object read as a script.
    static std::shared_ptr<MockLlmClient> from_json(std::string_view text);
    static std::shared_ptr<MockLlmClient> from_file(const std::filesystem::path& path);

    CompletionResponse complete(const CompletionRequest& req) override;
    std::string name() const override;

    MockMode mode() const { return mode_; }
    std::size_t calls() const { return calls_.load(); }

private:
    MockLlmClient(MockMode mode, std::map<std::string, std::string> responses, std::string text);

    MockMode mode_;
    std::map<std::string, std::string> responses_;
    std::string text_;
    std::atomic<std::size_t> calls_{0};
};

struct OpenAiConfig {
    std::string url;  // base URL; requests go to {url}/chat/completions
    std::string api_key;
    std::string model;
    int timeout_ms = 30000;
    int max_in_flight = 8;
    RetryPolicy retry;

    // LLM_URL, LLM_API_KEY, LLM_MODEL, LLM_TIMEOUT_MS. Throws ConfigError without LLM_URL.
    static OpenAiConfig from_env();
};

inline constexpr int kMaxInFlightLimit = 64;

// Generic OpenAI-compatible chat completion client over plain HTTP.
//   401/403           -> ConfigError, not retried
//   429               -> RateLimitError, retried after max(backoff, Retry-After)
//   5xx, timeouts     -> TransportError, retried
//   other statuses    -> Error("llm_rejected"), not retried
class OpenAiCompatibleClient : public LlmClient {
public:
    explicit OpenAiCompatibleClient(OpenAiConfig cfg, Sleeper sleeper = sleep_for);

    CompletionResponse complete(const CompletionRequest& req) override;
    std::string name() const override { return "openai-compatible:" + cfg_.model; }

    const OpenAiConfig& config() const { return cfg_; }

private:
    CompletionResponse attempt(const CompletionRequest& req);

    OpenAiConfig cfg_;
    Sleeper sleeper_;
    std::string origin_;
    std::string path_prefix_;
    std::counting_semaphore<kMaxInFlightLimit> in_flight_;
};

}  // namespace grag
