#include "grag/llm_client.hpp"

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <httplib.h>
#include <json.hpp>

#include "grag/error.hpp"
#include "grag/url.hpp"

namespace grag {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string env_or(const char* name, std::string fallback) {
    const char* v = std::getenv(name);
    return v && *v ? std::string(v) : fallback;
}

}  // namespace

void CompletionRequest::validate() const {
    if (user.empty()) throw ValidationError("completion request needs a user message");
    if (max_tokens <= 0) throw ValidationError("max_tokens must be positive");
    if (!(temperature >= 0.0)) throw ValidationError("temperature must be >= 0");
}

CompletionRequest make_request(const PromptBundle& bundle, std::string model_id, int max_tokens, double temperature) {
    return CompletionRequest{std::move(model_id), bundle.system_prompt, bundle.user_message, max_tokens, temperature};
}

// --- mock ------------------------------------------------------------------------

MockLlmClient::MockLlmClient(MockMode mode, std::map<std::string, std::string> responses, std::string text)
    : mode_(mode), responses_(std::move(responses)), text_(std::move(text)) {}

std::shared_ptr<MockLlmClient> MockLlmClient::scripted(std::map<std::string, std::string> responses,
                                                       std::string fallback) {
    return std::shared_ptr<MockLlmClient>(new MockLlmClient(MockMode::script, std::move(responses), std::move(fallback)));
}

std::shared_ptr<MockLlmClient> MockLlmClient::echo() {
    return std::shared_ptr<MockLlmClient>(new MockLlmClient(MockMode::echo, {}, {}));
}

std::shared_ptr<MockLlmClient> MockLlmClient::fixed(std::string text) {
    return std::shared_ptr<MockLlmClient>(new MockLlmClient(MockMode::fixed, {}, std::move(text)));
}

std::shared_ptr<MockLlmClient> MockLlmClient::from_json(std::string_view text) {
    const auto doc = nlohmann::json::parse(text, nullptr, false);
    if (doc.is_discarded() || !doc.is_object()) throw ConfigError("mock LLM script is not a JSON object");
    try {
        if (!doc.contains("mode")) return scripted(doc.get<std::map<std::string, std::string>>());
        const auto mode = doc.at("mode").get<std::string>();
        if (mode == "echo") return echo();
        if (mode == "fixed") return fixed(doc.at("text").get<std::string>());
        if (mode == "script") {
            return scripted(doc.value("responses", std::map<std::string, std::string>{}),
                            doc.value("fallback", std::string("No scripted answer.")));
        }
        throw ConfigError("unknown mock LLM mode '" + mode + "'");
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("mock LLM script: ") + e.what());
    }
}

std::shared_ptr<MockLlmClient> MockLlmClient::from_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read mock LLM script " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return from_json(ss.str());
}

CompletionResponse MockLlmClient::complete(const CompletionRequest& req) {
    const auto start = Clock::now();
    req.validate();
    ++calls_;
    CompletionResponse resp;
    switch (mode_) {
        case MockMode::fixed:
            resp.text = text_;
            break;
        case MockMode::echo:
            resp.text = extract_graph_block(req.user).value_or(req.user);
            break;
        case MockMode::script: {
            const std::string* best = nullptr;
            std::size_t best_len = 0;
            for (const auto& [key, value] : responses_) {
                if (req.user.find(key) == std::string::npos) continue;
                if (!best || key.size() > best_len) {
                    best = &value;
                    best_len = key.size();
                }
            }
            resp.text = best ? *best : text_;
            break;
        }
    }
    resp.usage = TokenUsage{estimate_tokens(req.system) + estimate_tokens(req.user), estimate_tokens(resp.text)};
    resp.latency_s = seconds_since(start);
    return resp;
}

std::string MockLlmClient::name() const {
    switch (mode_) {
        case MockMode::script: return "mock:script";
        case MockMode::echo: return "mock:echo";
        case MockMode::fixed: return "mock:fixed";
    }
    return "mock";
}

// --- OpenAI-compatible ----------------------------------------------------------

OpenAiConfig OpenAiConfig::from_env() {
    OpenAiConfig cfg;
    cfg.url = env_or("LLM_URL", "");
    if (cfg.url.empty()) throw ConfigError("LLM_URL is not set");
    cfg.api_key = env_or("LLM_API_KEY", "");
    cfg.model = env_or("LLM_MODEL", "gpt-4o");
    try {
        cfg.timeout_ms = std::stoi(env_or("LLM_TIMEOUT_MS", "30000"));
    } catch (const std::exception&) {
        throw ConfigError("LLM_TIMEOUT_MS is not an integer");
    }
    return cfg;
}

OpenAiCompatibleClient::OpenAiCompatibleClient(OpenAiConfig cfg, Sleeper sleeper)
    : cfg_(std::move(cfg)), sleeper_(std::move(sleeper)), in_flight_(std::clamp(cfg_.max_in_flight, 1, kMaxInFlightLimit)) {
    const auto parts = url::split(cfg_.url);
    if (parts.scheme != "http" || !parts.has_authority || parts.authority.empty()) {
        throw ConfigError("LLM_URL must be an http:// URL, got '" + cfg_.url + "'");
    }
    if (cfg_.timeout_ms <= 0) throw ConfigError("LLM timeout must be positive");
    origin_ = parts.scheme + "://" + parts.authority;
    path_prefix_ = parts.path;
    while (!path_prefix_.empty() && path_prefix_.back() == '/') path_prefix_.pop_back();
}

CompletionResponse OpenAiCompatibleClient::complete(const CompletionRequest& req) {
    req.validate();
    in_flight_.acquire();
    struct Release {
        std::counting_semaphore<kMaxInFlightLimit>& s;
        ~Release() { s.release(); }
    } release{in_flight_};

    const auto start = Clock::now();
    auto resp = with_retry(cfg_.retry, [&] { return attempt(req); }, sleeper_);
    resp.latency_s = seconds_since(start);
    return resp;
}

CompletionResponse OpenAiCompatibleClient::attempt(const CompletionRequest& req) {
    httplib::Client client(origin_);
    const auto timeout = std::chrono::milliseconds(cfg_.timeout_ms);
    client.set_connection_timeout(timeout);
    client.set_read_timeout(timeout);
    client.set_write_timeout(timeout);

    nlohmann::json body = {
        {"model", req.model_id.empty() ? cfg_.model : req.model_id},
        {"messages", nlohmann::json::array({{{"role", "system"}, {"content", req.system}},
                                            {{"role", "user"}, {"content", req.user}}})},
        {"max_tokens", req.max_tokens},
        {"temperature", req.temperature},
    };
    httplib::Headers headers;
    if (!cfg_.api_key.empty()) headers.emplace("Authorization", "Bearer " + cfg_.api_key);

    auto res = client.Post(path_prefix_ + "/chat/completions", headers, body.dump(), "application/json");
    if (!res) throw TransportError("LLM request failed: " + httplib::to_string(res.error()));
    if (res->status == 401 || res->status == 403) {
        throw ConfigError("LLM endpoint rejected the credentials (HTTP " + std::to_string(res->status) + ")");
    }
    if (res->status == 429) {
        int retry_after_ms = 0;
        if (res->has_header("Retry-After")) {
            try {
                retry_after_ms = static_cast<int>(std::stod(res->get_header_value("Retry-After")) * 1000.0);
            } catch (const std::exception&) {
                retry_after_ms = 0;
            }
        }
        throw RateLimitError("LLM endpoint rate limited the request", retry_after_ms);
    }
    if (res->status >= 500) throw TransportError("LLM endpoint returned HTTP " + std::to_string(res->status));
    if (res->status != 200) {
        throw Error("llm_rejected", "LLM endpoint returned HTTP " + std::to_string(res->status) + ": " + res->body);
    }

    const auto doc = nlohmann::json::parse(res->body, nullptr, false);
    CompletionResponse out;
    try {
        out.text = doc.at("choices").at(0).at("message").at("content").get<std::string>();
        if (doc.contains("usage") && doc["usage"].is_object()) {
            out.usage = TokenUsage{doc["usage"].value("prompt_tokens", 0), doc["usage"].value("completion_tokens", 0)};
        }
    } catch (const nlohmann::json::exception&) {
        throw Error("llm_bad_response", "LLM response lacks choices[0].message.content");
    }
    return out;
}

}  // namespace grag
