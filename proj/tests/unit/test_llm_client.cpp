#include <doctest.h>

#include <atomic>
#include <cstdlib>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "grag/error.hpp"
#include "grag/llm_client.hpp"

using namespace grag;

namespace {

const std::string kData = GRAG_TESTDATA_DIR;

CompletionRequest ask(const std::string& question) { return make_request(build_prompt("", question), "m"); }

// Minimal chat-completions endpoint. `statuses` are served in order, then 200.
struct FakeChatServer {
    httplib::Server server;
    std::thread thread;
    int port = -1;
    std::atomic<int> calls{0};
    std::atomic<int> concurrent{0};
    std::atomic<int> peak{0};
    std::vector<int> statuses;
    std::string retry_after;
    std::string body_override;
    int delay_ms = 0;
    nlohmann::json last_request;
    std::string last_auth;
    std::mutex mutex;

    FakeChatServer() {
        server.new_task_queue = [] { return new httplib::ThreadPool(16); };
        server.Post("/v1/chat/completions", [this](const httplib::Request& req, httplib::Response& res) {
            const int n = calls++;
            const int now = ++concurrent;
            for (int p = peak; now > p && !peak.compare_exchange_weak(p, now);) {
            }
            if (delay_ms) std::this_thread::sleep_for(std::chrono::milliseconds(delay_ms));
            --concurrent;
            {
                std::lock_guard lock(mutex);
                last_request = nlohmann::json::parse(req.body);
                last_auth = req.get_header_value("Authorization");
            }
            if (n < static_cast<int>(statuses.size())) {
                res.status = statuses[n];
                if (!retry_after.empty()) res.set_header("Retry-After", retry_after);
                return;
            }
            if (!body_override.empty()) {
                res.set_content(body_override, "application/json");
                return;
            }
            nlohmann::json out = {{"choices", {{{"message", {{"role", "assistant"}, {"content", "Open the Leads Menu."}}}}}},
                                  {"usage", {{"prompt_tokens", 12}, {"completion_tokens", 5}}}};
            res.set_content(out.dump(), "application/json");
        });
        port = server.bind_to_any_port("127.0.0.1");
        thread = std::thread([this] { server.listen_after_bind(); });
        server.wait_until_ready();
    }
    ~FakeChatServer() {
        server.stop();
        thread.join();
    }
    OpenAiConfig config() const {
        OpenAiConfig cfg;
        cfg.url = "http://127.0.0.1:" + std::to_string(port) + "/v1";
        cfg.api_key = "sk-test";
        cfg.model = "test-model";
        cfg.timeout_ms = 2000;
        return cfg;
    }
};

}  // namespace

TEST_CASE("scripted mock returns the canned answer quickly") {
    const auto mock = MockLlmClient::from_file(kData + "/mock/lead_script.json");
    CHECK(mock->mode() == MockMode::script);
    const auto r = mock->complete(ask("How to create a lead?"));
    CHECK(r.text.starts_with("1. Open the Dashboard."));
    CHECK(r.latency_s < 0.01);
    CHECK(r.latency_s >= 0.0);
    // The shorter key matches when the longer one does not.
    CHECK(mock->complete(ask("Where are my lead records?")).text == "Leads are managed from the Leads Menu.");
    CHECK(mock->complete(ask("Print an invoice")).text == "I cannot find this in the application.");
    CHECK(mock->calls() == 3);
}

TEST_CASE("script ties go to the first key in order") {
    const auto mock = MockLlmClient::scripted({{"bbb", "B"}, {"aaa", "A"}}, "none");
    CHECK(mock->complete(ask("aaa bbb")).text == "A");
}

TEST_CASE("bare object is read as a script") {
    const auto mock = MockLlmClient::from_json(R"({"invoice": "Use Billing."})");
    CHECK(mock->mode() == MockMode::script);
    CHECK(mock->complete(ask("new invoice")).text == "Use Billing.");
}

TEST_CASE("echo mock returns the graph block verbatim") {
    const auto mock = MockLlmClient::from_file(kData + "/mock/echo.json");
    const std::string block = "node_id,node_name\n0,Home\n\nnode_src,node_tgt,action,type\n";
    const auto bundle = build_prompt(block, "Where am I?");
    CHECK(mock->complete(make_request(bundle, "m")).text == block);
    const auto bare = build_bare_prompt("Where am I?");
    CHECK(mock->complete(make_request(bare, "m")).text == "User question: Where am I?");
}

TEST_CASE("fixed mock and bad scripts") {
    CHECK(MockLlmClient::from_json(R"({"mode": "fixed", "text": "ok"})")->complete(ask("x")).text == "ok");
    CHECK_THROWS_AS(MockLlmClient::from_json("[1]"), ConfigError);
    CHECK_THROWS_AS(MockLlmClient::from_json(R"({"mode": "psychic"})"), ConfigError);
    CHECK_THROWS_AS(MockLlmClient::from_file("/nonexistent/mock.json"), ConfigError);
}

TEST_CASE("mock is deterministic") {
    const auto mock = MockLlmClient::from_file(kData + "/mock/lead_script.json");
    const auto req = ask("How to create a lead?");
    CHECK(mock->complete(req).text == mock->complete(req).text);
}

TEST_CASE("request roles partition the prompt bytes") {
    const auto bundle = build_prompt("node_id,node_name\n0,Home\n\nnode_src,node_tgt,action,type\n", "Q?");
    const auto req = make_request(bundle, "gpt", 256, 0.0);
    CHECK(req.system == bundle.system_prompt);
    CHECK(req.user == bundle.user_message);
    CHECK(req.system + std::string(kSectionSeparator) + req.user == bundle.full_prompt);
    CHECK(req.max_tokens == 256);
}

TEST_CASE("request validation") {
    CompletionRequest r{"m", "sys", "", 10, 0.0};
    CHECK_THROWS_AS(r.validate(), ValidationError);
    r.user = "u";
    r.max_tokens = 0;
    CHECK_THROWS_AS(r.validate(), ValidationError);
    r.max_tokens = 1;
    r.temperature = -0.1;
    CHECK_THROWS_AS(r.validate(), ValidationError);
    CHECK_THROWS_AS(MockLlmClient::echo()->complete(CompletionRequest{}), ValidationError);
}

TEST_CASE("openai client: success path and wire format") {
    FakeChatServer fake;
    OpenAiCompatibleClient client(fake.config(), [](auto) {});
    const auto bundle = build_prompt("", "How to create a lead?");
    const auto r = client.complete(make_request(bundle, "", 300, 0.0));
    CHECK(r.text == "Open the Leads Menu.");
    REQUIRE(r.usage);
    CHECK(r.usage->prompt_tokens == 12);
    CHECK(fake.last_auth == "Bearer sk-test");
    CHECK(fake.last_request["model"] == "test-model");
    CHECK(fake.last_request["max_tokens"] == 300);
    CHECK(fake.last_request["temperature"] == 0.0);
    CHECK(fake.last_request["messages"][0]["role"] == "system");
    CHECK(fake.last_request["messages"][0]["content"] == bundle.system_prompt);
    CHECK(fake.last_request["messages"][1]["content"] == bundle.user_message);
    CHECK(r.latency_s >= 0.0);
}

TEST_CASE("openai client: auth failure is terminal") {
    FakeChatServer fake;
    fake.statuses = {401};
    OpenAiCompatibleClient client(fake.config(), [](auto) {});
    CHECK_THROWS_AS(client.complete(ask("q")), ConfigError);
    CHECK(fake.calls == 1);
}

TEST_CASE("openai client: rate limit honours Retry-After") {
    FakeChatServer fake;
    fake.statuses = {429, 429};
    fake.retry_after = "2";
    std::vector<long long> sleeps;
    OpenAiCompatibleClient client(fake.config(), [&](std::chrono::milliseconds d) { sleeps.push_back(d.count()); });
    CHECK(client.complete(ask("q")).text == "Open the Leads Menu.");
    CHECK(sleeps == std::vector<long long>{2000, 2000});
}

TEST_CASE("openai client: server errors retry then fail") {
    FakeChatServer fake;
    fake.statuses = {503, 502, 500, 500, 500};
    OpenAiCompatibleClient client(fake.config(), [](auto) {});
    try {
        client.complete(ask("q"));
        FAIL("expected an error");
    } catch (const TransportError& e) {
        CHECK(e.error_class() == "transport_error");
    }
    CHECK(fake.calls == 4);
}

TEST_CASE("openai client: timeout is retryable") {
    FakeChatServer fake;
    fake.delay_ms = 400;
    auto cfg = fake.config();
    cfg.timeout_ms = 100;
    cfg.retry.max_retries = 1;
    OpenAiCompatibleClient client(cfg, [](auto) {});
    CHECK_THROWS_AS(client.complete(ask("q")), TransportError);
    CHECK(fake.calls == 2);
}

TEST_CASE("openai client: other statuses and bad bodies") {
    FakeChatServer fake;
    fake.statuses = {400};
    OpenAiCompatibleClient client(fake.config(), [](auto) {});
    try {
        client.complete(ask("q"));
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.error_class() == "llm_rejected");
    }
    fake.body_override = R"({"choices": []})";
    try {
        client.complete(ask("q"));
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.error_class() == "llm_bad_response");
    }
}

TEST_CASE("openai client: in-flight limit") {
    FakeChatServer fake;
    fake.delay_ms = 50;
    auto cfg = fake.config();
    cfg.max_in_flight = 2;
    OpenAiCompatibleClient client(cfg, [](auto) {});
    std::vector<std::thread> threads;
    for (int i = 0; i < 6; ++i) threads.emplace_back([&] { client.complete(ask("q")); });
    for (auto& t : threads) t.join();
    CHECK(fake.calls == 6);
    CHECK(fake.peak <= 2);
}

TEST_CASE("openai client configuration") {
    OpenAiConfig cfg;
    cfg.url = "https://api.example.com/v1";
    CHECK_THROWS_AS(OpenAiCompatibleClient{cfg}, ConfigError);
    cfg.url = "not a url";
    CHECK_THROWS_AS(OpenAiCompatibleClient{cfg}, ConfigError);

    ::unsetenv("LLM_URL");
    CHECK_THROWS_AS(OpenAiConfig::from_env(), ConfigError);
    ::setenv("LLM_URL", "http://127.0.0.1:9", 1);
    ::unsetenv("LLM_MODEL");
    ::setenv("LLM_TIMEOUT_MS", "1500", 1);
    const auto env = OpenAiConfig::from_env();
    CHECK(env.model == "gpt-4o");
    CHECK(env.timeout_ms == 1500);
    CHECK(env.max_in_flight == 8);
    ::unsetenv("LLM_URL");
    ::unsetenv("LLM_TIMEOUT_MS");
}
