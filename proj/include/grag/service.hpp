#pragma once

#include <map>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include "grag/embedding.hpp"
#include "grag/error.hpp"
#include "grag/graph.hpp"
#include "grag/llm_client.hpp"
#include "grag/metrics.hpp"
#include "grag/pcst.hpp"
#include "grag/retrieval.hpp"
#include "grag/textualize.hpp"

namespace grag {

struct ServiceConfig {
    std::string embedder = "hashing";  // "hashing" or "remote" (EMBED_* env vars)
    std::size_t dim = kDefaultDimension;
    EdgeTextMode edge_text = EdgeTextMode::action;
    std::string cache_dir;  // empty disables the embedding cache
    std::size_t default_k = 15;
    double edge_cost = 1.0;
    std::size_t exact_edge_limit = kExactFoldedEdgeLimit;
    ScoreBackend backend = ScoreBackend::parallel;
    PromptConfig prompt;
    std::string llm = "echo";  // "echo", "script" (llm_script file, any mock mode) or "openai" (LLM_* env vars)
    std::string llm_script;
    std::string llm_model;
    int max_tokens = 1024;
    std::string host = "127.0.0.1";
    int port = 8080;

    // Unknown keys are rejected so typos surface.
    static ServiceConfig from_json(std::string_view text);
    // File named by SERVICE_CONFIG, defaults when unset.
    static ServiceConfig from_env();
};

std::shared_ptr<Embedder> make_embedder(const ServiceConfig& cfg);
std::shared_ptr<LlmClient> make_llm_client(const ServiceConfig& cfg);

// A validated graph with its embeddings. Immutable; shared by reference.
struct LoadedGraph {
    std::shared_ptr<const StateActionGraph> graph;
    std::shared_ptr<const GraphEmbeddings> embeddings;
    std::string content_hash;
    GraphStats stats;
};

// graph_id -> loaded graph. Readers take a shared lock just long enough to
// copy the pointer; an upload swaps the pointer under an exclusive lock.
class GraphStore {
public:
    std::shared_ptr<const LoadedGraph> find(const std::string& graph_id) const;
    // Throws NotFoundError.
    std::shared_ptr<const LoadedGraph> get(const std::string& graph_id) const;
    void put(std::shared_ptr<const LoadedGraph> g);
    std::vector<std::string> ids() const;
    std::size_t size() const;

private:
    mutable std::shared_mutex mutex_;
    std::map<std::string, std::shared_ptr<const LoadedGraph>> graphs_;
};

// Error raised by a pipeline stage, with the timings recorded up to the failure.
class StageError : public Error {
public:
    StageError(const Error& cause, std::string stage, StageTimings timings)
        : Error(cause.error_class(), cause.what()), stage_(std::move(stage)), timings_(timings) {}

    const std::string& stage() const noexcept { return stage_; }
    const StageTimings& timings() const noexcept { return timings_; }

private:
    std::string stage_;
    StageTimings timings_;
};

// HTTP status for an error class raised at a stage.
int http_status_for(const std::string& error_class, const std::string& stage);

struct UploadResult {
    std::string graph_id;
    GraphStats stats;
    bool created = false;  // false when identical content was already loaded
};

struct RetrieveRequest {
    std::string graph_id;
    std::string question;
    std::optional<std::size_t> k;
    std::optional<NodeId> current_node;  // home node when absent
};

struct RetrieveOutcome {
    RetrievalResult retrieval;
    Subgraph subgraph;
    std::string subgraph_text;
    std::size_t k = 0;
    StageTimings timings;
};

struct LlmOptions {
    std::optional<std::string> model;
    std::optional<int> max_tokens;
    std::optional<double> temperature;
    bool bare = false;  // system prompt and question only
};

struct QueryRequest {
    RetrieveRequest retrieve;
    LlmOptions llm;
};

struct QueryOutcome {
    std::string answer;
    std::optional<RetrieveOutcome> retrieval;  // absent for bare queries
    PromptBundle prompt;
    CompletionResponse completion;
    StageTimings timings;
};

class Engine {
public:
    Engine(ServiceConfig cfg, std::shared_ptr<Embedder> embedder, std::shared_ptr<LlmClient> llm,
           QueryLog::Sink log_sink = {});

    UploadResult upload(std::string_view nodes_json, std::string_view adjacency_json);
    UploadResult add_graph(StateActionGraph g);

    std::vector<std::string> graph_ids() const { return store_.ids(); }
    std::shared_ptr<const LoadedGraph> graph(const std::string& graph_id) const { return store_.get(graph_id); }

    // Both throw StageError.
    RetrieveOutcome retrieve(const RetrieveRequest& req);
    QueryOutcome query(const QueryRequest& req);

    std::string metrics_text() const { return metrics_.render(store_.size()); }
    const Metrics& metrics() const { return metrics_; }
    const QueryLog& query_log() const { return log_; }
    const ServiceConfig& config() const { return cfg_; }
    // Number of upload calls that had to embed the graph.
    std::size_t embed_runs() const { return embed_runs_.load(); }

private:
    RetrieveOutcome run_retrieval(const RetrieveRequest& req, StageTimings& t, std::string& stage);

    ServiceConfig cfg_;
    std::shared_ptr<Embedder> embedder_;
    std::shared_ptr<LlmClient> llm_;
    std::unique_ptr<EmbeddingCache> cache_;
    GraphStore store_;
    Metrics metrics_;
    QueryLog log_;
    std::atomic<std::size_t> embed_runs_{0};
    std::mutex upload_mutex_;
};

// JSON views used by the HTTP layer and the CLI.
std::string subgraph_json(const Subgraph& sg, const StateActionGraph& g, int indent = -1);
std::string stats_json(const std::string& graph_id, const GraphStats& s, int indent = -1);
std::string retrieve_json(const RetrieveOutcome& r, const StateActionGraph& g, int indent = -1);
std::string query_json(const QueryOutcome& q, const StateActionGraph* g, int indent = -1);
std::string error_json(const std::string& error_class, const std::string& stage, const std::string& message,
                       const StageTimings* timings = nullptr);

// HTTP front end. Routes:
//   POST /v1/graphs  GET /v1/graphs  GET /v1/graphs/{id}/stats
//   POST /v1/retrieve  POST /v1/query  GET /metrics
class HttpServer {
public:
    explicit HttpServer(Engine& engine);
    ~HttpServer();
    HttpServer(const HttpServer&) = delete;
    HttpServer& operator=(const HttpServer&) = delete;

    // Returns the bound port (a free one when port == 0), or -1.
    int bind(const std::string& host, int port);
    // Blocks until stop().
    bool listen_after_bind();
    void stop();
    void wait_until_ready() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace grag
