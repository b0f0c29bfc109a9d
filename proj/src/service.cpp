#include "grag/service.hpp"

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "grag/log.hpp"

namespace grag {

namespace {

using Clock = std::chrono::steady_clock;
using ojson = nlohmann::ordered_json;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

bool is_blank(std::string_view s) {
    return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c) != 0; });
}

std::string fnv1a_hex(std::string_view a, std::string_view b) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    const auto mix = [&](std::string_view s) {
        for (unsigned char c : s) {
            h ^= c;
            h *= 0x100000001b3ULL;
        }
    };
    mix(a);
    mix(std::string_view("\0", 1));
    mix(b);
    std::ostringstream out;
    out << std::hex << h;
    return out.str();
}

ojson timings_json(const StageTimings& t) {
    return ojson{{"embed_query", t.embed_query}, {"retrieve", t.retrieve}, {"pcst", t.pcst},
                 {"llm", t.llm},                 {"total", t.total}};
}

std::string dump(const ojson& j, int indent) {
    return j.dump(indent, ' ', false, nlohmann::json::error_handler_t::replace);
}

}  // namespace

// --- configuration ---------------------------------------------------------------

ServiceConfig ServiceConfig::from_json(std::string_view text) {
    const auto doc = nlohmann::json::parse(text, nullptr, false);
    if (doc.is_discarded() || !doc.is_object()) throw ConfigError("service config is not a JSON object");
    static const std::set<std::string> known{"embedder",   "dim",         "edge_text",    "cache_dir", "k",
                                             "edge_cost",  "exact_edge_limit", "backend", "system_prompt",
                                             "token_budget", "llm",       "llm_script",   "llm_model", "max_tokens",
                                             "host",       "port"};
    for (const auto& [key, _] : doc.items()) {
        if (!known.contains(key)) throw ConfigError("unknown service config key '" + key + "'");
    }
    ServiceConfig cfg;
    try {
        cfg.embedder = doc.value("embedder", cfg.embedder);
        cfg.dim = doc.value("dim", cfg.dim);
        const auto edge_text = doc.value("edge_text", std::string("action"));
        if (edge_text == "action") {
            cfg.edge_text = EdgeTextMode::action;
        } else if (edge_text == "action_and_kind") {
            cfg.edge_text = EdgeTextMode::action_and_kind;
        } else {
            throw ConfigError("edge_text must be 'action' or 'action_and_kind'");
        }
        cfg.cache_dir = doc.value("cache_dir", cfg.cache_dir);
        cfg.default_k = doc.value("k", cfg.default_k);
        cfg.edge_cost = doc.value("edge_cost", cfg.edge_cost);
        cfg.exact_edge_limit = doc.value("exact_edge_limit", cfg.exact_edge_limit);
        const auto backend = doc.value("backend", std::string("parallel"));
        if (backend != "serial" && backend != "parallel") throw ConfigError("backend must be 'serial' or 'parallel'");
        cfg.backend = backend == "serial" ? ScoreBackend::serial : ScoreBackend::parallel;
        cfg.prompt.system_prompt = doc.value("system_prompt", cfg.prompt.system_prompt);
        cfg.prompt.token_budget = doc.value("token_budget", cfg.prompt.token_budget);
        cfg.llm = doc.value("llm", cfg.llm);
        cfg.llm_script = doc.value("llm_script", cfg.llm_script);
        cfg.llm_model = doc.value("llm_model", cfg.llm_model);
        cfg.max_tokens = doc.value("max_tokens", cfg.max_tokens);
        cfg.host = doc.value("host", cfg.host);
        cfg.port = doc.value("port", cfg.port);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("service config: ") + e.what());
    }
    if (cfg.embedder != "hashing" && cfg.embedder != "remote") throw ConfigError("embedder must be 'hashing' or 'remote'");
    if (cfg.llm != "echo" && cfg.llm != "script" && cfg.llm != "openai") {
        throw ConfigError("llm must be 'echo', 'script' or 'openai'");
    }
    if (cfg.llm == "script" && cfg.llm_script.empty()) throw ConfigError("llm 'script' needs llm_script");
    if (cfg.default_k < 1) throw ConfigError("k must be at least 1");
    if (!(cfg.edge_cost > 0.0)) throw ConfigError("edge_cost must be positive");
    if (cfg.dim == 0) throw ConfigError("dim must be positive");
    return cfg;
}

ServiceConfig ServiceConfig::from_env() {
    const char* path = std::getenv("SERVICE_CONFIG");
    if (!path || !*path) return {};
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError(std::string("cannot read SERVICE_CONFIG file ") + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return from_json(ss.str());
}

std::shared_ptr<Embedder> make_embedder(const ServiceConfig& cfg) {
    if (cfg.embedder == "remote") {
        auto rc = RemoteEmbedderConfig::from_env();
        rc.dim = cfg.dim;
        return std::make_shared<RemoteEmbedder>(rc);
    }
    return std::make_shared<HashingEmbedder>(cfg.dim);
}

std::shared_ptr<LlmClient> make_llm_client(const ServiceConfig& cfg) {
    if (cfg.llm == "openai") return std::make_shared<OpenAiCompatibleClient>(OpenAiConfig::from_env());
    if (cfg.llm == "script") return MockLlmClient::from_file(cfg.llm_script);
    return MockLlmClient::echo();
}

// --- store -------------------------------------------------------------------------

std::shared_ptr<const LoadedGraph> GraphStore::find(const std::string& graph_id) const {
    std::shared_lock lock(mutex_);
    auto it = graphs_.find(graph_id);
    return it == graphs_.end() ? nullptr : it->second;
}

std::shared_ptr<const LoadedGraph> GraphStore::get(const std::string& graph_id) const {
    auto g = find(graph_id);
    if (!g) throw NotFoundError("unknown graph_id '" + graph_id + "'");
    return g;
}

void GraphStore::put(std::shared_ptr<const LoadedGraph> g) {
    std::unique_lock lock(mutex_);
    graphs_[g->graph->graph_id()] = std::move(g);
}

std::vector<std::string> GraphStore::ids() const {
    std::shared_lock lock(mutex_);
    std::vector<std::string> out;
    for (const auto& [id, _] : graphs_) out.push_back(id);
    return out;
}

std::size_t GraphStore::size() const {
    std::shared_lock lock(mutex_);
    return graphs_.size();
}

int http_status_for(const std::string& error_class, const std::string& stage) {
    static const std::set<std::string> client{"validation_error", "parse_error",     "integrity_error",
                                              "duplicate_error",  "prompt_too_large"};
    if (error_class == "not_found") return 404;
    if (error_class == "bad_request") return 400;
    if (client.contains(error_class)) return 422;
    if (stage == "llm") return 502;
    return 500;
}

// --- engine -------------------------------------------------------------------------

Engine::Engine(ServiceConfig cfg, std::shared_ptr<Embedder> embedder, std::shared_ptr<LlmClient> llm,
               QueryLog::Sink log_sink)
    : cfg_(std::move(cfg)), embedder_(std::move(embedder)), llm_(std::move(llm)), log_(std::move(log_sink)) {
    if (!embedder_) throw ConfigError("engine needs an embedder");
    if (!llm_) throw ConfigError("engine needs an LLM client");
    if (!cfg_.cache_dir.empty()) cache_ = std::make_unique<EmbeddingCache>(cfg_.cache_dir);
}

UploadResult Engine::upload(std::string_view nodes_json, std::string_view adjacency_json) {
    try {
        return add_graph(load_graph_text(nodes_json, adjacency_json));
    } catch (const StageError&) {
        throw;
    } catch (const Error& e) {
        metrics_.count_error(e.error_class());
        throw StageError(e, "validate", {});
    }
}

UploadResult Engine::add_graph(StateActionGraph g) {
    const auto files = save_graph(g);
    const auto hash = fnv1a_hex(files.nodes_json, files.adjacency_json);
    std::lock_guard lock(upload_mutex_);
    if (auto existing = store_.find(g.graph_id()); existing && existing->content_hash == hash) {
        return {g.graph_id(), existing->stats, false};
    }
    auto loaded = std::make_shared<LoadedGraph>();
    loaded->graph = std::make_shared<const StateActionGraph>(std::move(g));
    try {
        loaded->embeddings = std::make_shared<const GraphEmbeddings>(
            embed_graph(*embedder_, *loaded->graph, EmbedOptions{cfg_.edge_text, cache_.get()}));
    } catch (const Error& e) {
        metrics_.count_error(e.error_class());
        throw StageError(e, "embed_graph", {});
    }
    ++embed_runs_;
    loaded->content_hash = hash;
    loaded->stats = graph_stats(*loaded->graph);
    const auto id = loaded->graph->graph_id();
    const auto stats = loaded->stats;
    store_.put(std::move(loaded));
    log::info("loaded graph '" + id + "' (" + std::to_string(stats.node_count) + " nodes, " +
              std::to_string(stats.edge_count) + " edges)");
    return {id, stats, true};
}

RetrieveOutcome Engine::run_retrieval(const RetrieveRequest& req, StageTimings& t, std::string& stage) {
    stage = "validate";
    if (is_blank(req.question)) throw ValidationError("empty question");
    stage = "lookup";
    const auto lg = store_.get(req.graph_id);
    const auto& g = *lg->graph;
    stage = "validate";
    const auto k = req.k.value_or(cfg_.default_k);
    if (k < 1) throw ValidationError("k must be at least 1");
    const auto current = req.current_node.value_or(g.home_node());
    if (!g.contains(current)) throw ValidationError("unknown current_node " + std::to_string(current));

    RetrieveOutcome out;
    out.k = k;
    stage = "embed_query";
    auto t0 = Clock::now();
    const auto zq = embed_text(*embedder_, req.question);
    t.embed_query = seconds_since(t0);

    stage = "retrieve";
    t0 = Clock::now();
    out.retrieval = grag::retrieve(*lg->embeddings, zq, k, current, cfg_.backend);
    out.retrieval.query = req.question;
    t.retrieve = seconds_since(t0);

    stage = "pcst";
    t0 = Clock::now();
    out.subgraph = extract_subgraph(g, out.retrieval, PcstConfig{cfg_.edge_cost, cfg_.exact_edge_limit});
    t.pcst = seconds_since(t0);

    stage = "textualize";
    out.subgraph_text = textualize(out.subgraph, g);
    return out;
}

RetrieveOutcome Engine::retrieve(const RetrieveRequest& req) {
    const auto start = Clock::now();
    StageTimings t;
    std::string stage;
    metrics_.count_retrieve();
    try {
        auto out = run_retrieval(req, t, stage);
        t.total = seconds_since(start);
        out.timings = t;
        metrics_.observe("embed_query", t.embed_query);
        metrics_.observe("retrieve", t.retrieve);
        metrics_.observe("pcst", t.pcst);
        return out;
    } catch (const Error& e) {
        t.total = seconds_since(start);
        metrics_.count_error(e.error_class());
        throw StageError(e, stage, t);
    }
}

QueryOutcome Engine::query(const QueryRequest& req) {
    const auto start = Clock::now();
    StageTimings t;
    std::string stage = "validate";
    metrics_.count_query();

    QueryLogEntry entry;
    entry.timestamp = utc_timestamp();
    entry.graph_id = req.retrieve.graph_id;
    entry.question = req.retrieve.question;
    entry.bare = req.llm.bare;

    const auto finish_log = [&](bool ok, const std::string& error_class) {
        t.total = seconds_since(start);
        entry.timings = t;
        entry.ok = ok;
        entry.error_class = error_class;
        log_.append(entry);
    };

    try {
        QueryOutcome out;
        if (req.llm.bare) {
            if (is_blank(req.retrieve.question)) throw ValidationError("empty question");
            stage = "lookup";
            store_.get(req.retrieve.graph_id);
            stage = "prompt";
            out.prompt = build_bare_prompt(req.retrieve.question, cfg_.prompt);
        } else {
            out.retrieval = run_retrieval(req.retrieve, t, stage);
            const auto& r = *out.retrieval;
            entry.k = r.k;
            entry.pinned_node = r.retrieval.pinned_node;
            entry.subgraph_nodes = r.subgraph.nodes.size();
            entry.subgraph_edges = r.subgraph.edges.size();
            if (!r.retrieval.top_nodes.empty()) {
                double sum = 0.0;
                entry.similarity_max = r.retrieval.top_nodes.front().similarity;
                for (const auto& n : r.retrieval.top_nodes) sum += n.similarity;
                entry.similarity_mean = sum / static_cast<double>(r.retrieval.top_nodes.size());
            }
            stage = "prompt";
            out.prompt = build_prompt(r.subgraph_text, req.retrieve.question, cfg_.prompt);
        }

        stage = "validate";
        auto request = make_request(out.prompt, req.llm.model.value_or(cfg_.llm_model),
                                    req.llm.max_tokens.value_or(cfg_.max_tokens), req.llm.temperature.value_or(0.0));
        request.validate();

        stage = "llm";
        const auto t0 = Clock::now();
        out.completion = llm_->complete(request);
        t.llm = seconds_since(t0);
        out.answer = out.completion.text;

        finish_log(true, "");
        out.timings = t;
        if (out.retrieval) out.retrieval->timings = t;
        if (!req.llm.bare) {
            metrics_.observe("embed_query", t.embed_query);
            metrics_.observe("retrieve", t.retrieve);
            metrics_.observe("pcst", t.pcst);
        }
        metrics_.observe("llm", t.llm);
        metrics_.observe("total", t.total);
        return out;
    } catch (const Error& e) {
        finish_log(false, e.error_class());
        metrics_.count_error(e.error_class());
        throw StageError(e, stage, t);
    } catch (const std::exception& e) {
        finish_log(false, "internal_error");
        metrics_.count_error("internal_error");
        throw StageError(Error("internal_error", e.what()), stage, t);
    }
}

// --- JSON views ----------------------------------------------------------------------

namespace {

ojson subgraph_object(const Subgraph& sg, const StateActionGraph& g) {
    ojson nodes = ojson::array();
    for (auto id : sg.nodes) nodes.push_back({{"node_id", id}, {"name", g.node(id).name}});
    ojson edges = ojson::array();
    for (auto e : sg.edges) {
        const auto& edge = g.edges()[e];
        ojson item{{"index", e},
                   {"src", edge.src},
                   {"tgt", edge.tgt},
                   {"action", edge.action},
                   {"kind", std::string(to_string(edge.kind))}};
        if (edge.detail) item["detail"] = *edge.detail;
        edges.push_back(std::move(item));
    }
    return ojson{{"nodes", std::move(nodes)},
                 {"edges", std::move(edges)},
                 {"objective", sg.objective},
                 {"connected", sg.connected},
                 {"solver", sg.exact ? "exact" : "approx"}};
}

ojson stats_object(const GraphStats& s) {
    return ojson{{"node_count", s.node_count},
                 {"edge_count", s.edge_count},
                 {"reachable_fraction", s.reachable_fraction},
                 {"max_out_degree", s.max_out_degree}};
}

ojson retrieve_object(const RetrieveOutcome& r, const StateActionGraph& g) {
    ojson top_nodes = ojson::array();
    for (const auto& n : r.retrieval.top_nodes) {
        top_nodes.push_back({{"node_id", n.node_id},
                             {"name", g.node(n.node_id).name},
                             {"similarity", n.similarity},
                             {"prize", r.retrieval.node_prizes.at(n.node_id)}});
    }
    ojson top_edges = ojson::array();
    for (const auto& e : r.retrieval.top_edges) {
        const auto& edge = g.edges()[e.edge_index];
        top_edges.push_back({{"index", e.edge_index},
                             {"src", edge.src},
                             {"tgt", edge.tgt},
                             {"action", edge.action},
                             {"similarity", e.similarity},
                             {"prize", r.retrieval.edge_prizes.at(e.edge_index)}});
    }
    return ojson{{"graph_id", g.graph_id()},
                 {"question", r.retrieval.query},
                 {"k", r.k},
                 {"current_node", r.retrieval.pinned_node ? ojson(*r.retrieval.pinned_node) : ojson(nullptr)},
                 {"top_nodes", std::move(top_nodes)},
                 {"top_edges", std::move(top_edges)},
                 {"subgraph", subgraph_object(r.subgraph, g)},
                 {"subgraph_text", r.subgraph_text},
                 {"timings", timings_json(r.timings)}};
}

}  // namespace

std::string subgraph_json(const Subgraph& sg, const StateActionGraph& g, int indent) {
    return dump(subgraph_object(sg, g), indent);
}

std::string stats_json(const std::string& graph_id, const GraphStats& s, int indent) {
    return dump(ojson{{"graph_id", graph_id}, {"stats", stats_object(s)}}, indent);
}

std::string retrieve_json(const RetrieveOutcome& r, const StateActionGraph& g, int indent) {
    return dump(retrieve_object(r, g), indent);
}

std::string query_json(const QueryOutcome& q, const StateActionGraph* g, int indent) {
    ojson j;
    j["answer"] = q.answer;
    if (q.retrieval && g) {
        j["subgraph"] = subgraph_object(q.retrieval->subgraph, *g);
        j["subgraph_text"] = q.retrieval->subgraph_text;
        j["current_node"] = q.retrieval->retrieval.pinned_node ? ojson(*q.retrieval->retrieval.pinned_node)
                                                                : ojson(nullptr);
        j["k"] = q.retrieval->k;
    } else {
        j["subgraph"] = nullptr;
        j["subgraph_text"] = nullptr;
    }
    j["prompt"] = q.prompt.full_prompt;
    j["messages"] = {{"system", q.prompt.system_prompt}, {"user", q.prompt.user_message}};
    j["token_estimate"] = q.prompt.token_estimate;
    j["bare"] = q.prompt.bare;
    j["llm"] = {{"latency", q.completion.latency_s}};
    if (q.completion.usage) {
        j["llm"]["usage"] = {{"prompt_tokens", q.completion.usage->prompt_tokens},
                             {"completion_tokens", q.completion.usage->completion_tokens}};
    }
    j["timings"] = timings_json(q.timings);
    return dump(j, indent);
}

std::string error_json(const std::string& error_class, const std::string& stage, const std::string& message,
                       const StageTimings* timings) {
    ojson j{{"error", {{"class", error_class}, {"stage", stage}, {"message", message}}}};
    if (timings) j["timings"] = timings_json(*timings);
    return dump(j, -1);
}

}  // namespace grag
