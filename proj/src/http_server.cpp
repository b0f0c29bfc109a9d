#include <httplib.h>
#include <json.hpp>

#include "grag/log.hpp"
#include "grag/service.hpp"

namespace grag {

namespace {

class BadRequest : public Error {
public:
    explicit BadRequest(const std::string& message) : Error("bad_request", message) {}
};

nlohmann::json parse_body(const httplib::Request& req) {
    auto doc = nlohmann::json::parse(req.body, nullptr, false);
    if (doc.is_discarded()) throw BadRequest("request body is not valid JSON");
    if (!doc.is_object()) throw BadRequest("request body must be a JSON object");
    return doc;
}

template <typename T>
std::optional<T> optional_field(const nlohmann::json& doc, const char* key) {
    if (!doc.contains(key) || doc[key].is_null()) return std::nullopt;
    try {
        return doc[key].get<T>();
    } catch (const nlohmann::json::exception&) {
        throw ValidationError(std::string("field '") + key + "' has the wrong type");
    }
}

template <typename T>
T required_field(const nlohmann::json& doc, const char* key) {
    auto v = optional_field<T>(doc, key);
    if (!v) throw ValidationError(std::string("missing field '") + key + "'");
    return *v;
}

RetrieveRequest retrieve_request(const nlohmann::json& doc) {
    RetrieveRequest r;
    r.graph_id = required_field<std::string>(doc, "graph_id");
    r.question = required_field<std::string>(doc, "question");
    if (auto k = optional_field<long long>(doc, "k")) {
        if (*k < 1) throw ValidationError("k must be at least 1");
        r.k = static_cast<std::size_t>(*k);
    }
    r.current_node = optional_field<NodeId>(doc, "current_node");
    return r;
}

void send_error(httplib::Response& res, const Error& e, const std::string& stage, const StageTimings* timings) {
    res.status = http_status_for(e.error_class(), stage);
    res.set_content(error_json(e.error_class(), stage, e.what(), timings), "application/json");
}

}  // namespace

struct HttpServer::Impl {
    Engine& engine;
    httplib::Server server;

    explicit Impl(Engine& e) : engine(e) { routes(); }

    template <typename Handler>
    httplib::Server::Handler guarded(Handler handler) {
        return [handler](const httplib::Request& req, httplib::Response& res) {
            try {
                handler(req, res);
            } catch (const StageError& e) {
                send_error(res, e, e.stage(), &e.timings());
            } catch (const Error& e) {
                send_error(res, e, "request", nullptr);
            } catch (const std::exception& e) {
                send_error(res, Error("internal_error", e.what()), "request", nullptr);
            }
        };
    }

    void routes() {
        server.Post("/v1/graphs", guarded([this](const httplib::Request& req, httplib::Response& res) {
            const auto doc = parse_body(req);
            if (!doc.contains("nodes") || !doc.contains("adjacency")) {
                throw ValidationError("payload needs 'nodes' and 'adjacency' objects");
            }
            const auto result = engine.upload(doc["nodes"].dump(), doc["adjacency"].dump());
            auto body = nlohmann::ordered_json::parse(stats_json(result.graph_id, result.stats));
            body["created"] = result.created;
            res.status = result.created ? 201 : 200;
            res.set_content(body.dump(), "application/json");
        }));

        server.Get("/v1/graphs", guarded([this](const httplib::Request&, httplib::Response& res) {
            auto list = nlohmann::ordered_json::array();
            for (const auto& id : engine.graph_ids()) {
                list.push_back(nlohmann::ordered_json::parse(stats_json(id, engine.graph(id)->stats)));
            }
            res.set_content(nlohmann::ordered_json{{"graphs", list}}.dump(), "application/json");
        }));

        server.Get(R"(/v1/graphs/([^/]+)/stats)", guarded([this](const httplib::Request& req, httplib::Response& res) {
            const std::string id = req.matches[1];
            std::shared_ptr<const LoadedGraph> g;
            try {
                g = engine.graph(id);
            } catch (const Error& e) {
                throw StageError(e, "lookup", {});
            }
            res.set_content(stats_json(id, g->stats), "application/json");
        }));

        server.Post("/v1/retrieve", guarded([this](const httplib::Request& req, httplib::Response& res) {
            const auto r = retrieve_request(parse_body(req));
            const auto out = engine.retrieve(r);
            const auto g = engine.graph(r.graph_id);
            res.set_content(retrieve_json(out, *g->graph), "application/json");
        }));

        server.Post("/v1/query", guarded([this](const httplib::Request& req, httplib::Response& res) {
            const auto doc = parse_body(req);
            QueryRequest q;
            q.retrieve = retrieve_request(doc);
            if (doc.contains("llm") && !doc["llm"].is_null()) {
                const auto& llm = doc["llm"];
                if (!llm.is_object()) throw ValidationError("field 'llm' must be an object");
                q.llm.model = optional_field<std::string>(llm, "model");
                q.llm.max_tokens = optional_field<int>(llm, "max_tokens");
                q.llm.temperature = optional_field<double>(llm, "temperature");
                q.llm.bare = optional_field<bool>(llm, "bare").value_or(false);
            }
            const auto out = engine.query(q);
            const auto g = engine.graph(q.retrieve.graph_id);
            res.set_content(query_json(out, g->graph.get()), "application/json");
        }));

        server.Get("/metrics", [this](const httplib::Request&, httplib::Response& res) {
            res.set_content(engine.metrics_text(), "text/plain; version=0.0.4");
        });
    }
};

HttpServer::HttpServer(Engine& engine) : impl_(std::make_unique<Impl>(engine)) {}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind(const std::string& host, int port) {
    if (port == 0) return impl_->server.bind_to_any_port(host);
    return impl_->server.bind_to_port(host, port) ? port : -1;
}

bool HttpServer::listen_after_bind() { return impl_->server.listen_after_bind(); }

void HttpServer::stop() {
    if (impl_ && impl_->server.is_running()) impl_->server.stop();
}

void HttpServer::wait_until_ready() const { impl_->server.wait_until_ready(); }

}  // namespace grag
