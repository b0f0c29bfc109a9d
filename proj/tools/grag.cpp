// Command-line front end: crawl, embed, retrieve, query, serve, eval, pcst-solve.

#include <csignal>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "grag/crawler.hpp"
#include "grag/eval.hpp"
#include "grag/log.hpp"
#include "grag/pcst.hpp"
#include "grag/service.hpp"
#include "grag/url.hpp"

namespace {

using namespace grag;

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw NotFoundError("cannot read " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("cannot write " + path);
    out << content;
}

struct GraphArgs {
    std::string nodes;
    std::string adj;
};

void add_graph_options(CLI::App* cmd, GraphArgs& g) {
    cmd->add_option("--nodes", g.nodes, "Nodes file")->required()->check(CLI::ExistingFile);
    cmd->add_option("--adj", g.adj, "Adjacency file")->required()->check(CLI::ExistingFile);
}

struct PipelineArgs {
    GraphArgs graph;
    std::string question;
    std::optional<std::size_t> k;
    std::optional<NodeId> current_node;
    std::string mock_llm;
    bool bare = false;
};

ServiceConfig config_with_mock(const std::string& mock_llm) {
    auto cfg = ServiceConfig::from_env();
    if (!mock_llm.empty()) {
        cfg.llm = "script";
        cfg.llm_script = mock_llm;
    }
    return cfg;
}

std::unique_ptr<Engine> make_engine(const ServiceConfig& cfg) {
    return std::make_unique<Engine>(cfg, make_embedder(cfg), make_llm_client(cfg),
                                    [](const std::string& line) { std::cerr << line << '\n'; });
}

std::shared_ptr<const LoadedGraph> load_into(Engine& engine, const GraphArgs& g) {
    const auto id = engine.upload(read_file(g.nodes), read_file(g.adj)).graph_id;
    return engine.graph(id);
}

HttpServer* g_server = nullptr;

void on_signal(int) {
    if (g_server) g_server->stop();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Graph-RAG engine for step-by-step software guidance"};
    app.require_subcommand(1);

    // crawl
    std::string fixtures, webdriver, home_url, host, out_nodes, out_adj;
    std::size_t max_pages = 10000;
    bool strip_query = false;
    auto* crawl_cmd = app.add_subcommand("crawl", "Explore an application into nodes and adjacency files");
    auto* fixtures_opt = crawl_cmd->add_option("--fixtures", fixtures, "Fixture site directory (site.json + html)");
    auto* wd_opt = crawl_cmd->add_option("--webdriver", webdriver, "WebDriver endpoint for a live crawl");
    fixtures_opt->excludes(wd_opt);
    crawl_cmd->add_option("--home", home_url, "Home URL (live crawl)");
    crawl_cmd->add_option("--host", host, "Allowed host (live crawl; default: home URL host)");
    crawl_cmd->add_option("--out-nodes", out_nodes, "Output nodes file")->required();
    crawl_cmd->add_option("--out-adj", out_adj, "Output adjacency file")->required();
    crawl_cmd->add_option("--max-pages", max_pages, "Page cap")->check(CLI::PositiveNumber);
    crawl_cmd->add_flag("--strip-query", strip_query, "Treat URLs differing only by query as one page");

    // embed
    GraphArgs embed_graph_args;
    std::string cache_dir;
    auto* embed_cmd = app.add_subcommand("embed", "Embed a graph into the on-disk cache");
    add_graph_options(embed_cmd, embed_graph_args);
    embed_cmd->add_option("--cache-dir", cache_dir, "Cache directory")->required();

    // retrieve / query
    PipelineArgs retrieve_args, query_args;
    auto* retrieve_cmd = app.add_subcommand("retrieve", "Top-k retrieval and subgraph extraction");
    auto* query_cmd = app.add_subcommand("query", "Full pipeline including the LLM call");
    for (auto [cmd, args] : {std::pair{retrieve_cmd, &retrieve_args}, std::pair{query_cmd, &query_args}}) {
        add_graph_options(cmd, args->graph);
        cmd->add_option("--question,-q", args->question, "User question")->required();
        cmd->add_option("--k", args->k, "Top-k (default from config, 15)");
        cmd->add_option("--current-node", args->current_node, "Node the user is on (default: home)");
    }
    query_cmd->add_option("--mock-llm", query_args.mock_llm, "Mock LLM script file")->check(CLI::ExistingFile);
    query_cmd->add_flag("--bare", query_args.bare, "Ask without graph context");

    // serve
    std::string serve_graph_dir, serve_host;
    int serve_port = -1;
    auto* serve_cmd = app.add_subcommand("serve", "Run the HTTP service (config from SERVICE_CONFIG)");
    serve_cmd->add_option("--graph-dir", serve_graph_dir, "Preload *.nodes.json/*.adj.json pairs")
        ->check(CLI::ExistingDirectory);
    serve_cmd->add_option("--host", serve_host, "Bind address");
    serve_cmd->add_option("--port", serve_port, "Port (0 picks a free one)");

    // eval
    std::string cases, eval_graph_dir, eval_out, eval_mock;
    std::size_t concurrency = 8;
    auto* eval_cmd = app.add_subcommand("eval", "Compare bare LLM and Graph-RAG answers over a case file");
    eval_cmd->add_option("--cases", cases, "JSON lines case file")->required()->check(CLI::ExistingFile);
    eval_cmd->add_option("--graph-dir", eval_graph_dir, "Graph directory")->required()->check(CLI::ExistingDirectory);
    eval_cmd->add_option("--out", eval_out, "report.md or report.json")->required();
    eval_cmd->add_option("--mock-llm", eval_mock, "Mock LLM script file")->check(CLI::ExistingFile);
    eval_cmd->add_option("--concurrency", concurrency, "Cases in flight")->check(CLI::PositiveNumber);

    // pcst-solve
    std::string instance, mode = "exact";
    auto* pcst_cmd = app.add_subcommand("pcst-solve", "Solve a standalone PCST instance file");
    pcst_cmd->add_option("--instance", instance, "Instance JSON")->required()->check(CLI::ExistingFile);
    pcst_cmd->add_option("--mode", mode, "exact or approx")->check(CLI::IsMember({"exact", "approx"}));

    CLI11_PARSE(app, argc, argv);

    try {
        if (*crawl_cmd) {
            std::unique_ptr<PageProvider> provider;
            CrawlConfig cfg;
            cfg.max_pages = max_pages;
            cfg.strip_query = strip_query;
            if (!fixtures.empty()) {
                auto site = std::make_unique<FixtureSiteProvider>(fixtures);
                cfg.home_url = site->home_url();
                cfg.allowed_host = site->manifest().host;
                provider = std::move(site);
            } else if (!webdriver.empty()) {
                if (home_url.empty()) throw ConfigError("--home is required with --webdriver");
                WebDriverConfig wd;
                wd.endpoint = webdriver;
                provider = std::make_unique<WebDriverProvider>(wd);
                cfg.home_url = home_url;
                auto h = url::http_host(home_url);
                if (!h) throw ConfigError("--home must be an http(s) URL");
                cfg.allowed_host = host.empty() ? *h : host;
            } else {
                throw ConfigError("one of --fixtures or --webdriver is required");
            }
            const auto result = crawl(*provider, cfg);
            save_graph_files(result.graph, out_nodes, out_adj);
            const auto stats = graph_stats(result.graph);
            nlohmann::ordered_json summary{{"graph_id", result.graph.graph_id()},
                                           {"nodes", stats.node_count},
                                           {"edges", stats.edge_count},
                                           {"truncated", result.truncated},
                                           {"ignored_external", result.ignored_external},
                                           {"warnings", result.warnings}};
            std::cout << summary.dump(2) << '\n';
        } else if (*embed_cmd) {
            const auto g = load_graph_files(embed_graph_args.nodes, embed_graph_args.adj);
            auto cfg = ServiceConfig::from_env();
            auto embedder = make_embedder(cfg);
            EmbeddingCache cache(cache_dir);
            CountingEmbedder counting(*embedder);
            const auto ge = embed_graph(counting, g, EmbedOptions{cfg.edge_text, &cache});
            nlohmann::ordered_json summary{{"graph_id", g.graph_id()},
                                           {"embedder", ge.embedder_id()},
                                           {"dim", ge.dim()},
                                           {"nodes", ge.node_count()},
                                           {"edges", ge.edge_count()},
                                           {"embedded_texts", counting.texts()},
                                           {"cache", cache.path_for(g.graph_id()).string()}};
            std::cout << summary.dump(2) << '\n';
        } else if (*retrieve_cmd) {
            auto engine = make_engine(ServiceConfig::from_env());
            const auto lg = load_into(*engine, retrieve_args.graph);
            const auto out = engine->retrieve(
                {lg->graph->graph_id(), retrieve_args.question, retrieve_args.k, retrieve_args.current_node});
            std::cout << retrieve_json(out, *lg->graph, 2) << '\n';
        } else if (*query_cmd) {
            auto engine = make_engine(config_with_mock(query_args.mock_llm));
            const auto lg = load_into(*engine, query_args.graph);
            QueryRequest q;
            q.retrieve = {lg->graph->graph_id(), query_args.question, query_args.k, query_args.current_node};
            q.llm.bare = query_args.bare;
            const auto out = engine->query(q);
            std::cout << query_json(out, lg->graph.get(), 2) << '\n';
        } else if (*serve_cmd) {
            auto cfg = ServiceConfig::from_env();
            if (!serve_host.empty()) cfg.host = serve_host;
            if (serve_port >= 0) cfg.port = serve_port;
            auto engine = std::make_unique<Engine>(cfg, make_embedder(cfg), make_llm_client(cfg),
                                                   [](const std::string& line) { std::cout << line << std::endl; });
            if (!serve_graph_dir.empty()) load_graph_dir(*engine, serve_graph_dir);
            HttpServer server(*engine);
            const int port = server.bind(cfg.host, cfg.port);
            if (port < 0) throw ConfigError("cannot bind " + cfg.host + ":" + std::to_string(cfg.port));
            g_server = &server;
            std::signal(SIGINT, on_signal);
            std::signal(SIGTERM, on_signal);
            log::info("listening on " + cfg.host + ":" + std::to_string(port));
            server.listen_after_bind();
            g_server = nullptr;
        } else if (*eval_cmd) {
            auto engine = make_engine(config_with_mock(eval_mock));
            load_graph_dir(*engine, eval_graph_dir);
            const auto report = run_eval(*engine, load_cases_jsonl(cases),
                                         EvalConfig{concurrency, engine->config().llm == "openai" ? "remote" : "mock"});
            const auto format = eval_out.ends_with(".json") ? ReportFormat::json : ReportFormat::markdown;
            write_file(eval_out, render_report(report, format));
            std::cout << "wrote " << eval_out << " (" << report.aggregates.succeeded << "/" << report.aggregates.cases
                      << " cases succeeded)\n";
        } else if (*pcst_cmd) {
            const auto inst = pcst_instance_from_json(read_file(instance));
            const auto sol = mode == "exact" ? solve_exact(inst) : solve_approx(inst);
            std::cout << pcst_solution_to_json(sol);
        }
    } catch (const StageError& e) {
        std::cerr << error_json(e.error_class(), e.stage(), e.what(), &e.timings()) << '\n';
        return 1;
    } catch (const Error& e) {
        std::cerr << error_json(e.error_class(), "cli", e.what()) << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << error_json("internal_error", "cli", e.what()) << '\n';
        return 1;
    }
    return 0;
}
