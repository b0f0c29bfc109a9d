#include "grag/eval.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "grag/log.hpp"

namespace grag {

namespace {

using Clock = std::chrono::steady_clock;

double mean(const std::vector<double>& v) {
    if (v.empty()) return 0.0;
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

double median(std::vector<double> v) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    const auto n = v.size();
    return n % 2 ? v[n / 2] : (v[n / 2 - 1] + v[n / 2]) / 2.0;
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw NotFoundError("cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

EvalRow run_case(Engine& engine, const EvalCase& c) {
    EvalRow row;
    row.question = c.question;
    row.language = c.language;
    row.graph_id = c.graph_id;

    QueryRequest q;
    q.retrieve = RetrieveRequest{c.graph_id, c.question, c.k, c.current_node};
    try {
        q.llm.bare = true;
        auto t0 = Clock::now();
        const auto bare = engine.query(q);
        row.llm_time = std::chrono::duration<double>(Clock::now() - t0).count();
        row.llm_answer = bare.answer;

        q.llm.bare = false;
        t0 = Clock::now();
        const auto grag = engine.query(q);
        row.grag_time = std::chrono::duration<double>(Clock::now() - t0).count();
        row.grag_answer = grag.answer;
        if (grag.retrieval) {
            row.subgraph_nodes = grag.retrieval->subgraph.nodes.size();
            if (c.expected_nodes) row.hit_rate = hit_rate(grag.retrieval->subgraph.nodes, *c.expected_nodes);
        }
    } catch (const StageError& e) {
        row.ok = false;
        row.error_class = e.error_class();
        row.error_stage = e.stage();
        row.error_message = e.what();
    } catch (const Error& e) {
        row.ok = false;
        row.error_class = e.error_class();
        row.error_message = e.what();
    }
    return row;
}

std::string md_cell(std::string_view text) {
    std::string out;
    for (char ch : text) {
        if (ch == '|') {
            out += "\\|";
        } else if (ch == '\n') {
            out += "<br>";
        } else if (ch != '\r') {
            out += ch;
        }
    }
    return out;
}

std::string seconds(double s) {
    std::ostringstream out;
    out << std::fixed << std::setprecision(2) << s;
    return out.str();
}

}  // namespace

std::string_view to_string(Language lang) {
    switch (lang) {
        case Language::en: return "en";
        case Language::fr: return "fr";
        case Language::other: return "other";
    }
    return "other";
}

Language parse_language(std::string_view text) {
    if (text == "en") return Language::en;
    if (text == "fr") return Language::fr;
    if (text == "other") return Language::other;
    throw ValidationError("unknown language '" + std::string(text) + "'");
}

std::vector<EvalCase> parse_cases_jsonl(std::string_view text) {
    std::vector<EvalCase> cases;
    std::istringstream in{std::string(text)};
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (std::all_of(line.begin(), line.end(), [](unsigned char ch) { return std::isspace(ch) != 0; })) continue;
        const auto where = "cases line " + std::to_string(line_no) + ": ";
        const auto doc = nlohmann::json::parse(line, nullptr, false);
        if (doc.is_discarded() || !doc.is_object()) throw ParseError(where + "not a JSON object");
        EvalCase c;
        try {
            c.question = doc.at("question").get<std::string>();
            c.graph_id = doc.at("graph_id").get<std::string>();
            c.language = parse_language(doc.value("language", std::string("en")));
            c.notes = doc.value("notes", std::string());
            if (doc.contains("expected_nodes") && !doc["expected_nodes"].is_null()) {
                c.expected_nodes = doc["expected_nodes"].get<std::vector<NodeId>>();
            }
            if (doc.contains("current_node") && !doc["current_node"].is_null()) {
                c.current_node = doc["current_node"].get<NodeId>();
            }
            if (doc.contains("k") && !doc["k"].is_null()) c.k = doc["k"].get<std::size_t>();
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(where + e.what());
        } catch (const ValidationError& e) {
            throw ValidationError(where + e.what());
        }
        if (std::all_of(c.question.begin(), c.question.end(), [](unsigned char ch) { return std::isspace(ch) != 0; })) {
            throw ValidationError(where + "empty question");
        }
        cases.push_back(std::move(c));
    }
    return cases;
}

std::vector<EvalCase> load_cases_jsonl(const std::filesystem::path& path) { return parse_cases_jsonl(read_file(path)); }

std::vector<std::string> load_graph_dir(Engine& engine, const std::filesystem::path& dir) {
    constexpr std::string_view kNodes = ".nodes.json";
    std::vector<std::filesystem::path> node_files;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        const auto name = entry.path().filename().string();
        if (name.size() > kNodes.size() && name.ends_with(kNodes)) node_files.push_back(entry.path());
    }
    std::sort(node_files.begin(), node_files.end());
    std::vector<std::string> ids;
    for (const auto& nodes : node_files) {
        const auto name = nodes.filename().string();
        const auto adj = dir / (name.substr(0, name.size() - kNodes.size()) + ".adj.json");
        if (!std::filesystem::exists(adj)) {
            log::warning("skipping " + nodes.string() + ": no matching .adj.json");
            continue;
        }
        ids.push_back(engine.upload(read_file(nodes), read_file(adj)).graph_id);
    }
    return ids;
}

std::optional<double> hit_rate(const std::vector<NodeId>& subgraph_nodes, const std::vector<NodeId>& expected) {
    const std::set<NodeId> want(expected.begin(), expected.end());
    if (want.empty()) return std::nullopt;
    const std::set<NodeId> got(subgraph_nodes.begin(), subgraph_nodes.end());
    std::size_t hits = 0;
    for (auto id : want) hits += got.contains(id) ? 1 : 0;
    return static_cast<double>(hits) / static_cast<double>(want.size());
}

EvalAggregates aggregate(const std::vector<EvalRow>& rows) {
    EvalAggregates a;
    a.cases = rows.size();
    std::vector<double> llm, grag, hits;
    for (const auto& r : rows) {
        if (!r.ok) {
            ++a.failed;
            continue;
        }
        ++a.succeeded;
        llm.push_back(r.llm_time);
        grag.push_back(r.grag_time);
        if (r.hit_rate) hits.push_back(*r.hit_rate);
    }
    a.mean_llm_time = mean(llm);
    a.median_llm_time = median(llm);
    a.mean_grag_time = mean(grag);
    a.median_grag_time = median(grag);
    if (!hits.empty()) a.mean_hit_rate = mean(hits);
    return a;
}

EvalReport run_eval(Engine& engine, const std::vector<EvalCase>& cases, const EvalConfig& cfg) {
    EvalReport report;
    report.model = cfg.model_label;
    report.rows.resize(cases.size());
    std::atomic<std::size_t> next{0};
    const auto worker = [&] {
        for (auto i = next++; i < cases.size(); i = next++) report.rows[i] = run_case(engine, cases[i]);
    };
    const auto workers = std::min(std::max<std::size_t>(cfg.concurrency, 1), cases.size());
    std::vector<std::thread> pool;
    for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(worker);
    if (workers > 0) worker();
    for (auto& t : pool) t.join();
    report.aggregates = aggregate(report.rows);
    return report;
}

std::string render_report(const EvalReport& report, ReportFormat format) {
    const auto& a = report.aggregates;
    if (format == ReportFormat::json) {
        nlohmann::ordered_json rows = nlohmann::ordered_json::array();
        for (const auto& r : report.rows) {
            nlohmann::ordered_json row{{"question", r.question},
                                       {"language", std::string(to_string(r.language))},
                                       {"graph_id", r.graph_id},
                                       {"ok", r.ok}};
            if (r.ok) {
                row["llm_answer"] = r.llm_answer;
                row["grag_answer"] = r.grag_answer;
                row["llm_time"] = r.llm_time;
                row["grag_time"] = r.grag_time;
                row["subgraph_nodes"] = r.subgraph_nodes;
                row["retrieval_hit_rate"] = r.hit_rate ? nlohmann::ordered_json(*r.hit_rate) : nullptr;
            } else {
                row["error"] = {{"class", r.error_class}, {"stage", r.error_stage}, {"message", r.error_message}};
            }
            rows.push_back(std::move(row));
        }
        nlohmann::ordered_json doc{
            {"model", report.model},
            {"rows", std::move(rows)},
            {"aggregates",
             {{"cases", a.cases},
              {"succeeded", a.succeeded},
              {"failed", a.failed},
              {"mean_llm_time", a.mean_llm_time},
              {"median_llm_time", a.median_llm_time},
              {"mean_grag_time", a.mean_grag_time},
              {"median_grag_time", a.median_grag_time},
              {"mean_hit_rate", a.mean_hit_rate ? nlohmann::ordered_json(*a.mean_hit_rate) : nullptr}}}};
        return doc.dump(2, ' ', false, nlohmann::json::error_handler_t::replace) + "\n";
    }

    std::ostringstream out;
    out << "# Evaluation report\n\n";
    out << "Model: " << md_cell(report.model) << "\n\n";
    for (std::size_t i = 0; i < report.rows.size(); ++i) {
        const auto& r = report.rows[i];
        out << "## Case " << i + 1 << ": " << md_cell(r.question) << "\n\n";
        out << "Graph: `" << r.graph_id << "`, language: " << to_string(r.language);
        if (r.hit_rate) out << ", retrieval hit rate: " << seconds(*r.hit_rate);
        out << "\n\n";
        out << "| Model | Response | Time (s) |\n";
        out << "|---|---|---|\n";
        if (r.ok) {
            out << "| LLM | " << md_cell(r.llm_answer) << " | " << seconds(r.llm_time) << " |\n";
            out << "| LLM+G-RAG | " << md_cell(r.grag_answer) << " | " << seconds(r.grag_time) << " |\n";
        } else {
            const auto failure = "failed: " + r.error_class + (r.error_stage.empty() ? "" : " at " + r.error_stage);
            out << "| LLM | " << md_cell(failure) << " | - |\n";
            out << "| LLM+G-RAG | " << md_cell(failure) << " | - |\n";
        }
        out << "\n";
    }
    out << "## Aggregates\n\n";
    out << "| Metric | Value |\n|---|---|\n";
    out << "| Cases | " << a.cases << " |\n";
    out << "| Succeeded | " << a.succeeded << " |\n";
    out << "| Failed | " << a.failed << " |\n";
    out << "| Mean time LLM (s) | " << seconds(a.mean_llm_time) << " |\n";
    out << "| Median time LLM (s) | " << seconds(a.median_llm_time) << " |\n";
    out << "| Mean time LLM+G-RAG (s) | " << seconds(a.mean_grag_time) << " |\n";
    out << "| Median time LLM+G-RAG (s) | " << seconds(a.median_grag_time) << " |\n";
    out << "| Mean retrieval hit rate | " << (a.mean_hit_rate ? seconds(*a.mean_hit_rate) : std::string("n/a"))
        << " |\n";
    return out.str();
}

}  // namespace grag
