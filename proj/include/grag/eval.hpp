#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "grag/service.hpp"

namespace grag {

enum class Language { en, fr, other };

std::string_view to_string(Language lang);
Language parse_language(std::string_view text);

struct EvalCase {
    std::string question;
    Language language = Language::en;
    std::string graph_id;
    std::optional<std::vector<NodeId>> expected_nodes;
    std::string notes;
    std::optional<NodeId> current_node;
    std::optional<std::size_t> k;
};

// One JSON object per line; blank lines are skipped. Errors carry the line number.
std::vector<EvalCase> parse_cases_jsonl(std::string_view text);
std::vector<EvalCase> load_cases_jsonl(const std::filesystem::path& path);

// Loads every `<name>.nodes.json` with a matching `<name>.adj.json` in `dir`,
// in file name order. Returns the graph ids.
std::vector<std::string> load_graph_dir(Engine& engine, const std::filesystem::path& dir);

struct EvalRow {
    std::string question;
    Language language = Language::en;
    std::string graph_id;
    bool ok = true;
    std::string error_class;
    std::string error_stage;
    std::string error_message;
    std::string llm_answer;
    std::string grag_answer;
    double llm_time = 0.0;   // seconds, bare query
    double grag_time = 0.0;  // seconds, Graph-RAG query
    std::size_t subgraph_nodes = 0;
    std::optional<double> hit_rate;
};

struct EvalAggregates {
    std::size_t cases = 0;
    std::size_t succeeded = 0;
    std::size_t failed = 0;
    double mean_llm_time = 0.0;
    double median_llm_time = 0.0;
    double mean_grag_time = 0.0;
    double median_grag_time = 0.0;
    std::optional<double> mean_hit_rate;  // over successful rows with expected nodes
};

struct EvalReport {
    std::string model;
    std::vector<EvalRow> rows;  // case order
    EvalAggregates aggregates;
};

struct EvalConfig {
    std::size_t concurrency = 8;
    std::string model_label = "LLM";
};

// |subgraph ∩ expected| / |expected|; nullopt for an empty expected set.
std::optional<double> hit_rate(const std::vector<NodeId>& subgraph_nodes, const std::vector<NodeId>& expected);

// Failed rows are excluded from every aggregate.
EvalAggregates aggregate(const std::vector<EvalRow>& rows);

// A failing case yields a failed row; the remaining cases still run.
EvalReport run_eval(Engine& engine, const std::vector<EvalCase>& cases, const EvalConfig& cfg = {});

enum class ReportFormat { markdown, json };

std::string render_report(const EvalReport& report, ReportFormat format);

}  // namespace grag
