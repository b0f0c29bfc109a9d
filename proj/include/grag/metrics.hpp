#pragma once

#include <array>
#include <atomic>
#include <functional>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "grag/graph.hpp"

namespace grag {

// Fixed-bucket latency histogram (seconds). Thread-safe.
class Histogram {
public:
    static constexpr std::array<double, 12> kBounds{0.001, 0.0025, 0.005, 0.01, 0.025, 0.05,
                                                    0.1,   0.25,   0.5,   1.0,  2.5,   10.0};

    void observe(double seconds);
    // Cumulative counts, one per bound plus +Inf.
    std::vector<std::uint64_t> cumulative() const;
    std::uint64_t count() const;
    double sum() const;

private:
    mutable std::mutex mutex_;
    std::array<std::uint64_t, kBounds.size() + 1> counts_{};
    double sum_ = 0.0;
};

inline const std::vector<std::string>& pipeline_stages() {
    static const std::vector<std::string> stages{"embed_query", "retrieve", "pcst", "llm", "total"};
    return stages;
}

class Metrics {
public:
    Metrics();

    void count_query() { ++queries_; }
    void count_retrieve() { ++retrieves_; }
    void count_error(const std::string& error_class);
    void observe(const std::string& stage, double seconds);

    std::uint64_t queries() const { return queries_.load(); }
    std::uint64_t errors() const;
    const Histogram& histogram(const std::string& stage) const { return *histograms_.at(stage); }

    // Plain-text exposition: counters, the graphs-loaded gauge, stage histograms.
    std::string render(std::size_t graphs_loaded) const;

private:
    std::atomic<std::uint64_t> queries_{0};
    std::atomic<std::uint64_t> retrieves_{0};
    mutable std::mutex errors_mutex_;
    std::map<std::string, std::uint64_t> errors_;
    std::map<std::string, std::unique_ptr<Histogram>> histograms_;
};

struct StageTimings {
    double embed_query = 0.0;
    double retrieve = 0.0;
    double pcst = 0.0;
    double llm = 0.0;
    double total = 0.0;
};

struct QueryLogEntry {
    std::string timestamp;  // UTC, ISO 8601
    std::string graph_id;
    std::string question;
    std::size_t k = 0;
    std::optional<NodeId> pinned_node;
    std::size_t subgraph_nodes = 0;
    std::size_t subgraph_edges = 0;
    double similarity_max = 0.0;
    double similarity_mean = 0.0;
    StageTimings timings;
    bool ok = true;
    std::string error_class;
    bool bare = false;
};

std::string to_json_line(const QueryLogEntry& e);
std::string utc_timestamp();

// Serialized append-only log. Keeps the most recent entries in memory and
// forwards each one as a JSON line to the sink.
class QueryLog {
public:
    using Sink = std::function<void(const std::string& line)>;

    explicit QueryLog(Sink sink = {}, std::size_t keep = 1024);

    void append(QueryLogEntry e);
    std::vector<QueryLogEntry> entries() const;

private:
    mutable std::mutex mutex_;
    Sink sink_;
    std::size_t keep_;
    std::vector<QueryLogEntry> entries_;
};

}  // namespace grag
