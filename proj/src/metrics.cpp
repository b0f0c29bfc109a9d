#include "grag/metrics.hpp"

#include <algorithm>
#include <chrono>
#include <ctime>
#include <iomanip>
#include <sstream>

#include <json.hpp>

namespace grag {

void Histogram::observe(double seconds) {
    const auto it = std::lower_bound(kBounds.begin(), kBounds.end(), seconds);
    std::lock_guard lock(mutex_);
    ++counts_[static_cast<std::size_t>(it - kBounds.begin())];
    sum_ += seconds;
}

std::vector<std::uint64_t> Histogram::cumulative() const {
    std::lock_guard lock(mutex_);
    std::vector<std::uint64_t> out(counts_.size());
    std::uint64_t running = 0;
    for (std::size_t i = 0; i < counts_.size(); ++i) out[i] = running += counts_[i];
    return out;
}

std::uint64_t Histogram::count() const {
    std::lock_guard lock(mutex_);
    std::uint64_t n = 0;
    for (auto c : counts_) n += c;
    return n;
}

double Histogram::sum() const {
    std::lock_guard lock(mutex_);
    return sum_;
}

Metrics::Metrics() {
    for (const auto& stage : pipeline_stages()) histograms_.emplace(stage, std::make_unique<Histogram>());
}

void Metrics::count_error(const std::string& error_class) {
    std::lock_guard lock(errors_mutex_);
    ++errors_[error_class];
}

std::uint64_t Metrics::errors() const {
    std::lock_guard lock(errors_mutex_);
    std::uint64_t n = 0;
    for (const auto& [_, c] : errors_) n += c;
    return n;
}

void Metrics::observe(const std::string& stage, double seconds) {
    if (auto it = histograms_.find(stage); it != histograms_.end()) it->second->observe(seconds);
}

std::string Metrics::render(std::size_t graphs_loaded) const {
    std::ostringstream out;
    out << std::setprecision(9);
    out << "# TYPE grag_queries_total counter\n";
    out << "grag_queries_total " << queries_.load() << "\n";
    out << "# TYPE grag_retrieves_total counter\n";
    out << "grag_retrieves_total " << retrieves_.load() << "\n";
    out << "# TYPE grag_errors_total counter\n";
    {
        std::lock_guard lock(errors_mutex_);
        std::uint64_t total = 0;
        for (const auto& [_, c] : errors_) total += c;
        out << "grag_errors_total " << total << "\n";
        for (const auto& [cls, c] : errors_) out << "grag_errors_total{class=\"" << cls << "\"} " << c << "\n";
    }
    out << "# TYPE grag_graphs_loaded gauge\n";
    out << "grag_graphs_loaded " << graphs_loaded << "\n";
    out << "# TYPE grag_stage_latency_seconds histogram\n";
    for (const auto& stage : pipeline_stages()) {
        const auto& h = *histograms_.at(stage);
        const auto cum = h.cumulative();
        for (std::size_t i = 0; i < Histogram::kBounds.size(); ++i) {
            out << "grag_stage_latency_seconds_bucket{stage=\"" << stage << "\",le=\"" << Histogram::kBounds[i]
                << "\"} " << cum[i] << "\n";
        }
        out << "grag_stage_latency_seconds_bucket{stage=\"" << stage << "\",le=\"+Inf\"} " << cum.back() << "\n";
        out << "grag_stage_latency_seconds_sum{stage=\"" << stage << "\"} " << h.sum() << "\n";
        out << "grag_stage_latency_seconds_count{stage=\"" << stage << "\"} " << cum.back() << "\n";
    }
    return out.str();
}

std::string utc_timestamp() {
    const auto now = std::chrono::system_clock::now();
    const auto t = std::chrono::system_clock::to_time_t(now);
    const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count() % 1000;
    std::tm tm{};
    gmtime_r(&t, &tm);
    std::ostringstream out;
    out << std::put_time(&tm, "%Y-%m-%dT%H:%M:%S") << '.' << std::setw(3) << std::setfill('0') << ms << 'Z';
    return out.str();
}

std::string to_json_line(const QueryLogEntry& e) {
    nlohmann::ordered_json j;
    j["timestamp"] = e.timestamp;
    j["graph_id"] = e.graph_id;
    j["question"] = e.question;
    j["k"] = e.k;
    j["pinned_node"] = e.pinned_node ? nlohmann::ordered_json(*e.pinned_node) : nlohmann::ordered_json(nullptr);
    j["bare"] = e.bare;
    j["subgraph"] = {{"nodes", e.subgraph_nodes}, {"edges", e.subgraph_edges}};
    j["similarity"] = {{"max", e.similarity_max}, {"mean", e.similarity_mean}};
    j["timings"] = {{"embed_query", e.timings.embed_query}, {"retrieve", e.timings.retrieve},
                    {"pcst", e.timings.pcst},               {"llm", e.timings.llm},
                    {"total", e.timings.total}};
    j["outcome"] = e.ok ? nlohmann::ordered_json{{"ok", true}}
                        : nlohmann::ordered_json{{"ok", false}, {"error_class", e.error_class}};
    return j.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace);
}

QueryLog::QueryLog(Sink sink, std::size_t keep) : sink_(std::move(sink)), keep_(std::max<std::size_t>(keep, 1)) {}

void QueryLog::append(QueryLogEntry e) {
    std::lock_guard lock(mutex_);
    if (sink_) sink_(to_json_line(e));
    if (entries_.size() == keep_) entries_.erase(entries_.begin());
    entries_.push_back(std::move(e));
}

std::vector<QueryLogEntry> QueryLog::entries() const {
    std::lock_guard lock(mutex_);
    return entries_;
}

}  // namespace grag
