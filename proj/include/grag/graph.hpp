#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace grag {

using NodeId = std::int64_t;

enum class EdgeKind { button, link, menu, form, dropdown, system };

std::string_view to_string(EdgeKind kind);
// Throws ValidationError for anything outside the enumeration.
EdgeKind parse_edge_kind(std::string_view text);

struct NodeRecord {
    NodeId node_id = 0;
    std::string name;
    std::string description;
    std::string url;

    friend bool operator==(const NodeRecord&, const NodeRecord&) = default;
};

struct EdgeRecord {
    NodeId src = 0;
    NodeId tgt = 0;
    std::string action;
    EdgeKind kind = EdgeKind::link;
    // Extra payload for the prompt (form fields and similar); absent by default.
    std::optional<std::string> detail;

    friend bool operator==(const EdgeRecord&, const EdgeRecord&) = default;
};

struct ValidationReport {
    std::vector<NodeId> unreachable;  // ascending
    bool ok() const { return unreachable.empty(); }
};

// Directed state-action graph. Immutable once constructed; share freely
// between threads.
class StateActionGraph {
public:
    // Validates every invariant. Unreachable nodes are reported, not rejected.
    StateActionGraph(std::string graph_id, NodeId home_node, std::vector<NodeRecord> nodes,
                     std::vector<EdgeRecord> edges);

    const std::string& graph_id() const { return graph_id_; }
    NodeId home_node() const { return home_node_; }
    std::span<const NodeRecord> nodes() const { return nodes_; }
    std::span<const EdgeRecord> edges() const { return edges_; }
    const ValidationReport& validation_report() const { return report_; }

    bool contains(NodeId id) const { return index_.contains(id); }
    // Position of the node in nodes(); nullopt when absent.
    std::optional<std::size_t> index_of(NodeId id) const;
    // Throws NotFoundError when absent.
    const NodeRecord& node(NodeId id) const;

    // Edge indices leaving each node, aligned with nodes().
    const std::vector<std::vector<std::size_t>>& out_edges() const { return out_; }

private:
    std::string graph_id_;
    NodeId home_node_;
    std::vector<NodeRecord> nodes_;
    std::vector<EdgeRecord> edges_;
    std::unordered_map<NodeId, std::size_t> index_;
    std::vector<std::vector<std::size_t>> out_;
    ValidationReport report_;
};

struct GraphStats {
    std::size_t node_count = 0;
    std::size_t edge_count = 0;
    double reachable_fraction = 0.0;
    std::size_t max_out_degree = 0;
};

GraphStats graph_stats(const StateActionGraph& g);

// Node ids reachable from the home node following directed edges, in BFS order.
std::vector<NodeId> reachable_from_home(const StateActionGraph& g);

// Reads the nodes and adjacency files. Parse errors carry line/column context.
StateActionGraph load_graph(std::istream& nodes_file, std::istream& adjacency_file);
StateActionGraph load_graph_text(std::string_view nodes_json, std::string_view adjacency_json);
StateActionGraph load_graph_files(const std::string& nodes_path, const std::string& adjacency_path);

struct GraphFiles {
    std::string nodes_json;
    std::string adjacency_json;
};

// Keys in schema order, 2-space indentation, trailing newline.
GraphFiles save_graph(const StateActionGraph& g);
void save_graph_files(const StateActionGraph& g, const std::string& nodes_path,
                      const std::string& adjacency_path);

}  // namespace grag
