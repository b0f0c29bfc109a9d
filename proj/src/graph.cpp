#include "grag/graph.hpp"

#include <algorithm>
#include <deque>
#include <fstream>
#include <set>
#include <sstream>
#include <tuple>

#include <json.hpp>

#include "grag/error.hpp"
#include "grag/log.hpp"

namespace grag {

using nlohmann::json;
using nlohmann::ordered_json;

std::string_view to_string(EdgeKind kind) {
    switch (kind) {
        case EdgeKind::button: return "button";
        case EdgeKind::link: return "link";
        case EdgeKind::menu: return "menu";
        case EdgeKind::form: return "form";
        case EdgeKind::dropdown: return "dropdown";
        case EdgeKind::system: return "system";
    }
    return "link";
}

EdgeKind parse_edge_kind(std::string_view text) {
    static constexpr EdgeKind all[] = {EdgeKind::button, EdgeKind::link,     EdgeKind::menu,
                                       EdgeKind::form,   EdgeKind::dropdown, EdgeKind::system};
    for (auto kind : all) {
        if (to_string(kind) == text) return kind;
    }
    throw ValidationError("unknown edge kind '" + std::string(text) + "'");
}

StateActionGraph::StateActionGraph(std::string graph_id, NodeId home_node,
                                   std::vector<NodeRecord> nodes, std::vector<EdgeRecord> edges)
    : graph_id_(std::move(graph_id)),
      home_node_(home_node),
      nodes_(std::move(nodes)),
      edges_(std::move(edges)) {
    if (nodes_.empty()) throw ValidationError("graph must contain home node");

    index_.reserve(nodes_.size());
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        const auto& n = nodes_[i];
        if (n.node_id < 0) {
            throw ValidationError("node_id must be non-negative, got " + std::to_string(n.node_id));
        }
        if (n.name.empty()) {
            throw ValidationError("node " + std::to_string(n.node_id) + " has an empty name");
        }
        if (!index_.emplace(n.node_id, i).second) {
            throw DuplicateError("duplicate node_id " + std::to_string(n.node_id));
        }
    }
    if (!index_.contains(home_node_)) throw ValidationError("graph must contain home node");

    out_.resize(nodes_.size());
    std::set<std::tuple<NodeId, NodeId, std::string_view>> seen;
    for (std::size_t e = 0; e < edges_.size(); ++e) {
        const auto& edge = edges_[e];
        const auto describe = [&] {
            return "edge #" + std::to_string(e) + " (" + std::to_string(edge.src) + " -> " +
                   std::to_string(edge.tgt) + ", '" + edge.action + "')";
        };
        if (!index_.contains(edge.src) || !index_.contains(edge.tgt)) {
            throw IntegrityError(describe() + " references a missing node");
        }
        if (edge.action.empty()) throw ValidationError(describe() + " has an empty action");
        if (!seen.emplace(edge.src, edge.tgt, edge.action).second) {
            throw DuplicateError(describe() + " duplicates an earlier edge");
        }
        out_[index_.at(edge.src)].push_back(e);
    }

    std::vector<bool> reached(nodes_.size(), false);
    for (NodeId id : reachable_from_home(*this)) reached[index_.at(id)] = true;
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        if (!reached[i]) report_.unreachable.push_back(nodes_[i].node_id);
    }
    std::sort(report_.unreachable.begin(), report_.unreachable.end());
    if (!report_.ok()) {
        log::warning("graph '" + graph_id_ + "': " + std::to_string(report_.unreachable.size()) +
                     " node(s) unreachable from home node " + std::to_string(home_node_));
    }
}

std::optional<std::size_t> StateActionGraph::index_of(NodeId id) const {
    auto it = index_.find(id);
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

const NodeRecord& StateActionGraph::node(NodeId id) const {
    auto it = index_.find(id);
    if (it == index_.end()) throw NotFoundError("unknown node " + std::to_string(id));
    return nodes_[it->second];
}

std::vector<NodeId> reachable_from_home(const StateActionGraph& g) {
    std::vector<bool> seen(g.nodes().size(), false);
    std::vector<NodeId> order;
    std::deque<std::size_t> queue;
    const auto home = *g.index_of(g.home_node());
    seen[home] = true;
    queue.push_back(home);
    while (!queue.empty()) {
        auto u = queue.front();
        queue.pop_front();
        order.push_back(g.nodes()[u].node_id);
        for (auto e : g.out_edges()[u]) {
            auto v = *g.index_of(g.edges()[e].tgt);
            if (!seen[v]) {
                seen[v] = true;
                queue.push_back(v);
            }
        }
    }
    return order;
}

GraphStats graph_stats(const StateActionGraph& g) {
    GraphStats stats;
    stats.node_count = g.nodes().size();
    stats.edge_count = g.edges().size();
    stats.reachable_fraction = static_cast<double>(stats.node_count - g.validation_report().unreachable.size()) /
                               static_cast<double>(stats.node_count);
    for (const auto& out : g.out_edges()) stats.max_out_degree = std::max(stats.max_out_degree, out.size());
    return stats;
}

namespace {

json parse_with_context(std::string_view text, std::string_view which) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        std::size_t line = 1;
        std::size_t column = 1;
        const auto limit = std::min<std::size_t>(e.byte == 0 ? 0 : e.byte - 1, text.size());
        for (std::size_t i = 0; i < limit; ++i) {
            if (text[i] == '\n') {
                ++line;
                column = 1;
            } else {
                ++column;
            }
        }
        throw ParseError(std::string(which) + " file: malformed JSON at line " + std::to_string(line) +
                         ", column " + std::to_string(column) + ": " + e.what());
    }
}

template <typename T>
T require(const json& obj, const char* key, std::string_view where) {
    auto it = obj.find(key);
    if (it == obj.end()) throw ValidationError(std::string(where) + ": missing key '" + key + "'");
    try {
        return it->get<T>();
    } catch (const json::exception&) {
        throw ValidationError(std::string(where) + ": key '" + key + "' has the wrong type");
    }
}

std::string optional_string(const json& obj, const char* key, std::string_view where) {
    auto it = obj.find(key);
    if (it == obj.end() || it->is_null()) return {};
    if (!it->is_string()) throw ValidationError(std::string(where) + ": key '" + key + "' must be a string");
    return it->get<std::string>();
}

NodeId require_id(const json& obj, const char* key, std::string_view where) {
    auto it = obj.find(key);
    if (it == obj.end()) throw ValidationError(std::string(where) + ": missing key '" + key + "'");
    if (!it->is_number_integer()) throw ValidationError(std::string(where) + ": key '" + key + "' must be an integer");
    return it->get<NodeId>();
}

}  // namespace

StateActionGraph load_graph_text(std::string_view nodes_json, std::string_view adjacency_json) {
    const json nodes_doc = parse_with_context(nodes_json, "nodes");
    const json adj_doc = parse_with_context(adjacency_json, "adjacency");
    if (!nodes_doc.is_object()) throw ValidationError("nodes file: top level must be an object");
    if (!adj_doc.is_object()) throw ValidationError("adjacency file: top level must be an object");

    auto graph_id = require<std::string>(nodes_doc, "graph_id", "nodes file");
    auto home = require_id(nodes_doc, "home_node", "nodes file");
    if (adj_doc.contains("graph_id")) {
        auto adj_id = require<std::string>(adj_doc, "graph_id", "adjacency file");
        if (adj_id != graph_id) {
            throw ValidationError("adjacency graph_id '" + adj_id + "' does not match nodes graph_id '" + graph_id + "'");
        }
    }

    const auto& node_list = nodes_doc.contains("nodes") ? nodes_doc.at("nodes") : json::array();
    const auto& edge_list = adj_doc.contains("edges") ? adj_doc.at("edges") : json::array();
    if (!node_list.is_array()) throw ValidationError("nodes file: 'nodes' must be an array");
    if (!edge_list.is_array()) throw ValidationError("adjacency file: 'edges' must be an array");

    std::vector<NodeRecord> nodes;
    nodes.reserve(node_list.size());
    for (std::size_t i = 0; i < node_list.size(); ++i) {
        const auto& n = node_list[i];
        const auto where = "node #" + std::to_string(i);
        if (!n.is_object()) throw ValidationError(where + " must be an object");
        nodes.push_back({require_id(n, "node_id", where), require<std::string>(n, "name", where),
                         optional_string(n, "description", where), optional_string(n, "url", where)});
    }

    std::vector<EdgeRecord> edges;
    edges.reserve(edge_list.size());
    for (std::size_t i = 0; i < edge_list.size(); ++i) {
        const auto& e = edge_list[i];
        const auto where = "edge #" + std::to_string(i);
        if (!e.is_object()) throw ValidationError(where + " must be an object");
        EdgeRecord rec{require_id(e, "src", where), require_id(e, "tgt", where),
                       require<std::string>(e, "action", where),
                       parse_edge_kind(require<std::string>(e, "kind", where)), std::nullopt};
        if (auto it = e.find("detail"); it != e.end() && !it->is_null()) {
            rec.detail = require<std::string>(e, "detail", where);
        }
        edges.push_back(std::move(rec));
    }

    return StateActionGraph(std::move(graph_id), home, std::move(nodes), std::move(edges));
}

StateActionGraph load_graph(std::istream& nodes_file, std::istream& adjacency_file) {
    std::ostringstream nodes_buf;
    std::ostringstream adj_buf;
    nodes_buf << nodes_file.rdbuf();
    adj_buf << adjacency_file.rdbuf();
    return load_graph_text(nodes_buf.str(), adj_buf.str());
}

StateActionGraph load_graph_files(const std::string& nodes_path, const std::string& adjacency_path) {
    std::ifstream nodes(nodes_path, std::ios::binary);
    if (!nodes) throw NotFoundError("cannot open nodes file " + nodes_path);
    std::ifstream adj(adjacency_path, std::ios::binary);
    if (!adj) throw NotFoundError("cannot open adjacency file " + adjacency_path);
    return load_graph(nodes, adj);
}

GraphFiles save_graph(const StateActionGraph& g) {
    ordered_json nodes_doc;
    nodes_doc["graph_id"] = g.graph_id();
    nodes_doc["home_node"] = g.home_node();
    nodes_doc["nodes"] = ordered_json::array();
    for (const auto& n : g.nodes()) {
        ordered_json item;
        item["node_id"] = n.node_id;
        item["name"] = n.name;
        item["description"] = n.description;
        item["url"] = n.url;
        nodes_doc["nodes"].push_back(std::move(item));
    }

    ordered_json adj_doc;
    adj_doc["graph_id"] = g.graph_id();
    adj_doc["edges"] = ordered_json::array();
    for (const auto& e : g.edges()) {
        ordered_json item;
        item["src"] = e.src;
        item["tgt"] = e.tgt;
        item["action"] = e.action;
        item["kind"] = to_string(e.kind);
        if (e.detail) item["detail"] = *e.detail;
        adj_doc["edges"].push_back(std::move(item));
    }
    constexpr auto replace = ordered_json::error_handler_t::replace;
    return {nodes_doc.dump(2, ' ', false, replace) + "\n", adj_doc.dump(2, ' ', false, replace) + "\n"};
}

void save_graph_files(const StateActionGraph& g, const std::string& nodes_path,
                      const std::string& adjacency_path) {
    auto files = save_graph(g);
    std::ofstream nodes(nodes_path, std::ios::binary | std::ios::trunc);
    std::ofstream adj(adjacency_path, std::ios::binary | std::ios::trunc);
    if (!nodes || !adj) throw Error("io_error", "cannot write graph files");
    nodes << files.nodes_json;
    adj << files.adjacency_json;
}

}  // namespace grag
