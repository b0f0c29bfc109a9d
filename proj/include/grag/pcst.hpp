#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "grag/graph.hpp"
#include "grag/retrieval.hpp"

namespace grag {

// Undirected prize-collecting Steiner tree instance, single cluster.
//
// The objective of a connected subgraph S (an edge subset plus its endpoints,
// or a single node when S has no edges) is
//
//     sum of node prizes over V_S + sum of (edge prize - edge cost) over E_S.
struct PcstEdge {
    std::size_t u = 0;
    std::size_t v = 0;
    double cost = 1.0;
    double prize = 0.0;
};

struct PcstInstance {
    std::vector<double> node_prizes;
    std::vector<PcstEdge> edges;
    std::optional<std::size_t> root;

    std::size_t node_count() const { return node_prizes.size(); }
    // Costs > 0, prizes >= 0 and finite, endpoints and root in range.
    void validate() const;
};

// Result over the instance it was computed for: node indices and edge
// indices, both ascending.
struct PcstSolution {
    std::vector<std::size_t> nodes;
    std::vector<std::size_t> edges;
    double objective = 0.0;
};

// Edge-prize folding. Every edge with a positive prize becomes a virtual node
// carrying that prize: an ordinary edge (a, b) is subdivided into (a, x) and
// (x, b) with half the cost each; a self-loop (a, a) becomes a single pendant
// edge (a, x) with the full cost. A virtual node stands for its original edge
// and is only meaningful with all of its folded edges selected.
struct FoldedInstance {
    PcstInstance instance;  // every edge prize is zero
    std::size_t original_node_count = 0;
    // Folded edge -> original edge it belongs to.
    std::vector<std::size_t> edge_origin;
    // Virtual node (index original_node_count + i) -> original edge.
    std::vector<std::size_t> virtual_origin;

    bool is_virtual(std::size_t node) const { return node >= original_node_count; }
};

FoldedInstance fold_edge_prizes(const PcstInstance& inst);

// Objective of the subgraph made of `edges` plus `nodes`.
double pcst_objective(const PcstInstance& inst, const std::vector<std::size_t>& nodes,
                      const std::vector<std::size_t>& edges);

// Union-find check that `edges` connect all of `nodes` (endpoints must be in `nodes`).
bool pcst_connected(const PcstInstance& inst, const std::vector<std::size_t>& nodes,
                    const std::vector<std::size_t>& edges);

inline constexpr std::size_t kExactFoldedEdgeLimit = 18;

// Globally optimal connected subgraph containing the root (or, unrooted, the
// best over all connected subgraphs and the empty one). Ties prefer fewer
// edges, then the lexicographically smallest node set. Throws SizeBoundError
// when the folded instance has more than `folded_edge_limit` edges.
PcstSolution solve_exact(const PcstInstance& inst, std::size_t folded_edge_limit = kExactFoldedEdgeLimit);

// Goemans-Williamson moat growing with strong pruning, for any size.
PcstSolution solve_approx(const PcstInstance& inst);

// --- state-action graph adapter ------------------------------------------------

struct PcstConfig {
    double edge_cost = 1.0;
    std::size_t exact_edge_limit = kExactFoldedEdgeLimit;
};

// PCST instance over the undirected projection of a state-action graph:
// parallel and antiparallel edges are collapsed to one (min cost, max prize);
// prized self-loops are kept, unprized ones dropped.
struct ProjectedInstance {
    PcstInstance instance;
    std::vector<NodeId> node_of;                           // instance node -> node_id
    std::vector<std::vector<std::size_t>> graph_edges_of;  // instance edge -> graph edge indices
};

ProjectedInstance project_instance(const StateActionGraph& g, const RetrievalResult& r, const PcstConfig& cfg);

struct Subgraph {
    std::vector<NodeId> nodes;       // ascending
    std::vector<std::size_t> edges;  // indices into the graph's edge list, ascending
    double objective = 0.0;
    bool connected = true;
    bool exact = false;  // which solver produced it
};

Subgraph extract_subgraph(const StateActionGraph& g, const RetrievalResult& r, const PcstConfig& cfg = {});

// Independent check that the undirected projection of the subgraph is connected.
bool subgraph_connected(const StateActionGraph& g, const Subgraph& sg);

// Instance file used by the pcst-solve tool:
//   {"node_prizes": [..], "edges": [{"u", "v", "cost", "prize"}], "root": int|null}
PcstInstance pcst_instance_from_json(const std::string& text);
std::string pcst_instance_to_json(const PcstInstance& inst);
std::string pcst_solution_to_json(const PcstSolution& s);

}  // namespace grag
