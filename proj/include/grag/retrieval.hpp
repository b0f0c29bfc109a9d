#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "grag/embedding.hpp"
#include "grag/graph.hpp"

namespace grag {

struct ScoredNode {
    NodeId node_id;
    double similarity;
};

struct ScoredEdge {
    std::size_t edge_index;
    double similarity;
};

struct RetrievalResult {
    std::string query;
    std::vector<ScoredNode> top_nodes;  // similarity descending, ties by ascending id
    std::vector<ScoredEdge> top_edges;  // similarity descending, ties by ascending index
    std::map<NodeId, double> node_prizes;
    std::map<std::size_t, double> edge_prizes;
    std::optional<NodeId> pinned_node;
};

// Prize of the element at 0-based similarity `rank` among the top k: k - rank.
// Throws ContractViolation unless 0 <= rank < k.
double prize_of_rank(std::size_t k, std::size_t rank);

// Prize given to the user's current node; strictly above every rank prize.
inline double pinned_prize(std::size_t k) { return static_cast<double>(k) + 1.0; }

enum class ScoreBackend { serial, parallel };

// Exact top-k by cosine over all nodes and all edges, rank prizes, and the
// dominating prize for `current_node` when given.
RetrievalResult retrieve(const GraphEmbeddings& ge, const EmbeddingVector& query_vector, std::size_t k,
                         std::optional<NodeId> current_node = std::nullopt,
                         ScoreBackend backend = ScoreBackend::parallel);

}  // namespace grag
