#include "grag/retrieval.hpp"

#include "grag/error.hpp"
#include "grag/kernels.hpp"

namespace grag {

double prize_of_rank(std::size_t k, std::size_t rank) {
    if (rank >= k) {
        throw ContractViolation("rank " + std::to_string(rank) + " is outside the top " + std::to_string(k));
    }
    return static_cast<double>(k - rank);
}

RetrievalResult retrieve(const GraphEmbeddings& ge, const EmbeddingVector& query_vector, std::size_t k,
                         std::optional<NodeId> current_node, ScoreBackend backend) {
    if (k < 1) throw ContractViolation("k must be at least 1");
    if (query_vector.dim() != ge.dim()) {
        throw ContractViolation("query dimension " + std::to_string(query_vector.dim()) +
                                " does not match graph embeddings dimension " + std::to_string(ge.dim()));
    }
    if (current_node && !ge.row_of(*current_node)) {
        throw ValidationError("unknown current_node " + std::to_string(*current_node));
    }

    const auto score = backend == ScoreBackend::parallel ? kernels::score_rows_parallel : kernels::score_rows_serial;
    std::vector<double> node_scores(ge.node_count());
    std::vector<double> edge_scores(ge.edge_count());
    score(ge.node_matrix(), ge.dim(), query_vector.values(), node_scores);
    score(ge.edge_matrix(), ge.dim(), query_vector.values(), edge_scores);

    RetrievalResult r;
    const auto node_rows = kernels::top_k_rows(node_scores, k);
    for (std::size_t rank = 0; rank < node_rows.size(); ++rank) {
        const auto id = ge.node_ids()[node_rows[rank]];
        r.top_nodes.push_back({id, node_scores[node_rows[rank]]});
        r.node_prizes[id] = prize_of_rank(k, rank);
    }
    const auto edge_rows = kernels::top_k_rows(edge_scores, k);
    for (std::size_t rank = 0; rank < edge_rows.size(); ++rank) {
        r.top_edges.push_back({edge_rows[rank], edge_scores[edge_rows[rank]]});
        r.edge_prizes[edge_rows[rank]] = prize_of_rank(k, rank);
    }
    if (current_node) {
        r.pinned_node = current_node;
        r.node_prizes[*current_node] = pinned_prize(k);
    }
    return r;
}

}  // namespace grag
