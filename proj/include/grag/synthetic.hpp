#pragma once

#include <cstdint>
#include <string>

#include "grag/graph.hpp"

namespace grag {

// Deterministic CRM-like state-action graph for fixtures and load tests:
// a random spanning tree from home (so every node is reachable) plus extra
// random edges up to `edge_count`. Node ids are 0..node_count-1, home is 0.
struct SyntheticSpec {
    std::string graph_id = "synthetic";
    std::size_t node_count = 120;
    std::size_t edge_count = 140;
    std::uint64_t seed = 7;
};

// Throws ContractViolation when edge_count < node_count - 1.
StateActionGraph synthetic_graph(const SyntheticSpec& spec);

}  // namespace grag
