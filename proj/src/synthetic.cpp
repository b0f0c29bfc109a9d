#include "grag/synthetic.hpp"

#include <array>
#include <random>
#include <set>
#include <tuple>

#include "grag/error.hpp"

namespace grag {

namespace {

constexpr std::array<std::string_view, 20> kModules{
    "Leads",    "Contacts", "Accounts", "Opportunities", "Invoices", "Orders",   "Products",
    "Reports",  "Campaigns", "Cases",   "Tasks",         "Calendar", "Users",    "Settings",
    "Quotes",   "Contracts", "Projects", "Tickets",      "Suppliers", "Payments"};

struct PageKind {
    std::string_view page;
    std::string_view verb;
    EdgeKind kind;
};

constexpr std::array<PageKind, 10> kPages{{{"List", "browse all", EdgeKind::menu},
                                          {"Details", "view one of the", EdgeKind::link},
                                          {"Edit Form", "edit fields of the", EdgeKind::form},
                                          {"Creation", "create new", EdgeKind::button},
                                          {"Settings", "configure", EdgeKind::menu},
                                          {"Import", "import", EdgeKind::button},
                                          {"Export", "export", EdgeKind::button},
                                          {"Dashboard", "monitor", EdgeKind::link},
                                          {"Search", "search", EdgeKind::dropdown},
                                          {"Archive", "archive old", EdgeKind::button}}};

}  // namespace

StateActionGraph synthetic_graph(const SyntheticSpec& spec) {
    if (spec.node_count == 0) throw ContractViolation("synthetic graph needs at least one node");
    if (spec.edge_count + 1 < spec.node_count) {
        throw ContractViolation("synthetic graph needs at least node_count - 1 edges to be connected");
    }
    std::mt19937_64 rng(spec.seed);
    const auto uniform = [&](std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng); };

    std::vector<NodeRecord> nodes;
    std::vector<std::size_t> page_of(spec.node_count);
    nodes.push_back({0, "Home", "Home page with the main navigation of the application", "/"});
    for (std::size_t i = 1; i < spec.node_count; ++i) {
        const auto module = kModules[uniform(kModules.size())];
        page_of[i] = uniform(kPages.size());
        const auto& page = kPages[page_of[i]];
        std::string name = std::string(module) + " " + std::string(page.page);
        std::string description = name + " — page to " + std::string(page.verb) + " " + std::string(module);
        nodes.push_back({static_cast<NodeId>(i), name, description, "/p/" + std::to_string(i)});
    }

    std::vector<EdgeRecord> edges;
    std::set<std::tuple<NodeId, NodeId, std::string>> seen;
    const auto add = [&](std::size_t src, std::size_t tgt) {
        const auto& page = kPages[page_of[tgt]];
        EdgeRecord e{static_cast<NodeId>(src), static_cast<NodeId>(tgt), "Open " + nodes[tgt].name,
                     tgt == 0 ? EdgeKind::link : page.kind, std::nullopt};
        if (src == tgt) e.action = "Refresh " + nodes[src].name;
        if (!seen.emplace(e.src, e.tgt, e.action).second) return false;
        edges.push_back(std::move(e));
        return true;
    };
    for (std::size_t i = 1; i < spec.node_count; ++i) add(uniform(i), i);
    // Extra edges; the attempt cap only matters for tiny dense requests.
    for (std::size_t attempts = 0; edges.size() < spec.edge_count && attempts < 100 * spec.edge_count + 1000;
         ++attempts) {
        add(uniform(spec.node_count), uniform(spec.node_count));
    }
    if (edges.size() < spec.edge_count) throw ContractViolation("synthetic graph is too dense for its node count");
    return StateActionGraph(spec.graph_id, 0, std::move(nodes), std::move(edges));
}

}  // namespace grag
