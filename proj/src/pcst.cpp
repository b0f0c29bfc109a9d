#include "grag/pcst.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <numeric>
#include <queue>

#include <json.hpp>

#include "grag/error.hpp"

namespace grag {

namespace {

constexpr double kEps = 1e-9;
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

struct UnionFind {
    std::vector<std::size_t> parent;
    explicit UnionFind(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), std::size_t{0}); }
    std::size_t find(std::size_t x) {
        while (parent[x] != x) {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        return x;
    }
    void unite(std::size_t a, std::size_t b) { parent[find(a)] = find(b); }
};

// Solution ordering: higher objective, then fewer edges, then smaller node set.
bool better(const PcstSolution& a, const PcstSolution& b) {
    if (a.objective > b.objective + kEps) return true;
    if (a.objective < b.objective - kEps) return false;
    if (a.edges.size() != b.edges.size()) return a.edges.size() < b.edges.size();
    return a.nodes < b.nodes;
}

double scale_of(const PcstInstance& inst) {
    double s = 1.0;
    for (double p : inst.node_prizes) s = std::max(s, p);
    for (const auto& e : inst.edges) s = std::max({s, e.cost, e.prize});
    return s;
}

// Maps a selection on the folded instance back to the original instance.
PcstSolution unfold(const FoldedInstance& f, const PcstInstance& original, const std::vector<char>& node_in,
                    const std::vector<std::size_t>& folded_edges) {
    PcstSolution s;
    for (std::size_t v = 0; v < f.original_node_count; ++v) {
        if (node_in[v]) s.nodes.push_back(v);
    }
    for (auto fe : folded_edges) s.edges.push_back(f.edge_origin[fe]);
    std::sort(s.edges.begin(), s.edges.end());
    s.edges.erase(std::unique(s.edges.begin(), s.edges.end()), s.edges.end());
    s.objective = pcst_objective(original, s.nodes, s.edges);
    return s;
}

PcstSolution single_node(const PcstInstance& inst, std::size_t v) {
    return PcstSolution{{v}, {}, inst.node_prizes[v]};
}

}  // namespace

void PcstInstance::validate() const {
    for (std::size_t v = 0; v < node_prizes.size(); ++v) {
        if (!std::isfinite(node_prizes[v]) || node_prizes[v] < 0.0) {
            throw ValidationError("node " + std::to_string(v) + " has a negative or non-finite prize");
        }
    }
    for (std::size_t i = 0; i < edges.size(); ++i) {
        const auto& e = edges[i];
        if (e.u >= node_count() || e.v >= node_count()) {
            throw ValidationError("edge " + std::to_string(i) + " references a missing node");
        }
        if (!std::isfinite(e.cost) || e.cost <= 0.0) {
            throw ValidationError("edge " + std::to_string(i) + " must have a positive cost");
        }
        if (!std::isfinite(e.prize) || e.prize < 0.0) {
            throw ValidationError("edge " + std::to_string(i) + " has a negative or non-finite prize");
        }
    }
    if (root && *root >= node_count()) throw ValidationError("root is not a node of the instance");
}

FoldedInstance fold_edge_prizes(const PcstInstance& inst) {
    inst.validate();
    FoldedInstance f;
    f.original_node_count = inst.node_count();
    f.instance.node_prizes = inst.node_prizes;
    f.instance.root = inst.root;
    for (std::size_t i = 0; i < inst.edges.size(); ++i) {
        const auto& e = inst.edges[i];
        if (e.prize <= 0.0) {
            f.instance.edges.push_back({e.u, e.v, e.cost, 0.0});
            f.edge_origin.push_back(i);
            continue;
        }
        const auto x = f.instance.node_prizes.size();
        f.instance.node_prizes.push_back(e.prize);
        f.virtual_origin.push_back(i);
        if (e.u == e.v) {
            f.instance.edges.push_back({e.u, x, e.cost, 0.0});
            f.edge_origin.push_back(i);
        } else {
            f.instance.edges.push_back({e.u, x, e.cost / 2.0, 0.0});
            f.edge_origin.push_back(i);
            f.instance.edges.push_back({x, e.v, e.cost / 2.0, 0.0});
            f.edge_origin.push_back(i);
        }
    }
    return f;
}

double pcst_objective(const PcstInstance& inst, const std::vector<std::size_t>& nodes,
                      const std::vector<std::size_t>& edges) {
    double total = 0.0;
    for (auto v : nodes) total += inst.node_prizes.at(v);
    for (auto e : edges) total += inst.edges.at(e).prize - inst.edges.at(e).cost;
    return total;
}

bool pcst_connected(const PcstInstance& inst, const std::vector<std::size_t>& nodes,
                    const std::vector<std::size_t>& edges) {
    if (nodes.empty()) return edges.empty();
    std::vector<char> member(inst.node_count(), 0);
    for (auto v : nodes) member.at(v) = 1;
    UnionFind uf(inst.node_count());
    for (auto e : edges) {
        const auto& edge = inst.edges.at(e);
        if (!member[edge.u] || !member[edge.v]) return false;
        uf.unite(edge.u, edge.v);
    }
    const auto root = uf.find(nodes.front());
    return std::all_of(nodes.begin(), nodes.end(), [&](std::size_t v) { return uf.find(v) == root; });
}

// --- exact ----------------------------------------------------------------------

namespace {

// Enumerates every connected folded edge subset containing a start node by
// deciding edges in index order as they become incident to the current node
// set. A subset is reached by exactly one include/exclude sequence. Branches
// whose optimistic bound cannot reach the incumbent are cut, as are branches
// that would leave a subdivided edge half-selected.
class ExactSearch {
public:
    ExactSearch(const FoldedInstance& f, const PcstInstance& original) : f_(f), original_(original) {
        const auto& inst = f_.instance;
        incident_.resize(inst.node_count());
        for (std::size_t e = 0; e < inst.edges.size(); ++e) {
            incident_[inst.edges[e].u].push_back(e);
            if (inst.edges[e].v != inst.edges[e].u) incident_[inst.edges[e].v].push_back(e);
        }
        // Folded edges of each virtual node.
        halves_.resize(inst.node_count());
        for (std::size_t e = 0; e < inst.edges.size(); ++e) {
            for (auto v : {inst.edges[e].u, inst.edges[e].v}) {
                if (f_.is_virtual(v)) halves_[v].push_back(e);
            }
        }
    }

    void search_from(std::size_t start, std::size_t min_original) {
        const auto& inst = f_.instance;
        state_.assign(inst.edges.size(), 0);
        in_set_.assign(inst.node_count(), 0);
        banned_.assign(inst.node_count(), 0);
        for (std::size_t v = 0; v < min_original; ++v) banned_[v] = 1;
        for (std::size_t e = 0; e < inst.edges.size(); ++e) {
            if (banned_[inst.edges[e].u] || banned_[inst.edges[e].v]) state_[e] = -1;
        }
        in_set_[start] = 1;
        chosen_.clear();
        value_ = inst.node_prizes[start];
        recurse();
    }

    void offer(PcstSolution s) {
        if (!best_ || better(s, *best_)) best_ = std::move(s);
    }

    const std::optional<PcstSolution>& best() const { return best_; }

private:
    double upper_bound() {
        const auto& inst = f_.instance;
        double bound = value_;
        std::vector<char> seen(in_set_.begin(), in_set_.end());
        std::vector<std::size_t> stack;
        for (std::size_t v = 0; v < seen.size(); ++v) {
            if (seen[v]) stack.push_back(v);
        }
        while (!stack.empty()) {
            auto v = stack.back();
            stack.pop_back();
            for (auto e : incident_[v]) {
                if (state_[e] != 0) continue;
                auto w = inst.edges[e].u == v ? inst.edges[e].v : inst.edges[e].u;
                if (!seen[w]) {
                    seen[w] = 1;
                    bound += inst.node_prizes[w];
                    stack.push_back(w);
                }
            }
        }
        return bound;
    }

    // A virtual node in the set with an excluded half can never become valid.
    bool broken_virtual(std::size_t e) const {
        const auto& edge = f_.instance.edges[e];
        for (auto v : {edge.u, edge.v}) {
            if (f_.is_virtual(v) && in_set_[v]) return true;
        }
        return false;
    }

    void recurse() {
        if (best_ && upper_bound() < best_->objective - kEps) return;

        const auto& inst = f_.instance;
        std::size_t next = inst.edges.size();
        for (std::size_t e = 0; e < inst.edges.size(); ++e) {
            if (state_[e] == 0 && (in_set_[inst.edges[e].u] || in_set_[inst.edges[e].v])) {
                next = e;
                break;
            }
        }
        if (next == inst.edges.size()) {
            evaluate();
            return;
        }

        const auto& edge = inst.edges[next];
        // Include.
        state_[next] = 1;
        chosen_.push_back(next);
        std::size_t added = inst.node_count();
        if (!in_set_[edge.u]) added = edge.u;
        if (!in_set_[edge.v]) added = edge.v;
        if (added != inst.node_count()) {
            in_set_[added] = 1;
            value_ += inst.node_prizes[added];
        }
        value_ -= edge.cost;
        recurse();
        value_ += edge.cost;
        if (added != inst.node_count()) {
            in_set_[added] = 0;
            value_ -= inst.node_prizes[added];
        }
        chosen_.pop_back();

        // Exclude.
        state_[next] = -1;
        if (!broken_virtual(next)) recurse();
        state_[next] = 0;
    }

    void evaluate() {
        if (best_ && value_ < best_->objective - kEps) return;
        for (std::size_t v = f_.original_node_count; v < in_set_.size(); ++v) {
            if (!in_set_[v]) continue;
            for (auto e : halves_[v]) {
                if (state_[e] != 1) return;
            }
        }
        offer(unfold(f_, original_, in_set_, chosen_));
    }

    const FoldedInstance& f_;
    const PcstInstance& original_;
    std::vector<std::vector<std::size_t>> incident_;
    std::vector<std::vector<std::size_t>> halves_;
    std::vector<signed char> state_;
    std::vector<char> in_set_;
    std::vector<char> banned_;
    std::vector<std::size_t> chosen_;
    double value_ = 0.0;
    std::optional<PcstSolution> best_;
};

}  // namespace

PcstSolution solve_exact(const PcstInstance& inst, std::size_t folded_edge_limit) {
    const auto f = fold_edge_prizes(inst);
    if (f.instance.edges.size() > folded_edge_limit) {
        throw SizeBoundError("exact PCST supports at most " + std::to_string(folded_edge_limit) +
                             " edges after folding, instance has " + std::to_string(f.instance.edges.size()) +
                             "; use solve_approx");
    }
    ExactSearch search(f, inst);
    if (inst.root) {
        search.search_from(*inst.root, 0);
    } else {
        search.offer(PcstSolution{});
        // Rooting at each node while banning smaller ones visits every subset once.
        for (std::size_t r = 0; r < inst.node_count(); ++r) search.search_from(r, r);
    }
    return *search.best();
}

// --- approximation -----------------------------------------------------------

namespace {

using TreeAdjacency = std::vector<std::vector<std::pair<std::size_t, std::size_t>>>;  // (neighbor, edge)

// Goemans-Williamson growth. Returns the edges that became tight and merged
// two clusters (a forest). Clusters are tracked with union-find; each node's
// dual sum is rel[v] + the offset of its cluster, so a merge only rewrites
// the smaller member list. Edge events are recomputed lazily when popped.
std::vector<std::size_t> gw_forest(const PcstInstance& inst) {
    const auto n = inst.node_count();
    const double tol = kEps * scale_of(inst);

    struct Cluster {
        bool active = false;
        bool has_root = false;
        double start = 0.0;
        double off_base = 0.0;
        double rem_base = 0.0;
        std::vector<std::size_t> members;
    };
    std::vector<Cluster> clusters(n);
    std::vector<double> rel(n, 0.0);
    std::vector<std::vector<std::size_t>> incident(n);
    for (std::size_t e = 0; e < inst.edges.size(); ++e) {
        if (inst.edges[e].u == inst.edges[e].v) continue;
        incident[inst.edges[e].u].push_back(e);
        incident[inst.edges[e].v].push_back(e);
    }
    UnionFind uf(n);

    struct Event {
        double time;
        int type;  // 0 = edge tight, 1 = cluster exhausted
        std::size_t id;
        bool operator>(const Event& o) const {
            if (time != o.time) return time > o.time;
            if (type != o.type) return type > o.type;
            return id > o.id;
        }
    };
    std::priority_queue<Event, std::vector<Event>, std::greater<>> events;

    const auto offset = [&](const Cluster& c, double t) { return c.off_base + (c.active ? t - c.start : 0.0); };
    const auto remaining = [&](const Cluster& c, double t) { return c.rem_base - (c.active ? t - c.start : 0.0); };
    const auto dual = [&](std::size_t v, double t) { return rel[v] + offset(clusters[uf.find(v)], t); };
    const auto freeze = [&](Cluster& c, double t) {
        c.off_base = offset(c, t);
        c.rem_base = std::max(0.0, remaining(c, t));
        c.start = t;
    };
    const auto push_edge = [&](std::size_t e, double t) {
        const auto& edge = inst.edges[e];
        auto cu = uf.find(edge.u);
        auto cv = uf.find(edge.v);
        if (cu == cv) return;
        const int rate = int(clusters[cu].active) + int(clusters[cv].active);
        if (rate == 0) return;
        const double slack = edge.cost - dual(edge.u, t) - dual(edge.v, t);
        events.push({t + std::max(0.0, slack) / rate, 0, e});
    };

    std::size_t active_count = 0;
    for (std::size_t v = 0; v < n; ++v) {
        auto& c = clusters[v];
        c.members = {v};
        c.has_root = inst.root && *inst.root == v;
        c.active = !c.has_root && inst.node_prizes[v] > tol;
        c.rem_base = c.active ? inst.node_prizes[v] : 0.0;
        if (c.active) {
            ++active_count;
            events.push({c.rem_base, 1, v});
        }
    }
    for (std::size_t e = 0; e < inst.edges.size(); ++e) push_edge(e, 0.0);

    std::vector<std::size_t> forest;
    while (!events.empty() && active_count > 0) {
        const auto ev = events.top();
        events.pop();
        const double t = ev.time;

        if (ev.type == 1) {
            auto& c = clusters[ev.id];
            if (uf.find(ev.id) != ev.id || !c.active) continue;
            if (remaining(c, t) > tol) continue;  // budget grew by a merge; a later event exists
            freeze(c, t);
            c.active = false;
            c.rem_base = 0.0;
            --active_count;
            continue;
        }

        const auto& edge = inst.edges[ev.id];
        auto a = uf.find(edge.u);
        auto b = uf.find(edge.v);
        if (a == b) continue;
        const double slack = edge.cost - dual(edge.u, t) - dual(edge.v, t);
        if (slack > tol * std::max(1.0, edge.cost)) {
            const int rate = int(clusters[a].active) + int(clusters[b].active);
            if (rate > 0) events.push({t + slack / rate, 0, ev.id});
            continue;
        }

        // Merge a and b along the tight edge.
        freeze(clusters[a], t);
        freeze(clusters[b], t);
        const bool a_active = clusters[a].active;
        const bool b_active = clusters[b].active;
        std::vector<std::size_t> newly_active;
        if (!a_active) newly_active.insert(newly_active.end(), clusters[a].members.begin(), clusters[a].members.end());
        if (!b_active) newly_active.insert(newly_active.end(), clusters[b].members.begin(), clusters[b].members.end());

        auto big = a;
        auto small = b;
        if (clusters[b].members.size() > clusters[a].members.size() ||
            (clusters[b].members.size() == clusters[a].members.size() && b < a)) {
            std::swap(big, small);
        }
        auto& B = clusters[big];
        auto& S = clusters[small];
        for (auto v : S.members) {
            rel[v] += S.off_base - B.off_base;
            B.members.push_back(v);
        }
        S.members.clear();
        S.members.shrink_to_fit();
        uf.parent[small] = big;

        B.has_root = B.has_root || S.has_root;
        // Inactive clusters hold no budget.
        B.rem_base = (a_active ? clusters[a].rem_base : 0.0) + (b_active ? clusters[b].rem_base : 0.0);
        B.start = t;
        const bool merged_active = !B.has_root && B.rem_base > tol;
        active_count -= std::size_t(a_active) + std::size_t(b_active);
        B.active = merged_active;
        S.active = false;
        forest.push_back(ev.id);

        if (merged_active) {
            ++active_count;
            events.push({t + B.rem_base, 1, big});
            for (auto v : newly_active) {
                for (auto e : incident[v]) push_edge(e, t);
            }
        }
    }
    return forest;
}

// Shortest-path tree from `source` over the whole instance (ties by index).
std::vector<std::size_t> shortest_path_tree(const PcstInstance& inst, const TreeAdjacency& graph, std::size_t source) {
    const auto n = inst.node_count();
    std::vector<double> dist(n, std::numeric_limits<double>::infinity());
    std::vector<std::size_t> via(n, inst.edges.size());
    using Item = std::pair<double, std::size_t>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
    dist[source] = 0.0;
    pq.push({0.0, source});
    while (!pq.empty()) {
        auto [d, v] = pq.top();
        pq.pop();
        if (d > dist[v]) continue;
        for (auto [w, e] : graph[v]) {
            const double nd = d + inst.edges[e].cost;
            if (nd < dist[w] - kEps) {
                dist[w] = nd;
                via[w] = e;
                pq.push({nd, w});
            }
        }
    }
    std::vector<std::size_t> tree;
    for (std::size_t v = 0; v < n; ++v) {
        if (via[v] != inst.edges.size()) tree.push_back(via[v]);
    }
    return tree;
}

TreeAdjacency adjacency_of(const PcstInstance& inst, const std::vector<std::size_t>& edges) {
    TreeAdjacency adj(inst.node_count());
    for (auto e : edges) {
        const auto& edge = inst.edges[e];
        if (edge.u == edge.v) continue;
        adj[edge.u].push_back({edge.v, e});
        adj[edge.v].push_back({edge.u, e});
    }
    return adj;
}

// Strong pruning: the best subtree of `tree` containing `root`. A virtual node
// that subdivides an edge must keep its far endpoint, and cannot be a leaf.
PcstSolution prune_tree(const FoldedInstance& f, const PcstInstance& original, const TreeAdjacency& tree,
                        std::size_t root) {
    const auto& inst = f.instance;
    const auto n = inst.node_count();
    std::vector<std::size_t> order;
    std::vector<std::size_t> parent(n, n);
    std::vector<std::size_t> parent_edge(n, inst.edges.size());
    std::vector<char> seen(n, 0);
    std::vector<std::size_t> stack{root};
    seen[root] = 1;
    while (!stack.empty()) {
        auto v = stack.back();
        stack.pop_back();
        order.push_back(v);
        for (auto [w, e] : tree[v]) {
            if (seen[w]) continue;
            seen[w] = 1;
            parent[w] = v;
            parent_edge[w] = e;
            stack.push_back(w);
        }
    }

    const auto subdivides = [&](std::size_t v) {
        return f.is_virtual(v) && original.edges[f.virtual_origin[v - f.original_node_count]].u !=
                                      original.edges[f.virtual_origin[v - f.original_node_count]].v;
    };

    std::vector<double> value(n, 0.0);
    std::vector<char> keep(n, 0);  // keep[w]: edge parent[w]-w is part of the subtree
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        const auto v = *it;
        if (subdivides(v) && v != root) {
            value[v] = kNegInf;
            for (auto [w, e] : tree[v]) {
                if (parent[w] != v || w == parent[v]) continue;
                if (value[w] == kNegInf) continue;
                value[v] = inst.node_prizes[v] - inst.edges[e].cost + value[w];
                keep[w] = 1;
            }
            continue;
        }
        double total = inst.node_prizes[v];
        for (auto [w, e] : tree[v]) {
            if (parent[w] != v || w == parent[v]) continue;
            const double gain = value[w] - inst.edges[e].cost;
            if (gain > kEps) {
                total += gain;
                keep[w] = 1;
            }
        }
        value[v] = total;
    }

    std::vector<char> node_in(n, 0);
    std::vector<std::size_t> edges;
    node_in[root] = 1;
    for (auto v : order) {
        if (v == root || !node_in[parent[v]] || !keep[v]) continue;
        node_in[v] = 1;
        edges.push_back(parent_edge[v]);
    }
    return unfold(f, original, node_in, edges);
}

// Adds prized original edges whose endpoints are both selected and whose prize exceeds their cost.
void add_profitable_chords(const PcstInstance& original, PcstSolution& s) {
    std::vector<char> member(original.node_count(), 0);
    for (auto v : s.nodes) member[v] = 1;
    std::vector<char> chosen(original.edges.size(), 0);
    for (auto e : s.edges) chosen[e] = 1;
    bool changed = false;
    for (std::size_t e = 0; e < original.edges.size(); ++e) {
        const auto& edge = original.edges[e];
        if (chosen[e] || !member[edge.u] || !member[edge.v]) continue;
        if (edge.prize - edge.cost > kEps) {
            s.edges.push_back(e);
            changed = true;
        }
    }
    if (changed) {
        std::sort(s.edges.begin(), s.edges.end());
        s.objective = pcst_objective(original, s.nodes, s.edges);
    }
}

}  // namespace

PcstSolution solve_approx(const PcstInstance& inst) {
    const auto f = fold_edge_prizes(inst);
    const auto& folded = f.instance;
    const auto forest = adjacency_of(folded, gw_forest(folded));
    std::vector<std::size_t> all_edges(folded.edges.size());
    std::iota(all_edges.begin(), all_edges.end(), std::size_t{0});
    const auto whole = adjacency_of(folded, all_edges);

    std::optional<PcstSolution> best;
    const auto offer = [&](PcstSolution s) {
        add_profitable_chords(inst, s);
        if (!best || better(s, *best)) best = std::move(s);
    };
    const auto from_root = [&](std::size_t r) {
        offer(single_node(inst, r));
        offer(prune_tree(f, inst, forest, r));
        offer(prune_tree(f, inst, adjacency_of(folded, shortest_path_tree(folded, whole, r)), r));
    };

    if (inst.root) {
        from_root(*inst.root);
    } else {
        offer(PcstSolution{});
        // Any solution with positive value holds a prized node or both ends of a prized edge.
        std::vector<char> candidate(inst.node_count(), 0);
        for (std::size_t v = 0; v < inst.node_count(); ++v) candidate[v] = inst.node_prizes[v] > 0.0;
        for (const auto& e : inst.edges) {
            if (e.prize > 0.0) candidate[e.u] = candidate[e.v] = 1;
        }
        for (std::size_t v = 0; v < inst.node_count(); ++v) {
            if (candidate[v]) from_root(v);
        }
    }
    return *best;
}

// --- state-action graph adapter ----------------------------------------------

ProjectedInstance project_instance(const StateActionGraph& g, const RetrievalResult& r, const PcstConfig& cfg) {
    if (!(cfg.edge_cost > 0.0)) throw ContractViolation("edge cost must be positive");
    ProjectedInstance p;
    p.instance.node_prizes.assign(g.nodes().size(), 0.0);
    for (const auto& n : g.nodes()) p.node_of.push_back(n.node_id);
    for (const auto& [id, prize] : r.node_prizes) {
        auto idx = g.index_of(id);
        if (!idx) throw ValidationError("retrieval prize for unknown node " + std::to_string(id));
        p.instance.node_prizes[*idx] = prize;
    }
    if (r.pinned_node) {
        auto idx = g.index_of(*r.pinned_node);
        if (!idx) throw ValidationError("pinned node " + std::to_string(*r.pinned_node) + " is not in the graph");
        p.instance.root = *idx;
    }

    std::map<std::pair<std::size_t, std::size_t>, std::size_t> pair_edge;
    for (std::size_t e = 0; e < g.edges().size(); ++e) {
        const auto& edge = g.edges()[e];
        const auto a = *g.index_of(edge.src);
        const auto b = *g.index_of(edge.tgt);
        const auto it = r.edge_prizes.find(e);
        const double prize = it == r.edge_prizes.end() ? 0.0 : it->second;
        if (a == b) {
            if (prize <= 0.0) continue;
            p.instance.edges.push_back({a, a, cfg.edge_cost, prize});
            p.graph_edges_of.push_back({e});
            continue;
        }
        const auto key = std::minmax(a, b);
        auto [slot, inserted] = pair_edge.emplace(key, p.instance.edges.size());
        if (inserted) {
            p.instance.edges.push_back({key.first, key.second, cfg.edge_cost, prize});
            p.graph_edges_of.push_back({e});
        } else {
            auto& merged = p.instance.edges[slot->second];
            merged.cost = std::min(merged.cost, cfg.edge_cost);
            merged.prize = std::max(merged.prize, prize);
            p.graph_edges_of[slot->second].push_back(e);
        }
    }
    return p;
}

Subgraph extract_subgraph(const StateActionGraph& g, const RetrievalResult& r, const PcstConfig& cfg) {
    const auto p = project_instance(g, r, cfg);
    const auto folded_edges = fold_edge_prizes(p.instance).instance.edges.size();
    Subgraph sg;
    PcstSolution s;
    if (folded_edges <= cfg.exact_edge_limit) {
        s = solve_exact(p.instance, cfg.exact_edge_limit);
        sg.exact = true;
    } else {
        s = solve_approx(p.instance);
    }
    for (auto v : s.nodes) sg.nodes.push_back(p.node_of[v]);
    for (auto e : s.edges) {
        sg.edges.insert(sg.edges.end(), p.graph_edges_of[e].begin(), p.graph_edges_of[e].end());
    }
    std::sort(sg.nodes.begin(), sg.nodes.end());
    std::sort(sg.edges.begin(), sg.edges.end());
    sg.objective = s.objective;
    sg.connected = subgraph_connected(g, sg);
    return sg;
}

bool subgraph_connected(const StateActionGraph& g, const Subgraph& sg) {
    if (sg.nodes.empty()) return sg.edges.empty();
    std::map<NodeId, std::size_t> local;
    for (auto id : sg.nodes) local.emplace(id, local.size());
    UnionFind uf(local.size());
    for (auto e : sg.edges) {
        const auto& edge = g.edges()[e];
        auto a = local.find(edge.src);
        auto b = local.find(edge.tgt);
        if (a == local.end() || b == local.end()) return false;
        uf.unite(a->second, b->second);
    }
    const auto root = uf.find(0);
    for (std::size_t i = 0; i < local.size(); ++i) {
        if (uf.find(i) != root) return false;
    }
    return true;
}

// --- JSON ------------------------------------------------------------------------

PcstInstance pcst_instance_from_json(const std::string& text) {
    auto doc = nlohmann::json::parse(text, nullptr, false);
    if (doc.is_discarded() || !doc.is_object()) throw ParseError("instance file is not a JSON object");
    PcstInstance inst;
    try {
        inst.node_prizes = doc.at("node_prizes").get<std::vector<double>>();
        for (const auto& e : doc.value("edges", nlohmann::json::array())) {
            inst.edges.push_back({e.at("u").get<std::size_t>(), e.at("v").get<std::size_t>(), e.value("cost", 1.0),
                                  e.value("prize", 0.0)});
        }
        if (doc.contains("root") && !doc["root"].is_null()) inst.root = doc["root"].get<std::size_t>();
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("instance file: ") + e.what());
    }
    inst.validate();
    return inst;
}

std::string pcst_instance_to_json(const PcstInstance& inst) {
    nlohmann::ordered_json doc;
    doc["node_prizes"] = inst.node_prizes;
    doc["edges"] = nlohmann::ordered_json::array();
    for (const auto& e : inst.edges) doc["edges"].push_back({{"u", e.u}, {"v", e.v}, {"cost", e.cost}, {"prize", e.prize}});
    doc["root"] = inst.root ? nlohmann::ordered_json(*inst.root) : nlohmann::ordered_json(nullptr);
    return doc.dump(2) + "\n";
}

std::string pcst_solution_to_json(const PcstSolution& s) {
    nlohmann::ordered_json doc;
    doc["nodes"] = s.nodes;
    doc["edges"] = s.edges;
    doc["objective"] = s.objective;
    doc["connected"] = true;
    return doc.dump(2) + "\n";
}

}  // namespace grag
