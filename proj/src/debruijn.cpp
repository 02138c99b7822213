#include <dbgnn/debruijn.hpp>

#include <algorithm>
#include <numeric>
#include <ostream>
#include <set>
#include <tuple>

namespace dbgnn {

DeBruijnGraph::DeBruijnGraph(std::size_t order, NodeSetPtr first_order, std::vector<Walk> nodes,
                             std::vector<WeightedEdge> edges)
    : order_(order), first_order_(std::move(first_order)), nodes_(std::move(nodes)), edges_(std::move(edges)) {
    if (order_ < 1) throw std::invalid_argument("De Bruijn order must be >= 1");
    for (const auto& e : edges_)
        if (e.source >= nodes_.size() || e.target >= nodes_.size())
            throw std::invalid_argument("De Bruijn edge references unknown node");
    if (!std::is_sorted(nodes_.begin(), nodes_.end())) {
        std::vector<std::size_t> order(nodes_.size());
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(), [this](std::size_t a, std::size_t b) { return nodes_[a] < nodes_[b]; });
        std::vector<std::size_t> rank(nodes_.size());
        std::vector<Walk> sorted(nodes_.size());
        for (std::size_t i = 0; i < order.size(); ++i) {
            rank[order[i]] = i;
            sorted[i] = std::move(nodes_[order[i]]);
        }
        nodes_ = std::move(sorted);
        for (auto& e : edges_) {
            e.source = rank[e.source];
            e.target = rank[e.target];
        }
    }
    if (std::adjacent_find(nodes_.begin(), nodes_.end()) != nodes_.end())
        throw std::invalid_argument("duplicate higher-order node");
    std::sort(edges_.begin(), edges_.end(), [](const WeightedEdge& a, const WeightedEdge& b) {
        return std::tie(a.source, a.target) < std::tie(b.source, b.target);
    });
    for (const auto& n : nodes_)
        if (n.size() != order_) throw std::invalid_argument("higher-order node has wrong length");
    for (const auto& e : edges_)
        if (e.weight == 0) throw std::invalid_argument("De Bruijn edge weights must be positive");
}

std::size_t DeBruijnGraph::index(const Walk& w) const {
    auto it = std::lower_bound(nodes_.begin(), nodes_.end(), w);
    if (it == nodes_.end() || *it != w) throw DataError("unknown higher-order node");
    return static_cast<std::size_t>(it - nodes_.begin());
}

bool DeBruijnGraph::contains(const Walk& w) const {
    return std::binary_search(nodes_.begin(), nodes_.end(), w);
}

Count DeBruijnGraph::total_weight() const {
    Count total = 0;
    for (const auto& e : edges_) total += e.weight;
    return total;
}

DeBruijnGraph build_debruijn(const WalkBag& bag, std::size_t k) {
    if (k < 1) throw std::invalid_argument("De Bruijn order must be >= 1");
    if (k > bag.max_length) throw std::invalid_argument("order exceeds the walk bag's maximum length");

    std::set<Walk> node_set;
    for (const auto& [w, c] : bag.of_length(k - 1)) node_set.insert(w);
    for (const auto& [w, c] : bag.of_length(k)) {
        node_set.emplace(w.begin(), w.end() - 1);
        node_set.emplace(w.begin() + 1, w.end());
    }
    std::vector<Walk> nodes(node_set.begin(), node_set.end());

    const auto find = [&](const Walk& w) {
        return static_cast<std::size_t>(std::lower_bound(nodes.begin(), nodes.end(), w) - nodes.begin());
    };
    std::vector<WeightedEdge> edges;
    edges.reserve(bag.of_length(k).size());
    for (const auto& [w, c] : bag.of_length(k)) {
        const Walk u(w.begin(), w.end() - 1);
        const Walk v(w.begin() + 1, w.end());
        edges.push_back({find(u), find(v), c});
    }
    return DeBruijnGraph(k, bag.nodes, std::move(nodes), std::move(edges));
}

DeBruijnGraph feasible_debruijn(const StaticWeightedGraph& s, std::size_t k, std::size_t cap) {
    if (k < 1) throw std::invalid_argument("De Bruijn order must be >= 1");
    const std::size_t n = s.node_count();
    std::vector<std::vector<NodeIndex>> successors(n);
    for (const auto& [key, w] : s.edges) successors[key.first].push_back(key.second);

    // Count walks first so the cap is enforced before anything is materialized.
    std::vector<double> ending(n, 1.0);
    for (std::size_t step = 1; step < k; ++step) {
        std::vector<double> next(n, 0.0);
        for (std::size_t u = 0; u < n; ++u)
            for (NodeIndex v : successors[u]) next[v] += ending[u];
        ending = std::move(next);
    }
    double node_total = 0.0, edge_total = 0.0;
    for (std::size_t v = 0; v < n; ++v) {
        node_total += ending[v];
        edge_total += ending[v] * static_cast<double>(successors[v].size());
    }
    if (node_total > static_cast<double>(cap) || edge_total > static_cast<double>(cap))
        throw std::length_error("feasible De Bruijn graph exceeds the size cap");

    std::vector<Walk> frontier;
    for (NodeIndex v = 0; v < n; ++v) frontier.push_back({v});
    for (std::size_t step = 1; step < k; ++step) {
        std::vector<Walk> next;
        for (const auto& w : frontier) {
            for (NodeIndex v : successors[w.back()]) {
                Walk ext = w;
                ext.push_back(v);
                next.push_back(std::move(ext));
            }
        }
        frontier = std::move(next);
    }
    std::sort(frontier.begin(), frontier.end());

    std::vector<WeightedEdge> edges;
    for (std::size_t i = 0; i < frontier.size(); ++i) {
        const auto& u = frontier[i];
        for (NodeIndex next : successors[u.back()]) {
            Walk v(u.begin() + 1, u.end());
            v.push_back(next);
            const auto j = static_cast<std::size_t>(
                std::lower_bound(frontier.begin(), frontier.end(), v) - frontier.begin());
            edges.push_back({i, j, 1});
        }
    }
    return DeBruijnGraph(k, s.nodes, std::move(frontier), std::move(edges));
}

BipartiteProjection bipartite_projection(const DeBruijnGraph& d) {
    BipartiteProjection b;
    b.first_order_count = d.first_order_nodes().size();
    b.target.reserve(d.node_count());
    for (const auto& w : d.nodes()) b.target.push_back(w.back());
    return b;
}

Count in_strength(const DeBruijnGraph& d, const Walk& v) {
    const std::size_t idx = d.index(v);
    Count s = 0;
    for (const auto& e : d.edges())
        if (e.target == idx) s += e.weight;
    return s;
}

std::vector<Count> in_strengths(const DeBruijnGraph& d) {
    std::vector<Count> s(d.node_count(), 0);
    for (const auto& e : d.edges()) s[e.target] += e.weight;
    return s;
}

void write_debruijn(std::ostream& out, const DeBruijnGraph& d) {
    const auto& labels = d.first_order_nodes();
    const auto put = [&](const Walk& w) {
        for (std::size_t i = 0; i < w.size(); ++i) {
            if (i) out << '|';
            out << labels.label(w[i]);
        }
    };
    for (const auto& e : d.edges()) {
        put(d.node(e.source));
        out << '\t';
        put(d.node(e.target));
        out << '\t' << e.weight << '\n';
    }
}

}  // namespace dbgnn
