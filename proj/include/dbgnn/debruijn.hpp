#pragma once

#include <dbgnn/causal_walks.hpp>

#include <iosfwd>

namespace dbgnn {

struct WeightedEdge {
    std::size_t source;
    std::size_t target;
    Count weight;

    bool operator==(const WeightedEdge&) const = default;
};

/// Order-k De Bruijn graph. Higher-order nodes are walks of k first-order
/// nodes; an edge u -> v exists when u's last k-1 nodes equal v's first k-1
/// and u ⊕ v is an observed causal walk.
class DeBruijnGraph {
public:
    DeBruijnGraph(std::size_t order, NodeSetPtr first_order, std::vector<Walk> nodes,
                  std::vector<WeightedEdge> edges);

    std::size_t order() const noexcept { return order_; }
    std::size_t node_count() const noexcept { return nodes_.size(); }
    std::size_t edge_count() const noexcept { return edges_.size(); }
    const std::vector<Walk>& nodes() const noexcept { return nodes_; }
    const Walk& node(std::size_t i) const { return nodes_.at(i); }
    const std::vector<WeightedEdge>& edges() const noexcept { return edges_; }
    const NodeSet& first_order_nodes() const noexcept { return *first_order_; }
    NodeSetPtr first_order_node_set() const noexcept { return first_order_; }

    /// Index of a higher-order node; throws DataError when absent.
    std::size_t index(const Walk& w) const;
    bool contains(const Walk& w) const;
    Count total_weight() const;

private:
    std::size_t order_;
    NodeSetPtr first_order_;
    std::vector<Walk> nodes_;  // sorted
    std::vector<WeightedEdge> edges_;  // sorted by (source, target)
};

/// Maps every higher-order node to its last first-order node.
struct BipartiteProjection {
    std::vector<NodeIndex> target;  // indexed by higher-order node
    std::size_t first_order_count = 0;
};

DeBruijnGraph build_debruijn(const WalkBag& bag, std::size_t k);

inline constexpr std::size_t kDefaultFeasibleCap = 10'000'000;

/// All walks of length k-1 (nodes) and k (edges) of the static topology,
/// unit weights.
DeBruijnGraph feasible_debruijn(const StaticWeightedGraph& s, std::size_t k,
                                std::size_t cap = kDefaultFeasibleCap);

BipartiteProjection bipartite_projection(const DeBruijnGraph& d);

/// Sum of incoming edge weights, without any implicit self-loop.
Count in_strength(const DeBruijnGraph& d, const Walk& v);
std::vector<Count> in_strengths(const DeBruijnGraph& d);

/// `u0|u1|...<TAB>v0|v1|...<TAB>weight`, one line per edge.
void write_debruijn(std::ostream& out, const DeBruijnGraph& d);

}  // namespace dbgnn
