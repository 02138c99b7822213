#pragma once

#include <dbgnn/common.hpp>

#include <iosfwd>
#include <map>
#include <utility>

namespace dbgnn {

struct TemporalEdge {
    NodeIndex source;
    NodeIndex target;
    Timestamp time;

    auto operator<=>(const TemporalEdge&) const = default;
};

/// Node set plus a multiset of time-stamped contacts.
///
/// Undirected graphs store each contact once; `directed_events()` expands
/// them into both orientations for walk counting and aggregation.
class TemporalGraph {
public:
    TemporalGraph() : nodes_(std::make_shared<NodeSet>()) {}
    explicit TemporalGraph(bool directed) : TemporalGraph() { directed_ = directed; }
    TemporalGraph(NodeSetPtr nodes, std::vector<TemporalEdge> events, bool directed);

    NodeIndex add_node(std::string_view label);
    void add_event(std::string_view source, std::string_view target, Timestamp t);
    void add_event(NodeIndex source, NodeIndex target, Timestamp t);

    bool directed() const noexcept { return directed_; }
    std::size_t node_count() const noexcept { return nodes_->size(); }
    const NodeSet& nodes() const noexcept { return *nodes_; }
    NodeSetPtr node_set() const noexcept { return nodes_; }
    const std::vector<TemporalEdge>& events() const noexcept { return events_; }

    /// Events as directed contacts; undirected contacts appear in both
    /// orientations (a self-contact appears once).
    std::vector<TemporalEdge> directed_events() const;

private:
    std::shared_ptr<NodeSet> mutable_nodes();

    NodeSetPtr nodes_;
    std::vector<TemporalEdge> events_;
    bool directed_ = true;
};

using EdgeKey = std::pair<NodeIndex, NodeIndex>;

/// Time-aggregated graph; weights count activations of each (source, target).
struct StaticWeightedGraph {
    NodeSetPtr nodes;
    std::map<EdgeKey, Count> edges;

    std::size_t node_count() const { return nodes ? nodes->size() : 0; }
    Count total_weight() const;
    bool operator==(const StaticWeightedGraph& o) const {
        return node_count() == o.node_count() && edges == o.edges;
    }
};

TemporalGraph parse_edge_list(std::istream& in, bool directed);
TemporalGraph parse_edge_list_string(std::string_view text, bool directed);
TemporalGraph read_edge_list(const std::string& path, bool directed);

/// Writes `source,target,timestamp` lines, readable by parse_edge_list.
void write_edge_list(std::ostream& out, const TemporalGraph& g);

StaticWeightedGraph aggregate(const TemporalGraph& g);

/// Replaces every timestamp t by floor(t / bin_width); duplicates are kept.
TemporalGraph coarsen(const TemporalGraph& g, Timestamp bin_width);

/// Drops repeated contacts with identical endpoints and timestamp. For
/// undirected graphs (a,b;t) and (b,a;t) are the same contact.
TemporalGraph dedup_events(const TemporalGraph& g);

}  // namespace dbgnn
