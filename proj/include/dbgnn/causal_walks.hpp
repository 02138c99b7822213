#pragma once

#include <dbgnn/temporal_graph.hpp>

#include <iosfwd>
#include <map>

namespace dbgnn {

using Walk = std::vector<NodeIndex>;
using WalkCounts = std::map<Walk, Count>;

/// Instantiation counts of causal walks, grouped by length (number of edges).
///
/// `by_length[l]` holds sequences of l+1 nodes. Length-0 entries record node
/// presence with count 1.
struct WalkBag {
    Timestamp delta = 1;
    std::size_t max_length = 1;
    NodeSetPtr nodes;
    std::vector<WalkCounts> by_length;

    const WalkCounts& of_length(std::size_t l) const { return by_length.at(l); }
    Count count(const Walk& w) const;
    Count total(std::size_t l) const;
    std::size_t node_count() const { return nodes ? nodes->size() : 0; }

    bool operator==(const WalkBag& o) const {
        return delta == o.delta && max_length == o.max_length && by_length == o.by_length;
    }
};

/// Counts time-respecting walks with 0 < t_{i+1} - t_i <= delta between
/// consecutive events, for lengths 0..max_length.
///
/// Sweeps events in time order. For every node it keeps the walks that ended
/// there inside the last `delta` time units, so each event only extends walks
/// arriving at its source within [t - delta, t).
WalkBag count_causal_walks(const TemporalGraph& g, Timestamp delta, std::size_t max_length);

/// Exhaustive depth-first enumeration of event sequences. Test oracle only;
/// refuses inputs with more than 10^4 events.
WalkBag enumerate_causal_walks(const TemporalGraph& g, Timestamp delta, std::size_t max_length);

inline constexpr std::size_t kEnumerationEventLimit = 10'000;

/// One line per sequence: `node,node,...,node<TAB>count`, preceded by a
/// `# walkbag delta=<d> max_length=<K>` header.
void write_walk_bag(std::ostream& out, const WalkBag& bag);
WalkBag read_walk_bag(std::istream& in);
WalkBag read_walk_bag(const std::string& path);

}  // namespace dbgnn
