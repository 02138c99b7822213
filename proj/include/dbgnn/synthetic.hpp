#pragma once

#include <dbgnn/experiment.hpp>
#include <dbgnn/temporal_graph.hpp>

namespace dbgnn {

/// Cluster id in {0, 1, 2} per node.
struct ClusterAssignment {
    std::vector<int> cluster;
};

struct TempClusters {
    TemporalGraph graph;
    ClusterAssignment clusters;
};

/// Directed random graph on n nodes with m edges whose causal walks of
/// length two are biased towards three planted clusters.
///
/// Pair i occupies timestamps 3i and 3i + 1. The swap pass visits the centre
/// of every pair once, and each pair takes part in at most one swap.
TempClusters generate_temp_clusters(std::size_t n, std::size_t m, std::size_t pairs, std::uint64_t seed);

/// Random permutation of the timestamps over the events.
TemporalGraph shuffle_timestamps(const TemporalGraph& g, std::uint64_t seed);

/// Clusters as node labels named "0", "1", "2".
NodeLabels cluster_labels(const ClusterAssignment& clusters);

}  // namespace dbgnn
