#include <dbgnn/synthetic.hpp>

#include <gtest/gtest.h>

#include <algorithm>

using namespace dbgnn;

namespace {

Count within_cluster_walks(const TemporalGraph& g, const ClusterAssignment& c) {
    const auto bag = count_causal_walks(g, 1, 2);
    Count n = 0;
    for (const auto& [w, k] : bag.of_length(2))
        if (c.cluster[w[0]] == c.cluster[w[1]] && c.cluster[w[1]] == c.cluster[w[2]]) n += k;
    return n;
}

std::vector<Timestamp> times(const TemporalGraph& g) {
    std::vector<Timestamp> t;
    for (const auto& e : g.events()) t.push_back(e.time);
    std::sort(t.begin(), t.end());
    return t;
}

}  // namespace

TEST(TempClusters, Sizes) {
    const auto tc = generate_temp_clusters(30, 560, 30000, 0);
    EXPECT_EQ(tc.graph.node_count(), 30u);
    EXPECT_EQ(tc.graph.events().size(), 60000u);
    EXPECT_EQ(aggregate(tc.graph).edges.size(), 560u);
    EXPECT_TRUE(tc.graph.directed());
    for (int c = 0; c < 3; ++c) EXPECT_EQ(std::count(tc.clusters.cluster.begin(), tc.clusters.cluster.end(), c), 10);
}

TEST(TempClusters, PairsOccupyTheirWindows) {
    const auto tc = generate_temp_clusters(9, 30, 200, 3);
    const auto& ev = tc.graph.events();
    ASSERT_EQ(ev.size(), 400u);
    std::vector<TemporalEdge> sorted = ev;
    std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) { return a.time < b.time; });
    for (std::size_t i = 0; i < 200; ++i) {
        EXPECT_EQ(sorted[2 * i].time, static_cast<Timestamp>(3 * i));
        EXPECT_EQ(sorted[2 * i + 1].time, static_cast<Timestamp>(3 * i + 1));
        EXPECT_EQ(sorted[2 * i].target, sorted[2 * i + 1].source);
    }
    // pairs never chain into each other with delta = 1
    const auto bag = count_causal_walks(tc.graph, 1, 3);
    EXPECT_EQ(bag.total(2), 200);
    EXPECT_EQ(bag.total(3), 0);
}

TEST(TempClusters, Deterministic) {
    const auto a = generate_temp_clusters(12, 40, 500, 8);
    const auto b = generate_temp_clusters(12, 40, 500, 8);
    EXPECT_EQ(a.graph.events(), b.graph.events());
    EXPECT_EQ(a.clusters.cluster, b.clusters.cluster);
    EXPECT_NE(a.graph.events(), generate_temp_clusters(12, 40, 500, 9).graph.events());
}

TEST(TempClusters, PlantedWalksExceedShuffledBaseline) {
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
        const auto tc = generate_temp_clusters(30, 560, 30000, seed);
        const auto shuffled = shuffle_timestamps(tc.graph, seed + 100);
        // causal walks in the shuffled copy are rare, so compare within-cluster shares
        const auto planted = count_causal_walks(tc.graph, 1, 2);
        const double share = static_cast<double>(within_cluster_walks(tc.graph, tc.clusters)) /
                             static_cast<double>(planted.total(2));
        const auto base = count_causal_walks(shuffled, 1, 2);
        const double base_share = static_cast<double>(within_cluster_walks(shuffled, tc.clusters)) /
                                  static_cast<double>(base.total(2));
        EXPECT_GT(share, base_share + 0.1) << seed;
    }
}

TEST(TempClusters, ArgumentErrors) {
    EXPECT_THROW(generate_temp_clusters(10, 20, 5, 0), std::invalid_argument);
    EXPECT_THROW(generate_temp_clusters(0, 1, 5, 0), std::invalid_argument);
    EXPECT_THROW(generate_temp_clusters(6, 31, 5, 0), std::invalid_argument);
    EXPECT_THROW(generate_temp_clusters(6, 0, 5, 0), std::invalid_argument);
    EXPECT_THROW(generate_temp_clusters(6, 10, 0, 0), std::invalid_argument);
}

TEST(Shuffle, PreservesAggregateAndTimestamps) {
    const auto tc = generate_temp_clusters(15, 80, 2000, 4);
    const auto s = shuffle_timestamps(tc.graph, 11);
    EXPECT_EQ(aggregate(s), aggregate(tc.graph));
    EXPECT_EQ(times(s), times(tc.graph));
    EXPECT_NE(s.events(), tc.graph.events());
}

TEST(Shuffle, SingleEventUnchanged) {
    TemporalGraph g(true);
    g.add_event("a", "b", 5);
    EXPECT_EQ(shuffle_timestamps(g, 1).events(), g.events());
}

TEST(ClusterLabels, NamesAndIndices) {
    const auto labels = cluster_labels(ClusterAssignment{{2, 0, 1, 1}});
    EXPECT_EQ(labels.class_names, (std::vector<std::string>{"0", "1", "2"}));
    EXPECT_EQ(labels.label, (std::vector<int>{2, 0, 1, 1}));
}
