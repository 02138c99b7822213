#include <dbgnn/synthetic.hpp>

#include <algorithm>
#include <numeric>
#include <random>
#include <stdexcept>

namespace dbgnn {

namespace {

std::size_t uniform_index(std::mt19937_64& rng, std::size_t size) {
    return std::uniform_int_distribution<std::size_t>(0, size - 1)(rng);
}

std::size_t take_random(std::vector<std::size_t>& pool, std::mt19937_64& rng) {
    const std::size_t i = uniform_index(rng, pool.size());
    const std::size_t value = pool[i];
    pool[i] = pool.back();
    pool.pop_back();
    return value;
}

}  // namespace

TempClusters generate_temp_clusters(std::size_t n, std::size_t m, std::size_t pairs, std::uint64_t seed) {
    if (n < 3 || n % 3 != 0) throw std::invalid_argument("n must be a positive multiple of 3");
    if (m < 1 || m > n * (n - 1)) throw std::invalid_argument("m must lie in 1..n(n-1)");
    if (pairs < 1) throw std::invalid_argument("pair count must be positive");

    std::mt19937_64 rng(seed);

    std::vector<EdgeKey> candidates;
    candidates.reserve(n * (n - 1));
    for (NodeIndex u = 0; u < n; ++u)
        for (NodeIndex v = 0; v < n; ++v)
            if (u != v) candidates.emplace_back(u, v);
    std::shuffle(candidates.begin(), candidates.end(), rng);
    std::vector<EdgeKey> edges(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(m));
    std::sort(edges.begin(), edges.end());

    std::vector<NodeIndex> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    ClusterAssignment clusters;
    clusters.cluster.assign(n, 0);
    for (std::size_t i = 0; i < n; ++i) clusters.cluster[perm[i]] = static_cast<int>(3 * i / n);

    // Uniform over compatible edge pairs: first edge weighted by the out-degree
    // of its target, second edge uniform among that target's out-edges.
    std::vector<std::vector<std::size_t>> out_edges(n);
    for (std::size_t e = 0; e < edges.size(); ++e) out_edges[edges[e].first].push_back(e);
    std::vector<double> weight(edges.size());
    for (std::size_t e = 0; e < edges.size(); ++e) weight[e] = static_cast<double>(out_edges[edges[e].second].size());
    if (std::all_of(weight.begin(), weight.end(), [](double w) { return w == 0.0; }))
        throw std::invalid_argument("graph has no pair of consecutive edges");
    std::discrete_distribution<std::size_t> first_edge(weight.begin(), weight.end());

    std::vector<NodeIndex> from(pairs), centre(pairs), to(pairs);
    for (std::size_t i = 0; i < pairs; ++i) {
        const auto e1 = edges[first_edge(rng)];
        const auto& outs = out_edges[e1.second];
        const auto e2 = edges[outs[uniform_index(rng, outs.size())]];
        from[i] = e1.first;
        centre[i] = e1.second;
        to[i] = e2.second;
    }

    // Candidates per centre: A has C(from) = C(centre) != C(to), B has
    // C(from) != C(centre) = C(to). Exchanging the second edges of one A and
    // one B pair turns A into a within-cluster walk.
    const auto& c = clusters.cluster;
    std::vector<std::vector<std::size_t>> pool_a(n), pool_b(n);
    for (std::size_t i = 0; i < pairs; ++i) {
        const int cc = c[centre[i]];
        if (c[from[i]] == cc && c[to[i]] != cc) pool_a[centre[i]].push_back(i);
        else if (c[from[i]] != cc && c[to[i]] == cc) pool_b[centre[i]].push_back(i);
    }
    for (std::size_t i = 0; i < pairs; ++i) {
        const NodeIndex v = centre[i];
        if (pool_a[v].empty() || pool_b[v].empty()) continue;
        const std::size_t a = take_random(pool_a[v], rng);
        const std::size_t b = take_random(pool_b[v], rng);
        std::swap(to[a], to[b]);
    }

    auto nodes = std::make_shared<NodeSet>();
    for (std::size_t v = 0; v < n; ++v) nodes->intern(std::to_string(v));
    std::vector<TemporalEdge> events;
    events.reserve(2 * pairs);
    for (std::size_t i = 0; i < pairs; ++i) {
        const auto t = static_cast<Timestamp>(3 * i);
        events.push_back({from[i], centre[i], t});
        events.push_back({centre[i], to[i], t + 1});
    }
    return {TemporalGraph(nodes, std::move(events), true), std::move(clusters)};
}

TemporalGraph shuffle_timestamps(const TemporalGraph& g, std::uint64_t seed) {
    std::vector<TemporalEdge> events = g.events();
    std::vector<Timestamp> times;
    times.reserve(events.size());
    for (const auto& e : events) times.push_back(e.time);
    std::mt19937_64 rng(seed);
    std::shuffle(times.begin(), times.end(), rng);
    for (std::size_t i = 0; i < events.size(); ++i) events[i].time = times[i];
    return TemporalGraph(g.node_set(), std::move(events), g.directed());
}

NodeLabels cluster_labels(const ClusterAssignment& clusters) {
    NodeLabels labels;
    labels.label = clusters.cluster;
    int max_cluster = -1;
    for (int x : clusters.cluster) max_cluster = std::max(max_cluster, x);
    for (int k = 0; k <= max_cluster; ++k) labels.class_names.push_back(std::to_string(k));
    return labels;
}

}  // namespace dbgnn
