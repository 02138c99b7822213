#pragma once

#include <dbgnn/debruijn.hpp>
#include <dbgnn/model.hpp>
#include <dbgnn/numerics.hpp>

#include "oracles.hpp"

#include <optional>

namespace oracle {

/// Small random dynamic graph with its second-order De Bruijn graph, random
/// labels and a random training mask.
struct ToyInstance {
    dbgnn::TemporalGraph graph;
    dbgnn::StaticWeightedGraph aggregated;
    std::optional<dbgnn::DeBruijnGraph> debruijn;
    std::vector<int> labels;
    std::vector<bool> mask;
};

inline ToyInstance toy_instance(std::uint64_t seed, std::size_t nodes = 5, std::size_t events = 24,
                                std::size_t classes = 3) {
    std::mt19937_64 rng(seed);
    ToyInstance t;
    t.graph = random_temporal_graph(rng, nodes, events, 12, seed % 2 == 0);
    t.aggregated = dbgnn::aggregate(t.graph);
    t.debruijn = dbgnn::build_debruijn(dbgnn::count_causal_walks(t.graph, 2, 2), 2);
    std::uniform_int_distribution<int> label(0, static_cast<int>(classes) - 1);
    for (std::size_t v = 0; v < nodes; ++v) {
        t.labels.push_back(label(rng));
        t.mask.push_back(v % 4 != 3);
    }
    return t;
}

inline dbgnn::ModelConfig toy_config(dbgnn::ModelKind kind, dbgnn::Aggregator aggregator, std::uint64_t seed) {
    dbgnn::ModelConfig c;
    c.kind = kind;
    c.ho_hidden = {4, 3};
    c.fo_hidden = {5, 3};
    c.aggregator = aggregator;
    c.representation_dim = 4;
    c.classes = 3;
    c.seed = seed;
    return c;
}

/// Worst relative error between backpropagated and finite-difference
/// gradients of the masked cross-entropy loss.
inline double model_gradient_error(dbgnn::Model& m, const std::vector<int>& labels, const std::vector<bool>& mask) {
    const auto fwd = m.forward();
    const auto loss = dbgnn::softmax_cross_entropy(fwd.logits, labels, mask);
    const auto analytic = m.backward(fwd, loss.grad);
    const auto numeric = finite_difference(
        [&] { return dbgnn::softmax_cross_entropy(m.forward().logits, labels, mask).loss; }, m.parameters());
    return max_relative_error(analytic, numeric);
}

}  // namespace oracle
