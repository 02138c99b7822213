#include <dbgnn/model.hpp>

#include "toy.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

using namespace dbgnn;

namespace {

void expect_near(const Matrix& a, const Matrix& b, double tol) {
    ASSERT_TRUE(a.same_shape(b));
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a.data()[i], b.data()[i], tol) << "entry " << i;
}

std::vector<WeightedEdge> random_edges(std::mt19937_64& rng, std::size_t n, std::size_t m) {
    std::uniform_int_distribution<std::size_t> node(0, n - 1);
    std::uniform_int_distribution<Count> weight(1, 9);
    std::map<std::pair<std::size_t, std::size_t>, Count> unique;
    for (std::size_t i = 0; i < m; ++i) unique[{node(rng), node(rng)}] = weight(rng);
    std::vector<WeightedEdge> edges;
    for (const auto& [key, w] : unique) edges.push_back({key.first, key.second, w});
    return edges;
}

StaticWeightedGraph graph_of(std::size_t n, const std::vector<WeightedEdge>& edges) {
    auto nodes = std::make_shared<NodeSet>();
    for (std::size_t v = 0; v < n; ++v) nodes->intern(std::to_string(v));
    StaticWeightedGraph s;
    s.nodes = nodes;
    for (const auto& e : edges) s.edges[{static_cast<NodeIndex>(e.source), static_cast<NodeIndex>(e.target)}] = e.weight;
    return s;
}

}  // namespace

TEST(Propagation, SparseEqualsDenseOracle) {
    std::mt19937_64 rng(1);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t n = 2 + trial * 2;
        const auto edges = random_edges(rng, n, 3 * n);
        const Propagation p(n, edges);
        const Matrix dense = oracle::dense_propagation(n, edges);
        expect_near(p.dense(), dense, 1e-12);
        const Matrix h = oracle::random_matrix(rng, n, 4);
        expect_near(p.apply(h), oracle::naive_matmul(dense, h), 1e-12);
        const Matrix g = oracle::random_matrix(rng, n, 3);
        expect_near(p.apply_transpose(g), oracle::naive_matmul(transpose(dense), g), 1e-12);
    }
}

TEST(Propagation, SquareRootStrengthIsAFixedPoint) {
    std::mt19937_64 rng(2);
    for (int trial = 0; trial < 10; ++trial) {
        const std::size_t n = 10;
        const Propagation p(n, random_edges(rng, n, 25));
        Matrix h(n, 1);
        for (std::size_t v = 0; v < n; ++v) h(v, 0) = std::sqrt(p.strengths()[v]);
        expect_near(p.apply(h), h, 1e-12);
    }
}

TEST(HigherOrderLayer, NoEdgesIsPlainElu) {
    auto nodes = std::make_shared<NodeSet>();
    for (const char* l : {"a", "b", "c"}) nodes->intern(l);
    const DeBruijnGraph d(2, nodes, {{0, 1}, {1, 2}, {2, 0}}, {});
    const Matrix h{{0.5, -1.0}, {-2.0, 3.0}, {0.0, 1.5}};
    expect_near(ho_layer_forward(h, d, Matrix::identity(2)), elu(h), 1e-15);
}

TEST(HigherOrderLayer, SingleWeightedEdge) {
    auto nodes = std::make_shared<NodeSet>();
    for (const char* l : {"a", "b", "c"}) nodes->intern(l);
    const DeBruijnGraph d(2, nodes, {{0, 1}, {1, 2}}, {{0, 1, 3}});
    const double hu = 0.7, hv = -0.4;
    const auto fwd = message_passing_forward(Propagation::of(d), Matrix{{hu}, {hv}}, Matrix{{1.0}});
    // S̃(u) = 1, S̃(v) = 3 + 1
    EXPECT_NEAR(fwd.pre_activation(1, 0), 3 * hu / std::sqrt(4.0 * 1.0) + hv / 4.0, 1e-15);
    EXPECT_NEAR(fwd.pre_activation(0, 0), hu, 1e-15);
}

TEST(HigherOrderLayer, WeightRegularGraphKeepsIdenticalRows) {
    auto nodes = std::make_shared<NodeSet>();
    for (const char* l : {"a", "b", "c"}) nodes->intern(l);
    // directed cycle of higher-order nodes, every node has in-strength 2
    const DeBruijnGraph d(2, nodes, {{0, 1}, {1, 2}, {2, 0}}, {{0, 1, 2}, {1, 2, 2}, {2, 0, 2}});
    Matrix h(3, 2);
    for (std::size_t v = 0; v < 3; ++v) {
        h(v, 0) = 0.3;
        h(v, 1) = -1.1;
    }
    const Matrix out = ho_layer_forward(h, d, Matrix{{1.0, 2.0}, {0.5, -1.0}});
    for (std::size_t v = 1; v < 3; ++v)
        for (std::size_t j = 0; j < 2; ++j) EXPECT_DOUBLE_EQ(out(v, j), out(0, j));
}

TEST(FirstOrderLayer, IsolatedNode) {
    const auto s = graph_of(2, {});
    const Matrix h{{0.2, -0.5}, {1.0, 2.0}};
    const Matrix w{{1.0, -1.0, 0.5}, {2.0, 0.0, 1.0}};
    expect_near(fo_layer_forward(h, s, w), elu(matmul(h, w)), 1e-15);
}

TEST(FirstOrderLayer, SymmetricUnitEdge) {
    const auto s = graph_of(2, {{0, 1, 1}, {1, 0, 1}});
    const Matrix h{{0.2, -0.5}, {1.0, 2.0}};
    const auto fwd = message_passing_forward(Propagation::of(s), h, Matrix::identity(2));
    for (std::size_t v = 0; v < 2; ++v)
        for (std::size_t j = 0; j < 2; ++j) EXPECT_NEAR(fwd.pre_activation(v, j), (h(0, j) + h(1, j)) / 2, 1e-15);
}

TEST(FirstOrderLayer, ZeroInput) {
    std::mt19937_64 rng(3);
    const auto s = graph_of(6, random_edges(rng, 6, 12));
    const Matrix out = fo_layer_forward(Matrix(6, 3), s, oracle::random_matrix(rng, 3, 4));
    EXPECT_EQ(out, Matrix(6, 4));
}

TEST(FirstOrderLayer, ShapeMismatch) {
    const auto s = graph_of(3, {});
    EXPECT_THROW(fo_layer_forward(Matrix(2, 2), s, Matrix(2, 2)), std::invalid_argument);
    EXPECT_THROW(fo_layer_forward(Matrix(3, 2), s, Matrix(3, 2)), std::invalid_argument);
}

TEST(BipartiteLayer, SingletonSum) {
    const BipartiteProjection b{{1}, 2};
    const Matrix h_ho{{0.5, -0.25}};
    const Matrix h_fo{{1.0, 1.0}, {0.25, -1.0}};
    const auto f = bipartite_forward(h_ho, h_fo, b, Matrix::identity(2), Aggregator::Sum);
    EXPECT_DOUBLE_EQ(f.output(1, 0), elu(0.75));
    EXPECT_DOUBLE_EQ(f.output(1, 1), elu(-1.25));
}

TEST(BipartiteLayer, MeanVersusSumOfEqualMembers) {
    const BipartiteProjection b{{0, 0}, 1};
    const Matrix h_ho{{0.3, -0.2}, {0.3, -0.2}};
    const Matrix h_fo{{0.1, 0.4}};
    const Matrix w = Matrix::identity(2);
    const auto mean = bipartite_forward(h_ho, h_fo, b, w, Aggregator::Mean);
    const auto sum = bipartite_forward(h_ho, h_fo, b, w, Aggregator::Sum);
    const auto single = bipartite_forward(Matrix{{0.3, -0.2}}, h_fo, BipartiteProjection{{0}, 1}, w, Aggregator::Sum);
    EXPECT_EQ(mean.output, single.output);
    // each member contributes h_ho + h_fo, so SUM doubles both terms
    EXPECT_DOUBLE_EQ(sum.pre_activation(0, 0), 2 * (0.3 + 0.1));
    EXPECT_DOUBLE_EQ(sum.pre_activation(0, 1), 2 * (-0.2 + 0.4));
}

TEST(BipartiteLayer, MaxAndMinSelectPerFeature) {
    const BipartiteProjection b{{0, 0, 0}, 1};
    const Matrix h_ho{{0.3, -0.2}, {0.9, -0.7}, {-0.1, 0.5}};
    const Matrix h_fo{{0.1, 0.2}};
    const auto mx = bipartite_forward(h_ho, h_fo, b, Matrix::identity(2), Aggregator::Max);
    const auto mn = bipartite_forward(h_ho, h_fo, b, Matrix::identity(2), Aggregator::Min);
    EXPECT_DOUBLE_EQ(mx.aggregate(0, 0), 0.9 + 0.1);
    EXPECT_DOUBLE_EQ(mx.aggregate(0, 1), 0.5 + 0.2);
    EXPECT_DOUBLE_EQ(mn.aggregate(0, 0), -0.1 + 0.1);
    EXPECT_DOUBLE_EQ(mn.aggregate(0, 1), -0.7 + 0.2);
}

TEST(BipartiteLayer, EmptySetFallsBackToFirstOrder) {
    const BipartiteProjection b{{0}, 2};
    const Matrix h_ho{{5.0, 5.0}};
    const Matrix h_fo{{0.0, 0.0}, {0.4, -0.6}};
    const Matrix w{{1.0, 2.0}, {-1.0, 0.5}};
    for (auto a : {Aggregator::Sum, Aggregator::Mean, Aggregator::Max, Aggregator::Min}) {
        const auto f = bipartite_forward(h_ho, h_fo, b, w, a);
        EXPECT_DOUBLE_EQ(f.output(1, 0), elu(0.4 * 1.0 + -0.6 * -1.0));
        EXPECT_DOUBLE_EQ(f.output(1, 1), elu(0.4 * 2.0 + -0.6 * 0.5));
    }
}

TEST(BipartiteLayer, DimensionConstraint) {
    const BipartiteProjection b{{0}, 1};
    EXPECT_THROW(bipartite_forward(Matrix(1, 3), Matrix(1, 2), b, Matrix(2, 2), Aggregator::Sum),
                 std::invalid_argument);
    ModelConfig c = oracle::toy_config(ModelKind::Dbgnn, Aggregator::Sum, 1);
    c.ho_hidden = {4, 2};
    const auto t = oracle::toy_instance(1);
    EXPECT_THROW(Model(c, &*t.debruijn, t.aggregated), std::invalid_argument);
}

TEST(LayerGradients, MessagePassingMatchesFiniteDifferences) {
    std::mt19937_64 rng(4);
    for (int trial = 0; trial < 10; ++trial) {
        const std::size_t n = 6;
        const Propagation p(n, random_edges(rng, n, 14));
        Matrix h = oracle::random_matrix(rng, n, 3);
        Matrix w = oracle::random_matrix(rng, 3, 4);
        const Matrix r = oracle::random_matrix(rng, n, 4);
        const auto loss = [&] {
            const auto y = message_passing_forward(p, h, w).output;
            double s = 0;
            for (std::size_t i = 0; i < y.size(); ++i) s += y.data()[i] * r.data()[i];
            return s;
        };
        const auto g = message_passing_backward(p, h, w, message_passing_forward(p, h, w), r);
        EXPECT_LT(oracle::max_relative_error({g.d_input, g.d_weight}, oracle::finite_difference(loss, {&h, &w})), 1e-4);
    }
}

TEST(LayerGradients, BipartiteMatchesFiniteDifferences) {
    std::mt19937_64 rng(5);
    const BipartiteProjection b{{0, 1, 1, 2, 2, 2}, 4};
    for (auto a : {Aggregator::Sum, Aggregator::Mean, Aggregator::Max, Aggregator::Min}) {
        Matrix h_ho = oracle::random_matrix(rng, 6, 3);
        Matrix h_fo = oracle::random_matrix(rng, 4, 3);
        Matrix w = oracle::random_matrix(rng, 3, 2);
        const Matrix r = oracle::random_matrix(rng, 4, 2);
        const auto loss = [&] {
            const auto y = bipartite_forward(h_ho, h_fo, b, w, a).output;
            double s = 0;
            for (std::size_t i = 0; i < y.size(); ++i) s += y.data()[i] * r.data()[i];
            return s;
        };
        const auto g = bipartite_backward(bipartite_forward(h_ho, h_fo, b, w, a), h_ho, h_fo, b, w, a, r);
        EXPECT_LT(oracle::max_relative_error({g.d_ho, g.d_fo, g.d_weight},
                                             oracle::finite_difference(loss, {&h_ho, &h_fo, &w})),
                  1e-4)
            << to_string(a);
    }
}

TEST(ModelGradients, DbgnnAllAggregators) {
    for (std::uint64_t seed = 0; seed < 8; ++seed)
        for (auto a : {Aggregator::Sum, Aggregator::Mean, Aggregator::Max, Aggregator::Min}) {
            const auto t = oracle::toy_instance(seed);
            Model m(oracle::toy_config(ModelKind::Dbgnn, a, seed), &*t.debruijn, t.aggregated);
            EXPECT_LT(oracle::model_gradient_error(m, t.labels, t.mask), 1e-4) << seed << ' ' << to_string(a);
        }
}

TEST(ModelGradients, GcnBaseline) {
    for (std::uint64_t seed = 0; seed < 8; ++seed) {
        const auto t = oracle::toy_instance(seed);
        Model m(oracle::toy_config(ModelKind::Gcn, Aggregator::Sum, seed), nullptr, t.aggregated);
        EXPECT_LT(oracle::model_gradient_error(m, t.labels, t.mask), 1e-4) << seed;
    }
}

TEST(Model, IdentityFeaturesMatchOneHot) {
    const auto t = oracle::toy_instance(3);
    const auto cfg = oracle::toy_config(ModelKind::Dbgnn, Aggregator::Mean, 3);
    const Model a(cfg, &*t.debruijn, t.aggregated);
    Model b(cfg, &*t.debruijn, t.aggregated);
    b.set_features(NodeFeatures::dense(Matrix::identity(t.debruijn->node_count())),
                   NodeFeatures::dense(Matrix::identity(t.aggregated.node_count())));
    expect_near(forward(b), forward(a), 1e-14);
    EXPECT_THROW(b.set_features(NodeFeatures::one_hot(t.debruijn->node_count()),
                                NodeFeatures::dense(Matrix(t.aggregated.node_count(), 2))),
                 std::invalid_argument);
}

TEST(ModelGradients, UnusedParameterHasZeroGradient) {
    // node "4" is isolated and unlabelled for training; its one-hot row of the
    // first first-order layer cannot influence the loss
    TemporalGraph g(true);
    for (const char* l : {"0", "1", "2", "3", "4"}) g.add_node(l);
    g.add_event("0", "1", 1);
    g.add_event("1", "2", 2);
    g.add_event("2", "3", 3);
    g.add_event("3", "0", 4);
    const auto s = aggregate(g);
    Model m(oracle::toy_config(ModelKind::Gcn, Aggregator::Sum, 2), nullptr, s);
    const std::vector<int> labels{0, 1, 2, 0, 1};
    const std::vector<bool> mask{true, true, true, true, false};
    const auto fwd = m.forward();
    const auto grads = m.backward(fwd, softmax_cross_entropy(fwd.logits, labels, mask).grad);
    for (double x : grads[0].row(4)) EXPECT_EQ(x, 0.0);
}

TEST(Model, DeterministicUnderSeed) {
    const auto t = oracle::toy_instance(7);
    const Model a(oracle::toy_config(ModelKind::Dbgnn, Aggregator::Sum, 42), &*t.debruijn, t.aggregated);
    const Model b(oracle::toy_config(ModelKind::Dbgnn, Aggregator::Sum, 42), &*t.debruijn, t.aggregated);
    EXPECT_EQ(forward(a), forward(b));
    const Model c(oracle::toy_config(ModelKind::Dbgnn, Aggregator::Sum, 43), &*t.debruijn, t.aggregated);
    EXPECT_NE(forward(a), forward(c));
}

TEST(Model, PermutingNodesPermutesLogits) {
    const auto t = oracle::toy_instance(8, 6, 30);
    // same events, nodes interned in reverse order
    TemporalGraph p(t.graph.directed());
    for (std::size_t i = t.graph.node_count(); i-- > 0;) p.add_node(t.graph.nodes().label(static_cast<NodeIndex>(i)));
    for (const auto& e : t.graph.events())
        p.add_event(t.graph.nodes().label(e.source), t.graph.nodes().label(e.target), e.time);
    const auto ps = aggregate(p);
    const auto pd = build_debruijn(count_causal_walks(p, 2, 2), 2);

    const auto cfg = oracle::toy_config(ModelKind::Dbgnn, Aggregator::Sum, 5);
    const Model a(cfg, &*t.debruijn, t.aggregated);
    Model b(cfg, &pd, ps);
    const auto map_node = [&](NodeIndex v) { return p.nodes().index(t.graph.nodes().label(v)); };

    std::vector<Matrix> params;
    for (const Matrix* m : a.parameters()) params.push_back(*m);
    // first higher-order layer: rows follow the De Bruijn node order
    Matrix ho0(params[0].rows(), params[0].cols());
    for (std::size_t i = 0; i < t.debruijn->node_count(); ++i) {
        Walk w;
        for (NodeIndex v : t.debruijn->node(i)) w.push_back(map_node(v));
        const std::size_t j = pd.index(w);
        for (std::size_t c = 0; c < ho0.cols(); ++c) ho0(j, c) = params[0](i, c);
    }
    const std::size_t fo_first = cfg.ho_hidden.size();
    Matrix fo0(params[fo_first].rows(), params[fo_first].cols());
    for (NodeIndex v = 0; v < t.graph.node_count(); ++v)
        for (std::size_t c = 0; c < fo0.cols(); ++c) fo0(map_node(v), c) = params[fo_first](v, c);
    params[0] = ho0;
    params[fo_first] = fo0;
    b.set_parameters(params);

    const Matrix la = forward(a), lb = forward(b);
    for (NodeIndex v = 0; v < t.graph.node_count(); ++v)
        for (std::size_t c = 0; c < la.cols(); ++c) EXPECT_NEAR(lb(map_node(v), c), la(v, c), 1e-12);
}

TEST(GcnBaseline, IsolatedNodesSeeOnlyThemselves) {
    TemporalGraph g(true);
    for (const char* l : {"a", "b", "c"}) g.add_node(l);
    const auto s = aggregate(g);
    Model m(oracle::toy_config(ModelKind::Gcn, Aggregator::Sum, 9), nullptr, s);
    const Matrix base = gcn_baseline_forward(m);
    auto params = m.parameters();
    for (std::size_t c = 0; c < params[0]->cols(); ++c) (*params[0])(1, c) += 0.5;
    const Matrix changed = gcn_baseline_forward(m);
    for (std::size_t c = 0; c < base.cols(); ++c) {
        EXPECT_EQ(changed(0, c), base(0, c));
        EXPECT_NE(changed(1, c), base(1, c));
        EXPECT_EQ(changed(2, c), base(2, c));
    }
    const auto t = oracle::toy_instance(1);
    const Model d(oracle::toy_config(ModelKind::Dbgnn, Aggregator::Sum, 1), &*t.debruijn, t.aggregated);
    EXPECT_THROW(gcn_baseline_forward(d), std::invalid_argument);
}

TEST(Model, DbgnnRequiresDeBruijnGraph) {
    const auto t = oracle::toy_instance(2);
    EXPECT_THROW(Model(oracle::toy_config(ModelKind::Dbgnn, Aggregator::Sum, 1), nullptr, t.aggregated),
                 std::invalid_argument);
}

TEST(Model, GlorotBounds) {
    std::mt19937_64 rng(10);
    const Matrix w = glorot_uniform(30, 16, rng);
    const double limit = std::sqrt(6.0 / 46.0);
    for (double x : w.data()) {
        EXPECT_LE(std::abs(x), limit);
    }
}

TEST(Checkpoint, RoundTrip) {
    const auto t = oracle::toy_instance(4);
    auto cfg = oracle::toy_config(ModelKind::Dbgnn, Aggregator::Max, 77);
    const Model a(cfg, &*t.debruijn, t.aggregated);
    std::stringstream buffer;
    save_checkpoint(buffer, a);
    const Checkpoint cp = read_checkpoint(buffer);
    EXPECT_EQ(cp.config.aggregator, Aggregator::Max);
    EXPECT_EQ(cp.config.ho_hidden, cfg.ho_hidden);
    EXPECT_EQ(cp.config.seed, 77u);
    EXPECT_EQ(cp.names, a.parameter_names());
    Model b(cp.config, &*t.debruijn, t.aggregated);
    b.set_parameters(cp.parameters);
    EXPECT_EQ(forward(a), forward(b));
}

TEST(Checkpoint, RejectsGarbage) {
    std::istringstream bad("not a checkpoint");
    EXPECT_THROW(read_checkpoint(bad), DataError);
    std::istringstream truncated("dbgnn-checkpoint 1\nparameters 1\nmatrix w 2 2\n1 2 3\n");
    EXPECT_THROW(read_checkpoint(truncated), DataError);
}

TEST(Aggregators, ParseAndPrint) {
    for (auto a : {Aggregator::Sum, Aggregator::Mean, Aggregator::Max, Aggregator::Min})
        EXPECT_EQ(parse_aggregator(to_string(a)), a);
    EXPECT_THROW(parse_aggregator("median"), std::invalid_argument);
}
