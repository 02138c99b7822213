#pragma once

#include <dbgnn/debruijn.hpp>
#include <dbgnn/matrix.hpp>

#include <iosfwd>
#include <optional>
#include <random>
#include <string>

namespace dbgnn {

/// Symmetrically normalized propagation with a unit self-loop per node:
///   out[v] = Σ_{u ∈ in(v) ∪ {v}} w(u,v) · h[u] / sqrt(S̃(v) · S̃(u)),
/// where S̃(x) is the in-strength of x plus one.
class Propagation {
public:
    Propagation() = default;
    Propagation(std::size_t n, const std::vector<WeightedEdge>& edges);

    static Propagation of(const DeBruijnGraph& d);
    static Propagation of(const StaticWeightedGraph& s);

    std::size_t size() const noexcept { return n_; }
    std::size_t nonzeros() const noexcept { return sources_.size(); }
    /// S̃ per node (in-strength including the self-loop).
    const std::vector<double>& strengths() const noexcept { return strength_; }

    Matrix apply(const Matrix& h) const;
    Matrix apply_transpose(const Matrix& g) const;
    /// Dense normalized adjacency, entry (v, u) = coefficient of h[u] in out[v].
    Matrix dense() const;

private:
    std::size_t n_ = 0;
    std::vector<std::size_t> offsets_;  // CSR grouped by target
    std::vector<std::size_t> sources_;
    std::vector<double> coefs_;
    std::vector<double> strength_;
};

/// Node input features: either a dense matrix or an implicit one-hot identity.
class NodeFeatures {
public:
    static NodeFeatures one_hot(std::size_t n) { return NodeFeatures(n); }
    static NodeFeatures dense(Matrix m) { return NodeFeatures(std::move(m)); }

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return dense_ ? dense_->cols() : rows_; }
    bool is_one_hot() const noexcept { return !dense_; }

    /// X · w
    Matrix multiply(const Matrix& w) const;
    /// Xᵀ · g
    Matrix multiply_transposed(const Matrix& g) const;

private:
    explicit NodeFeatures(std::size_t n) : rows_(n) {}
    explicit NodeFeatures(Matrix m) : rows_(m.rows()), dense_(std::move(m)) {}

    std::size_t rows_ = 0;
    std::optional<Matrix> dense_;
};

enum class Aggregator { Sum, Mean, Max, Min };

Aggregator parse_aggregator(const std::string& name);
std::string to_string(Aggregator a);

/// Forward pass of one message-passing layer: elu(P · (X · W)).
struct LayerForward {
    Matrix pre_activation;
    Matrix output;
};

LayerForward message_passing_forward(const Propagation& p, const NodeFeatures& x, const Matrix& w);
LayerForward message_passing_forward(const Propagation& p, const Matrix& h, const Matrix& w);

struct LayerGradients {
    Matrix d_input;
    Matrix d_weight;
};

/// Reverse pass of message_passing_forward given d loss / d output.
LayerGradients message_passing_backward(const Propagation& p, const Matrix& h, const Matrix& w,
                                        const LayerForward& fwd, const Matrix& upstream);

/// Message passing on a De Bruijn graph (σ = ELU).
Matrix ho_layer_forward(const Matrix& h, const DeBruijnGraph& d, const Matrix& w);
/// GCN layer on the weighted time-aggregated graph (σ = ELU).
Matrix fo_layer_forward(const Matrix& h, const StaticWeightedGraph& s, const Matrix& w);

struct BipartiteForward {
    Matrix aggregate;       // F({h_ho[u] + h_fo[v]}) per first-order node
    Matrix pre_activation;  // aggregate · W_b
    Matrix output;          // elu(pre_activation)
    std::vector<std::size_t> member_offsets;  // CSR over first-order nodes
    std::vector<std::size_t> members;         // ho nodes projecting to each v
    // For MAX/MIN: winning ho node per (v, feature); unused otherwise.
    std::vector<std::size_t> selected;
};

/// Aggregates augmented higher-order representations onto first-order nodes.
/// A node no higher-order node projects to falls back to elu(h_fo[v] · W_b).
BipartiteForward bipartite_forward(const Matrix& h_ho, const Matrix& h_fo, const BipartiteProjection& b,
                                   const Matrix& w_b, Aggregator aggregator);

struct BipartiteGradients {
    Matrix d_ho;
    Matrix d_fo;
    Matrix d_weight;
};

BipartiteGradients bipartite_backward(const BipartiteForward& fwd, const Matrix& h_ho, const Matrix& h_fo,
                                      const BipartiteProjection& b, const Matrix& w_b, Aggregator aggregator,
                                      const Matrix& upstream);

enum class ModelKind { Dbgnn, Gcn };

struct ModelConfig {
    ModelKind kind = ModelKind::Dbgnn;
    /// Hidden widths of the higher-order branch, excluding the one-hot input.
    std::vector<std::size_t> ho_hidden{16, 16};
    /// Hidden widths of the first-order branch, excluding the one-hot input.
    std::vector<std::size_t> fo_hidden{16, 16};
    Aggregator aggregator = Aggregator::Sum;
    std::size_t representation_dim = 16;
    std::size_t classes = 2;
    std::uint64_t seed = 0;
};

struct Tape {
    std::vector<LayerForward> ho_layers;
    std::vector<LayerForward> fo_layers;
    std::optional<BipartiteForward> bipartite;
};

struct ForwardResult {
    Matrix logits;
    Matrix representation;  // h_b for DBGNN, last first-order layer for GCN
    Tape tape;
};

/// DBGNN (higher-order branch + first-order branch + bipartite layer + linear
/// classifier) or the first-order GCN baseline, over frozen graph structure.
class Model {
public:
    /// `ho` is required for ModelKind::Dbgnn and ignored for the baseline.
    Model(ModelConfig config, const DeBruijnGraph* ho, const StaticWeightedGraph& fo);

    const ModelConfig& config() const noexcept { return config_; }
    std::size_t node_count() const noexcept { return fo_prop_.size(); }
    std::size_t ho_node_count() const noexcept { return ho_prop_.size(); }

    ForwardResult forward() const;
    /// Reverse-mode gradients of the loss w.r.t. every parameter, given
    /// d loss / d logits.
    std::vector<Matrix> backward(const ForwardResult& fwd, const Matrix& d_logits) const;

    std::vector<Matrix*> parameters();
    std::vector<const Matrix*> parameters() const;
    std::vector<std::string> parameter_names() const;
    void set_parameters(const std::vector<Matrix>& values);

    /// Replaces the one-hot inputs (tests and user-supplied features).
    void set_features(NodeFeatures ho, NodeFeatures fo);

private:
    ModelConfig config_;
    Propagation ho_prop_;
    Propagation fo_prop_;
    BipartiteProjection projection_;
    NodeFeatures ho_features_ = NodeFeatures::one_hot(0);
    NodeFeatures fo_features_ = NodeFeatures::one_hot(0);
    std::vector<Matrix> ho_weights_;
    std::vector<Matrix> fo_weights_;
    Matrix bipartite_weight_;
    Matrix classifier_;
};

Matrix forward(const Model& model);
/// Logits of a baseline model; throws if `model` is not a GCN baseline.
Matrix gcn_baseline_forward(const Model& model);

/// Uniform in ±sqrt(6 / (fan_in + fan_out)).
Matrix glorot_uniform(std::size_t fan_in, std::size_t fan_out, std::mt19937_64& rng);

void save_checkpoint(std::ostream& out, const Model& model);

struct Checkpoint {
    ModelConfig config;
    std::vector<std::string> names;
    std::vector<Matrix> parameters;
};

Checkpoint read_checkpoint(std::istream& in);

}  // namespace dbgnn
