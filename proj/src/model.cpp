#include <dbgnn/model.hpp>
#include <dbgnn/numerics.hpp>

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

namespace dbgnn {

Propagation::Propagation(std::size_t n, const std::vector<WeightedEdge>& edges) : n_(n), strength_(n, 1.0) {
    std::vector<std::vector<std::pair<std::size_t, double>>> incoming(n);
    for (const auto& e : edges) {
        if (e.source >= n || e.target >= n) throw std::invalid_argument("propagation edge out of range");
        strength_[e.target] += static_cast<double>(e.weight);
        incoming[e.target].emplace_back(e.source, static_cast<double>(e.weight));
    }
    offsets_.reserve(n + 1);
    offsets_.push_back(0);
    for (std::size_t v = 0; v < n; ++v) {
        auto& in = incoming[v];
        in.emplace_back(v, 1.0);  // implicit self-loop
        std::stable_sort(in.begin(), in.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
        for (const auto& [u, w] : in) {
            sources_.push_back(u);
            coefs_.push_back(w / std::sqrt(strength_[v] * strength_[u]));
        }
        offsets_.push_back(sources_.size());
    }
}

Propagation Propagation::of(const DeBruijnGraph& d) { return Propagation(d.node_count(), d.edges()); }

Propagation Propagation::of(const StaticWeightedGraph& s) {
    std::vector<WeightedEdge> edges;
    edges.reserve(s.edges.size());
    for (const auto& [key, w] : s.edges) edges.push_back({key.first, key.second, w});
    return Propagation(s.node_count(), edges);
}

Matrix Propagation::apply(const Matrix& h) const {
    if (h.rows() != n_) throw std::invalid_argument("propagation: row count mismatch");
    Matrix out(n_, h.cols());
    for (std::size_t v = 0; v < n_; ++v) {
        auto dst = out.row(v);
        for (std::size_t i = offsets_[v]; i < offsets_[v + 1]; ++i) {
            const auto src = h.row(sources_[i]);
            const double c = coefs_[i];
            for (std::size_t j = 0; j < dst.size(); ++j) dst[j] += c * src[j];
        }
    }
    return out;
}

Matrix Propagation::apply_transpose(const Matrix& g) const {
    if (g.rows() != n_) throw std::invalid_argument("propagation: row count mismatch");
    Matrix out(n_, g.cols());
    for (std::size_t v = 0; v < n_; ++v) {
        const auto src = g.row(v);
        for (std::size_t i = offsets_[v]; i < offsets_[v + 1]; ++i) {
            auto dst = out.row(sources_[i]);
            const double c = coefs_[i];
            for (std::size_t j = 0; j < dst.size(); ++j) dst[j] += c * src[j];
        }
    }
    return out;
}

Matrix Propagation::dense() const {
    Matrix a(n_, n_);
    for (std::size_t v = 0; v < n_; ++v)
        for (std::size_t i = offsets_[v]; i < offsets_[v + 1]; ++i) a(v, sources_[i]) += coefs_[i];
    return a;
}

Matrix NodeFeatures::multiply(const Matrix& w) const {
    if (w.rows() != cols()) throw std::invalid_argument("features: weight shape mismatch");
    if (dense_) return matmul(*dense_, w);
    return w;
}

Matrix NodeFeatures::multiply_transposed(const Matrix& g) const {
    if (g.rows() != rows_) throw std::invalid_argument("features: gradient shape mismatch");
    if (dense_) return matmul_tn(*dense_, g);
    return g;
}

Aggregator parse_aggregator(const std::string& name) {
    std::string s = name;
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
    if (s == "sum") return Aggregator::Sum;
    if (s == "mean") return Aggregator::Mean;
    if (s == "max") return Aggregator::Max;
    if (s == "min") return Aggregator::Min;
    throw std::invalid_argument("unknown aggregator '" + name + "' (expected sum, mean, max, min)");
}

std::string to_string(Aggregator a) {
    switch (a) {
        case Aggregator::Sum: return "sum";
        case Aggregator::Mean: return "mean";
        case Aggregator::Max: return "max";
        case Aggregator::Min: return "min";
    }
    return "sum";
}

LayerForward message_passing_forward(const Propagation& p, const NodeFeatures& x, const Matrix& w) {
    LayerForward out;
    out.pre_activation = p.apply(x.multiply(w));
    out.output = elu(out.pre_activation);
    return out;
}

LayerForward message_passing_forward(const Propagation& p, const Matrix& h, const Matrix& w) {
    LayerForward out;
    out.pre_activation = p.apply(matmul(h, w));
    out.output = elu(out.pre_activation);
    return out;
}

LayerGradients message_passing_backward(const Propagation& p, const Matrix& h, const Matrix& w,
                                        const LayerForward& fwd, const Matrix& upstream) {
    const Matrix d_z = p.apply_transpose(elu_backward(fwd.pre_activation, upstream));
    return {matmul_nt(d_z, w), matmul_tn(h, d_z)};
}

Matrix ho_layer_forward(const Matrix& h, const DeBruijnGraph& d, const Matrix& w) {
    if (h.rows() != d.node_count()) throw std::invalid_argument("ho layer: input rows must match De Bruijn nodes");
    return message_passing_forward(Propagation::of(d), h, w).output;
}

Matrix fo_layer_forward(const Matrix& h, const StaticWeightedGraph& s, const Matrix& w) {
    if (h.rows() != s.node_count()) throw std::invalid_argument("fo layer: input rows must match nodes");
    return message_passing_forward(Propagation::of(s), h, w).output;
}

namespace {

void group_members(const BipartiteProjection& b, std::vector<std::size_t>& offsets, std::vector<std::size_t>& members) {
    const std::size_t n = b.first_order_count;
    offsets.assign(n + 1, 0);
    for (NodeIndex v : b.target) {
        if (v >= n) throw std::invalid_argument("bipartite projection target out of range");
        ++offsets[v + 1];
    }
    for (std::size_t v = 0; v < n; ++v) offsets[v + 1] += offsets[v];
    members.assign(b.target.size(), 0);
    std::vector<std::size_t> cursor(offsets.begin(), offsets.end() - 1);
    for (std::size_t u = 0; u < b.target.size(); ++u) members[cursor[b.target[u]]++] = u;
}

}  // namespace

BipartiteForward bipartite_forward(const Matrix& h_ho, const Matrix& h_fo, const BipartiteProjection& b,
                                   const Matrix& w_b, Aggregator aggregator) {
    if (h_ho.cols() != h_fo.cols())
        throw std::invalid_argument("bipartite layer: higher- and first-order widths must agree");
    if (h_ho.rows() != b.target.size() || h_fo.rows() != b.first_order_count)
        throw std::invalid_argument("bipartite layer: projection does not match inputs");
    if (w_b.rows() != h_fo.cols()) throw std::invalid_argument("bipartite layer: weight shape mismatch");

    BipartiteForward f;
    group_members(b, f.member_offsets, f.members);
    const std::size_t n = h_fo.rows(), dim = h_fo.cols();
    f.aggregate = Matrix(n, dim);
    const bool selecting = aggregator == Aggregator::Max || aggregator == Aggregator::Min;
    if (selecting) f.selected.assign(n * dim, std::numeric_limits<std::size_t>::max());

    for (std::size_t v = 0; v < n; ++v) {
        auto agg = f.aggregate.row(v);
        const auto fo = h_fo.row(v);
        const std::size_t begin = f.member_offsets[v], end = f.member_offsets[v + 1];
        const std::size_t count = end - begin;
        if (count == 0) {
            std::copy(fo.begin(), fo.end(), agg.begin());
            continue;
        }
        switch (aggregator) {
            case Aggregator::Sum:
            case Aggregator::Mean: {
                for (std::size_t i = begin; i < end; ++i) {
                    const auto ho = h_ho.row(f.members[i]);
                    for (std::size_t j = 0; j < dim; ++j) agg[j] += ho[j];
                }
                const double scale = aggregator == Aggregator::Mean ? 1.0 / static_cast<double>(count) : 1.0;
                const double fo_weight = aggregator == Aggregator::Mean ? 1.0 : static_cast<double>(count);
                for (std::size_t j = 0; j < dim; ++j) agg[j] = agg[j] * scale + fo_weight * fo[j];
                break;
            }
            case Aggregator::Max:
            case Aggregator::Min: {
                const bool is_max = aggregator == Aggregator::Max;
                for (std::size_t j = 0; j < dim; ++j) {
                    std::size_t best = f.members[begin];
                    for (std::size_t i = begin + 1; i < end; ++i) {
                        const std::size_t u = f.members[i];
                        if (is_max ? h_ho(u, j) > h_ho(best, j) : h_ho(u, j) < h_ho(best, j)) best = u;
                    }
                    f.selected[v * dim + j] = best;
                    agg[j] = h_ho(best, j) + fo[j];
                }
                break;
            }
        }
    }
    f.pre_activation = matmul(f.aggregate, w_b);
    f.output = elu(f.pre_activation);
    return f;
}

BipartiteGradients bipartite_backward(const BipartiteForward& fwd, const Matrix& h_ho, const Matrix& h_fo,
                                      const BipartiteProjection& b, const Matrix& w_b, Aggregator aggregator,
                                      const Matrix& upstream) {
    (void)b;
    BipartiteGradients g;
    const Matrix d_pre = elu_backward(fwd.pre_activation, upstream);
    g.d_weight = matmul_tn(fwd.aggregate, d_pre);
    const Matrix d_agg = matmul_nt(d_pre, w_b);

    const std::size_t n = h_fo.rows(), dim = h_fo.cols();
    g.d_ho = Matrix(h_ho.rows(), h_ho.cols());
    g.d_fo = Matrix(n, dim);
    for (std::size_t v = 0; v < n; ++v) {
        const auto da = d_agg.row(v);
        auto dfo = g.d_fo.row(v);
        const std::size_t begin = fwd.member_offsets[v], end = fwd.member_offsets[v + 1];
        const std::size_t count = end - begin;
        if (count == 0) {
            std::copy(da.begin(), da.end(), dfo.begin());
            continue;
        }
        switch (aggregator) {
            case Aggregator::Sum:
            case Aggregator::Mean: {
                const bool mean = aggregator == Aggregator::Mean;
                const double ho_scale = mean ? 1.0 / static_cast<double>(count) : 1.0;
                const double fo_scale = mean ? 1.0 : static_cast<double>(count);
                for (std::size_t i = begin; i < end; ++i) {
                    auto dho = g.d_ho.row(fwd.members[i]);
                    for (std::size_t j = 0; j < dim; ++j) dho[j] += ho_scale * da[j];
                }
                for (std::size_t j = 0; j < dim; ++j) dfo[j] = fo_scale * da[j];
                break;
            }
            case Aggregator::Max:
            case Aggregator::Min:
                for (std::size_t j = 0; j < dim; ++j) {
                    g.d_ho(fwd.selected[v * dim + j], j) += da[j];
                    dfo[j] = da[j];
                }
                break;
        }
    }
    return g;
}

Matrix glorot_uniform(std::size_t fan_in, std::size_t fan_out, std::mt19937_64& rng) {
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    std::uniform_real_distribution<double> dist(-limit, limit);
    Matrix w(fan_in, fan_out);
    for (double& x : w.data()) x = dist(rng);
    return w;
}

Model::Model(ModelConfig config, const DeBruijnGraph* ho, const StaticWeightedGraph& fo)
    : config_(std::move(config)), fo_prop_(Propagation::of(fo)) {
    if (config_.fo_hidden.empty()) throw std::invalid_argument("first-order branch needs at least one layer");
    if (config_.classes < 1) throw std::invalid_argument("class count must be >= 1");
    for (auto d : config_.fo_hidden)
        if (d < 1) throw std::invalid_argument("layer widths must be >= 1");

    std::mt19937_64 rng(config_.seed);
    fo_features_ = NodeFeatures::one_hot(fo.node_count());
    std::size_t in = fo.node_count();
    for (auto out : config_.fo_hidden) {
        fo_weights_.push_back(glorot_uniform(in, out, rng));
        in = out;
    }

    if (config_.kind == ModelKind::Gcn) {
        classifier_ = glorot_uniform(config_.fo_hidden.back(), config_.classes, rng);
        return;
    }

    if (!ho) throw std::invalid_argument("DBGNN requires a De Bruijn graph");
    if (config_.ho_hidden.empty()) throw std::invalid_argument("higher-order branch needs at least one layer");
    for (auto d : config_.ho_hidden)
        if (d < 1) throw std::invalid_argument("layer widths must be >= 1");
    if (config_.ho_hidden.back() != config_.fo_hidden.back())
        throw std::invalid_argument("last higher-order and first-order widths must be equal");
    if (config_.representation_dim < 1) throw std::invalid_argument("representation dimension must be >= 1");
    if (ho->first_order_nodes().size() != fo.node_count())
        throw std::invalid_argument("De Bruijn graph and first-order graph disagree on node count");

    ho_prop_ = Propagation::of(*ho);
    projection_ = bipartite_projection(*ho);
    ho_features_ = NodeFeatures::one_hot(ho->node_count());
    in = ho->node_count();
    for (auto out : config_.ho_hidden) {
        ho_weights_.push_back(glorot_uniform(in, out, rng));
        in = out;
    }
    bipartite_weight_ = glorot_uniform(config_.fo_hidden.back(), config_.representation_dim, rng);
    classifier_ = glorot_uniform(config_.representation_dim, config_.classes, rng);
}

void Model::set_features(NodeFeatures ho, NodeFeatures fo) {
    if (fo.rows() != fo_prop_.size() || fo.cols() != fo_weights_.front().rows())
        throw std::invalid_argument("first-order features do not match the model");
    if (config_.kind == ModelKind::Dbgnn &&
        (ho.rows() != ho_prop_.size() || ho.cols() != ho_weights_.front().rows()))
        throw std::invalid_argument("higher-order features do not match the model");
    ho_features_ = std::move(ho);
    fo_features_ = std::move(fo);
}

namespace {

std::vector<LayerForward> run_branch(const Propagation& p, const NodeFeatures& x, const std::vector<Matrix>& weights) {
    std::vector<LayerForward> layers;
    layers.reserve(weights.size());
    layers.push_back(message_passing_forward(p, x, weights.front()));
    for (std::size_t i = 1; i < weights.size(); ++i)
        layers.push_back(message_passing_forward(p, layers.back().output, weights[i]));
    return layers;
}

// Returns weight gradients for the branch (in layer order).
std::vector<Matrix> branch_backward(const Propagation& p, const NodeFeatures& x, const std::vector<Matrix>& weights,
                                    const std::vector<LayerForward>& layers, Matrix upstream) {
    std::vector<Matrix> grads(weights.size());
    for (std::size_t i = weights.size(); i-- > 1;) {
        LayerGradients g = message_passing_backward(p, layers[i - 1].output, weights[i], layers[i], upstream);
        grads[i] = std::move(g.d_weight);
        upstream = std::move(g.d_input);
    }
    grads[0] = x.multiply_transposed(p.apply_transpose(elu_backward(layers[0].pre_activation, upstream)));
    return grads;
}

}  // namespace

ForwardResult Model::forward() const {
    ForwardResult r;
    r.tape.fo_layers = run_branch(fo_prop_, fo_features_, fo_weights_);
    if (config_.kind == ModelKind::Gcn) {
        r.representation = r.tape.fo_layers.back().output;
        r.logits = matmul(r.representation, classifier_);
        return r;
    }
    r.tape.ho_layers = run_branch(ho_prop_, ho_features_, ho_weights_);
    r.tape.bipartite = bipartite_forward(r.tape.ho_layers.back().output, r.tape.fo_layers.back().output,
                                         projection_, bipartite_weight_, config_.aggregator);
    r.representation = r.tape.bipartite->output;
    r.logits = matmul(r.representation, classifier_);
    return r;
}

std::vector<Matrix> Model::backward(const ForwardResult& fwd, const Matrix& d_logits) const {
    if (!d_logits.same_shape(fwd.logits)) throw std::invalid_argument("backward: gradient shape mismatch");
    const Matrix d_classifier = matmul_tn(fwd.representation, d_logits);
    const Matrix d_repr = matmul_nt(d_logits, classifier_);

    std::vector<Matrix> grads;
    if (config_.kind == ModelKind::Gcn) {
        grads = branch_backward(fo_prop_, fo_features_, fo_weights_, fwd.tape.fo_layers, d_repr);
        grads.push_back(d_classifier);
        return grads;
    }

    const Matrix& h_ho = fwd.tape.ho_layers.back().output;
    const Matrix& h_fo = fwd.tape.fo_layers.back().output;
    BipartiteGradients bg = bipartite_backward(*fwd.tape.bipartite, h_ho, h_fo, projection_, bipartite_weight_,
                                               config_.aggregator, d_repr);
    grads = branch_backward(ho_prop_, ho_features_, ho_weights_, fwd.tape.ho_layers, std::move(bg.d_ho));
    auto fo_grads = branch_backward(fo_prop_, fo_features_, fo_weights_, fwd.tape.fo_layers, std::move(bg.d_fo));
    for (auto& g : fo_grads) grads.push_back(std::move(g));
    grads.push_back(std::move(bg.d_weight));
    grads.push_back(d_classifier);
    return grads;
}

std::vector<Matrix*> Model::parameters() {
    std::vector<Matrix*> p;
    for (auto& w : ho_weights_) p.push_back(&w);
    for (auto& w : fo_weights_) p.push_back(&w);
    if (config_.kind == ModelKind::Dbgnn) p.push_back(&bipartite_weight_);
    p.push_back(&classifier_);
    return p;
}

std::vector<const Matrix*> Model::parameters() const {
    std::vector<const Matrix*> p;
    for (auto* m : const_cast<Model*>(this)->parameters()) p.push_back(m);
    return p;
}

std::vector<std::string> Model::parameter_names() const {
    std::vector<std::string> names;
    for (std::size_t i = 0; i < ho_weights_.size(); ++i) names.push_back("ho." + std::to_string(i));
    for (std::size_t i = 0; i < fo_weights_.size(); ++i) names.push_back("fo." + std::to_string(i));
    if (config_.kind == ModelKind::Dbgnn) names.push_back("bipartite");
    names.push_back("classifier");
    return names;
}

void Model::set_parameters(const std::vector<Matrix>& values) {
    auto params = parameters();
    if (values.size() != params.size()) throw std::invalid_argument("parameter count mismatch");
    for (std::size_t i = 0; i < params.size(); ++i)
        if (!params[i]->same_shape(values[i])) throw std::invalid_argument("parameter shape mismatch");
    for (std::size_t i = 0; i < params.size(); ++i) *params[i] = values[i];
}

Matrix forward(const Model& model) { return model.forward().logits; }

Matrix gcn_baseline_forward(const Model& model) {
    if (model.config().kind != ModelKind::Gcn) throw std::invalid_argument("model is not a GCN baseline");
    return model.forward().logits;
}

namespace {

void write_dims(std::ostream& out, const char* key, const std::vector<std::size_t>& dims) {
    out << key;
    for (auto d : dims) out << ' ' << d;
    out << '\n';
}

}  // namespace

void save_checkpoint(std::ostream& out, const Model& model) {
    const auto& c = model.config();
    out << "dbgnn-checkpoint 1\n";
    out << "kind " << (c.kind == ModelKind::Dbgnn ? "dbgnn" : "gcn") << '\n';
    write_dims(out, "ho_hidden", c.ho_hidden);
    write_dims(out, "fo_hidden", c.fo_hidden);
    out << "aggregator " << to_string(c.aggregator) << '\n';
    out << "representation_dim " << c.representation_dim << '\n';
    out << "classes " << c.classes << '\n';
    out << "seed " << c.seed << '\n';
    const auto names = model.parameter_names();
    const auto params = model.parameters();
    out << "parameters " << params.size() << '\n';
    out << std::setprecision(17);
    for (std::size_t i = 0; i < params.size(); ++i) {
        const Matrix& m = *params[i];
        out << "matrix " << names[i] << ' ' << m.rows() << ' ' << m.cols() << '\n';
        for (std::size_t r = 0; r < m.rows(); ++r) {
            for (std::size_t j = 0; j < m.cols(); ++j) out << (j ? " " : "") << m(r, j);
            out << '\n';
        }
    }
    out << "end\n";
}

Checkpoint read_checkpoint(std::istream& in) {
    Checkpoint cp;
    std::string word;
    int version = 0;
    if (!(in >> word >> version) || word != "dbgnn-checkpoint" || version != 1)
        throw DataError("not a dbgnn checkpoint (version 1)");
    const auto read_dims = [&in](std::vector<std::size_t>& dims) {
        dims.clear();
        std::string line;
        std::getline(in, line);
        std::istringstream ls(line);
        std::size_t d;
        while (ls >> d) dims.push_back(d);
    };
    std::size_t count = 0;
    while (in >> word) {
        if (word == "kind") {
            in >> word;
            if (word == "dbgnn") cp.config.kind = ModelKind::Dbgnn;
            else if (word == "gcn") cp.config.kind = ModelKind::Gcn;
            else throw DataError("unknown model kind '" + word + "'");
        } else if (word == "ho_hidden") {
            read_dims(cp.config.ho_hidden);
        } else if (word == "fo_hidden") {
            read_dims(cp.config.fo_hidden);
        } else if (word == "aggregator") {
            in >> word;
            cp.config.aggregator = parse_aggregator(word);
        } else if (word == "representation_dim") {
            in >> cp.config.representation_dim;
        } else if (word == "classes") {
            in >> cp.config.classes;
        } else if (word == "seed") {
            in >> cp.config.seed;
        } else if (word == "parameters") {
            in >> count;
        } else if (word == "matrix") {
            std::string name;
            std::size_t rows = 0, cols = 0;
            in >> name >> rows >> cols;
            Matrix m(rows, cols);
            for (double& x : m.data())
                if (!(in >> x)) throw DataError("truncated matrix '" + name + "' in checkpoint");
            cp.names.push_back(name);
            cp.parameters.push_back(std::move(m));
        } else if (word == "end") {
            break;
        } else {
            throw DataError("unexpected checkpoint field '" + word + "'");
        }
        if (!in) throw DataError("malformed checkpoint");
    }
    if (cp.parameters.size() != count) throw DataError("checkpoint parameter count mismatch");
    return cp;
}

}  // namespace dbgnn
