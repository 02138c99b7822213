#include <dbgnn/experiment.hpp>
#include <dbgnn/numerics.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <iomanip>
#include <istream>
#include <numeric>
#include <ostream>
#include <random>
#include <set>
#include <sstream>
#include <thread>

namespace dbgnn {

namespace {

std::vector<std::string> split_row(const std::string& line) {
    std::vector<std::string> out;
    if (line.find(',') != std::string::npos) {
        std::stringstream ss(line);
        std::string f;
        while (std::getline(ss, f, ',')) {
            const auto b = f.find_first_not_of(" \t\r");
            const auto e = f.find_last_not_of(" \t\r");
            out.push_back(b == std::string::npos ? std::string() : f.substr(b, e - b + 1));
        }
    } else {
        std::istringstream ss(line);
        std::string f;
        while (ss >> f) out.push_back(f);
    }
    return out;
}

}  // namespace

NodeLabels read_labels(std::istream& in, const NodeSet& nodes) {
    std::vector<std::string> raw(nodes.size());
    std::vector<bool> seen(nodes.size(), false);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        if (line[line.find_first_not_of(" \t")] == '#') continue;
        const auto fields = split_row(line);
        if (fields.size() != 2 || fields[0].empty() || fields[1].empty())
            throw ParseError(lineno, "expected `node,label`");
        if (lineno == 1 && fields[0] == "node" && fields[1] == "label") continue;
        if (!nodes.contains(fields[0])) continue;
        const NodeIndex v = nodes.index(fields[0]);
        if (seen[v] && raw[v] != fields[1]) throw ParseError(lineno, "conflicting label for node '" + fields[0] + "'");
        raw[v] = fields[1];
        seen[v] = true;
    }

    NodeLabels labels;
    std::set<std::string> names;
    for (std::size_t v = 0; v < raw.size(); ++v)
        if (seen[v]) names.insert(raw[v]);
    if (names.empty()) throw DataError("label file assigns no label to any graph node");
    labels.class_names.assign(names.begin(), names.end());
    labels.label.assign(nodes.size(), -1);
    for (std::size_t v = 0; v < raw.size(); ++v) {
        if (!seen[v]) continue;
        labels.label[v] = static_cast<int>(
            std::lower_bound(labels.class_names.begin(), labels.class_names.end(), raw[v]) - labels.class_names.begin());
    }
    return labels;
}

NodeLabels read_labels(const std::string& path, const NodeSet& nodes) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open label file '" + path + "'");
    return read_labels(in, nodes);
}

void write_labels(std::ostream& out, const NodeLabels& labels, const NodeSet& nodes) {
    out << "node,label\n";
    for (std::size_t v = 0; v < labels.label.size(); ++v)
        if (labels.label[v] >= 0) out << nodes.label(static_cast<NodeIndex>(v)) << ',' << labels.class_names[labels.label[v]] << '\n';
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
    // splitmix64 over a stream-tagged seed
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

Split split(const std::vector<int>& labels, double train_fraction, std::uint64_t seed) {
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) throw std::invalid_argument("train fraction must lie in (0, 1)");
    int max_label = -1;
    for (int l : labels) max_label = std::max(max_label, l);
    if (max_label < 0) throw std::invalid_argument("no labelled nodes to split");

    std::vector<std::vector<std::size_t>> members(static_cast<std::size_t>(max_label) + 1);
    std::size_t labelled = 0;
    for (std::size_t v = 0; v < labels.size(); ++v) {
        if (labels[v] < 0) continue;
        members[labels[v]].push_back(v);
        ++labelled;
    }

    const std::size_t classes = members.size();
    const auto target = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(labelled)));
    std::vector<std::size_t> quota(classes);
    std::vector<double> remainder(classes);
    std::size_t assigned = 0;
    for (std::size_t c = 0; c < classes; ++c) {
        const double ideal = train_fraction * static_cast<double>(members[c].size());
        quota[c] = static_cast<std::size_t>(std::floor(ideal));
        remainder[c] = ideal - std::floor(ideal);
        assigned += quota[c];
    }
    std::vector<std::size_t> order(classes);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return remainder[a] > remainder[b]; });
    for (std::size_t i = 0; assigned < target && i < classes; ++i) {
        const std::size_t c = order[i];
        if (quota[c] < members[c].size()) {
            ++quota[c];
            ++assigned;
        }
    }
    for (std::size_t c = 0; c < classes; ++c)
        if (!members[c].empty() && quota[c] == members[c].size()) --quota[c];

    std::mt19937_64 rng(seed);
    Split s{std::vector<bool>(labels.size(), false), std::vector<bool>(labels.size(), false)};
    for (std::size_t c = 0; c < classes; ++c) {
        auto nodes = members[c];
        std::shuffle(nodes.begin(), nodes.end(), rng);
        for (std::size_t i = 0; i < nodes.size(); ++i) (i < quota[c] ? s.train : s.test)[nodes[i]] = true;
    }
    return s;
}

TrainResult train(Model& model, const TrainConfig& config, const std::vector<int>& labels,
                  const std::vector<bool>& train_mask) {
    if (labels.size() != model.node_count() || train_mask.size() != model.node_count())
        throw std::invalid_argument("labels and mask must cover every node");
    TrainResult result;
    result.losses.reserve(config.epochs);
    auto params = model.parameters();
    AdamState adam(params, AdamOptions{config.lr});
    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        const ForwardResult fwd = model.forward();
        const LossAndGradient loss = softmax_cross_entropy(fwd.logits, labels, train_mask);
        if (!std::isfinite(loss.loss))
            throw NumericError("non-finite training loss at epoch " + std::to_string(epoch));
        result.losses.push_back(loss.loss);
        adam.update(params, model.backward(fwd, loss.grad));
    }
    return result;
}

std::vector<int> predict(const Matrix& logits) {
    std::vector<int> out(logits.rows());
    for (std::size_t r = 0; r < logits.rows(); ++r) {
        const auto row = logits.row(r);
        out[r] = static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
    }
    return out;
}

std::vector<std::vector<std::size_t>> confusion_matrix(const std::vector<int>& truth, const std::vector<int>& predicted,
                                                       std::size_t classes) {
    if (truth.size() != predicted.size()) throw std::invalid_argument("confusion matrix: size mismatch");
    std::vector<std::vector<std::size_t>> m(classes, std::vector<std::size_t>(classes, 0));
    for (std::size_t i = 0; i < truth.size(); ++i) {
        if (truth[i] < 0 || static_cast<std::size_t>(truth[i]) >= classes || predicted[i] < 0 ||
            static_cast<std::size_t>(predicted[i]) >= classes)
            throw std::invalid_argument("confusion matrix: class out of range");
        ++m[truth[i]][predicted[i]];
    }
    return m;
}

Metrics metrics_from_confusion(const std::vector<std::vector<std::size_t>>& confusion) {
    const std::size_t classes = confusion.size();
    std::vector<double> support(classes, 0.0), predicted(classes, 0.0);
    for (std::size_t t = 0; t < classes; ++t) {
        if (confusion[t].size() != classes) throw std::invalid_argument("confusion matrix must be square");
        for (std::size_t p = 0; p < classes; ++p) {
            support[t] += static_cast<double>(confusion[t][p]);
            predicted[p] += static_cast<double>(confusion[t][p]);
        }
    }
    Metrics m;
    std::size_t supported = 0, present = 0;
    for (std::size_t c = 0; c < classes; ++c) {
        const double tp = static_cast<double>(confusion[c][c]);
        const double recall = support[c] > 0 ? tp / support[c] : 0.0;
        const double precision = predicted[c] > 0 ? tp / predicted[c] : 0.0;
        if (support[c] > 0) {
            m.balanced_accuracy += recall;
            ++supported;
        }
        if (support[c] > 0 || predicted[c] > 0) {
            m.recall_macro += recall;
            m.precision_macro += precision;
            m.f1_macro += precision + recall > 0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
            ++present;
        }
    }
    if (supported == 0) throw std::invalid_argument("metrics need at least one evaluated sample");
    m.balanced_accuracy /= static_cast<double>(supported);
    m.recall_macro /= static_cast<double>(present);
    m.precision_macro /= static_cast<double>(present);
    m.f1_macro /= static_cast<double>(present);
    return m;
}

Metrics evaluate(const Model& model, const std::vector<bool>& test_mask, const std::vector<int>& labels) {
    if (labels.size() != model.node_count() || test_mask.size() != model.node_count())
        throw std::invalid_argument("labels and mask must cover every node");
    const auto pred = predict(model.forward().logits);
    std::vector<int> truth, guess;
    for (std::size_t v = 0; v < labels.size(); ++v) {
        if (!test_mask[v]) continue;
        if (labels[v] < 0) throw std::invalid_argument("test node without a label");
        truth.push_back(labels[v]);
        guess.push_back(pred[v]);
    }
    if (truth.empty()) throw std::invalid_argument("empty test mask");
    return metrics_from_confusion(confusion_matrix(truth, guess, model.config().classes));
}

MetricsSummary summarize(const std::vector<Metrics>& runs) {
    if (runs.empty()) throw std::invalid_argument("no runs to summarize");
    MetricsSummary s;
    s.runs = runs;
    const double n = static_cast<double>(runs.size());
    const auto fields = {&Metrics::balanced_accuracy, &Metrics::precision_macro, &Metrics::recall_macro,
                         &Metrics::f1_macro};
    for (auto f : fields) {
        double mean = 0.0;
        for (const auto& r : runs) mean += r.*f;
        mean /= n;
        double var = 0.0;
        for (const auto& r : runs) var += (r.*f - mean) * (r.*f - mean);
        s.mean.*f = mean;
        s.stddev.*f = std::sqrt(var / n);
    }
    return s;
}

Matrix principal_components(const Matrix& x, std::size_t components) {
    const auto n = static_cast<Eigen::Index>(x.rows());
    const auto d = static_cast<Eigen::Index>(x.cols());
    Eigen::MatrixXd m(n, d);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < d; ++j) m(i, j) = x(i, j);
    const Eigen::RowVectorXd mean = m.colwise().mean();
    m.rowwise() -= mean;

    Matrix out(x.rows(), components);
    if (n < 2 || d == 0) return out;
    const Eigen::MatrixXd cov = (m.transpose() * m) / static_cast<double>(n - 1);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
    const auto& vecs = solver.eigenvectors();  // ascending eigenvalues
    for (std::size_t c = 0; c < components && static_cast<Eigen::Index>(c) < d; ++c) {
        Eigen::VectorXd axis = vecs.col(d - 1 - static_cast<Eigen::Index>(c));
        Eigen::Index pivot = 0;
        axis.cwiseAbs().maxCoeff(&pivot);
        if (axis(pivot) < 0) axis = -axis;  // deterministic sign
        const Eigen::VectorXd proj = m * axis;
        for (Eigen::Index i = 0; i < n; ++i) out(static_cast<std::size_t>(i), c) = proj(i);
    }
    return out;
}

void export_embeddings(std::ostream& out, const Model& model, const NodeSet& nodes, bool with_pca) {
    const Matrix repr = model.forward().representation;
    if (repr.rows() != nodes.size()) throw std::invalid_argument("embedding rows do not match node set");
    const Matrix pcs = with_pca ? principal_components(repr, 2) : Matrix();
    out << "node";
    for (std::size_t j = 0; j < repr.cols(); ++j) out << ",e" << j;
    if (with_pca) out << ",pc1,pc2";
    out << '\n' << std::setprecision(17);
    for (std::size_t v = 0; v < repr.rows(); ++v) {
        out << nodes.label(static_cast<NodeIndex>(v));
        for (double x : repr.row(v)) out << ',' << x;
        if (with_pca) out << ',' << pcs(v, 0) << ',' << pcs(v, 1);
        out << '\n';
    }
    if (!out) throw DataError("failed to write embeddings");
}

Split run_split(const NodeLabels& labels, const TrainConfig& config, std::size_t run) {
    return split(labels.label, config.train_fraction, derive_seed(config.seed + run, 1));
}

std::uint64_t run_init_seed(const TrainConfig& config, std::size_t run) {
    return derive_seed(config.seed + run, 2);
}

RunOutcome run_once(const Dataset& data, const ModelConfig& model, const TrainConfig& config, std::size_t run) {
    if (model.kind == ModelKind::Dbgnn && !data.debruijn) throw std::invalid_argument("DBGNN needs a De Bruijn graph");
    if (data.labels.label.size() != data.aggregated.node_count())
        throw std::invalid_argument("labels must cover every node");
    ModelConfig mc = model;
    mc.classes = data.labels.class_count();
    mc.seed = run_init_seed(config, run);
    RunOutcome o{Model(mc, data.debruijn ? &*data.debruijn : nullptr, data.aggregated),
                 run_split(data.labels, config, run), {}, {}};
    o.losses = train(o.model, config, data.labels.label, o.split.train).losses;
    o.metrics = evaluate(o.model, o.split.test, data.labels.label);
    return o;
}

ExperimentResult run_experiment(const Dataset& data, const ModelConfig& model, const TrainConfig& config,
                                std::size_t threads, const RunObserver& observer) {
    if (config.runs < 1) throw std::invalid_argument("at least one run is required");

    std::vector<Metrics> metrics(config.runs);
    std::vector<std::vector<double>> traces(config.runs);
    std::vector<std::exception_ptr> errors(config.runs);

    const auto run_one = [&](std::size_t r) {
        try {
            RunOutcome o = run_once(data, model, config, r);
            if (observer) observer(r, o);
            metrics[r] = o.metrics;
            traces[r] = std::move(o.losses);
        } catch (...) {
            errors[r] = std::current_exception();
        }
    };

    const std::size_t workers = std::max<std::size_t>(1, std::min(threads, config.runs));
    if (workers == 1) {
        for (std::size_t r = 0; r < config.runs; ++r) run_one(r);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < workers; ++w)
            pool.emplace_back([&] {
                for (std::size_t r = next++; r < config.runs; r = next++) run_one(r);
            });
        for (auto& t : pool) t.join();
    }
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);

    ExperimentResult result;
    result.summary = summarize(metrics);
    result.loss_traces = std::move(traces);
    return result;
}

}  // namespace dbgnn
