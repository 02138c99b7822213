#pragma once

#include <dbgnn/model.hpp>

#include <functional>
#include <iosfwd>
#include <map>
#include <optional>

namespace dbgnn {

/// Class label per node; -1 marks a node without a label (never split).
struct NodeLabels {
    std::vector<int> label;
    std::vector<std::string> class_names;

    std::size_t class_count() const noexcept { return class_names.size(); }
};

/// CSV `node,label` (optional header line `node,label`). Class indices follow
/// the sorted order of the label strings. Rows naming nodes absent from the
/// graph are skipped; conflicting labels for one node are a data error.
NodeLabels read_labels(std::istream& in, const NodeSet& nodes);
NodeLabels read_labels(const std::string& path, const NodeSet& nodes);
void write_labels(std::ostream& out, const NodeLabels& labels, const NodeSet& nodes);

struct TrainConfig {
    double lr = 0.001;
    std::size_t epochs = 5000;
    double train_fraction = 0.7;
    std::uint64_t seed = 0;
    std::size_t runs = 50;
};

struct Split {
    std::vector<bool> train;
    std::vector<bool> test;
};

/// Stratified split: per class, a largest-remainder share of
/// round(fraction · labelled nodes) goes to training; every class keeps at
/// least one test node.
Split split(const std::vector<int>& labels, double train_fraction, std::uint64_t seed);

struct TrainResult {
    std::vector<double> losses;  // one per epoch
};

/// Full-batch training with masked softmax cross-entropy and Adam.
TrainResult train(Model& model, const TrainConfig& config, const std::vector<int>& labels,
                  const std::vector<bool>& train_mask);

struct Metrics {
    double balanced_accuracy = 0.0;
    double precision_macro = 0.0;
    double recall_macro = 0.0;
    double f1_macro = 0.0;
};

/// Confusion-matrix based metrics: rows are true classes, columns predictions.
Metrics metrics_from_confusion(const std::vector<std::vector<std::size_t>>& confusion);

std::vector<std::vector<std::size_t>> confusion_matrix(const std::vector<int>& truth, const std::vector<int>& predicted,
                                                       std::size_t classes);

std::vector<int> predict(const Matrix& logits);

Metrics evaluate(const Model& model, const std::vector<bool>& test_mask, const std::vector<int>& labels);

/// Per-run metrics plus their mean and (population) standard deviation.
struct MetricsSummary {
    std::vector<Metrics> runs;
    Metrics mean;
    Metrics stddev;
};

MetricsSummary summarize(const std::vector<Metrics>& runs);

/// Writes `node,e0,...,e{d-1}` rows of the learned representation, optionally
/// followed by the two leading principal components `pc1,pc2`.
void export_embeddings(std::ostream& out, const Model& model, const NodeSet& nodes, bool with_pca);

/// Projection of the rows of `x` onto its two leading principal components.
Matrix principal_components(const Matrix& x, std::size_t components = 2);

struct Dataset {
    TemporalGraph graph;
    StaticWeightedGraph aggregated;
    std::optional<DeBruijnGraph> debruijn;
    NodeLabels labels;
};

/// Seed of an independent stream derived from (seed, stream).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

/// Run r uses seed base+r, with separate streams for the split and the
/// weight initialization.
Split run_split(const NodeLabels& labels, const TrainConfig& config, std::size_t run);
std::uint64_t run_init_seed(const TrainConfig& config, std::size_t run);

struct RunOutcome {
    Model model;
    Split split;
    Metrics metrics;
    std::vector<double> losses;
};

/// Fresh split, fresh initialization, train, evaluate.
RunOutcome run_once(const Dataset& data, const ModelConfig& model, const TrainConfig& config, std::size_t run);

struct ExperimentResult {
    MetricsSummary summary;
    std::vector<std::vector<double>> loss_traces;
};

using RunObserver = std::function<void(std::size_t run, const RunOutcome& outcome)>;

/// `config.runs` independent runs on up to `threads` threads. The observer,
/// if any, sees every run and may be called concurrently.
ExperimentResult run_experiment(const Dataset& data, const ModelConfig& model, const TrainConfig& config,
                                std::size_t threads = 1, const RunObserver& observer = {});

}  // namespace dbgnn
