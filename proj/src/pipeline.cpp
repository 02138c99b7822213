#include <dbgnn/pipeline.hpp>
#include <dbgnn/order_selection.hpp>
#include <dbgnn/synthetic.hpp>

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>

namespace dbgnn {

namespace {

using json = nlohmann::ordered_json;

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    return s.substr(b, s.find_last_not_of(" \t\r\n") - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

std::size_t to_size(const std::string& key, const std::string& v) {
    std::size_t pos = 0;
    unsigned long long x = 0;
    try {
        if (!v.empty() && v[0] == '-') throw std::invalid_argument(v);
        x = std::stoull(v, &pos);
    } catch (const std::exception&) {
        pos = 0;
    }
    if (pos == 0 || pos != v.size()) throw std::invalid_argument(key + ": expected a non-negative integer, got '" + v + "'");
    return static_cast<std::size_t>(x);
}

std::int64_t to_int(const std::string& key, const std::string& v) {
    std::size_t pos = 0;
    long long x = 0;
    try {
        x = std::stoll(v, &pos);
    } catch (const std::exception&) {
        pos = 0;
    }
    if (pos == 0 || pos != v.size()) throw std::invalid_argument(key + ": expected an integer, got '" + v + "'");
    return x;
}

double to_double(const std::string& key, const std::string& v) {
    std::size_t pos = 0;
    double x = 0;
    try {
        x = std::stod(v, &pos);
    } catch (const std::exception&) {
        pos = 0;
    }
    if (pos == 0 || pos != v.size()) throw std::invalid_argument(key + ": expected a number, got '" + v + "'");
    return x;
}

bool to_bool(const std::string& key, const std::string& v) {
    std::string l = v;
    std::transform(l.begin(), l.end(), l.begin(), [](unsigned char c) { return std::tolower(c); });
    if (l == "true" || l == "1" || l == "yes" || l == "on") return true;
    if (l == "false" || l == "0" || l == "no" || l == "off") return false;
    throw std::invalid_argument(key + ": expected true or false, got '" + v + "'");
}

std::vector<std::size_t> to_dims(const std::string& key, const std::string& v) {
    std::vector<std::size_t> dims;
    for (const auto& item : split_list(v)) {
        dims.push_back(to_size(key, item));
        if (dims.back() == 0) throw std::invalid_argument(key + ": widths must be positive");
    }
    if (dims.empty()) throw std::invalid_argument(key + ": at least one layer is required");
    return dims;
}

ModelKind to_kind(const std::string& v) {
    if (v == "dbgnn") return ModelKind::Dbgnn;
    if (v == "gcn") return ModelKind::Gcn;
    throw std::invalid_argument("unknown method '" + v + "' (expected dbgnn or gcn)");
}

void with_output(const std::string& path, std::ostream& fallback, const std::function<void(std::ostream&)>& write) {
    if (path.empty() || path == "-") {
        write(fallback);
        return;
    }
    std::ofstream f(path);
    if (!f) throw DataError("cannot open '" + path + "' for writing");
    write(f);
    f.flush();
    if (!f) throw DataError("failed to write '" + path + "'");
}

json metrics_json(const Metrics& m) {
    return json{{"balanced_accuracy", m.balanced_accuracy},
                {"precision_macro", m.precision_macro},
                {"recall_macro", m.recall_macro},
                {"f1_macro", m.f1_macro}};
}

json order_selection_json(const OrderSelectionResult& r, Timestamp delta) {
    json j;
    j["delta"] = delta;
    j["max_order"] = r.log_likelihoods.size();
    j["alpha"] = r.alpha;
    j["chosen_order"] = r.chosen_order;
    j["orders"] = json::array();
    for (std::size_t k = 1; k <= r.log_likelihoods.size(); ++k)
        j["orders"].push_back({{"order", k}, {"log_likelihood", r.log_likelihoods[k - 1]}, {"dof", r.dofs[k - 1]}});
    j["tests"] = json::array();
    for (const auto& t : r.tests)
        j["tests"].push_back({{"null_order", t.null_order},
                              {"alt_order", t.alt_order},
                              {"null_log_likelihood", t.null_log_likelihood},
                              {"alt_log_likelihood", t.alt_log_likelihood},
                              {"statistic", t.statistic},
                              {"delta_dof", t.delta_dof},
                              {"p_value", t.p_value}});
    return j;
}

void write_order_selection_text(std::ostream& out, const OrderSelectionResult& r) {
    out << std::setprecision(10);
    out << "order\tlog_likelihood\tdof\n";
    for (std::size_t k = 1; k <= r.log_likelihoods.size(); ++k)
        out << k << '\t' << r.log_likelihoods[k - 1] << '\t' << r.dofs[k - 1] << '\n';
    out << "null\talt\tstatistic\tdelta_dof\tp_value\n";
    for (const auto& t : r.tests)
        out << t.null_order << '\t' << t.alt_order << '\t' << t.statistic << '\t' << t.delta_dof << '\t' << t.p_value
            << '\n';
    out << "chosen order: " << r.chosen_order << " (alpha = " << r.alpha << ")\n";
}

void write_split(std::ostream& out, const Split& s, const NodeSet& nodes) {
    out << "node,set\n";
    for (std::size_t v = 0; v < s.train.size(); ++v) {
        if (s.train[v]) out << nodes.label(static_cast<NodeIndex>(v)) << ",train\n";
        else if (s.test[v]) out << nodes.label(static_cast<NodeIndex>(v)) << ",test\n";
    }
}

std::vector<bool> read_test_mask(const std::string& path, const NodeSet& nodes) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open split file '" + path + "'");
    std::vector<bool> test(nodes.size(), false);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        line = trim(line);
        if (line.empty() || line[0] == '#' || (lineno == 1 && line == "node,set")) continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos) throw ParseError(lineno, "expected `node,set`");
        const std::string node = trim(line.substr(0, comma)), set = trim(line.substr(comma + 1));
        if (set != "train" && set != "test") throw ParseError(lineno, "set must be train or test");
        if (!nodes.contains(node)) throw ParseError(lineno, "unknown node '" + node + "'");
        if (set == "test") test[nodes.index(node)] = true;
    }
    return test;
}

/// Edge-list input shared by the stage commands.
struct GraphInput {
    std::string path;
    bool directed = true;
    Timestamp bin_width = 1;
    bool dedup = false;

    void add_to(CLI::App* app, bool required = true) {
        auto* o = app->add_option("--input,-i", path, "edge list (source target time)");
        if (required) o->required();
        app->add_flag("--directed,!--undirected", directed, "treat edges as directed (default) or undirected");
        app->add_option("--bin-width", bin_width, "coarsen timestamps into bins of this width")->check(CLI::PositiveNumber);
        app->add_flag("--dedup", dedup, "drop repeated contacts within a bin");
    }

    TemporalGraph load() const {
        TemporalGraph g = read_edge_list(path, directed);
        if (bin_width > 1) g = coarsen(g, bin_width);
        if (dedup) g = dedup_events(g);
        return g;
    }
};

struct ModelOptions {
    std::string method = "dbgnn";
    std::string ho_hidden = "16,16";
    std::string fo_hidden = "16,16";
    std::string aggregator = "sum";
    std::size_t repr_dim = 16;

    void add_to(CLI::App* app) {
        app->add_option("--method", method, "dbgnn or gcn")->check(CLI::IsMember({"dbgnn", "gcn"}));
        app->add_option("--ho-hidden", ho_hidden, "comma-separated widths of the higher-order layers");
        app->add_option("--fo-hidden", fo_hidden, "comma-separated widths of the first-order layers");
        app->add_option("--aggregator", aggregator, "bipartite aggregation: sum, mean, max or min");
        app->add_option("--repr-dim", repr_dim, "dimension of the node representation")->check(CLI::PositiveNumber);
    }

    ModelConfig config() const {
        ModelConfig c;
        c.kind = to_kind(method);
        c.ho_hidden = to_dims("ho-hidden", ho_hidden);
        c.fo_hidden = to_dims("fo-hidden", fo_hidden);
        c.aggregator = parse_aggregator(aggregator);
        c.representation_dim = repr_dim;
        return c;
    }
};

Dataset make_dataset(TemporalGraph g, NodeLabels labels, Timestamp delta, std::size_t order, bool need_debruijn) {
    Dataset d{std::move(g), {}, std::nullopt, std::move(labels)};
    d.aggregated = aggregate(d.graph);
    if (need_debruijn) d.debruijn = build_debruijn(count_causal_walks(d.graph, delta, order), order);
    return d;
}

Model restore_model(const std::string& path, const Dataset& data) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open checkpoint '" + path + "'");
    Checkpoint cp = read_checkpoint(in);
    if (cp.config.kind == ModelKind::Dbgnn && !data.debruijn)
        throw std::invalid_argument("a DBGNN checkpoint needs --delta and --order");
    Model m(cp.config, data.debruijn ? &*data.debruijn : nullptr, data.aggregated);
    m.set_parameters(cp.parameters);
    return m;
}

void print_metrics(std::ostream& out, const Metrics& m) {
    out << std::fixed << std::setprecision(4) << "balanced_accuracy " << m.balanced_accuracy << "\nprecision_macro "
        << m.precision_macro << "\nrecall_macro " << m.recall_macro << "\nf1_macro " << m.f1_macro << '\n'
        << std::defaultfloat;
}

std::string to_lower_key(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return c == '_' ? '-' : std::tolower(c); });
    return s;
}

/// Full pipeline driven by a PipelineConfig.
void run_pipeline(const PipelineConfig& c, std::ostream& out, std::string& stage) {
    namespace fs = std::filesystem;
    if (c.delta < 1) throw std::invalid_argument("delta must be >= 1");
    if (c.max_order < 1) throw std::invalid_argument("max-order must be >= 1");
    if (c.methods.empty()) throw std::invalid_argument("no method selected");
    for (const auto& m : c.methods) to_kind(m);

    stage = "ingest";
    const fs::path dir(c.output_dir);
    fs::create_directories(dir);
    TemporalGraph graph;
    NodeLabels labels;
    bool have_labels = false;
    if (!c.generator.empty()) {
        if (c.generator != "temp-clusters") throw std::invalid_argument("unknown generator '" + c.generator + "'");
        TempClusters tc = generate_temp_clusters(c.gen_n, c.gen_m, c.gen_pairs, c.train.seed);
        graph = std::move(tc.graph);
        labels = cluster_labels(tc.clusters);
        have_labels = true;
    } else {
        if (c.input.empty()) throw std::invalid_argument("no input: set `input` or `generator`");
        graph = read_edge_list(c.input, c.directed);
        if (c.bin_width > 1) graph = coarsen(graph, c.bin_width);
        if (c.dedup) graph = dedup_events(graph);
    }
    if (!c.labels.empty()) {
        labels = read_labels(c.labels, graph.nodes());
        have_labels = true;
    }
    with_output((dir / "edges.csv").string(), out, [&](std::ostream& o) { write_edge_list(o, graph); });
    if (have_labels)
        with_output((dir / "labels.csv").string(), out, [&](std::ostream& o) { write_labels(o, labels, graph.nodes()); });
    const StaticWeightedGraph aggregated = aggregate(graph);
    out << "nodes " << graph.node_count() << "\nedges " << aggregated.edges.size() << "\nevents "
        << graph.events().size() << '\n';

    stage = "walks";
    const std::size_t walk_length = std::max(c.max_order, c.order.value_or(1));
    const WalkBag bag = count_causal_walks(graph, c.delta, walk_length);
    with_output((dir / "walks.txt").string(), out, [&](std::ostream& o) { write_walk_bag(o, bag); });

    stage = "select-order";
    const OrderSelectionResult selection = run_order_selection(bag, aggregated, c.max_order, c.alpha);
    with_output((dir / "order-selection.txt").string(), out,
                [&](std::ostream& o) { write_order_selection_text(o, selection); });
    json report;
    report["order_selection"] = order_selection_json(selection, c.delta);
    with_output((dir / "order-selection.json").string(), out,
                [&](std::ostream& o) { o << report["order_selection"].dump(2) << '\n'; });
    for (const auto& t : selection.tests)
        out << "test k=" << t.null_order << " vs k=" << t.alt_order << ": statistic " << std::setprecision(10)
            << t.statistic << ", delta dof " << t.delta_dof << ", p " << t.p_value << '\n';
    out << "chosen order " << selection.chosen_order << '\n';

    stage = "debruijn";
    const std::size_t order = c.order.value_or(selection.chosen_order);
    json graphs = json::array();
    std::optional<DeBruijnGraph> model_graph;
    for (std::size_t k = 1; k <= walk_length; ++k) {
        DeBruijnGraph d = build_debruijn(bag, k);
        with_output((dir / ("debruijn-" + std::to_string(k) + ".txt")).string(), out,
                    [&](std::ostream& o) { write_debruijn(o, d); });
        graphs.push_back({{"order", k}, {"nodes", d.node_count()}, {"edges", d.edge_count()}});
        out << "order " << k << " De Bruijn graph: " << d.node_count() << " nodes, " << d.edge_count() << " edges\n";
        if (k == order) model_graph = std::move(d);
    }

    if (!have_labels) {
        out << "no labels supplied; skipping training\n";
        return;
    }

    stage = "train";
    Dataset data{std::move(graph), aggregated, std::move(model_graph), std::move(labels)};
    json metrics;
    metrics["model_order"] = order;
    metrics["train_fraction"] = c.train.train_fraction;
    metrics["epochs"] = c.train.epochs;
    metrics["lr"] = c.train.lr;
    metrics["runs"] = c.train.runs;
    metrics["seed"] = c.train.seed;
    metrics["methods"] = json::object();
    bool embedded = false;
    for (const auto& method : c.methods) {
        ModelConfig mc = c.model;
        mc.kind = to_kind(method);
        std::optional<RunOutcome> first;
        const ExperimentResult r = run_experiment(data, mc, c.train, c.threads, [&](std::size_t run, const RunOutcome& o) {
            if (run == 0) first.emplace(o);
        });
        json runs = json::array();
        for (std::size_t i = 0; i < r.summary.runs.size(); ++i) {
            json entry = metrics_json(r.summary.runs[i]);
            entry["final_loss"] = r.loss_traces[i].empty() ? 0.0 : r.loss_traces[i].back();
            runs.push_back(entry);
        }
        metrics["methods"][method] = {
            {"runs", runs}, {"mean", metrics_json(r.summary.mean)}, {"std", metrics_json(r.summary.stddev)}};
        out << method << " balanced accuracy " << std::fixed << std::setprecision(4)
            << r.summary.mean.balanced_accuracy << " +/- " << r.summary.stddev.balanced_accuracy << " over "
            << c.train.runs << " runs (macro F1 " << r.summary.mean.f1_macro << ")\n"
            << std::defaultfloat;

        stage = "embed";
        if (!embedded && first) {
            with_output((dir / "embeddings.csv").string(), out,
                        [&](std::ostream& o) { export_embeddings(o, first->model, data.graph.nodes(), true); });
            with_output((dir / ("model-" + method + ".ckpt")).string(), out,
                        [&](std::ostream& o) { save_checkpoint(o, first->model); });
            embedded = true;
        }
        stage = "train";
    }
    report["debruijn"] = graphs;
    report["classification"] = metrics;
    with_output((dir / "metrics.json").string(), out, [&](std::ostream& o) { o << metrics.dump(2) << '\n'; });
    with_output((dir / "report.json").string(), out, [&](std::ostream& o) { o << report.dump(2) << '\n'; });
}

}  // namespace

const std::vector<std::string>& config_keys() {
    static const std::vector<std::string> keys{
        "input",  "labels",    "generator",  "n",       "m",         "pairs",          "directed",
        "bin-width", "dedup",  "delta",      "max-order", "alpha",   "order",          "methods",
        "ho-hidden", "fo-hidden", "aggregator", "repr-dim", "epochs", "lr",            "train-fraction",
        "runs",   "seed",      "output",     "threads"};
    return keys;
}

KeyValues parse_config(std::istream& in) {
    KeyValues kv;
    std::string line;
    std::size_t lineno = 0;
    const auto& keys = config_keys();
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ParseError(lineno, "expected `key = value`");
        const std::string key = trim(line.substr(0, eq));
        if (std::find(keys.begin(), keys.end(), key) == keys.end())
            throw ParseError(lineno, "unknown configuration key '" + key + "'");
        kv[key] = trim(line.substr(eq + 1));
    }
    return kv;
}

KeyValues read_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open config file '" + path + "'");
    return parse_config(in);
}

std::vector<std::string> preset_names() {
    return {"temp-clusters", "workplace", "hospital", "high-school-2011", "high-school-2012", "student-sms"};
}

KeyValues preset(const std::string& name) {
    if (name == "temp-clusters")
        return {{"generator", "temp-clusters"}, {"n", "30"},         {"m", "560"},      {"pairs", "30000"},
                {"directed", "true"},           {"bin-width", "1"}, {"delta", "1"},    {"max-order", "2"},
                {"alpha", "0.01"}};
    if (name == "workplace" || name == "hospital" || name == "high-school-2011" || name == "high-school-2012")
        return {{"directed", "false"}, {"bin-width", "900"}, {"delta", "4"}, {"max-order", "2"}, {"alpha", "0.01"}};
    if (name == "student-sms")
        return {{"directed", "true"}, {"bin-width", "300"}, {"delta", "40"}, {"max-order", "2"}, {"alpha", "0.01"}};
    throw std::invalid_argument("unknown preset '" + name + "'");
}

KeyValues environment_overrides(char** envp) {
    KeyValues kv;
    if (!envp) return kv;
    const std::string prefix = "DBGNN_";
    const auto& keys = config_keys();
    for (char** e = envp; *e; ++e) {
        const std::string entry(*e);
        const auto eq = entry.find('=');
        if (eq == std::string::npos || entry.compare(0, prefix.size(), prefix) != 0) continue;
        const std::string key = to_lower_key(entry.substr(prefix.size(), eq - prefix.size()));
        if (std::find(keys.begin(), keys.end(), key) != keys.end()) kv[key] = entry.substr(eq + 1);
    }
    return kv;
}

void apply_config(PipelineConfig& c, const KeyValues& values) {
    for (const auto& [key, v] : values) {
        if (key == "input") c.input = v;
        else if (key == "labels") c.labels = v;
        else if (key == "generator") c.generator = v;
        else if (key == "n") c.gen_n = to_size(key, v);
        else if (key == "m") c.gen_m = to_size(key, v);
        else if (key == "pairs") c.gen_pairs = to_size(key, v);
        else if (key == "directed") c.directed = to_bool(key, v);
        else if (key == "bin-width") c.bin_width = to_int(key, v);
        else if (key == "dedup") c.dedup = to_bool(key, v);
        else if (key == "delta") c.delta = to_int(key, v);
        else if (key == "max-order") c.max_order = to_size(key, v);
        else if (key == "alpha") c.alpha = to_double(key, v);
        else if (key == "order") c.order = v == "auto" ? std::nullopt : std::optional<std::size_t>(to_size(key, v));
        else if (key == "methods") c.methods = split_list(v);
        else if (key == "ho-hidden") c.model.ho_hidden = to_dims(key, v);
        else if (key == "fo-hidden") c.model.fo_hidden = to_dims(key, v);
        else if (key == "aggregator") c.model.aggregator = parse_aggregator(v);
        else if (key == "repr-dim") c.model.representation_dim = to_size(key, v);
        else if (key == "epochs") c.train.epochs = to_size(key, v);
        else if (key == "lr") c.train.lr = to_double(key, v);
        else if (key == "train-fraction") c.train.train_fraction = to_double(key, v);
        else if (key == "runs") c.train.runs = to_size(key, v);
        else if (key == "seed") c.train.seed = to_size(key, v);
        else if (key == "output") c.output_dir = v;
        else if (key == "threads") c.threads = std::max<std::size_t>(1, to_size(key, v));
        else throw std::invalid_argument("unknown configuration key '" + key + "'");
    }
    if (c.bin_width < 1) throw std::invalid_argument("bin-width must be >= 1");
    if (c.order && *c.order < 1) throw std::invalid_argument("order must be >= 1");
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err, char** envp) {
    CLI::App app{"Node classification on dynamic graphs with De Bruijn graph neural networks", "dbgnn"};
    app.require_subcommand(1);
    std::string stage;

    // ingest
    GraphInput ingest_in;
    std::string ingest_out;
    auto* ingest = app.add_subcommand("ingest", "parse, coarsen and normalize an edge list");
    ingest_in.add_to(ingest);
    ingest->add_option("--out,-o", ingest_out, "output edge list (default stdout)");
    ingest->callback([&] {
        const TemporalGraph g = ingest_in.load();
        with_output(ingest_out, out, [&](std::ostream& o) { write_edge_list(o, g); });
        if (!ingest_out.empty() && ingest_out != "-")
            out << "nodes " << g.node_count() << "\nedges " << aggregate(g).edges.size() << "\nevents "
                << g.events().size() << '\n';
    });

    // walks
    GraphInput walks_in;
    Timestamp walks_delta = 1;
    std::size_t walks_max = 2;
    std::string walks_out;
    auto* walks = app.add_subcommand("walks", "count causal walks");
    walks_in.add_to(walks);
    walks->add_option("--delta", walks_delta, "maximum time difference")->required()->check(CLI::PositiveNumber);
    walks->add_option("--max-order", walks_max, "maximum walk length")->check(CLI::PositiveNumber);
    walks->add_option("--out,-o", walks_out, "output walk bag (default stdout)");
    walks->callback([&] {
        const WalkBag bag = count_causal_walks(walks_in.load(), walks_delta, walks_max);
        with_output(walks_out, out, [&](std::ostream& o) { write_walk_bag(o, bag); });
    });

    // debruijn
    std::string deb_walks, deb_out;
    std::size_t deb_order = 2;
    auto* deb = app.add_subcommand("debruijn", "build a De Bruijn graph from a walk bag");
    deb->add_option("--walks,-w", deb_walks, "walk bag")->required();
    deb->add_option("--order,-k", deb_order, "order k")->check(CLI::PositiveNumber);
    deb->add_option("--out,-o", deb_out, "output graph (default stdout)");
    deb->callback([&] {
        const DeBruijnGraph d = build_debruijn(read_walk_bag(deb_walks), deb_order);
        with_output(deb_out, out, [&](std::ostream& o) { write_debruijn(o, d); });
        if (!deb_out.empty() && deb_out != "-") out << "nodes " << d.node_count() << "\nedges " << d.edge_count() << '\n';
    });

    // select-order
    GraphInput sel_in;
    std::string sel_walks, sel_json;
    std::size_t sel_max = 2;
    double sel_alpha = kDefaultAlpha;
    Timestamp sel_delta = 0;
    auto* sel = app.add_subcommand("select-order", "choose the Markov order by likelihood-ratio tests");
    sel_in.add_to(sel, false);
    sel->add_option("--walks,-w", sel_walks, "walk bag (alternative to --input)");
    sel->add_option("--max-order", sel_max, "largest order tested")->check(CLI::PositiveNumber);
    sel->add_option("--alpha", sel_alpha, "significance level")->check(CLI::Range(0.0, 1.0));
    sel->add_option("--delta", sel_delta, "maximum time difference (with --input)")->check(CLI::PositiveNumber);
    sel->add_option("--json", sel_json, "also write the report as JSON");
    sel->callback([&] {
        WalkBag bag;
        if (!sel_walks.empty()) {
            if (!sel_in.path.empty()) throw std::invalid_argument("give either --walks or --input, not both");
            bag = read_walk_bag(sel_walks);
            if (sel_delta != 0 && sel_delta != bag.delta)
                throw std::invalid_argument("--delta differs from the walk bag's delta");
        } else {
            if (sel_in.path.empty()) throw std::invalid_argument("select-order needs --walks or --input");
            if (sel_delta == 0) throw std::invalid_argument("--delta is required with --input");
            bag = count_causal_walks(sel_in.load(), sel_delta, sel_max);
        }
        const OrderSelectionResult r = run_order_selection(bag, static_graph_of(bag), sel_max, sel_alpha);
        write_order_selection_text(out, r);
        if (!sel_json.empty())
            with_output(sel_json, out, [&](std::ostream& o) { o << order_selection_json(r, bag.delta).dump(2) << '\n'; });
    });

    // generate
    std::string gen_model = "temp-clusters", gen_out, gen_labels;
    std::size_t gen_n = 30, gen_m = 560, gen_pairs = 30000;
    std::uint64_t gen_seed = 0;
    auto* gen = app.add_subcommand("generate", "generate a synthetic dynamic graph");
    gen->add_option("model", gen_model, "generator name")->check(CLI::IsMember({"temp-clusters"}));
    gen->add_option("--n", gen_n, "number of nodes (multiple of 3)");
    gen->add_option("--m", gen_m, "number of static edges");
    gen->add_option("--pairs", gen_pairs, "number of two-edge sequences");
    gen->add_option("--seed", gen_seed, "random seed");
    gen->add_option("--out,-o", gen_out, "output edge list (default stdout)");
    gen->add_option("--labels", gen_labels, "output cluster labels CSV");
    gen->callback([&] {
        const TempClusters tc = generate_temp_clusters(gen_n, gen_m, gen_pairs, gen_seed);
        with_output(gen_out, out, [&](std::ostream& o) { write_edge_list(o, tc.graph); });
        if (!gen_labels.empty())
            with_output(gen_labels, out,
                        [&](std::ostream& o) { write_labels(o, cluster_labels(tc.clusters), tc.graph.nodes()); });
    });

    // shuffle
    GraphInput shuf_in;
    std::uint64_t shuf_seed = 0;
    std::string shuf_out;
    auto* shuf = app.add_subcommand("shuffle", "randomly permute timestamps across events");
    shuf_in.add_to(shuf);
    shuf->add_option("--seed", shuf_seed, "random seed");
    shuf->add_option("--out,-o", shuf_out, "output edge list (default stdout)");
    shuf->callback([&] {
        const TemporalGraph g = shuffle_timestamps(shuf_in.load(), shuf_seed);
        with_output(shuf_out, out, [&](std::ostream& o) { write_edge_list(o, g); });
    });

    // train / evaluate / embed share graph, order and label options
    struct ModelStage {
        GraphInput in;
        std::string labels;
        Timestamp delta = 1;
        std::size_t order = 2;
        std::string checkpoint;

        void add_to(CLI::App* app, bool labels_required) {
            in.add_to(app);
            auto* l = app->add_option("--labels,-l", labels, "node labels CSV");
            if (labels_required) l->required();
            app->add_option("--delta", delta, "maximum time difference")->check(CLI::PositiveNumber);
            app->add_option("--order,-k", order, "De Bruijn order")->check(CLI::PositiveNumber);
            app->add_option("--checkpoint,-c", checkpoint, "model checkpoint")->required();
        }

        Dataset load(bool need_debruijn) const {
            TemporalGraph g = in.load();
            NodeLabels nl;
            if (!labels.empty()) nl = read_labels(labels, g.nodes());
            return make_dataset(std::move(g), std::move(nl), delta, order, need_debruijn);
        }
    };

    ModelStage train_st;
    ModelOptions train_model;
    TrainConfig train_cfg;
    std::string split_out;
    auto* tr = app.add_subcommand("train", "train one model and save a checkpoint");
    train_st.add_to(tr, true);
    train_model.add_to(tr);
    tr->add_option("--epochs", train_cfg.epochs, "training epochs");
    tr->add_option("--lr", train_cfg.lr, "Adam learning rate")->check(CLI::PositiveNumber);
    tr->add_option("--train-fraction", train_cfg.train_fraction, "share of labelled nodes used for training")
        ->check(CLI::Range(0.0, 1.0));
    tr->add_option("--seed", train_cfg.seed, "random seed");
    tr->add_option("--split-out", split_out, "write the train/test split as `node,set` CSV");
    tr->callback([&] {
        const ModelConfig mc = train_model.config();
        const Dataset data = train_st.load(mc.kind == ModelKind::Dbgnn);
        train_cfg.runs = 1;
        const RunOutcome o = run_once(data, mc, train_cfg, 0);
        with_output(train_st.checkpoint, out, [&](std::ostream& s) { save_checkpoint(s, o.model); });
        if (!split_out.empty())
            with_output(split_out, out, [&](std::ostream& s) { write_split(s, o.split, data.graph.nodes()); });
        out << "final loss " << std::setprecision(10) << (o.losses.empty() ? 0.0 : o.losses.back()) << '\n';
        print_metrics(out, o.metrics);
    });

    ModelStage eval_st;
    std::string eval_split, eval_json;
    auto* ev = app.add_subcommand("evaluate", "evaluate a checkpoint on labelled nodes");
    eval_st.add_to(ev, true);
    ev->add_option("--split", eval_split, "`node,set` CSV; test nodes are evaluated (default: all labelled)");
    ev->add_option("--json", eval_json, "also write metrics as JSON");
    ev->callback([&] {
        stage = "evaluate";
        const Dataset data = eval_st.load(true);
        const Model m = restore_model(eval_st.checkpoint, data);
        std::vector<bool> mask;
        if (eval_split.empty()) {
            mask.assign(data.labels.label.size(), false);
            for (std::size_t v = 0; v < mask.size(); ++v) mask[v] = data.labels.label[v] >= 0;
        } else {
            mask = read_test_mask(eval_split, data.graph.nodes());
        }
        const Metrics metrics = evaluate(m, mask, data.labels.label);
        print_metrics(out, metrics);
        if (!eval_json.empty())
            with_output(eval_json, out, [&](std::ostream& o) { o << metrics_json(metrics).dump(2) << '\n'; });
    });

    ModelStage embed_st;
    bool embed_pca = false;
    std::string embed_out;
    auto* em = app.add_subcommand("embed", "export node representations of a checkpoint");
    embed_st.add_to(em, false);
    em->add_flag("--pca", embed_pca, "append two principal components");
    em->add_option("--out,-o", embed_out, "output CSV (default stdout)");
    em->callback([&] {
        const Dataset data = embed_st.load(true);
        const Model m = restore_model(embed_st.checkpoint, data);
        with_output(embed_out, out, [&](std::ostream& o) { export_embeddings(o, m, data.graph.nodes(), embed_pca); });
    });

    // pipeline
    std::string pipe_preset, pipe_config;
    KeyValues pipe_flags;
    auto* pipe = app.add_subcommand("pipeline", "run generation/ingestion through evaluation end to end");
    pipe->add_option("--preset", pipe_preset, "shipped preset")->check(CLI::IsMember(preset_names()));
    pipe->add_option("--config", pipe_config, "flat `key = value` configuration file");
    for (const auto& key : config_keys())
        pipe->add_option_function<std::string>(
            "--" + key, [&pipe_flags, key](const std::string& v) { pipe_flags[key] = v; }, "configuration key " + key);
    pipe->callback([&] {
        PipelineConfig c;
        if (!pipe_preset.empty()) apply_config(c, preset(pipe_preset));
        if (!pipe_config.empty()) apply_config(c, read_config(pipe_config));
        apply_config(c, environment_overrides(envp));
        apply_config(c, pipe_flags);
        run_pipeline(c, out, stage);
    });

    for (auto* sub : app.get_subcommands({}))
        sub->preparse_callback([&stage, sub](std::size_t) { stage = sub->get_name(); });

    std::vector<const char*> argv{"dbgnn"};
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
        return 0;
    } catch (const CLI::ParseError& e) {
        // also covers --help, which exits with 0
        const int code = app.exit(e, out, err);
        return code == 0 ? 0 : 1;
    } catch (const NumericError& e) {
        err << "dbgnn: " << stage << ": numeric failure: " << e.what() << '\n';
        return 3;
    } catch (const DataError& e) {
        err << "dbgnn: " << stage << ": " << e.what() << '\n';
        return 2;
    } catch (const std::invalid_argument& e) {
        err << "dbgnn: " << stage << ": " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        err << "dbgnn: " << stage << ": " << e.what() << '\n';
        return 2;
    }
}

}  // namespace dbgnn
