#include <dbgnn/order_selection.hpp>
#include <dbgnn/numerics.hpp>

#include <algorithm>
#include <cmath>

namespace dbgnn {

TransitionModel::TransitionModel(const WalkBag& bag, std::size_t order) : order_(order) {
    if (order < 1 || order > bag.max_length) throw std::invalid_argument("model order out of range");
    for (const auto& [w, c] : bag.of_length(order)) {
        Walk history(w.begin(), w.end() - 1);
        rows_[history][w.back()] += c;
        totals_[history] += c;
    }
}

double TransitionModel::probability(const Walk& history, NodeIndex next) const {
    auto row = rows_.find(history);
    if (row == rows_.end()) return 0.0;
    auto it = row->second.find(next);
    if (it == row->second.end()) return 0.0;
    return static_cast<double>(it->second) / static_cast<double>(totals_.at(history));
}

std::vector<double> TransitionModel::row_sums() const {
    std::vector<double> sums;
    sums.reserve(rows_.size());
    for (const auto& [history, row] : rows_) {
        const double total = static_cast<double>(totals_.at(history));
        double s = 0.0;
        for (const auto& [next, c] : row) s += static_cast<double>(c) / total;
        sums.push_back(s);
    }
    return sums;
}

double log_likelihood(const WalkBag& bag, std::size_t k, std::size_t eval_order) {
    if (k < 1) throw std::invalid_argument("model order must be >= 1");
    if (k > eval_order) throw std::invalid_argument("model order exceeds evaluation order");
    if (eval_order > bag.max_length) throw std::invalid_argument("evaluation order exceeds walk bag length");

    const TransitionModel model(bag, k);
    double ll = 0.0;
    for (const auto& [w, c] : bag.of_length(eval_order)) {
        const Walk history(w.end() - 1 - static_cast<std::ptrdiff_t>(k), w.end() - 1);
        const double p = model.probability(history, w.back());
        if (!(p > 0.0)) throw NumericError("observed transition has zero probability under its own MLE");
        ll += static_cast<double>(c) * std::log(p);
    }
    return ll;
}

Count degrees_of_freedom(const StaticWeightedGraph& s, std::size_t k) {
    if (k < 1) throw std::invalid_argument("model order must be >= 1");
    const std::size_t n = s.node_count();
    std::vector<Count> out_degree(n, 0);
    std::vector<std::vector<NodeIndex>> successors(n);
    for (const auto& [key, w] : s.edges) {
        ++out_degree[key.first];
        successors[key.first].push_back(key.second);
    }
    // ending[v]: number of walks of length k-1 ending at v (feasible order-k nodes).
    std::vector<Count> ending(n, 1);
    for (std::size_t step = 1; step < k; ++step) {
        std::vector<Count> next(n, 0);
        for (std::size_t u = 0; u < n; ++u)
            for (NodeIndex v : successors[u]) next[v] += ending[u];
        ending = std::move(next);
    }
    Count transitions = 0, rows = 0;
    for (std::size_t v = 0; v < n; ++v) {
        transitions += ending[v] * out_degree[v];
        if (out_degree[v] > 0) rows += ending[v];
    }
    return transitions - rows;
}

LikelihoodRatioTest likelihood_ratio_test(const WalkBag& bag, const StaticWeightedGraph& s,
                                          std::size_t k0, std::size_t k1) {
    if (k0 < 1 || k0 >= k1) throw std::invalid_argument("likelihood ratio test needs 1 <= k0 < k1");
    if (k1 > bag.max_length) throw std::invalid_argument("alternative order exceeds walk bag length");

    LikelihoodRatioTest t;
    t.null_order = k0;
    t.alt_order = k1;
    t.null_log_likelihood = log_likelihood(bag, k0, k1);
    t.alt_log_likelihood = log_likelihood(bag, k1, k1);
    t.statistic = -2.0 * (t.null_log_likelihood - t.alt_log_likelihood);
    t.delta_dof = static_cast<std::int64_t>(degrees_of_freedom(s, k1)) -
                  static_cast<std::int64_t>(degrees_of_freedom(s, k0));
    if (t.delta_dof <= 0) {
        t.p_value = 1.0;
    } else {
        t.p_value = chi_squared_sf(std::max(t.statistic, 0.0), static_cast<double>(t.delta_dof));
    }
    return t;
}

OrderSelectionResult run_order_selection(const WalkBag& bag, const StaticWeightedGraph& s,
                                         std::size_t max_order, double alpha) {
    if (max_order < 1 || max_order > bag.max_length)
        throw std::invalid_argument("maximum order must be within 1..walk bag length");
    if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("alpha must lie in (0, 1)");

    OrderSelectionResult r;
    r.alpha = alpha;
    for (std::size_t k = 1; k <= max_order; ++k) {
        r.log_likelihoods.push_back(log_likelihood(bag, k, max_order));
        r.dofs.push_back(degrees_of_freedom(s, k));
    }
    bool advancing = true;
    for (std::size_t k = 1; k < max_order; ++k) {
        r.tests.push_back(likelihood_ratio_test(bag, s, k, k + 1));
        if (advancing && r.tests.back().p_value < alpha) r.chosen_order = k + 1;
        else advancing = false;
    }
    return r;
}

std::size_t select_order(const WalkBag& bag, const StaticWeightedGraph& s, std::size_t max_order,
                         double alpha) {
    if (max_order < 1 || max_order > bag.max_length)
        throw std::invalid_argument("maximum order must be within 1..walk bag length");
    if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("alpha must lie in (0, 1)");
    std::size_t k = 1;
    while (k + 1 <= max_order && likelihood_ratio_test(bag, s, k, k + 1).p_value < alpha) ++k;
    return k;
}

StaticWeightedGraph static_graph_of(const WalkBag& bag) {
    StaticWeightedGraph s;
    s.nodes = bag.nodes;
    for (const auto& [w, c] : bag.of_length(1)) s.edges[{w[0], w[1]}] = c;
    return s;
}

}  // namespace dbgnn
