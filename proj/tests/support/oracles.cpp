#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <string>

namespace oracle {

namespace {

void extend(const std::vector<dbgnn::TemporalEdge>& events, dbgnn::Timestamp delta, std::size_t max_length,
            std::vector<std::size_t>& chain, std::map<Walk, Count>& out) {
    Walk w{events[chain.front()].source};
    for (std::size_t e : chain) w.push_back(events[e].target);
    ++out[w];
    if (chain.size() == max_length) return;
    const auto& last = events[chain.back()];
    for (std::size_t e = 0; e < events.size(); ++e) {
        if (std::find(chain.begin(), chain.end(), e) != chain.end()) continue;
        const auto gap = events[e].time - last.time;
        if (events[e].source != last.target || gap <= 0 || gap > delta) continue;
        chain.push_back(e);
        extend(events, delta, max_length, chain, out);
        chain.pop_back();
    }
}

}  // namespace

std::map<Walk, Count> causal_walks(const std::vector<dbgnn::TemporalEdge>& directed_events, std::size_t nodes,
                                   dbgnn::Timestamp delta, std::size_t max_length) {
    std::map<Walk, Count> out;
    for (NodeIndex v = 0; v < nodes; ++v) out[{v}] = 1;
    if (max_length == 0) return out;
    std::vector<std::size_t> chain;
    for (std::size_t e = 0; e < directed_events.size(); ++e) {
        chain.assign(1, e);
        extend(directed_events, delta, max_length, chain, out);
    }
    return out;
}

dbgnn::TemporalGraph random_temporal_graph(std::mt19937_64& rng, std::size_t nodes, std::size_t events,
                                           dbgnn::Timestamp max_time, bool directed) {
    dbgnn::TemporalGraph g(directed);
    for (std::size_t v = 0; v < nodes; ++v) g.add_node(std::to_string(v));
    std::uniform_int_distribution<NodeIndex> node(0, static_cast<NodeIndex>(nodes - 1));
    std::uniform_int_distribution<dbgnn::Timestamp> time(0, max_time);
    for (std::size_t i = 0; i < events; ++i) g.add_event(node(rng), node(rng), time(rng));
    return g;
}

Matrix naive_matmul(const Matrix& a, const Matrix& b) {
    Matrix c(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < b.cols(); ++j) {
            long double s = 0;
            for (std::size_t k = 0; k < a.cols(); ++k) s += static_cast<long double>(a(i, k)) * b(k, j);
            c(i, j) = static_cast<double>(s);
        }
    return c;
}

Matrix dense_propagation(std::size_t n, const std::vector<dbgnn::WeightedEdge>& edges) {
    std::vector<double> strength(n, 1.0);
    for (const auto& e : edges) strength[e.target] += static_cast<double>(e.weight);
    Matrix a(n, n);
    for (std::size_t v = 0; v < n; ++v) a(v, v) += 1.0 / strength[v];
    for (const auto& e : edges)
        a(e.target, e.source) += static_cast<double>(e.weight) / std::sqrt(strength[e.target] * strength[e.source]);
    return a;
}

double log_likelihood(const dbgnn::WalkBag& bag, std::size_t k, std::size_t eval) {
    const auto& models = bag.of_length(k);
    double ll = 0.0;
    for (const auto& [w, c] : bag.of_length(eval)) {
        const Walk history(w.end() - 1 - static_cast<std::ptrdiff_t>(k), w.end() - 1);
        double numerator = 0.0, denominator = 0.0;
        for (const auto& [x, cx] : models) {
            if (!std::equal(history.begin(), history.end(), x.begin())) continue;
            denominator += static_cast<double>(cx);
            if (x.back() == w.back()) numerator += static_cast<double>(cx);
        }
        ll += static_cast<double>(c) * std::log(numerator / denominator);
    }
    return ll;
}

long long degrees_of_freedom(const dbgnn::StaticWeightedGraph& s, std::size_t k) {
    const std::size_t n = s.node_count();
    std::vector<std::vector<NodeIndex>> adj(n);
    for (const auto& [key, w] : s.edges) adj[key.first].push_back(key.second);
    std::vector<Walk> walks;
    for (NodeIndex v = 0; v < n; ++v) walks.push_back({v});
    for (std::size_t step = 1; step < k; ++step) {
        std::vector<Walk> next;
        for (const auto& w : walks)
            for (NodeIndex u : adj[w.back()]) {
                Walk x = w;
                x.push_back(u);
                next.push_back(std::move(x));
            }
        walks = std::move(next);
    }
    long long transitions = 0, rows = 0;
    for (const auto& w : walks) {
        transitions += static_cast<long long>(adj[w.back()].size());
        rows += adj[w.back()].empty() ? 0 : 1;
    }
    return transitions - rows;
}

double chi2_sf_even(double x, int dof) {
    const double half = x / 2.0;
    double term = 1.0, sum = 1.0;
    for (int i = 1; i < dof / 2; ++i) {
        term *= half / i;
        sum += term;
    }
    return std::exp(-half) * sum;
}

double chi2_cdf_simpson(double x, double dof, int intervals) {
    if (intervals % 2) ++intervals;
    const double norm = std::pow(2.0, dof / 2.0) * std::tgamma(dof / 2.0);
    const auto pdf = [&](double t) { return t <= 0 ? 0.0 : std::pow(t, dof / 2.0 - 1.0) * std::exp(-t / 2.0) / norm; };
    const double h = x / intervals;
    double s = pdf(0.0) + pdf(x);
    for (int i = 1; i < intervals; ++i) s += (i % 2 ? 4.0 : 2.0) * pdf(i * h);
    return s * h / 3.0;
}

MetricsOracle metrics(const std::vector<int>& truth, const std::vector<int>& predicted) {
    std::set<int> classes(truth.begin(), truth.end());
    classes.insert(predicted.begin(), predicted.end());
    MetricsOracle m{0, 0, 0, 0};
    int supported = 0;
    for (int c : classes) {
        double tp = 0, support = 0, guessed = 0;
        for (std::size_t i = 0; i < truth.size(); ++i) {
            tp += truth[i] == c && predicted[i] == c;
            support += truth[i] == c;
            guessed += predicted[i] == c;
        }
        const double recall = support ? tp / support : 0.0;
        const double precision = guessed ? tp / guessed : 0.0;
        if (support) {
            m.balanced_accuracy += recall;
            ++supported;
        }
        m.recall_macro += recall;
        m.precision_macro += precision;
        m.f1_macro += precision + recall ? 2 * precision * recall / (precision + recall) : 0.0;
    }
    const double n = static_cast<double>(classes.size());
    m.balanced_accuracy /= supported;
    m.recall_macro /= n;
    m.precision_macro /= n;
    m.f1_macro /= n;
    return m;
}

std::vector<double> adam_trace_square(double theta0, int steps, double lr) {
    const double b1 = 0.9, b2 = 0.999, eps = 1e-8;
    double theta = theta0, m = 0, v = 0;
    std::vector<double> trace;
    for (int t = 1; t <= steps; ++t) {
        const double g = 2 * theta;
        m = b1 * m + (1 - b1) * g;
        v = b2 * v + (1 - b2) * g * g;
        const double mhat = m / (1 - std::pow(b1, t));
        const double vhat = v / (1 - std::pow(b2, t));
        theta -= lr * mhat / (std::sqrt(vhat) + eps);
        trace.push_back(theta);
    }
    return trace;
}

std::vector<Matrix> finite_difference(const std::function<double()>& f, const std::vector<Matrix*>& params, double h) {
    std::vector<Matrix> grads;
    for (Matrix* p : params) {
        Matrix g(p->rows(), p->cols());
        for (std::size_t i = 0; i < p->size(); ++i) {
            const double saved = p->data()[i];
            p->data()[i] = saved + h;
            const double up = f();
            p->data()[i] = saved - h;
            const double down = f();
            p->data()[i] = saved;
            g.data()[i] = (up - down) / (2 * h);
        }
        grads.push_back(std::move(g));
    }
    return grads;
}

double max_relative_error(const std::vector<Matrix>& analytic, const std::vector<Matrix>& numeric, double floor) {
    double worst = 0.0;
    for (std::size_t m = 0; m < analytic.size(); ++m)
        for (std::size_t i = 0; i < analytic[m].size(); ++i) {
            const double a = analytic[m].data()[i], n = numeric[m].data()[i];
            worst = std::max(worst, std::abs(a - n) / std::max({std::abs(a), std::abs(n), floor}));
        }
    return worst;
}

Matrix random_matrix(std::mt19937_64& rng, std::size_t rows, std::size_t cols, double scale) {
    std::uniform_real_distribution<double> d(-scale, scale);
    Matrix m(rows, cols);
    for (double& x : m.data()) x = d(rng);
    return m;
}

}  // namespace oracle
