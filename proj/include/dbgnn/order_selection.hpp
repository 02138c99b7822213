#pragma once

#include <dbgnn/debruijn.hpp>

#include <map>

namespace dbgnn {

/// Maximum-likelihood transition probabilities of an order-k model: the
/// row-normalized edge weights of the order-k De Bruijn graph.
class TransitionModel {
public:
    TransitionModel(const WalkBag& bag, std::size_t order);

    std::size_t order() const noexcept { return order_; }
    /// P(next | history), history being exactly `order` nodes. Zero when unseen.
    double probability(const Walk& history, NodeIndex next) const;
    /// Row sums of every conditioning state with outgoing transitions.
    std::vector<double> row_sums() const;

private:
    std::size_t order_;
    std::map<Walk, std::map<NodeIndex, Count>> rows_;
    std::map<Walk, Count> totals_;
};

/// Log-likelihood of all walks of length `eval_order` under the order-k model,
/// one transition (the last step) per walk: the order-k model lifted into the
/// order-`eval_order` state space.
double log_likelihood(const WalkBag& bag, std::size_t k, std::size_t eval_order);

/// Free transition parameters of the topologically feasible order-k model:
/// feasible transitions minus constrained (non-empty) rows.
Count degrees_of_freedom(const StaticWeightedGraph& s, std::size_t k);

struct LikelihoodRatioTest {
    std::size_t null_order = 1;
    std::size_t alt_order = 2;
    double null_log_likelihood = 0.0;
    double alt_log_likelihood = 0.0;
    double statistic = 0.0;
    std::int64_t delta_dof = 0;
    double p_value = 1.0;
};

LikelihoodRatioTest likelihood_ratio_test(const WalkBag& bag, const StaticWeightedGraph& s,
                                          std::size_t k0, std::size_t k1);

struct OrderSelectionResult {
    std::vector<double> log_likelihoods;  // index k-1, all evaluated at eval_order = max order
    std::vector<Count> dofs;              // index k-1
    std::vector<LikelihoodRatioTest> tests;  // (k, k+1) comparisons
    std::size_t chosen_order = 1;
    double alpha = 0.01;
};

inline constexpr double kDefaultAlpha = 0.01;

/// Increasing-order testing: advance from k to k+1 while the test rejects.
std::size_t select_order(const WalkBag& bag, const StaticWeightedGraph& s, std::size_t max_order,
                         double alpha = kDefaultAlpha);

/// select_order plus the full per-order report.
OrderSelectionResult run_order_selection(const WalkBag& bag, const StaticWeightedGraph& s,
                                         std::size_t max_order, double alpha = kDefaultAlpha);

/// Static graph implied by the bag's length-1 walks (equals aggregate()).
StaticWeightedGraph static_graph_of(const WalkBag& bag);

}  // namespace dbgnn
