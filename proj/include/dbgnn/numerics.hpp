#pragma once

#include <dbgnn/matrix.hpp>

#include <cstdint>
#include <optional>

namespace dbgnn {

double elu(double x);
/// Element-wise ELU (alpha = 1).
Matrix elu(const Matrix& x);
/// Gradient of ELU given its pre-activation input and the upstream gradient.
Matrix elu_backward(const Matrix& pre_activation, const Matrix& upstream);

struct LossAndGradient {
    double loss = 0.0;
    Matrix grad;  // d loss / d logits, zero outside the mask
};

/// Mean softmax cross-entropy over rows where `mask` is true. Labels < 0 are
/// only allowed on unmasked rows.
LossAndGradient softmax_cross_entropy(const Matrix& logits, const std::vector<int>& labels,
                                      const std::vector<bool>& mask);

struct AdamOptions {
    double lr = 0.001;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

/// Moment accumulators for a list of parameter matrices.
class AdamState {
public:
    AdamState() = default;
    AdamState(const std::vector<Matrix*>& params, AdamOptions options = {});
    explicit AdamState(std::vector<std::pair<std::size_t, std::size_t>> shapes, AdamOptions options = {});

    const AdamOptions& options() const noexcept { return options_; }
    std::uint64_t step() const noexcept { return step_; }

    /// One bias-corrected Adam update of every parameter; increments the step.
    void update(const std::vector<Matrix*>& params, const std::vector<Matrix>& grads);

private:
    AdamOptions options_;
    std::uint64_t step_ = 0;
    std::vector<Matrix> first_;
    std::vector<Matrix> second_;
};

/// Single-matrix convenience wrapper around AdamState::update.
void adam_step(AdamState& state, Matrix& params, const Matrix& grads);

/// P(X <= x) for X ~ chi-squared with `dof` degrees of freedom.
double chi_squared_cdf(double x, double dof);
/// P(X > x), computed directly so tiny tail probabilities keep precision.
double chi_squared_sf(double x, double dof);

inline constexpr double kWilsonHilfertyDof = 1e6;

}  // namespace dbgnn
