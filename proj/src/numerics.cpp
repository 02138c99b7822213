#include <dbgnn/numerics.hpp>

#include <boost/math/distributions/normal.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace dbgnn {

double elu(double x) { return x > 0.0 ? x : std::expm1(x); }

Matrix elu(const Matrix& x) {
    Matrix y = x;
    for (double& v : y.data()) v = elu(v);
    return y;
}

Matrix elu_backward(const Matrix& pre_activation, const Matrix& upstream) {
    if (!pre_activation.same_shape(upstream)) throw std::invalid_argument("elu_backward: shape mismatch");
    Matrix g = upstream;
    const auto& x = pre_activation.data();
    auto& d = g.data();
    for (std::size_t i = 0; i < d.size(); ++i)
        if (x[i] <= 0.0) d[i] *= std::exp(x[i]);
    return g;
}

LossAndGradient softmax_cross_entropy(const Matrix& logits, const std::vector<int>& labels,
                                      const std::vector<bool>& mask) {
    if (labels.size() != logits.rows() || mask.size() != logits.rows())
        throw std::invalid_argument("softmax_cross_entropy: labels/mask size mismatch");
    const auto n = static_cast<std::size_t>(std::count(mask.begin(), mask.end(), true));
    if (n == 0) throw std::invalid_argument("softmax_cross_entropy: empty mask");

    LossAndGradient out{0.0, Matrix(logits.rows(), logits.cols())};
    const double scale = 1.0 / static_cast<double>(n);
    for (std::size_t r = 0; r < logits.rows(); ++r) {
        if (!mask[r]) continue;
        const int y = labels[r];
        if (y < 0 || static_cast<std::size_t>(y) >= logits.cols())
            throw std::invalid_argument("softmax_cross_entropy: label out of range");
        const auto row = logits.row(r);
        const double mx = *std::max_element(row.begin(), row.end());
        double z = 0.0;
        for (double v : row) z += std::exp(v - mx);
        const double log_z = std::log(z) + mx;
        out.loss += (log_z - row[y]) * scale;
        auto g = out.grad.row(r);
        for (std::size_t c = 0; c < row.size(); ++c) g[c] = std::exp(row[c] - log_z) * scale;
        g[y] -= scale;
    }
    return out;
}

AdamState::AdamState(const std::vector<Matrix*>& params, AdamOptions options) : options_(options) {
    for (const Matrix* p : params) {
        first_.emplace_back(p->rows(), p->cols());
        second_.emplace_back(p->rows(), p->cols());
    }
}

AdamState::AdamState(std::vector<std::pair<std::size_t, std::size_t>> shapes, AdamOptions options)
    : options_(options) {
    for (auto [r, c] : shapes) {
        first_.emplace_back(r, c);
        second_.emplace_back(r, c);
    }
}

void AdamState::update(const std::vector<Matrix*>& params, const std::vector<Matrix>& grads) {
    if (params.size() != first_.size() || grads.size() != first_.size())
        throw std::invalid_argument("adam: parameter count mismatch");
    ++step_;
    const double b1 = options_.beta1, b2 = options_.beta2;
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(step_));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(step_));
    for (std::size_t p = 0; p < params.size(); ++p) {
        Matrix& theta = *params[p];
        if (!theta.same_shape(grads[p]) || !theta.same_shape(first_[p]))
            throw std::invalid_argument("adam: shape mismatch");
        auto& m = first_[p].data();
        auto& v = second_[p].data();
        const auto& g = grads[p].data();
        auto& x = theta.data();
        for (std::size_t i = 0; i < x.size(); ++i) {
            m[i] = b1 * m[i] + (1.0 - b1) * g[i];
            v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
            const double m_hat = m[i] / c1;
            const double v_hat = v[i] / c2;
            x[i] -= options_.lr * m_hat / (std::sqrt(v_hat) + options_.epsilon);
        }
    }
}

void adam_step(AdamState& state, Matrix& params, const Matrix& grads) {
    state.update({&params}, {grads});
}

namespace {

// Wilson-Hilferty: (X/k)^(1/3) is approximately normal with mean 1 - 2/(9k)
// and variance 2/(9k).
double wilson_hilferty_z(double x, double dof) {
    const double v = 2.0 / (9.0 * dof);
    return (std::cbrt(x / dof) - (1.0 - v)) / std::sqrt(v);
}

void check_chi2_args(double x, double dof) {
    if (!(x >= 0.0)) throw std::invalid_argument("chi-squared argument must be >= 0");
    if (!(dof > 0.0)) throw std::invalid_argument("chi-squared degrees of freedom must be > 0");
}

}  // namespace

double chi_squared_cdf(double x, double dof) {
    check_chi2_args(x, dof);
    if (x == 0.0) return 0.0;
    if (std::isinf(x)) return 1.0;
    if (dof > kWilsonHilfertyDof) {
        boost::math::normal_distribution<double> normal;
        return boost::math::cdf(normal, wilson_hilferty_z(x, dof));
    }
    return boost::math::gamma_p(dof / 2.0, x / 2.0);
}

double chi_squared_sf(double x, double dof) {
    check_chi2_args(x, dof);
    if (x == 0.0) return 1.0;
    if (std::isinf(x)) return 0.0;
    if (dof > kWilsonHilfertyDof) {
        boost::math::normal_distribution<double> normal;
        return boost::math::cdf(boost::math::complement(normal, wilson_hilferty_z(x, dof)));
    }
    return boost::math::gamma_q(dof / 2.0, x / 2.0);
}

}  // namespace dbgnn
