#pragma once

#include <functional>
#include <random>

#include "megu/matrix.hpp"

namespace megu {

/// Clamp added inside every log() so one-hot rows never produce -inf.
inline constexpr double kLogEps = 1e-12;

struct OptimizerConfig {
    double lr = 0.01;
    std::size_t epochs = 100;
    double weight_decay = 0.0;
};

inline void validate_optimizer_config(const OptimizerConfig& cfg) {
    if (cfg.lr <= 0.0) throw std::invalid_argument("learning rate must be positive");
    if (cfg.weight_decay < 0.0) throw std::invalid_argument("weight decay must be nonnegative");
}

/// Max-subtracted row softmax.
inline Matrix softmax_rows(const Matrix& logits) {
    if (!logits.all_finite()) throw std::invalid_argument("softmax_rows: non-finite input");
    Matrix p(logits.rows, logits.cols);
    for (std::size_t i = 0; i < logits.rows; ++i) {
        auto in = logits.row(i);
        auto out = p.row(i);
        double mx = in[0];
        for (double v : in) mx = std::max(mx, v);
        double sum = 0.0;
        for (std::size_t c = 0; c < in.size(); ++c) {
            out[c] = std::exp(in[c] - mx);
            sum += out[c];
        }
        for (std::size_t c = 0; c < in.size(); ++c) out[c] /= sum;
    }
    return p;
}

/// Mean over `rows` of -sum_c target_c * log(pred_c + eps). Soft targets allowed.
/// Empty row set returns 0 so degenerate requests never abort a run.
inline double cross_entropy(const Matrix& pred, const Matrix& target,
                            const std::vector<std::uint32_t>& rows) {
    check_shape(pred, target, "cross_entropy");
    if (rows.empty()) return 0.0;
    double total = 0.0;
    for (auto r : rows) {
        if (r >= pred.rows) throw std::invalid_argument("cross_entropy: row index out of range");
        auto p = pred.row(r);
        auto t = target.row(r);
        for (std::size_t c = 0; c < p.size(); ++c) total -= t[c] * std::log(p[c] + kLogEps);
    }
    return total / static_cast<double>(rows.size());
}

/// Mean over `rows` of sum_c ref_c * log((ref_c + eps) / (other_c + eps)).
/// The first argument is the reference distribution.
inline double kl_divergence(const Matrix& ref, const Matrix& other,
                            const std::vector<std::uint32_t>& rows) {
    check_shape(ref, other, "kl_divergence");
    if (rows.empty()) return 0.0;
    double total = 0.0;
    for (auto r : rows) {
        if (r >= ref.rows) throw std::invalid_argument("kl_divergence: row index out of range");
        auto a = ref.row(r);
        auto b = other.row(r);
        for (std::size_t c = 0; c < a.size(); ++c)
            total += a[c] * std::log((a[c] + kLogEps) / (b[c] + kLogEps));
    }
    return total / static_cast<double>(rows.size());
}

/// w <- w - lr * (g + weight_decay * w), elementwise across all matrices.
inline void sgd_step(std::vector<Matrix>& params, const std::vector<Matrix>& grads,
                     const OptimizerConfig& cfg) {
    if (params.size() != grads.size()) throw std::invalid_argument("sgd_step: param/grad count mismatch");
    for (std::size_t k = 0; k < params.size(); ++k) {
        check_shape(params[k], grads[k], "sgd_step");
        if (!grads[k].all_finite()) throw std::invalid_argument("sgd_step: non-finite gradient");
        for (std::size_t i = 0; i < params[k].data.size(); ++i)
            params[k].data[i] -= cfg.lr * (grads[k].data[i] + cfg.weight_decay * params[k].data[i]);
    }
}

// ---- backward helpers ------------------------------------------------------

/// Given y = softmax(p) rowwise and dL/dy, returns dL/dp.
inline Matrix softmax_backward(const Matrix& probs, const Matrix& grad_probs) {
    check_shape(probs, grad_probs, "softmax_backward");
    Matrix out(probs.rows, probs.cols);
    for (std::size_t i = 0; i < probs.rows; ++i) {
        auto y = probs.row(i);
        auto g = grad_probs.row(i);
        double dot = 0.0;
        for (std::size_t c = 0; c < y.size(); ++c) dot += g[c] * y[c];
        auto o = out.row(i);
        for (std::size_t c = 0; c < y.size(); ++c) o[c] = y[c] * (g[c] - dot);
    }
    return out;
}

/// Accumulates d/dpred of cross_entropy(pred, target, rows) into grad_pred.
inline void cross_entropy_backward(const Matrix& pred, const Matrix& target,
                                   const std::vector<std::uint32_t>& rows, double coeff,
                                   Matrix& grad_pred) {
    if (rows.empty()) return;
    const double inv = coeff / static_cast<double>(rows.size());
    for (auto r : rows) {
        auto p = pred.row(r);
        auto t = target.row(r);
        auto g = grad_pred.row(r);
        for (std::size_t c = 0; c < p.size(); ++c) g[c] -= inv * t[c] / (p[c] + kLogEps);
    }
}

/// Accumulates the gradients of kl_divergence(ref, other, rows) w.r.t. both
/// arguments; gradients flow through the reference side as well.
inline void kl_divergence_backward(const Matrix& ref, const Matrix& other,
                                   const std::vector<std::uint32_t>& rows, double coeff,
                                   Matrix& grad_ref, Matrix& grad_other) {
    if (rows.empty()) return;
    const double inv = coeff / static_cast<double>(rows.size());
    for (auto r : rows) {
        auto a = ref.row(r);
        auto b = other.row(r);
        auto ga = grad_ref.row(r);
        auto gb = grad_other.row(r);
        for (std::size_t c = 0; c < a.size(); ++c) {
            ga[c] += inv * (std::log((a[c] + kLogEps) / (b[c] + kLogEps)) + a[c] / (a[c] + kLogEps));
            gb[c] -= inv * a[c] / (b[c] + kLogEps);
        }
    }
}

// ---- finite-difference gradient checker ------------------------------------

struct GradCheckReport {
    bool passed = false;
    double max_rel_error = 0.0;
};

/// Central differences (h = 1e-5) against analytic gradients.
/// Relative error uses max(1, |analytic|, |numeric|) as denominator.
inline GradCheckReport finite_difference_check(
    const std::function<double(const std::vector<Matrix>&)>& loss,
    std::vector<Matrix> params, const std::vector<Matrix>& analytic, double tolerance,
    double h = 1e-5) {
    GradCheckReport rep;
    for (std::size_t k = 0; k < params.size(); ++k) {
        for (std::size_t i = 0; i < params[k].data.size(); ++i) {
            const double orig = params[k].data[i];
            params[k].data[i] = orig + h;
            const double lp = loss(params);
            params[k].data[i] = orig - h;
            const double lm = loss(params);
            params[k].data[i] = orig;
            const double num = (lp - lm) / (2.0 * h);
            const double ana = analytic[k].data[i];
            const double denom = std::max({1.0, std::abs(num), std::abs(ana)});
            rep.max_rel_error = std::max(rep.max_rel_error, std::abs(num - ana) / denom);
        }
    }
    rep.passed = rep.max_rel_error <= tolerance;
    return rep;
}

/// Seeded Glorot-style uniform init, range +-sqrt(6/(fan_in+fan_out)).
inline Matrix glorot_init(std::size_t rows, std::size_t cols, std::mt19937_64& rng) {
    const double bound = std::sqrt(6.0 / static_cast<double>(rows + cols));
    std::uniform_real_distribution<double> dist(-bound, bound);
    Matrix m(rows, cols);
    for (double& v : m.data) v = dist(rng);
    return m;
}

}  // namespace megu
