#pragma once

// Small softmax classifier with hand-written gradients: linear by default,
// optionally one ReLU hidden layer.

#include "soc/errors.hpp"

#include <cmath>
#include <cstddef>
#include <random>
#include <span>
#include <vector>

namespace soc::sim {

class SoftmaxModel {
public:
    SoftmaxModel() = default;

    /// hidden == 0 gives logits = W x + b. Linear weights start at zero;
    /// hidden-layer weights use He initialization drawn from `rng`.
    SoftmaxModel(std::size_t num_classes, std::size_t dim, std::size_t hidden, std::mt19937_64& rng)
        : num_classes_(num_classes), dim_(dim), hidden_(hidden), params_(param_count(num_classes, dim, hidden), 0.0) {
        if (hidden_ > 0) {
            std::normal_distribution<double> w1(0.0, std::sqrt(2.0 / static_cast<double>(dim_)));
            std::normal_distribution<double> w2(0.0, std::sqrt(1.0 / static_cast<double>(hidden_)));
            for (std::size_t i = 0; i < hidden_ * dim_; ++i) params_[i] = w1(rng);
            const std::size_t w2_off = hidden_ * dim_ + hidden_;
            for (std::size_t i = 0; i < num_classes_ * hidden_; ++i) params_[w2_off + i] = w2(rng);
        }
    }

    static std::size_t param_count(std::size_t num_classes, std::size_t dim, std::size_t hidden) noexcept {
        if (hidden == 0) return num_classes * dim + num_classes;
        return hidden * dim + hidden + num_classes * hidden + num_classes;
    }

    std::size_t num_classes() const noexcept { return num_classes_; }
    std::size_t dim() const noexcept { return dim_; }
    std::size_t hidden() const noexcept { return hidden_; }
    std::span<const double> params() const noexcept { return params_; }
    std::span<double> params() noexcept { return params_; }

    std::vector<double> logits(std::span<const double> x) const {
        if (x.size() != dim_) throw ShapeMismatch("feature dimension mismatch");
        if (hidden_ == 0) return affine(x, 0, num_classes_, dim_);
        return affine(hidden_activations(x), hidden_ * dim_ + hidden_, num_classes_, hidden_);
    }

    /// grad += d(loss)/d(params) for one sample, given d(loss)/d(logits).
    void accumulate_grad(std::span<const double> x, std::span<const double> dlogits, std::span<double> grad) const {
        if (hidden_ == 0) {
            affine_backward(x, dlogits, 0, num_classes_, dim_, grad);
            return;
        }
        const auto h = hidden_activations(x);
        const std::size_t off2 = hidden_ * dim_ + hidden_;
        affine_backward(h, dlogits, off2, num_classes_, hidden_, grad);
        std::vector<double> dh(hidden_, 0.0);
        for (std::size_t c = 0; c < num_classes_; ++c) {
            for (std::size_t j = 0; j < hidden_; ++j) dh[j] += dlogits[c] * params_[off2 + c * hidden_ + j];
        }
        for (std::size_t j = 0; j < hidden_; ++j) {
            if (h[j] <= 0.0) dh[j] = 0.0;
        }
        affine_backward(x, dh, 0, hidden_, dim_, grad);
    }

    /// Mask selecting weight entries (1) versus biases (0), for weight decay.
    std::vector<double> weight_mask() const {
        std::vector<double> mask(params_.size(), 0.0);
        if (hidden_ == 0) {
            for (std::size_t i = 0; i < num_classes_ * dim_; ++i) mask[i] = 1.0;
        } else {
            for (std::size_t i = 0; i < hidden_ * dim_; ++i) mask[i] = 1.0;
            const std::size_t off2 = hidden_ * dim_ + hidden_;
            for (std::size_t i = 0; i < num_classes_ * hidden_; ++i) mask[off2 + i] = 1.0;
        }
        return mask;
    }

    friend bool operator==(const SoftmaxModel&, const SoftmaxModel&) = default;

private:
    std::vector<double> hidden_activations(std::span<const double> x) const {
        auto h = affine(x, 0, hidden_, dim_);
        for (auto& v : h) v = v > 0.0 ? v : 0.0;
        return h;
    }

    // rows x cols weight block at `off`, followed by `rows` biases
    std::vector<double> affine(std::span<const double> in, std::size_t off, std::size_t rows, std::size_t cols) const {
        std::vector<double> out(rows);
        const std::size_t bias = off + rows * cols;
        for (std::size_t r = 0; r < rows; ++r) {
            double s = params_[bias + r];
            const double* w = params_.data() + off + r * cols;
            for (std::size_t c = 0; c < cols; ++c) s += w[c] * in[c];
            out[r] = s;
        }
        return out;
    }

    static void affine_backward(std::span<const double> in, std::span<const double> dout, std::size_t off,
                                std::size_t rows, std::size_t cols, std::span<double> grad) {
        const std::size_t bias = off + rows * cols;
        for (std::size_t r = 0; r < rows; ++r) {
            const double d = dout[r];
            if (d == 0.0) continue;
            double* g = grad.data() + off + r * cols;
            for (std::size_t c = 0; c < cols; ++c) g[c] += d * in[c];
            grad[bias + r] += d;
        }
    }

    std::size_t num_classes_ = 0;
    std::size_t dim_ = 0;
    std::size_t hidden_ = 0;
    std::vector<double> params_;
};

}  // namespace soc::sim
