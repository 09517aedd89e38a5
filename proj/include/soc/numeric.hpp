#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <vector>

namespace soc {

/// Neumaier-compensated accumulator. Keeps reductions over a batch stable
/// against summation order.
class CompensatedSum {
public:
    CompensatedSum& operator+=(double x) noexcept {
        const double t = sum_ + x;
        if (std::abs(sum_) >= std::abs(x)) {
            comp_ += (sum_ - t) + x;
        } else {
            comp_ += (x - t) + sum_;
        }
        sum_ = t;
        return *this;
    }

    double value() const noexcept { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

inline double compensated_sum(std::span<const double> xs) noexcept {
    CompensatedSum acc;
    for (double x : xs) acc += x;
    return acc.value();
}

/// Index of the largest entry; ties go to the lowest index.
inline std::size_t argmax(std::span<const double> xs) noexcept {
    std::size_t best = 0;
    for (std::size_t i = 1; i < xs.size(); ++i) {
        if (xs[i] > xs[best]) best = i;
    }
    return best;
}

inline double log_sum_exp(std::span<const double> logits) noexcept {
    if (logits.empty()) return -std::numeric_limits<double>::infinity();
    const double m = *std::max_element(logits.begin(), logits.end());
    if (!std::isfinite(m)) return m;
    CompensatedSum acc;
    for (double z : logits) acc += std::exp(z - m);
    return m + std::log(acc.value());
}

inline std::vector<double> log_softmax(std::span<const double> logits) {
    const double lse = log_sum_exp(logits);
    std::vector<double> out(logits.size());
    for (std::size_t i = 0; i < logits.size(); ++i) out[i] = logits[i] - lse;
    return out;
}

inline std::vector<double> softmax(std::span<const double> logits) {
    if (logits.empty()) return {};
    const double m = *std::max_element(logits.begin(), logits.end());
    std::vector<double> out(logits.size());
    CompensatedSum acc;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        out[i] = std::exp(logits[i] - m);
        acc += out[i];
    }
    const double z = acc.value();
    for (double& v : out) v /= z;
    return out;
}

}  // namespace soc
