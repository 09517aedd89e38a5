#pragma once

// Feature-space analogues of weak and strong image augmentation.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <random>
#include <span>
#include <vector>

namespace soc::sim {

enum class Strength { weak, strong };

struct AugmentParams {
    double sigma_weak = 0.3;
    double sigma_strong = 1.0;
    /// fraction of coordinates zeroed by the strong view
    double drop_fraction = 0.2;
};

/// weak: x + N(0, sigma_weak^2); strong: x + N(0, sigma_strong^2) with
/// round(drop_fraction * dim) random coordinates zeroed.
inline std::vector<double> augment(std::span<const double> x, Strength strength, const AugmentParams& params,
                                   std::mt19937_64& rng) {
    std::normal_distribution<double> n01(0.0, 1.0);
    std::vector<double> out(x.begin(), x.end());
    const double sigma = strength == Strength::weak ? params.sigma_weak : params.sigma_strong;
    for (auto& v : out) v += sigma * n01(rng);
    if (strength == Strength::strong && !out.empty()) {
        const auto n_drop = static_cast<std::size_t>(
            std::lround(std::clamp(params.drop_fraction, 0.0, 1.0) * static_cast<double>(out.size())));
        std::vector<std::size_t> idx(out.size());
        std::iota(idx.begin(), idx.end(), std::size_t{0});
        for (std::size_t i = 0; i < n_drop; ++i) {
            std::uniform_int_distribution<std::size_t> pick(i, idx.size() - 1);
            std::swap(idx[i], idx[pick(rng)]);
            out[idx[i]] = 0.0;
        }
    }
    return out;
}

}  // namespace soc::sim
