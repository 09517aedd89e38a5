#pragma once

#include "soc/errors.hpp"
#include "soc/label.hpp"

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace soc {

/// Self-similarity sentinel: a class is always its own best medoid.
inline constexpr double kMaxSimilarity = std::numeric_limits<double>::infinity();

/// Dense symmetric K×K class-similarity matrix. The diagonal is pinned to
/// kMaxSimilarity; `version` names the ledger snapshot it came from.
class SimilarityMatrix {
public:
    SimilarityMatrix() = default;

    SimilarityMatrix(std::size_t num_classes, std::vector<double> values, std::uint64_t version = 0)
        : num_classes_(num_classes), values_(std::move(values)), version_(version) {
        if (values_.size() != num_classes_ * num_classes_) {
            throw ShapeMismatch("similarity matrix needs K*K entries");
        }
        for (std::size_t m = 0; m < num_classes_; ++m) {
            values_[m * num_classes_ + m] = kMaxSimilarity;
            for (std::size_t n = 0; n < m; ++n) {
                const double a = values_[m * num_classes_ + n];
                const double b = values_[n * num_classes_ + m];
                if (!std::isfinite(a) || a != b) {
                    throw ShapeMismatch("similarity matrix must be finite and symmetric off the diagonal");
                }
            }
        }
    }

    static SimilarityMatrix zeros(std::size_t num_classes, std::uint64_t version = 0) {
        return SimilarityMatrix(num_classes, std::vector<double>(num_classes * num_classes, 0.0), version);
    }

    std::size_t num_classes() const noexcept { return num_classes_; }
    std::uint64_t version() const noexcept { return version_; }
    double operator()(ClassIndex m, ClassIndex n) const noexcept { return values_[m * num_classes_ + n]; }
    std::span<const double> row(ClassIndex m) const noexcept {
        return std::span<const double>(values_).subspan(m * num_classes_, num_classes_);
    }

    friend bool operator==(const SimilarityMatrix&, const SimilarityMatrix&) = default;

private:
    std::size_t num_classes_ = 0;
    std::vector<double> values_;
    std::uint64_t version_ = 0;
};

}  // namespace soc
