#pragma once

// Probability vectors, candidate sets, and soft-label selection.
//
// Class indices are 0-based throughout.

#include "soc/errors.hpp"
#include "soc/numeric.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace soc {

using ClassIndex = std::size_t;

inline constexpr double kProbSumTolerance = 1e-9;

/// A post-softmax distribution over K >= 2 classes.
class ProbVector {
public:
    explicit ProbVector(std::vector<double> probs) : probs_(std::move(probs)) { validate(); }
    ProbVector(std::initializer_list<double> probs) : probs_(probs) { validate(); }

    static ProbVector from_logits(std::span<const double> logits) { return ProbVector(softmax(logits)); }

    std::size_t size() const noexcept { return probs_.size(); }
    double operator[](ClassIndex c) const { return probs_[c]; }
    std::span<const double> values() const noexcept { return probs_; }

    ClassIndex argmax() const noexcept { return soc::argmax(probs_); }
    double max() const noexcept { return probs_[argmax()]; }

    friend bool operator==(const ProbVector&, const ProbVector&) = default;

private:
    void validate() const {
        if (probs_.size() < 2) throw InvalidProbVector("probability vector needs K >= 2 classes");
        CompensatedSum acc;
        for (double p : probs_) {
            if (!(p >= 0.0) || !std::isfinite(p)) {
                throw InvalidProbVector("probability entries must be finite and non-negative");
            }
            acc += p;
        }
        if (std::abs(acc.value() - 1.0) > kProbSumTolerance) {
            throw InvalidProbVector("probabilities sum to " + std::to_string(acc.value()) + ", expected 1");
        }
    }

    std::vector<double> probs_;
};

/// Sorted, duplicate-free set of class indices.
class CandidateSet {
public:
    CandidateSet() = default;
    explicit CandidateSet(std::vector<ClassIndex> classes) : classes_(std::move(classes)) {
        std::sort(classes_.begin(), classes_.end());
        classes_.erase(std::unique(classes_.begin(), classes_.end()), classes_.end());
    }
    CandidateSet(std::initializer_list<ClassIndex> classes)
        : CandidateSet(std::vector<ClassIndex>(classes)) {}

    static CandidateSet full(std::size_t num_classes) {
        std::vector<ClassIndex> all(num_classes);
        for (std::size_t c = 0; c < num_classes; ++c) all[c] = c;
        return CandidateSet(std::move(all));
    }

    bool empty() const noexcept { return classes_.empty(); }
    std::size_t size() const noexcept { return classes_.size(); }
    bool contains(ClassIndex c) const { return std::binary_search(classes_.begin(), classes_.end(), c); }
    std::span<const ClassIndex> classes() const noexcept { return classes_; }
    auto begin() const noexcept { return classes_.begin(); }
    auto end() const noexcept { return classes_.end(); }

    friend bool operator==(const CandidateSet&, const CandidateSet&) = default;

private:
    std::vector<ClassIndex> classes_;
};

/// Binary mask g over the class space; at least one entry is set.
class SelectionIndicator {
public:
    explicit SelectionIndicator(std::vector<std::uint8_t> mask) : mask_(std::move(mask)) {
        bool any = false;
        for (auto& m : mask_) {
            m = m ? 1 : 0;
            any = any || m;
        }
        if (!any) throw InvalidCandidateSet("selection indicator selects no class");
    }

    static SelectionIndicator all_ones(std::size_t num_classes) {
        return SelectionIndicator(std::vector<std::uint8_t>(num_classes, 1));
    }

    std::size_t size() const noexcept { return mask_.size(); }
    bool selected(ClassIndex c) const { return mask_[c] != 0; }
    std::span<const std::uint8_t> mask() const noexcept { return mask_; }

    std::size_t count() const noexcept {
        return static_cast<std::size_t>(std::count(mask_.begin(), mask_.end(), std::uint8_t{1}));
    }

    friend bool operator==(const SelectionIndicator&, const SelectionIndicator&) = default;

private:
    std::vector<std::uint8_t> mask_;
};

struct SelectedLabel {
    SelectionIndicator indicator;
    ProbVector probs;
};

inline SelectionIndicator build_indicator(const CandidateSet& candidates, std::size_t num_classes) {
    if (candidates.empty()) throw InvalidCandidateSet("candidate set is empty");
    std::vector<std::uint8_t> mask(num_classes, 0);
    for (ClassIndex c : candidates) {
        if (c >= num_classes) {
            throw InvalidCandidateSet("candidate class " + std::to_string(c) + " out of range for K=" +
                                      std::to_string(num_classes));
        }
        mask[c] = 1;
    }
    return SelectionIndicator(std::move(mask));
}

/// Normalize(g ∘ p). Unselected entries come out exactly zero.
inline SelectedLabel select_label(const ProbVector& p, const SelectionIndicator& g) {
    if (p.size() != g.size()) throw ShapeMismatch("indicator length differs from probability vector length");
    CompensatedSum mass;
    for (ClassIndex c = 0; c < p.size(); ++c) {
        if (g.selected(c)) mass += p[c];
    }
    const double z = mass.value();
    if (!(z > 0.0)) throw ZeroMass("selected probability mass is zero");
    std::vector<double> out(p.size(), 0.0);
    for (ClassIndex c = 0; c < p.size(); ++c) {
        if (g.selected(c)) out[c] = p[c] / z;
    }
    return SelectedLabel{g, ProbVector(std::move(out))};
}

/// Shannon entropy in nats, with 0·ln 0 = 0.
inline double entropy(std::span<const double> p) noexcept {
    CompensatedSum acc;
    for (double v : p) {
        if (v > 0.0) acc += -v * std::log(v);
    }
    return std::max(0.0, acc.value());
}

inline double entropy(const ProbVector& p) noexcept { return entropy(p.values()); }

/// Ground-truth coverage z_obj1: p[y*] if y* is selected, else 0.
inline double obj1_score(const ProbVector& p, const SelectionIndicator& g, ClassIndex y_star) {
    if (y_star >= p.size()) throw InvalidClass("ground-truth class out of range");
    return g.selected(y_star) ? p[y_star] : 0.0;
}

/// Candidate-set size z_obj2.
inline std::size_t obj2_score(const SelectionIndicator& g) noexcept { return g.count(); }

}  // namespace soc
