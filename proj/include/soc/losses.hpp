#pragma once

#include "soc/errors.hpp"
#include "soc/label.hpp"
#include "soc/numeric.hpp"

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace soc {

struct LossReport {
    double sup = 0.0;
    double cos = 0.0;
    double total = 0.0;
    double lambda_cos = 0.0;
    std::vector<double> per_sample_cos;
};

/// H(target, softmax(logits)) via log-sum-exp. Zero-weight classes are
/// skipped so a -inf log-probability never multiplies a zero.
inline double cross_entropy(std::span<const double> target, std::span<const double> logits) {
    if (target.size() != logits.size()) throw ShapeMismatch("target and logits differ in length");
    const double lse = log_sum_exp(logits);
    CompensatedSum acc;
    for (std::size_t c = 0; c < target.size(); ++c) {
        if (target[c] > 0.0) acc += target[c] * (lse - logits[c]);
    }
    return std::max(0.0, acc.value());
}

inline double cross_entropy(const ProbVector& target, std::span<const double> logits) {
    return cross_entropy(target.values(), logits);
}

/// d/dlogits of cross_entropy: softmax(logits) - target (target sums to 1).
inline std::vector<double> cross_entropy_grad(std::span<const double> target, std::span<const double> logits) {
    if (target.size() != logits.size()) throw ShapeMismatch("target and logits differ in length");
    auto g = softmax(logits);
    for (std::size_t c = 0; c < g.size(); ++c) g[c] -= target[c];
    return g;
}

inline ProbVector one_hot(ClassIndex c, std::size_t num_classes) {
    if (c >= num_classes) throw InvalidClass("one-hot class out of range");
    std::vector<double> v(num_classes, 0.0);
    v[c] = 1.0;
    return ProbVector(std::move(v));
}

/// Mean one-hot cross-entropy over a labeled batch given its logits.
inline double supervised_loss(std::span<const std::vector<double>> logits, std::span<const ClassIndex> labels) {
    if (logits.empty()) throw EmptyBatch("supervised batch is empty");
    if (logits.size() != labels.size()) throw ShapeMismatch("labels and logits differ in count");
    CompensatedSum acc;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        const auto& z = logits[i];
        if (labels[i] >= z.size()) throw InvalidClass("label out of range");
        acc += log_sum_exp(z) - z[labels[i]];
    }
    return acc.value() / static_cast<double>(logits.size());
}

/// Forward pass through any model exposing `logits(x)`, then the mean
/// supervised cross-entropy.
template <typename Model, typename Inputs>
double supervised_loss(const Model& model, const Inputs& inputs, std::span<const ClassIndex> labels) {
    std::vector<std::vector<double>> z;
    z.reserve(std::size(inputs));
    for (const auto& x : inputs) z.push_back(model.logits(x));
    return supervised_loss(std::span<const std::vector<double>>(z), labels);
}

/// Per-sample H(p̃_i, softmax(strong_i)).
inline std::vector<double> consistency_terms(std::span<const SelectedLabel> selected,
                                             std::span<const std::vector<double>> strong_logits) {
    if (selected.size() != strong_logits.size()) throw ShapeMismatch("selected labels and strong logits differ in count");
    std::vector<double> terms(selected.size());
    for (std::size_t i = 0; i < selected.size(); ++i) terms[i] = cross_entropy(selected[i].probs, strong_logits[i]);
    return terms;
}

/// Mean over the whole unlabeled batch; no confidence mask.
inline double consistency_loss(std::span<const SelectedLabel> selected,
                               std::span<const std::vector<double>> strong_logits) {
    const auto terms = consistency_terms(selected, strong_logits);
    if (terms.empty()) return 0.0;
    return compensated_sum(terms) / static_cast<double>(terms.size());
}

/// Hard-label pseudo-labeling: samples with max(p) >= tau are trained on
/// their argmax, the rest contribute zero; the mean runs over all samples.
inline double baseline_fixmatch_loss(std::span<const ProbVector> probs_weak,
                                     std::span<const std::vector<double>> strong_logits, double tau) {
    if (!(tau >= 0.0 && tau <= 1.0)) throw InvalidConfidence("tau outside [0, 1]");
    if (probs_weak.size() != strong_logits.size()) throw ShapeMismatch("weak probs and strong logits differ in count");
    if (probs_weak.empty()) return 0.0;
    CompensatedSum acc;
    for (std::size_t i = 0; i < probs_weak.size(); ++i) {
        const auto& p = probs_weak[i];
        if (p.max() >= tau) acc += cross_entropy(one_hot(p.argmax(), p.size()), strong_logits[i]);
    }
    return acc.value() / static_cast<double>(probs_weak.size());
}

inline double total_loss(double sup, double cos, double lambda_cos) noexcept { return sup + lambda_cos * cos; }

inline LossReport make_report(double sup, std::vector<double> per_sample_cos, double lambda_cos) {
    LossReport r;
    r.sup = sup;
    r.cos = per_sample_cos.empty() ? 0.0 : compensated_sum(per_sample_cos) / static_cast<double>(per_sample_cos.size());
    r.lambda_cos = lambda_cos;
    r.total = total_loss(r.sup, r.cos, lambda_cos);
    r.per_sample_cos = std::move(per_sample_cos);
    return r;
}

}  // namespace soc
