#pragma once

// Confidence-aware choice of the cluster count k.

#include "soc/errors.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <variant>

namespace soc {

struct LinearK {
    double alpha = 5.0;
};

struct ExponentialK {
    double beta = 0.0;
};

struct FixedK {
    std::size_t k = 2;
};

/// Maps max-probability confidence to k in {2, ..., K}.
class KPolicy {
public:
    using Variant = std::variant<LinearK, ExponentialK, FixedK>;

    KPolicy(Variant variant, std::size_t num_classes) : variant_(variant), num_classes_(num_classes) { validate(); }

    static KPolicy linear(double alpha, std::size_t num_classes) { return KPolicy(LinearK{alpha}, num_classes); }
    static KPolicy exponential(double beta, std::size_t num_classes) {
        return KPolicy(ExponentialK{beta}, num_classes);
    }
    static KPolicy fixed(std::size_t k, std::size_t num_classes) { return KPolicy(FixedK{k}, num_classes); }

    /// Smallest admissible alpha, K / (K - 2).
    static double min_alpha(std::size_t num_classes) {
        const double K = static_cast<double>(num_classes);
        return K / (K - 2.0);
    }

    /// Largest admissible beta, ln(2 - 2/K).
    static double max_beta(std::size_t num_classes) {
        return std::log(2.0 - 2.0 / static_cast<double>(num_classes));
    }

    const Variant& variant() const noexcept { return variant_; }
    std::size_t num_classes() const noexcept { return num_classes_; }
    bool is_fixed() const noexcept { return std::holds_alternative<FixedK>(variant_); }

    std::size_t select_k(double confidence) const {
        if (!(confidence >= 0.0 && confidence <= 1.0)) {
            throw InvalidConfidence("confidence " + std::to_string(confidence) + " outside [0, 1]");
        }
        const double K = static_cast<double>(num_classes_);
        double raw = 0.0;
        if (const auto* lin = std::get_if<LinearK>(&variant_)) {
            raw = std::ceil((confidence / lin->alpha + 2.0 / K) * K - 0.5);
        } else if (const auto* ex = std::get_if<ExponentialK>(&variant_)) {
            raw = std::ceil((std::exp(ex->beta * confidence) - 1.0 + 2.0 / K) * K - 0.5);
        } else {
            return std::get<FixedK>(variant_).k;
        }
        return static_cast<std::size_t>(std::clamp(raw, 2.0, K));
    }

    nlohmann::json to_json() const {
        if (const auto* lin = std::get_if<LinearK>(&variant_)) return {{"policy", "linear"}, {"alpha", lin->alpha}};
        if (const auto* ex = std::get_if<ExponentialK>(&variant_)) return {{"policy", "exp"}, {"beta", ex->beta}};
        return {{"policy", "fixed"}, {"k", std::get<FixedK>(variant_).k}};
    }

    /// Accepts {"policy":"linear","alpha":5}, {"policy":"exp","beta":0.3},
    /// {"policy":"fixed","k":50}.
    static KPolicy from_json(const nlohmann::json& j, std::size_t num_classes, const std::string& path = "k_policy") {
        if (!j.is_object()) throw ConfigError(path, "expected an object");
        if (!j.contains("policy") || !j["policy"].is_string()) throw ConfigError(path + ".policy", "expected a string");
        const auto name = j["policy"].get<std::string>();
        auto number = [&](const char* key) {
            if (!j.contains(key) || !j[key].is_number()) throw ConfigError(path + "." + key, "expected a number");
            return j[key].get<double>();
        };
        try {
            if (name == "linear") return linear(number("alpha"), num_classes);
            if (name == "exp" || name == "exponential") return exponential(number("beta"), num_classes);
            if (name == "fixed") {
                if (!j.contains("k") || !j["k"].is_number_unsigned()) {
                    throw ConfigError(path + ".k", "expected a non-negative integer");
                }
                return fixed(j["k"].get<std::size_t>(), num_classes);
            }
        } catch (const InvalidPolicy& e) {
            throw ConfigError(path, e.what());
        }
        throw ConfigError(path + ".policy", "unknown policy '" + name + "'");
    }

private:
    void validate() const {
        if (num_classes_ < 2) throw InvalidPolicy("k selection needs K >= 2");
        if (!is_fixed() && num_classes_ < 3) throw InvalidPolicy("confidence-aware k selection needs K >= 3");
        if (const auto* lin = std::get_if<LinearK>(&variant_)) {
            if (!(lin->alpha >= min_alpha(num_classes_)) || !std::isfinite(lin->alpha)) {
                throw InvalidPolicy("alpha must be >= K/(K-2)");
            }
        } else if (const auto* ex = std::get_if<ExponentialK>(&variant_)) {
            if (!(ex->beta > 0.0 && ex->beta <= max_beta(num_classes_))) {
                throw InvalidPolicy("beta must lie in (0, ln(2 - 2/K)]");
            }
        } else {
            const auto k = std::get<FixedK>(variant_).k;
            if (k < 2 || k > num_classes_) throw InvalidPolicy("fixed k must lie in [2, K]");
        }
    }

    Variant variant_;
    std::size_t num_classes_;
};

}  // namespace soc
