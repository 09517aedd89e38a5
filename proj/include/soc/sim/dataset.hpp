#pragma once

// Hierarchical Gaussian-mixture stand-in for a fine-grained benchmark:
// super-class centers far apart, fine sub-class centers close together.

#include "soc/errors.hpp"
#include "soc/label.hpp"

#include <json.hpp>

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace soc::sim {

struct SyntheticDatasetSpec {
    std::size_t n_super = 8;
    std::size_t fine_per_super = 4;
    std::size_t dim = 16;
    double intra_spread = 2.0;
    double inter_spread = 5.0;
    std::size_t labels_per_class = 10;
    std::size_t unlabeled_per_class = 200;
    std::size_t test_per_class = 50;
    std::uint64_t seed = 0;

    std::size_t num_classes() const noexcept { return n_super * fine_per_super; }

    void validate() const {
        if (num_classes() < 4) throw ConfigError("dataset", "K = n_super * fine_per_super must be >= 4");
        if (dim == 0) throw ConfigError("dataset.dim", "must be >= 1");
        if (!(intra_spread >= 0.0)) throw ConfigError("dataset.intra_spread", "must be >= 0");
        if (!(intra_spread < inter_spread)) throw ConfigError("dataset.intra_spread", "must be < inter_spread");
        if (labels_per_class == 0) throw ConfigError("dataset.labels_per_class", "must be >= 1");
        if (unlabeled_per_class == 0) throw ConfigError("dataset.unlabeled_per_class", "must be >= 1");
        if (test_per_class == 0) throw ConfigError("dataset.test_per_class", "must be >= 1");
    }
};

struct Sample {
    std::vector<double> x;
    ClassIndex y = 0;

    friend bool operator==(const Sample&, const Sample&) = default;
};

struct Dataset {
    SyntheticDatasetSpec spec;
    std::size_t num_classes = 0;
    std::size_t dim = 0;
    std::vector<std::vector<double>> centers;
    std::vector<Sample> labeled;
    /// y is the hidden ground truth, read only by metrics.
    std::vector<Sample> unlabeled;
    std::vector<Sample> test;

    ClassIndex super_class(ClassIndex fine) const noexcept { return fine / spec.fine_per_super; }
};

namespace detail {

inline std::vector<double> random_direction(std::size_t dim, std::mt19937_64& rng) {
    std::normal_distribution<double> n01(0.0, 1.0);
    std::vector<double> v(dim);
    double norm2 = 0.0;
    do {
        norm2 = 0.0;
        for (auto& e : v) {
            e = n01(rng);
            norm2 += e * e;
        }
    } while (norm2 == 0.0);
    const double inv = 1.0 / std::sqrt(norm2);
    for (auto& e : v) e *= inv;
    return v;
}

}  // namespace detail

/// Fine class c belongs to super-class c / fine_per_super. Deterministic in
/// spec.seed.
inline Dataset generate_dataset(const SyntheticDatasetSpec& spec) {
    spec.validate();
    std::mt19937_64 rng(spec.seed);
    std::normal_distribution<double> n01(0.0, 1.0);

    Dataset ds;
    ds.spec = spec;
    ds.num_classes = spec.num_classes();
    ds.dim = spec.dim;
    for (std::size_t s = 0; s < spec.n_super; ++s) {
        auto super_center = detail::random_direction(spec.dim, rng);
        for (auto& e : super_center) e *= spec.inter_spread;
        for (std::size_t f = 0; f < spec.fine_per_super; ++f) {
            auto offset = detail::random_direction(spec.dim, rng);
            std::vector<double> c(spec.dim);
            for (std::size_t d = 0; d < spec.dim; ++d) c[d] = super_center[d] + spec.intra_spread * offset[d];
            ds.centers.push_back(std::move(c));
        }
    }

    auto draw = [&](std::size_t per_class, std::vector<Sample>& out) {
        out.reserve(per_class * ds.num_classes);
        for (std::size_t i = 0; i < per_class; ++i) {
            for (ClassIndex c = 0; c < ds.num_classes; ++c) {
                Sample s{std::vector<double>(spec.dim), c};
                for (std::size_t d = 0; d < spec.dim; ++d) s.x[d] = ds.centers[c][d] + n01(rng);
                out.push_back(std::move(s));
            }
        }
    };
    draw(spec.labels_per_class, ds.labeled);
    draw(spec.unlabeled_per_class, ds.unlabeled);
    draw(spec.test_per_class, ds.test);
    return ds;
}

inline nlohmann::json to_json(const SyntheticDatasetSpec& s) {
    return {{"n_super", s.n_super},
            {"fine_per_super", s.fine_per_super},
            {"dim", s.dim},
            {"intra_spread", s.intra_spread},
            {"inter_spread", s.inter_spread},
            {"labels_per_class", s.labels_per_class},
            {"unlabeled_per_class", s.unlabeled_per_class},
            {"test_per_class", s.test_per_class},
            {"seed", s.seed}};
}

inline nlohmann::json to_json(const Dataset& ds) {
    auto samples = [](const std::vector<Sample>& v) {
        nlohmann::json arr = nlohmann::json::array();
        for (const auto& s : v) arr.push_back({{"x", s.x}, {"y", s.y}});
        return arr;
    };
    return {{"spec", to_json(ds.spec)},
            {"centers", ds.centers},
            {"labeled", samples(ds.labeled)},
            {"unlabeled", samples(ds.unlabeled)},
            {"test", samples(ds.test)}};
}

}  // namespace soc::sim
