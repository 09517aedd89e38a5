#pragma once

#include "soc/errors.hpp"
#include "soc/kselect.hpp"
#include "soc/sim/augment.hpp"
#include "soc/sim/dataset.hpp"

#include <json.hpp>

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <set>
#include <string>

namespace soc::sim {

/// Which unlabeled-data objective the run trains with.
enum class Mode {
    soc,         ///< selected soft labels (covers fixed-k and exponential ablations via k_policy)
    fixmatch,    ///< hard argmax labels above a confidence threshold
    soft,        ///< plain soft labels, all-ones indicator
    supervised,  ///< labeled loss only
};

inline const char* to_string(Mode m) {
    switch (m) {
        case Mode::soc: return "soc";
        case Mode::fixmatch: return "fixmatch";
        case Mode::soft: return "soft";
        case Mode::supervised: return "supervised";
    }
    return "?";
}

inline Mode mode_from_string(const std::string& s, const std::string& path = "mode") {
    if (s == "soc") return Mode::soc;
    if (s == "fixmatch") return Mode::fixmatch;
    if (s == "soft") return Mode::soft;
    if (s == "supervised") return Mode::supervised;
    throw ConfigError(path, "unknown mode '" + s + "' (expected soc|fixmatch|soft|supervised)");
}

enum class LrSchedule { cosine, constant };

struct SimConfig {
    SyntheticDatasetSpec dataset;
    std::size_t batch_size = 32;
    std::size_t mu = 5;
    std::size_t window = 512;
    double lambda_cos = 1.0;
    KPolicy::Variant k_policy = LinearK{5.0};
    std::size_t iters = 5000;
    double lr = 0.03;
    LrSchedule lr_schedule = LrSchedule::cosine;
    double momentum = 0.9;
    double weight_decay = 5e-4;
    std::size_t warmup_epochs = 1;
    std::uint64_t seed = 0;
    Mode mode = Mode::soc;
    /// Confidence threshold; unset means 0.95 for fixmatch and 0 for soft.
    std::optional<double> tau;
    std::size_t eval_every = 100;
    AugmentParams augment;
    /// Iterations between similarity snapshots used for clustering.
    std::size_t refresh_period = 1;
    std::size_t kmedoids_max_iter = 100;
    std::size_t hidden = 0;

    double effective_tau() const { return tau.value_or(mode == Mode::fixmatch ? 0.95 : 0.0); }
    std::size_t unlabeled_batch() const noexcept { return mu * batch_size; }

    KPolicy policy() const { return KPolicy(k_policy, dataset.num_classes()); }

    void validate() const {
        dataset.validate();
        if (batch_size == 0) throw ConfigError("B", "must be >= 1");
        if (mu == 0) throw ConfigError("mu", "must be >= 1");
        if (window == 0) throw ConfigError("N_b", "must be >= 1");
        if (!(lambda_cos >= 0.0) || !std::isfinite(lambda_cos)) throw ConfigError("lambda_cos", "must be finite and >= 0");
        if (iters == 0) throw ConfigError("iters", "must be >= 1");
        if (!(lr > 0.0)) throw ConfigError("lr", "must be > 0");
        if (!(momentum >= 0.0 && momentum < 1.0)) throw ConfigError("momentum", "must lie in [0, 1)");
        if (!(weight_decay >= 0.0)) throw ConfigError("weight_decay", "must be >= 0");
        if (tau && !(*tau >= 0.0 && *tau <= 1.0)) throw ConfigError("tau", "must lie in [0, 1]");
        if (eval_every == 0) throw ConfigError("eval_every", "must be >= 1");
        if (refresh_period == 0) throw ConfigError("refresh_period", "must be >= 1");
        if (kmedoids_max_iter == 0) throw ConfigError("kmedoids_max_iter", "must be >= 1");
        if (!(augment.sigma_weak >= 0.0)) throw ConfigError("augment.sigma_weak", "must be >= 0");
        if (!(augment.sigma_strong >= 0.0)) throw ConfigError("augment.sigma_strong", "must be >= 0");
        if (!(augment.drop_fraction >= 0.0 && augment.drop_fraction <= 1.0)) {
            throw ConfigError("augment.drop_fraction", "must lie in [0, 1]");
        }
        try {
            (void)policy();
        } catch (const InvalidPolicy& e) {
            throw ConfigError("k_policy", e.what());
        }
    }
};

namespace detail {

class ObjectReader {
public:
    ObjectReader(const nlohmann::json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw ConfigError(path_, "expected an object");
    }

    std::string at(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

    bool has(const std::string& key) {
        seen_.insert(key);
        return j_.contains(key);
    }

    const nlohmann::json& raw(const std::string& key) { return j_.at(key); }

    void read(const std::string& key, std::size_t& out) {
        if (!has(key)) return;
        const auto& v = j_.at(key);
        if (!v.is_number_unsigned()) throw ConfigError(at(key), "expected a non-negative integer");
        out = v.get<std::size_t>();
    }

    void read(const std::string& key, std::uint64_t& out, int) {
        if (!has(key)) return;
        const auto& v = j_.at(key);
        if (!v.is_number_unsigned()) throw ConfigError(at(key), "expected a non-negative integer");
        out = v.get<std::uint64_t>();
    }

    void read(const std::string& key, double& out) {
        if (!has(key)) return;
        const auto& v = j_.at(key);
        if (!v.is_number()) throw ConfigError(at(key), "expected a number");
        out = v.get<double>();
    }

    std::optional<std::string> string(const std::string& key) {
        if (!has(key)) return std::nullopt;
        const auto& v = j_.at(key);
        if (!v.is_string()) throw ConfigError(at(key), "expected a string");
        return v.get<std::string>();
    }

    void reject_unknown() const {
        for (const auto& [key, _] : j_.items()) {
            if (!seen_.contains(key)) throw ConfigError(at(key), "unknown field");
        }
    }

private:
    const nlohmann::json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

}  // namespace detail

inline SyntheticDatasetSpec dataset_spec_from_json(const nlohmann::json& j, const std::string& path = "dataset") {
    SyntheticDatasetSpec s;
    detail::ObjectReader r(j, path);
    r.read("n_super", s.n_super);
    r.read("fine_per_super", s.fine_per_super);
    r.read("dim", s.dim);
    r.read("intra_spread", s.intra_spread);
    r.read("inter_spread", s.inter_spread);
    r.read("labels_per_class", s.labels_per_class);
    r.read("unlabeled_per_class", s.unlabeled_per_class);
    r.read("test_per_class", s.test_per_class);
    r.read("seed", s.seed, 0);
    r.reject_unknown();
    return s;
}

/// Strict parse: unknown or mistyped fields raise ConfigError naming the
/// offending field path. Missing fields keep their defaults.
inline SimConfig config_from_json(const nlohmann::json& j) {
    SimConfig c;
    detail::ObjectReader r(j, "");
    if (r.has("dataset")) c.dataset = dataset_spec_from_json(r.raw("dataset"));
    r.read("B", c.batch_size);
    r.read("mu", c.mu);
    r.read("N_b", c.window);
    r.read("lambda_cos", c.lambda_cos);
    if (r.has("k_policy")) c.k_policy = KPolicy::from_json(r.raw("k_policy"), c.dataset.num_classes()).variant();
    r.read("iters", c.iters);
    r.read("lr", c.lr);
    if (auto s = r.string("lr_schedule")) {
        if (*s == "cosine") c.lr_schedule = LrSchedule::cosine;
        else if (*s == "constant") c.lr_schedule = LrSchedule::constant;
        else throw ConfigError("lr_schedule", "expected cosine|constant");
    }
    r.read("momentum", c.momentum);
    r.read("weight_decay", c.weight_decay);
    r.read("warmup_epochs", c.warmup_epochs);
    r.read("seed", c.seed, 0);
    if (auto s = r.string("mode")) c.mode = mode_from_string(*s);
    if (r.has("tau")) {
        if (!r.raw("tau").is_number()) throw ConfigError("tau", "expected a number");
        c.tau = r.raw("tau").get<double>();
    }
    r.read("eval_every", c.eval_every);
    if (r.has("augment")) {
        detail::ObjectReader a(r.raw("augment"), "augment");
        a.read("sigma_weak", c.augment.sigma_weak);
        a.read("sigma_strong", c.augment.sigma_strong);
        a.read("drop_fraction", c.augment.drop_fraction);
        a.reject_unknown();
    }
    r.read("refresh_period", c.refresh_period);
    r.read("kmedoids_max_iter", c.kmedoids_max_iter);
    r.read("hidden", c.hidden);
    r.reject_unknown();
    c.validate();
    return c;
}

inline nlohmann::json to_json(const SimConfig& c) {
    nlohmann::json j = {
        {"dataset", to_json(c.dataset)},
        {"B", c.batch_size},
        {"mu", c.mu},
        {"N_b", c.window},
        {"lambda_cos", c.lambda_cos},
        {"k_policy", c.policy().to_json()},
        {"iters", c.iters},
        {"lr", c.lr},
        {"lr_schedule", c.lr_schedule == LrSchedule::cosine ? "cosine" : "constant"},
        {"momentum", c.momentum},
        {"weight_decay", c.weight_decay},
        {"warmup_epochs", c.warmup_epochs},
        {"seed", c.seed},
        {"mode", to_string(c.mode)},
        {"eval_every", c.eval_every},
        {"augment",
         {{"sigma_weak", c.augment.sigma_weak},
          {"sigma_strong", c.augment.sigma_strong},
          {"drop_fraction", c.augment.drop_fraction}}},
        {"refresh_period", c.refresh_period},
        {"kmedoids_max_iter", c.kmedoids_max_iter},
        {"hidden", c.hidden},
    };
    if (c.tau) j["tau"] = *c.tau;
    return j;
}

}  // namespace soc::sim
