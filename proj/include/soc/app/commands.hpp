#pragma once

// Command implementations behind the `soc` executable. Each command reads
// from and writes to caller-supplied streams so tests can drive them
// directly. Errors propagate as soc::Error; exit_code() maps them.

#include "soc/app/prediction_log.hpp"
#include "soc/cluster.hpp"
#include "soc/kselect.hpp"
#include "soc/label.hpp"
#include "soc/sim/config.hpp"
#include "soc/sim/trainer.hpp"
#include "soc/transition.hpp"
#include "soc/verify.hpp"

#include <json.hpp>

#include <cstdint>
#include <exception>
#include <fstream>
#include <iomanip>
#include <istream>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace soc::app {

enum ExitCode : int {
    kExitOk = 0,
    kExitVerifyFailed = 1,
    kExitUsage = 2,
    kExitData = 3,
};

/// Usage and configuration problems exit 2, everything else from the
/// library (bad data, divergence) exits 3.
inline int exit_code(const std::exception& e) {
    if (dynamic_cast<const ConfigError*>(&e) || dynamic_cast<const InvalidPolicy*>(&e)) return kExitUsage;
    return kExitData;
}

inline constexpr double kDefaultAlpha = 5.0;
inline constexpr std::size_t kDefaultWindow = 512;

struct PolicyArgs {
    std::optional<std::string> name;
    std::optional<double> alpha;
    std::optional<double> beta;
    std::optional<std::size_t> k;

    bool any() const noexcept { return name || alpha || beta || k; }
};

/// No name: --k alone means fixed, otherwise linear. Linear defaults to
/// alpha = 5; exp needs --beta and fixed needs --k.
inline KPolicy resolve_policy(const PolicyArgs& a, std::size_t num_classes) {
    const std::string name = a.name.value_or(a.k && !a.alpha && !a.beta ? "fixed" : "linear");
    try {
        if (name == "linear") return KPolicy::linear(a.alpha.value_or(kDefaultAlpha), num_classes);
        if (name == "exp" || name == "exponential") {
            if (!a.beta) throw ConfigError("--beta", "required for --policy exp");
            return KPolicy::exponential(*a.beta, num_classes);
        }
        if (name == "fixed") {
            if (!a.k) throw ConfigError("--k", "required for --policy fixed");
            return KPolicy::fixed(*a.k, num_classes);
        }
    } catch (const InvalidPolicy& e) {
        throw ConfigError("--policy", e.what());
    }
    throw ConfigError("--policy", "unknown policy '" + name + "' (expected linear|exp|fixed)");
}

struct Replay {
    TransitionLedger ledger;
    PredictionBank<std::string> bank;
    std::size_t transitions = 0;
};

/// Feeds the log through the tracker, one batch per step in step order.
inline Replay replay(const PredictionLog& log, std::size_t window) {
    if (window == 0) throw ConfigError("--nb", "must be >= 1");
    Replay r{TransitionLedger(log.num_classes, window), {}, 0};
    for (const auto& [step, records] : log.steps) {
        std::vector<std::pair<std::string, ClassIndex>> batch;
        batch.reserve(records.size());
        for (const auto& rec : records) batch.emplace_back(rec.id, rec.probs.argmax());
        r.transitions += observe_batch(r.ledger, r.bank, batch).size();
    }
    return r;
}

inline void warn_cold_start(const Replay& r, std::ostream& err) {
    if (r.transitions == 0) {
        err << "warning: no class transitions observed; similarity is all zero and clusters are arbitrary\n";
    }
}

inline void warn_unconverged(const ClusterSet& cs, std::ostream& err) {
    if (!cs.converged) {
        err << "warning: k-medoids did not converge for k=" << cs.k << " after " << cs.iterations
            << " iterations; using the latest medoids\n";
    }
}

struct SelectOptions {
    PolicyArgs policy;
    std::uint64_t seed = 0;
    std::size_t window = kDefaultWindow;
    std::size_t max_iter = kDefaultKMedoidsMaxIter;
};

/// Replays the log, clusters on the final similarity snapshot, and writes
/// one NDJSON record per sample of the final step, in file order.
inline int cmd_select(std::istream& log_in, const SelectOptions& opt, std::ostream& out, std::ostream& err) {
    const auto log = read_prediction_log(log_in);
    const auto policy = resolve_policy(opt.policy, log.num_classes);
    const auto rp = replay(log, opt.window);
    warn_cold_start(rp, err);

    const auto sim = rp.ledger.similarity_matrix();
    ClusterCache cache(opt.seed, opt.max_iter);
    std::set<std::size_t> warned;
    for (const auto& rec : log.final_records()) {
        const std::size_t k = policy.select_k(rec.probs.max());
        const auto& cs = cache.get(sim, k);
        if (warned.insert(k).second) warn_unconverged(cs, err);
        const auto candidates = pick_candidates(cs, rec.probs.argmax());
        const auto sel = select_label(rec.probs, build_indicator(candidates, log.num_classes));

        nlohmann::ordered_json j;
        j["id"] = rec.id;
        j["k"] = k;
        j["candidate_classes"] = std::vector<ClassIndex>(candidates.begin(), candidates.end());
        j["p_tilde"] = std::vector<double>(sel.probs.values().begin(), sel.probs.values().end());
        j["entropy_before"] = entropy(rec.probs);
        j["entropy_after"] = entropy(sel.probs);
        out << j.dump() << '\n';
    }
    return kExitOk;
}

struct ClusterOptions {
    PolicyArgs policy;
    std::uint64_t seed = 0;
    std::size_t window = kDefaultWindow;
    std::size_t max_iter = kDefaultKMedoidsMaxIter;
};

/// With a confidence-aware policy, k comes from the mean confidence of the
/// final step's records.
inline int cmd_cluster(std::istream& log_in, const ClusterOptions& opt, std::ostream& out, std::ostream& err) {
    const auto log = read_prediction_log(log_in);
    const auto policy = resolve_policy(opt.policy, log.num_classes);
    const auto rp = replay(log, opt.window);
    warn_cold_start(rp, err);

    CompensatedSum conf;
    for (const auto& rec : log.final_records()) conf += rec.probs.max();
    const double mean_conf = std::min(1.0, conf.value() / static_cast<double>(log.final_records().size()));
    const std::size_t k = policy.select_k(mean_conf);

    const auto sim = rp.ledger.similarity_matrix();
    const auto cs = kmedoids(sim, k, clustering_seed(opt.seed, k, sim.version()), opt.max_iter);
    warn_unconverged(cs, err);
    out << cs.to_json().dump() << '\n';
    return kExitOk;
}

struct SimOverrides {
    std::optional<std::string> baseline;
    std::optional<double> tau;
    PolicyArgs policy;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> window;
    std::optional<std::size_t> iters;
};

inline sim::SimConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(path, "cannot open config file");
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(path, std::string("malformed JSON: ") + e.what());
    }
    return sim::config_from_json(j);
}

inline sim::SimConfig apply_overrides(sim::SimConfig cfg, const SimOverrides& o) {
    if (o.baseline) cfg.mode = sim::mode_from_string(*o.baseline, "--baseline");
    if (o.tau) cfg.tau = *o.tau;
    if (o.policy.any()) cfg.k_policy = resolve_policy(o.policy, cfg.dataset.num_classes()).variant();
    if (o.seed) cfg.seed = *o.seed;
    if (o.window) cfg.window = *o.window;
    if (o.iters) cfg.iters = *o.iters;
    cfg.validate();
    return cfg;
}

struct SimOutputs {
    /// metrics CSV; "-" writes to the command's output stream
    std::string metrics = "metrics.csv";
    std::optional<std::string> pairs;
    std::optional<std::string> checkpoint;
};

namespace detail {

template <typename Fn>
void write_file(const std::string& path, Fn&& fn) {
    std::ofstream f(path);
    if (!f) throw ConfigError(path, "cannot open output file");
    fn(f);
}

}  // namespace detail

inline std::string summary_line(const sim::SimConfig& cfg, const sim::RunResult& r) {
    const auto& last = r.history.back();
    std::ostringstream s;
    s << std::fixed << std::setprecision(4) << "mode=" << sim::to_string(cfg.mode) << " seed=" << cfg.seed
      << " iters=" << cfg.iters << " final_top1=" << r.final_top1() << " pl_acc=" << last.pl_acc
      << " mean_entropy_sel=" << last.mean_entropy_sel << " k_mean=" << last.k_mean;
    return s.str();
}

/// Runs one simulation; the summary line goes to `out` (or `err` when the
/// metrics CSV itself is streamed to `out`).
inline int cmd_sim(const sim::SimConfig& cfg, const SimOutputs& outputs, std::ostream& out, std::ostream& err) {
    const auto r = sim::run(cfg);
    if (outputs.metrics == "-") {
        sim::write_metrics_csv(out, r.history);
    } else {
        detail::write_file(outputs.metrics, [&](std::ostream& f) { sim::write_metrics_csv(f, r.history); });
    }
    if (outputs.pairs) {
        detail::write_file(*outputs.pairs, [&](std::ostream& f) { sim::write_pairs_csv(f, r.final_pairs); });
    }
    if (outputs.checkpoint) {
        detail::write_file(*outputs.checkpoint, [&](std::ostream& f) { f << sim::to_json(r.state).dump() << '\n'; });
    }
    (outputs.metrics == "-" ? err : out) << summary_line(cfg, r) << '\n';
    return kExitOk;
}

struct VerifyOptions {
    std::string suite = "all";
    /// 0 keeps each suite's default size
    std::size_t trials = 0;
    std::uint64_t seed = 0;
};

inline int cmd_verify(const VerifyOptions& opt, std::ostream& out) {
    std::vector<std::string> names;
    if (opt.suite == "all") {
        names = verify::suite_names();
    } else {
        names.push_back(opt.suite);
    }
    std::size_t failed_suites = 0;
    for (const auto& name : names) {
        const auto r = verify::run_suite(name, opt.trials, opt.seed);
        if (!r) throw ConfigError("--suite", "unknown suite '" + name + "'");
        out << (r->ok() ? "PASS " : "FAIL ") << r->name << ": " << r->passed << "/" << r->trials << " passed";
        if (!r->ok()) out << " (first failure: " << r->first_failure << ")";
        out << '\n';
        if (!r->ok()) ++failed_suites;
    }
    out << (failed_suites == 0 ? "all suites passed" : std::to_string(failed_suites) + " suite(s) failed") << '\n';
    return failed_suites == 0 ? kExitOk : kExitVerifyFailed;
}

}  // namespace soc::app
