#pragma once

// The semi-supervised training loop: weak/strong views, class-transition
// tracking, confidence-aware clustering, selected soft labels, and one
// SGD-with-momentum update per iteration.

#include "soc/cluster.hpp"
#include "soc/errors.hpp"
#include "soc/kselect.hpp"
#include "soc/label.hpp"
#include "soc/losses.hpp"
#include "soc/numeric.hpp"
#include "soc/sim/augment.hpp"
#include "soc/sim/config.hpp"
#include "soc/sim/dataset.hpp"
#include "soc/sim/model.hpp"
#include "soc/transition.hpp"

#include <json.hpp>

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <numeric>
#include <optional>
#include <ostream>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace soc::sim {

struct EvalRecord {
    std::size_t iter = 0;
    double test_top1 = 0.0;
    double pl_acc = 0.0;
    double mean_entropy_sel = 0.0;
    double mean_entropy_raw = 0.0;
    double mean_zobj1 = 0.0;
    double mean_zobj2 = 0.0;
    double k_mean = 0.0;
    /// largest candidate set seen during this evaluation
    std::size_t max_candidates = 0;

    friend bool operator==(const EvalRecord&, const EvalRecord&) = default;
};

/// Per-sample (z_obj1, entropy of p̃) pair from an evaluation pass.
struct ObjectivePair {
    double zobj1 = 0.0;
    double entropy_sel = 0.0;
};

/// Cycles through reshuffled permutations of [0, n).
class BatchSampler {
public:
    BatchSampler() = default;
    explicit BatchSampler(std::size_t n) : order_(n) { std::iota(order_.begin(), order_.end(), std::size_t{0}); }

    std::vector<std::size_t> draw(std::size_t count, std::mt19937_64& rng) {
        std::vector<std::size_t> out;
        out.reserve(count);
        while (out.size() < count) {
            if (pos_ == 0) std::shuffle(order_.begin(), order_.end(), rng);
            out.push_back(order_[pos_]);
            pos_ = (pos_ + 1) % order_.size();
        }
        return out;
    }

    nlohmann::json to_json() const { return {{"order", order_}, {"pos", pos_}}; }
    static BatchSampler from_json(const nlohmann::json& j) {
        BatchSampler s;
        s.order_ = j.at("order").get<std::vector<std::size_t>>();
        s.pos_ = j.at("pos").get<std::size_t>();
        return s;
    }

    friend bool operator==(const BatchSampler&, const BatchSampler&) = default;

private:
    std::vector<std::size_t> order_;
    std::size_t pos_ = 0;
};

struct SimState {
    SoftmaxModel model;
    std::vector<double> velocity;
    TransitionLedger ledger;
    PredictionBank<std::size_t> bank;
    std::mt19937_64 rng;
    BatchSampler labeled_sampler;
    BatchSampler unlabeled_sampler;
    std::size_t iteration = 0;
    /// similarity snapshot the clustering currently reads from
    std::optional<SimilarityMatrix> snapshot;
    std::vector<EvalRecord> history;
    std::vector<double> loss_trace;
};

inline SimState init_state(const SimConfig& cfg, const Dataset& ds) {
    std::mt19937_64 rng(cfg.seed);
    SoftmaxModel model(ds.num_classes, ds.dim, cfg.hidden, rng);
    std::vector<double> velocity(model.params().size(), 0.0);
    return SimState{std::move(model),
                    std::move(velocity),
                    TransitionLedger(ds.num_classes, cfg.window),
                    {},
                    std::move(rng),
                    BatchSampler(ds.labeled.size()),
                    BatchSampler(ds.unlabeled.size()),
                    0,
                    std::nullopt,
                    {},
                    {}};
}

inline std::size_t iterations_per_epoch(const SimConfig& cfg, const Dataset& ds) {
    const std::size_t ub = cfg.unlabeled_batch();
    return (ds.unlabeled.size() + ub - 1) / ub;
}

inline std::size_t warmup_iterations(const SimConfig& cfg, const Dataset& ds) {
    return cfg.warmup_epochs * iterations_per_epoch(cfg, ds);
}

/// Cosine decay lr * cos(7*pi*t / (16*T)).
inline double learning_rate(const SimConfig& cfg, std::size_t iteration) {
    if (cfg.lr_schedule == LrSchedule::constant) return cfg.lr;
    const double t = static_cast<double>(iteration) / static_cast<double>(cfg.iters);
    return cfg.lr * std::cos(7.0 * std::numbers::pi * t / 16.0);
}

inline std::uint64_t clustering_base_seed(const SimConfig& cfg) noexcept { return cfg.seed ^ 0x5bd1e995ULL; }

/// Builds the unlabeled target for one weak-view prediction according to
/// the configured mode. Returns nullopt when the sample is masked out.
class TargetBuilder {
public:
    TargetBuilder(const SimConfig& cfg, std::size_t num_classes, const SimilarityMatrix* snapshot, ClusterCache* cache)
        : cfg_(cfg), num_classes_(num_classes), snapshot_(snapshot), cache_(cache),
          policy_(cfg.policy()), tau_(cfg.effective_tau()) {}

    struct Target {
        SelectedLabel label;
        std::size_t k;
    };

    /// `for_metrics` ignores the confidence mask and gives supervised runs
    /// the plain soft label.
    std::optional<Target> build(const ProbVector& p, bool for_metrics = false) const {
        switch (cfg_.mode) {
            case Mode::soc: {
                const std::size_t k = policy_.select_k(p.max());
                const ClusterSet& cs = cache_->get(*snapshot_, k);
                const auto g = build_indicator(pick_candidates(cs, p.argmax()), num_classes_);
                return Target{select_label(p, g), k};
            }
            case Mode::fixmatch: {
                if (!for_metrics && p.max() < tau_) return std::nullopt;
                const auto g = build_indicator(CandidateSet{p.argmax()}, num_classes_);
                return Target{select_label(p, g), num_classes_};
            }
            case Mode::soft: {
                if (!for_metrics && p.max() < tau_) return std::nullopt;
                return Target{select_label(p, SelectionIndicator::all_ones(num_classes_)), 1};
            }
            case Mode::supervised:
                if (!for_metrics) return std::nullopt;
                return Target{select_label(p, SelectionIndicator::all_ones(num_classes_)), 1};
        }
        return std::nullopt;
    }

private:
    const SimConfig& cfg_;
    std::size_t num_classes_;
    const SimilarityMatrix* snapshot_;
    ClusterCache* cache_;
    KPolicy policy_;
    double tau_;
};

/// One training iteration on the given labeled / unlabeled index batches.
inline LossReport soc_step(SimState& st, const SimConfig& cfg, const Dataset& ds,
                           std::span<const std::size_t> labeled_idx, std::span<const std::size_t> unlabeled_idx,
                           ClusterCache& cache) {
    if (labeled_idx.size() != cfg.batch_size) throw ShapeMismatch("labeled batch must have B samples");
    if (unlabeled_idx.size() != cfg.unlabeled_batch()) throw ShapeMismatch("unlabeled batch must have mu*B samples");
    const std::size_t K = ds.num_classes;
    auto& model = st.model;
    std::vector<double> grad(model.params().size(), 0.0);

    // supervised branch, weak view
    std::vector<std::vector<double>> lb_x, lb_logits;
    std::vector<ClassIndex> lb_y;
    for (std::size_t i : labeled_idx) {
        lb_x.push_back(augment(ds.labeled[i].x, Strength::weak, cfg.augment, st.rng));
        lb_logits.push_back(model.logits(lb_x.back()));
        lb_y.push_back(ds.labeled[i].y);
    }
    const double sup = supervised_loss(std::span<const std::vector<double>>(lb_logits), lb_y);
    const double inv_b = 1.0 / static_cast<double>(labeled_idx.size());
    for (std::size_t i = 0; i < lb_x.size(); ++i) {
        auto d = cross_entropy_grad(one_hot(lb_y[i], K).values(), lb_logits[i]);
        for (auto& v : d) v *= inv_b;
        model.accumulate_grad(lb_x[i], d, grad);
    }

    // unlabeled branch: weak view drives pseudo-labels, strong view is trained
    std::vector<std::vector<double>> ulb_strong_x, ulb_strong_logits;
    std::vector<ProbVector> ulb_probs;
    std::vector<std::pair<std::size_t, ClassIndex>> predictions;
    for (std::size_t i : unlabeled_idx) {
        const auto xw = augment(ds.unlabeled[i].x, Strength::weak, cfg.augment, st.rng);
        ulb_strong_x.push_back(augment(ds.unlabeled[i].x, Strength::strong, cfg.augment, st.rng));
        ulb_probs.push_back(ProbVector::from_logits(model.logits(xw)));
        predictions.emplace_back(i, ulb_probs.back().argmax());
    }
    observe_batch(st.ledger, st.bank, std::span<const std::pair<std::size_t, ClassIndex>>(predictions));

    const bool active = cfg.mode != Mode::supervised && st.iteration >= warmup_iterations(cfg, ds);
    std::vector<double> terms;
    if (active) {
        if (cfg.mode == Mode::soc && (!st.snapshot || st.iteration % cfg.refresh_period == 0)) {
            st.snapshot = st.ledger.similarity_matrix();
        }
        const TargetBuilder builder(cfg, K, st.snapshot ? &*st.snapshot : nullptr, &cache);
        const double scale = cfg.lambda_cos / static_cast<double>(unlabeled_idx.size());
        terms.assign(unlabeled_idx.size(), 0.0);
        for (std::size_t i = 0; i < unlabeled_idx.size(); ++i) {
            const auto target = builder.build(ulb_probs[i]);
            if (!target) continue;
            const auto zs = model.logits(ulb_strong_x[i]);
            terms[i] = cross_entropy(target->label.probs, zs);
            auto d = cross_entropy_grad(target->label.probs.values(), zs);
            for (auto& v : d) v *= scale;
            model.accumulate_grad(ulb_strong_x[i], d, grad);
        }
    }

    auto report = make_report(sup, std::move(terms), cfg.lambda_cos);
    bool finite = std::isfinite(report.total);
    for (double g : grad) finite = finite && std::isfinite(g);
    if (!finite) throw DivergedAtIteration(st.iteration);

    const double lr = learning_rate(cfg, st.iteration);
    const auto wmask = model.weight_mask();
    auto params = model.params();
    bool params_finite = true;
    for (std::size_t i = 0; i < params.size(); ++i) {
        const double g = grad[i] + cfg.weight_decay * wmask[i] * params[i];
        st.velocity[i] = cfg.momentum * st.velocity[i] + g;
        params[i] -= lr * st.velocity[i];
        params_finite = params_finite && std::isfinite(params[i]);
    }
    if (!params_finite) throw DivergedAtIteration(st.iteration);
    ++st.iteration;
    st.loss_trace.push_back(report.total);
    return report;
}

/// Clean-input evaluation: test top-1 plus pseudo-label statistics over the
/// whole unlabeled set, using the current ledger for clustering.
inline EvalRecord evaluate(const SimState& st, const SimConfig& cfg, const Dataset& ds,
                           std::vector<ObjectivePair>* pairs = nullptr) {
    EvalRecord rec;
    rec.iter = st.iteration;
    std::size_t correct = 0;
    for (const auto& s : ds.test) {
        if (argmax(st.model.logits(s.x)) == s.y) ++correct;
    }
    rec.test_top1 = static_cast<double>(correct) / static_cast<double>(ds.test.size());

    const auto snapshot = st.ledger.similarity_matrix();
    ClusterCache cache(clustering_base_seed(cfg), cfg.kmedoids_max_iter);
    const TargetBuilder builder(cfg, ds.num_classes, &snapshot, &cache);
    CompensatedSum h_sel, h_raw, z1, z2, kk;
    std::size_t pl_correct = 0;
    if (pairs) pairs->clear();
    for (const auto& s : ds.unlabeled) {
        const auto p = ProbVector::from_logits(st.model.logits(s.x));
        if (p.argmax() == s.y) ++pl_correct;
        const auto t = builder.build(p, true);
        const double hs = entropy(t->label.probs);
        const double zo1 = obj1_score(p, t->label.indicator, s.y);
        const std::size_t zo2 = obj2_score(t->label.indicator);
        h_sel += hs;
        h_raw += entropy(p);
        z1 += zo1;
        z2 += static_cast<double>(zo2);
        kk += static_cast<double>(t->k);
        rec.max_candidates = std::max(rec.max_candidates, zo2);
        if (pairs) pairs->push_back({zo1, hs});
    }
    const double m = static_cast<double>(ds.unlabeled.size());
    rec.pl_acc = static_cast<double>(pl_correct) / m;
    rec.mean_entropy_sel = h_sel.value() / m;
    rec.mean_entropy_raw = h_raw.value() / m;
    rec.mean_zobj1 = z1.value() / m;
    rec.mean_zobj2 = z2.value() / m;
    rec.k_mean = kk.value() / m;
    return rec;
}

struct RunResult {
    SimState state;
    std::vector<EvalRecord> history;
    std::vector<double> loss_trace;
    /// (z_obj1, entropy) pairs from the final evaluation
    std::vector<ObjectivePair> final_pairs;

    /// Mean test top-1 over the last three evaluations.
    double final_top1() const {
        if (history.empty()) return 0.0;
        const std::size_t n = std::min<std::size_t>(3, history.size());
        double s = 0.0;
        for (std::size_t i = history.size() - n; i < history.size(); ++i) s += history[i].test_top1;
        return s / static_cast<double>(n);
    }
};

/// Continues training until `stop_at` iterations (capped at cfg.iters).
inline void train_until(SimState& st, const SimConfig& cfg, const Dataset& ds, std::size_t stop_at,
                        std::vector<ObjectivePair>* final_pairs = nullptr) {
    ClusterCache cache(clustering_base_seed(cfg), cfg.kmedoids_max_iter);
    stop_at = std::min(stop_at, cfg.iters);
    while (st.iteration < stop_at) {
        const auto lb = st.labeled_sampler.draw(cfg.batch_size, st.rng);
        const auto ulb = st.unlabeled_sampler.draw(cfg.unlabeled_batch(), st.rng);
        soc_step(st, cfg, ds, lb, ulb, cache);
        if (st.iteration % cfg.eval_every == 0 || st.iteration == cfg.iters) {
            const bool last = st.iteration == cfg.iters;
            st.history.push_back(evaluate(st, cfg, ds, last ? final_pairs : nullptr));
        }
    }
}

inline RunResult run(const SimConfig& cfg, const Dataset& ds) {
    cfg.validate();
    RunResult r{init_state(cfg, ds), {}, {}, {}};
    train_until(r.state, cfg, ds, cfg.iters, &r.final_pairs);
    r.history = r.state.history;
    r.loss_trace = r.state.loss_trace;
    return r;
}

inline RunResult run(const SimConfig& cfg) { return run(cfg, generate_dataset(cfg.dataset)); }

/// Mean entropy of p̃ over the unlabeled set with a fixed cluster count,
/// reading the state's current ledger.
inline double mean_selected_entropy(const SimState& st, const SimConfig& cfg, const Dataset& ds, std::size_t k) {
    const auto snapshot = st.ledger.similarity_matrix();
    const auto cs = kmedoids(snapshot, k, clustering_seed(clustering_base_seed(cfg), k, snapshot.version()),
                             cfg.kmedoids_max_iter);
    CompensatedSum acc;
    for (const auto& s : ds.unlabeled) {
        const auto p = ProbVector::from_logits(st.model.logits(s.x));
        const auto g = build_indicator(pick_candidates(cs, p.argmax()), ds.num_classes);
        acc += entropy(select_label(p, g).probs);
    }
    return acc.value() / static_cast<double>(ds.unlabeled.size());
}

inline const char* kMetricsHeader =
    "iter,test_top1,pl_acc,mean_entropy_sel,mean_entropy_raw,mean_zobj1,mean_zobj2,k_mean";

inline void write_metrics_csv(std::ostream& os, const std::vector<EvalRecord>& history) {
    os << kMetricsHeader << '\n';
    std::ostringstream line;
    for (const auto& r : history) {
        line.str("");
        line.precision(10);
        line << r.iter << ',' << r.test_top1 << ',' << r.pl_acc << ',' << r.mean_entropy_sel << ','
             << r.mean_entropy_raw << ',' << r.mean_zobj1 << ',' << r.mean_zobj2 << ',' << r.k_mean;
        os << line.str() << '\n';
    }
}

inline void write_pairs_csv(std::ostream& os, const std::vector<ObjectivePair>& pairs) {
    os << "zobj1,entropy_sel\n";
    os.precision(10);
    for (const auto& p : pairs) os << p.zobj1 << ',' << p.entropy_sel << '\n';
}

// -- checkpoint ------------------------------------------------------------

inline nlohmann::json to_json(const EvalRecord& r) {
    return {{"iter", r.iter},
            {"test_top1", r.test_top1},
            {"pl_acc", r.pl_acc},
            {"mean_entropy_sel", r.mean_entropy_sel},
            {"mean_entropy_raw", r.mean_entropy_raw},
            {"mean_zobj1", r.mean_zobj1},
            {"mean_zobj2", r.mean_zobj2},
            {"k_mean", r.k_mean},
            {"max_candidates", r.max_candidates}};
}

inline EvalRecord eval_record_from_json(const nlohmann::json& j) {
    EvalRecord r;
    r.iter = j.at("iter").get<std::size_t>();
    r.test_top1 = j.at("test_top1").get<double>();
    r.pl_acc = j.at("pl_acc").get<double>();
    r.mean_entropy_sel = j.at("mean_entropy_sel").get<double>();
    r.mean_entropy_raw = j.at("mean_entropy_raw").get<double>();
    r.mean_zobj1 = j.at("mean_zobj1").get<double>();
    r.mean_zobj2 = j.at("mean_zobj2").get<double>();
    r.k_mean = j.at("k_mean").get<double>();
    r.max_candidates = j.at("max_candidates").get<std::size_t>();
    return r;
}

/// Full SimState dump; doubles round-trip exactly through the JSON writer.
inline nlohmann::json to_json(const SimState& st) {
    std::ostringstream rng;
    rng << st.rng;
    nlohmann::json bank = nlohmann::json::array();
    for (const auto& [id, c] : st.bank.entries()) bank.push_back({id, c});
    nlohmann::json history = nlohmann::json::array();
    for (const auto& r : st.history) history.push_back(to_json(r));
    nlohmann::json j = {{"format", "soc-sim-checkpoint-v1"},
                        {"model",
                         {{"K", st.model.num_classes()},
                          {"dim", st.model.dim()},
                          {"hidden", st.model.hidden()},
                          {"params", std::vector<double>(st.model.params().begin(), st.model.params().end())}}},
                        {"velocity", st.velocity},
                        {"ledger", st.ledger.to_json()},
                        {"bank", std::move(bank)},
                        {"rng", rng.str()},
                        {"labeled_sampler", st.labeled_sampler.to_json()},
                        {"unlabeled_sampler", st.unlabeled_sampler.to_json()},
                        {"iteration", st.iteration},
                        {"history", std::move(history)},
                        {"loss_trace", st.loss_trace}};
    if (st.snapshot) {
        const std::size_t K = st.snapshot->num_classes();
        std::vector<double> v(K * K, 0.0);
        for (std::size_t m = 0; m < K; ++m) {
            for (std::size_t n = 0; n < K; ++n) {
                if (m != n) v[m * K + n] = (*st.snapshot)(m, n);
            }
        }
        j["snapshot"] = {{"K", K}, {"version", st.snapshot->version()}, {"values", v}};
    }
    return j;
}

inline SimState state_from_json(const nlohmann::json& j) {
    try {
        if (j.at("format").get<std::string>() != "soc-sim-checkpoint-v1") throw SchemaError("unknown checkpoint format");
        const auto& m = j.at("model");
        std::mt19937_64 dummy;
        SoftmaxModel model(m.at("K").get<std::size_t>(), m.at("dim").get<std::size_t>(),
                           m.at("hidden").get<std::size_t>(), dummy);
        const auto params = m.at("params").get<std::vector<double>>();
        if (params.size() != model.params().size()) throw SchemaError("checkpoint parameter count mismatch");
        std::copy(params.begin(), params.end(), model.params().begin());

        SimState st{std::move(model),
                    j.at("velocity").get<std::vector<double>>(),
                    TransitionLedger::from_json(j.at("ledger")),
                    {},
                    {},
                    BatchSampler::from_json(j.at("labeled_sampler")),
                    BatchSampler::from_json(j.at("unlabeled_sampler")),
                    j.at("iteration").get<std::size_t>(),
                    std::nullopt,
                    {},
                    j.at("loss_trace").get<std::vector<double>>()};
        for (const auto& e : j.at("bank")) st.bank.set(e.at(0).get<std::size_t>(), e.at(1).get<ClassIndex>());
        std::istringstream rng(j.at("rng").get<std::string>());
        rng >> st.rng;
        for (const auto& r : j.at("history")) st.history.push_back(eval_record_from_json(r));
        if (j.contains("snapshot")) {
            const auto& s = j.at("snapshot");
            st.snapshot = SimilarityMatrix(s.at("K").get<std::size_t>(), s.at("values").get<std::vector<double>>(),
                                           s.at("version").get<std::uint64_t>());
        }
        return st;
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError(std::string("checkpoint: ") + e.what());
    }
}

}  // namespace soc::sim
