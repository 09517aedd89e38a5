#pragma once

// Randomized property suites backing `soc verify`. Each suite draws its
// instances from a seeded generator and checks the implementation against
// an independent oracle (recount, brute force, finite differences) or a
// proven inequality.

#include "soc/cluster.hpp"
#include "soc/kselect.hpp"
#include "soc/label.hpp"
#include "soc/losses.hpp"
#include "soc/transition.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace soc::verify {

/// Slack for entropy comparisons.
inline constexpr double kEntropySlack = 1e-12;
/// Largest candidate set for which the entropy-reduction bound is proven.
inline constexpr std::size_t kProvenMaxCandidates = 11;

struct SuiteResult {
    std::string name;
    std::size_t trials = 0;
    std::size_t passed = 0;
    /// worst observed value of the suite's checked quantity
    double worst = 0.0;
    std::string first_failure;

    bool ok() const noexcept { return passed == trials; }

    void record(bool pass, const std::string& what = {}) {
        ++trials;
        if (pass) {
            ++passed;
        } else if (first_failure.empty()) {
            first_failure = what;
        }
    }
};

using Rng = std::mt19937_64;

inline std::size_t uniform_index(Rng& rng, std::size_t lo, std::size_t hi) {
    return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

/// Dirichlet(conc, ..., conc) via normalized Gamma draws.
inline ProbVector dirichlet(Rng& rng, std::size_t K, double concentration) {
    std::gamma_distribution<double> gamma(concentration, 1.0);
    std::vector<double> v(K);
    double sum = 0.0;
    do {
        sum = 0.0;
        for (auto& e : v) {
            e = gamma(rng);
            sum += e;
        }
    } while (!(sum > 0.0));
    for (auto& e : v) e /= sum;
    return ProbVector(std::move(v));
}

/// Concentration drawn log-uniformly from [0.05, 5]: covers peaked and flat
/// distributions.
inline double random_concentration(Rng& rng) {
    return std::exp(std::uniform_real_distribution<double>(std::log(0.05), std::log(5.0))(rng));
}

/// `size` distinct classes of [0, K) that include `must`.
inline CandidateSet random_candidates(Rng& rng, std::size_t K, ClassIndex must, std::size_t size) {
    std::vector<ClassIndex> pool;
    pool.reserve(K - 1);
    for (ClassIndex c = 0; c < K; ++c) {
        if (c != must) pool.push_back(c);
    }
    std::shuffle(pool.begin(), pool.end(), rng);
    pool.resize(size - 1);
    pool.push_back(must);
    return CandidateSet(std::move(pool));
}

inline bool selected_label_valid(const SelectedLabel& s, const ProbVector& src) {
    double sum = 0.0;
    for (ClassIndex c = 0; c < s.probs.size(); ++c) {
        if (s.probs[c] < 0.0) return false;
        if (s.probs[c] > 0.0 && !s.indicator.selected(c)) return false;
        sum += s.probs[c];
    }
    if (std::abs(sum - 1.0) > kProbSumTolerance) return false;
    return !s.indicator.selected(src.argmax()) || s.probs.argmax() == src.argmax();
}

/// Entropy never grows under selection when the argmax is kept and
/// |C| <= 11. Also checks normalization, support, and argmax preservation.
inline SuiteResult lemma1(std::size_t trials, std::uint64_t seed) {
    SuiteResult r{"lemma1"};
    Rng rng(seed);
    r.worst = -std::numeric_limits<double>::infinity();
    for (std::size_t t = 0; t < trials; ++t) {
        const std::size_t K = uniform_index(rng, 3, 200);
        const auto p = dirichlet(rng, K, random_concentration(rng));
        const std::size_t size = uniform_index(rng, 1, std::min(kProvenMaxCandidates, K - 1));
        const auto C = random_candidates(rng, K, p.argmax(), size);
        const auto sel = select_label(p, build_indicator(C, K));
        const double gap = entropy(sel.probs) - entropy(p);
        r.worst = std::max(r.worst, gap);
        r.record(gap <= kEntropySlack && selected_label_valid(sel, p),
                 "K=" + std::to_string(K) + " |C|=" + std::to_string(size) + " gap=" + std::to_string(gap));
    }
    return r;
}

/// Selected entries all equal, arbitrary |C|; unselected entries never
/// exceed the selected value so the argmax stays selected.
inline SuiteResult uniform_selected(std::size_t trials, std::uint64_t seed) {
    SuiteResult r{"uniform"};
    Rng rng(seed);
    r.worst = -std::numeric_limits<double>::infinity();
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (std::size_t t = 0; t < trials; ++t) {
        const std::size_t K = uniform_index(rng, 3, 200);
        const std::size_t size = uniform_index(rng, 1, K - 1);
        std::vector<ClassIndex> order(K);
        std::iota(order.begin(), order.end(), ClassIndex{0});
        std::shuffle(order.begin(), order.end(), rng);
        // sparse or dense unselected tails both occur
        const double keep = unit(rng);
        std::vector<double> w(K, 0.0);
        for (std::size_t i = 0; i < K; ++i) {
            if (i < size) {
                w[order[i]] = 1.0;
            } else if (unit(rng) < keep) {
                w[order[i]] = unit(rng);
            }
        }
        const double z = std::accumulate(w.begin(), w.end(), 0.0);
        for (auto& e : w) e /= z;
        const ProbVector p(std::move(w));
        const CandidateSet C(std::vector<ClassIndex>(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(size)));
        const auto sel = select_label(p, build_indicator(C, K));
        const double gap = entropy(sel.probs) - entropy(p);
        r.worst = std::max(r.worst, gap);
        r.record(gap <= kEntropySlack, "K=" + std::to_string(K) + " |C|=" + std::to_string(size));
    }
    return r;
}

/// Iterated selection along strictly nested candidate sets (length >= 3,
/// each containing the running argmax, sizes <= 11) never raises entropy.
inline SuiteResult theorem1(std::size_t trials, std::uint64_t seed) {
    SuiteResult r{"theorem1"};
    Rng rng(seed);
    r.worst = -std::numeric_limits<double>::infinity();
    for (std::size_t t = 0; t < trials; ++t) {
        const std::size_t K = uniform_index(rng, 4, 200);
        const auto p = dirichlet(rng, K, random_concentration(rng));
        const ClassIndex top = p.argmax();
        const std::size_t first = uniform_index(rng, 3, std::min(kProvenMaxCandidates, K - 1));
        const std::size_t length = uniform_index(rng, 3, first);
        // strictly decreasing sizes: first, then length-1 distinct smaller sizes
        std::vector<std::size_t> smaller(first - 1);
        std::iota(smaller.begin(), smaller.end(), std::size_t{1});
        std::shuffle(smaller.begin(), smaller.end(), rng);
        smaller.resize(length - 1);
        std::sort(smaller.rbegin(), smaller.rend());

        auto chain_set = random_candidates(rng, K, top, first);
        auto current = select_label(p, build_indicator(chain_set, K));
        double prev = entropy(current.probs);
        double worst = prev - entropy(p);
        bool ok = selected_label_valid(current, p);
        for (std::size_t size : smaller) {
            std::vector<ClassIndex> members(chain_set.begin(), chain_set.end());
            members.erase(std::find(members.begin(), members.end(), top));
            std::shuffle(members.begin(), members.end(), rng);
            members.resize(size - 1);
            members.push_back(top);
            chain_set = CandidateSet(std::move(members));
            const auto next = select_label(current.probs, build_indicator(chain_set, K));
            const double h = entropy(next.probs);
            worst = std::max(worst, h - prev);
            ok = ok && next.probs.argmax() == top;
            prev = h;
            current = next;
        }
        r.worst = std::max(r.worst, worst);
        r.record(ok && worst <= kEntropySlack, "K=" + std::to_string(K) + " chain=" + std::to_string(length));
    }
    return r;
}

/// Confidence grid x policy family x K: range {2..K}, monotone in
/// confidence, plus the pinned Linear(alpha=5, K=200) endpoints.
inline SuiteResult krange(std::size_t grid_points = 1000) {
    SuiteResult r{"krange"};
    for (std::size_t K : {std::size_t{10}, std::size_t{200}}) {
        const double Kd = static_cast<double>(K);
        std::vector<KPolicy> policies;
        for (double alpha : {KPolicy::min_alpha(K), 2.0, 5.0, 10.0}) policies.push_back(KPolicy::linear(alpha, K));
        for (double beta : {std::log(1.2), std::log(1.4), std::log(1.8), KPolicy::max_beta(K)}) {
            policies.push_back(KPolicy::exponential(beta, K));
        }
        for (const auto& policy : policies) {
            std::size_t prev = 0;
            bool ok = true;
            for (std::size_t i = 0; i < grid_points; ++i) {
                const double conf = 1.0 / Kd + (1.0 - 1.0 / Kd) * static_cast<double>(i) /
                                                   static_cast<double>(grid_points - 1);
                const std::size_t k = policy.select_k(std::min(conf, 1.0));
                ok = ok && k >= 2 && k <= K && k >= prev;
                prev = k;
            }
            r.record(ok, "K=" + std::to_string(K) + " policy=" + policy.to_json().dump());
        }
    }
    const auto lin = KPolicy::linear(5.0, 200);
    r.record(lin.select_k(1.0) == 42, "Linear(5, K=200) at confidence 1.0 != 42");
    r.record(lin.select_k(1.0 / 200.0) == 2, "Linear(5, K=200) at confidence 1/200 != 2");
    return r;
}

/// Random symmetric similarity with entries in [0, scale).
inline SimilarityMatrix random_similarity(Rng& rng, std::size_t K, double scale = 1.0) {
    std::uniform_real_distribution<double> u(0.0, scale);
    std::vector<double> v(K * K, 0.0);
    for (std::size_t m = 0; m < K; ++m) {
        for (std::size_t n = m + 1; n < K; ++n) v[m * K + n] = v[n * K + m] = u(rng);
    }
    return SimilarityMatrix(K, std::move(v));
}

/// Two planted blocks of size K/2: intra-block similarity in [5, 6),
/// cross-block zero (classes that never flip into each other). Noisy
/// cross-block entries make balanced mixed splits fixed points of the
/// Voronoi iteration.
inline SimilarityMatrix planted_blocks(Rng& rng, std::size_t K) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> v(K * K, 0.0);
    for (std::size_t m = 0; m < K; ++m) {
        for (std::size_t n = m + 1; n < K; ++n) {
            const bool same = (m < K / 2) == (n < K / 2);
            const double noise = u(rng);
            v[m * K + n] = v[n * K + m] = same ? 5.0 + noise : 0.0;
        }
    }
    return SimilarityMatrix(K, std::move(v));
}

inline bool is_partition(const ClusterSet& cs, std::size_t K) {
    std::vector<int> seen(K, 0);
    if (cs.clusters.size() != cs.k || cs.medoids.size() != cs.k) return false;
    for (std::size_t i = 0; i < cs.k; ++i) {
        if (cs.clusters[i].empty()) return false;
        if (std::find(cs.clusters[i].begin(), cs.clusters[i].end(), cs.medoids[i]) == cs.clusters[i].end()) {
            return false;
        }
        for (ClassIndex m : cs.clusters[i]) {
            if (m >= K || seen[m]++) return false;
        }
    }
    return std::all_of(seen.begin(), seen.end(), [](int s) { return s == 1; });
}

/// Brute-force assignment oracle: each class goes to the medoid with the
/// highest similarity, ties to the lowest medoid class index.
inline std::vector<std::vector<ClassIndex>> oracle_assignment(const SimilarityMatrix& sim,
                                                               std::vector<ClassIndex> medoids) {
    std::sort(medoids.begin(), medoids.end());
    std::vector<std::vector<ClassIndex>> out(medoids.size());
    for (ClassIndex m = 0; m < sim.num_classes(); ++m) {
        std::size_t best = 0;
        for (std::size_t i = 0; i < medoids.size(); ++i) {
            if (m == medoids[i]) {
                best = i;
                break;
            }
            if (sim(m, medoids[i]) > sim(m, medoids[best])) best = i;
        }
        out[best].push_back(m);
    }
    return out;
}

/// Exhaustive search over all medoid pairs for the pair maximizing total
/// similarity of non-medoids to their assigned medoid.
inline std::pair<ClassIndex, ClassIndex> brute_force_best_pair(const SimilarityMatrix& sim) {
    const std::size_t K = sim.num_classes();
    double best = -std::numeric_limits<double>::infinity();
    std::pair<ClassIndex, ClassIndex> arg{0, 1};
    for (ClassIndex a = 0; a < K; ++a) {
        for (ClassIndex b = a + 1; b < K; ++b) {
            double total = 0.0;
            for (ClassIndex m = 0; m < K; ++m) {
                if (m != a && m != b) total += std::max(sim(m, a), sim(m, b));
            }
            if (total > best) {
                best = total;
                arg = {a, b};
            }
        }
    }
    return arg;
}

/// (a) partition + assignment fixed point on random matrices, (b) planted
/// two-block recovery against the brute-force optimum for 20 seeds,
/// (c) determinism.
inline SuiteResult cluster(std::size_t trials, std::uint64_t seed) {
    SuiteResult r{"cluster"};
    Rng rng(seed);
    for (std::size_t t = 0; t < trials; ++t) {
        const std::size_t K = uniform_index(rng, 2, 32);
        const std::size_t k = uniform_index(rng, 2, K);
        // coarse integer-valued similarities exercise the tie rules
        const auto sim = (t % 2 == 0) ? random_similarity(rng, K) : [&] {
            std::vector<double> v(K * K, 0.0);
            for (std::size_t m = 0; m < K; ++m) {
                for (std::size_t n = m + 1; n < K; ++n) v[m * K + n] = v[n * K + m] = double(uniform_index(rng, 0, 2));
            }
            return SimilarityMatrix(K, std::move(v));
        }();
        const auto cs = kmedoids(sim, k, rng());
        const bool fixed_point = oracle_assignment(sim, cs.medoids) == cs.clusters;
        r.record(is_partition(cs, K) && fixed_point, "random K=" + std::to_string(K) + " k=" + std::to_string(k));
    }

    const std::size_t K = 8;
    Rng planted_rng(seed ^ 0xB10C);
    const auto sim = planted_blocks(planted_rng, K);
    const auto [a, b] = brute_force_best_pair(sim);
    const std::vector<ClassIndex> left{0, 1, 2, 3};
    const std::vector<ClassIndex> right{4, 5, 6, 7};
    for (std::uint64_t s = 0; s < 20; ++s) {
        const auto cs = kmedoids(sim, 2, seed + s);
        const bool blocks = cs.clusters.size() == 2 && cs.clusters[0] == left && cs.clusters[1] == right;
        const bool optimal = cs.medoids == std::vector<ClassIndex>{a, b};
        r.record(blocks && optimal, "planted blocks not recovered for seed " + std::to_string(seed + s));
    }

    Rng det_rng(seed ^ 0xDE7);
    for (int t = 0; t < 10; ++t) {
        const std::size_t Kd = uniform_index(det_rng, 3, 32);
        const auto s = random_similarity(det_rng, Kd);
        const std::size_t k = uniform_index(det_rng, 2, Kd);
        const auto cs_seed = det_rng();
        r.record(kmedoids(s, k, cs_seed) == kmedoids(s, k, cs_seed), "kmedoids not deterministic");
    }
    return r;
}

/// Incremental window sums against a from-scratch recount of the last N_b
/// batches of the raw event log, after every push.
inline SuiteResult ctt(std::size_t trials, std::uint64_t seed) {
    SuiteResult r{"ctt"};
    Rng rng(seed);
    for (std::size_t t = 0; t < trials; ++t) {
        const std::size_t K = uniform_index(rng, 2, 24);
        const std::size_t nb = (t % 2 == 0) ? 4 : 16;
        const std::size_t n_batches = uniform_index(rng, 1, 50);
        TransitionLedger ledger(K, nb);
        std::vector<BatchTransitions> log;
        bool ok = true;
        for (std::size_t b = 0; b < n_batches; ++b) {
            BatchTransitions batch;
            const std::size_t n_events = uniform_index(rng, 0, 64);
            for (std::size_t e = 0; e < n_events; ++e) {
                const ClassIndex from = uniform_index(rng, 0, K - 1);
                ClassIndex to = uniform_index(rng, 0, K - 2);
                if (to >= from) ++to;
                batch.push_back({from, to});
            }
            const auto before = ledger.version();
            log.push_back(batch);
            ledger.push(std::move(batch));
            ok = ok && ledger.version() == before + 1;

            std::vector<std::int64_t> recount(K * K, 0);
            const std::size_t start = log.size() > nb ? log.size() - nb : 0;
            for (std::size_t i = start; i < log.size(); ++i) {
                for (const auto& ev : log[i]) ++recount[ev.from * K + ev.to];
            }
            const double len = static_cast<double>(log.size() - start);
            for (ClassIndex m = 0; m < K && ok; ++m) {
                ok = ok && ledger.count(m, m) == 0;
                for (ClassIndex n = 0; n < K && ok; ++n) {
                    ok = ok && ledger.count(m, n) == recount[m * K + n];
                    if (m != n) {
                        const double expect = (double(recount[m * K + n]) / len + double(recount[n * K + m]) / len) / 2;
                        ok = ok && ledger.similarity(m, n) == expect && ledger.similarity(m, n) == ledger.similarity(n, m);
                    }
                }
            }
            ok = ok && ledger.window_size() == std::min(log.size(), nb);
        }
        r.record(ok, "trial " + std::to_string(t) + " K=" + std::to_string(K) + " N_b=" + std::to_string(nb));
    }
    return r;
}

/// Relative error ||a - n|| / max(||a||, ||n||) between the analytic
/// cross-entropy gradient and central differences.
inline double gradient_relative_error(std::span<const double> target, std::span<const double> logits,
                                      double step = 1e-5) {
    const auto analytic = cross_entropy_grad(target, logits);
    std::vector<double> z(logits.begin(), logits.end());
    double diff2 = 0.0, a2 = 0.0, n2 = 0.0;
    for (std::size_t c = 0; c < z.size(); ++c) {
        const double orig = z[c];
        z[c] = orig + step;
        const double up = cross_entropy(target, z);
        z[c] = orig - step;
        const double down = cross_entropy(target, z);
        z[c] = orig;
        const double numeric = (up - down) / (2.0 * step);
        diff2 += (analytic[c] - numeric) * (analytic[c] - numeric);
        a2 += analytic[c] * analytic[c];
        n2 += numeric * numeric;
    }
    const double denom = std::max({std::sqrt(a2), std::sqrt(n2), 1e-12});
    return std::sqrt(diff2) / denom;
}

/// Gradient check, non-negativity, and batch-order invariance.
inline SuiteResult losses(std::size_t trials, std::uint64_t seed) {
    SuiteResult r{"losses"};
    Rng rng(seed);
    std::normal_distribution<double> n01(0.0, 1.0);
    for (std::size_t t = 0; t < trials; ++t) {
        const std::size_t K = uniform_index(rng, 2, 50);
        std::vector<double> logits(K);
        for (auto& z : logits) z = 2.0 * n01(rng);
        const auto target = dirichlet(rng, K, random_concentration(rng));
        const double err = gradient_relative_error(target.values(), logits);
        r.worst = std::max(r.worst, err);
        r.record(err < 1e-5 && cross_entropy(target, logits) >= 0.0, "gradient relative error " + std::to_string(err));
    }

    for (int t = 0; t < 20; ++t) {
        const std::size_t K = uniform_index(rng, 3, 20);
        const std::size_t n = uniform_index(rng, 2, 40);
        std::vector<SelectedLabel> labels;
        std::vector<std::vector<double>> strong;
        for (std::size_t i = 0; i < n; ++i) {
            const auto p = dirichlet(rng, K, 1.0);
            const auto C = random_candidates(rng, K, p.argmax(), uniform_index(rng, 1, K));
            labels.push_back(select_label(p, build_indicator(C, K)));
            std::vector<double> z(K);
            for (auto& v : z) v = 3.0 * n01(rng);
            strong.push_back(std::move(z));
        }
        const double base = consistency_loss(labels, strong);
        std::vector<std::size_t> perm(n);
        std::iota(perm.begin(), perm.end(), std::size_t{0});
        std::shuffle(perm.begin(), perm.end(), rng);
        std::vector<SelectedLabel> labels2;
        std::vector<std::vector<double>> strong2;
        for (std::size_t i : perm) {
            labels2.push_back(labels[i]);
            strong2.push_back(strong[i]);
        }
        const double shuffled = consistency_loss(labels2, strong2);
        r.record(base >= 0.0 && std::abs(base - shuffled) <= 1e-12, "consistency loss depends on batch order");
    }
    return r;
}

inline const std::vector<std::string>& suite_names() {
    static const std::vector<std::string> names{"lemma1", "uniform", "theorem1", "krange", "cluster", "ctt", "losses"};
    return names;
}

/// Runs one named suite. `trials` = 0 picks the suite's default size.
inline std::optional<SuiteResult> run_suite(const std::string& name, std::size_t trials, std::uint64_t seed) {
    auto n = [&](std::size_t def) { return trials == 0 ? def : trials; };
    if (name == "lemma1") return lemma1(n(10000), seed);
    if (name == "uniform") return uniform_selected(n(1000), seed);
    if (name == "theorem1") return theorem1(n(1000), seed);
    if (name == "krange") return krange(n(1000));
    if (name == "cluster") return cluster(n(500), seed);
    if (name == "ctt") return ctt(n(100), seed);
    if (name == "losses") return losses(n(200), seed);
    return std::nullopt;
}

}  // namespace soc::verify
