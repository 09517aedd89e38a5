#pragma once

// Similarity-driven k-medoids over the class space (Voronoi-iteration
// variant: assign to most similar medoid, then move each medoid to the
// member with the largest within-cluster similarity sum).

#include "soc/errors.hpp"
#include "soc/label.hpp"
#include "soc/similarity.hpp"

#include <json.hpp>

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <map>
#include <numeric>
#include <random>
#include <utility>
#include <vector>

namespace soc {

inline constexpr std::size_t kDefaultKMedoidsMaxIter = 100;

struct ClusterSet {
    /// clusters[i] is sorted ascending and contains medoids[i].
    std::vector<std::vector<ClassIndex>> clusters;
    /// Sorted ascending.
    std::vector<ClassIndex> medoids;
    std::size_t k = 0;
    std::uint64_t ledger_version = 0;
    bool converged = false;
    std::size_t iterations = 0;
    /// cluster index of each class
    std::vector<std::size_t> owner;

    std::size_t num_classes() const noexcept { return owner.size(); }

    nlohmann::json to_json() const {
        return {{"k", k}, {"medoids", medoids}, {"clusters", clusters}, {"ledger_version", ledger_version}};
    }

    friend bool operator==(const ClusterSet&, const ClusterSet&) = default;
};

namespace detail {

// Medoids must be sorted so "lowest medoid index" and "lowest class index"
// agree on ties.
inline std::vector<std::size_t> assign_to_medoids(const SimilarityMatrix& sim, const std::vector<ClassIndex>& medoids) {
    const std::size_t K = sim.num_classes();
    std::vector<std::size_t> owner(K, 0);
    for (ClassIndex m = 0; m < K; ++m) {
        std::size_t best = 0;
        for (std::size_t i = 1; i < medoids.size(); ++i) {
            if (sim(m, medoids[i]) > sim(m, medoids[best])) best = i;
        }
        owner[m] = best;
    }
    return owner;
}

inline std::vector<std::vector<ClassIndex>> group_by_owner(const std::vector<std::size_t>& owner, std::size_t k) {
    std::vector<std::vector<ClassIndex>> clusters(k);
    for (ClassIndex m = 0; m < owner.size(); ++m) clusters[owner[m]].push_back(m);
    return clusters;
}

inline double within_sum(const SimilarityMatrix& sim, const std::vector<ClassIndex>& members, ClassIndex candidate) {
    double s = 0.0;
    for (ClassIndex other : members) {
        if (other != candidate) s += sim(candidate, other);
    }
    return s;
}

inline ClassIndex best_medoid(const SimilarityMatrix& sim, const std::vector<ClassIndex>& members) {
    ClassIndex best = members.front();
    double best_sum = within_sum(sim, members, best);
    for (std::size_t j = 1; j < members.size(); ++j) {
        const double s = within_sum(sim, members, members[j]);
        if (s > best_sum) {
            best = members[j];
            best_sum = s;
        }
    }
    return best;
}

inline std::vector<ClassIndex> sample_distinct(std::size_t num_classes, std::size_t k, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::vector<ClassIndex> pool(num_classes);
    std::iota(pool.begin(), pool.end(), ClassIndex{0});
    for (std::size_t i = 0; i < k; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, num_classes - 1);
        std::swap(pool[i], pool[pick(rng)]);
    }
    pool.resize(k);
    std::sort(pool.begin(), pool.end());
    return pool;
}

}  // namespace detail

inline ClusterSet make_cluster_set(const SimilarityMatrix& sim, std::vector<ClassIndex> medoids) {
    std::sort(medoids.begin(), medoids.end());
    ClusterSet out;
    out.k = medoids.size();
    out.owner = detail::assign_to_medoids(sim, medoids);
    out.clusters = detail::group_by_owner(out.owner, out.k);
    out.medoids = std::move(medoids);
    out.ledger_version = sim.version();
    return out;
}

/// Deterministic in (sim, k, seed, max_iter). When max_iter is exhausted the
/// latest medoids and their assignment are returned with converged = false.
inline ClusterSet kmedoids(const SimilarityMatrix& sim, std::size_t k, std::uint64_t seed,
                           std::size_t max_iter = kDefaultKMedoidsMaxIter) {
    const std::size_t K = sim.num_classes();
    if (k < 2 || k > K) {
        throw InvalidK("k=" + std::to_string(k) + " outside [2, " + std::to_string(K) + "]");
    }
    if (max_iter == 0) throw InvalidK("max_iter must be >= 1");

    std::vector<ClassIndex> medoids = detail::sample_distinct(K, k, seed);
    for (std::size_t t = 1; t <= max_iter; ++t) {
        const auto owner = detail::assign_to_medoids(sim, medoids);
        const auto clusters = detail::group_by_owner(owner, k);
        std::vector<ClassIndex> next(k);
        for (std::size_t i = 0; i < k; ++i) next[i] = detail::best_medoid(sim, clusters[i]);
        std::sort(next.begin(), next.end());
        if (next == medoids) {
            ClusterSet out;
            out.k = k;
            out.medoids = std::move(medoids);
            out.clusters = clusters;
            out.owner = owner;
            out.ledger_version = sim.version();
            out.converged = true;
            out.iterations = t;
            return out;
        }
        medoids = std::move(next);
    }
    ClusterSet out = make_cluster_set(sim, std::move(medoids));
    out.iterations = max_iter;
    return out;
}

/// The cluster that contains the predicted class.
inline CandidateSet pick_candidates(const ClusterSet& clusters, ClassIndex p_hat) {
    if (p_hat >= clusters.num_classes()) throw InvalidClass("predicted class out of range");
    return CandidateSet(clusters.clusters[clusters.owner[p_hat]]);
}

/// Sum over non-medoid members of similarity to their own medoid.
inline double total_within_similarity(const SimilarityMatrix& sim, const ClusterSet& cs) {
    double total = 0.0;
    for (std::size_t i = 0; i < cs.k; ++i) {
        for (ClassIndex m : cs.clusters[i]) {
            if (m != cs.medoids[i]) total += sim(m, cs.medoids[i]);
        }
    }
    return total;
}

/// Mixes a base seed with (k, ledger version) so every clustering of one
/// snapshot is replayable without consuming a shared RNG stream.
inline std::uint64_t clustering_seed(std::uint64_t base, std::size_t k, std::uint64_t version) noexcept {
    std::uint64_t x = base ^ (0x9E3779B97F4A7C15ULL * (static_cast<std::uint64_t>(k) + 1)) ^ (version << 17);
    x ^= x >> 30;
    x *= 0xBF58476D1CE4E5B9ULL;
    x ^= x >> 27;
    x *= 0x94D049BB133111EBULL;
    x ^= x >> 31;
    return x;
}

/// Memoizes clusterings per k for one similarity snapshot. Clustering only
/// depends on (similarity, k), so a new ledger version flushes the cache.
class ClusterCache {
public:
    ClusterCache(std::uint64_t base_seed, std::size_t max_iter = kDefaultKMedoidsMaxIter)
        : base_seed_(base_seed), max_iter_(max_iter) {}

    const ClusterSet& get(const SimilarityMatrix& sim, std::size_t k) {
        if (!cache_.empty() && sim.version() != version_) cache_.clear();
        version_ = sim.version();
        auto it = cache_.find(k);
        if (it == cache_.end()) {
            it = cache_.emplace(k, kmedoids(sim, k, clustering_seed(base_seed_, k, version_), max_iter_)).first;
        }
        return it->second;
    }

    std::size_t size() const noexcept { return cache_.size(); }
    void clear() noexcept { cache_.clear(); }

private:
    std::uint64_t base_seed_;
    std::size_t max_iter_;
    std::uint64_t version_ = 0;
    std::map<std::size_t, ClusterSet> cache_;
};

}  // namespace soc
