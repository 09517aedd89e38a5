// Tracks prediction flips for a handful of samples, clusters the classes by
// transition similarity, and selects a soft label for one prediction.

#include "soc/cluster.hpp"
#include "soc/kselect.hpp"
#include "soc/label.hpp"
#include "soc/transition.hpp"

#include <cstdio>
#include <string>
#include <utility>
#include <vector>

int main() {
    constexpr std::size_t K = 6;
    soc::TransitionLedger ledger(K, 16);
    soc::PredictionBank<std::string> bank;

    // classes 0/1 and 2/3 keep getting confused with each other
    const std::vector<std::vector<std::pair<std::string, soc::ClassIndex>>> batches = {
        {{"a", 0}, {"b", 2}, {"c", 4}, {"d", 5}},
        {{"a", 1}, {"b", 3}, {"c", 4}, {"d", 5}},
        {{"a", 0}, {"b", 2}, {"c", 4}, {"d", 5}},
        {{"a", 1}, {"b", 3}, {"c", 5}, {"d", 5}},
    };
    for (const auto& batch : batches) soc::observe_batch(ledger, bank, batch);

    const auto sim = ledger.similarity_matrix();
    const auto policy = soc::KPolicy::linear(5.0, K);
    const soc::ProbVector p{0.70, 0.20, 0.04, 0.03, 0.02, 0.01};
    const std::size_t k = policy.select_k(p.max());
    const auto clusters = soc::kmedoids(sim, k, 0);
    const auto candidates = soc::pick_candidates(clusters, p.argmax());
    const auto selected = soc::select_label(p, soc::build_indicator(candidates, K));

    std::printf("k = %zu, clusters = %s\n", k, clusters.to_json()["clusters"].dump().c_str());
    std::printf("candidates:");
    for (auto c : candidates) std::printf(" %zu", c);
    std::printf("\np_tilde:");
    for (double v : selected.probs.values()) std::printf(" %.4f", v);
    std::printf("\nentropy %.4f -> %.4f\n", soc::entropy(p), soc::entropy(selected.probs));
}
