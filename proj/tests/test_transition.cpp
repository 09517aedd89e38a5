#include "soc/transition.hpp"
#include "soc/verify.hpp"

#include <gtest/gtest.h>

#include <random>
#include <string>
#include <utility>
#include <vector>

namespace {

using soc::BatchTransitions;
using soc::PredictionBank;
using soc::TransitionLedger;
using Batch = std::vector<std::pair<std::string, soc::ClassIndex>>;

TEST(ObserveBatch, FirstObservationOnlySeedsBank) {
    TransitionLedger ledger(6, 4);
    PredictionBank<std::string> bank;
    EXPECT_EQ(bank.get("a"), soc::kUnobserved);
    EXPECT_TRUE(soc::observe_batch(ledger, bank, Batch{{"a", 3}}).empty());
    EXPECT_EQ(bank.get("a"), 3u);
    EXPECT_EQ(ledger.window_size(), 1u);
}

TEST(ObserveBatch, ChangedPredictionRecordsTransition) {
    TransitionLedger ledger(6, 4);
    PredictionBank<std::string> bank;
    soc::observe_batch(ledger, bank, Batch{{"a", 3}});
    const auto events = soc::observe_batch(ledger, bank, Batch{{"a", 5}});
    ASSERT_EQ(events, (BatchTransitions{{3, 5}}));
    EXPECT_EQ(bank.get("a"), 5u);
    EXPECT_EQ(ledger.count(3, 5), 1);
}

TEST(ObserveBatch, UnchangedPredictionRecordsNothing) {
    TransitionLedger ledger(6, 4);
    PredictionBank<std::string> bank;
    soc::observe_batch(ledger, bank, Batch{{"a", 3}});
    EXPECT_TRUE(soc::observe_batch(ledger, bank, Batch{{"a", 3}}).empty());
    EXPECT_EQ(ledger.version(), 2u);
}

TEST(ObserveBatch, OutOfRangeClassLeavesStateUntouched) {
    TransitionLedger ledger(4, 4);
    PredictionBank<std::string> bank;
    soc::observe_batch(ledger, bank, Batch{{"a", 1}});
    const auto before = ledger;
    EXPECT_THROW(soc::observe_batch(ledger, bank, Batch{{"a", 2}, {"b", 4}}), soc::InvalidClass);
    EXPECT_EQ(ledger, before);
    EXPECT_EQ(bank.get("a"), 1u);
}

TEST(Ledger, RejectsSelfTransitionsAndBadClasses) {
    TransitionLedger ledger(4, 2);
    EXPECT_THROW(ledger.push({{1, 1}}), soc::InvalidClass);
    EXPECT_THROW(ledger.push({{0, 4}}), soc::InvalidClass);
    EXPECT_EQ(ledger.version(), 0u);
}

TEST(Similarity, AveragesOverWindowThenSymmetrizes) {
    TransitionLedger ledger(4, 8);
    // batch 1: C_01 = 3, C_10 = 1; batch 2: C_01 = 1, C_10 = 1
    ledger.push({{0, 1}, {0, 1}, {0, 1}, {1, 0}});
    ledger.push({{0, 1}, {1, 0}});
    EXPECT_DOUBLE_EQ(ledger.similarity(0, 1), 1.5);
    EXPECT_DOUBLE_EQ(ledger.similarity(1, 0), 1.5);
    EXPECT_EQ(ledger.similarity(2, 3), 0.0);
    EXPECT_EQ(ledger.similarity(2, 2), soc::kMaxSimilarity);
}

TEST(Similarity, SingleEventGivesHalf) {
    TransitionLedger ledger(6, 8);
    ledger.push({{3, 5}});
    const auto sim = ledger.similarity_matrix();
    for (soc::ClassIndex m = 0; m < 6; ++m) {
        for (soc::ClassIndex n = 0; n < 6; ++n) {
            if (m == n) continue;
            const bool edge = (m == 3 && n == 5) || (m == 5 && n == 3);
            EXPECT_EQ(sim(m, n), edge ? 0.5 : 0.0) << m << "," << n;
        }
    }
    EXPECT_EQ(sim.version(), 1u);
}

TEST(Similarity, EmptyLedgerIsZero) {
    const TransitionLedger ledger(5, 3);
    EXPECT_EQ(ledger.similarity_matrix(), soc::SimilarityMatrix::zeros(5));
}

TEST(Ledger, EvictsOldestBatch) {
    TransitionLedger ledger(3, 2);
    ledger.push({{0, 1}});
    ledger.push({{1, 2}});
    ledger.push({{2, 0}});
    EXPECT_EQ(ledger.window_size(), 2u);
    EXPECT_EQ(ledger.count(0, 1), 0);
    EXPECT_EQ(ledger.count(1, 2), 1);
    EXPECT_EQ(ledger.count(2, 0), 1);
    EXPECT_DOUBLE_EQ(ledger.similarity(1, 2), 0.25);
}

TEST(LedgerProperty, IncrementalSumsMatchRecount) {
    const auto r = soc::verify::ctt(100, 3);
    EXPECT_TRUE(r.ok()) << r.first_failure;
}

// Drives the tracker through random prediction streams and recounts the
// transitions from the raw per-batch predictions.
TEST(LedgerProperty, ObserveBatchMatchesPredictionRecount) {
    std::mt19937_64 rng(21);
    for (int t = 0; t < 30; ++t) {
        const std::size_t K = soc::verify::uniform_index(rng, 2, 10);
        const std::size_t nb = soc::verify::uniform_index(rng, 1, 6);
        TransitionLedger ledger(K, nb);
        PredictionBank<int> bank;
        std::vector<std::vector<std::pair<int, soc::ClassIndex>>> history;
        for (int b = 0; b < 20; ++b) {
            std::vector<std::pair<int, soc::ClassIndex>> batch;
            for (int i = 0; i < 8; ++i) {
                batch.emplace_back(static_cast<int>(soc::verify::uniform_index(rng, 0, 11)),
                                   soc::verify::uniform_index(rng, 0, K - 1));
            }
            history.push_back(batch);
            soc::observe_batch(ledger, bank, batch);
        }
        std::map<int, soc::ClassIndex> last;
        std::vector<std::vector<std::int64_t>> per_batch;
        for (const auto& batch : history) {
            std::vector<std::int64_t> counts(K * K, 0);
            for (const auto& [id, c] : batch) {
                auto it = last.find(id);
                if (it != last.end() && it->second != c) ++counts[it->second * K + c];
                last[id] = c;
            }
            per_batch.push_back(std::move(counts));
        }
        for (soc::ClassIndex m = 0; m < K; ++m) {
            for (soc::ClassIndex n = 0; n < K; ++n) {
                std::int64_t expect = 0;
                for (std::size_t b = per_batch.size() - std::min(nb, per_batch.size()); b < per_batch.size(); ++b) {
                    expect += per_batch[b][m * K + n];
                }
                ASSERT_EQ(ledger.count(m, n), expect);
            }
        }
    }
}

TEST(Ledger, JsonRoundTrip) {
    TransitionLedger ledger(5, 3);
    for (int b = 0; b < 5; ++b) ledger.push({{static_cast<soc::ClassIndex>(b % 5), static_cast<soc::ClassIndex>((b + 1) % 5)}});
    const auto restored = TransitionLedger::from_json(nlohmann::json::parse(ledger.to_json().dump()));
    EXPECT_EQ(restored, ledger);
    EXPECT_EQ(restored.similarity_matrix(), ledger.similarity_matrix());
}

TEST(Ledger, JsonRejectsForeignSnapshots) {
    auto j = TransitionLedger(3, 2).to_json();
    j["magic"] = "something-else";
    EXPECT_THROW(TransitionLedger::from_json(j), soc::SchemaError);
    EXPECT_THROW(TransitionLedger::from_json(nlohmann::json::object()), soc::SchemaError);
}

}  // namespace
