#include "soc/losses.hpp"
#include "soc/verify.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

namespace {

using soc::ProbVector;
using Logits = std::vector<std::vector<double>>;

// Direct scalar evaluation: -sum t_c log(exp(z_c) / sum exp(z)).
double naive_ce(const std::vector<double>& t, const std::vector<double>& z) {
    double denom = 0.0;
    for (double v : z) denom += std::exp(v);
    double s = 0.0;
    for (std::size_t c = 0; c < z.size(); ++c) {
        if (t[c] > 0.0) s -= t[c] * std::log(std::exp(z[c]) / denom);
    }
    return s;
}

TEST(CrossEntropy, ConfidentCorrectPrediction) {
    const std::vector<double> z{10.0, 0.0, 0.0};
    const double expect = std::log(1.0 + 2.0 * std::exp(-10.0));
    EXPECT_NEAR(soc::cross_entropy(soc::one_hot(0, 3), z), expect, 1e-15);
    EXPECT_NEAR(expect, 9.1e-5, 1e-6);
}

TEST(CrossEntropy, SelfTargetEqualsEntropy) {
    const std::vector<double> z{0.3, -1.2, 2.0, 0.7};
    const auto p = ProbVector::from_logits(z);
    EXPECT_NEAR(soc::cross_entropy(p, z), soc::entropy(p), 1e-14);
}

TEST(CrossEntropy, UniformTargetZeroLogits) {
    EXPECT_NEAR(soc::cross_entropy(ProbVector{0.25, 0.25, 0.25, 0.25}, std::vector<double>(4, 0.0)), std::log(4.0), 1e-15);
}

TEST(CrossEntropy, StableForExtremeLogits) {
    const std::vector<double> z{800.0, -800.0, 0.0};
    const double v = soc::cross_entropy(ProbVector{0.5, 0.25, 0.25}, z);
    EXPECT_TRUE(std::isfinite(v));
    EXPECT_NEAR(v, 0.25 * 1600.0 + 0.25 * 800.0, 1e-9);
    EXPECT_EQ(soc::cross_entropy(soc::one_hot(0, 3), z), 0.0);
}

TEST(CrossEntropy, ShapeMismatchThrows) {
    EXPECT_THROW(soc::cross_entropy(soc::one_hot(0, 3), std::vector<double>(4, 0.0)), soc::ShapeMismatch);
}

TEST(CrossEntropyProperty, GradientMatchesFiniteDifferences) {
    const auto r = soc::verify::losses(200, 31);
    EXPECT_TRUE(r.ok()) << r.first_failure;
    EXPECT_LT(r.worst, 1e-5);
}

TEST(SupervisedLoss, PerfectPredictorIsNearZero) {
    const Logits z{{20.0, 0.0, 0.0}, {0.0, 20.0, 0.0}, {0.0, 0.0, 20.0}};
    const std::vector<soc::ClassIndex> y{0, 1, 2};
    EXPECT_LT(soc::supervised_loss(z, y), 1e-4);
}

TEST(SupervisedLoss, SingleExampleMatchesCrossEntropy) {
    const Logits z{{0.5, -0.25, 1.5}};
    const std::vector<soc::ClassIndex> y{1};
    EXPECT_NEAR(soc::supervised_loss(z, y), naive_ce({0, 1, 0}, z[0]), 1e-14);
}

TEST(SupervisedLoss, ConcatenationIsSizeWeightedMean) {
    std::mt19937_64 rng(2);
    std::normal_distribution<double> n01;
    Logits a(3, std::vector<double>(5)), b(7, std::vector<double>(5));
    for (auto* set : {&a, &b}) {
        for (auto& z : *set) {
            for (auto& v : z) v = n01(rng);
        }
    }
    const std::vector<soc::ClassIndex> ya{0, 1, 2}, yb{4, 3, 2, 1, 0, 0, 1};
    Logits ab = a;
    ab.insert(ab.end(), b.begin(), b.end());
    std::vector<soc::ClassIndex> yab = ya;
    yab.insert(yab.end(), yb.begin(), yb.end());
    const double expect = (3.0 * soc::supervised_loss(a, ya) + 7.0 * soc::supervised_loss(b, yb)) / 10.0;
    EXPECT_NEAR(soc::supervised_loss(ab, yab), expect, 1e-14);
}

TEST(SupervisedLoss, EmptyBatchThrows) {
    EXPECT_THROW(soc::supervised_loss(Logits{}, std::vector<soc::ClassIndex>{}), soc::EmptyBatch);
}

TEST(ConsistencyLoss, MatchingLogitsGiveTargetEntropy) {
    const ProbVector p{0.6, 0.3, 0.1, 0.0};
    const auto sel = soc::select_label(p, soc::build_indicator(soc::CandidateSet{0, 1}, 4));
    // logits = log p̃ + const, with a large negative stand-in for log 0
    std::vector<double> z{std::log(2.0 / 3.0) + 4.0, std::log(1.0 / 3.0) + 4.0, -60.0, -60.0};
    const std::vector<soc::SelectedLabel> s{sel};
    EXPECT_NEAR(soc::consistency_loss(s, Logits{z}), soc::entropy(sel.probs), 1e-12);
}

TEST(ConsistencyLoss, OneHotTargetsReduceToHardLabels) {
    const ProbVector p{0.2, 0.7, 0.1};
    const auto sel = soc::select_label(p, soc::build_indicator(soc::CandidateSet{1}, 3));
    const std::vector<double> z{0.1, 0.4, -0.3};
    const std::vector<soc::SelectedLabel> s{sel};
    EXPECT_NEAR(soc::consistency_loss(s, Logits{z}), naive_ce({0, 1, 0}, z), 1e-14);
}

TEST(ConsistencyLoss, TwoSampleBatchByHand) {
    const std::vector<soc::SelectedLabel> s{
        soc::select_label(ProbVector{0.5, 0.3, 0.2}, soc::build_indicator(soc::CandidateSet{0, 1}, 3)),
        soc::select_label(ProbVector{0.1, 0.1, 0.8}, soc::SelectionIndicator::all_ones(3)),
    };
    const Logits z{{1.0, 0.0, -1.0}, {0.2, 0.2, 0.9}};
    const double expect = (naive_ce({0.625, 0.375, 0.0}, z[0]) + naive_ce({0.1, 0.1, 0.8}, z[1])) / 2.0;
    EXPECT_NEAR(soc::consistency_loss(s, z), expect, 1e-14);
}

TEST(ConsistencyLoss, AllOnesEqualsFixMatchWithSoftTargets) {
    std::mt19937_64 rng(8);
    std::normal_distribution<double> n01;
    std::vector<soc::SelectedLabel> s;
    Logits z;
    double expect = 0.0;
    for (int i = 0; i < 20; ++i) {
        const auto p = soc::verify::dirichlet(rng, 6, 1.0);
        s.push_back(soc::select_label(p, soc::SelectionIndicator::all_ones(6)));
        std::vector<double> zi(6);
        for (auto& v : zi) v = n01(rng);
        expect += naive_ce(std::vector<double>(p.values().begin(), p.values().end()), zi) / 20.0;
        z.push_back(std::move(zi));
    }
    EXPECT_NEAR(soc::consistency_loss(s, z), expect, 1e-12);
}

TEST(FixMatchLoss, ThresholdFiltersThenAveragesOverAll) {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> n01;
    for (double tau : {0.0, 0.5, 0.9, 1.0}) {
        std::vector<ProbVector> probs;
        Logits z;
        for (int i = 0; i < 40; ++i) {
            probs.push_back(soc::verify::dirichlet(rng, 5, i % 2 ? 0.1 : 2.0));
            std::vector<double> zi(5);
            for (auto& v : zi) v = 2.0 * n01(rng);
            z.push_back(std::move(zi));
        }
        probs[0] = soc::one_hot(3, 5);
        double expect = 0.0;
        for (std::size_t i = 0; i < probs.size(); ++i) {
            if (probs[i].max() < tau) continue;
            std::vector<double> t(5, 0.0);
            t[probs[i].argmax()] = 1.0;
            expect += naive_ce(t, z[i]);
        }
        expect /= static_cast<double>(probs.size());
        EXPECT_NEAR(soc::baseline_fixmatch_loss(probs, z, tau), expect, 1e-12) << "tau=" << tau;
    }
    EXPECT_THROW(soc::baseline_fixmatch_loss({}, {}, 1.5), soc::InvalidConfidence);
}

TEST(TotalLoss, LinearInLambda) {
    const auto r0 = soc::make_report(0.7, {0.2, 0.4}, 0.0);
    EXPECT_DOUBLE_EQ(r0.total, 0.7);
    const auto r1 = soc::make_report(0.7, {0.2, 0.4}, 1.0);
    EXPECT_NEAR(r1.total, 1.0, 1e-15);
    for (double lambda : {0.25, 2.0, 3.5}) {
        EXPECT_NEAR(soc::total_loss(0.7, 0.3, lambda), 0.7 + lambda * 0.3, 1e-15);
    }
}

}  // namespace
