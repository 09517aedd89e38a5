// Acceptance run: one PASS/FAIL line per criterion, tolerances pinned here.
// Exit status is nonzero when any criterion fails.

#include "soc/app/commands.hpp"
#include "soc/sim/trainer.hpp"
#include "soc/verify.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace {

constexpr std::uint64_t kSeed = 20240;
constexpr double kLemmaRuntimeLimitS = 5.0;
constexpr double kGradientTolerance = 1e-5;
constexpr double kDegenerationTolerance = 1e-9;
constexpr std::size_t kDegenerationIters = 500;
constexpr std::size_t kDirectionalSeeds = 5;
constexpr double kDirectionalMarginPoints = 2.0;
constexpr double kDirectionalRuntimeLimitS = 600.0;

int failures = 0;

void report(const std::string& name, bool pass, const std::string& detail) {
    std::printf("%s  %-28s %s\n", pass ? "PASS" : "FAIL", name.c_str(), detail.c_str());
    std::fflush(stdout);
    if (!pass) ++failures;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* f, auto... args) {
    char buf[256];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

std::string counts(const soc::verify::SuiteResult& r) {
    std::string s = fmt("%zu/%zu", r.passed, r.trials);
    if (!r.ok()) s += " first failure: " + r.first_failure;
    return s;
}

void suite_criteria() {
    using namespace soc::verify;
    const auto t0 = std::chrono::steady_clock::now();
    const auto lemma = lemma1(10000, kSeed);
    const double lemma_s = seconds_since(t0);
    report("entropy-bound", lemma.ok() && lemma.trials == 10000 && lemma_s < kLemmaRuntimeLimitS,
           counts(lemma) + fmt(", worst gap %.3g, %.2fs", lemma.worst, lemma_s));

    const auto uni = uniform_selected(1000, kSeed);
    report("entropy-bound-uniform", uni.ok() && uni.trials == 1000, counts(uni));

    const auto chain = theorem1(1000, kSeed);
    report("entropy-chain", chain.ok() && chain.trials == 1000, counts(chain));

    const auto kr = krange(1000);
    report("k-range", kr.ok(), counts(kr) + " policy/K combinations + pinned values");

    const auto ct = ctt(100, kSeed);
    report("transition-oracle", ct.ok() && ct.trials == 100, counts(ct));

    const auto cl = cluster(500, kSeed);
    report("clustering", cl.ok() && cl.trials == 530, counts(cl) + " (500 random, 20 planted, 10 determinism)");

    const auto ls = losses(200, kSeed);
    // the suite also runs 20 permutation checks after the gradient trials
    report("gradient-check", ls.ok() && ls.worst < kGradientTolerance,
           counts(ls) + fmt(", max relative error %.3g", ls.worst));
}

void degeneration() {
    using namespace soc::sim;
    SimConfig fixed_cfg;
    fixed_cfg.iters = kDegenerationIters;
    fixed_cfg.k_policy = soc::FixedK{fixed_cfg.dataset.num_classes()};
    SimConfig hard_cfg;
    hard_cfg.iters = kDegenerationIters;
    hard_cfg.mode = Mode::fixmatch;
    hard_cfg.tau = 0.0;
    const auto ds = generate_dataset(fixed_cfg.dataset);
    const auto a = run(fixed_cfg, ds);
    const auto b = run(hard_cfg, ds);
    double worst = a.loss_trace.size() == b.loss_trace.size() ? 0.0 : INFINITY;
    for (std::size_t i = 0; i < std::min(a.loss_trace.size(), b.loss_trace.size()); ++i) {
        worst = std::max(worst, std::abs(a.loss_trace[i] - b.loss_trace[i]));
    }
    report("degeneration", worst <= kDegenerationTolerance,
           fmt("%zu iterations, max per-iteration loss difference %.3g", a.loss_trace.size(), worst));
}

void directional_and_entropy() {
    using namespace soc::sim;
    const auto t0 = std::chrono::steady_clock::now();
    double soc_sum = 0.0, fm_sum = 0.0, soft_sum = 0.0;
    std::optional<RunResult> frozen;
    SimConfig frozen_cfg;
    std::optional<Dataset> frozen_ds;
    for (std::uint64_t seed = 0; seed < kDirectionalSeeds; ++seed) {
        SimConfig base;
        base.seed = seed;
        base.dataset.seed = seed;
        const auto ds = generate_dataset(base.dataset);

        auto soc_cfg = base;
        auto r = run(soc_cfg, ds);
        soc_sum += r.final_top1();

        auto fm_cfg = base;
        fm_cfg.mode = Mode::fixmatch;
        fm_cfg.tau = 0.95;
        fm_sum += run(fm_cfg, ds).final_top1();

        auto soft_cfg = base;
        soft_cfg.mode = Mode::soft;
        soft_cfg.tau = 0.0;
        soft_sum += run(soft_cfg, ds).final_top1();

        if (seed == 0) {
            frozen = std::move(r);
            frozen_cfg = soc_cfg;
            frozen_ds = ds;
        }
    }
    const double n = static_cast<double>(kDirectionalSeeds);
    const double soc_top1 = 100.0 * soc_sum / n, fm_top1 = 100.0 * fm_sum / n, soft_top1 = 100.0 * soft_sum / n;
    const double elapsed = seconds_since(t0);
    report("directional", soc_top1 >= fm_top1 + kDirectionalMarginPoints && soc_top1 >= soft_top1 &&
                              elapsed < kDirectionalRuntimeLimitS,
           fmt("top-1 over %zu seeds: selected %.2f, hard(tau=0.95) %.2f, plain soft %.2f; %.0fs", kDirectionalSeeds,
               soc_top1, fm_top1, soft_top1, elapsed));

    std::string detail = "mean entropy by k:";
    double prev = INFINITY;
    bool monotone = true;
    for (std::size_t k : {2, 4, 8, 16, 32}) {
        const double h = mean_selected_entropy(frozen->state, frozen_cfg, *frozen_ds, k);
        monotone = monotone && h <= prev;
        prev = h;
        detail += fmt(" %zu:%.4f", k, h);
    }
    report("entropy-vs-k", monotone, detail);
}

void cli_golden() {
    const std::string dir = SOC_TEST_DATA_DIR;
    std::ifstream log(dir + "/toy4.ndjson", std::ios::binary);
    std::ifstream golden_in(dir + "/toy4_select.golden.ndjson", std::ios::binary);
    std::ostringstream golden, out, err;
    golden << golden_in.rdbuf();
    bool ok = false;
    try {
        ok = soc::app::cmd_select(log, {}, out, err) == soc::app::kExitOk && out.str() == golden.str() &&
             !golden.str().empty();
    } catch (const std::exception& e) {
        err << e.what();
    }
    report("cli-golden", ok, fmt("%zu bytes compared", golden.str().size()));
}

}  // namespace

int main() {
    suite_criteria();
    degeneration();
    cli_golden();
    directional_and_entropy();
    std::printf("%s\n", failures == 0 ? "all acceptance criteria passed" : (std::to_string(failures) + " criteria failed").c_str());
    return failures == 0 ? 0 : 1;
}
