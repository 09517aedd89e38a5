#include "soc/app/commands.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

namespace {

using soc::app::PolicyArgs;

void add_policy_flags(CLI::App* cmd, PolicyArgs& p, std::optional<std::size_t>& k) {
    cmd->add_option("--policy", p.name, "k policy: linear|exp|fixed")->check(CLI::IsMember({"linear", "exp", "fixed"}));
    cmd->add_option("--alpha", p.alpha, "linear policy slope parameter (default 5)");
    cmd->add_option("--beta", p.beta, "exponential policy rate");
    cmd->add_option("--k", k, "number of clusters (fixed policy)");
}

std::uint64_t resolve_seed(const std::optional<std::uint64_t>& flag) {
    if (flag) return *flag;
    if (const char* env = std::getenv("SOC_SEED")) {
        try {
            return std::stoull(env);
        } catch (const std::exception&) {
            throw soc::ConfigError("SOC_SEED", "expected a non-negative integer");
        }
    }
    return 0;
}

template <typename Fn>
int with_input(const std::string& path, Fn&& fn) {
    if (path == "-") return fn(std::cin);
    std::ifstream in(path);
    if (!in) throw soc::ConfigError(path, "cannot open input file");
    return fn(in);
}

template <typename Fn>
int with_output(const std::optional<std::string>& path, Fn&& fn) {
    if (!path || *path == "-") return fn(std::cout);
    std::ofstream out(*path);
    if (!out) throw soc::ConfigError(*path, "cannot open output file");
    return fn(out);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Selection of soft pseudo-labels via class transition tracking"};
    app.require_subcommand(1);

    std::string input = "-";
    std::optional<std::string> out;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> window;
    std::optional<std::size_t> k;
    PolicyArgs policy;

    auto* select = app.add_subcommand("select", "select soft labels for the final step of a prediction log");
    select->add_option("log", input, "NDJSON prediction log ('-' for stdin)")->required();
    add_policy_flags(select, policy, k);
    select->add_option("--seed", seed, "clustering seed (falls back to SOC_SEED)");
    select->add_option("--nb", window, "transition window in batches (default 512)");
    select->add_option("--out", out, "output NDJSON path (default stdout)");

    auto* cluster = app.add_subcommand("cluster", "print the class clustering of a prediction log");
    cluster->add_option("log", input, "NDJSON prediction log ('-' for stdin)")->required();
    add_policy_flags(cluster, policy, k);
    cluster->add_option("--seed", seed, "clustering seed (falls back to SOC_SEED)");
    cluster->add_option("--nb", window, "transition window in batches (default 512)");
    cluster->add_option("--out", out, "output JSON path (default stdout)");

    std::optional<std::string> config_path;
    soc::app::SimOverrides over;
    soc::app::SimOutputs sim_out;
    auto* sim = app.add_subcommand("sim", "train on the synthetic hierarchical benchmark");
    sim->add_option("config", config_path, "config JSON (defaults when omitted)");
    sim->add_option("--baseline", over.baseline, "run a baseline instead: fixmatch|soft|supervised")
        ->check(CLI::IsMember({"soc", "fixmatch", "soft", "supervised"}));
    sim->add_option("--tau", over.tau, "confidence threshold");
    add_policy_flags(sim, over.policy, k);
    sim->add_option("--seed", seed, "run seed (falls back to SOC_SEED, then the config)");
    sim->add_option("--nb", over.window, "transition window in batches");
    sim->add_option("--iters", over.iters, "training iterations");
    sim->add_option("--out", sim_out.metrics, "metrics CSV path ('-' for stdout)");
    sim->add_option("--pairs", sim_out.pairs, "write final (z_obj1, entropy) pairs CSV here");
    sim->add_option("--checkpoint", sim_out.checkpoint, "write the final training state JSON here");

    soc::app::VerifyOptions vopt;
    std::optional<std::size_t> trials;
    auto* verify = app.add_subcommand("verify", "run randomized invariant suites");
    verify->add_option("suite", vopt.suite, "lemma1|uniform|theorem1|krange|cluster|ctt|losses|all");
    verify->add_option("--trials", trials, "trials per suite (default depends on the suite)");
    verify->add_option("--seed", seed, "suite seed (falls back to SOC_SEED)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return soc::app::kExitUsage;
    }

    try {
        if (select->parsed() || cluster->parsed()) {
            policy.k = k;
            const auto s = resolve_seed(seed);
            const std::size_t nb = window.value_or(soc::app::kDefaultWindow);
            return with_input(input, [&](std::istream& in) {
                return with_output(out, [&](std::ostream& os) {
                    if (select->parsed()) return soc::app::cmd_select(in, {policy, s, nb}, os, std::cerr);
                    return soc::app::cmd_cluster(in, {policy, s, nb}, os, std::cerr);
                });
            });
        }
        if (sim->parsed()) {
            over.policy.k = k;
            if (seed || std::getenv("SOC_SEED")) over.seed = resolve_seed(seed);
            auto cfg = config_path ? soc::app::load_config(*config_path) : soc::sim::SimConfig{};
            cfg = soc::app::apply_overrides(std::move(cfg), over);
            return soc::app::cmd_sim(cfg, sim_out, std::cout, std::cerr);
        }
        vopt.trials = trials.value_or(0);
        vopt.seed = resolve_seed(seed);
        return soc::app::cmd_verify(vopt, std::cout);
    } catch (const soc::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return soc::app::exit_code(e);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return soc::app::kExitData;
    }
}
