#include "strongsde/commands.hpp"
#include "strongsde/config.hpp"
#include "strongsde/sde.hpp"

#include "CLI11.hpp"

#include <chrono>
#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

using namespace strongsde;

int main(int argc, char** argv) {
    CLI::App app{"strongsde: strong solutions of SDEs with singular drift, numerically"};
    app.require_subcommand(1, 1);

    std::string config_path, out_dir, filter;
    std::optional<std::uint64_t> seed;
    int threads = default_threads();

    auto common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "experiment config (YAML)")->check(CLI::ExistingFile);
        sub->add_option("--seed", seed, "override simulation.seed");
        sub->add_option("--out", out_dir, "output directory (overrides output.dir)");
        sub->add_option("--threads", threads, "worker threads (env STRONGSDE_THREADS)")->check(CLI::PositiveNumber);
    };
    for (const char* name : {"check", "exponents", "chaos", "simulate", "verify"}) {
        auto* sub = app.add_subcommand(name);
        common(sub);
        if (std::string(name) == "verify")
            sub->add_option("--filter", filter, "tag, criterion number or 'all'");
    }
    app.get_subcommand("check")->description("verify the coefficient hypotheses against thresholds");
    app.get_subcommand("exponents")->description("solve the exponent constraints and classify LPS");
    app.get_subcommand("chaos")->description("chaos kernels, Parseval defect and tail ladder");
    app.get_subcommand("simulate")->description("Euler-Maruyama batches, Krylov ratio, Girsanov, strongness gap");
    app.get_subcommand("verify")->description("run the acceptance suite");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    const auto start = std::chrono::steady_clock::now();
    try {
        ExperimentConfig cfg = config_path.empty() ? ExperimentConfig{} : load_config(config_path);
        if (!out_dir.empty()) cfg.out_dir = out_dir;
        CommandOptions opts;
        opts.seed = seed;
        opts.filter = filter;
        opts.threads = threads;

        const std::string cmd = app.get_subcommands().front()->get_name();
        Report r;
        if (cmd == "check") r = cmd_check(cfg, opts);
        else if (cmd == "exponents") r = cmd_exponents(cfg, opts);
        else if (cmd == "chaos") r = cmd_chaos(cfg, opts, cfg.out_dir);
        else if (cmd == "simulate") r = cmd_simulate(cfg, opts);
        else r = cmd_verify(cfg, opts);

        const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        write_report(r, cfg, wall, cfg.out_dir);
        for (const auto& l : r.console) std::cout << l << "\n";
        std::cout << (r.pass ? "PASS" : "FAIL") << " " << cmd << " (" << cfg.out_dir << "/" << cmd << ".json)\n";
        return r.pass ? 0 : 1;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
