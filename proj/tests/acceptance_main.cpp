// Acceptance runner: one [PASS]/[FAIL] line per criterion, nonzero exit on any failure.
#include "strongsde/acceptance.hpp"
#include "strongsde/sde.hpp"

#include "CLI11.hpp"

#include <fstream>
#include <iostream>

using namespace strongsde;

int main(int argc, char** argv) {
    CLI::App app{"acceptance suite"};
    AcceptanceOptions opts;
    opts.threads = default_threads();
    std::string json_out;
    app.add_option("--filter", opts.filter, "tag, criterion number or 'all'");
    app.add_option("--tol-scale", opts.tol_scale, "multiply every tolerance")->check(CLI::PositiveNumber);
    app.add_option("--threads", opts.threads)->check(CLI::PositiveNumber);
    app.add_option("--seed", opts.seed);
    app.add_option("--json", json_out, "write per-criterion results here");
    CLI11_PARSE(app, argc, argv);

    bool all = true;
    int ran = 0;
    nlohmann::json report = nlohmann::json::array();
    for (const auto& c : acceptance_catalog()) {
        if (!matches_filter(c, opts.filter)) continue;
        const auto r = run_criterion(c.id, opts);
        std::cout << summary_line(r) << std::endl;
        report.push_back(to_json(r));
        all = all && r.pass;
        ++ran;
    }
    if (ran == 0) {
        std::cerr << "no criterion matches '" << opts.filter << "'\n";
        return 2;
    }
    std::cout << (all ? "ALL PASS" : "FAILURES") << " (" << ran << " criteria)" << std::endl;
    if (!json_out.empty()) std::ofstream(json_out) << report.dump(2) << "\n";
    return all ? 0 : 1;
}
