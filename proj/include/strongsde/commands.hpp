#pragma once

#include "strongsde/config.hpp"

#include "json.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace strongsde {

struct CommandOptions {
    std::optional<std::uint64_t> seed;  // overrides simulation.seed
    std::string filter;                 // verify only
    int threads = 1;
};

struct Report {
    std::string command;
    bool pass = true;
    nlohmann::json results = nlohmann::json::object();
    nlohmann::json timings = nlohmann::json::object();  // wall-clock parts, kept out of results
    std::vector<std::pair<std::string, std::string>> csv;  // file name, contents
    std::vector<std::string> jsonl;                        // stream records
    std::vector<std::string> console;                      // lines for stdout
};

Report cmd_check(const ExperimentConfig& cfg, const CommandOptions& opts);
Report cmd_exponents(const ExperimentConfig& cfg, const CommandOptions& opts);
Report cmd_chaos(const ExperimentConfig& cfg, const CommandOptions& opts, const std::string& out_dir = "");
Report cmd_simulate(const ExperimentConfig& cfg, const CommandOptions& opts);
Report cmd_verify(const ExperimentConfig& cfg, const CommandOptions& opts);

/// {command, config, results, pass, wall_time_s, timings, versions}
nlohmann::json report_json(const Report& r, const ExperimentConfig& cfg, double wall_seconds);

/// Writes <command>.json, the CSV tables and <command>.jsonl into dir.
void write_report(const Report& r, const ExperimentConfig& cfg, double wall_seconds, const std::string& dir);

}  // namespace strongsde
