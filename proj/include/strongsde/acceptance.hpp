#pragma once

#include "json.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace strongsde {

/// One measured quantity compared against a limit: ok iff value <= limit.
struct Check {
    std::string name;
    double value = 0.0;
    double limit = 0.0;      // already multiplied by the tolerance scale
    double base_limit = 0.0; // at scale 1
    bool ok = false;
    bool exact = false;      // pass/fail requirement, never scaled
};

struct CriterionResult {
    int id = 0;
    std::string title;
    std::vector<std::string> tags;
    bool pass = false;
    bool pass_at_default = false;
    std::string failure_kind;  // "", "tolerance" or "correctness"
    std::vector<Check> checks;
    nlohmann::json detail;
    double seconds = 0.0;
    std::string error;  // exception text, if any
};

struct AcceptanceOptions {
    double tol_scale = 1.0;  // multiplies every tolerance
    std::string filter;      // tag or criterion number; empty runs all
    int threads = 1;
    std::uint64_t seed = 20240611;
};

struct CriterionInfo {
    int id;
    std::string title;
    std::vector<std::string> tags;
};

const std::vector<CriterionInfo>& acceptance_catalog();
bool matches_filter(const CriterionInfo& c, const std::string& filter);

CriterionResult run_criterion(int id, const AcceptanceOptions& opts);
std::vector<CriterionResult> run_acceptance(const AcceptanceOptions& opts);

/// "[PASS] 3 title (value <= limit, ...)" style summary line.
std::string summary_line(const CriterionResult& r);
nlohmann::json to_json(const CriterionResult& r);

}  // namespace strongsde
