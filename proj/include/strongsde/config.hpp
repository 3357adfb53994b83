#pragma once

#include "strongsde/field.hpp"
#include "strongsde/pde.hpp"

#include "json.hpp"

#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace strongsde {

/// Malformed or inconsistent configuration; the message carries the line.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct FieldSpec {
    std::string builtin = "example3d";  // example3d | unit | constant_drift | scaled | tabulated
    int d = 3;
    int d1 = 12;
    double alpha = 1.0, beta = 0.0, gamma = 0.0;
    double xi = 0.0;                                    // constant xi(t)
    std::vector<std::pair<double, double>> xi_table;    // piecewise linear xi(t), overrides xi
    std::vector<double> eta{0.0, 0.0, 0.0};             // constant eta
    std::vector<double> drift;                          // constant_drift
    double scale = 1.0;                                 // scaled
    std::string path;                                   // tabulated
    double delta = 0.5;                                 // tabulated
    double fd_step = 1e-3;                              // tabulated
    double t_max = 1.0;
};

struct ExponentSpec {
    double p_b = 2.5;
    double p_dsigma = 2.5;
    double frp_b = 3.5;
    double frq_b = 7.0;
};

struct GridSpec {
    double L = 2.4;
    double h = 0.4;
    double dt = 0.01;
};

struct ChaosSpec {
    double t0 = 1.0;
    int m_max = 2;
    int n_t = 8;
    int substeps = 1;
    std::string f = "gaussian";  // x1 | x1_squared | constant | gaussian
    double max_sweeps = 2e5;
};

struct SimulationSpec {
    long n_paths = 2000;
    std::uint64_t seed = 1;
    double dt = 0.01;
    double cap_b = 0.0;           // 0: half the PDE step
    double girsanov_level = 0.0;
    bool sqrt_a = false;
    bool strongness = true;
    long strongness_paths = 1000;
};

struct ThresholdSpec {
    double eps_sigma = 0.1;
    double eps_b = 0.1;
    double rho_f = 1.0;
    double r_b = 1.0;
    int levels = 4;
    int window = 1;
    double parseval_tol = 0.02;
    double agreement_tol = 0.1;
    double tol_scale = 1.0;
};

struct ExperimentConfig {
    FieldSpec field;
    ExponentSpec exponents;
    GridSpec grid;
    ChaosSpec chaos;
    SimulationSpec simulation;
    ThresholdSpec thresholds;
    std::string out_dir = "out";
    std::string source;  // file the config came from
};

ExperimentConfig parse_config(const std::string& text, const std::string& source = "<string>",
                              const std::string& base_dir = ".");
ExperimentConfig load_config(const std::string& path);
nlohmann::json to_json(const ExperimentConfig& c);

CoefficientField build_field(const FieldSpec& f);
/// Named terminal data; polynomial ones are cut off smoothly between 0.6 L
/// and 0.8 L (sup norm) so they vanish at the box boundary.
TerminalFn terminal_function(const std::string& name, double L);
SpaceTimeGrid build_grid(const ExperimentConfig& c, int d);

}  // namespace strongsde
