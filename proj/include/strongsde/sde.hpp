#pragma once

#include "strongsde/chaos.hpp"
#include "strongsde/norms.hpp"
#include "strongsde/wiener.hpp"

#include <functional>
#include <string>
#include <vector>

namespace strongsde {

// ---- Monte-Carlo plumbing ---------------------------------------------------

struct Estimate {
    double value = 0.0;
    double std_error = 0.0;
    long n_paths = 0;
};

/// Sample mean with its standard error.
Estimate mean_estimate(const std::vector<double>& samples);

/// Thread count from STRONGSDE_THREADS, else the hardware concurrency.
int default_threads();

/// Runs fn(i, row) for i in [0, n) on `threads` workers; row i of the result
/// holds the `width` values written by path i. Order-independent.
Mat parallel_paths(long n, int width, int threads, const std::function<void(long, double*)>& fn);

/// {"estimator":..,"value":..,"std_error":..,"n_paths":..,"dt":..,"seed":..}
std::string jsonl_record(const std::string& estimator, const Estimate& e, double dt, std::uint64_t seed);

// ---- Euler-Maruyama ---------------------------------------------------------

struct EmOptions {
    double cap_b = 0.025;     // max |b| dt per step
    bool sqrt_a = false;      // drive with a^{1/2} and a d-dimensional path
};

struct SolutionPath {
    double t_start = 0.0;
    double dt = 0.0;
    Mat states;  // d x (n_steps + 1)

    int n_steps() const { return static_cast<int>(states.cols()) - 1; }
    Vec at(int k) const { return states.col(k); }
    Vec terminal() const { return states.col(states.cols() - 1); }
};

class BlowUp : public NumericalFailure {
public:
    BlowUp(int step) : NumericalFailure("Euler-Maruyama blow-up at step " + std::to_string(step)), step_(step) {}
    int step() const { return step_; }

private:
    int step_;
};

SolutionPath euler_maruyama(const CoefficientField& field, const WienerPath& path, double t, const Vec& x,
                            const EmOptions& opts = {});

// ---- occupation functionals ---------------------------------------------------

struct KrylovEstimate {
    double ratio = 0.0;
    double std_error = 0.0;
    double numerator = 0.0;  // E (int f)^m
    double norm = 0.0;       // |f|_{L_{p0,q0}} over the cylinder
    long n_paths = 0;
};

struct KrylovSetup {
    double t = 0.0;
    Vec x;
    double T = 1.0;
    double dt = 1e-2;
    int m = 1;
    long n_paths = 1000;
    std::uint64_t seed = 1;
    int threads = 1;
    EmOptions em;
};

/// E(int_0^T f(t+s, x_s) ds)^m / |f|^m with the norm supplied by the caller.
KrylovEstimate krylov_ratio(const CoefficientField& field, const ScalarFn& f, double norm, const KrylovSetup& s);

/// Same with the norm from mixed_norm over `spec`.
KrylovEstimate krylov_ratio(const CoefficientField& field, const ScalarField& f, const MixedNormSpec& spec,
                            const KrylovSetup& s, const QuadRes& res = {});

// ---- Girsanov ---------------------------------------------------------------

struct GirsanovWeights {
    double n = 0.0;
    Mat gamma;                // d1 x (n_steps + 1)
    Vec envelope;             // b_bar(s) |sigma^* a^{-1}| at every grid time
    double phi = 0.0;
    double weight = 1.0;
    bool envelope_ok = true;
};

/// gamma_n = sigma^* a^{-1} b_B 1_{|b_B| > n} along the solution; the dw term
/// is left-point, the dt term trapezoid.
GirsanovWeights girsanov_weights(const CoefficientField& field, const SolutionPath& sol, const WienerPath& path,
                                 double n);

// ---- strongness ---------------------------------------------------------------

struct StrongnessGap {
    std::vector<Estimate> mc_gap;  // m = 0..m_max
    std::vector<double> tail;      // tail_norm(m), when available
};

/// E|f(x_t0) - reconstruct_m|^2 for every m <= ks.m_max on shared paths
/// started from the origin at time 0.
StrongnessGap strongness_gap(const CoefficientField& field, const TerminalFn& f, const ChaosKernelSet& ks,
                             long n_paths, double dt, std::uint64_t seed, int threads = 1,
                             const EmOptions& em = {});

/// E(I_m g)^{2n} / |g|^{2n}_{L_2(simplex)} for a constant kernel g, along the
/// first coordinate of each path.
Estimate moment_bound_check(double g, int m, int n, double t0, double dt, long n_paths, std::uint64_t seed,
                            int threads = 1);

}  // namespace strongsde
