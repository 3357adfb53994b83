#pragma once

#include "strongsde/field.hpp"

#include <Eigen/Sparse>

#include <atomic>
#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace strongsde {

/// Box [-L, L]^d with step h (L/h integral, so x = 0 is a node); backward
/// time nodes t_j = t0 - j dt, j = 0..n_steps.
struct SpaceTimeGrid {
    int d = 1;
    double L = 4.0;
    double h = 0.05;
    double dt = 1e-3;
    double t0 = 1.0;

    int n_axis() const;    // interior nodes per axis
    long n_nodes() const;  // interior nodes in total
    int n_steps() const;
    double time(int j) const { return t0 - j * dt; }
    /// Index j of grid time t; throws when t is not a grid time.
    int index_of(double t) const;
    void validate() const;

    Vec coord(long node) const;
    long origin() const;
    /// Smallest L with exp(-L/(N t0)) below tol, rounded up to a multiple of h.
    static double box_for_tail(double N, double t0, double tol, double h);
};

using TerminalFn = std::function<double(const Vec& x)>;

Vec sample_on_grid(const SpaceTimeGrid& g, const TerminalFn& f);

/// Central-difference gradient at interior nodes with zero boundary values.
std::vector<Vec> grid_gradient(const SpaceTimeGrid& g, const Vec& u);

/// Discrete L_p norm (sum |v|^p h^d)^{1/p} of a vector field given by components.
double grid_lp_norm(const SpaceTimeGrid& g, const std::vector<Vec>& comps, double p);

struct SolverOptions {
    long direct_limit = 30000;  // unknowns up to which sparse LU is used
    double tol = 1e-10;         // relative residual contract
    int max_iter = 5000;
};

/// Implicit-Euler step matrices A_j = I - dt L(t_{j+1}) for the backward
/// problem, factorized once; immutable after construction.
class EvolutionOperator {
public:
    EvolutionOperator(const CoefficientField& field, const SpaceTimeGrid& grid,
                      const SolverOptions& opts = {});
    ~EvolutionOperator();
    EvolutionOperator(const EvolutionOperator&) = delete;
    EvolutionOperator& operator=(const EvolutionOperator&) = delete;

    const SpaceTimeGrid& grid() const { return grid_; }
    const CoefficientField& field() const { return field_; }
    bool time_dependent() const { return time_dependent_; }
    bool direct() const { return direct_; }

    /// Columns of U hold values at t_j; on return they hold values at t_{j+1}.
    void step(int j, Mat& U) const;
    void step(int j, Vec& u) const;
    /// P <- A_j^{-T} P.
    void step_adjoint(int j, Mat& P) const;

    /// Weights pi_j with T_{0,t_j} h (0) = pi_j . h for every grid time t_j.
    std::vector<Vec> origin_density() const;

    /// sigma(t_j, x) and a(t_j, x) at every interior node.
    void sigma_at_nodes(int j, std::vector<Mat>& out) const;

    const Eigen::SparseMatrix<double>& matrix(int j) const;
    double max_residual() const { return max_residual_.load(); }

private:
    struct Step;
    const Step& step_for(int j) const;
    void check_residual(const Eigen::SparseMatrix<double>& A, const Mat& X, const Mat& B) const;

    CoefficientField field_;
    SpaceTimeGrid grid_;
    SolverOptions opts_;
    bool time_dependent_ = false;
    bool direct_ = true;
    std::vector<std::unique_ptr<Step>> steps_;
    mutable std::atomic<double> max_residual_{0.0};
};

struct EvolutionSolve {
    SpaceTimeGrid grid;
    int j_start = 0;       // index of the terminal time
    int j_stop = 0;        // last index solved
    std::vector<Vec> u;    // u[j - j_start], or only the end points when not kept
    bool kept_all = true;
    Vec terminal;
    bool max_principle_warning = false;
    double max_residual = 0.0;

    const Vec& at(int j) const;
    std::vector<Vec> gradient(int j) const { return grid_gradient(grid, at(j)); }
    double value_at_origin(int j) const { return at(j)[grid.origin()]; }
};

EvolutionSolve solve_backward(const EvolutionOperator& op, const Vec& terminal, int j_start = 0,
                              int j_stop = -1, bool keep_all = true);
EvolutionSolve solve_backward(const CoefficientField& field, const TerminalFn& f,
                              const SpaceTimeGrid& grid, const SolverOptions& opts = {});

/// Q^k f (x) = sigma^{ik}(t_j, x) D_i u(t_j, x); k is 1-based.
Vec apply_Q(const CoefficientField& field, const EvolutionSolve& solve, int k, int j);
/// All k at once from a grid function at time index j: column k-1 holds Q^k.
Mat apply_Q_all(const EvolutionOperator& op, const Vec& u, int j);

class InsufficientData : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct DecayFit {
    double slope = 0.0;
    double threshold = 0.0;  // (1/p0 - 1) - 0.1
    bool compliant = false;
    std::vector<double> s;
    std::vector<double> norms;
};

/// Least-squares slope of log ||Du(t0 - s)||_{L_p0} against log s.
DecayFit fit_gradient_decay(const EvolutionSolve& solve, double p0, const std::vector<double>& s_values);
DecayFit fit_gradient_decay(const CoefficientField& field, const TerminalFn& f, const SpaceTimeGrid& grid,
                            double p0, const std::vector<double>& s_values,
                            const SolverOptions& opts = {});

struct TailFit {
    double N = 0.0;
    double C = 0.0;
    long points = 0;
};

/// Smallest N with |u(t,x)| <= C (1_{|x|<2} + exp(-|x|/(N (t0 - t)))) for
/// |x| >= max(2, R + inflation), where C = max |u|.
TailFit check_gaussian_tail(const EvolutionSolve& solve, double R, double inflation = 1.0);

/// Columnar text: t x_1..x_d u Du_1..Du_d, one row per node and kept time.
void export_columnar(const EvolutionSolve& solve, const std::string& path);
/// Binary grid: magic, int32 d, n_axis, n_times, f64 L, h, dt, t0, then
/// u and Du as row-major little-endian f64 arrays.
void export_binary(const EvolutionSolve& solve, const std::string& path);

}  // namespace strongsde
