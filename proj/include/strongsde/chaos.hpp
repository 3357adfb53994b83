#pragma once

#include "strongsde/pde.hpp"
#include "strongsde/wiener.hpp"

#include <string>
#include <vector>

namespace strongsde {

/// Ordered-time axis: cell midpoints (c + 1/2) Delta, Delta = t0 / n_t. An
/// order-m node is a tuple of strictly decreasing cells c_1 > ... > c_m, so
/// every gap is at least epsilon_clip = Delta / 2.
struct SimplexGrid {
    double t0 = 1.0;
    int n_t = 20;

    double delta() const { return t0 / n_t; }
    double epsilon_clip() const { return 0.5 * delta(); }
    double node(int cell) const { return (cell + 0.5) * delta(); }
    std::vector<std::vector<int>> tuples(int m) const;
    /// C(n_t, m).
    static double count(int n_t, int m);
};

struct ChaosOptions {
    int m_max = 3;
    int n_t = 20;
    int substeps = 1;          // PDE steps per half axis cell
    bool tails = true;         // tail(m) for m = 0..m_max
    double max_sweeps = 2e5;   // cost guard on column sweeps
};

class CostGuardTripped : public std::runtime_error {
public:
    CostGuardTripped(double estimate, double cap)
        : std::runtime_error("chaos cost guard: estimated " + std::to_string(static_cast<long long>(estimate)) +
                             " column sweeps exceeds cap " + std::to_string(static_cast<long long>(cap))),
          estimate_(estimate), cap_(cap) {}
    double estimate() const { return estimate_; }
    double cap() const { return cap_; }

private:
    double estimate_, cap_;
};

/// Estimated column sweeps for kernels through m_max (plus the tail layer).
double chaos_sweep_estimate(int d1, int n_t, int m_max, bool tails);

struct KernelOrder {
    int m = 1;
    std::vector<std::vector<int>> tuples;  // simplex nodes, as cells
    Mat values;                            // (d1^m multi-indices) x (tuples)
};

struct ChaosKernelSet {
    SimplexGrid axis;
    SpaceTimeGrid pde_grid;
    int d1 = 1;
    int m_max = 0;
    double c = 0.0;          // T_{0,t0} f (0)
    double Tf2 = 0.0;        // T_{0,t0} f^2 (0)
    std::vector<KernelOrder> orders;  // orders[m-1]
    std::vector<double> tail;         // tail[m], m = 0..
    double sweeps = 0;

    const KernelOrder& order(int m) const { return orders.at(m - 1); }
    /// Linear position of (k_1..k_m) (1-based entries), k_1 most significant.
    long multi_index(const std::vector<int>& k) const;
    std::vector<int> multi_index_of(int m, long idx) const;
    /// Sum over multi-indices and simplex nodes of g^2 Delta^m.
    double kernel_energy(int m) const;
};

/// Kernels g^{k_m..k_1}(t_1..t_m) = T_{0,t_m}[Q^{k_m} ... Q^{k_1} f](0) on the
/// clipped simplex, with tails and T f^2 (0). The PDE grid's t0 and dt are
/// replaced by t0 and Delta / (2 substeps).
ChaosKernelSet compute_kernels(const CoefficientField& field, const TerminalFn& f, double t0,
                               SpaceTimeGrid pde_grid, const ChaosOptions& opts = {},
                               const SolverOptions& solver = {});

/// T f^2 (0) - (T f (0))^2 - sum_k int T (Q^k f)^2 (0) dt_1.
double parseval_gap(const ChaosKernelSet& ks);
/// Sum over multi-indices of the order-(m+1) squared integrand over the simplex.
double tail_norm(const ChaosKernelSet& ks, int m);

/// Repeated Ito integral of the multilinear interpolant of one kernel along
/// a path: integral over t_0 > t_1 > ... > t_m > 0 of g dw^{k_1}_{t_1} ... dw^{k_m}_{t_m}.
double iterated_ito(const SimplexGrid& axis, int m, const std::vector<double>& values,
                    const WienerPath& path, const std::vector<int>& k);
/// Kernel values extended to every cell tuple (nearest admissible tuple),
/// n_t^m entries with the first time most significant.
std::vector<double> dense_kernel(const SimplexGrid& axis, int m, const std::vector<double>& values);
/// iterated_ito on a kernel already passed through dense_kernel.
double iterated_ito_dense(const SimplexGrid& axis, int m, const std::vector<double>& dense,
                          const WienerPath& path, const std::vector<int>& k);
/// Same for a kernel given as a constant.
double iterated_ito_constant(double g, int m, const WienerPath& path, const std::vector<int>& k);

/// c + sum_{i <= m} sum_k iterated_ito(g^k, path).
double reconstruct(const ChaosKernelSet& ks, const WienerPath& path, int m);

/// Binary: magic, f64 t0, int32 m, d1, n_t, f64 c, then per order the tuple
/// count, the tuples and the kernel values per multi-index (little-endian).
void export_kernels_binary(const ChaosKernelSet& ks, const std::string& path);

}  // namespace strongsde
