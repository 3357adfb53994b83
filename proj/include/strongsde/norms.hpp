#pragma once

#include "strongsde/field.hpp"
#include "strongsde/params.hpp"

#include <optional>
#include <vector>

namespace strongsde {

using params::NormOrder;

/// Ball-sampling plan for sup-type Morrey estimates. Radii are
/// rho_f * 2^{-k}, k < levels; centres are the anchors plus the lattice
/// anchor + (rho/2) z with |z_i| <= 2 * window.
struct BallPlan {
    int levels = 6;
    int window = 1;
    int n_radial = 32;
    int n_angular = 12;
    int n_times = 1;
    std::vector<Vec> anchors;  // empty: singular point of f, else the origin
    bool refine_check = true;
};

struct MorreyReport {
    double value = 0.0;
    double worst_t = 0.0;
    Vec worst_center;
    double worst_radius = 0.0;
    bool divergent = false;
    bool precision_warning = false;
    double refined_value = 0.0;  // worst ball recomputed at doubled resolution
    long balls = 0;
};

/// sup over sampled (t, B in B_rho, rho <= rho_f) of rho * (avg_B |f|^p)^{1/p}.
MorreyReport morrey_hat(const ScalarField& f, double p, double rho_f, double t_lo, double t_hi,
                        const BallPlan& plan = {});

/// Average of |f(t,.)|^p over B_rho(center) by radial-angular midpoint
/// quadrature; +inf when the declared singularity makes it diverge.
double ball_average(const ScalarField& f, double p, double t, const Vec& center, double rho,
                    int n_radial, int n_angular);

/// [t_start, t_end) x B_radius(center).
struct Cylinder {
    double t_start = 0, t_end = 1;
    Vec center;
    double radius = 1;
};

struct MixedNormSpec {
    double p = 2, q = 2;
    NormOrder order = NormOrder::SpaceFirst;
    Cylinder cyl;
    bool normalized = false;
};

struct QuadRes {
    int n_radial = 48;
    int n_angular = 12;
    int n_time = 32;
};

struct NormValue {
    double value = 0.0;
    bool divergent = false;
};

/// Iterated L_{p,q} norm over a cylinder in the requested order; the
/// normalized variant divides by the norm of 1 on the same cylinder.
NormValue mixed_norm(const ScalarField& f, const MixedNormSpec& spec, const QuadRes& res = {});

/// Norm of the indicator of a cylinder: |B|^{1/p} (t_end - t_start)^{1/q}.
double unit_mixed_norm(int d, const Cylinder& c, double p, double q);

struct CylinderPlan {
    int levels = 5;
    int window = 1;
    std::vector<double> time_starts;  // empty: singular time of f, else 0
    std::vector<Vec> anchors;
    QuadRes res{24, 8, 16};
};

struct HatBReport {
    double value = 0.0;
    bool divergent = false;
    Cylinder worst;
    std::vector<double> per_level;  // sup over cylinders at each radius
    long cylinders = 0;
};

/// sup over r <= r_b and sampled cylinders C in C_r of r * normalized norm of |b|.
HatBReport hat_b(const ScalarField& b_abs, double frp, double frq, double r_b, NormOrder order,
                 const CylinderPlan& plan = {});

/// beta(t) = sup_s int_s^{s+t} f_bar^2 over window starts on a lattice of the horizon.
double beta_modulus(const Envelope& f_bar, double t, double horizon_lo, double horizon_hi,
                    double step);
std::vector<double> beta_modulus(const Envelope& f_bar, const std::vector<double>& ts,
                                 double horizon_lo, double horizon_hi, double step);

/// int_a^b f^2 by Gauss-Legendre panels split at the envelope breakpoints.
double integrate_squared(const Envelope& f, double a, double b);

/// Threshold decomposition b_M = b 1_{|b| >= lambda(t)}, b_B = b - b_M with
/// lambda(t) = N_hat (int |b(t,x)|^p dx)^{1/(p-d)}. The spatial integral is
/// taken over B_R(0), which must contain the support of b.
struct ThresholdSplit {
    VectorFn b_M;
    VectorFn b_B;
    Envelope b_bar;                 // = lambda
    std::vector<double> nodes;      // times where lambda was tabulated
    std::vector<double> lambda;
    std::vector<double> lp_norm_p;  // int |b(t,.)|^p at the nodes
};

ThresholdSplit split_by_threshold(const VectorFn& b, const ScalarField& b_abs, double p, int d,
                                  double N_hat, double support_radius, double t_lo, double t_hi,
                                  int n_time_nodes = 1, const QuadRes& res = {96, 16, 1});

/// Volume of the unit ball in R^d.
double unit_ball_volume(int d);

// ---- singular examples ----------------------------------------------------

/// f(t,x) = 1_{0<t<1,|x|<1} |x|^{-1} (|x|/sqrt t)^{1/(d+1)}.
ScalarField parabolic_scaling_example(int d);

/// kappa(t) = sum_{n0 <= n <= n_max} 1_{(a_n, b_n)}(t), a_n = 1/(n ln^2 n), b_n = (1+a_n) a_n.
Envelope kappa_indicator(int n0, int n_max);
/// kappa(t) t^{-1/2}; its square integrates to sum ln(1 + a_n).
Envelope kappa_envelope(int n0, int n_max);
/// Smallest n0 >= 3 with b_n <= a_{n-1} <= 1 for all n >= n0 (checked up to n_check).
int kappa_min_n0(int n_check = 100000);

/// g = kappa f and its Morrey part g 1_{|x| <= sqrt t}.
ScalarField fractal_time_drift(int d, int n0, int n_max);
ScalarField fractal_time_drift_M(int d, int n0, int n_max);

/// |Da_M| with Da_M = (D sigma_M) sigma^* + sigma (D sigma_M)^*.
ScalarField da_M_norm(const CoefficientField& field);

}  // namespace strongsde
