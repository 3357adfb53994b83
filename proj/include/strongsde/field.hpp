#pragma once

#include <Eigen/Dense>

#include <functional>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace strongsde {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Spatial gradient of a d x d1 matrix field: entry l holds D_l sigma.
using Gradient = std::vector<Mat>;

using MatrixFn = std::function<void(double t, const Vec& x, Mat& out)>;
using VectorFn = std::function<void(double t, const Vec& x, Vec& out)>;
using GradientFn = std::function<void(double t, const Vec& x, Gradient& out)>;
using ScalarFn = std::function<double(double t, const Vec& x)>;

class InvalidInput : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class NumericalFailure : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A real function of time with optional known discontinuities; quadrature
/// routines split their panels at the breakpoints.
struct Envelope {
    std::function<double(double)> fn;
    std::vector<double> breakpoints;

    double operator()(double t) const { return fn ? fn(t) : 0.0; }
    static Envelope zero() { return {[](double) { return 0.0; }, {}}; }
    static Envelope constant(double c, double t_end);
};

/// |f(t,x)| behaves like |x - center|^{-power} near `center`.
struct SpatialSingularity {
    Vec center;
    double power = 0.0;
};

/// |f(t,x)| behaves like |t - at|^{-power} as t decreases to `at`.
struct TimeSingularity {
    double at = 0.0;
    double power = 0.0;
};

/// Nonnegative scalar function on R^{d+1} with quadrature hints.
struct ScalarField {
    int d = 1;
    ScalarFn fn;
    std::optional<SpatialSingularity> space_sing;
    std::optional<TimeSingularity> time_sing;

    double operator()(double t, const Vec& x) const { return fn(t, x); }
    ScalarField scaled(double c) const;
};

/// sigma and b on R^{d+1} with the decomposition b = b_M + b_B, D sigma =
/// D sigma_M + D sigma_B and the time envelopes of the bounded parts.
/// Immutable once built; every member is safe to call concurrently.
struct CoefficientField {
    std::string name;
    int d = 1;
    int d1 = 1;
    double delta = 1.0;
    double t_max = 1.0;  // drift vanishes outside [0, t_max]

    MatrixFn sigma_fn;
    VectorFn b_M_fn;
    VectorFn b_B_fn;
    GradientFn dsigma_M_fn;
    GradientFn dsigma_B_fn;
    Envelope b_bar = Envelope::zero();
    Envelope dsigma_bar = Envelope::zero();

    /// Points where b_M or D sigma_M blow up, with their radial powers.
    std::vector<SpatialSingularity> b_M_singular;
    std::vector<SpatialSingularity> dsigma_M_singular;

    bool sigma_time_dependent = false;
    bool drift_time_dependent = false;

    Mat sigma(double t, const Vec& x) const;
    Vec b_M(double t, const Vec& x) const;
    Vec b_B(double t, const Vec& x) const;
    Vec b(double t, const Vec& x) const;
    Gradient dsigma_M(double t, const Vec& x) const;
    Gradient dsigma_B(double t, const Vec& x) const;
    Gradient dsigma(double t, const Vec& x) const;

    void sigma_into(double t, const Vec& x, Mat& out) const;
    void b_into(double t, const Vec& x, Vec& out, Vec& scratch) const;

    bool has_drift() const { return static_cast<bool>(b_M_fn) || static_cast<bool>(b_B_fn); }

    /// Scalar views |b_M|, |b|, |D sigma_M| (Frobenius) carrying the
    /// singularity hints of the corresponding part.
    ScalarField b_M_norm() const;
    ScalarField b_norm() const;
    ScalarField dsigma_M_norm() const;
};

double frobenius(const Gradient& g);

struct BandViolation {
    double t = 0;
    Vec x;
    double eigenvalue = 0;
    double lower = 0, upper = 0;
    std::string describe() const;
};

struct AssembledDiffusion {
    Mat a;
    Vec eigenvalues;  // ascending
    std::optional<BandViolation> violation;
};

/// a = sigma sigma^* at one point with a membership check against
/// [lower, upper] (defaults to [delta, 1/delta]).
AssembledDiffusion assemble_a(const CoefficientField& field, double t, const Vec& x);
AssembledDiffusion assemble_a(const CoefficientField& field, double t, const Vec& x, double lower,
                              double upper);

/// Symmetric square root by spectral decomposition.
Mat sqrt_spd(const Mat& a);

// ---- builtin fields -------------------------------------------------------

/// sigma = (I_d | 0), b = 0.
CoefficientField unit_diffusion(int d, int d1, double t_max = 1.0);

/// sigma = (I_d | 0), b = c held in the bounded part.
CoefficientField constant_drift(const Vec& c, int d1, double t_max = 1.0);

/// sigma = (c I_d | 0) with a constant scalar c, b = 0.
CoefficientField scaled_diffusion(int d, int d1, double c, double t_max = 1.0);

struct Example3dParams {
    double alpha = 1.0;
    double beta = 0.0;
    double gamma = 0.0;
    std::function<double(double)> xi;                     // square integrable, may be empty
    std::function<void(double, const Vec&, Vec&)> eta;    // bounded, may be empty
    double eta_sup = 0.0;                                  // sup |eta|
    std::vector<double> xi_breakpoints;
    double t_max = 1.0;
    std::optional<double> delta;                           // defaults to the exact band of a
};

/// d = 3, d1 = 12 example: sigma = (alpha I_3, (beta/|x|) M(x)) with the
/// convention 0/0 = 3^{-1/2}, b = -(gamma/|x|)(x/|x|) 1_{0<|x|<=1} + xi(t) eta(t,x).
CoefficientField example_field_3d(const Example3dParams& p);

/// Multilinear table over a tensor grid in (t, x_1..x_d). Rows hold
/// t x_1..x_d sigma (row-major d*d1 entries) b_1..b_d.
CoefficientField load_tabulated_field(const std::string& path, int d, int d1, double delta,
                                      double fd_step);

}  // namespace strongsde
