#include "doctest.h"

#include "strongsde/field.hpp"
#include "strongsde/pde.hpp"
#include "strongsde/smoothing.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>

using namespace strongsde;

namespace {

SpaceTimeGrid grid(int d, double L, double h, double dt, double t0) {
    SpaceTimeGrid g;
    g.d = d;
    g.L = L;
    g.h = h;
    g.dt = dt;
    g.t0 = t0;
    return g;
}

// exp(-|x|^2 / 2v) evolved by the heat semigroup for time s
double heat_gauss(const Vec& x, double v, double s) {
    const int d = static_cast<int>(x.size());
    return std::pow(v / (v + s), 0.5 * d) * std::exp(-x.squaredNorm() / (2 * (v + s)));
}

double cutoff(double r, double a, double b) {
    if (r <= a) return 1.0;
    if (r >= b) return 0.0;
    const double u = (r - a) / (b - a);
    const double e1 = std::exp(-1 / (1 - u)), e0 = std::exp(-1 / u);
    return e1 / (e1 + e0);
}

}  // namespace

TEST_CASE("heat equation against the Gaussian kernel") {
    const double v = 0.5;
    auto run = [&](int d, double L, double h, double dt, double t0) {
        const auto g = grid(d, L, h, dt, t0);
        const auto sol = solve_backward(unit_diffusion(d, d), [v](const Vec& x) { return std::exp(-x.squaredNorm() / (2 * v)); }, g);
        double err = 0;
        for (int j : {g.n_steps() / 2, g.n_steps()}) {
            const Vec& u = sol.at(j);
            for (long n = 0; n < g.n_nodes(); ++n)
                err = std::max(err, std::abs(u[n] - heat_gauss(g.coord(n), v, t0 - g.time(j))));
        }
        return err;
    };
    CHECK(run(1, 8, 0.05, 1e-3, 1.0) < 0.01);
    CHECK(run(3, 2.5, 0.125, 2e-3, 0.2) < 0.03);
}

TEST_CASE("linear terminal data is preserved in the interior") {
    // t0 small enough that paths from |x| <= 2 rarely reach the cutoff
    const auto g = grid(2, 6, 0.1, 0.01, 0.1);
    const TerminalFn f = [](const Vec& x) { return x[0] * cutoff(x.cwiseAbs().maxCoeff(), 3.6, 4.8); };
    const auto sol = solve_backward(unit_diffusion(2, 2), f, g);
    const Vec& u = sol.at(g.n_steps());
    double err = 0;
    for (long n = 0; n < g.n_nodes(); ++n) {
        const Vec x = g.coord(n);
        if (x.cwiseAbs().maxCoeff() <= 2.0) err = std::max(err, std::abs(u[n] - x[0]));
    }
    CHECK(err < 1e-3);
}

TEST_CASE("constant drift shifts the heat solution") {
    Vec c(1);
    c << 0.8;
    const double v = 0.3, t0 = 0.5;
    const auto g = grid(1, 6, 0.02, 5e-4, t0);
    const auto sol = solve_backward(constant_drift(c, 1), [v](const Vec& x) { return std::exp(-x.squaredNorm() / (2 * v)); }, g);
    const Vec& u = sol.at(g.n_steps());
    double err = 0;
    for (long n = 0; n < g.n_nodes(); ++n) {
        const Vec x = g.coord(n);
        err = std::max(err, std::abs(u[n] - heat_gauss(x + c * t0, v, t0)));
    }
    CHECK(err < 0.01);
}

TEST_CASE("apply_Q on linear and quadratic data") {
    const auto g = grid(2, 6, 0.1, 0.01, 0.1);
    const auto field = unit_diffusion(2, 3);
    const TerminalFn lin = [](const Vec& x) { return x[0] * cutoff(x.cwiseAbs().maxCoeff(), 3.6, 4.8); };
    const auto s1 = solve_backward(field, lin, g);
    const TerminalFn quad = [](const Vec& x) { return x[0] * x[0] * cutoff(x.cwiseAbs().maxCoeff(), 3.6, 4.8); };
    const auto s2 = solve_backward(field, quad, g);
    const int j = g.n_steps() / 2;
    const Vec q1 = apply_Q(field, s1, 1, j), q2 = apply_Q(field, s1, 2, j), q3 = apply_Q(field, s1, 3, j);
    const Vec p1 = apply_Q(field, s2, 1, j), p2 = apply_Q(field, s2, 2, j);
    double e = 0;
    for (long n = 0; n < g.n_nodes(); ++n) {
        const Vec x = g.coord(n);
        if (x.cwiseAbs().maxCoeff() > 2.0) continue;
        e = std::max({e, std::abs(q1[n] - 1), std::abs(q2[n]), std::abs(q3[n]), std::abs(p1[n] - 2 * x[0]),
                      std::abs(p2[n])});
    }
    CHECK(e < 1e-3);

    // example field, f = x^1: Q^k = sigma^{1k}
    Example3dParams p;
    p.beta = 0.3;
    const auto ex = example_field_3d(p);
    const auto g3 = grid(3, 2.4, 0.2, 0.01, 0.01);
    const auto s3 = solve_backward(ex, [](const Vec& x) { return x[0]; }, g3);
    for (int k = 1; k <= 12; ++k) {
        const Vec q = apply_Q(ex, s3, k, 1);
        for (long n : {g3.origin(), g3.origin() + 1, g3.origin() + g3.n_axis()}) {
            const Vec x = g3.coord(n);
            CHECK(q[n] == doctest::Approx(ex.sigma(g3.time(1), x)(0, k - 1)).epsilon(1e-6));
        }
    }
}

TEST_CASE("gradient decay of a sharp bump") {
    // Frozen output of an exact heat-kernel convolution oracle: bump of width
    // 0.08 in d = 1, L_2.5 norms of Du at s = 0.0016 * 2^k, k = 0..4.
    const double oracle_slope = -0.66428;
    const double w = 0.08, p0 = 2.5;
    const auto g = grid(1, 2.0, 0.02, 1e-4, 0.0256);
    const TerminalFn f = [w](const Vec& x) { return bump(x.squaredNorm() / (w * w)); };
    std::vector<double> s;
    for (int k = 0; k < 5; ++k) s.push_back(0.0016 * std::ldexp(1.0, k));
    const auto fit = fit_gradient_decay(unit_diffusion(1, 1), f, g, p0, s);
    CHECK(fit.slope == doctest::Approx(oracle_slope).epsilon(0.02));
    CHECK(fit.threshold == doctest::Approx(1 / p0 - 1 - 0.1));
    CHECK(fit.compliant);

    const TerminalFn f3 = [f](const Vec& x) { return 3 * f(x); };
    const auto fit3 = fit_gradient_decay(unit_diffusion(1, 1), f3, g, p0, s);
    CHECK(fit3.slope == doctest::Approx(fit.slope).epsilon(1e-9));

    // smooth data: the gradient norm barely moves over short times
    const auto gs = grid(1, 6, 0.05, 1e-3, 0.05);
    const auto smooth = fit_gradient_decay(unit_diffusion(1, 1), [](const Vec& x) { return std::exp(-x.squaredNorm()); },
                                           gs, p0, {0.005, 0.01, 0.02, 0.04});
    CHECK(std::abs(smooth.slope) < 0.05);
    CHECK(smooth.compliant);
    CHECK_THROWS_AS(fit_gradient_decay(unit_diffusion(1, 1), f, g, p0, {0.0016}), InsufficientData);
}

TEST_CASE("Gaussian tail envelope") {
    const auto g = grid(1, 8, 0.05, 1e-3, 0.5);
    const double R = 0.5;
    const TerminalFn f = [R](const Vec& x) { return bump(x.squaredNorm() / (R * R)); };
    const auto sol = solve_backward(unit_diffusion(1, 1), f, g);
    const auto t1 = check_gaussian_tail(sol, R);
    CHECK(std::isfinite(t1.N));
    CHECK(t1.N > 0);
    CHECK(t1.C >= 0);
    CHECK(t1.points > 0);
    const auto sol2 = solve_backward(unit_diffusion(1, 1), [f](const Vec& x) { return 2 * f(x); }, g);
    const auto t2 = check_gaussian_tail(sol2, R);
    CHECK(t2.C == doctest::Approx(2 * t1.C));
    CHECK(t2.N == doctest::Approx(t1.N).epsilon(1e-9));
}

TEST_CASE("grid validation and exports") {
    auto g = grid(1, 1.0, 0.3, 0.01, 0.1);
    CHECK_THROWS(g.validate());
    g = grid(1, 1.0, 0.25, 0.05, 0.1);
    const auto sol = solve_backward(unit_diffusion(1, 1), [](const Vec& x) { return std::exp(-x.squaredNorm()); }, g);
    const auto dir = std::filesystem::temp_directory_path() / "strongsde_pde_test";
    std::filesystem::create_directories(dir);
    export_columnar(sol, (dir / "u.txt").string());
    export_binary(sol, (dir / "u.bin").string());
    std::ifstream in(dir / "u.txt");
    std::string line;
    long rows = 0;
    while (std::getline(in, line))
        if (!line.empty() && line[0] != '#') ++rows;
    CHECK(rows == g.n_nodes() * (g.n_steps() + 1));
    CHECK(std::filesystem::file_size(dir / "u.bin") > 0);
}
