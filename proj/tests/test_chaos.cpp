#include "doctest.h"

#include "strongsde/chaos.hpp"
#include "strongsde/config.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>

using namespace strongsde;

namespace {

SpaceTimeGrid line(double h = 0.05) {
    SpaceTimeGrid g;
    g.d = 1;
    g.L = 10;
    g.h = h;
    return g;
}

ChaosOptions opts(int m_max, int n_t, int substeps = 2) {
    ChaosOptions o;
    o.m_max = m_max;
    o.n_t = n_t;
    o.substeps = substeps;
    return o;
}

double max_abs_dev(const Mat& row_values, double target) { return (row_values.array() - target).abs().maxCoeff(); }

}  // namespace

TEST_CASE("simplex grid") {
    const SimplexGrid g{1.0, 5};
    CHECK(SimplexGrid::count(5, 2) == 10);
    CHECK(SimplexGrid::count(40, 5) == 658008);
    const auto t = g.tuples(2);
    REQUIRE(t.size() == 10);
    CHECK(t.front() == std::vector<int>{1, 0});
    CHECK(t.back() == std::vector<int>{4, 3});
    for (const auto& c : t) CHECK(c[0] > c[1]);
    CHECK(g.epsilon_clip() == doctest::Approx(0.1));
    CHECK(g.node(0) == doctest::Approx(0.1));
    // every clipped node tuple keeps gaps >= epsilon_clip, including to t0 and 0
    for (const auto& c : g.tuples(3)) {
        CHECK(g.t0 - g.node(c[0]) >= g.epsilon_clip() - 1e-12);
        CHECK(g.node(c[0]) - g.node(c[1]) >= g.epsilon_clip());
        CHECK(g.node(c[2]) >= g.epsilon_clip() - 1e-12);
    }
}

TEST_CASE("cost guard refuses before any solve") {
    const double est = chaos_sweep_estimate(12, 40, 5, true);
    CHECK(est == doctest::Approx(1.0 + 40 * 12 + 780.0 * 144 + 9880.0 * 1728 + 91390.0 * 20736 + 658008.0 * 248832));
    Example3dParams p;
    try {
        compute_kernels(example_field_3d(p), [](const Vec&) { return 1.0; }, 1.0, SpaceTimeGrid{3, 2.4, 0.4, 0.01, 1.0},
                        opts(5, 40));
        FAIL("expected the guard to trip");
    } catch (const CostGuardTripped& e) {
        CHECK(e.estimate() == est);
        CHECK(e.cap() == 2e5);
    }
}

TEST_CASE("unit diffusion, f = x: one constant first-order kernel") {
    const auto field = unit_diffusion(1, 2);
    const auto ks = compute_kernels(field, terminal_function("x1", 10), 1.0, line(), opts(2, 20));
    CHECK(std::abs(ks.c) < 1e-10);
    const auto& k1 = ks.order(1);
    CHECK(max_abs_dev(k1.values.row(ks.multi_index({1})), 1.0) < 1e-8);
    CHECK(k1.values.row(ks.multi_index({2})).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(ks.order(2).values.cwiseAbs().maxCoeff() < 1e-8);
    CHECK(std::abs(parseval_gap(ks)) < 1e-8);
    CHECK(std::abs(tail_norm(ks, 1)) < 1e-8);
    CHECK(ks.tail[0] == doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("unit diffusion, f = x^2: Hermite structure") {
    const double t0 = 1.0;
    const int n_t = 20;
    const auto ks = compute_kernels(unit_diffusion(1, 1), terminal_function("x1_squared", 10), t0, line(), opts(3, n_t));
    CHECK(ks.c == doctest::Approx(t0).epsilon(1e-6));
    CHECK(ks.Tf2 == doctest::Approx(3 * t0 * t0).epsilon(0.02));  // O(dt + h^2)
    CHECK(ks.order(1).values.cwiseAbs().maxCoeff() < 1e-8);
    CHECK(max_abs_dev(ks.order(2).values, 2.0) < 1e-3);
    CHECK(ks.order(3).values.cwiseAbs().maxCoeff() < 1e-3);
    // clipped midpoint rule: 4 Delta^2 C(n_t, 2) = 2 t0^2 (1 - 1/n_t)
    CHECK(tail_norm(ks, 1) == doctest::Approx(2 * t0 * t0 * (1 - 1.0 / n_t)).epsilon(1e-3));
    CHECK(std::abs(tail_norm(ks, 2)) < 1e-5);
    CHECK(ks.kernel_energy(2) == doctest::Approx(tail_norm(ks, 1)).epsilon(1e-3));
    const double gap = std::abs(parseval_gap(ks)) / ks.Tf2;
    CHECK(gap < 0.02);
    // the defect shrinks under refinement
    const auto fine = compute_kernels(unit_diffusion(1, 1), terminal_function("x1_squared", 10), t0, line(0.025),
                                      opts(1, 2 * n_t, 4));
    CHECK(std::abs(parseval_gap(fine)) / fine.Tf2 < 0.5 * gap);
}

TEST_CASE("constant drift, f = x: c = c^1 t0") {
    Vec c(1);
    c << 0.5;
    const auto ks = compute_kernels(constant_drift(c, 1), terminal_function("x1", 10), 1.0, line(), opts(1, 20));
    CHECK(ks.c == doctest::Approx(0.5).epsilon(1e-6));
    CHECK(max_abs_dev(ks.order(1).values, 1.0) < 1e-6);
    for (int i = 0; i < 50; ++i) {
        const auto path = sample_wiener(1, 1.0, 1e-3, 11, i);
        CHECK(reconstruct(ks, path, 1) == doctest::Approx(0.5 + path.terminal()[0]).epsilon(1e-6));
    }
}

TEST_CASE("constant f has no chaos") {
    const auto ks = compute_kernels(unit_diffusion(1, 1), [](const Vec&) { return 2.0; }, 1.0, line(), opts(2, 10));
    CHECK(std::abs(parseval_gap(ks)) < 1e-10);
    CHECK(ks.order(1).values.cwiseAbs().maxCoeff() < 1e-10);
    CHECK(ks.tail[0] < 1e-12);
}

TEST_CASE("iterated Ito integrals of constant kernels") {
    const auto path = sample_wiener(2, 1.0, 1e-3, 3, 0);
    CHECK(iterated_ito_constant(1.0, 1, path, {1}) == doctest::Approx(path.terminal()[0]).epsilon(1e-12));
    // kernel values on the simplex agree with the constant version
    const SimplexGrid ax{1.0, 10};
    std::vector<double> ones(ax.tuples(2).size(), 1.0);
    CHECK(iterated_ito(ax, 2, ones, path, {1, 2}) == doctest::Approx(iterated_ito_constant(1.0, 2, path, {1, 2})).epsilon(1e-9));
    CHECK_THROWS_AS(iterated_ito_constant(1.0, 2, path, {1, 3}), InvalidInput);

    const int n = 10000;
    double mse = 0, cross = 0, cross2 = 0;
    for (int i = 0; i < n; ++i) {
        const auto p = sample_wiener(2, 1.0, 1e-3, 17, i);
        const double w = p.terminal()[0];
        const double i11 = iterated_ito_constant(1.0, 2, p, {1, 1});
        mse += std::pow(i11 - 0.5 * (w * w - 1.0), 2) / n;
        const double a = iterated_ito_constant(1.0, 2, p, {1, 2}), b = iterated_ito_constant(1.0, 2, p, {2, 1});
        cross += a * b / n;
        cross2 += a * a * b * b / n;
    }
    CHECK(mse < 2e-3);  // O(dt)
    const double se = std::sqrt((cross2 - cross * cross) / n);
    CHECK(std::abs(cross) <= 3 * se);
}

TEST_CASE("reconstruction of w and of w^2") {
    auto wide = line();
    wide.L = 14;  // pushes the cutoff's leakage below 1e-13
    const auto k1 = compute_kernels(unit_diffusion(1, 1), terminal_function("x1", 14), 1.0, wide, opts(1, 40));
    const auto k2 = compute_kernels(unit_diffusion(1, 1), terminal_function("x1_squared", 10), 1.0, line(), opts(2, 40));
    double worst = 0, mse = 0;
    const int n = 500;
    for (int i = 0; i < n; ++i) {
        const auto p = sample_wiener(1, 1.0, 1e-3, 5, i);
        const double w = p.terminal()[0];
        worst = std::max(worst, std::abs(reconstruct(k1, p, 1) - w));
        mse += std::pow(reconstruct(k2, p, 2) - w * w, 2) / n;
    }
    CHECK(worst < 1e-8);
    CHECK(mse / 2.0 < 0.05);
}

TEST_CASE("kernel export") {
    const auto ks = compute_kernels(unit_diffusion(1, 1), terminal_function("x1", 10), 1.0, line(0.1), opts(2, 6));
    const auto file = std::filesystem::temp_directory_path() / "strongsde_kernels.bin";
    export_kernels_binary(ks, file.string());
    std::ifstream in(file, std::ios::binary);
    char magic[8];
    in.read(magic, 8);
    CHECK(std::string(magic, 8) == "SSDECHS1");
    double t0;
    std::int32_t m;
    in.read(reinterpret_cast<char*>(&t0), 8);
    in.read(reinterpret_cast<char*>(&m), 4);
    CHECK(t0 == 1.0);
    CHECK(m == 2);
}
