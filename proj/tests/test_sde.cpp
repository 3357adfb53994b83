#include "doctest.h"

#include "strongsde/config.hpp"
#include "strongsde/sde.hpp"

#include <cmath>

using namespace strongsde;

namespace {

Vec v(std::initializer_list<double> xs) {
    Vec out(static_cast<Eigen::Index>(xs.size()));
    Eigen::Index i = 0;
    for (double x : xs) out[i++] = x;
    return out;
}

}  // namespace

TEST_CASE("Wiener paths: determinism and moments") {
    const auto a = sample_wiener(3, 1.0, 0.01, 42, 7);
    const auto b = sample_wiener(3, 1.0, 0.01, 42, 7);
    CHECK(a.increments == b.increments);
    CHECK(a.increments != sample_wiener(3, 1.0, 0.01, 42, 8).increments);
    CHECK(a.n_steps() == 100);
    CHECK((a.coarsened(4).terminal() - a.terminal()).norm() < 1e-12);

    const int n = 10000;
    Mat w(2, n);
    for (int i = 0; i < n; ++i) w.col(i) = sample_wiener(2, 0.5, 0.05, 1, i).terminal();
    for (int k = 0; k < 2; ++k) {
        const Vec row = w.row(k);
        const auto m = mean_estimate(std::vector<double>(row.data(), row.data() + n));
        CHECK(std::abs(m.value) <= 3 * m.std_error);
        std::vector<double> sq(n);
        for (int i = 0; i < n; ++i) sq[i] = row[i] * row[i];
        const auto var = mean_estimate(sq);
        CHECK(std::abs(var.value - 0.5) <= 3 * var.std_error);
    }
    std::vector<double> cross(n);
    for (int i = 0; i < n; ++i) cross[i] = w(0, i) * w(1, i);
    const auto c = mean_estimate(cross);
    CHECK(std::abs(c.value) <= 3 * c.std_error);
}

TEST_CASE("Euler-Maruyama exact cases") {
    const auto path = sample_wiener(3, 1.0, 1e-3, 5, 0);
    const Vec x0 = v({0.2, -0.1});
    const auto s = euler_maruyama(unit_diffusion(2, 3), path, 0.0, x0);
    for (int k : {0, 100, 1000}) CHECK((s.at(k) - x0 - path.w(k).head(2)).norm() < 1e-12);
    const Vec c = v({0.5, -0.25});
    const auto s2 = euler_maruyama(constant_drift(c, 3), path, 0.0, x0);
    CHECK((s2.terminal() - x0 - c - path.terminal().head(2)).norm() < 1e-12);
}

TEST_CASE("Euler-Maruyama strong order on the example field") {
    Example3dParams p;
    p.beta = 0.2;
    p.gamma = 0.1;
    const auto field = example_field_3d(p);
    EmOptions em;
    em.cap_b = 0.05;
    const Vec x0 = v({0.3, 0.2, 0.0});
    const double fine = 0.02 / 16;
    const int n = 300;
    std::vector<double> err(4, 0.0);
    for (int i = 0; i < n; ++i) {
        const auto path = sample_wiener(12, 1.0, fine, 9, i);
        std::vector<Vec> ends;
        for (int f : {16, 8, 4, 2, 1}) ends.push_back(euler_maruyama(field, path.coarsened(f), 0.0, x0, em).terminal());
        for (int k = 0; k < 4; ++k) err[k] += (ends[k] - ends[k + 1]).squaredNorm() / n;
    }
    // slope of log rms difference against log dt
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (int k = 0; k < 4; ++k) {
        const double x = std::log(0.02 / (1 << k)), y = 0.5 * std::log(err[k]);
        sx += x, sy += y, sxx += x * x, sxy += x * y;
    }
    const double slope = (4 * sxy - sx * sy) / (4 * sxx - sx * sx);
    CHECK(slope > 0.3);
    CHECK(slope < 0.8);
}

TEST_CASE("parallel paths are independent of the thread count") {
    auto run = [](int threads) {
        return parallel_paths(257, 2, threads, [](long i, double* out) {
            const auto p = sample_wiener(1, 1.0, 0.01, 4, static_cast<std::uint64_t>(i));
            out[0] = p.terminal()[0];
            out[1] = static_cast<double>(i);
        });
    };
    const Mat a = run(1), b = run(3);
    CHECK(a == b);
    CHECK(a(200, 1) == 200.0);
}

TEST_CASE("Krylov ratio: f = 1 and homogeneity") {
    const auto field = unit_diffusion(2, 2);
    KrylovSetup s;
    s.x = Vec::Zero(2);
    s.T = 0.8;
    s.dt = 0.01;
    s.n_paths = 200;
    for (int m : {1, 2}) {
        s.m = m;
        const auto k = krylov_ratio(field, [](double, const Vec&) { return 1.0; }, 2.0, s);
        CHECK(k.numerator == doctest::Approx(std::pow(0.8, m)).epsilon(1e-12));
        CHECK(k.ratio == doctest::Approx(std::pow(0.8, m) / std::pow(2.0, m)).epsilon(1e-12));
    }
    ScalarField f;
    f.d = 2;
    f.fn = [](double t, const Vec& x) { return (1 + t) * std::exp(-x.squaredNorm()); };
    MixedNormSpec spec;
    spec.p = 2.5;
    spec.q = 5;
    spec.cyl = {0, 0.8, Vec::Zero(2), 1.0};
    s.m = 2;
    const auto k1 = krylov_ratio(field, f, spec, s);
    const auto k7 = krylov_ratio(field, f.scaled(7.0), spec, s);
    CHECK(k7.ratio == doctest::Approx(k1.ratio).epsilon(1e-10));
    CHECK(k1.std_error > 0);
}

TEST_CASE("Girsanov weights") {
    Vec c(2);
    c << 0.6, -0.3;
    const auto field = constant_drift(c, 2);
    const auto path = sample_wiener(2, 1.0, 0.01, 3, 0);
    const auto sol = euler_maruyama(field, path, 0, Vec::Zero(2));
    const auto full = girsanov_weights(field, sol, path, 1.0);
    CHECK(full.weight == 1.0);
    CHECK(full.gamma.cwiseAbs().maxCoeff() == 0.0);
    const auto g0 = girsanov_weights(field, sol, path, 0.0);
    CHECK(g0.phi == doctest::Approx(-c.dot(path.terminal()) - 0.5 * c.squaredNorm()).epsilon(1e-10));
    CHECK(g0.envelope_ok);
    for (Eigen::Index k = 0; k < g0.gamma.cols(); ++k) CHECK(g0.gamma.col(k).norm() <= g0.envelope[k] + 1e-12);

    std::vector<double> w(10000);
    for (int i = 0; i < 10000; ++i) {
        const auto p = sample_wiener(2, 1.0, 0.01, 8, i);
        w[i] = girsanov_weights(field, euler_maruyama(field, p, 0, Vec::Zero(2)), p, 0.0).weight;
    }
    const auto m = mean_estimate(w);
    CHECK(std::abs(m.value - 1) <= 3 * m.std_error);
}

TEST_CASE("strongness gap under unit diffusion") {
    SpaceTimeGrid g;
    g.d = 1;
    g.L = 10;
    g.h = 0.05;
    ChaosOptions o;
    o.m_max = 1;
    o.n_t = 20;
    o.substeps = 2;
    const auto field = unit_diffusion(1, 1);
    const auto fx = terminal_function("x1", 10);
    const auto kx = compute_kernels(field, fx, 1.0, g, o);
    const auto gx = strongness_gap(field, fx, kx, 500, 1e-3, 2);
    CHECK(gx.mc_gap[1].value < 1e-6);
    CHECK(std::abs(gx.tail[1]) < 1e-8);

    const auto f2 = terminal_function("x1_squared", 10);
    o.m_max = 2;
    const auto k2 = compute_kernels(field, f2, 1.0, g, o);
    const auto g2 = strongness_gap(field, f2, k2, 4000, 1e-3, 3);
    CHECK(std::abs(g2.mc_gap[1].value - 2.0) <= 3 * g2.mc_gap[1].std_error + 0.05 * 2);
    CHECK(std::abs(g2.mc_gap[1].value - g2.tail[1]) <= 3 * g2.mc_gap[1].std_error + 0.1);
    for (size_t m = 1; m < g2.mc_gap.size(); ++m) CHECK(g2.mc_gap[m].value <= g2.mc_gap[m - 1].value + 1e-12);
}

TEST_CASE("moment bound of a constant kernel") {
    const auto iso = moment_bound_check(1.0, 1, 1, 1.0, 0.01, 10000, 6);
    CHECK(std::abs(iso.value - 1) <= 3 * iso.std_error);
    const auto r = moment_bound_check(1.0, 1, 2, 1.0, 0.01, 10000, 6);
    CHECK(std::abs(r.value - 3) <= 3 * r.std_error);
    const auto r5 = moment_bound_check(5.0, 1, 2, 1.0, 0.01, 10000, 6);
    CHECK(std::abs(r5.value / r.value - 1) <= 1e-12);
    CHECK_THROWS_AS(moment_bound_check(1.0, 0, 2, 1.0, 0.01, 10, 6), InvalidInput);
}

TEST_CASE("JSON-lines record") {
    const auto s = jsonl_record("mean_x1", {0.25, 0.01, 100}, 0.01, 7);
    const auto j = nlohmann::json::parse(s);
    CHECK(j["estimator"] == "mean_x1");
    CHECK(j["value"] == 0.25);
    CHECK(j["std_error"] == 0.01);
    CHECK(j["n_paths"] == 100);
    CHECK(j["dt"] == 0.01);
    CHECK(j["seed"] == 7);
}
