#include "doctest.h"

#include "strongsde/field.hpp"
#include "strongsde/norms.hpp"
#include "strongsde/smoothing.hpp"

#include <cmath>
#include <random>

using namespace strongsde;

namespace {

Vec v3(double a, double b, double c) {
    Vec x(3);
    x << a, b, c;
    return x;
}

// radial quadrature oracle for the average of |x|^{-q} over B_rho(0) in d = 3
double radial_avg(double q, double rho) { return 3.0 / (3.0 - q) * std::pow(rho, -q); }

}  // namespace

TEST_CASE("example field block structure") {
    Example3dParams p;
    p.alpha = 1.0;
    p.beta = 2.0;
    const auto f = example_field_3d(p);
    const Mat s = f.sigma(0.0, v3(1, 0, 0));
    REQUIRE(s.rows() == 3);
    REQUIRE(s.cols() == 12);
    CHECK(s(0, 3) == 2.0);
    CHECK(s(1, 3) == 0.0);
    CHECK(s(2, 3) == 0.0);
    CHECK(s(0, 4) == 0.0);
    CHECK(s(0, 5) == 0.0);
    const Mat s0 = f.sigma(0.0, Vec::Zero(3));
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) CHECK(s0(i, 3 + 3 * i + j) == doctest::Approx(2.0 / std::sqrt(3.0)));
}

TEST_CASE("a = (alpha^2 + beta^2) I by brute-force multiplication") {
    Example3dParams p;
    p.alpha = 1.3;
    p.beta = 0.7;
    p.gamma = 0.5;
    const auto f = example_field_3d(p);
    std::mt19937_64 gen(5);
    std::uniform_real_distribution<double> U(-2, 2);
    const double s = 1.3 * 1.3 + 0.7 * 0.7;
    double worst = 0;
    for (int n = 0; n < 1000; ++n) {
        const Vec x = n == 0 ? Vec::Zero(3) : v3(U(gen), U(gen), U(gen));
        const Mat sg = f.sigma(0.3, x);
        Mat a = Mat::Zero(3, 3);
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j)
                for (int k = 0; k < 12; ++k) a(i, j) += sg(i, k) * sg(j, k);
        worst = std::max(worst, (a - s * Mat::Identity(3, 3)).cwiseAbs().maxCoeff() / s);
        const auto ad = assemble_a(f, 0.3, x);
        CHECK_FALSE(ad.violation.has_value());
    }
    CHECK(worst <= 1e-12);
}

TEST_CASE("assemble_a identity, 1.25 I and degenerate band violation") {
    const auto u = unit_diffusion(3, 5);
    const auto a = assemble_a(u, 0, v3(0.1, 0.2, 0.3));
    CHECK((a.a - Mat::Identity(3, 3)).norm() == 0.0);
    CHECK(a.eigenvalues.minCoeff() == doctest::Approx(1.0));
    Example3dParams p;
    p.beta = 0.5;
    const auto e = example_field_3d(p);
    CHECK((assemble_a(e, 0, v3(0.4, -1, 2)).a - 1.25 * Mat::Identity(3, 3)).norm() < 1e-14);
    const auto z = scaled_diffusion(2, 2, 0.0);
    const auto bad = assemble_a(z, 0, Vec::Zero(2), 0.5, 2.0);
    REQUIRE(bad.violation.has_value());
    CHECK(bad.violation->eigenvalue == 0.0);
}

TEST_CASE("sqrt_spd") {
    CHECK((sqrt_spd(Mat::Identity(3, 3)) - Mat::Identity(3, 3)).norm() < 1e-14);
    Mat d = Mat::Identity(3, 3);
    d(0, 0) = 4;
    Mat want = Mat::Identity(3, 3);
    want(0, 0) = 2;
    CHECK((sqrt_spd(d) - want).norm() < 1e-14);
    std::mt19937_64 gen(9);
    std::uniform_real_distribution<double> U(0.5, 2.0);
    for (int n = 0; n < 20; ++n) {
        const Mat q = Eigen::HouseholderQR<Mat>(Mat::Random(4, 4)).householderQ();
        Vec ev(4);
        for (int i = 0; i < 4; ++i) ev[i] = U(gen);
        const Mat a = q * ev.asDiagonal() * q.transpose();
        const Mat s = sqrt_spd(a);
        CHECK((s * s - a).norm() <= 1e-10 * a.norm());
    }
}

TEST_CASE("morrey_hat of |x|^-1 and of a constant") {
    ScalarField f;
    f.d = 3;
    f.fn = [](double, const Vec& x) { return 1.0 / x.norm(); };
    f.space_sing = SpatialSingularity{Vec::Zero(3), 1.0};
    const auto r = morrey_hat(f, 2.0, 1.0, 0, 0);
    CHECK_FALSE(r.divergent);
    CHECK(std::abs(r.value / std::sqrt(3.0) - 1) < 0.02);
    // closed form average 3 rho^-2 at every radius
    CHECK(ball_average(f, 2.0, 0, Vec::Zero(3), 0.25, 48, 12) == doctest::Approx(radial_avg(2, 0.25)).epsilon(0.02));

    ScalarField c;
    c.d = 3;
    c.fn = [](double, const Vec&) { return 0.7; };
    const auto rc = morrey_hat(c, 2.5, 0.8, 0, 0);
    CHECK(rc.value == doctest::Approx(0.7 * 0.8).epsilon(1e-9));
    CHECK(rc.worst_radius == doctest::Approx(0.8));
}

TEST_CASE("Morrey part of the parabolic example obeys N r^{d - p}") {
    // g_M = f 1_{|x| <= sqrt t}; at fixed t the ball integral of |g_M|^p scales like r^{d-p} for small r
    const int d = 3;
    const double p = 2.0;
    const auto f = parabolic_scaling_example(d);
    ScalarField gm;
    gm.d = d;
    gm.fn = [f](double t, const Vec& x) { return x.norm() <= std::sqrt(t) ? f(t, x) : 0.0; };
    gm.space_sing = SpatialSingularity{Vec::Zero(d), 1.0 - 1.0 / (d + 1)};
    std::vector<double> scaled;
    for (double r : {0.05, 0.1, 0.2}) {
        const double integral = ball_average(gm, p, 0.5, Vec::Zero(d), r, 64, 12) * unit_ball_volume(d) * std::pow(r, d);
        scaled.push_back(integral / std::pow(r, d - p * (1.0 - 1.0 / (d + 1))));
    }
    CHECK(scaled[0] == doctest::Approx(scaled[2]).epsilon(0.02));
    CHECK(scaled[1] == doctest::Approx(scaled[2]).epsilon(0.02));
}

TEST_CASE("mixed norm: normalization and Fubini") {
    ScalarField one;
    one.d = 3;
    one.fn = [](double, const Vec&) { return 1.0; };
    MixedNormSpec s;
    s.p = 3;
    s.q = 5;
    s.cyl = {0, 1, Vec::Zero(3), 1};
    s.normalized = true;
    CHECK(mixed_norm(one, s).value == doctest::Approx(1.0).epsilon(1e-6));

    ScalarField sep;
    sep.d = 3;
    sep.fn = [](double t, const Vec& x) { return (1 + t * t) * std::exp(-x.squaredNorm()); };
    s.normalized = false;
    s.p = 2;
    s.q = 3;
    s.cyl = {0, 1, Vec::Zero(3), 1};
    // ||1 + t^2||_{L_3(0,1)} and ||exp(-|x|^2)||_{L_2(B_1)} by 1d quadrature
    double gt = 0, hx = 0;
    const int n = 20000;
    for (int i = 0; i < n; ++i) {
        const double t = (i + 0.5) / n;
        gt += std::pow(1 + t * t, 3) / n;
        hx += 4 * M_PI * t * t * std::exp(-2 * t * t) / n;
    }
    const double want = std::cbrt(gt) * std::sqrt(hx);
    CHECK(mixed_norm(sep, s).value == doctest::Approx(want).epsilon(2e-3));
    s.order = NormOrder::TimeFirst;
    CHECK(mixed_norm(sep, s).value == doctest::Approx(want).epsilon(2e-3));
}

TEST_CASE("hat_b: zero, homogeneity and the Morrey bound") {
    ScalarField zero;
    zero.d = 3;
    zero.fn = [](double, const Vec&) { return 0.0; };
    CHECK(hat_b(zero, 2.5, 7, 1.0, NormOrder::SpaceFirst).value == 0.0);

    auto field_for = [](double gamma) {
        Example3dParams p;
        p.gamma = gamma;
        return example_field_3d(p);
    };
    CylinderPlan plan;
    plan.levels = 3;
    const auto h1 = hat_b(field_for(1.0).b_norm(), 2.5, 7, 1.0, NormOrder::SpaceFirst, plan);
    const auto h3 = hat_b(field_for(3.0).b_norm(), 2.5, 7, 1.0, NormOrder::SpaceFirst, plan);
    CHECK_FALSE(h1.divergent);
    CHECK(std::abs(h3.value / h1.value / 3.0 - 1.0) <= 1e-12);

    // time-independent b, b_B = 0: r ||b||^ <= hat b_M with p = frp
    BallPlan bp;
    bp.levels = 3;
    const auto m = morrey_hat(field_for(1.0).b_M_norm(), 2.5, 1.0, 0, 0, bp);
    CHECK(h1.value <= m.value * (1 + 1e-3));
    // frp = 3.5 > d: |x|^-1 is not in L_3.5 near the origin
    CHECK(hat_b(field_for(1.0).b_norm(), 3.5, 7, 1.0, NormOrder::TimeFirst, plan).divergent);
}

TEST_CASE("beta modulus") {
    const auto c = Envelope::constant(2.0, 1.0);
    for (double t : {0.1, 0.5, 1.0, 3.0}) CHECK(beta_modulus(c, t, 0, 1, 0.01) == doctest::Approx(4 * std::min(t, 1.0)));
    const auto ind = Envelope::constant(1.0, 1.0);
    CHECK(beta_modulus(ind, 0.3, -1, 2, 0.01) == doctest::Approx(0.3));
    CHECK(beta_modulus(ind, 5.0, -1, 2, 0.01) == doctest::Approx(1.0));

    // kappa(t) t^{-1/2}: squared integral is sum ln(1 + a_n)
    const int n0 = kappa_min_n0(), n_max = n0 + 200;
    double sum = 0;
    for (int n = n0; n <= n_max; ++n) {
        const double a = 1.0 / (n * std::log(n) * std::log(n));
        sum += std::log1p(a);
    }
    const auto env = kappa_envelope(n0, n_max);
    CHECK(integrate_squared(env, 0, 1) == doctest::Approx(sum).epsilon(0.01));
    CHECK(beta_modulus(env, 1.0, 0, 1, 1e-3) == doctest::Approx(sum).epsilon(0.01));
}

TEST_CASE("threshold split") {
    const VectorFn zero = [](double, const Vec&, Vec& out) { out = Vec::Zero(3); };
    ScalarField zabs;
    zabs.d = 3;
    zabs.fn = [](double, const Vec&) { return 0.0; };
    const auto s0 = split_by_threshold(zero, zabs, 4, 3, 1.0, 1.0, 0, 1);
    Vec out;
    s0.b_M(0.5, v3(0.1, 0, 0), out);
    CHECK(out.norm() == 0.0);

    // bounded b: lambda above sup |b| sends everything to b_B
    const VectorFn bnd = [](double, const Vec& x, Vec& out) { out = (x.norm() < 1 ? 0.5 : 0.0) * Vec::Ones(3); };
    ScalarField babs;
    babs.d = 3;
    babs.fn = [](double, const Vec& x) { return x.norm() < 1 ? 0.5 * std::sqrt(3.0) : 0.0; };
    const auto s1 = split_by_threshold(bnd, babs, 4, 3, 100.0, 1.0, 0, 1);
    s1.b_M(0.5, v3(0.2, 0.1, 0), out);
    CHECK(out.norm() == 0.0);
    s1.b_B(0.5, v3(0.2, 0.1, 0), out);
    CHECK(out.norm() == doctest::Approx(0.5 * std::sqrt(3.0)));

    // b = |x|^{-1/2} 1_{|x|<=1}, p = 4: avg_B |b_M|^3 <= N_hat^{-1} / (omega_3 rho^3)
    const VectorFn sing = [](double, const Vec& x, Vec& out) {
        const double r = x.norm();
        out = Vec::Zero(3);
        if (r > 0 && r <= 1) out[0] = std::pow(r, -0.5);
    };
    ScalarField sabs;
    sabs.d = 3;
    sabs.fn = [](double, const Vec& x) {
        const double r = x.norm();
        return (r > 0 && r <= 1) ? std::pow(r, -0.5) : 0.0;
    };
    sabs.space_sing = SpatialSingularity{Vec::Zero(3), 0.5};
    const double N_hat = 0.02;
    const auto s2 = split_by_threshold(sing, sabs, 4, 3, N_hat, 1.0, 0, 1);
    CHECK(s2.lambda.front() == doctest::Approx(N_hat * 4 * M_PI).epsilon(0.01));
    ScalarField mabs;
    mabs.d = 3;
    mabs.fn = [&s2](double t, const Vec& x) {
        Vec o;
        s2.b_M(t, x, o);
        return o.norm();
    };
    mabs.space_sing = sabs.space_sing;
    std::mt19937_64 gen(3);
    std::uniform_real_distribution<double> U(-1, 1), R(-4, 0);
    double worst = 0;
    for (int n = 0; n < 100; ++n) {
        const double rho = std::pow(10.0, R(gen));
        const Vec c = rho * v3(U(gen), U(gen), U(gen));
        const double avg = ball_average(mabs, 3, 0.5, c, rho, 64, 12);
        worst = std::max(worst, avg / (1.0 / (N_hat * unit_ball_volume(3) * rho * rho * rho)));
    }
    CHECK(worst <= 1.02);
}

TEST_CASE("mollify: constants, monotone hat, time jump") {
    Vec c(2);
    c << 0.3, -0.2;
    const auto f = constant_drift(c, 2);
    const auto m = mollify(f, 8);
    const Vec x = Vec::Constant(2, 0.4);
    CHECK((m.b(0.5, x) - c).norm() < 1e-12);
    CHECK((m.sigma(0.5, x) - f.sigma(0.5, x)).norm() < 1e-12);

    auto jump = unit_diffusion(1, 1);
    jump.b_B_fn = [](double t, const Vec&, Vec& out) { out = Vec::Constant(1, t < 0.5 ? 1.0 : 0.0); };
    jump.b_bar = {[](double t) { return t < 0.5 ? 1.0 : 0.0; }, {0.5}};
    for (int n : {4, 16, 64}) {
        const auto jm = mollify(jump, n);
        const Vec z = Vec::Zero(1);
        if (n > 4) {
            CHECK(jm.b(0.5 - 2.0 / n, z)[0] == doctest::Approx(1.0));
            CHECK(jm.b(0.5 + 2.0 / n, z)[0] == doctest::Approx(0.0));
        }
        const double mid = jm.b(0.5, z)[0];
        CHECK(mid > 0.0);
        CHECK(mid < 1.0);
        // continuity across the jump: small steps give small changes
        double jmp = 0;
        for (int k = -100; k < 100; ++k)
            jmp = std::max(jmp, std::abs(jm.b(0.5 + (k + 1) * 0.01 / n, z)[0] - jm.b(0.5 + k * 0.01 / n, z)[0]));
        CHECK(jmp < 0.1);
    }
    // pointwise limit away from the jump
    std::mt19937_64 gen(1);
    std::uniform_real_distribution<double> U(0, 1);
    const auto j64 = mollify(jump, 64);
    int bad = 0;
    for (int i = 0; i < 1000; ++i) {
        const double t = U(gen);
        // the drift also switches off outside [0, t_max]
        if (std::abs(t - 0.5) < 2.0 / 64 || t < 2.0 / 64 || t > 1 - 2.0 / 64) continue;
        if (std::abs(j64.b(t, Vec::Zero(1))[0] - (t < 0.5 ? 1.0 : 0.0)) > 1e-12) ++bad;
    }
    CHECK(bad == 0);
}

TEST_CASE("truncate_sigma extremes and band") {
    Example3dParams p;
    p.beta = 0.1;
    auto f = example_field_3d(p);
    Mat kappa = Mat::Zero(3, 12);
    kappa.leftCols(3) = Mat::Identity(3, 3);
    std::vector<Sample> samples;
    std::mt19937_64 gen(2);
    std::uniform_real_distribution<double> U(-1, 1);
    for (int i = 0; i < 30; ++i) samples.push_back({0.5 * (U(gen) + 1), v3(U(gen), U(gen), U(gen))});
    samples.push_back({0.2, Vec::Zero(3)});

    const auto keep = truncate_sigma(f, 16, std::numeric_limits<double>::infinity(), kappa, samples);
    const auto moll = mollify(f, 16);
    for (const auto& [t, x] : samples) CHECK((keep.field.sigma(t, x) - moll.sigma(t, x)).norm() < 1e-12);
    CHECK(keep.band.ok);

    f.dsigma_bar = Envelope::constant(1.0, 1.0);
    const auto all = truncate_sigma(f, 16, 0.0, kappa, samples);
    for (const auto& [t, x] : samples) {
        CHECK((all.field.sigma(t, x) - kappa).norm() == 0.0);
        CHECK((assemble_a(all.field, t, x).a - Mat::Identity(3, 3)).norm() == 0.0);
    }
    for (int n : {8, 32})
        for (double m : {1.0, 4.0}) CHECK(truncate_sigma(example_field_3d(p), n, m, kappa, samples).band.ok);
}
