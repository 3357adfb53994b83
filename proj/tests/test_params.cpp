#include "doctest.h"

#include "strongsde/params.hpp"

#include <algorithm>
#include <cmath>

using namespace strongsde::params;

namespace {

// Independent restatement of the exponent system, strict/non-strict as written.
bool beta_ok(double b, double p0, double q0, double P, double Q) {
    return b > 1 && b < 2 && b < std::min(P, Q) && b * p0 <= P && b * q0 <= Q && 2 * (b - 1) * p0 < std::min(P, Q);
}

bool profile_ok(const ExponentProfile& p) {
    const double d = p.d, lhs = d / p.p0 + 2 / p.q0;
    return p.p_dsigma > 2 && p.p_dsigma <= d && p.p_b > std::max(2.0, d / 2) && p.p_b <= d && p.p0 > 2 &&
           p.p0 < p.p_b && p.q0 > 1 && lhs < 2 && p.alpha > 1 && lhs < 2 / p.alpha && p.p0 / p.alpha > 1 &&
           p.p0 / p.alpha < p.p_b && beta_ok(p.beta0, p.p0, p.q0, p.frp_b, p.frq_b) &&
           beta_ok(p.beta0p, p.p0, p.q0, p.frp_b, p.frq_b) && p.beta0p < p.beta0 &&
           std::abs(p.sfp - p.frp_b / p.beta0) < 1e-12 && std::abs(p.sfq - p.frq_b / p.beta0) < 1e-12 &&
           d / p.sfp + 2 / p.sfq >= p.beta0;
}

// Lattice search (step 1e-3 in p0 and beta0, coarser in q0) for any feasible
// (p0, q0, beta0) with sfp/sfq condition.
bool lattice_feasible(int d, double p_b, double P, double Q) {
    for (double p0 = 2.001; p0 < p_b; p0 += 1e-3)
        for (double q0 = 1.01; q0 < 60; q0 *= 1.02) {
            if (d / p0 + 2 / q0 >= 2) continue;
            for (double b = 1.001; b < 2; b += 1e-3) {
                if (!beta_ok(b, p0, q0, P, Q)) continue;
                if (d * b / P + 2 * b / Q >= b) return true;
            }
        }
    return false;
}

// beta0-feasible set for fixed p0, q0 on the lattice.
std::vector<int> beta_lattice(double p0, double q0, double P, double Q) {
    std::vector<int> out;
    for (int i = 1; i < 1000; ++i)
        if (beta_ok(1 + i * 1e-3, p0, q0, P, Q)) out.push_back(i);
    return out;
}

}  // namespace

TEST_CASE("classify_lps labels") {
    auto a = classify_lps(3, 12.0, 12.0);
    CHECK(a.label == Regime::Subcritical);
    CHECK(a.lhs == doctest::Approx(5.0 / 12));
    auto b = classify_lps(3, 6.0, 4.0);
    CHECK(b.label == Regime::Critical);
    CHECK(b.lhs == 1.0);
    auto c = classify_lps(3, 3.0, 4.0);
    CHECK(c.label == Regime::Supercritical);
    CHECK(c.lhs == doctest::Approx(1.5));
    // exact rationals: 3/(18/5) + 2/12 = 5/6 + 1/6
    CHECK(classify_lps(3, Rational{18, 5}, Rational{12, 1}).label == Regime::Critical);
    CHECK_THROWS_AS(classify_lps(3, 0.5, 4.0), InvalidInput);
    CHECK_THROWS_AS(classify_lps(3, std::nan(""), 4.0), InvalidInput);
}

TEST_CASE("classify_lps scales lhs by 1/lambda") {
    for (double lam : {0.5, 2.0, 3.7}) {
        const auto base = classify_lps(3, 6.0, 4.0);
        CHECK(classify_lps(3, 6.0 * lam, 4.0 * lam).lhs == doctest::Approx(base.lhs / lam));
    }
}

TEST_CASE("solve_exponents midpoint profile") {
    const auto r = solve_exponents(3, 3.0, 3.0, 3.5, 7.0);
    const auto& p = r.profile;
    CHECK(p.p0 == doctest::Approx(2.5));
    CHECK(p.q0 > 2.5);
    CHECK(p.alpha > 1.0);
    CHECK(p.alpha < 2.0 / (3.0 / p.p0 + 2.0 / p.q0));
    CHECK(3.0 / p.p0 + 2.0 / p.q0 < 2.0);
    CHECK(profile_ok(p));
    CHECK(violated_constraints(p).empty());
    CHECK(lattice_feasible(3, 3.0, 3.5, 7.0));
    REQUIRE(r.trace.size() >= 5);
    CHECK(r.trace[0].name == "p0");
    for (const auto& s : r.trace) CHECK(s.value == doctest::Approx(0.5 * (s.lo + s.hi)));
}

TEST_CASE("solve_exponents infeasible system names a constraint") {
    CHECK_FALSE(lattice_feasible(3, 2.2, 2.05, 2.05));
    try {
        solve_exponents(3, 2.2, 2.2, 2.05, 2.05);
        FAIL("expected Infeasible");
    } catch (const Infeasible& e) {
        CHECK_FALSE(e.constraint().empty());
    }
}

TEST_CASE("solve_exponents rejects inputs outside the declared ranges") {
    CHECK_THROWS_AS(solve_exponents(3, 3.5, 3.0, 9, 9), InvalidInput);
    CHECK_THROWS_AS(solve_exponents(3, 3.0, 2.0, 9, 9), InvalidInput);
    CHECK_THROWS_AS(solve_exponents(2, 2.0, 2.0, 9, 9), InvalidInput);
}

TEST_CASE("independent checker agrees on a sweep of solvable inputs") {
    const double pairs[][2] = {{3.5, 7.0}, {4.0, 4.0}, {5.0, 5.0}, {3.3, 7.0}, {6.0, 4.0}};
    for (double pb : {2.2, 2.5, 3.0})
        for (const auto& pq : pairs) {
            const auto p = solve_exponents(3, pb, 2.5, pq[0], pq[1]).profile;
            CHECK(profile_ok(p));
        }
}

TEST_CASE("d/frp_b + 2/frq_b < 1 is outside the admissible set") {
    // d/sfp + 2/sfq = beta0 (d/frp_b + 2/frq_b) >= beta0 forces the sum >= 1
    CHECK_FALSE(lattice_feasible(3, 3.0, 9.0, 9.0));
    CHECK_THROWS_AS(solve_exponents(3, 3.0, 3.0, 9.0, 9.0), InvalidInput);
}

TEST_CASE("beta0 feasible set grows with (frp_b, frq_b)") {
    const double p0 = 2.5, q0 = 5.0;
    const auto small = beta_lattice(p0, q0, 5.0, 9.0);
    const auto big = beta_lattice(p0, q0, 6.0, 11.0);
    CHECK_FALSE(small.empty());
    CHECK(std::includes(big.begin(), big.end(), small.begin(), small.end()));
    for (int i : small) CHECK(beta_admissible(1 + i * 1e-3, p0, q0, 5.0, 9.0));
}

TEST_CASE("uniqueness hypothesis and norm order") {
    auto a = check_uniqueness_hypothesis(3, 4, 4);
    CHECK(a.holds);
    CHECK(a.lhs == doctest::Approx(1.0));
    // 3/3.5 + 1/8 = 0.982...
    CHECK(check_uniqueness_hypothesis(3, 3.5, 8).holds);
    CHECK_FALSE(check_uniqueness_hypothesis(3, 3.0, 8).holds);
    // 3/3.5 + 1/7 = 1: on the window d/frp + 1/frq = 1 with d+1 < frq < 2(d+1)
    auto b = check_uniqueness_hypothesis(3, 3.5, 7);
    CHECK(b.holds);
    CHECK(b.order == NormOrder::TimeFirst);
    // 3/3.3 + 1/7 > 1, so (3.3, 7) lies just outside the window; the order flag is still time-first
    auto c = check_uniqueness_hypothesis(3, 3.3, 7);
    CHECK_FALSE(c.holds);
    CHECK(c.lhs == doctest::Approx(3 / 3.3 + 1.0 / 7));
    CHECK(c.order == NormOrder::TimeFirst);
    CHECK(check_uniqueness_hypothesis(3, 7, 3.3).order == NormOrder::SpaceFirst);
}
