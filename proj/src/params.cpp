#include "strongsde/params.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace strongsde::params {
namespace {

void require_finite(double v, const char* name) {
    if (!std::isfinite(v)) throw InvalidInput(std::string(name) + " must be finite");
}

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(10);
    os << v;
    return os.str();
}

// Open window (lo, hi) or half-open (lo, hi]; empty when it cannot contain a
// point at least `kStrictMargin` away from an open end.
struct Window {
    double lo;
    double hi;
    bool hi_inclusive = false;

    bool empty() const { return hi_inclusive ? hi <= lo + kStrictMargin : hi <= lo + 2 * kStrictMargin; }
    double mid() const { return 0.5 * (lo + hi); }
};

}  // namespace

const char* to_string(Regime r) {
    switch (r) {
        case Regime::Subcritical: return "subcritical";
        case Regime::Critical: return "critical";
        case Regime::Supercritical: return "supercritical";
    }
    return "?";
}

const char* to_string(NormOrder o) {
    return o == NormOrder::SpaceFirst ? "space-first" : "time-first";
}

RegimeLabel classify_lps(int d, double p, double q) {
    require_finite(p, "p");
    require_finite(q, "q");
    if (d < 1) throw InvalidInput("d must be >= 1");
    if (p < 1.0 || q < 1.0) throw InvalidInput("exponents p, q must be >= 1");
    RegimeLabel out;
    out.lhs = d / p + 2.0 / q;
    out.label = out.lhs < 1.0 ? Regime::Subcritical
              : out.lhs == 1.0 ? Regime::Critical
                               : Regime::Supercritical;
    return out;
}

RegimeLabel classify_lps(int d, Rational p, Rational q) {
    if (d < 1) throw InvalidInput("d must be >= 1");
    if (p.den <= 0 || q.den <= 0 || p.num <= 0 || q.num <= 0)
        throw InvalidInput("rational exponents need positive numerator and denominator");
    if (p.num < p.den || q.num < q.den) throw InvalidInput("exponents p, q must be >= 1");
    // d/p + 2/q = (d*p.den*q.num + 2*q.den*p.num) / (p.num*q.num)
    using wide = __int128;
    const wide num = wide(d) * p.den * q.num + wide(2) * q.den * p.num;
    const wide den = wide(p.num) * q.num;
    RegimeLabel out;
    out.lhs = static_cast<double>(d) * p.den / p.num + 2.0 * q.den / q.num;
    out.label = num < den ? Regime::Subcritical : num == den ? Regime::Critical : Regime::Supercritical;
    return out;
}

UniquenessCheck check_uniqueness_hypothesis(int d, double frp_b, double frq_b) {
    require_finite(frp_b, "frp_b");
    require_finite(frq_b, "frq_b");
    if (d < 1) throw InvalidInput("d must be >= 1");
    if (frp_b < 1.0 || frq_b < 1.0) throw InvalidInput("frp_b, frq_b must be >= 1");
    UniquenessCheck out;
    out.lhs = d / frp_b + 1.0 / frq_b;
    out.holds = out.lhs <= 1.0 + 1e-15;
    // With frp_b == frq_b both orders coincide; space-first is reported.
    out.order = frp_b <= frq_b && frp_b != frq_b ? NormOrder::TimeFirst : NormOrder::SpaceFirst;
    return out;
}

bool beta_admissible(double beta, double p0, double q0, double frp_b, double frq_b, double margin) {
    const double m = std::min(frp_b, frq_b);
    return beta > 1.0 + margin && beta < 2.0 - margin && beta < m - margin
        && beta * p0 <= frp_b && beta * q0 <= frq_b
        && 2.0 * (beta - 1.0) * p0 < m - margin;
}

SolveResult solve_exponents(int d, double p_b, double p_dsigma, double frp_b, double frq_b) {
    for (auto [v, n] : {std::pair{p_b, "p_b"}, {p_dsigma, "p_dsigma"}, {frp_b, "frp_b"}, {frq_b, "frq_b"}})
        require_finite(v, n);
    if (d < 3) throw InvalidInput("d must be >= 3");
    const double dd = d;
    if (!(p_dsigma > 2.0 && p_dsigma <= dd))
        throw InvalidInput("p_dsigma must lie in (2, d], got " + fmt(p_dsigma));
    if (!(p_b > std::max(2.0, dd / 2) && p_b <= dd))
        throw InvalidInput("p_b must lie in (2 v d/2, d], got " + fmt(p_b));
    if (!(frp_b > 1.0 && frq_b > 1.0)) throw InvalidInput("frp_b, frq_b must exceed 1");
    if (dd / frp_b + 2.0 / frq_b < 1.0 - 1e-15)
        throw InvalidInput("d/frp_b + 2/frq_b >= 1 is required, got " + fmt(dd / frp_b + 2.0 / frq_b));

    SolveResult res;
    auto& pr = res.profile;
    pr.d = d;
    pr.d1 = d;
    pr.p_b = p_b;
    pr.p_dsigma = p_dsigma;
    pr.frp_b = frp_b;
    pr.frq_b = frq_b;

    auto fail_if_empty = [](const Window& w, const std::string& constraint) {
        if (w.empty())
            throw Infeasible(constraint, "window (" + fmt(w.lo) + ", " + fmt(w.hi) + ") is empty");
    };

    // p0: projection of the full system onto the p0 axis, tightened one
    // constraint at a time so the first one that empties the window is named.
    Window p0w{2.0, p_b};
    fail_if_empty(p0w, "p0 in (2, p_b)");
    p0w.lo = std::max(p0w.lo, dd / 2.0);
    fail_if_empty(p0w, "d/p0 + 2/q0 < 2");
    p0w.hi = std::min(p0w.hi, frp_b);
    fail_if_empty(p0w, "beta0*p0 <= frp_b");
    p0w.lo = std::max(p0w.lo, dd / (2.0 - 2.0 / frq_b));
    fail_if_empty(p0w, "beta0*q0 <= frq_b with d/p0 + 2/q0 < 2");
    pr.p0 = p0w.mid();
    res.trace.push_back({"p0", p0w.lo, p0w.hi, false, pr.p0});

    Window q0w{std::max(1.0, 2.0 / (2.0 - dd / pr.p0)), frq_b};
    fail_if_empty(q0w, "q0 in (2/(2 - d/p0), frq_b)");
    pr.q0 = q0w.mid();
    res.trace.push_back({"q0", q0w.lo, q0w.hi, false, pr.q0});

    const double lhs0 = dd / pr.p0 + 2.0 / pr.q0;
    Window aw{std::max(1.0, pr.p0 / p_b), std::min(2.0 / lhs0, pr.p0)};
    fail_if_empty(aw, "d/p0 + 2/q0 < 2/alpha, 1 < p0/alpha < p_b");
    pr.alpha = aw.mid();
    res.trace.push_back({"alpha", aw.lo, aw.hi, false, pr.alpha});

    const double m = std::min(frp_b, frq_b);
    const double closed_hi = std::min(frp_b / pr.p0, frq_b / pr.q0);
    const double open_hi = std::min({2.0, m, 1.0 + m / (2.0 * pr.p0)});
    Window bw{1.0, std::min(closed_hi, open_hi), closed_hi < open_hi};
    fail_if_empty(bw, "beta0 Morrey-scale system");
    pr.beta0 = bw.mid();
    res.trace.push_back({"beta0", bw.lo, bw.hi, bw.hi_inclusive, pr.beta0});

    Window bpw{1.0, pr.beta0};
    fail_if_empty(bpw, "beta0' < beta0");
    pr.beta0p = bpw.mid();
    res.trace.push_back({"beta0p", bpw.lo, bpw.hi, false, pr.beta0p});

    pr.sfp = frp_b / pr.beta0;
    pr.sfq = frq_b / pr.beta0;

    if (auto bad = violated_constraints(pr); !bad.empty())
        throw Infeasible(bad.front(), "post-solve validation failed");
    return res;
}

std::vector<std::string> violated_constraints(const ExponentProfile& p, double margin) {
    std::vector<std::string> bad;
    auto need = [&](bool ok, const char* name) {
        if (!ok) bad.emplace_back(name);
    };
    const double d = p.d;
    need(p.d >= 3, "d >= 3");
    need(p.d1 >= p.d, "d1 >= d");
    need(p.p_dsigma > 2.0 && p.p_dsigma <= d, "p_dsigma in (2, d]");
    need(p.p_b > std::max(2.0, d / 2) && p.p_b <= d, "p_b in (2 v d/2, d]");
    need(p.p0 > 2.0 + margin && p.p0 < p.p_b - margin, "p0 in (2, p_b)");
    need(p.q0 > 1.0 + margin, "q0 in (1, inf)");
    const double lhs0 = d / p.p0 + 2.0 / p.q0;
    need(lhs0 < 2.0 - margin, "d/p0 + 2/q0 < 2");
    need(p.alpha > 1.0 + margin, "alpha > 1");
    need(lhs0 < 2.0 / p.alpha - margin, "d/p0 + 2/q0 < 2/alpha");
    need(p.p0 / p.alpha > 1.0 + margin && p.p0 / p.alpha < p.p_b - margin, "1 < p0/alpha < p_b");
    need(beta_admissible(p.beta0, p.p0, p.q0, p.frp_b, p.frq_b, margin), "beta0 Morrey-scale system");
    need(beta_admissible(p.beta0p, p.p0, p.q0, p.frp_b, p.frq_b, margin), "beta0' Morrey-scale system");
    need(p.beta0p < p.beta0 - margin, "beta0' < beta0");
    need(std::abs(p.sfp - p.frp_b / p.beta0) <= 1e-12 * p.sfp, "sfp = frp_b/beta0");
    need(std::abs(p.sfq - p.frq_b / p.beta0) <= 1e-12 * p.sfq, "sfq = frq_b/beta0");
    need(d / p.sfp + 2.0 / p.sfq >= p.beta0 - 1e-12, "d/sfp + 2/sfq >= beta0");
    return bad;
}

}  // namespace strongsde::params
