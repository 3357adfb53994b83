#include "strongsde/norms.hpp"

#include "quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace strongsde {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// offsets z in {-2K..2K}^d
std::vector<Vec> lattice_offsets(int d, int window) {
    std::vector<Vec> out;
    const int n = 4 * window + 1;
    long total = 1;
    for (int i = 0; i < d; ++i) total *= n;
    for (long idx = 0; idx < total; ++idx) {
        Vec z(d);
        long r = idx;
        for (int i = 0; i < d; ++i) {
            z[i] = static_cast<double>(r % n) - 2 * window;
            r /= n;
        }
        out.push_back(z);
    }
    // centre first so ties keep the anchor as witness
    std::stable_sort(out.begin(), out.end(), [](const Vec& a, const Vec& b) { return a.norm() < b.norm(); });
    return out;
}

std::vector<Vec> default_anchors(const ScalarField& f, const std::vector<Vec>& given) {
    if (!given.empty()) return given;
    if (f.space_sing) return {f.space_sing->center};
    return {Vec::Zero(f.d)};
}

}  // namespace

double unit_ball_volume(int d) {
    return std::pow(M_PI, d / 2.0) / std::tgamma(d / 2.0 + 1.0);
}

double ball_average(const ScalarField& f, double p, double t, const Vec& center, double rho,
                    int n_radial, int n_angular) {
    const auto dirs = quad::sphere_directions(f.d, n_angular);
    const Vec* s = f.space_sing ? &f.space_sing->center : nullptr;
    const double pw = f.space_sing ? f.space_sing->power * p : 0.0;
    auto r = quad::integrate_ball(f.d, center, rho, s, pw, n_radial, dirs,
                                  [&](const Vec& x) { return std::pow(std::abs(f(t, x)), p); });
    if (r.divergent) return kInf;
    return r.value / (unit_ball_volume(f.d) * std::pow(rho, f.d));
}

MorreyReport morrey_hat(const ScalarField& f, double p, double rho_f, double t_lo, double t_hi,
                        const BallPlan& plan) {
    if (!(p >= 1.0)) throw InvalidInput("morrey_hat: p must be >= 1");
    if (!(rho_f > 0.0) || !std::isfinite(rho_f)) throw InvalidInput("morrey_hat: rho_f must be in (0, inf)");
    if (plan.levels < 1 || plan.n_times < 1) throw InvalidInput("morrey_hat: empty sampling plan");

    MorreyReport rep;
    rep.worst_center = Vec::Zero(f.d);
    rep.value = -1.0;
    const auto anchors = default_anchors(f, plan.anchors);
    const auto offs = lattice_offsets(f.d, plan.window);

    std::vector<double> times;
    for (int i = 0; i < plan.n_times; ++i)
        times.push_back(t_hi > t_lo ? t_lo + (i + 0.5) * (t_hi - t_lo) / plan.n_times : t_lo);

    for (double t : times) {
        for (int k = 0; k < plan.levels; ++k) {
            const double rho = rho_f * std::ldexp(1.0, -k);
            for (const auto& a : anchors) {
                for (const auto& z : offs) {
                    const Vec c = a + 0.5 * rho * z;
                    const double avg = ball_average(f, p, t, c, rho, plan.n_radial, plan.n_angular);
                    ++rep.balls;
                    const double v = std::isfinite(avg) ? rho * std::pow(avg, 1.0 / p) : kInf;
                    if (v > rep.value) {
                        rep.value = v;
                        rep.worst_t = t;
                        rep.worst_center = c;
                        rep.worst_radius = rho;
                    }
                    if (!std::isfinite(v)) {
                        rep.divergent = true;
                        return rep;
                    }
                }
            }
        }
    }
    rep.refined_value = rep.value;
    if (plan.refine_check && rep.value > 0) {
        const double avg = ball_average(f, p, rep.worst_t, rep.worst_center, rep.worst_radius,
                                        2 * plan.n_radial, 2 * plan.n_angular);
        rep.refined_value = rep.worst_radius * std::pow(avg, 1.0 / p);
        rep.precision_warning = std::abs(rep.refined_value - rep.value) > 0.05 * rep.value;
    }
    return rep;
}

double unit_mixed_norm(int d, const Cylinder& c, double p, double q) {
    return std::pow(unit_ball_volume(d) * std::pow(c.radius, d), 1.0 / p) *
           std::pow(c.t_end - c.t_start, 1.0 / q);
}

NormValue mixed_norm(const ScalarField& f, const MixedNormSpec& spec, const QuadRes& res) {
    if (!(spec.p >= 1.0 && spec.q >= 1.0)) throw InvalidInput("mixed_norm: p, q must be >= 1");
    const auto& cyl = spec.cyl;
    if (!(cyl.t_end > cyl.t_start) || !(cyl.radius > 0)) throw InvalidInput("mixed_norm: empty cylinder");
    if (cyl.center.size() != f.d) throw InvalidInput("mixed_norm: cylinder centre has wrong dimension");
    const double p = spec.p, q = spec.q;
    const auto dirs = quad::sphere_directions(f.d, res.n_angular);
    const Vec* s = f.space_sing ? &f.space_sing->center : nullptr;
    const double sx = f.space_sing ? f.space_sing->power : 0.0;
    const double st = (f.time_sing && std::abs(f.time_sing->at - cyl.t_start) < 1e-12) ? f.time_sing->power : 0.0;

    NormValue out;
    double total = 0.0;
    if (spec.order == NormOrder::SpaceFirst) {
        auto r = quad::integrate_interval(cyl.t_start, cyl.t_end, res.n_time, st * q, [&](double t) {
            auto in = quad::integrate_ball(f.d, cyl.center, cyl.radius, s, sx * p, res.n_radial, dirs,
                                           [&](const Vec& x) { return std::pow(std::abs(f(t, x)), p); });
            return in.divergent ? kInf : std::pow(in.value, q / p);
        });
        out.divergent = r.divergent;
        total = r.divergent ? kInf : std::pow(r.value, 1.0 / q);
    } else {
        auto r = quad::integrate_ball(f.d, cyl.center, cyl.radius, s, sx * p, res.n_radial, dirs, [&](const Vec& x) {
            auto in = quad::integrate_interval(cyl.t_start, cyl.t_end, res.n_time, st * q,
                                               [&](double t) { return std::pow(std::abs(f(t, x)), q); });
            return in.divergent ? kInf : std::pow(in.value, p / q);
        });
        out.divergent = r.divergent;
        total = r.divergent ? kInf : std::pow(r.value, 1.0 / p);
    }
    if (spec.normalized && !out.divergent) total /= unit_mixed_norm(f.d, cyl, p, q);
    out.value = total;
    return out;
}

HatBReport hat_b(const ScalarField& b_abs, double frp, double frq, double r_b, NormOrder order,
                 const CylinderPlan& plan) {
    if (!(frp >= 1 && frq >= 1)) throw InvalidInput("hat_b: exponents must be >= 1");
    if (b_abs.d / frp + 2.0 / frq < 1.0 - 1e-15)
        throw InvalidInput("hat_b: d/frp + 2/frq >= 1 is required");
    if (!(r_b > 0)) throw InvalidInput("hat_b: r_b must be > 0");

    HatBReport rep;
    rep.worst.center = Vec::Zero(b_abs.d);
    const auto anchors = default_anchors(b_abs, plan.anchors);
    const auto offs = lattice_offsets(b_abs.d, plan.window);
    std::vector<double> starts = plan.time_starts;
    if (starts.empty()) starts.push_back(b_abs.time_sing ? b_abs.time_sing->at : 0.0);

    for (int k = 0; k < plan.levels; ++k) {
        const double r = r_b * std::ldexp(1.0, -k);
        double level_sup = 0.0;
        for (double t0 : starts) {
            for (const auto& a : anchors) {
                for (const auto& z : offs) {
                    MixedNormSpec spec;
                    spec.p = frp;
                    spec.q = frq;
                    spec.order = order;
                    spec.normalized = true;
                    spec.cyl = {t0, t0 + r * r, a + 0.5 * r * z, r};
                    auto nv = mixed_norm(b_abs, spec, plan.res);
                    ++rep.cylinders;
                    const double v = nv.divergent ? kInf : r * nv.value;
                    level_sup = std::max(level_sup, v);
                    if (v > rep.value || (nv.divergent && !rep.divergent)) {
                        rep.value = v;
                        rep.worst = spec.cyl;
                    }
                    if (nv.divergent) rep.divergent = true;
                }
            }
        }
        rep.per_level.push_back(level_sup);
    }
    return rep;
}

double integrate_squared(const Envelope& f, double a, double b) {
    if (!(b > a)) return 0.0;
    std::vector<double> cuts{a};
    for (double x : f.breakpoints)
        if (x > a && x < b) cuts.push_back(x);
    cuts.push_back(b);
    std::sort(cuts.begin(), cuts.end());
    const double max_panel = (b - a) / 64;
    double s = 0.0;
    for (size_t i = 0; i + 1 < cuts.size(); ++i) {
        const double lo = cuts[i], hi = cuts[i + 1];
        if (hi <= lo) continue;
        const int n = std::max(1, static_cast<int>(std::ceil((hi - lo) / max_panel)));
        const double h = (hi - lo) / n;
        for (int j = 0; j < n; ++j)
            s += quad::gauss_legendre(lo + j * h, lo + (j + 1) * h, [&](double t) {
                const double v = f(t);
                return v * v;
            });
    }
    return s;
}

std::vector<double> beta_modulus(const Envelope& f_bar, const std::vector<double>& ts, double lo,
                                 double hi, double step) {
    if (!(hi > lo) || !(step > 0)) throw InvalidInput("beta_modulus: bad horizon or step");
    std::vector<double> starts;
    const long n = static_cast<long>(std::floor((hi - lo) / step + 1e-9));
    for (long j = 0; j <= n; ++j) starts.push_back(lo + j * step);

    // cumulative integral F at every needed point
    std::vector<double> pts = starts;
    for (double t : ts)
        for (double s : starts) pts.push_back(std::min(s + std::max(t, 0.0), hi));
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    std::vector<double> F(pts.size(), 0.0);
    for (size_t i = 1; i < pts.size(); ++i) F[i] = F[i - 1] + integrate_squared(f_bar, pts[i - 1], pts[i]);
    auto at = [&](double x) {
        auto it = std::lower_bound(pts.begin(), pts.end(), x);
        return F[it - pts.begin()];
    };

    std::vector<double> out;
    for (double t : ts) {
        double best = 0.0;
        for (double s : starts) best = std::max(best, at(std::min(s + std::max(t, 0.0), hi)) - at(s));
        out.push_back(best);
    }
    return out;
}

double beta_modulus(const Envelope& f_bar, double t, double lo, double hi, double step) {
    return beta_modulus(f_bar, std::vector<double>{t}, lo, hi, step).front();
}

ThresholdSplit split_by_threshold(const VectorFn& b, const ScalarField& b_abs, double p, int d,
                                  double N_hat, double support_radius, double t_lo, double t_hi,
                                  int n_time_nodes, const QuadRes& res) {
    if (!(p > d)) throw InvalidInput("split_by_threshold: p must exceed d");
    if (!(N_hat > 0)) throw InvalidInput("split_by_threshold: N_hat must be > 0");
    if (n_time_nodes < 1) throw InvalidInput("split_by_threshold: need at least one time node");

    auto out = std::make_shared<ThresholdSplit>();
    const auto dirs = quad::sphere_directions(d, res.n_angular);
    const Vec origin = Vec::Zero(d);
    const Vec* s = b_abs.space_sing ? &b_abs.space_sing->center : nullptr;
    const double pw = b_abs.space_sing ? b_abs.space_sing->power * p : 0.0;
    for (int i = 0; i < n_time_nodes; ++i) {
        const double t = n_time_nodes == 1 ? 0.5 * (t_lo + t_hi) : t_lo + (i + 0.5) * (t_hi - t_lo) / n_time_nodes;
        auto I = quad::integrate_ball(d, origin, support_radius, s, pw, res.n_radial, dirs,
                                      [&](const Vec& x) { return std::pow(b_abs(t, x), p); });
        if (I.divergent) throw NumericalFailure("split_by_threshold: |b|^p is not integrable");
        out->nodes.push_back(t);
        out->lp_norm_p.push_back(I.value);
        out->lambda.push_back(N_hat * std::pow(I.value, 1.0 / (p - d)));
    }
    ThresholdSplit result = *out;
    auto lambda_at = [out, t_lo, t_hi](double t) {
        if (t < t_lo || t > t_hi) return 0.0;
        const size_t n = out->nodes.size();
        size_t i = n == 1 ? 0 : std::min(n - 1, static_cast<size_t>((t - t_lo) / (t_hi - t_lo) * n));
        return out->lambda[i];
    };
    std::vector<double> bps{t_lo, t_hi};
    for (int i = 1; i < n_time_nodes; ++i) bps.push_back(t_lo + i * (t_hi - t_lo) / n_time_nodes);
    result.b_bar = {lambda_at, bps};
    result.b_M = [b, lambda_at](double t, const Vec& x, Vec& o) {
        b(t, x, o);
        if (o.norm() < lambda_at(t)) o.setZero();
    };
    result.b_B = [b, lambda_at](double t, const Vec& x, Vec& o) {
        b(t, x, o);
        if (o.norm() >= lambda_at(t)) o.setZero();
    };
    return result;
}

// ---- singular examples ----------------------------------------------------

ScalarField parabolic_scaling_example(int d) {
    ScalarField f;
    f.d = d;
    const double e = 1.0 / (d + 1);
    f.fn = [e](double t, const Vec& x) {
        const double r = x.norm();
        if (!(t > 0 && t < 1 && r > 0 && r < 1)) return 0.0;
        return std::pow(r, e - 1.0) * std::pow(t, -0.5 * e);
    };
    f.space_sing = SpatialSingularity{Vec::Zero(d), 1.0 - e};
    f.time_sing = TimeSingularity{0.0, 0.5 * e};
    return f;
}

namespace {
double a_n(int n) {
    const double l = std::log(static_cast<double>(n));
    return 1.0 / (n * l * l);
}

struct KappaTable {
    std::vector<double> lo, hi;  // increasing in t
};

std::shared_ptr<KappaTable> kappa_table(int n0, int n_max) {
    if (n0 < 3 || n_max < n0) throw InvalidInput("kappa: need 3 <= n0 <= n_max");
    auto tab = std::make_shared<KappaTable>();
    for (int n = n_max; n >= n0; --n) {
        const double a = a_n(n);
        tab->lo.push_back(a);
        tab->hi.push_back((1 + a) * a);
    }
    return tab;
}

double kappa_eval(const KappaTable& k, double t) {
    auto it = std::upper_bound(k.lo.begin(), k.lo.end(), t);
    if (it == k.lo.begin()) return 0.0;
    const size_t i = static_cast<size_t>(it - k.lo.begin()) - 1;
    return (t > k.lo[i] && t < k.hi[i]) ? 1.0 : 0.0;
}
}  // namespace

int kappa_min_n0(int n_check) {
    int n0 = 3;
    for (int n = 3; n <= n_check; ++n) {
        const double a = a_n(n);
        if (!((1 + a) * a <= a_n(n - 1) && a_n(n - 1) <= 1.0)) n0 = n + 1;
    }
    return n0;
}

Envelope kappa_indicator(int n0, int n_max) {
    auto tab = kappa_table(n0, n_max);
    Envelope e;
    e.fn = [tab](double t) { return kappa_eval(*tab, t); };
    for (size_t i = 0; i < tab->lo.size(); ++i) {
        e.breakpoints.push_back(tab->lo[i]);
        e.breakpoints.push_back(tab->hi[i]);
    }
    return e;
}

Envelope kappa_envelope(int n0, int n_max) {
    auto ind = kappa_indicator(n0, n_max);
    auto fn = ind.fn;
    ind.fn = [fn](double t) { return t > 0 ? fn(t) / std::sqrt(t) : 0.0; };
    return ind;
}

ScalarField fractal_time_drift(int d, int n0, int n_max) {
    auto tab = kappa_table(n0, n_max);
    auto f = parabolic_scaling_example(d);
    auto inner = f.fn;
    f.fn = [tab, inner](double t, const Vec& x) { return kappa_eval(*tab, t) * inner(t, x); };
    f.time_sing.reset();
    return f;
}

ScalarField fractal_time_drift_M(int d, int n0, int n_max) {
    auto g = fractal_time_drift(d, n0, n_max);
    auto inner = g.fn;
    g.fn = [inner](double t, const Vec& x) { return x.norm() <= std::sqrt(std::max(t, 0.0)) ? inner(t, x) : 0.0; };
    return g;
}

ScalarField da_M_norm(const CoefficientField& field) {
    ScalarField f;
    f.d = field.d;
    auto self = std::make_shared<CoefficientField>(field);
    f.fn = [self](double t, const Vec& x) {
        const Mat s = self->sigma(t, x);
        const Gradient g = self->dsigma_M(t, x);
        double acc = 0.0;
        for (const auto& gl : g) {
            const Mat da = gl * s.transpose() + s * gl.transpose();
            acc += da.squaredNorm();
        }
        return std::sqrt(acc);
    };
    if (!field.dsigma_M_singular.empty()) f.space_sing = field.dsigma_M_singular.front();
    return f;
}

}  // namespace strongsde
