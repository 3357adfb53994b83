#include "strongsde/smoothing.hpp"

#include "quadrature.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <memory>

namespace strongsde {

double bump(double r2) { return r2 < 1.0 ? std::exp(-1.0 / (1.0 - r2)) : 0.0; }

KernelRule bump_rule(int dim, int m) {
    if (dim < 1 || m < 1) throw InvalidInput("bump_rule: need dim >= 1 and m >= 1");
    KernelRule k;
    long total = 1;
    for (int i = 0; i < dim; ++i) total *= m;
    double sum = 0.0;
    for (long idx = 0; idx < total; ++idx) {
        Vec z(dim);
        long r = idx;
        for (int i = 0; i < dim; ++i) {
            z[i] = -1.0 + (static_cast<double>(r % m) + 0.5) * 2.0 / m;
            r /= m;
        }
        const double w = bump(z.squaredNorm());
        if (w <= 0) continue;
        k.nodes.push_back(z);
        k.weights.push_back(w);
        sum += w;
    }
    for (auto& w : k.weights) w /= sum;
    return k;
}

CoefficientField mollify(const CoefficientField& field, int n, const MollifierRes& res) {
    if (n < 1) throw InvalidInput("mollify: n must be >= 1");
    auto src = std::make_shared<const CoefficientField>(field);
    auto space = std::make_shared<const KernelRule>(bump_rule(field.d, res.m_space));
    const double inv = 1.0 / n;
    const int d = field.d, d1 = field.d1;

    CoefficientField out = field;
    out.name = field.name + "*eta_" + std::to_string(n);
    out.t_max = field.t_max + inv;

    out.sigma_fn = [src, space, inv, d, d1](double t, const Vec& x, Mat& o) {
        o.setZero(d, d1);
        Mat tmp(d, d1);
        Vec y(d);
        for (size_t j = 0; j < space->nodes.size(); ++j) {
            y = x - inv * space->nodes[j];
            src->sigma_fn(t, y, tmp);
            o += space->weights[j] * tmp;
        }
    };

    auto grad_part = [src, space, inv, d, d1](GradientFn part) -> GradientFn {
        if (!part) return {};
        return [part, space, inv, d, d1](double t, const Vec& x, Gradient& g) {
            for (auto& m : g) m.setZero(d, d1);
            Gradient tmp(d, Mat::Zero(d, d1));
            Vec y(d);
            for (size_t j = 0; j < space->nodes.size(); ++j) {
                y = x - inv * space->nodes[j];
                for (auto& m : tmp) m.setZero();
                part(t, y, tmp);
                for (int l = 0; l < d; ++l) g[l] += space->weights[j] * tmp[l];
            }
        };
    };
    out.dsigma_M_fn = grad_part(field.dsigma_M_fn);
    out.dsigma_B_fn = grad_part(field.dsigma_B_fn);

    // Time convolution by Gauss panels that follow t and split at the known
    // jumps (envelope breakpoints, 0, t_max): a drift with a jump in t gives a
    // continuous b^(n). Node rules in time would leave steps of one weight.
    std::vector<double> cuts{0.0, field.t_max};
    for (double b : field.b_bar.breakpoints) cuts.push_back(b);
    std::sort(cuts.begin(), cuts.end());
    const double zeta_mass = [] {
        double m = 0;
        // same eight sub-panels as below, so constants are reproduced exactly
        for (int k = 0; k < 8; ++k) m += quad::gauss_legendre(-1 + k / 4.0, -1 + (k + 1) / 4.0,
                                                         [](double z) { return bump(z * z); });
        return m;
    }();
    auto time_nodes = std::make_shared<const std::function<void(double, std::vector<std::pair<double, double>>&)>>(
        [cuts, inv, zeta_mass, t_max = field.t_max](double t, std::vector<std::pair<double, double>>& out) {
            out.clear();
            const double lo = std::max(0.0, t - inv), hi = std::min(t_max, t + inv);
            if (!(hi > lo)) return;
            std::vector<double> ends{lo, hi};
            for (int k = -3; k <= 3; ++k) {
                const double e = t + k * inv / 4;
                if (e > lo && e < hi) ends.push_back(e);
            }
            for (double c : cuts)
                if (c > lo && c < hi) ends.push_back(c);
            std::sort(ends.begin(), ends.end());
            for (size_t p = 0; p + 1 < ends.size(); ++p) {
                const double a = ends[p], b = ends[p + 1], half = 0.5 * (b - a);
                if (!(half > 0)) continue;
                for (size_t g = 0; g < quad::kGLx.size(); ++g) {
                    const double s = a + half * (quad::kGLx[g] + 1);
                    const double z = (t - s) / inv;
                    const double w = half * quad::kGLw[g] * bump(z * z) / (zeta_mass * inv);
                    // nudge off a cut so one-sided values are used
                    if (w > 0) out.emplace_back(std::clamp(s, a + 1e-14, b - 1e-14), w);
                }
            }
        });

    auto drift_part = [src, space, time_nodes, inv, d](bool morrey) -> VectorFn {
        if (morrey ? !src->b_M_fn : !src->b_B_fn) return {};
        return [src, space, time_nodes, inv, d, morrey](double t, const Vec& x, Vec& o) {
            o.setZero(d);
            Vec y(d);
            std::vector<std::pair<double, double>> tn;
            (*time_nodes)(t, tn);
            for (const auto& [s, ws] : tn)
                for (size_t j = 0; j < space->nodes.size(); ++j) {
                    y = x - inv * space->nodes[j];
                    o += ws * space->weights[j] * (morrey ? src->b_M(s, y) : src->b_B(s, y));
                }
        };
    };
    out.b_M_fn = drift_part(true);
    out.b_B_fn = drift_part(false);

    auto env = field.b_bar;
    out.b_bar.fn = [env, time_nodes](double t) {
        std::vector<std::pair<double, double>> tn;
        (*time_nodes)(t, tn);
        double acc = 0.0;
        for (const auto& [s, w] : tn) acc += w * env(s);
        return acc;
    };
    out.b_bar.breakpoints.clear();
    for (double b : env.breakpoints) {
        out.b_bar.breakpoints.push_back(b - inv);
        out.b_bar.breakpoints.push_back(b + inv);
    }

    // the mollified parts are bounded; keep the points as sampling anchors only
    for (auto& s : out.b_M_singular) s.power = 0.0;
    for (auto& s : out.dsigma_M_singular) s.power = 0.0;
    out.drift_time_dependent = field.drift_time_dependent || static_cast<bool>(field.b_M_fn) ||
                               static_cast<bool>(field.b_B_fn);
    return out;
}

BandCheck band_check(const CoefficientField& field, const std::vector<Sample>& samples, double lower,
                     double upper) {
    BandCheck bc;
    for (const auto& [t, x] : samples) {
        const auto ad = assemble_a(field, t, x, lower, upper);
        const double lo = ad.eigenvalues.minCoeff(), hi = ad.eigenvalues.maxCoeff();
        if (lo < bc.min_eig) {
            bc.min_eig = lo;
            if (lo < lower) bc.worst_t = t, bc.worst_x = x;
        }
        if (hi > bc.max_eig) {
            bc.max_eig = hi;
            if (hi > upper) bc.worst_t = t, bc.worst_x = x;
        }
        if (ad.violation) bc.ok = false;
    }
    return bc;
}

Truncation truncate_sigma(const CoefficientField& field, int n, double m, const Mat& kappa,
                          const std::vector<Sample>& samples, const MollifierRes& res) {
    if (kappa.rows() != field.d || kappa.cols() != field.d1)
        throw InvalidInput("truncate_sigma: kappa must be d x d1");
    const Mat kk = kappa * kappa.transpose();
    if ((kk - Mat::Identity(field.d, field.d)).cwiseAbs().maxCoeff() > 1e-12)
        throw InvalidInput("truncate_sigma: kappa kappa^* must be the identity");

    Truncation tr;
    tr.field = mollify(field, n, res);
    if (!(std::isinf(m) && m > 0)) {
        auto env = field.dsigma_bar;
        auto in_theta = [env, m](double t) { return env(t) <= m; };
        auto sig = tr.field.sigma_fn;
        tr.field.sigma_fn = [sig, in_theta, kappa](double t, const Vec& x, Mat& o) {
            if (in_theta(t)) sig(t, x, o);
            else o = kappa;
        };
        auto clip = [in_theta](GradientFn g) -> GradientFn {
            if (!g) return {};
            return [g, in_theta](double t, const Vec& x, Gradient& out) {
                if (in_theta(t)) g(t, x, out);
                else
                    for (auto& mm : out) mm.setZero();
            };
        };
        tr.field.dsigma_M_fn = clip(tr.field.dsigma_M_fn);
        tr.field.dsigma_B_fn = clip(tr.field.dsigma_B_fn);
        tr.field.sigma_time_dependent = true;
        tr.field.name += "|m=" + std::to_string(m);
    }
    tr.band = band_check(tr.field, samples, field.delta / 4, 4 / field.delta);
    return tr;
}

}  // namespace strongsde
