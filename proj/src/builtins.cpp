#include "strongsde/field.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

namespace strongsde {

namespace {

MatrixFn identity_block(int d, double c) {
    return [d, c](double, const Vec&, Mat& out) {
        out.setZero();
        for (int i = 0; i < d; ++i) out(i, i) = c;
    };
}

}  // namespace

CoefficientField scaled_diffusion(int d, int d1, double c, double t_max) {
    if (d < 1 || d1 < d) throw InvalidInput("need d >= 1 and d1 >= d");
    CoefficientField f;
    f.name = "scaled_diffusion";
    f.d = d;
    f.d1 = d1;
    f.t_max = t_max;
    const double a = c * c;
    f.delta = a > 0 ? std::min(a, 1.0 / a) : 1.0;
    f.sigma_fn = identity_block(d, c);
    return f;
}

CoefficientField unit_diffusion(int d, int d1, double t_max) {
    auto f = scaled_diffusion(d, d1, 1.0, t_max);
    f.name = "unit_diffusion";
    return f;
}

CoefficientField constant_drift(const Vec& c, int d1, double t_max) {
    auto f = unit_diffusion(static_cast<int>(c.size()), d1, t_max);
    f.name = "constant_drift";
    f.b_B_fn = [c](double, const Vec&, Vec& out) { out = c; };
    f.b_bar = Envelope::constant(c.norm(), t_max);
    return f;
}

CoefficientField example_field_3d(const Example3dParams& p) {
    if (p.alpha < 0 || p.beta < 0 || p.gamma < 0) throw InvalidInput("alpha, beta, gamma must be >= 0");
    CoefficientField f;
    f.name = "example3d";
    f.d = 3;
    f.d1 = 12;
    f.t_max = p.t_max;
    const double s = p.alpha * p.alpha + p.beta * p.beta;
    f.delta = p.delta ? *p.delta : (s > 0 ? std::min(s, 1.0 / s) : 1.0);

    const double alpha = p.alpha, beta = p.beta, gamma = p.gamma;
    f.sigma_fn = [alpha, beta](double, const Vec& x, Mat& out) {
        out.setZero();
        for (int i = 0; i < 3; ++i) out(i, i) = alpha;
        const double r = x.norm();
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j)
                out(i, 3 + 3 * i + j) = beta * (r > 0 ? x[j] / r : 1.0 / std::sqrt(3.0));
    };

    if (beta > 0) {
        // D_l (x^j/|x|) = delta_jl/|x| - x^j x^l/|x|^3; left at zero on the null set x = 0
        f.dsigma_M_fn = [beta](double, const Vec& x, Gradient& g) {
            const double r = x.norm();
            for (auto& m : g) m.setZero();
            if (r == 0) return;
            const double r3 = r * r * r;
            for (int l = 0; l < 3; ++l)
                for (int i = 0; i < 3; ++i)
                    for (int j = 0; j < 3; ++j)
                        g[l](i, 3 + 3 * i + j) = beta * ((j == l ? 1.0 / r : 0.0) - x[j] * x[l] / r3);
        };
        f.dsigma_M_singular.push_back({Vec::Zero(3), 1.0});
    }

    if (gamma > 0) {
        f.b_M_fn = [gamma](double, const Vec& x, Vec& out) {
            const double r2 = x.squaredNorm();
            if (r2 > 0 && r2 <= 1.0) out = -gamma * x / r2;
            else out.setZero();
        };
        f.b_M_singular.push_back({Vec::Zero(3), 1.0});
    }

    if (p.xi && p.eta) {
        auto xi = p.xi;
        auto eta = p.eta;
        f.b_B_fn = [xi, eta](double t, const Vec& x, Vec& out) {
            eta(t, x, out);
            out *= xi(t);
        };
        const double sup = p.eta_sup;
        f.b_bar = {[xi, sup](double t) { return std::abs(xi(t)) * sup; }, p.xi_breakpoints};
        f.drift_time_dependent = true;
    }
    return f;
}

// ---- tabulated ----------------------------------------------------------

namespace {

struct Table {
    int dims = 0;                          // 1 + d
    int width = 0;                         // values per node
    std::vector<std::vector<double>> axes;
    std::vector<double> values;            // node-major, row-major over axes
    std::vector<size_t> stride;

    // multilinear interpolation, clamped to the table box
    void eval(const double* coord, double* out) const {
        std::vector<size_t> lo(dims);
        std::vector<double> w(dims);
        for (int a = 0; a < dims; ++a) {
            const auto& ax = axes[a];
            if (ax.size() == 1) {
                lo[a] = 0;
                w[a] = 0;
                continue;
            }
            double c = std::clamp(coord[a], ax.front(), ax.back());
            size_t k = std::upper_bound(ax.begin(), ax.end(), c) - ax.begin();
            k = std::clamp<size_t>(k, 1, ax.size() - 1) - 1;
            lo[a] = k;
            w[a] = (c - ax[k]) / (ax[k + 1] - ax[k]);
        }
        std::fill(out, out + width, 0.0);
        for (int corner = 0; corner < (1 << dims); ++corner) {
            double wt = 1.0;
            size_t idx = 0;
            bool skip = false;
            for (int a = 0; a < dims; ++a) {
                const int bit = (corner >> a) & 1;
                if (bit && axes[a].size() == 1) {
                    skip = true;
                    break;
                }
                wt *= bit ? w[a] : 1.0 - w[a];
                idx += (lo[a] + bit) * stride[a];
            }
            if (skip || wt == 0.0) continue;
            const double* v = &values[idx * width];
            for (int c = 0; c < width; ++c) out[c] += wt * v[c];
        }
    }
};

}  // namespace

CoefficientField load_tabulated_field(const std::string& path, int d, int d1, double delta,
                                      double fd_step) {
    if (d < 1 || d1 < d) throw InvalidInput("tabulated field: need d >= 1 and d1 >= d");
    if (!(fd_step > 0)) throw InvalidInput("tabulated field: finite-difference step must be > 0");
    std::ifstream in(path);
    if (!in) throw InvalidInput("tabulated field: cannot open '" + path + "'");

    auto tab = std::make_shared<Table>();
    tab->dims = 1 + d;
    tab->width = d * d1 + d;
    const int cols = tab->dims + tab->width;

    std::vector<std::vector<double>> rows;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        std::istringstream ls(line);
        std::vector<double> row;
        double v;
        while (ls >> v) row.push_back(v);
        if (row.empty()) continue;
        if (static_cast<int>(row.size()) != cols)
            throw InvalidInput(path + ":" + std::to_string(lineno) + ": expected " + std::to_string(cols) +
                               " columns, got " + std::to_string(row.size()));
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw InvalidInput("tabulated field: '" + path + "' has no data rows");

    tab->axes.resize(tab->dims);
    for (int a = 0; a < tab->dims; ++a) {
        auto& ax = tab->axes[a];
        for (const auto& r : rows) ax.push_back(r[a]);
        std::sort(ax.begin(), ax.end());
        ax.erase(std::unique(ax.begin(), ax.end()), ax.end());
    }
    tab->stride.assign(tab->dims, 1);
    size_t total = 1;
    for (int a = tab->dims - 1; a >= 0; --a) {
        tab->stride[a] = total;
        total *= tab->axes[a].size();
    }
    if (total != rows.size())
        throw InvalidInput("tabulated field: '" + path + "' is not a full tensor grid (" +
                           std::to_string(rows.size()) + " rows, " + std::to_string(total) + " nodes)");
    tab->values.assign(total * tab->width, 0.0);
    std::vector<char> seen(total, 0);
    for (const auto& r : rows) {
        size_t idx = 0;
        for (int a = 0; a < tab->dims; ++a) {
            const auto& ax = tab->axes[a];
            idx += (std::lower_bound(ax.begin(), ax.end(), r[a]) - ax.begin()) * tab->stride[a];
        }
        if (seen[idx]) throw InvalidInput("tabulated field: '" + path + "' has duplicate nodes");
        seen[idx] = 1;
        std::copy(r.begin() + tab->dims, r.end(), tab->values.begin() + idx * tab->width);
    }

    CoefficientField f;
    f.name = "tabulated:" + path;
    f.d = d;
    f.d1 = d1;
    f.delta = delta;
    f.t_max = tab->axes[0].back();
    f.sigma_time_dependent = f.drift_time_dependent = tab->axes[0].size() > 1;

    auto eval = [tab](double t, const Vec& x, std::vector<double>& buf) {
        std::vector<double> c(tab->dims);
        c[0] = t;
        for (int i = 0; i < tab->dims - 1; ++i) c[i + 1] = x[i];
        buf.resize(tab->width);
        tab->eval(c.data(), buf.data());
    };
    f.sigma_fn = [eval, d, d1](double t, const Vec& x, Mat& out) {
        std::vector<double> buf;
        eval(t, x, buf);
        for (int i = 0; i < d; ++i)
            for (int k = 0; k < d1; ++k) out(i, k) = buf[i * d1 + k];
    };
    f.b_M_fn = [eval, d, d1](double t, const Vec& x, Vec& out) {
        std::vector<double> buf;
        eval(t, x, buf);
        for (int i = 0; i < d; ++i) out[i] = buf[d * d1 + i];
    };
    const double h = fd_step;
    auto sig = f.sigma_fn;
    f.dsigma_M_fn = [sig, d, d1, h](double t, const Vec& x, Gradient& g) {
        Mat plus(d, d1), minus(d, d1);
        Vec y = x;
        for (int l = 0; l < d; ++l) {
            y[l] = x[l] + h;
            sig(t, y, plus);
            y[l] = x[l] - h;
            sig(t, y, minus);
            y[l] = x[l];
            g[l] = (plus - minus) / (2 * h);
        }
    };
    return f;
}

}  // namespace strongsde
