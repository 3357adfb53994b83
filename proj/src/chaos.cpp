#include "strongsde/chaos.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>

namespace strongsde {

// ---- simplex axis -----------------------------------------------------------

double SimplexGrid::count(int n_t, int m) {
    if (m < 0 || m > n_t) return 0.0;
    double c = 1.0;
    for (int i = 0; i < m; ++i) c = c * (n_t - i) / (i + 1);
    return std::round(c);
}

std::vector<std::vector<int>> SimplexGrid::tuples(int m) const {
    std::vector<std::vector<int>> out;
    std::vector<int> cur;
    // c_1 > c_2 > ... > c_m >= 0, lexicographic in (c_1, c_2, ...)
    auto rec = [&](auto&& self, int level, int below) -> void {
        if (level == m) {
            out.push_back(cur);
            return;
        }
        const int lo = m - level - 1;
        for (int c = lo; c < below; ++c) {
            cur.push_back(c);
            self(self, level + 1, c);
            cur.pop_back();
        }
    };
    rec(rec, 0, n_t);
    return out;
}

double chaos_sweep_estimate(int d1, int n_t, int m_max, bool tails) {
    const int top = tails ? m_max : m_max - 1;
    double s = 0.0;
    for (int l = 0; l <= top; ++l) s += SimplexGrid::count(n_t, l) * std::pow(static_cast<double>(d1), l);
    return s;
}

long ChaosKernelSet::multi_index(const std::vector<int>& k) const {
    long idx = 0;
    for (int v : k) {
        if (v < 1 || v > d1) throw InvalidInput("multi-index entry out of range [1, d1]");
        idx = idx * d1 + (v - 1);
    }
    return idx;
}

std::vector<int> ChaosKernelSet::multi_index_of(int m, long idx) const {
    std::vector<int> k(m);
    for (int i = m - 1; i >= 0; --i) {
        k[i] = static_cast<int>(idx % d1) + 1;
        idx /= d1;
    }
    return k;
}

double ChaosKernelSet::kernel_energy(int m) const {
    return order(m).values.squaredNorm() * std::pow(axis.delta(), m);
}

// ---- kernels ----------------------------------------------------------------

namespace {

Mat q_all(const SpaceTimeGrid& g, const std::vector<Mat>& sig, const Vec& u, int d1) {
    const auto Du = grid_gradient(g, u);
    Mat out(u.size(), d1);
    for (long i = 0; i < u.size(); ++i) {
        out.row(i).setZero();
        for (int a = 0; a < g.d; ++a) out.row(i) += Du[a][i] * sig[i].row(a);
    }
    return out;
}

}  // namespace

ChaosKernelSet compute_kernels(const CoefficientField& field, const TerminalFn& f, double t0,
                               SpaceTimeGrid pde_grid, const ChaosOptions& opts, const SolverOptions& solver) {
    if (opts.m_max < 1) throw InvalidInput("compute_kernels: m_max must be >= 1");
    if (opts.n_t < opts.m_max + 1) throw InvalidInput("compute_kernels: n_t must exceed m_max");
    if (opts.substeps < 1) throw InvalidInput("compute_kernels: substeps must be >= 1");
    const double est = chaos_sweep_estimate(field.d1, opts.n_t, opts.m_max, opts.tails);
    if (est > opts.max_sweeps) throw CostGuardTripped(est, opts.max_sweeps);

    ChaosKernelSet ks;
    ks.axis = {t0, opts.n_t};
    ks.d1 = field.d1;
    ks.m_max = opts.m_max;
    pde_grid.t0 = t0;
    pde_grid.dt = ks.axis.delta() / (2 * opts.substeps);
    ks.pde_grid = pde_grid;

    const EvolutionOperator op(field, pde_grid, solver);
    const auto pi = op.origin_density();
    const Vec F = sample_on_grid(pde_grid, f);
    ks.c = pi[0].dot(F);
    ks.Tf2 = pi[0].dot(F.cwiseProduct(F));
    ks.tail.assign(opts.tails ? opts.m_max + 1 : 0, 0.0);

    const int d1 = field.d1, n_t = opts.n_t, m_max = opts.m_max;
    const double delta = ks.axis.delta();
    auto jcell = [&](int c) { return (2 * (n_t - c) - 1) * opts.substeps; };

    std::map<int, std::vector<Mat>> sig_cache;
    auto sig_at = [&](int j) -> const std::vector<Mat>& {
        const int key = op.field().sigma_time_dependent ? j : 0;
        auto it = sig_cache.find(key);
        if (it == sig_cache.end()) {
            it = sig_cache.emplace(key, std::vector<Mat>{}).first;
            op.sigma_at_nodes(j, it->second);
        }
        return it->second;
    };

    std::vector<std::map<std::vector<int>, Vec>> found(m_max);
    std::vector<int> cells;

    auto descend = [&](auto&& self, int l, const Mat& H, int j_from) -> void {
        const bool need_kernels = l < m_max;
        const bool need_tail = opts.tails && l <= m_max;
        if (!need_kernels && !need_tail) return;
        const int top = l == 0 ? n_t - 1 : cells.back() - 1;
        if (top < 0) return;
        ks.sweeps += static_cast<double>(H.cols());
        Mat U = H;
        int j = j_from;
        const double wt = std::pow(delta, l + 1);
        for (int c = top; c >= 0; --c) {
            const int jt = jcell(c);
            for (; j < jt; ++j) op.step(j, U);
            const Vec& p = pi[jt];
            const auto& sig = sig_at(jt);
            Mat children;
            if (need_kernels) children.resize(U.rows(), U.cols() * d1);
            double tail_acc = 0.0;
            for (Eigen::Index col = 0; col < U.cols(); ++col) {
                const Mat Q = q_all(pde_grid, sig, U.col(col), d1);
                if (need_tail) tail_acc += p.dot(Q.rowwise().squaredNorm());
                if (need_kernels) children.middleCols(col * d1, d1) = Q;
            }
            if (need_tail) ks.tail[l] += wt * tail_acc;
            if (need_kernels) {
                cells.push_back(c);
                found[l][cells] = children.transpose() * p;
                if (c >= 1) self(self, l + 1, children, jt);
                cells.pop_back();
            }
        }
    };
    Mat H = F;
    descend(descend, 0, H, 0);

    for (int m = 1; m <= m_max; ++m) {
        KernelOrder ko;
        ko.m = m;
        ko.tuples = ks.axis.tuples(m);
        const long nk = static_cast<long>(std::llround(std::pow(static_cast<double>(d1), m)));
        ko.values = Mat::Zero(nk, static_cast<Eigen::Index>(ko.tuples.size()));
        for (size_t i = 0; i < ko.tuples.size(); ++i) {
            auto it = found[m - 1].find(ko.tuples[i]);
            if (it == found[m - 1].end()) throw NumericalFailure("kernel node missing from the sweep");
            ko.values.col(static_cast<Eigen::Index>(i)) = it->second;
        }
        if (!ko.values.allFinite()) throw NumericalFailure("non-finite chaos kernel values");
        ks.orders.push_back(std::move(ko));
    }
    return ks;
}

double parseval_gap(const ChaosKernelSet& ks) {
    if (ks.tail.empty()) throw InvalidInput("parseval_gap: kernels were computed without tails");
    return ks.Tf2 - ks.c * ks.c - ks.tail[0];
}

double tail_norm(const ChaosKernelSet& ks, int m) {
    if (m < 0 || m >= static_cast<int>(ks.tail.size()))
        throw InvalidInput("tail_norm: order " + std::to_string(m) + " was not computed");
    return ks.tail[m];
}

// ---- iterated integrals -------------------------------------------------------

namespace {

void check_path(const SimplexGrid& axis, const WienerPath& path, const std::vector<int>& k) {
    if (std::abs(path.t0 - axis.t0) > 1e-9 * axis.t0) throw InvalidInput("path horizon differs from the kernel axis");
    const double r = axis.delta() / path.dt;
    if (std::abs(r - std::lround(r)) > 1e-6 * r || std::lround(r) < 1)
        throw InvalidInput("path grid does not refine the simplex axis");
    for (int v : k)
        if (v < 1 || v > path.d1) throw InvalidInput("multi-index entry exceeds the path dimension");
}

// Dense tensor over all cell tuples; tuples that are not strictly
// decreasing take the value of the nearest admissible tuple.
std::vector<double> complete_kernel_impl(const SimplexGrid& axis, int m, const std::vector<double>& values) {
    const int n = axis.n_t;
    const auto tuples = axis.tuples(m);
    if (values.size() != tuples.size()) throw InvalidInput("kernel values do not match the simplex grid");
    std::map<std::vector<int>, double> lookup;
    for (size_t i = 0; i < tuples.size(); ++i) lookup[tuples[i]] = values[i];
    long total = 1;
    for (int i = 0; i < m; ++i) total *= n;
    std::vector<double> G(total);
    std::vector<int> idx(m), cl(m);
    for (long lin = 0; lin < total; ++lin) {
        long r = lin;
        for (int i = m - 1; i >= 0; --i) {
            idx[i] = static_cast<int>(r % n);
            r /= n;
        }
        for (int i = 0; i < m; ++i) {
            int c = idx[i];
            if (i > 0) c = std::min(c, cl[i - 1] - 1);
            cl[i] = std::max(c, m - 1 - i);
        }
        G[lin] = lookup.at(cl);
    }
    return G;
}

struct HatWeights {
    int lo, hi;
    double wlo, whi;
};

HatWeights hat(const SimplexGrid& axis, double s) {
    const double u = s / axis.delta() - 0.5;
    if (u <= 0) return {0, 0, 1.0, 0.0};
    if (u >= axis.n_t - 1) return {axis.n_t - 1, axis.n_t - 1, 1.0, 0.0};
    const int lo = static_cast<int>(std::floor(u));
    const double w = u - lo;
    return {lo, lo + 1, 1.0 - w, w};
}

double run_recursion(const SimplexGrid& axis, int m, const std::vector<double>& G, const WienerPath& path,
                     const std::vector<int>& k) {
    const int n = axis.n_t;
    std::vector<std::vector<double>> J(m + 1);
    long size = 1;
    for (int l = 1; l <= m; ++l) {
        J[l].assign(size, 0.0);
        size *= n;
    }
    for (int j = 0; j < path.n_steps(); ++j) {
        const auto hw = hat(axis, j * path.dt);
        for (int l = 1; l <= m; ++l) {
            const double dw = path.increments(k[l - 1] - 1, j);
            if (dw == 0.0) continue;
            const std::vector<double>& X = l < m ? J[l + 1] : G;
            auto& Jl = J[l];
            for (size_t p = 0; p < Jl.size(); ++p) {
                const size_t base = p * n;
                Jl[p] += dw * (hw.wlo * X[base + hw.lo] + hw.whi * X[base + hw.hi]);
            }
        }
    }
    return J[1][0];
}

}  // namespace

double iterated_ito(const SimplexGrid& axis, int m, const std::vector<double>& values, const WienerPath& path,
                    const std::vector<int>& k) {
    if (m < 1 || static_cast<int>(k.size()) != m) throw InvalidInput("iterated_ito: multi-index length must equal m");
    check_path(axis, path, k);
    return run_recursion(axis, m, complete_kernel_impl(axis, m, values), path, k);
}

std::vector<double> dense_kernel(const SimplexGrid& axis, int m, const std::vector<double>& values) {
    return complete_kernel_impl(axis, m, values);
}

double iterated_ito_dense(const SimplexGrid& axis, int m, const std::vector<double>& dense, const WienerPath& path,
                          const std::vector<int>& k) {
    if (m < 1 || static_cast<int>(k.size()) != m) throw InvalidInput("iterated_ito: multi-index length must equal m");
    check_path(axis, path, k);
    if (static_cast<double>(dense.size()) != std::pow(static_cast<double>(axis.n_t), m))
        throw InvalidInput("dense kernel has the wrong size");
    return run_recursion(axis, m, dense, path, k);
}

double iterated_ito_constant(double g, int m, const WienerPath& path, const std::vector<int>& k) {
    if (m < 1 || static_cast<int>(k.size()) != m) throw InvalidInput("iterated_ito: multi-index length must equal m");
    for (int v : k)
        if (v < 1 || v > path.d1) throw InvalidInput("multi-index entry exceeds the path dimension");
    std::vector<double> J(m + 1, 0.0);
    for (int j = 0; j < path.n_steps(); ++j) {
        for (int l = 1; l <= m; ++l) {
            const double inner = l < m ? J[l + 1] : g;
            J[l] += inner * path.increments(k[l - 1] - 1, j);
        }
    }
    return J[1];
}

double reconstruct(const ChaosKernelSet& ks, const WienerPath& path, int m) {
    if (m < 0 || m > ks.m_max) throw InvalidInput("reconstruct: order beyond the computed kernels");
    double out = ks.c;
    for (int i = 1; i <= m; ++i) {
        const auto& ko = ks.order(i);
        for (Eigen::Index mi = 0; mi < ko.values.rows(); ++mi) {
            const Vec row = ko.values.row(mi).transpose();
            if (row.cwiseAbs().maxCoeff() == 0.0) continue;
            const std::vector<double> vals(row.data(), row.data() + row.size());
            out += iterated_ito(ks.axis, i, vals, path, ks.multi_index_of(i, mi));
        }
    }
    return out;
}

// ---- export ---------------------------------------------------------------------

namespace {
template <class T>
void put_le(std::ofstream& out, T v) {
    unsigned char b[sizeof(T)];
    std::memcpy(b, &v, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(b, b + sizeof(T));
    out.write(reinterpret_cast<const char*>(b), sizeof(T));
}
}  // namespace

void export_kernels_binary(const ChaosKernelSet& ks, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InvalidInput("cannot write '" + path + "'");
    out.write("SSDECHS1", 8);
    put_le<double>(out, ks.axis.t0);
    put_le<std::int32_t>(out, ks.m_max);
    put_le<std::int32_t>(out, ks.d1);
    put_le<std::int32_t>(out, ks.axis.n_t);
    put_le<double>(out, ks.c);
    for (const auto& ko : ks.orders) {
        put_le<std::int32_t>(out, static_cast<std::int32_t>(ko.tuples.size()));
        for (const auto& t : ko.tuples)
            for (int c : t) put_le<std::int32_t>(out, c);
        for (Eigen::Index r = 0; r < ko.values.rows(); ++r)
            for (Eigen::Index c = 0; c < ko.values.cols(); ++c) put_le<double>(out, ko.values(r, c));
    }
}

}  // namespace strongsde
