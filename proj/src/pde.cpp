#include "strongsde/pde.hpp"

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseLU>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <limits>
#include <fstream>
#include <iomanip>

namespace strongsde {

using SpMat = Eigen::SparseMatrix<double>;

// ---- grid -----------------------------------------------------------------

int SpaceTimeGrid::n_axis() const { return static_cast<int>(std::lround(2 * L / h)) - 1; }

long SpaceTimeGrid::n_nodes() const {
    long n = 1;
    for (int i = 0; i < d; ++i) n *= n_axis();
    return n;
}

int SpaceTimeGrid::n_steps() const { return static_cast<int>(std::lround(t0 / dt)); }

int SpaceTimeGrid::index_of(double t) const {
    const double r = (t0 - t) / dt;
    const long j = std::lround(r);
    if (std::abs(r - j) > 1e-6 || j < 0 || j > n_steps())
        throw InvalidInput("time " + std::to_string(t) + " is not a grid time");
    return static_cast<int>(j);
}

void SpaceTimeGrid::validate() const {
    if (d < 1) throw InvalidInput("grid: d must be >= 1");
    if (!(h > 0) || !(L > 0) || !(dt > 0) || !(t0 > 0)) throw InvalidInput("grid: L, h, dt, t0 must be > 0");
    const double k = L / h;
    if (std::abs(k - std::lround(k)) > 1e-9 * std::max(1.0, k))
        throw InvalidInput("grid: L/h must be an integer so that x = 0 is a node");
    if (n_axis() < 1) throw InvalidInput("grid: box holds no interior nodes");
    const double n = t0 / dt;
    if (std::abs(n - std::lround(n)) > 1e-6 * std::max(1.0, n)) throw InvalidInput("grid: dt must divide t0");
}

Vec SpaceTimeGrid::coord(long node) const {
    const int m = n_axis();
    Vec x(d);
    for (int a = 0; a < d; ++a) {
        x[a] = -L + (static_cast<double>(node % m) + 1) * h;
        node /= m;
    }
    return x;
}

long SpaceTimeGrid::origin() const {
    const long m = n_axis();
    const long c = std::lround(L / h) - 1;
    long idx = 0, stride = 1;
    for (int a = 0; a < d; ++a) {
        idx += c * stride;
        stride *= m;
    }
    return idx;
}

double SpaceTimeGrid::box_for_tail(double N, double t0, double tol, double h) {
    const double L = -N * t0 * std::log(tol);
    return std::ceil(L / h) * h;
}

Vec sample_on_grid(const SpaceTimeGrid& g, const TerminalFn& f) {
    Vec u(g.n_nodes());
    for (long i = 0; i < u.size(); ++i) u[i] = f(g.coord(i));
    return u;
}

std::vector<Vec> grid_gradient(const SpaceTimeGrid& g, const Vec& u) {
    const long n = g.n_nodes();
    const int m = g.n_axis();
    std::vector<Vec> out(g.d, Vec(n));
    long stride = 1;
    for (int a = 0; a < g.d; ++a) {
        for (long i = 0; i < n; ++i) {
            const long ia = (i / stride) % m;
            const double up = ia + 1 < m ? u[i + stride] : 0.0;
            const double dn = ia > 0 ? u[i - stride] : 0.0;
            out[a][i] = (up - dn) / (2 * g.h);
        }
        stride *= m;
    }
    return out;
}

double grid_lp_norm(const SpaceTimeGrid& g, const std::vector<Vec>& comps, double p) {
    const double vol = std::pow(g.h, g.d);
    double s = 0.0;
    for (long i = 0; i < comps.front().size(); ++i) {
        double r2 = 0.0;
        for (const auto& c : comps) r2 += c[i] * c[i];
        s += std::pow(r2, 0.5 * p) * vol;
    }
    return std::pow(s, 1.0 / p);
}

// ---- operator -------------------------------------------------------------

struct EvolutionOperator::Step {
    SpMat A;
    SpMat At;
    std::unique_ptr<Eigen::SparseLU<SpMat, Eigen::COLAMDOrdering<int>>> lu;
    std::unique_ptr<Eigen::BiCGSTAB<SpMat, Eigen::DiagonalPreconditioner<double>>> it, itT;
};

namespace {

// Drift at a node; at a declared singular point the cell average replaces
// the pointwise value.
Vec node_drift(const CoefficientField& f, double t, const Vec& x, double h) {
    for (const auto& s : f.b_M_singular) {
        if ((x - s.center).norm() > 1e-9 * h) continue;
        const int q = 4;
        long total = 1;
        for (int a = 0; a < f.d; ++a) total *= q;
        Vec acc = Vec::Zero(f.d), y(f.d);
        for (long idx = 0; idx < total; ++idx) {
            long r = idx;
            for (int a = 0; a < f.d; ++a) {
                y[a] = x[a] + ((static_cast<double>(r % q) + 0.5) / q - 0.5) * h;
                r /= q;
            }
            acc += f.b(t, y);
        }
        return acc / static_cast<double>(total);
    }
    return f.b(t, x);
}

SpMat assemble(const CoefficientField& f, const SpaceTimeGrid& g, double t) {
    const long n = g.n_nodes();
    const int m = g.n_axis(), d = g.d;
    const double h = g.h, dt = g.dt, h2 = h * h;
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(static_cast<size_t>(n) * (1 + 2 * d + 2 * d * (d - 1)));
    std::vector<long> stride(d);
    stride[0] = 1;
    for (int a = 1; a < d; ++a) stride[a] = stride[a - 1] * m;
    Mat sig(d, f.d1);
    std::vector<long> ia(d);
    for (long i = 0; i < n; ++i) {
        const Vec x = g.coord(i);
        for (int a = 0; a < d; ++a) ia[a] = (i / stride[a]) % m;
        f.sigma_into(t, x, sig);
        const Mat a_ = sig * sig.transpose();
        const Vec b = f.has_drift() ? node_drift(f, t, x, h) : Vec::Zero(d);
        double diag = 1.0;
        for (int a = 0; a < d; ++a) {
            const double diff = 0.5 * a_(a, a) / h2;
            const double up = diff + std::max(b[a], 0.0) / h;
            const double dn = diff + std::max(-b[a], 0.0) / h;
            diag += dt * (up + dn);
            if (ia[a] + 1 < m) trip.emplace_back(i, i + stride[a], -dt * up);
            if (ia[a] > 0) trip.emplace_back(i, i - stride[a], -dt * dn);
        }
        for (int a = 0; a < d; ++a)
            for (int c = a + 1; c < d; ++c) {
                const double w = a_(a, c) / (4 * h2);
                if (w == 0.0) continue;
                for (int sa : {-1, 1})
                    for (int sc : {-1, 1}) {
                        const long ja = ia[a] + sa, jc = ia[c] + sc;
                        if (ja < 0 || ja >= m || jc < 0 || jc >= m) continue;
                        trip.emplace_back(i, i + sa * stride[a] + sc * stride[c], -dt * w * sa * sc);
                    }
            }
        trip.emplace_back(i, i, diag);
    }
    SpMat A(n, n);
    A.setFromTriplets(trip.begin(), trip.end());
    A.makeCompressed();
    return A;
}

}  // namespace

EvolutionOperator::EvolutionOperator(const CoefficientField& field, const SpaceTimeGrid& grid,
                                     const SolverOptions& opts)
    : field_(field), grid_(grid), opts_(opts) {
    grid_.validate();
    if (field.d != grid.d) throw InvalidInput("grid dimension does not match the field");
    time_dependent_ = field.sigma_time_dependent ||
                      (field.has_drift() && (field.drift_time_dependent || grid.t0 > field.t_max));
    direct_ = grid_.n_nodes() <= opts_.direct_limit;
    const int n_mats = time_dependent_ ? grid_.n_steps() : 1;
    for (int j = 0; j < n_mats; ++j) {
        auto s = std::make_unique<Step>();
        s->A = assemble(field_, grid_, time_dependent_ ? grid_.time(j + 1) : grid_.time(1));
        if (direct_) {
            s->lu = std::make_unique<Eigen::SparseLU<SpMat, Eigen::COLAMDOrdering<int>>>();
            s->lu->compute(s->A);
            if (s->lu->info() != Eigen::Success)
                throw NumericalFailure("sparse LU factorization failed at step " + std::to_string(j));
        } else {
            s->At = s->A.transpose();
            s->it = std::make_unique<Eigen::BiCGSTAB<SpMat, Eigen::DiagonalPreconditioner<double>>>();
            s->itT = std::make_unique<Eigen::BiCGSTAB<SpMat, Eigen::DiagonalPreconditioner<double>>>();
            for (auto* sol : {s->it.get(), s->itT.get()}) {
                sol->setTolerance(0.1 * opts_.tol);
                sol->setMaxIterations(opts_.max_iter);
            }
            s->it->compute(s->A);
            s->itT->compute(s->At);
        }
        steps_.push_back(std::move(s));
    }
}

EvolutionOperator::~EvolutionOperator() = default;

const EvolutionOperator::Step& EvolutionOperator::step_for(int j) const {
    if (j < 0 || j >= grid_.n_steps()) throw InvalidInput("step index out of range");
    return *steps_[time_dependent_ ? j : 0];
}

const SpMat& EvolutionOperator::matrix(int j) const { return step_for(j).A; }

void EvolutionOperator::check_residual(const SpMat& A, const Mat& X, const Mat& B) const {
    for (Eigen::Index c = 0; c < B.cols(); ++c) {
        const double nb = B.col(c).norm();
        if (nb == 0.0) continue;
        const double r = (A * X.col(c) - B.col(c)).norm() / nb;
        double cur = max_residual_.load();
        while (r > cur && !max_residual_.compare_exchange_weak(cur, r)) {
        }
        if (r > opts_.tol)
            throw NumericalFailure("linear solve residual " + std::to_string(r) + " exceeds tolerance " +
                                   std::to_string(opts_.tol));
    }
}

void EvolutionOperator::step(int j, Mat& U) const {
    const auto& s = step_for(j);
    Mat X;
    if (direct_) {
        X = s.lu->solve(U);
    } else {
        X.resize(U.rows(), U.cols());
        for (Eigen::Index c = 0; c < U.cols(); ++c) {
            X.col(c) = s.it->solveWithGuess(U.col(c), U.col(c));
            if (s.it->info() != Eigen::Success)
                throw NumericalFailure("BiCGSTAB did not converge, estimated residual " +
                                       std::to_string(s.it->error()));
        }
    }
    check_residual(s.A, X, U);
    U.swap(X);
}

void EvolutionOperator::step(int j, Vec& u) const {
    Mat U = u;
    step(j, U);
    u = U.col(0);
}

void EvolutionOperator::step_adjoint(int j, Mat& P) const {
    const auto& s = step_for(j);
    Mat X;
    if (direct_) {
        X = s.lu->transpose().solve(P);
        // residual against A^T without forming it
        for (Eigen::Index c = 0; c < P.cols(); ++c) {
            const double nb = P.col(c).norm();
            if (nb == 0.0) continue;
            const double r = (s.A.transpose() * X.col(c) - P.col(c)).norm() / nb;
            if (r > opts_.tol) throw NumericalFailure("adjoint solve residual " + std::to_string(r));
        }
    } else {
        X.resize(P.rows(), P.cols());
        for (Eigen::Index c = 0; c < P.cols(); ++c) {
            X.col(c) = s.itT->solveWithGuess(P.col(c), P.col(c));
            if (s.itT->info() != Eigen::Success) throw NumericalFailure("adjoint BiCGSTAB did not converge");
        }
        check_residual(s.At, X, P);
    }
    P.swap(X);
}

std::vector<Vec> EvolutionOperator::origin_density() const {
    const int n = grid_.n_steps();
    std::vector<Vec> pi(n + 1);
    Mat p = Mat::Zero(grid_.n_nodes(), 1);
    p(grid_.origin(), 0) = 1.0;
    pi[n] = p.col(0);
    for (int j = n - 1; j >= 0; --j) {
        step_adjoint(j, p);
        pi[j] = p.col(0);
    }
    return pi;
}

void EvolutionOperator::sigma_at_nodes(int j, std::vector<Mat>& out) const {
    const long n = grid_.n_nodes();
    out.resize(n);
    const double t = grid_.time(j);
    for (long i = 0; i < n; ++i) field_.sigma_into(t, grid_.coord(i), out[i]);
}

// ---- solves ---------------------------------------------------------------

const Vec& EvolutionSolve::at(int j) const {
    if (kept_all) {
        if (j < j_start || j > j_stop) throw InvalidInput("time index outside the solve");
        return u[j - j_start];
    }
    if (j == j_start) return u.front();
    if (j == j_stop) return u.back();
    throw InvalidInput("intermediate times were not kept");
}

EvolutionSolve solve_backward(const EvolutionOperator& op, const Vec& terminal, int j_start, int j_stop,
                              bool keep_all) {
    const auto& g = op.grid();
    if (j_stop < 0) j_stop = g.n_steps();
    if (j_start < 0 || j_stop > g.n_steps() || j_stop < j_start) throw InvalidInput("bad solve range");
    if (terminal.size() != g.n_nodes()) throw InvalidInput("terminal data has the wrong size");
    if (!terminal.allFinite()) throw InvalidInput("terminal data must be finite");

    EvolutionSolve s;
    s.grid = g;
    s.j_start = j_start;
    s.j_stop = j_stop;
    s.kept_all = keep_all;
    s.terminal = terminal;
    const double fmax = std::max(terminal.maxCoeff(), 0.0), fmin = std::min(terminal.minCoeff(), 0.0);
    const double tol = 1e-6 * terminal.cwiseAbs().maxCoeff();
    Vec u = terminal;
    s.u.push_back(u);
    for (int j = j_start; j < j_stop; ++j) {
        op.step(j, u);
        if (u.maxCoeff() > fmax + tol || u.minCoeff() < fmin - tol) s.max_principle_warning = true;
        if (keep_all || j + 1 == j_stop) s.u.push_back(u);
    }
    s.max_residual = op.max_residual();
    return s;
}

EvolutionSolve solve_backward(const CoefficientField& field, const TerminalFn& f, const SpaceTimeGrid& grid,
                              const SolverOptions& opts) {
    EvolutionOperator op(field, grid, opts);
    return solve_backward(op, sample_on_grid(grid, f));
}

Vec apply_Q(const CoefficientField& field, const EvolutionSolve& solve, int k, int j) {
    if (k < 1 || k > field.d1) throw InvalidInput("apply_Q: k must lie in [1, d1]");
    const auto& g = solve.grid;
    const auto Du = solve.gradient(j);
    const double t = g.time(j);
    Vec out(g.n_nodes());
    Mat sig(field.d, field.d1);
    for (long i = 0; i < out.size(); ++i) {
        field.sigma_into(t, g.coord(i), sig);
        double acc = 0.0;
        for (int a = 0; a < g.d; ++a) acc += sig(a, k - 1) * Du[a][i];
        out[i] = acc;
    }
    return out;
}

Mat apply_Q_all(const EvolutionOperator& op, const Vec& u, int j) {
    const auto& g = op.grid();
    const auto& f = op.field();
    const auto Du = grid_gradient(g, u);
    const double t = g.time(j);
    Mat out(g.n_nodes(), f.d1);
    Mat sig(f.d, f.d1);
    Vec du(g.d);
    for (long i = 0; i < out.rows(); ++i) {
        f.sigma_into(t, g.coord(i), sig);
        for (int a = 0; a < g.d; ++a) du[a] = Du[a][i];
        out.row(i) = du.transpose() * sig;
    }
    return out;
}

// ---- diagnostics ------------------------------------------------------------

DecayFit fit_gradient_decay(const EvolutionSolve& solve, double p0, const std::vector<double>& s_values) {
    DecayFit fit;
    fit.threshold = (1.0 / p0 - 1.0) - 0.1;
    const auto& g = solve.grid;
    for (double s : s_values) {
        const double t = g.time(solve.j_start) - s;
        int j;
        try {
            j = g.index_of(t);
        } catch (const InvalidInput&) {
            continue;
        }
        if (j <= solve.j_start || j > solve.j_stop) continue;
        const double nrm = grid_lp_norm(g, solve.gradient(j), p0);
        if (!(nrm > 0) || !std::isfinite(nrm)) continue;
        fit.s.push_back(s);
        fit.norms.push_back(nrm);
    }
    if (fit.s.size() < 4) throw InsufficientData("fit_gradient_decay: fewer than 4 usable times");
    const size_t n = fit.s.size();
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (size_t i = 0; i < n; ++i) {
        const double x = std::log(fit.s[i]), y = std::log(fit.norms[i]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    fit.slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    fit.compliant = fit.slope >= fit.threshold;
    return fit;
}

DecayFit fit_gradient_decay(const CoefficientField& field, const TerminalFn& f, const SpaceTimeGrid& grid,
                            double p0, const std::vector<double>& s_values, const SolverOptions& opts) {
    return fit_gradient_decay(solve_backward(field, f, grid, opts), p0, s_values);
}

TailFit check_gaussian_tail(const EvolutionSolve& solve, double R, double inflation) {
    TailFit fit;
    const auto& g = solve.grid;
    for (int j = solve.j_start; j <= solve.j_stop; ++j) {
        if (!solve.kept_all && j != solve.j_start && j != solve.j_stop) continue;
        fit.C = std::max(fit.C, solve.at(j).cwiseAbs().maxCoeff());
    }
    const double rmin = std::max(2.0, R + inflation);
    for (int j = solve.j_start + 1; j <= solve.j_stop; ++j) {
        if (!solve.kept_all && j != solve.j_stop) continue;
        const double s = g.time(solve.j_start) - g.time(j);
        const Vec& u = solve.at(j);
        for (long i = 0; i < u.size(); ++i) {
            const double r = g.coord(i).norm();
            if (r < rmin) continue;
            ++fit.points;
            const double a = std::abs(u[i]);
            if (a == 0.0) continue;
            if (a >= fit.C) {
                fit.N = std::numeric_limits<double>::infinity();
                continue;
            }
            fit.N = std::max(fit.N, r / (s * std::log(fit.C / a)));
        }
    }
    return fit;
}

void export_columnar(const EvolutionSolve& solve, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw InvalidInput("cannot write '" + path + "'");
    const auto& g = solve.grid;
    out << "# t";
    for (int a = 0; a < g.d; ++a) out << " x" << a + 1;
    out << " u";
    for (int a = 0; a < g.d; ++a) out << " Du" << a + 1;
    out << "\n" << std::setprecision(17);
    for (int j = solve.j_start; j <= solve.j_stop; ++j) {
        if (!solve.kept_all && j != solve.j_start && j != solve.j_stop) continue;
        const Vec& u = solve.at(j);
        const auto Du = grid_gradient(g, u);
        for (long i = 0; i < u.size(); ++i) {
            out << g.time(j);
            const Vec x = g.coord(i);
            for (int a = 0; a < g.d; ++a) out << ' ' << x[a];
            out << ' ' << u[i];
            for (int a = 0; a < g.d; ++a) out << ' ' << Du[a][i];
            out << '\n';
        }
    }
}

namespace {
template <class T>
void put_le(std::ofstream& out, T v) {
    static_assert(std::is_trivially_copyable_v<T>);
    unsigned char b[sizeof(T)];
    std::memcpy(b, &v, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(b, b + sizeof(T));
    out.write(reinterpret_cast<const char*>(b), sizeof(T));
}
}  // namespace

void export_binary(const EvolutionSolve& solve, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InvalidInput("cannot write '" + path + "'");
    const auto& g = solve.grid;
    std::vector<int> js;
    for (int j = solve.j_start; j <= solve.j_stop; ++j)
        if (solve.kept_all || j == solve.j_start || j == solve.j_stop) js.push_back(j);
    out.write("SSDEGRD1", 8);
    put_le<std::int32_t>(out, g.d);
    put_le<std::int32_t>(out, g.n_axis());
    put_le<std::int32_t>(out, static_cast<std::int32_t>(js.size()));
    put_le<double>(out, g.L);
    put_le<double>(out, g.h);
    put_le<double>(out, g.dt);
    put_le<double>(out, g.t0);
    for (int j : js) put_le<double>(out, g.time(j));
    for (int j : js)
        for (long i = 0; i < g.n_nodes(); ++i) put_le<double>(out, solve.at(j)[i]);
    for (int j : js) {
        const auto Du = grid_gradient(g, solve.at(j));
        for (int a = 0; a < g.d; ++a)
            for (long i = 0; i < g.n_nodes(); ++i) put_le<double>(out, Du[a][i]);
    }
}

}  // namespace strongsde
