#include "strongsde/sde.hpp"

#include "json.hpp"

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>

namespace strongsde {

Estimate mean_estimate(const std::vector<double>& samples) {
    Estimate e;
    e.n_paths = static_cast<long>(samples.size());
    if (samples.empty()) return e;
    double s = 0;
    for (double v : samples) s += v;
    e.value = s / samples.size();
    if (samples.size() > 1) {
        double ss = 0;
        for (double v : samples) ss += (v - e.value) * (v - e.value);
        e.std_error = std::sqrt(ss / (samples.size() - 1) / samples.size());
    }
    return e;
}

int default_threads() {
    if (const char* env = std::getenv("STRONGSDE_THREADS")) {
        const int n = std::atoi(env);
        if (n > 0) return n;
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

Mat parallel_paths(long n, int width, int threads, const std::function<void(long, double*)>& fn) {
    // row-major scratch so each path writes a contiguous row
    std::vector<double> buf(static_cast<size_t>(n) * width, 0.0);
    threads = std::max(1, std::min<int>(threads, static_cast<int>(std::max<long>(1, n))));
    std::atomic<long> next{0};
    std::exception_ptr err;
    std::mutex err_mu;
    auto work = [&] {
        for (long i; (i = next.fetch_add(1)) < n;) {
            try {
                fn(i, buf.data() + static_cast<size_t>(i) * width);
            } catch (...) {
                std::lock_guard<std::mutex> lk(err_mu);
                if (!err) err = std::current_exception();
                next = n;
            }
        }
    };
    if (threads == 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (int k = 0; k < threads; ++k) pool.emplace_back(work);
        for (auto& t : pool) t.join();
    }
    if (err) std::rethrow_exception(err);
    Mat out(n, width);
    for (long i = 0; i < n; ++i)
        for (int k = 0; k < width; ++k) out(i, k) = buf[static_cast<size_t>(i) * width + k];
    return out;
}

namespace {
Estimate column_estimate(const Mat& rows, int col) {
    const Vec c = rows.col(col);
    return mean_estimate(std::vector<double>(c.data(), c.data() + c.size()));
}
}  // namespace

std::string jsonl_record(const std::string& estimator, const Estimate& e, double dt, std::uint64_t seed) {
    nlohmann::json j{{"estimator", estimator}, {"value", e.value}, {"std_error", e.std_error},
                     {"n_paths", e.n_paths}, {"dt", dt}, {"seed", seed}};
    return j.dump();
}

// ---- Euler-Maruyama ---------------------------------------------------------

SolutionPath euler_maruyama(const CoefficientField& field, const WienerPath& path, double t, const Vec& x,
                            const EmOptions& opts) {
    if (x.size() != field.d) throw InvalidInput("euler_maruyama: start point has the wrong dimension");
    const int want = opts.sqrt_a ? field.d : field.d1;
    if (path.d1 != want)
        throw InvalidInput("euler_maruyama: path dimension " + std::to_string(path.d1) + ", expected " +
                           std::to_string(want));
    const int n = path.n_steps();
    SolutionPath sol;
    sol.t_start = t;
    sol.dt = path.dt;
    sol.states.resize(field.d, n + 1);
    sol.states.col(0) = x;
    Vec cur = x, b(field.d), scratch(field.d);
    Mat sig(field.d, field.d1);
    const bool drift = field.has_drift();
    for (int k = 0; k < n; ++k) {
        const double s = t + k * path.dt;
        field.sigma_into(s, cur, sig);
        Vec next = cur;
        if (opts.sqrt_a) {
            next += sqrt_spd(sig * sig.transpose()) * path.increments.col(k);
        } else {
            next += sig * path.increments.col(k);
        }
        if (drift) {
            field.b_into(s, cur, b, scratch);
            double step = b.norm() * path.dt;
            if (!std::isfinite(step)) {
                // only the singular point itself can give 0/0 here
                b.setZero();
                step = 0;
            }
            if (step > opts.cap_b) b *= opts.cap_b / step;
            next += b * path.dt;
        }
        if (!next.allFinite()) throw BlowUp(k);
        sol.states.col(k + 1) = next;
        cur = next;
    }
    return sol;
}

// ---- occupation functionals ---------------------------------------------------

KrylovEstimate krylov_ratio(const CoefficientField& field, const ScalarFn& f, double norm, const KrylovSetup& s) {
    if (s.m < 1) throw InvalidInput("krylov_ratio: m must be >= 1");
    const int d1 = s.em.sqrt_a ? field.d : field.d1;
    const Vec x0 = s.x.size() ? s.x : Vec::Zero(field.d);
    Mat rows = parallel_paths(s.n_paths, 1, s.threads, [&](long i, double* out) {
        const auto path = sample_wiener(d1, s.T, s.dt, s.seed, static_cast<std::uint64_t>(i));
        const auto sol = euler_maruyama(field, path, s.t, x0, s.em);
        double acc = 0;
        for (int k = 0; k < sol.n_steps(); ++k) acc += f(s.t + k * s.dt, sol.states.col(k)) * s.dt;
        out[0] = std::pow(acc, s.m);
    });
    const auto e = column_estimate(rows, 0);
    KrylovEstimate r;
    r.numerator = e.value;
    r.norm = norm;
    r.n_paths = s.n_paths;
    if (!(norm > 0)) {
        if (e.value != 0.0) throw InvalidInput("krylov_ratio: zero norm with a nonzero functional");
        return r;
    }
    const double scale = std::pow(norm, s.m);
    r.ratio = e.value / scale;
    r.std_error = e.std_error / scale;
    return r;
}

KrylovEstimate krylov_ratio(const CoefficientField& field, const ScalarField& f, const MixedNormSpec& spec,
                            const KrylovSetup& s, const QuadRes& res) {
    const auto nv = mixed_norm(f, spec, res);
    if (nv.divergent) throw InvalidInput("krylov_ratio: test function has an infinite norm");
    return krylov_ratio(field, f.fn, nv.value, s);
}

// ---- Girsanov ---------------------------------------------------------------

GirsanovWeights girsanov_weights(const CoefficientField& field, const SolutionPath& sol, const WienerPath& path,
                                 double n) {
    if (path.d1 != field.d1 || path.n_steps() != sol.n_steps())
        throw InvalidInput("girsanov_weights: path and solution do not match");
    const int N = sol.n_steps();
    GirsanovWeights g;
    g.n = n;
    g.gamma = Mat::Zero(field.d1, N + 1);
    g.envelope = Vec::Zero(N + 1);
    Vec sq(N + 1);
    for (int k = 0; k <= N; ++k) {
        const double s = sol.t_start + k * sol.dt;
        const Vec x = sol.states.col(k);
        const Mat sig = field.sigma(s, x);
        const Mat a = sig * sig.transpose();
        Eigen::SelfAdjointEigenSolver<Mat> es(a);
        const double lmin = es.eigenvalues().minCoeff();
        if (!(lmin > 0)) throw NumericalFailure("girsanov_weights: singular diffusion matrix");
        const bool on = s >= 0 && s <= field.t_max;
        const Vec bB = (field.b_B_fn && on) ? field.b_B(s, x) : Vec::Zero(field.d);
        if (bB.norm() > n) g.gamma.col(k) = sig.transpose() * a.ldlt().solve(bB);
        g.envelope[k] = (on ? field.b_bar(s) : 0.0) / std::sqrt(lmin);
        sq[k] = g.gamma.col(k).squaredNorm();
        if (g.gamma.col(k).norm() > g.envelope[k] * (1 + 1e-9) + 1e-14) g.envelope_ok = false;
    }
    double stoch = 0, leb = 0;
    for (int k = 0; k < N; ++k) {
        stoch += g.gamma.col(k).dot(path.increments.col(k));
        leb += 0.5 * (sq[k] + sq[k + 1]) * sol.dt;
    }
    g.phi = -stoch - 0.5 * leb;
    g.weight = std::exp(g.phi);
    if (!(g.weight > 0) || !std::isfinite(g.weight)) throw NumericalFailure("girsanov_weights: weight not finite");
    return g;
}

// ---- strongness ---------------------------------------------------------------

StrongnessGap strongness_gap(const CoefficientField& field, const TerminalFn& f, const ChaosKernelSet& ks,
                             long n_paths, double dt, std::uint64_t seed, int threads, const EmOptions& em) {
    const int M = ks.m_max;
    struct Term {
        int m;
        std::vector<int> k;
        std::vector<double> dense;
    };
    std::vector<Term> terms;
    for (int m = 1; m <= M; ++m) {
        const auto& ko = ks.order(m);
        for (Eigen::Index mi = 0; mi < ko.values.rows(); ++mi) {
            const Vec row = ko.values.row(mi).transpose();
            if (row.cwiseAbs().maxCoeff() == 0.0) continue;
            terms.push_back({m, ks.multi_index_of(m, mi),
                             dense_kernel(ks.axis, m, std::vector<double>(row.data(), row.data() + row.size()))});
        }
    }
    const Vec origin = Vec::Zero(field.d);
    Mat rows = parallel_paths(n_paths, M + 1, threads, [&](long i, double* out) {
        const auto path = sample_wiener(field.d1, ks.axis.t0, dt, seed, static_cast<std::uint64_t>(i));
        const auto sol = euler_maruyama(field, path, 0.0, origin, em);
        const double xi = f(sol.terminal());
        std::vector<double> partial(M + 1, 0.0);
        partial[0] = ks.c;
        for (const auto& t : terms) partial[t.m] += iterated_ito_dense(ks.axis, t.m, t.dense, path, t.k);
        double acc = 0;
        for (int m = 0; m <= M; ++m) {
            acc += m == 0 ? ks.c : partial[m];
            out[m] = (xi - acc) * (xi - acc);
        }
    });
    StrongnessGap r;
    for (int m = 0; m <= M; ++m) {
        r.mc_gap.push_back(column_estimate(rows, m));
        if (m < static_cast<int>(ks.tail.size())) r.tail.push_back(ks.tail[m]);
    }
    return r;
}

Estimate moment_bound_check(double g, int m, int n, double t0, double dt, long n_paths, std::uint64_t seed,
                            int threads) {
    if (m < 1 || n < 1) throw InvalidInput("moment_bound_check: need m >= 1 and n >= 1");
    const std::vector<int> k(m, 1);
    Mat rows = parallel_paths(n_paths, 1, threads, [&](long i, double* out) {
        const auto path = sample_wiener(1, t0, dt, seed, static_cast<std::uint64_t>(i));
        out[0] = std::pow(iterated_ito_constant(g, m, path, k), 2 * n);
    });
    double fact = 1;
    for (int i = 2; i <= m; ++i) fact *= i;
    const double l2sq = g * g * std::pow(t0, m) / fact;
    const double scale = std::pow(l2sq, n);
    if (!(scale > 0)) throw InvalidInput("moment_bound_check: zero kernel");
    auto e = column_estimate(rows, 0);
    e.value /= scale;
    e.std_error /= scale;
    return e;
}

}  // namespace strongsde
