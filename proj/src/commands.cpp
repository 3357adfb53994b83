#include "strongsde/commands.hpp"

#include "strongsde/acceptance.hpp"
#include "strongsde/chaos.hpp"
#include "strongsde/norms.hpp"
#include "strongsde/params.hpp"
#include "strongsde/sde.hpp"
#include "strongsde/smoothing.hpp"

#include <Eigen/Core>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

namespace strongsde {

namespace {

using json = nlohmann::json;

json num(double v) { return std::isfinite(v) ? json(v) : json(v > 0 ? "inf" : (v < 0 ? "-inf" : "nan")); }

json vec_json(const Vec& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

json item(bool pass, json detail) {
    detail["pass"] = pass;
    return detail;
}

std::vector<Sample> lattice_samples(const CoefficientField& f, double R, int per_axis) {
    std::vector<Sample> out;
    const std::vector<double> times{0.0, 0.5 * f.t_max, f.t_max};
    long total = 1;
    for (int a = 0; a < f.d; ++a) total *= per_axis;
    for (double t : times) {
        out.push_back({t, Vec::Zero(f.d)});
        for (long i = 0; i < total; ++i) {
            Vec x(f.d);
            long r = i;
            for (int a = 0; a < f.d; ++a) {
                x[a] = -R + 2 * R * (r % per_axis) / (per_axis - 1);
                r /= per_axis;
            }
            out.push_back({t, x});
        }
    }
    return out;
}

}  // namespace

// ---- check ------------------------------------------------------------------

Report cmd_check(const ExperimentConfig& cfg, const CommandOptions&) {
    Report r;
    r.command = "check";
    const auto field = build_field(cfg.field);
    const auto& th = cfg.thresholds;
    const auto& ex = cfg.exponents;

    const auto band = band_check(field, lattice_samples(field, 2.0, 5), field.delta, 1.0 / field.delta);
    r.results["eigenvalue_band"] = item(band.ok, {{"delta", field.delta},
                                                  {"min_eigenvalue", band.min_eig},
                                                  {"max_eigenvalue", band.max_eig},
                                                  {"worst_t", band.worst_t},
                                                  {"worst_x", vec_json(band.worst_x)}});

    BallPlan plan;
    plan.levels = th.levels + 2;
    plan.window = th.window;
    const double t_hi_s = field.sigma_time_dependent ? field.t_max : 0.0;
    plan.n_times = field.sigma_time_dependent ? 3 : 1;
    auto morrey_item = [&](const ScalarField& f, double p, double eps, double t_hi, const char* what) {
        const auto rep = morrey_hat(f, p, th.rho_f, 0.0, t_hi, plan);
        return item(!rep.divergent && rep.value <= eps,
                    {{"quantity", what}, {"p", p}, {"rho_f", th.rho_f}, {"value", num(rep.value)}, {"threshold", eps},
                     {"divergent", rep.divergent}, {"precision_warning", rep.precision_warning},
                     {"refined_value", num(rep.refined_value)}, {"worst_t", rep.worst_t},
                     {"worst_center", vec_json(rep.worst_center)}, {"worst_radius", rep.worst_radius},
                     {"balls", rep.balls}});
    };
    r.results["hat_dsigma_M"] = morrey_item(field.dsigma_M_norm(), ex.p_dsigma, th.eps_sigma, t_hi_s, "|D sigma_M|");
    plan.n_times = field.drift_time_dependent ? 3 : 1;
    r.results["hat_b_M"] = morrey_item(field.b_M_norm(), ex.p_b, th.eps_b,
                                       field.drift_time_dependent ? field.t_max : 0.0, "|b_M|");

    const auto uq = params::check_uniqueness_hypothesis(field.d, ex.frp_b, ex.frq_b);
    CylinderPlan cp;
    cp.levels = th.levels;
    cp.window = th.window;
    const auto hb = hat_b(field.b_norm(), ex.frp_b, ex.frq_b, th.r_b, uq.order, cp);
    json per_level = json::array();
    for (double v : hb.per_level) per_level.push_back(num(v));
    r.results["hat_b"] = item(!hb.divergent && std::isfinite(hb.value),
                              {{"frp_b", ex.frp_b}, {"frq_b", ex.frq_b}, {"order", params::to_string(uq.order)},
                               {"value", num(hb.value)}, {"divergent", hb.divergent}, {"per_level", per_level},
                               {"worst", {{"t_start", hb.worst.t_start}, {"t_end", hb.worst.t_end},
                                          {"center", vec_json(hb.worst.center)}, {"radius", hb.worst.radius}}},
                               {"cylinders", hb.cylinders}});
    r.results["uniqueness_hypothesis"] =
        item(uq.holds, {{"lhs", uq.lhs}, {"order", params::to_string(uq.order)}});

    std::vector<double> ts;
    for (double s : {0.01, 0.1, 0.5, 1.0}) ts.push_back(s * field.t_max);
    const double step = field.t_max / 64;
    const auto bb = beta_modulus(field.b_bar, ts, 0.0, field.t_max, step);
    const auto bd = beta_modulus(field.dsigma_bar, ts, 0.0, field.t_max, step);
    bool fin = true;
    for (double v : bb) fin = fin && std::isfinite(v);
    for (double v : bd) fin = fin && std::isfinite(v);
    r.results["beta_moduli"] = item(fin, {{"t", ts}, {"beta_b_bar", bb}, {"beta_dsigma_bar", bd}});

    std::ostringstream csv;
    csv << "t,beta_b_bar,beta_dsigma_bar\n";
    for (size_t i = 0; i < ts.size(); ++i) csv << ts[i] << "," << bb[i] << "," << bd[i] << "\n";
    r.csv.emplace_back("beta_moduli.csv", csv.str());

    for (auto& [k, v] : r.results.items()) {
        const bool ok = v["pass"].get<bool>();
        r.pass = r.pass && ok;
        r.console.push_back(std::string(ok ? "[PASS] " : "[FAIL] ") + k);
    }
    return r;
}

// ---- exponents ----------------------------------------------------------------

Report cmd_exponents(const ExperimentConfig& cfg, const CommandOptions&) {
    Report r;
    r.command = "exponents";
    const int d = cfg.field.d;
    const auto& ex = cfg.exponents;
    const auto lps = params::classify_lps(d, ex.frp_b, ex.frq_b);
    r.results["lps"] = {{"d", d}, {"p", ex.frp_b}, {"q", ex.frq_b}, {"label", params::to_string(lps.label)},
                        {"lhs", lps.lhs}};
    const auto uq = params::check_uniqueness_hypothesis(d, ex.frp_b, ex.frq_b);
    r.results["uniqueness"] = {{"holds", uq.holds}, {"lhs", uq.lhs}, {"order", params::to_string(uq.order)}};
    try {
        const auto sol = params::solve_exponents(d, ex.p_b, ex.p_dsigma, ex.frp_b, ex.frq_b);
        const auto& p = sol.profile;
        json trace = json::array();
        std::ostringstream csv;
        csv << "name,lo,hi,hi_inclusive,value\n";
        for (const auto& s : sol.trace) {
            trace.push_back({{"name", s.name}, {"lo", s.lo}, {"hi", num(s.hi)}, {"hi_inclusive", s.hi_inclusive},
                             {"value", s.value}});
            csv << s.name << "," << s.lo << "," << s.hi << "," << s.hi_inclusive << "," << s.value << "\n";
        }
        r.csv.emplace_back("exponent_trace.csv", csv.str());
        r.results["feasible"] = true;
        r.results["profile"] = {{"d", p.d},       {"p_b", p.p_b},     {"p_dsigma", p.p_dsigma}, {"frp_b", p.frp_b},
                                {"frq_b", p.frq_b}, {"p0", p.p0},     {"q0", p.q0},             {"alpha", p.alpha},
                                {"beta0", p.beta0}, {"beta0p", p.beta0p}, {"sfp", p.sfp},       {"sfq", p.sfq}};
        r.results["trace"] = trace;
        r.results["violated"] = params::violated_constraints(p);
        r.pass = params::violated_constraints(p).empty();
        r.console.push_back("feasible: p0=" + std::to_string(p.p0) + " q0=" + std::to_string(p.q0) +
                            " beta0=" + std::to_string(p.beta0));
    } catch (const params::Infeasible& e) {
        r.results["feasible"] = false;
        r.results["constraint"] = e.constraint();
        r.results["message"] = e.what();
        r.pass = false;
        r.console.push_back(std::string("infeasible: ") + e.what());
    } catch (const params::InvalidInput& e) {
        throw ConfigError(std::string("exponents: ") + e.what());
    }
    return r;
}

// ---- chaos ------------------------------------------------------------------

Report cmd_chaos(const ExperimentConfig& cfg, const CommandOptions&, const std::string& out_dir) {
    Report r;
    r.command = "chaos";
    const auto field = build_field(cfg.field);
    const auto grid = build_grid(cfg, field.d);
    const auto f = terminal_function(cfg.chaos.f, cfg.grid.L);
    ChaosOptions o;
    o.m_max = cfg.chaos.m_max;
    o.n_t = cfg.chaos.n_t;
    o.substeps = cfg.chaos.substeps;
    o.max_sweeps = cfg.chaos.max_sweeps;
    ChaosKernelSet ks;
    try {
        ks = compute_kernels(field, f, cfg.chaos.t0, grid, o);
    } catch (const CostGuardTripped& e) {
        r.pass = false;
        r.results = {{"refused", true}, {"sweep_estimate", e.estimate()}, {"cap", e.cap()}, {"message", e.what()}};
        r.console.push_back(std::string("refused: ") + e.what());
        return r;
    }
    const double gap = parseval_gap(ks);
    const double rel = ks.Tf2 > 0 ? std::abs(gap) / ks.Tf2 : std::abs(gap);
    bool monotone = true;
    json ladder = json::array();
    std::ostringstream csv;
    csv << "m,tail,kernel_energy\n";
    for (int m = 0; m <= ks.m_max; ++m) {
        const double energy = m == 0 ? ks.c * ks.c : ks.kernel_energy(m);
        ladder.push_back({{"m", m}, {"tail", ks.tail[m]}, {"kernel_energy", energy}});
        csv << m << "," << ks.tail[m] << "," << energy << "\n";
        if (m >= 1 && ks.tail[m] > ks.tail[m - 1] * (1 + 1e-6) && ks.tail[m] > 0) monotone = false;
    }
    r.csv.emplace_back("chaos_ladder.csv", csv.str());
    const bool parseval_ok = rel <= cfg.thresholds.parseval_tol * cfg.thresholds.tol_scale;
    r.results = {{"refused", false},
                 {"f", cfg.chaos.f},
                 {"t0", cfg.chaos.t0},
                 {"n_t", ks.axis.n_t},
                 {"epsilon_clip", ks.axis.epsilon_clip()},
                 {"pde_dt", ks.pde_grid.dt},
                 {"c", ks.c},
                 {"Tf2", ks.Tf2},
                 {"parseval_gap", gap},
                 {"parseval_relative", rel},
                 {"parseval_ok", parseval_ok},
                 {"tail_ladder", ladder},
                 {"tail_monotone", monotone},
                 {"sweeps", ks.sweeps}};
    r.pass = parseval_ok && monotone;
    if (!out_dir.empty()) {
        std::filesystem::create_directories(out_dir);
        export_kernels_binary(ks, (std::filesystem::path(out_dir) / "kernels.bin").string());
    }
    std::ostringstream line;
    line << "c=" << ks.c << " Tf2=" << ks.Tf2 << " parseval_rel=" << rel << " tails:";
    for (double t : ks.tail) line << " " << t;
    r.console.push_back(line.str());
    return r;
}

// ---- simulate -----------------------------------------------------------------

Report cmd_simulate(const ExperimentConfig& cfg, const CommandOptions& opts) {
    Report r;
    r.command = "simulate";
    const auto field = build_field(cfg.field);
    const auto& sm = cfg.simulation;
    const std::uint64_t seed = opts.seed.value_or(sm.seed);
    const double t0 = cfg.chaos.t0;
    EmOptions em;
    em.cap_b = sm.cap_b > 0 ? sm.cap_b : 0.5 * cfg.grid.h;
    em.sqrt_a = sm.sqrt_a;
    const int d = field.d;
    const int dw = sm.sqrt_a ? d : field.d1;
    const bool girsanov = !sm.sqrt_a;
    const int width = d + 1 + 2;
    Mat rows = parallel_paths(sm.n_paths, width, opts.threads, [&](long i, double* out) {
        const auto path = sample_wiener(dw, t0, sm.dt, seed, static_cast<std::uint64_t>(i));
        const auto sol = euler_maruyama(field, path, 0.0, Vec::Zero(d), em);
        const Vec x = sol.terminal();
        for (int a = 0; a < d; ++a) out[a] = x[a];
        out[d] = x.squaredNorm();
        if (girsanov) {
            const auto gw = girsanov_weights(field, sol, path, sm.girsanov_level);
            out[d + 1] = gw.weight;
            out[d + 2] = gw.envelope_ok ? 0.0 : 1.0;
        } else {
            out[d + 1] = 1.0;
            out[d + 2] = 0.0;
        }
    });
    auto col = [&](int k) {
        const Vec c = rows.col(k);
        return mean_estimate(std::vector<double>(c.data(), c.data() + c.size()));
    };
    json mean = json::array(), se = json::array();
    bool zero_mean = true;
    for (int a = 0; a < d; ++a) {
        const auto e = col(a);
        mean.push_back(e.value);
        se.push_back(e.std_error);
        zero_mean = zero_mean && std::abs(e.value) <= 3 * e.std_error;
        r.jsonl.push_back(jsonl_record("mean_x" + std::to_string(a + 1), e, sm.dt, seed));
    }
    const auto m2 = col(d);
    r.jsonl.push_back(jsonl_record("mean_abs_x_squared", m2, sm.dt, seed));
    r.results["euler_maruyama"] = {{"n_paths", sm.n_paths}, {"dt", sm.dt}, {"t0", t0}, {"cap_b", em.cap_b},
                                   {"sqrt_a", sm.sqrt_a}, {"mean_x", mean}, {"std_error_x", se},
                                   {"mean_abs_x_squared", m2.value}, {"std_error_abs_x_squared", m2.std_error}};
    if (!field.has_drift()) {
        r.results["zero_drift_mean"] = item(zero_mean, {{"criterion", "|E x_t0| <= 3 SE per component"}});
        r.pass = r.pass && zero_mean;
    }
    if (girsanov) {
        const auto w = col(d + 1);
        const double bad = rows.col(d + 2).sum();
        const bool ok = (w.std_error > 0 ? std::abs(w.value - 1.0) <= 3 * w.std_error
                                         : std::abs(w.value - 1.0) <= 1e-12) && bad == 0.0;
        r.results["girsanov"] = item(ok, {{"level", sm.girsanov_level}, {"mean_weight", w.value},
                                          {"std_error", w.std_error}, {"envelope_violations", bad}});
        r.jsonl.push_back(jsonl_record("girsanov_mean_weight", w, sm.dt, seed));
        r.pass = r.pass && ok;
    }

    // occupation functional of a bump around the start point
    double p0 = 2.5, q0 = 4.0;
    try {
        const auto prof = params::solve_exponents(std::max(3, d), cfg.exponents.p_b, cfg.exponents.p_dsigma,
                                                  cfg.exponents.frp_b, cfg.exponents.frq_b)
                              .profile;
        p0 = prof.p0;
        q0 = prof.q0;
    } catch (const std::exception&) {
    }
    ScalarField bumpf;
    bumpf.d = d;
    bumpf.fn = [](double, const Vec& x) { return bump(x.squaredNorm() / 0.25); };
    MixedNormSpec spec;
    spec.p = p0;
    spec.q = q0;
    spec.cyl = {0.0, t0, Vec::Zero(d), 0.5};
    json kry = json::array();
    for (int m = 1; m <= 2; ++m) {
        KrylovSetup ks;
        ks.x = Vec::Zero(d);
        ks.T = t0;
        ks.dt = sm.dt;
        ks.m = m;
        ks.n_paths = sm.n_paths;
        ks.seed = seed;
        ks.threads = opts.threads;
        ks.em = em;
        const auto k = krylov_ratio(field, bumpf, spec, ks);
        kry.push_back({{"m", m}, {"ratio", k.ratio}, {"std_error", k.std_error}, {"numerator", k.numerator},
                       {"norm", k.norm}, {"p0", p0}, {"q0", q0}});
        r.jsonl.push_back(jsonl_record("krylov_ratio_m" + std::to_string(m), {k.ratio, k.std_error, k.n_paths},
                                       sm.dt, seed));
    }
    r.results["krylov"] = kry;

    if (sm.strongness && !sm.sqrt_a) {
        ChaosOptions o;
        o.m_max = cfg.chaos.m_max;
        o.n_t = cfg.chaos.n_t;
        o.substeps = cfg.chaos.substeps;
        o.max_sweeps = cfg.chaos.max_sweeps;
        const auto f = terminal_function(cfg.chaos.f, cfg.grid.L);
        try {
            const auto ks = compute_kernels(field, f, t0, build_grid(cfg, d), o);
            const double path_dt = ks.axis.delta() / std::max(1L, std::lround(ks.axis.delta() / sm.dt));
            const auto g = strongness_gap(field, f, ks, sm.strongness_paths, path_dt, seed, opts.threads, em);
            json rows_s = json::array();
            std::ostringstream csv;
            csv << "m,mc_gap,std_error,tail\n";
            bool agree = true, decreasing = true;
            for (size_t m = 0; m < g.mc_gap.size(); ++m) {
                const double tail = m < g.tail.size() ? g.tail[m] : std::nan("");
                const bool a = std::abs(g.mc_gap[m].value - tail) <=
                               3 * g.mc_gap[m].std_error + cfg.thresholds.agreement_tol * g.tail[0];
                agree = agree && a;
                if (m > 0 && g.mc_gap[m].value > g.mc_gap[m - 1].value) decreasing = false;
                rows_s.push_back({{"m", m}, {"mc_gap", g.mc_gap[m].value}, {"std_error", g.mc_gap[m].std_error},
                                  {"tail_value", tail}, {"agree", a}});
                csv << m << "," << g.mc_gap[m].value << "," << g.mc_gap[m].std_error << "," << tail << "\n";
                r.jsonl.push_back(jsonl_record("strongness_gap_m" + std::to_string(m), g.mc_gap[m], path_dt, seed));
            }
            r.csv.emplace_back("strongness_gap.csv", csv.str());
            r.results["strongness_gap"] = {{"f", cfg.chaos.f}, {"path_dt", path_dt}, {"n_paths", sm.strongness_paths},
                                           {"rows", rows_s}, {"agreement", agree}, {"decreasing_in_m", decreasing}};
        } catch (const CostGuardTripped& e) {
            r.results["strongness_gap"] = {{"refused", true}, {"sweep_estimate", e.estimate()}, {"cap", e.cap()}};
        }
    }
    std::ostringstream line;
    line << "E|x_t0|^2=" << m2.value << " +- " << m2.std_error;
    if (girsanov) line << ", mean weight=" << r.results["girsanov"]["mean_weight"].get<double>();
    r.console.push_back(line.str());
    return r;
}

// ---- verify -------------------------------------------------------------------

Report cmd_verify(const ExperimentConfig& cfg, const CommandOptions& opts) {
    Report r;
    r.command = "verify";
    AcceptanceOptions ao;
    ao.tol_scale = cfg.thresholds.tol_scale;
    ao.filter = opts.filter;
    ao.threads = opts.threads;
    if (opts.seed) ao.seed = *opts.seed;
    bool known = opts.filter.empty();
    for (const auto& c : acceptance_catalog()) known = known || matches_filter(c, opts.filter);
    if (!known) throw ConfigError("verify: filter '" + opts.filter + "' matches no criterion");
    json items = json::array();
    for (const auto& res : run_acceptance(ao)) {
        auto j = to_json(res);
        j.erase("seconds");
        items.push_back(j);
        r.timings[std::to_string(res.id)] = res.seconds;
        r.pass = r.pass && res.pass;
        r.console.push_back(summary_line(res));
    }
    r.results = {{"filter", opts.filter}, {"tol_scale", ao.tol_scale}, {"criteria", items}};
    return r;
}

// ---- output -------------------------------------------------------------------

json report_json(const Report& r, const ExperimentConfig& cfg, double wall_seconds) {
    std::ostringstream eig;
    eig << EIGEN_WORLD_VERSION << "." << EIGEN_MAJOR_VERSION << "." << EIGEN_MINOR_VERSION;
    return {{"command", r.command},
            {"config", to_json(cfg)},
            {"results", r.results},
            {"pass", r.pass},
            {"wall_time_s", wall_seconds},
            {"timings", r.timings},
            {"versions", {{"strongsde", "0.1.0"}, {"eigen", eig.str()}, {"compiler", __VERSION__}}}};
}

void write_report(const Report& r, const ExperimentConfig& cfg, double wall_seconds, const std::string& dir) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    auto open = [&](const std::string& name) {
        std::ofstream out(fs::path(dir) / name);
        if (!out) throw ConfigError("cannot write '" + (fs::path(dir) / name).string() + "'");
        return out;
    };
    {
        auto out = open(r.command + ".json");
        out << report_json(r, cfg, wall_seconds).dump(2) << "\n";
    }
    for (const auto& [name, body] : r.csv) {
        auto out = open(name);
        out << body;
    }
    if (!r.jsonl.empty()) {
        auto out = open(r.command + ".jsonl");
        for (const auto& l : r.jsonl) out << l << "\n";
    }
}

}  // namespace strongsde
