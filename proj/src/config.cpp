#include "strongsde/config.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

namespace strongsde {

namespace {

struct Reader {
    std::string source;

    [[noreturn]] void fail(const YAML::Node& n, const std::string& msg) const {
        const auto m = n.Mark();
        std::string where = source;
        if (!m.is_null()) where += ":" + std::to_string(m.line + 1);
        throw ConfigError(where + ": " + msg);
    }

    void keys(const YAML::Node& sec, const std::string& name, std::initializer_list<const char*> allowed) const {
        if (!sec.IsMap()) fail(sec, "section '" + name + "' must be a mapping");
        std::set<std::string> ok(allowed.begin(), allowed.end());
        for (const auto& kv : sec) {
            const auto k = kv.first.as<std::string>();
            if (!ok.count(k)) fail(kv.first, "unknown key '" + k + "' in section '" + name + "'");
        }
    }

    template <class T>
    void get(const YAML::Node& sec, const char* key, T& out) const {
        const auto n = sec[key];
        if (!n) return;
        try {
            out = n.as<T>();
        } catch (const YAML::Exception&) {
            fail(n, std::string("bad value for '") + key + "'");
        }
    }

    void positive(const YAML::Node& sec, const char* key, double v) const {
        if (!(v > 0) || !std::isfinite(v)) fail(sec[key] ? sec[key] : sec, std::string("'") + key + "' must be > 0");
    }
};

}  // namespace

ExperimentConfig parse_config(const std::string& text, const std::string& source, const std::string& base_dir) {
    Reader rd{source};
    YAML::Node root;
    try {
        root = YAML::Load(text);
    } catch (const YAML::ParserException& e) {
        throw ConfigError(source + ":" + std::to_string(e.mark.line + 1) + ": " + e.msg);
    }
    ExperimentConfig c;
    c.source = source;
    if (!root || root.IsNull()) return c;
    rd.keys(root, "<top>", {"field", "exponents", "grid", "chaos", "simulation", "thresholds", "output"});

    if (const auto s = root["field"]) {
        rd.keys(s, "field", {"builtin", "d", "d1", "alpha", "beta", "gamma", "xi", "xi_table", "eta", "drift",
                             "scale", "path", "delta", "fd_step", "t_max"});
        auto& f = c.field;
        rd.get(s, "builtin", f.builtin);
        static const std::set<std::string> names{"example3d", "unit", "constant_drift", "scaled", "tabulated"};
        if (!names.count(f.builtin)) rd.fail(s["builtin"], "unknown builtin '" + f.builtin + "'");
        if (f.builtin == "example3d") {
            f.d = 3;
            f.d1 = 12;
        } else if (f.builtin != "tabulated") {
            f.d = 1;
            f.d1 = 1;
        }
        rd.get(s, "d", f.d);
        rd.get(s, "d1", f.d1);
        rd.get(s, "alpha", f.alpha);
        rd.get(s, "beta", f.beta);
        rd.get(s, "gamma", f.gamma);
        rd.get(s, "xi", f.xi);
        rd.get(s, "eta", f.eta);
        rd.get(s, "drift", f.drift);
        rd.get(s, "scale", f.scale);
        rd.get(s, "path", f.path);
        rd.get(s, "delta", f.delta);
        rd.get(s, "fd_step", f.fd_step);
        rd.get(s, "t_max", f.t_max);
        if (const auto xt = s["xi_table"]) {
            if (!xt.IsSequence()) rd.fail(xt, "'xi_table' must be a list of [t, value] pairs");
            for (const auto& row : xt) {
                if (!row.IsSequence() || row.size() != 2) rd.fail(row, "'xi_table' rows must be [t, value]");
                f.xi_table.emplace_back(row[0].as<double>(), row[1].as<double>());
            }
            for (size_t i = 1; i < f.xi_table.size(); ++i)
                if (!(f.xi_table[i].first > f.xi_table[i - 1].first)) rd.fail(xt, "'xi_table' times must increase");
        }
        if (f.d < 1 || f.d1 < f.d) rd.fail(s, "need d >= 1 and d1 >= d");
        if (f.builtin == "example3d" && (f.d != 3 || f.d1 != 12)) rd.fail(s, "example3d has d = 3, d1 = 12");
        if (f.builtin == "example3d" && f.eta.size() != 3) rd.fail(s["eta"], "'eta' must have 3 entries");
        if (f.alpha < 0 || f.beta < 0 || f.gamma < 0) rd.fail(s, "alpha, beta, gamma must be >= 0");
        if (f.builtin == "constant_drift") {
            if (f.drift.empty()) f.drift.assign(f.d, 0.0);
            if (static_cast<int>(f.drift.size()) != f.d) rd.fail(s["drift"] ? s["drift"] : s, "'drift' must have d entries");
        }
        rd.positive(s, "t_max", f.t_max);
        if (f.builtin == "tabulated") {
            if (f.path.empty()) rd.fail(s, "tabulated field needs 'path'");
            std::filesystem::path p(f.path);
            if (p.is_relative()) p = std::filesystem::path(base_dir) / p;
            if (!std::filesystem::exists(p)) rd.fail(s["path"], "tabulated file '" + p.string() + "' does not exist");
            f.path = p.string();
            rd.positive(s, "delta", f.delta);
            rd.positive(s, "fd_step", f.fd_step);
        }
    }
    if (const auto s = root["exponents"]) {
        rd.keys(s, "exponents", {"p_b", "p_dsigma", "frp_b", "frq_b"});
        rd.get(s, "p_b", c.exponents.p_b);
        rd.get(s, "p_dsigma", c.exponents.p_dsigma);
        rd.get(s, "frp_b", c.exponents.frp_b);
        rd.get(s, "frq_b", c.exponents.frq_b);
    }
    if (const auto s = root["grid"]) {
        rd.keys(s, "grid", {"L", "h", "dt"});
        rd.get(s, "L", c.grid.L);
        rd.get(s, "h", c.grid.h);
        rd.get(s, "dt", c.grid.dt);
        rd.positive(s, "L", c.grid.L);
        rd.positive(s, "h", c.grid.h);
        rd.positive(s, "dt", c.grid.dt);
        const double r = c.grid.L / c.grid.h;
        if (std::abs(r - std::round(r)) > 1e-9 * r) rd.fail(s, "grid: L must be a multiple of h");
    }
    if (const auto s = root["chaos"]) {
        rd.keys(s, "chaos", {"t0", "m_max", "n_t", "epsilon_clip", "substeps", "f", "max_sweeps"});
        auto& ch = c.chaos;
        rd.get(s, "t0", ch.t0);
        rd.get(s, "m_max", ch.m_max);
        rd.get(s, "n_t", ch.n_t);
        rd.get(s, "substeps", ch.substeps);
        rd.get(s, "f", ch.f);
        rd.get(s, "max_sweeps", ch.max_sweeps);
        rd.positive(s, "t0", ch.t0);
        if (s["epsilon_clip"]) {
            if (s["n_t"]) rd.fail(s["epsilon_clip"], "give either 'n_t' or 'epsilon_clip'");
            double eps = 0;
            rd.get(s, "epsilon_clip", eps);
            rd.positive(s, "epsilon_clip", eps);
            ch.n_t = std::max(1, static_cast<int>(std::lround(ch.t0 / (2 * eps))));
        }
        if (ch.m_max < 1) rd.fail(s, "'m_max' must be >= 1");
        if (ch.n_t <= ch.m_max) rd.fail(s, "'n_t' must exceed 'm_max'");
        if (ch.substeps < 1) rd.fail(s, "'substeps' must be >= 1");
        static const std::set<std::string> fs{"x1", "x1_squared", "constant", "gaussian"};
        if (!fs.count(ch.f)) rd.fail(s["f"], "unknown terminal function '" + ch.f + "'");
    }
    if (const auto s = root["simulation"]) {
        rd.keys(s, "simulation", {"n_paths", "seed", "dt", "cap_b", "girsanov_level", "sqrt_a", "strongness",
                                  "strongness_paths"});
        auto& sm = c.simulation;
        rd.get(s, "n_paths", sm.n_paths);
        rd.get(s, "seed", sm.seed);
        rd.get(s, "dt", sm.dt);
        rd.get(s, "cap_b", sm.cap_b);
        rd.get(s, "girsanov_level", sm.girsanov_level);
        rd.get(s, "sqrt_a", sm.sqrt_a);
        rd.get(s, "strongness", sm.strongness);
        rd.get(s, "strongness_paths", sm.strongness_paths);
        if (sm.n_paths < 2) rd.fail(s, "'n_paths' must be >= 2");
        if (sm.strongness_paths < 2) rd.fail(s, "'strongness_paths' must be >= 2");
        rd.positive(s, "dt", sm.dt);
        if (sm.cap_b < 0) rd.fail(s["cap_b"], "'cap_b' must be >= 0");
    }
    if (const auto s = root["thresholds"]) {
        rd.keys(s, "thresholds", {"eps_sigma", "eps_b", "rho_f", "r_b", "levels", "window", "parseval_tol",
                                  "agreement_tol", "tol_scale"});
        auto& t = c.thresholds;
        rd.get(s, "eps_sigma", t.eps_sigma);
        rd.get(s, "eps_b", t.eps_b);
        rd.get(s, "rho_f", t.rho_f);
        rd.get(s, "r_b", t.r_b);
        rd.get(s, "levels", t.levels);
        rd.get(s, "window", t.window);
        rd.get(s, "parseval_tol", t.parseval_tol);
        rd.get(s, "agreement_tol", t.agreement_tol);
        rd.get(s, "tol_scale", t.tol_scale);
        rd.positive(s, "rho_f", t.rho_f);
        rd.positive(s, "r_b", t.r_b);
        rd.positive(s, "tol_scale", t.tol_scale);
        if (t.levels < 1 || t.window < 0) rd.fail(s, "need levels >= 1 and window >= 0");
    }
    if (const auto s = root["output"]) {
        rd.keys(s, "output", {"dir"});
        rd.get(s, "dir", c.out_dir);
    }
    return c;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(path + ": cannot open config file");
    std::stringstream ss;
    ss << in.rdbuf();
    const auto dir = std::filesystem::path(path).parent_path();
    return parse_config(ss.str(), path, dir.empty() ? "." : dir.string());
}

nlohmann::json to_json(const ExperimentConfig& c) {
    const auto& f = c.field;
    nlohmann::json field{{"builtin", f.builtin}, {"d", f.d}, {"d1", f.d1}, {"t_max", f.t_max}};
    if (f.builtin == "example3d") {
        field["alpha"] = f.alpha;
        field["beta"] = f.beta;
        field["gamma"] = f.gamma;
        field["xi"] = f.xi;
        field["eta"] = f.eta;
        if (!f.xi_table.empty()) field["xi_table"] = f.xi_table;
    }
    if (f.builtin == "constant_drift") field["drift"] = f.drift;
    if (f.builtin == "scaled") field["scale"] = f.scale;
    if (f.builtin == "tabulated") {
        field["path"] = f.path;
        field["delta"] = f.delta;
        field["fd_step"] = f.fd_step;
    }
    const auto& s = c.simulation;
    const auto& t = c.thresholds;
    return {{"field", field},
            {"exponents",
             {{"p_b", c.exponents.p_b}, {"p_dsigma", c.exponents.p_dsigma}, {"frp_b", c.exponents.frp_b},
              {"frq_b", c.exponents.frq_b}}},
            {"grid", {{"L", c.grid.L}, {"h", c.grid.h}, {"dt", c.grid.dt}}},
            {"chaos",
             {{"t0", c.chaos.t0}, {"m_max", c.chaos.m_max}, {"n_t", c.chaos.n_t}, {"substeps", c.chaos.substeps},
              {"f", c.chaos.f}, {"max_sweeps", c.chaos.max_sweeps}}},
            {"simulation",
             {{"n_paths", s.n_paths}, {"seed", s.seed}, {"dt", s.dt}, {"cap_b", s.cap_b},
              {"girsanov_level", s.girsanov_level}, {"sqrt_a", s.sqrt_a}, {"strongness", s.strongness},
              {"strongness_paths", s.strongness_paths}}},
            {"thresholds",
             {{"eps_sigma", t.eps_sigma}, {"eps_b", t.eps_b}, {"rho_f", t.rho_f}, {"r_b", t.r_b},
              {"levels", t.levels}, {"window", t.window}, {"parseval_tol", t.parseval_tol},
              {"agreement_tol", t.agreement_tol}, {"tol_scale", t.tol_scale}}},
            {"output", {{"dir", c.out_dir}}}};
}

CoefficientField build_field(const FieldSpec& f) {
    if (f.builtin == "unit") return unit_diffusion(f.d, f.d1, f.t_max);
    if (f.builtin == "scaled") return scaled_diffusion(f.d, f.d1, f.scale, f.t_max);
    if (f.builtin == "constant_drift")
        return constant_drift(Eigen::Map<const Vec>(f.drift.data(), static_cast<Eigen::Index>(f.drift.size())), f.d1,
                              f.t_max);
    if (f.builtin == "tabulated") return load_tabulated_field(f.path, f.d, f.d1, f.delta, f.fd_step);
    if (f.builtin != "example3d") throw InvalidInput("unknown builtin '" + f.builtin + "'");
    Example3dParams p;
    p.alpha = f.alpha;
    p.beta = f.beta;
    p.gamma = f.gamma;
    p.t_max = f.t_max;
    const Vec eta = Eigen::Map<const Vec>(f.eta.data(), 3);
    if (!f.xi_table.empty()) {
        const auto tab = f.xi_table;
        p.xi = [tab](double t) {
            if (t < tab.front().first || t > tab.back().first) return 0.0;
            auto it = std::upper_bound(tab.begin(), tab.end(), t,
                                       [](double v, const std::pair<double, double>& e) { return v < e.first; });
            if (it == tab.end()) return tab.back().second;
            const auto& hi = *it;
            const auto& lo = *(it - 1);
            const double w = (t - lo.first) / (hi.first - lo.first);
            return (1 - w) * lo.second + w * hi.second;
        };
        for (const auto& e : tab) p.xi_breakpoints.push_back(e.first);
    } else if (f.xi != 0.0) {
        const double xi = f.xi;
        p.xi = [xi](double) { return xi; };
    }
    if (p.xi && eta.norm() > 0) {
        p.eta = [eta](double, const Vec&, Vec& out) { out = eta; };
        p.eta_sup = eta.norm();
    } else {
        p.xi = nullptr;
    }
    return example_field_3d(p);
}

TerminalFn terminal_function(const std::string& name, double L) {
    const double a = 0.6 * L, b = 0.8 * L;
    auto cut = [a, b](const Vec& x) {
        const double r = x.cwiseAbs().maxCoeff();
        if (r <= a) return 1.0;
        if (r >= b) return 0.0;
        const double s = (r - a) / (b - a);
        const double u = std::exp(-1.0 / (1.0 - s)), v = std::exp(-1.0 / s);
        return u / (u + v);
    };
    if (name == "x1") return [cut](const Vec& x) { return x[0] * cut(x); };
    if (name == "x1_squared") return [cut](const Vec& x) { return x[0] * x[0] * cut(x); };
    if (name == "constant") return [cut](const Vec& x) { return cut(x); };
    if (name == "gaussian") return [](const Vec& x) { return std::exp(-x.squaredNorm()); };
    throw InvalidInput("unknown terminal function '" + name + "'");
}

SpaceTimeGrid build_grid(const ExperimentConfig& c, int d) {
    SpaceTimeGrid g;
    g.d = d;
    g.L = c.grid.L;
    g.h = c.grid.h;
    g.dt = c.grid.dt;
    g.t0 = c.chaos.t0;
    return g;
}

}  // namespace strongsde
