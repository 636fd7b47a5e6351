#include "crl/io.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>
#include <thread>

#include <toml.hpp>

namespace crl::io {

namespace {

std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

// Typed access to one JSON object with unknown-key detection.
class Obj {
public:
    Obj(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j.is_object()) throw ConfigError("expected an object at '" + where() + "'", path_);
    }

    bool has(const std::string& k) const { return j_.contains(k); }

    const json& raw(const std::string& k) {
        used_.insert(k);
        if (!j_.contains(k)) throw ConfigError("missing key '" + join(path_, k) + "'", join(path_, k));
        return j_.at(k);
    }

    double num(const std::string& k) {
        const json& v = raw(k);
        if (!v.is_number()) throw ConfigError("key '" + join(path_, k) + "' must be a number", join(path_, k));
        return v.get<double>();
    }
    double num(const std::string& k, double dflt) { return has(k) ? num(k) : (used_.insert(k), dflt); }

    long integer(const std::string& k, long dflt) {
        used_.insert(k);
        if (!has(k)) return dflt;
        const json& v = j_.at(k);
        if (v.is_number_integer()) return v.get<long>();
        if (v.is_number_float() && std::floor(v.get<double>()) == v.get<double>()) return static_cast<long>(v.get<double>());
        throw ConfigError("key '" + join(path_, k) + "' must be an integer", join(path_, k));
    }

    std::string str(const std::string& k) {
        const json& v = raw(k);
        if (!v.is_string()) throw ConfigError("key '" + join(path_, k) + "' must be a string", join(path_, k));
        return v.get<std::string>();
    }
    std::string str(const std::string& k, const std::string& dflt) { return has(k) ? str(k) : (used_.insert(k), dflt); }

    std::vector<double> numbers(const std::string& k) {
        const json& v = raw(k);
        if (!v.is_array()) throw ConfigError("key '" + join(path_, k) + "' must be an array of numbers", join(path_, k));
        std::vector<double> out;
        for (const auto& e : v) {
            if (!e.is_number())
                throw ConfigError("key '" + join(path_, k) + "' must be an array of numbers", join(path_, k));
            out.push_back(e.get<double>());
        }
        return out;
    }

    Obj child(const std::string& k) {
        const json& v = raw(k);
        return Obj(v, join(path_, k));
    }

    const std::string& path() const { return path_; }

    void done() const {
        for (auto it = j_.begin(); it != j_.end(); ++it)
            if (!used_.count(it.key()))
                throw ConfigError("unknown key '" + join(path_, it.key()) + "'", join(path_, it.key()));
    }

private:
    std::string where() const { return path_.empty() ? "<root>" : path_; }
    const json& j_;
    std::string path_;
    std::set<std::string> used_;
};

template <class F>
auto in_section(const std::string& key, F&& f) -> decltype(f()) {
    try {
        return f();
    } catch (const ConfigError&) {
        throw;
    } catch (const Error& e) {
        if (e.kind() == ErrorKind::Config || e.kind() == ErrorKind::Domain)
            throw ConfigError(key + ": " + e.what(), key);
        throw;
    }
}

json from_toml(const toml::node& n) {
    if (auto* t = n.as_table()) {
        json o = json::object();
        for (auto&& [k, v] : *t) o[std::string(k.str())] = from_toml(v);
        return o;
    }
    if (auto* a = n.as_array()) {
        json o = json::array();
        for (auto&& v : *a) o.push_back(from_toml(v));
        return o;
    }
    if (auto* v = n.as_integer()) return json(static_cast<long long>(v->get()));
    if (auto* v = n.as_floating_point()) return json(v->get());
    if (auto* v = n.as_boolean()) return json(v->get());
    if (auto* v = n.as_string()) return json(v->get());
    if (auto* v = n.as_date()) return json(std::to_string(v->get().year) + "-" + std::to_string(v->get().month) + "-" + std::to_string(v->get().day));
    throw ConfigError("unsupported TOML value type");
}

int line_of(const std::string& text, std::size_t byte) {
    int line = 1;
    for (std::size_t i = 0; i < text.size() && i + 1 < byte; ++i)
        if (text[i] == '\n') ++line;
    return line;
}

const json* find_path(const json& doc, const std::string& path) {
    const json* cur = &doc;
    std::stringstream ss(path);
    std::string part;
    while (std::getline(ss, part, '.')) {
        if (!cur->is_object() || !cur->contains(part)) return nullptr;
        cur = &cur->at(part);
    }
    return cur;
}

void set_path(json& doc, const std::string& path, double v) {
    json* cur = &doc;
    std::stringstream ss(path);
    std::string part;
    std::vector<std::string> parts;
    while (std::getline(ss, part, '.')) parts.push_back(part);
    for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
        if (!(*cur)[parts[i]].is_object()) (*cur)[parts[i]] = json::object();
        cur = &(*cur)[parts[i]];
    }
    (*cur)[parts.back()] = v;
}

ContentFunction parse_content(Obj c, int K) {
    std::string kind = c.str("kind");
    std::optional<ContentFunction> f;
    in_section(c.path(), [&] {
        if (kind == "exponential") {
            double N = c.num("N"), n = c.num("n"), phi = c.num("phi");
            int k = static_cast<int>(c.integer("K", K));
            f.emplace(ExponentialCoverage{N, n, phi, k});
        } else if (kind == "piecewise") {
            double q = c.num("q"), knee = c.num("knee", 0.5);
            f.emplace(PiecewiseLinearCap{q, knee});
        } else if (kind == "tabulated") {
            const json& pts = c.raw("points");
            Tabulated t;
            if (!pts.is_array()) throw ConfigError("content.points must be an array of [x, Q1] pairs", "content.points");
            for (const auto& p : pts) {
                if (!p.is_array() || p.size() != 2 || !p[0].is_number() || !p[1].is_number())
                    throw ConfigError("content.points must be an array of [x, Q1] pairs", "content.points");
                t.points.emplace_back(p[0].get<double>(), p[1].get<double>());
            }
            f.emplace(std::move(t));
        } else {
            throw ConfigError("content.kind must be exponential, piecewise or tabulated", "content.kind");
        }
        return 0;
    });
    c.done();
    return *f;
}

TypeDistribution parse_types(Obj t) {
    std::string kind = t.str("kind");
    TypeDistribution out = UniformContinuous{};
    if (kind == "homogeneous") {
        out = Homogeneous{t.num("theta0")};
    } else if (kind == "two_type") {
        out = TwoType{t.num("theta1"), t.num("theta2"), t.num("eta", 0.5)};
    } else if (kind == "two_type_mean") {
        double th0 = t.num("theta0"), th1 = t.num("theta1");
        if (th1 > th0) throw ConfigError("types.theta1 must not exceed types.theta0", "types.theta1");
        out = TwoType{th1, 2.0 * th0 - th1, 0.5};
    } else if (kind == "uniform") {
    } else {
        throw ConfigError("types.kind must be homogeneous, two_type, two_type_mean or uniform", "types.kind");
    }
    t.done();
    return out;
}

Settings parse_settings(Obj k) {
    Settings s;
    s.eps_mech = k.num("eps_mech", s.eps_mech);
    s.eq_tol = k.num("eq_tol", s.eq_tol);
    s.stability_eps = k.num("stability_eps", s.stability_eps);
    s.grid_step = k.num("grid_step", s.grid_step);
    s.g_max_factor = k.num("g_max_factor", s.g_max_factor);
    s.continuum_classes = static_cast<int>(k.integer("continuum_classes", s.continuum_classes));
    k.done();
    if (!(s.eps_mech > 0)) throw ConfigError("knobs.eps_mech must be positive", "knobs.eps_mech");
    if (!(s.grid_step > 0 && s.grid_step <= 0.1)) throw ConfigError("knobs.grid_step must lie in (0, 0.1]", "knobs.grid_step");
    if (!(s.eq_tol > 0)) throw ConfigError("knobs.eq_tol must be positive", "knobs.eq_tol");
    if (!(s.stability_eps > 0 && s.stability_eps < 0.5))
        throw ConfigError("knobs.stability_eps must lie in (0, 0.5)", "knobs.stability_eps");
    if (s.continuum_classes < 2) throw ConfigError("knobs.continuum_classes must be at least 2", "knobs.continuum_classes");
    return s;
}

DynamicsConfig parse_dynamics(Obj d, std::optional<std::vector<double>>& start) {
    DynamicsConfig c;
    std::string mode = d.str("mode", "smith");
    if (mode == "smith")
        c.mode = DynamicsMode::PairwiseSmith;
    else if (mode == "min_to_max")
        c.mode = DynamicsMode::MinToMax;
    else
        throw ConfigError("dynamics.mode must be smith or min_to_max", "dynamics.mode");
    c.switch_rate_mu = d.num("mu", c.switch_rate_mu);
    c.step_dt = d.num("dt", c.step_dt);
    c.horizon = d.integer("horizon", c.horizon);
    c.convergence_eps = d.num("convergence_eps", c.convergence_eps);
    c.sample_every = d.integer("sample_every", c.sample_every);
    c.cycle_window = d.integer("cycle_window", c.cycle_window);
    c.cycle_tol = d.num("cycle_tol", c.cycle_tol);
    if (d.has("start")) start = d.numbers("start");
    d.done();
    if (!(c.switch_rate_mu > 0)) throw ConfigError("dynamics.mu must be positive", "dynamics.mu");
    if (!(c.step_dt > 0)) throw ConfigError("dynamics.dt must be positive", "dynamics.dt");
    if (c.horizon < 1 || c.sample_every < 1) throw ConfigError("dynamics.horizon and sample_every must be positive", "dynamics");
    return c;
}

std::vector<Designer> parse_designers(const json& v, const std::string& key) {
    if (!v.is_array()) throw ConfigError(key + " must be an array of designer names", key);
    std::vector<Designer> out;
    for (const auto& e : v) {
        if (!e.is_string()) throw ConfigError(key + " must be an array of designer names", key);
        try {
            out.push_back(designer_from_string(e.get<std::string>()));
        } catch (const Error& err) {
            throw ConfigError(err.what(), key);
        }
    }
    return out;
}

WorstCaseSpec parse_worst_case(Obj w) {
    WorstCaseSpec s;
    s.kind = in_section("poa.worst_case.kind", [&] { return worst_case_kind_from_string(w.str("kind")); });
    s.q = w.num("q", s.q);
    s.theta0 = w.num("theta0", s.theta0);
    s.theta1 = w.num("theta1", s.theta1);
    s.delta = w.num("delta", s.delta);
    s.c_h = w.num("c_H", s.c_h);
    s.K = static_cast<int>(w.integer("K", s.K));
    w.done();
    return s;
}

ProbeSpec parse_probe(Obj p) {
    ProbeSpec s;
    s.sampler.family = p.str("family", s.sampler.family);
    s.sampler.types = p.str("types", s.sampler.types);
    s.sampler.theta0 = p.num("theta0", s.sampler.theta0);
    s.sampler.log10_cost_lo = p.num("log10_cost_lo", s.sampler.log10_cost_lo);
    s.sampler.log10_cost_hi = p.num("log10_cost_hi", s.sampler.log10_cost_hi);
    s.sampler.knee_lo = p.num("knee_lo", s.sampler.knee_lo);
    s.sampler.knee_hi = p.num("knee_hi", s.sampler.knee_hi);
    s.sampler.items_lo = p.num("items_lo", s.sampler.items_lo);
    s.sampler.items_hi = p.num("items_hi", s.sampler.items_hi);
    s.samples = p.integer("samples", s.samples);
    s.seed = static_cast<std::uint64_t>(p.integer("seed", static_cast<long>(s.seed)));
    if (p.has("worst_case")) s.worst_case = parse_worst_case(p.child("worst_case"));
    p.done();
    static const std::set<std::string> fams{"mixed", "piecewise", "exponential", "prop2", "thm1"};
    if (!fams.count(s.sampler.family))
        throw ConfigError("poa.family must be one of mixed, piecewise, exponential, prop2, thm1", "poa.family");
    if (s.sampler.types != "two_type" && s.sampler.types != "homogeneous")
        throw ConfigError("poa.types must be two_type or homogeneous", "poa.types");
    if (s.samples < 1) throw ConfigError("poa.samples must be positive", "poa.samples");
    return s;
}

SweepSpec parse_sweep(Obj sw) {
    SweepSpec s;
    const json& axes = sw.raw("axes");
    if (!axes.is_array() || axes.empty() || axes.size() > 3)
        throw ConfigError("sweep.axes must list one to three axes", "sweep.axes");
    double cells = 1;
    for (std::size_t i = 0; i < axes.size(); ++i) {
        Obj a(axes[i], "sweep.axes[" + std::to_string(i) + "]");
        SweepAxis ax;
        ax.path = a.str("path");
        if (a.has("values")) {
            ax.values = a.numbers("values");
        } else {
            double lo = a.num("lo"), hi = a.num("hi");
            long steps = a.integer("steps", 2);
            if (steps < 1) throw ConfigError(a.path() + ".steps must be positive", a.path() + ".steps");
            for (long k = 0; k < steps; ++k)
                ax.values.push_back(steps == 1 ? lo : lo + (hi - lo) * static_cast<double>(k) / (steps - 1));
        }
        a.done();
        if (ax.values.empty()) throw ConfigError(a.path() + " has no values", a.path());
        cells *= static_cast<double>(ax.values.size());
        s.axes.push_back(std::move(ax));
    }
    if (cells > 1e7) throw ConfigError("sweep grid exceeds 10^7 cells", "sweep.axes");
    if (sw.has("designers"))
        s.designers = parse_designers(sw.raw("designers"), "sweep.designers");
    else
        s.designers = {Designer::None, Designer::Side, Designer::Restriction, Designer::Combined};
    s.output = sw.str("output", "");
    sw.done();
    return s;
}

std::string csv_quote(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char ch : s) {
        if (ch == '"') out += '"';
        out += ch;
    }
    return out + "\"";
}

json num_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json schedule_json(const PaymentSchedule& g) {
    json j{{"target_x", g.target_x}, {"b", g.b}, {"c_H", g.c_h}, {"target_level", g.target_level}};
    if (std::holds_alternative<Proportional>(g.form)) j["form"] = "proportional";
    if (auto* b = std::get_if<Bang>(&g.form)) {
        j["form"] = "bang";
        j["g_max"] = b->level_high;
        j["band"] = b->band;
    }
    if (auto* a = std::get_if<Affine>(&g.form)) {
        j["form"] = "affine";
        j["rising"] = a->rising;
    }
    return j;
}

std::vector<double> default_start(int K, double b) { return std::vector<double>(K, b / K); }

}  // namespace

int default_threads() {
    if (const char* env = std::getenv("CRL_THREADS")) {
        int n = std::atoi(env);
        if (n > 0) return n;
    }
    return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

std::string format_number(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.15g", v);
    return buf;
}

json parse_text(const std::string& text, bool is_toml, const std::string& origin) {
    if (is_toml) {
        try {
            toml::table t = toml::parse(text, std::string_view(origin));
            return from_toml(t);
        } catch (const toml::parse_error& e) {
            int line = static_cast<int>(e.source().begin.line);
            throw ConfigError(origin + ":" + std::to_string(line) + ": " + std::string(e.description()), "", line);
        }
    }
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        int line = line_of(text, e.byte);
        throw ConfigError(origin + ":" + std::to_string(line) + ": JSON syntax error (" + e.what() + ")", "", line);
    }
}

json load_document(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    bool is_toml = path.size() >= 5 && path.substr(path.size() - 5) == ".toml";
    return parse_text(ss.str(), is_toml, path);
}

Scenario parse_scenario(const json& doc) {
    Obj root(doc, "");
    Obj net = root.child("network");
    std::optional<LinearCost> lc;
    if (root.has("cost")) {
        Obj c = root.child("cost");
        std::string kind = c.str("kind", "constant");
        if (kind == "linear") {
            lc = LinearCost{c.num("c_L", 0.0), c.num("b_L", 0.0), c.num("c_H"), c.num("b_H", 0.0)};
        } else if (kind != "constant") {
            throw ConfigError("cost.kind must be constant or linear", "cost.kind");
        }
        c.done();
    }
    PathNetwork network;
    if (net.has("costs")) {
        network.costs = net.numbers("costs");
        network.K = static_cast<int>(network.costs.size());
        if (net.has("K") && net.integer("K", 0) != network.K)
            throw ConfigError("network.K disagrees with the length of network.costs", "network.K");
        if (net.has("c_H")) net.num("c_H");
    } else {
        int K = static_cast<int>(net.integer("K", 2));
        double c;
        if (lc) {
            c = net.num("c_H", lc->c_h);
            if (c != lc->c_h) throw ConfigError("network.c_H disagrees with cost.c_H", "network.c_H");
        } else {
            c = net.num("c_H");
        }
        network = in_section("network", [&] { return PathNetwork::multipath(K, c); });
    }
    net.done();
    TypeDistribution types = parse_types(root.child("types"));
    ContentFunction content = parse_content(root.child("content"), network.K);
    Scenario s{network, types, content, std::nullopt, ConstantCost{}, std::nullopt};
    if (lc) s.cost = *lc;
    if (root.has("overlap")) {
        Obj o = root.child("overlap");
        s.overlap = OverlapSegment{o.num("N0"), o.num("n"), o.num("phi")};
        o.done();
    }
    if (root.has("beta")) s.beta = root.num("beta");
    in_section("scenario", [&] {
        s.validate();
        return 0;
    });
    return s;
}

RunConfig parse_config(const json& doc) {
    RunConfig rc;
    rc.doc = doc;
    Obj root(doc, "");
    if (!root.has("schema")) throw ConfigError("missing key 'schema' (expected 1)", "schema");
    if (root.integer("schema", 0) != 1) throw ConfigError("unsupported schema version (expected 1)", "schema");
    static const std::set<std::string> scenario_keys{"network", "types", "content", "overlap", "cost", "beta"};
    bool any = false;
    for (const auto& k : scenario_keys)
        if (root.has(k)) {
            any = true;
            root.raw(k);
        }
    if (any) rc.scenario = parse_scenario(doc);
    if (root.has("knobs")) rc.settings = parse_settings(root.child("knobs"));
    if (root.has("dynamics")) rc.dynamics = parse_dynamics(root.child("dynamics"), rc.dynamics_start);
    if (root.has("designers"))
        rc.designers = parse_designers(root.raw("designers"), "designers");
    else
        rc.designers = {Designer::None, Designer::Side, Designer::Restriction};
    if (root.has("dynamic")) {
        Obj d = root.child("dynamic");
        DynamicParams p{d.num("N"), d.num("n"), d.num("phi"), d.num("gamma"), d.num("c_H", 0.0), d.num("theta", 0.5)};
        d.done();
        if (!(p.total_items > 2 * p.items_per_user && p.items_per_user > 0 && p.users > 0))
            throw ConfigError("dynamic: need N > 2*phi > 0 and n > 0", "dynamic");
        if (!(p.gamma >= 0 && p.gamma < 1)) throw ConfigError("dynamic.gamma must lie in [0,1)", "dynamic.gamma");
        if (!(p.c_h >= 0)) throw ConfigError("dynamic.c_H must be nonnegative", "dynamic.c_H");
        rc.dynamic = p;
    }
    if (root.has("sweep")) rc.sweep = parse_sweep(root.child("sweep"));
    if (root.has("poa")) rc.probe = parse_probe(root.child("poa"));
    root.done();
    return rc;
}

json to_json(const Mechanism& m) {
    json j{{"kind", mechanism_name(m)}};
    if (auto* sp = std::get_if<SidePayment>(&m)) {
        j["participation_b"] = sp->participation_b;
        j["schedule"] = schedule_json(sp->schedule);
    } else if (auto* r = std::get_if<ContentRestriction>(&m)) {
        j["a"] = r->a;
    } else if (auto* c = std::get_if<Combined>(&m)) {
        j["a"] = c->a;
        j["schedule"] = schedule_json(c->schedule);
    } else if (auto* mp = std::get_if<MultiPathSidePayment>(&m)) {
        j["target"] = mp->target;
        j["c2"] = mp->c2;
        j["c3"] = mp->c3;
        j["g1"] = mp->g1(mp->target);
        j["g2"] = mp->g2(mp->target);
        j["refund3"] = mp->refund3(mp->target);
    }
    return j;
}

json to_json(const DesignOutcome& d) {
    json diag = json::object();
    for (const auto& [k, v] : d.diagnostics) diag[k] = num_or_null(v);
    return {{"regime_label", d.regime_label},
            {"mechanism", to_json(d.mechanism)},
            {"target_flow", d.target_flow},
            {"predicted_sw", num_or_null(d.predicted_sw)},
            {"sw_at_design", num_or_null(d.sw_at_design)},
            {"participation_b", d.participation_b},
            {"eps_mech", d.eps_used},
            {"g_max", d.g_max},
            {"diagnostics", diag}};
}

json to_json(const EquilibriumReport& r) {
    json types = json::array();
    for (const auto& [th, u] : r.per_type_payoffs) types.push_back({{"theta", th}, {"payoffs", u}});
    return {{"flow", r.flow},
            {"stability", to_string(r.stability)},
            {"participation_b", r.participation_b},
            {"social_welfare", r.social_welfare},
            {"per_type_payoffs", types}};
}

json to_json(const PoAProbeReport& r) {
    return {{"family", r.family},
            {"designer", r.designer},
            {"seed", r.seed},
            {"samples", r.samples},
            {"errors", r.errors},
            {"bound", r.bound},
            {"min_ratio", r.min_ratio},
            {"max_ratio", r.max_ratio},
            {"violations", r.violations},
            {"argmin_instance",
             {{"index", r.argmin.index},
              {"content", r.argmin.content},
              {"theta1", r.argmin.theta1},
              {"theta2", r.argmin.theta2},
              {"c_H", r.argmin.c_h},
              {"regime", r.argmin.regime},
              {"ratio", r.argmin.ratio}}},
            {"dominance_checked", r.dominance_checked},
            {"dominance_violations", r.dominance_violations},
            {"worst_dominance_gap", r.worst_dominance_gap}};
}

namespace {

const Scenario& need_scenario(const RunConfig& rc) {
    if (!rc.scenario) throw ConfigError("config has no scenario (network, types, content)", "network");
    return *rc.scenario;
}

}  // namespace

json run_solve(const RunConfig& rc) {
    const Scenario& s = need_scenario(rc);
    FlowValue opt = social_optimum(s, rc.settings);
    EquilibriumReport ne = equilibrium_no_incentive(s, rc.settings);
    double ratio = opt.value > 0 ? ne.social_welfare / opt.value : 1.0;
    return {{"social_optimum", {{"flow", opt.flow}, {"social_welfare", opt.value}}},
            {"no_incentive", to_json(ne)},
            {"poa_ratio", ratio}};
}

json run_design(const RunConfig& rc, const std::vector<Designer>& designers, bool debug_cases) {
    const Scenario& s = need_scenario(rc);
    FlowValue opt = social_optimum(s, rc.settings);
    json out{{"social_optimum", {{"flow", opt.flow}, {"social_welfare", opt.value}}}, {"designs", json::array()}};
    for (Designer d : designers) {
        json entry{{"designer", to_string(d)}};
        try {
            DesignOutcome o = design(s, d, rc.settings);
            entry["outcome"] = to_json(o);
            Population pop = build_population(s, o.target_flow, o.participation_b, rc.settings);
            EquilibriumCheck chk = verify_equilibrium(s, o.mechanism, pop, rc.settings.eq_tol);
            entry["equilibrium_check"] = {{"is_equilibrium", chk.is_equilibrium}, {"max_gain", chk.max_gain}};
            if (chk.is_equilibrium) {
                Stability st = classify_stability(s, o.mechanism, pop, rc.settings);
                entry["equilibrium"] = to_json(make_report(s, o.mechanism, pop, st));
            }
            entry["poa_ratio"] = opt.value > 0 ? o.sw_at_design / opt.value : 1.0;
            if (debug_cases && d == Designer::Combined) {
                CombinedCases cc = combined_case_values(s, rc.settings);
                entry["debug_cases"] = {{"Case.IR21", num_or_null(cc.ir21)},
                                        {"Case.IR2", num_or_null(cc.ir2)},
                                        {"Case.IR12", num_or_null(cc.ir12)},
                                        {"Case.split", num_or_null(cc.split)},
                                        {"ir12_dominated", !(cc.ir12 > cc.ir21 + 1e-9)},
                                        {"split_dominated", !(cc.split > cc.ir21 + 1e-9)}};
            }
        } catch (const Error& e) {
            if (e.kind() == ErrorKind::Config) throw;
            entry["error"] = {{"kind", e.kind() == ErrorKind::Numeric ? "numeric" : "unsupported"}, {"message", e.what()}};
        }
        out["designs"].push_back(entry);
    }
    return out;
}

TableOutput run_dynamics(const RunConfig& rc, Designer d) {
    const Scenario& s = need_scenario(rc);
    DesignOutcome o = design(s, d, rc.settings);
    const double b = o.participation_b;
    std::vector<double> start = rc.dynamics_start ? *rc.dynamics_start : default_start(s.K(), b);
    if (static_cast<int>(start.size()) != s.K())
        throw ConfigError("dynamics.start must have one entry per path", "dynamics.start");
    double sum = 0.0;
    for (double v : start) sum += v;
    if (std::fabs(sum - b) > 1e-9)
        throw ConfigError("dynamics.start must sum to the participation mass " + format_number(b), "dynamics.start");
    Population x0 = build_population(s, start, b, rc.settings);
    Trajectory tr = simulate_to_convergence(s, o.mechanism, x0, rc.dynamics);

    std::vector<std::size_t> shown;
    std::vector<double> thetas;
    for (std::size_t i = 0; i < x0.classes.size(); ++i) {
        double th = x0.classes[i].theta;
        if (std::find(thetas.begin(), thetas.end(), th) == thetas.end()) {
            thetas.push_back(th);
            shown.push_back(i);
        }
    }
    if (shown.size() > 4) shown = {shown.front(), shown.back()};
    std::optional<std::pair<double, double>> lyap;
    if (auto* r = std::get_if<ContentRestriction>(&o.mechanism); r && s.K() == 3 && r->a[0] < 1.0)
        lyap = std::make_pair(r->a[0], r->a[1]);

    std::ostringstream csv;
    csv << "t";
    for (int k = 0; k < s.K(); ++k) csv << ",x" << k;
    for (std::size_t j = 0; j < shown.size(); ++j)
        for (int k = 0; k < s.K(); ++k) csv << ",u" << j << "_p" << k;
    csv << ",V\n";
    for (const auto& smp : tr.samples) {
        csv << format_number(smp.t);
        for (double x : smp.flow) csv << "," << format_number(x);
        for (std::size_t i : shown)
            for (double u : smp.payoffs[i]) csv << "," << format_number(u);
        csv << ",";
        if (lyap && in_lyapunov_region(smp.flow)) {
            try {
                csv << format_number(lyapunov_value(s, lyap->first, lyap->second, smp.flow));
            } catch (const Error&) {
            }
        }
        csv << "\n";
    }
    json shown_thetas = json::array();
    for (std::size_t i : shown) shown_thetas.push_back(x0.classes[i].theta);
    json summary{{"designer", to_string(d)},
                 {"design", to_json(o)},
                 {"start", start},
                 {"verdict", to_string(tr.verdict)},
                 {"steps", tr.steps},
                 {"clamp_events", tr.clamp_events},
                 {"final_flow", tr.final_state.aggregate()},
                 {"payoff_thetas", shown_thetas}};
    return {summary, csv.str()};
}

TableOutput run_dynamic_model(const RunConfig& rc) {
    if (!rc.dynamic) throw ConfigError("config has no 'dynamic' section", "dynamic");
    const DynamicParams& p = *rc.dynamic;
    DynamicOptimum opt = dynamic_stationary_optimum(p);
    DesignOutcome des = design_dynamic_content_restriction(p);
    double worst = 0.0;
    std::ostringstream csv;
    csv << "x,q_h,q_l,sw\n";
    for (int i = 0; i <= 100; ++i) {
        double x = i / 100.0;
        DynamicContentState st = dynamic_stationary(p, x);
        if (i % 10 == 0) {
            DynamicContentState it = dynamic_fixed_point(p, x, {});
            worst = std::max({worst, std::fabs(it.q_h - st.q_h), std::fabs(it.q_l - st.q_l)});
        }
        csv << format_number(x) << "," << format_number(st.q_h) << "," << format_number(st.q_l) << ","
            << format_number(dynamic_stationary_sw(p, x)) << "\n";
    }
    json summary{{"retention_r", p.retention()},
                 {"no_incentive_sw", dynamic_no_incentive_sw(p)},
                 {"stationary_optimum", {{"x", opt.x}, {"sw", opt.sw}}},
                 {"restriction_design", to_json(des)},
                 {"fixed_point_max_abs_diff", worst}};
    return {summary, csv.str()};
}

std::string run_sweep(const RunConfig& rc, int threads) {
    if (!rc.sweep) throw ConfigError("config has no 'sweep' section", "sweep");
    const SweepSpec& sw = *rc.sweep;
    json base = rc.doc;
    base.erase("sweep");
    for (const auto& ax : sw.axes)
        if (!find_path(base, ax.path)) throw ConfigError("sweep axis path '" + ax.path + "' not found in config", ax.path);
    std::size_t cells = 1;
    for (const auto& ax : sw.axes) cells *= ax.values.size();
    std::vector<std::string> rows(cells);
    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        for (std::size_t idx = next++; idx < cells; idx = next++) {
            std::vector<double> vals(sw.axes.size());
            std::size_t rem = idx;
            for (std::size_t a = sw.axes.size(); a-- > 0;) {
                vals[a] = sw.axes[a].values[rem % sw.axes[a].values.size()];
                rem /= sw.axes[a].values.size();
            }
            std::ostringstream row;
            for (double v : vals) row << format_number(v) << ",";
            std::string err;
            std::vector<std::string> fields;
            try {
                json doc = base;
                for (std::size_t a = 0; a < vals.size(); ++a) set_path(doc, sw.axes[a].path, vals[a]);
                Scenario s = parse_scenario(doc);
                FlowValue opt = social_optimum(s, rc.settings);
                fields = {format_number(opt.value), format_number(opt.flow.back())};
                std::vector<std::string> sws, ratios, regimes;
                for (Designer d : sw.designers) {
                    try {
                        DesignOutcome o = design(s, d, rc.settings);
                        sws.push_back(format_number(o.sw_at_design));
                        ratios.push_back(format_number(opt.value > 0 ? o.sw_at_design / opt.value : 1.0));
                        regimes.push_back(o.regime_label);
                    } catch (const Error& e) {
                        sws.push_back("");
                        ratios.push_back("");
                        regimes.push_back("");
                        if (!err.empty()) err += "; ";
                        err += to_string(d) + ": " + e.what();
                    }
                }
                fields.insert(fields.end(), sws.begin(), sws.end());
                fields.insert(fields.end(), ratios.begin(), ratios.end());
                fields.insert(fields.end(), regimes.begin(), regimes.end());
            } catch (const std::exception& e) {
                fields.assign(2 + 3 * sw.designers.size(), "");
                err = e.what();
            }
            for (const auto& f : fields) row << f << ",";
            row << csv_quote(err) << "\n";
            rows[idx] = row.str();
        }
    };
    threads = std::max(1, std::min<int>(threads, static_cast<int>(cells)));
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();

    std::ostringstream out;
    for (const auto& ax : sw.axes) out << ax.path << ",";
    out << "sw_opt,x_opt";
    for (Designer d : sw.designers) out << ",sw_" << to_string(d);
    for (Designer d : sw.designers) out << ",ratio_" << to_string(d);
    for (Designer d : sw.designers) out << ",regime_" << to_string(d);
    out << ",error\n";
    for (const auto& r : rows) out << r;
    return out.str();
}

json run_poa_probe(const RunConfig& rc, Designer d, int threads) {
    PoAProbeReport rep = poa_search(rc.probe.sampler, d, rc.probe.samples, rc.probe.seed, rc.settings, threads);
    json out = to_json(rep);
    if (rc.probe.worst_case) {
        const WorstCaseSpec& w = *rc.probe.worst_case;
        Scenario s = worst_case_instance(w);
        json wc{{"expected_ratio", worst_case_ratio(w)}, {"designed_ratio", poa_ratio(s, d, rc.settings)}};
        if (s.K() == 2 && d != Designer::Combined) wc["worst_stable_ratio"] = poa_ratio_worst(s, d, rc.settings);
        out["worst_case"] = wc;
    }
    return out;
}

}  // namespace crl::io
