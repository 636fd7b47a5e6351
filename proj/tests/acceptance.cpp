#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "crl/dynamics.hpp"
#include "crl/io.hpp"
#include "crl/mechanisms.hpp"
#include "crl/oracle.hpp"
#include "crl/poa.hpp"

using namespace crl;

namespace {

struct Result {
    bool pass = true;
    std::ostringstream note;

    std::string failures;

    void check(bool ok, const std::string& what) {
        if (!ok) failures += (failures.empty() ? "" : "; ") + what;
        pass = pass && ok;
    }
};

Scenario make(PathNetwork net, TypeDistribution t, ContentFunction f) {
    return Scenario{std::move(net), t, std::move(f), std::nullopt, ConstantCost{}, std::nullopt};
}

double rel(double a, double b) { return std::fabs(a - b) / std::max(1.0, std::fabs(b)); }

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

Population start_at(const Scenario& s, double x_h, double b) {
    return build_population(s, {b - x_h, x_h}, b);
}

double start_gap(const Scenario& s, const Mechanism& m, const Population& p) {
    std::vector<double> flow = p.aggregate();
    double gap = 0;
    for (const auto& c : p.classes) {
        double lo = 1e300, hi = -1e300;
        for (int k = 0; k < static_cast<int>(flow.size()); ++k) {
            double u = payoff(s, m, c.theta, k, flow);
            lo = std::min(lo, u);
            hi = std::max(hi, u);
        }
        gap = std::max(gap, hi - lo);
    }
    return std::max(gap, 1e-300);
}

DynamicsConfig fast_dynamics() {
    DynamicsConfig c;
    c.step_dt = 1e-2;
    c.horizon = 400000;
    c.convergence_eps = 1e-10;
    c.sample_every = 1000000;
    return c;
}

// 1: tight no-incentive instance.
void tight_instance(Result& r) {
    for (double c : {0.5, 0.1, 1e-4}) {
        Scenario s = make(PathNetwork::canonical(c), Homogeneous{0.5}, PiecewiseLinearCap{1.0, 0.5});
        double ratio = equilibrium_no_incentive(s).social_welfare / social_optimum(s).value;
        double expect = 0.5 / (1.0 - 0.5 * c);
        r.check(std::fabs(ratio - expect) <= 1e-9, "c=" + fmt(c) + " ratio " + fmt(ratio));
    }
    double prev = 1.0, last = 1.0;
    bool mono = true;
    for (int k = 0; k <= 40; ++k) {
        double c = 0.5 * std::pow(10.0, -k / 5.0);
        Scenario s = make(PathNetwork::canonical(c), Homogeneous{0.5}, PiecewiseLinearCap{1.0, 0.5});
        last = equilibrium_no_incentive(s).social_welfare / social_optimum(s).value;
        mono = mono && last < prev;
        prev = last;
    }
    r.check(mono, "ratio not strictly decreasing as c_H -> 0");
    r.check(std::fabs(last - 0.5) < 1e-8, "limit " + fmt(last));
    r.note << "ratios match 0.5/(1-0.5c); sweep limit " << fmt(last);
}

// 2: homogeneous side payments reach the optimum and attract the dynamics.
void homogeneous_side(Result& r) {
    SamplerSpec spec;
    spec.family = "exponential";
    spec.types = "homogeneous";
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    Settings cfg;
    int bad_eq = 0, bad_sw = 0, bad_dyn = 0;
    double worst_sw = 0, worst_dyn = 0;
    for (long i = 0; i < 100; ++i) {
        Scenario s = sample_instance(spec, i, 4);
        FlowValue opt = social_optimum(s, cfg);
        DesignOutcome d = design_side_payment(s, cfg);
        if (!verify_equilibrium(s, d.mechanism, d.target_flow, 1.0, cfg).is_equilibrium) ++bad_eq;
        if (std::fabs(d.target_flow[kH] - opt.flow[kH]) > 1e-9) ++bad_eq;
        double e = std::fabs(d.sw_at_design - opt.value) / opt.value;
        worst_sw = std::max(worst_sw, e);
        if (e > 1e-8) ++bad_sw;
        for (int k = 0; k < 10; ++k) {
            Trajectory tr = simulate_to_convergence(s, d.mechanism, start_at(s, U(rng), 1.0), fast_dynamics());
            double gap = std::fabs(tr.final_state.aggregate()[kH] - d.target_flow[kH]);
            worst_dyn = std::max(worst_dyn, gap);
            if (tr.verdict != Verdict::Converged || gap > 1e-3) ++bad_dyn;
        }
    }
    r.check(bad_eq == 0, std::to_string(bad_eq) + " designs not an equilibrium at x*");
    r.check(bad_sw == 0, std::to_string(bad_sw) + " welfare mismatches");
    r.check(bad_dyn == 0, std::to_string(bad_dyn) + " dynamics runs off target");
    r.note << "100 instances, worst SW rel err " << fmt(worst_sw) << ", worst dynamics gap " << fmt(worst_dyn);
}

// 3: two-type side payment against brute force.
void two_type_side(Result& r) {
    SamplerSpec spec;
    int label_bad = 0, sw_bad = 0;
    double worst = 0;
    OracleConfig oc;
    for (long i = 0; i < 200; ++i) {
        Scenario s = sample_instance(spec, i, 3);
        DesignOutcome d = design_side_payment(s);
        DesignOutcome b = brute_force_design(s, Designer::Side, oc);
        if (d.regime_label != b.regime_label) ++label_bad;
        double e = std::fabs(d.sw_at_design - b.predicted_sw) / std::max(1e-12, std::fabs(b.predicted_sw));
        worst = std::max(worst, e);
        if (e > 1e-4) ++sw_bad;
    }
    r.check(label_bad == 0, std::to_string(label_bad) + " regime labels differ");
    r.check(sw_bad == 0, std::to_string(sw_bad) + " welfare mismatches");
    Scenario hand = make(PathNetwork::canonical(0.5), TwoType{0.1, 0.9, 0.5}, PiecewiseLinearCap{1.0, 0.5});
    DesignOutcome h = design_side_payment(hand);
    r.check(h.regime_label == "FullParticipation", "hand example label " + h.regime_label);
    r.check(std::fabs(h.target_flow[kH] - 1.0 / 3.0) <= 1e-9, "hand example x " + fmt(h.target_flow[kH]));
    r.check(std::fabs(h.sw_at_design - 2.0 / 3.0) <= 1e-9, "hand example SW " + fmt(h.sw_at_design));
    r.note << "200 instances, worst SW rel err " << fmt(worst) << "; hand example x=1/3, SW=2/3";
}

// 4: content restriction designs are stable and reached by the dynamics.
void restriction(Result& r) {
    Settings cfg;
    cfg.eps_mech = 1e-6;
    int bad_stab = 0, bad_flow = 0, bad_sw = 0;
    double worst_flow = 0, worst_sw = 0;
    for (long i = 0; i < 200; ++i) {
        SamplerSpec spec;
        spec.types = i % 2 ? "two_type" : "homogeneous";
        Scenario s = sample_instance(spec, i, 23);
        DesignOutcome d = design_content_restriction(s, cfg);
        double b = d.participation_b;
        double x = d.target_flow[kH];
        Stability st = classify_stability(s, d.mechanism, d.target_flow, b, cfg);
        if (st != Stability::Stable) ++bad_stab;
        // Start off the indifference plateau: below a half split, above an interior target on the right.
        double x0 = x <= 0.0 ? 0.02 * b : (x == 0.5 * b ? x - 0.02 * b : std::min(x + 0.02 * b, 0.5 * (x + b)));
        if (x >= b) x0 = b - 0.02 * b;
        // Time is measured in units of the inverse payoff gap at the start.
        Population p0 = start_at(s, x0, b);
        DynamicsConfig dc = fast_dynamics();
        dc.step_dt *= std::max(1.0, 0.01 / start_gap(s, d.mechanism, p0));
        Trajectory tr = simulate_to_convergence(s, d.mechanism, p0, dc);
        double gap = std::fabs(tr.final_state.aggregate()[kH] - x);
        worst_flow = std::max(worst_flow, gap);
        if (tr.verdict != Verdict::Converged || gap > 1e-3) ++bad_flow;
        double e = std::fabs(d.sw_at_design - d.predicted_sw) / std::max(1e-12, d.predicted_sw);
        worst_sw = std::max(worst_sw, e);
        if (e > 1e-4) ++bad_sw;
    }
    r.check(bad_stab == 0, std::to_string(bad_stab) + " designs not Stable");
    r.check(bad_flow == 0, std::to_string(bad_flow) + " dynamics runs off target");
    r.check(bad_sw == 0, std::to_string(bad_sw) + " welfare off closed form");

    double jump = 0;
    for (long i = 0; i < 50; ++i) {
        SamplerSpec spec;
        spec.types = i % 2 ? "two_type" : "homogeneous";
        Scenario s = sample_instance(spec, i, 24);
        Settings c0;
        c0.eps_mech = 1e-12;
        auto at = [&](double c) {
            Scenario t = s;
            t.network = PathNetwork::canonical(c);
            return design_content_restriction(t, c0).predicted_sw;
        };
        DesignOutcome base = design_content_restriction(s, c0);
        double ql = base.diagnostics.at("q_low"), qh = base.diagnostics.at("q_high");
        double ct = mean_theta(s.types) * (qh - ql);
        if (auto* tt = std::get_if<TwoType>(&s.types); tt && tt->theta2 * ql > tt->theta1 * qh)
            ct = (tt->theta1 + tt->theta2) * (qh - ql) * tt->theta2 * ql / (tt->theta1 * qh + tt->theta2 * ql);
        jump = std::max(jump, std::fabs(at(ct * (1 - 1e-13)) - at(ct * (1 + 1e-13))));
    }
    r.check(jump <= 1e-9, "branch boundary jump " + fmt(jump));

    Scenario ex = make(PathNetwork::canonical(0.5), TwoType{0.1, 0.9, 0.5}, PiecewiseLinearCap{1.0, 0.5});
    DesignOutcome de = design_content_restriction(ex, cfg);
    r.check(std::fabs(de.sw_at_design - 0.694444) <= 1e-4, "diverse example SW " + fmt(de.sw_at_design));
    r.note << "200 instances, worst flow gap " << fmt(worst_flow) << ", worst SW rel err " << fmt(worst_sw)
           << ", boundary jump " << fmt(jump) << ", diverse example SW " << fmt(de.sw_at_design);
}

// 5: combined mechanism probe.
void combined_probe(Result& r) {
    SamplerSpec spec;
    PoAProbeReport rep = poa_search(spec, Designer::Combined, 10000, 5, Settings{}, io::default_threads());
    r.check(rep.errors == 0, std::to_string(rep.errors) + " instance errors");
    r.check(rep.min_ratio >= 0.70, "min ratio " + fmt(rep.min_ratio));
    r.check(rep.violations == 0, std::to_string(rep.violations) + " bound violations");
    r.check(rep.dominance_checked == rep.samples - rep.errors, "dominance not checked on every instance");
    r.check(rep.dominance_violations == 0, std::to_string(rep.dominance_violations) + " dominance violations");
    r.note << "10^4 instances, min ratio " << fmt(rep.min_ratio) << ", worst dominance gap "
           << fmt(rep.worst_dominance_gap);
}

// 6: sweep-grid properties on the exponential defaults.
void grid_properties(Result& r) {
    io::json doc = io::json::parse(R"({
      "schema": 1,
      "network": {"c_H": 10},
      "types": {"kind": "two_type_mean", "theta0": 0.5, "theta1": 0.1},
      "content": {"kind": "exponential", "N": 100, "n": 200, "phi": 1},
      "sweep": {"axes": [{"path": "types.theta1", "lo": 0, "hi": 0.5, "steps": 26},
                         {"path": "network.c_H", "lo": 0, "hi": 60, "steps": 31}],
                "designers": ["side", "restriction"]}
    })");
    io::RunConfig rc = io::parse_config(doc);
    std::string csv = io::run_sweep(rc, io::default_threads());
    std::istringstream in(csv);
    std::string line;
    std::getline(in, line);
    double min_g = 1, min_a = 1, worst_zero = 0;
    int errors = 0, rows = 0;
    while (std::getline(in, line)) {
        std::vector<std::string> f;
        std::stringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) f.push_back(cell);
        // theta1, c_H, sw_opt, x_opt, sw_side, sw_restriction, ratio_side, ratio_restriction, ...
        if (f.size() < 8 || f[6].empty() || f[7].empty()) {
            ++errors;
            continue;
        }
        ++rows;
        double c = std::stod(f[1]), rg = std::stod(f[6]), ra = std::stod(f[7]);
        min_g = std::min(min_g, rg);
        min_a = std::min(min_a, ra);
        if (c == 0.0) worst_zero = std::max({worst_zero, std::fabs(rg - 1), std::fabs(ra - 1)});
    }
    r.check(errors == 0, std::to_string(errors) + " sweep cells failed");
    r.check(min_g >= 0.70, "min SW_g/SW* " + fmt(min_g));
    r.check(min_a >= 0.60, "min SW_a/SW* " + fmt(min_a));
    r.check(worst_zero <= 1e-9, "c_H=0 column deviates by " + fmt(worst_zero));

    const double c_fixed = 10.0;
    int changes = 0;
    double prev = 0, cross = -1;
    bool first_positive = false;
    for (int i = 0; i <= 500; ++i) {
        double t1 = 0.5 * i / 500.0;
        Scenario s = make(PathNetwork::canonical(c_fixed), TwoType{t1, 1.0 - t1, 0.5},
                          ExponentialCoverage{100, 200, 1, 2});
        double diff = design_content_restriction(s).sw_at_design - design_side_payment(s).sw_at_design;
        if (i == 0) first_positive = diff > 0;
        if (i > 0 && (diff > 0) != (prev > 0)) {
            ++changes;
            cross = t1;
        }
        prev = diff;
    }
    r.check(first_positive, "SW_a not above SW_g at theta1=0");
    r.check(changes == 1, std::to_string(changes) + " sign changes of SW_a - SW_g");
    r.note << rows << " cells, min ratios g=" << fmt(min_g) << " a=" << fmt(min_a) << ", crossover at theta1~"
           << fmt(cross) << " (c_H=" << fmt(c_fixed) << ")";
}

// 7: three paths.
void multipath(Result& r) {
    WorstCaseSpec w;
    w.kind = WorstCaseKind::MultiPath;
    w.K = 3;
    w.delta = 1e-4;
    w.c_h = -1;
    Scenario wc = worst_case_instance(w);
    double ratio = poa_ratio(wc, Designer::Restriction);
    r.check(std::fabs(ratio - 1.0 / 3.0) <= 1e-3, "worst-case ratio " + fmt(ratio));

    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    auto simplex = [&] {
        double e1 = -std::log(U(rng)), e2 = -std::log(U(rng)), e3 = -std::log(U(rng));
        double t = e1 + e2 + e3;
        return std::vector<double>{e1 / t, e2 / t, e3 / t};
    };
    Scenario s = make(PathNetwork::multipath(3, 2.0), Homogeneous{0.5}, ExponentialCoverage{100, 200, 1, 3});
    std::vector<double> target = simplex();
    MultiPathSidePayment m = multipath_payments(target, s.network.costs[1], s.network.costs[2]);
    std::vector<double> eff = effective_costs(s, m, target);
    double gap = std::max({std::fabs(eff[0] - eff[1]), std::fabs(eff[1] - eff[2]), std::fabs(eff[0] - eff[2])});
    double budget = target[0] * m.g1(target) + target[1] * m.g2(target) - target[2] * m.refund3(target);
    r.check(gap < 1e-10, "perceived cost gap " + fmt(gap));
    r.check(std::fabs(budget) < 1e-12, "budget imbalance " + fmt(budget));
    PdCheck pd = jacobian_pd_check(s, m, target);
    r.check(pd.is_pd, "jacobian not positive definite");
    int bad = 0;
    double worst = 0;
    for (int k = 0; k < 20; ++k) {
        Trajectory tr = simulate_to_convergence(s, m, build_population(s, simplex(), 1.0), fast_dynamics());
        std::vector<double> f = tr.final_state.aggregate();
        double g = 0;
        for (int p = 0; p < 3; ++p) g = std::max(g, std::fabs(f[p] - target[p]));
        worst = std::max(worst, g);
        if (tr.verdict != Verdict::Converged || g > 1e-3) ++bad;
    }
    r.check(bad == 0, std::to_string(bad) + " runs did not reach the target");

    Scenario low = make(PathNetwork::multipath(3, 0.5), Homogeneous{0.5}, ExponentialCoverage{100, 200, 1, 3});
    DesignOutcome d = design_multipath_content_restriction(low);
    r.check(d.regime_label == "LowCost", "low-cost instance labelled " + d.regime_label);
    double v_end = 1;
    bool v_monotone = true;
    if (auto* cr = std::get_if<ContentRestriction>(&d.mechanism)) {
        DynamicsConfig dc = fast_dynamics();
        dc.mode = DynamicsMode::MinToMax;
        dc.sample_every = 100;
        Trajectory tr = simulate_to_convergence(low, d.mechanism,
                                                build_population(low, {1.0 / 6.0, 1.0 / 3.0, 0.5}, 1.0), dc);
        double prev = std::numeric_limits<double>::infinity();
        for (const auto& smp : tr.samples) {
            if (!in_lyapunov_region(smp.flow)) {
                v_monotone = false;
                break;
            }
            double v = lyapunov_value(low, cr->a[0], cr->a[1], smp.flow);
            v_monotone = v_monotone && v <= prev * (1 + 1e-12) + 1e-300;
            prev = v;
        }
        v_end = lyapunov_value(low, cr->a[0], cr->a[1], tr.final_state.aggregate());
    }
    r.check(v_monotone, "Lyapunov value not monotone inside the region");
    r.check(v_end < 1e-10, "Lyapunov value " + fmt(v_end));
    r.note << "worst-case ratio " << fmt(ratio) << ", cost gap " << fmt(gap) << ", worst dynamics gap "
           << fmt(worst) << ", final Lyapunov value " << fmt(v_end);
}

// 8: dynamic content model.
void dynamic(Result& r) {
    DynamicParams p{100, 100, 1, 0.9, 0.0, 0.5};
    double worst = 0;
    for (int i = 0; i <= 10; ++i) {
        double x = i / 10.0;
        DynamicContentState a = dynamic_fixed_point(p, x), b = dynamic_stationary(p, x);
        worst = std::max({worst, std::fabs(a.q_h - b.q_h), std::fabs(a.q_l - b.q_l)});
    }
    r.check(worst <= 1e-8, "iterated pools differ by " + fmt(worst));
    double ni = dynamic_no_incentive_sw(p);
    r.check(std::fabs(ni - 24.624) <= 1e-3, "no-incentive SW " + fmt(ni));
    DynamicParams pc = p;
    pc.c_h = 10;
    DesignOutcome d = design_dynamic_content_restriction(pc);
    double a = std::get<ContentRestriction>(d.mechanism).a[0];
    r.check(std::fabs(a - 0.7885) <= 1e-4, "a = " + fmt(a));
    r.check(std::fabs(d.sw_at_design - 37.291) <= 1e-3, "SW = " + fmt(d.sw_at_design));
    DynamicOptimum opt = dynamic_stationary_optimum(pc);
    // Stationary optimum: the x that maximizes per-period welfare with pools frozen at its own
    // stationary state.
    auto argmax_at = [&](double x) {
        DynamicContentState pools = dynamic_stationary(pc, x);
        double arg = 0, best = -1e300;
        for (int i = 0; i <= 20000; ++i) {
            double y = i / 20000.0;
            DynamicContentState next = dynamic_step(pc, pools, y);
            double v = pc.theta * (next.q_h + next.q_l) - y * pc.c_h;
            if (v > best) best = v, arg = y;
        }
        return arg;
    };
    double lo = 0, hi = 0.5;
    for (int it = 0; it < 50; ++it) {
        double mid = 0.5 * (lo + hi);
        (argmax_at(mid) > mid ? lo : hi) = mid;
    }
    double best_x = 0.5 * (lo + hi);
    r.check(std::fabs(opt.x - best_x) <= 1e-4, "optimum x " + fmt(opt.x) + " vs grid " + fmt(best_x));
    r.note << "pool diff " << fmt(worst) << ", SW_inf " << fmt(ni) << ", a " << fmt(a) << ", design SW "
           << fmt(d.sw_at_design) << ", optimum x " << fmt(opt.x);
}

// 9: linear costs.
void linear(Result& r) {
    double worst = 0;
    SamplerSpec spec;
    for (long i = 0; i < 40; ++i) {
        Scenario s = sample_instance(spec, i, 9);
        Scenario t = s;
        t.cost = LinearCost{0.0, 0.0, s.network.c_h(), 0.0};
        worst = std::max(worst, std::fabs(no_incentive_flow_h(s) - no_incentive_flow_h(t)));
        worst = std::max(worst, rel(social_optimum(t).value, social_optimum(s).value));
        for (Designer d : {Designer::Side, Designer::Restriction}) {
            DesignOutcome a = design(s, d), b = design(t, d);
            worst = std::max(worst, rel(b.sw_at_design, a.sw_at_design));
            worst = std::max(worst, std::fabs(b.target_flow[kH] - a.target_flow[kH]));
        }
    }
    r.check(worst <= 1e-12, "degenerate linear cost differs by " + fmt(worst));

    Scenario s = make(PathNetwork::canonical(0.3), Homogeneous{0.5}, ExponentialCoverage{100, 200, 1, 2});
    s.cost = LinearCost{0.0, 1.0, 0.3, 1.0};
    double xn = no_incentive_flow_h(s);
    r.check(std::fabs(xn - 0.35) <= 1e-15, "no-incentive x " + fmt(xn));
    DesignOutcome d = linear_cost_design(s, LinearDesignKind::SidePayment);
    LinearCostRegions reg = linear_cost_regions(s);
    EquilibriumCheck chk = verify_equilibrium(s, d.mechanism, d.target_flow, d.participation_b);
    r.check(chk.max_gain <= 1e-6, "side payment gain " + fmt(chk.max_gain));
    r.check(std::fabs(d.target_flow[kH] - reg.x_opt) <= 1e-6, "target " + fmt(d.target_flow[kH]));
    r.check(reg.delta_a_tilde == 0.0, "delta a~ = " + fmt(reg.delta_a_tilde));
    r.note << "degenerate diff " << fmt(worst) << ", x_NE " << fmt(xn) << ", max gain " << fmt(chk.max_gain);
}

// 10: continuous types.
void continuous(Result& r) {
    std::mt19937_64 rng(10);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    double worst_g = 0, worst_a = 0;
    OracleConfig oc;
    for (int i = 0; i < 50; ++i) {
        ContentFunction f = i % 2 ? ContentFunction(PiecewiseLinearCap{1.0, 0.05 + 0.45 * U(rng)})
                                  : ContentFunction(ExponentialCoverage{std::round(50 + 450 * U(rng)),
                                                                        std::round(50 + 450 * U(rng)), 1, 2});
        double qbar = q_total(f, 0.5, 1.0);
        double c = 0.5 * qbar * std::pow(10.0, -3 + 3 * U(rng));
        Scenario s = make(PathNetwork::canonical(c), UniformContinuous{}, f);
        double g = design_continuous_side_payment(s).sw_at_design;
        double gb = brute_force_design(s, Designer::Side, oc).predicted_sw;
        double a = design_continuous_content_restriction(s).sw_at_design;
        double ab = brute_force_design(s, Designer::Restriction, oc).predicted_sw;
        worst_g = std::max(worst_g, std::fabs(g - gb) / std::max(1e-12, std::fabs(gb)));
        worst_a = std::max(worst_a, std::fabs(a - ab) / std::max(1e-12, std::fabs(ab)));
    }
    r.check(worst_g <= 1e-3, "side payment vs grid " + fmt(worst_g));
    r.check(worst_a <= 1e-3, "restriction vs grid " + fmt(worst_a));
    Scenario ex = make(PathNetwork::canonical(0.5), UniformContinuous{}, PiecewiseLinearCap{1.0, 0.5});
    DesignOutcome d = design_continuous_content_restriction(ex);
    double a = std::get<ContentRestriction>(d.mechanism).a[0];
    r.check(std::fabs(d.target_flow[kH] - 0.5) <= 1e-9, "example x " + fmt(d.target_flow[kH]));
    r.check(std::fabs(a - 0.5) <= 1e-9, "example a " + fmt(a));
    r.check(std::fabs(d.sw_at_design - 0.625) <= 1e-9, "example SW " + fmt(d.sw_at_design));
    r.note << "50 instances, worst rel err side " << fmt(worst_g) << ", restriction " << fmt(worst_a);
}

}  // namespace

int main() {
    struct Criterion {
        int id;
        const char* name;
        double budget_s;
        std::function<void(Result&)> run;
    };
    std::vector<Criterion> all{
        {1, "no-incentive tight instance", 1, tight_instance},
        {2, "homogeneous side payment", 60, homogeneous_side},
        {3, "two-type side payment", 0, two_type_side},
        {4, "content restriction", 0, restriction},
        {5, "combined mechanism probe", 600, combined_probe},
        {6, "sweep-grid properties", 0, grid_properties},
        {7, "three paths", 0, multipath},
        {8, "dynamic content model", 0, dynamic},
        {9, "linear costs", 0, linear},
        {10, "continuous types", 0, continuous},
    };
    int failed = 0;
    for (auto& c : all) {
        Result r;
        auto t0 = std::chrono::steady_clock::now();
        try {
            c.run(r);
        } catch (const std::exception& e) {
            r.check(false, std::string("exception: ") + e.what());
        }
        double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (c.budget_s > 0) r.check(secs < c.budget_s, "runtime " + fmt(secs) + " s over " + fmt(c.budget_s) + " s");
        std::string text = r.note.str();
        if (!r.failures.empty()) text += (text.empty() ? "" : " | ") + std::string("failed: ") + r.failures;
        std::printf("%s %2d %-30s %s (%.2f s)\n", r.pass ? "PASS" : "FAIL", c.id, c.name, text.c_str(), secs);
        std::fflush(stdout);
        if (!r.pass) ++failed;
    }
    return failed == 0 ? 0 : 1;
}
