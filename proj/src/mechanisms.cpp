#include "crl/mechanisms.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "crl/error.hpp"
#include "crl/numerics.hpp"

namespace crl {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double Q(const Scenario& s, double x, double b = 1.0) { return content_value(s, {b - x, x}); }

double planner_sw(const Scenario& s, double x) {
    std::vector<double> f{1.0 - x, x};
    return mean_theta(s.types) * content_value(s, f) - f[kL] * path_cost(s, kL, f) - f[kH] * path_cost(s, kH, f);
}

void require_two_path_constant(const Scenario& s, const char* who) {
    if (s.K() != 2) fail(ErrorKind::Unsupported, std::string(who) + ": two-path scenarios only (use the multi-path designer)");
    if (!std::holds_alternative<ConstantCost>(s.cost))
        fail(ErrorKind::Unsupported, std::string(who) + ": constant costs only (use linear_cost_design)");
}

void require_symmetric_values(const Scenario& s, const char* who) {
    if (s.beta && *s.beta != 1.0)
        fail(ErrorKind::Unsupported, std::string(who) + ": closed forms assume symmetric content valuation");
}

const TwoType* half_split_types(const Scenario& s, const char* who) {
    auto* tt = std::get_if<TwoType>(&s.types);
    if (tt && tt->eta != 0.5)
        fail(ErrorKind::Unsupported, std::string(who) + ": two-type closed forms require eta = 0.5");
    return tt;
}

double g_cap(const Settings& cfg, double c) { return cfg.g_max_factor * (c > 0 ? c : 1.0); }

DesignOutcome finish(const Scenario& s, Mechanism m, std::vector<double> flow, double b, std::string label,
                     double predicted, const Settings& cfg) {
    DesignOutcome out;
    out.mechanism = std::move(m);
    out.target_flow = std::move(flow);
    out.participation_b = b;
    out.regime_label = std::move(label);
    out.predicted_sw = predicted;
    out.sw_at_design = social_welfare(s, out.mechanism, out.target_flow, b, cfg);
    return out;
}

DesignOutcome side_outcome(const Scenario& s, double target, double b, std::string label, double predicted,
                           const Settings& cfg) {
    double c = s.network.c_h();
    if (target <= 0.0) return finish(s, NoIncentive{}, {1.0, 0.0}, 1.0, std::move(label), predicted, cfg);
    PaymentSchedule g = side_payment_schedule(target, b, c);
    return finish(s, SidePayment{g, b}, {b - target, target}, b, std::move(label), predicted, cfg);
}

// Smallest x in [lo, hi] maximizing the half-participation welfare of the top types.
num::Argmax half_participation(const Scenario& s, double theta2, double b2, const Settings& cfg) {
    double c = s.network.c_h();
    auto f = [&](double x) { return b2 * theta2 * Q(s, x, b2) - x * c; };
    return num::concave_max(f, 0.0, 0.5 * b2, cfg.grid_step);
}

double ir_root(const Scenario& s, double theta1) {
    double c = s.network.c_h();
    auto h = [&](double x) { return theta1 * Q(s, x) - x * c; };
    if (h(1.0) >= 0.0) return 1.0;
    if (h(0.0) < 0.0) return 0.0;
    return num::last_nonnegative(h, 0.0, 1.0, 1e-15);
}

struct Ir21 {
    double a;
    double value;
};

Ir21 ir21_at(double x, double th1, double th2, double c, const std::function<double(double)>& q) {
    double th0 = 0.5 * (th1 + th2);
    if (x <= 0.0) return {1.0, th0 * q(0.0)};
    double qx = q(x);
    double A = (th1 - th2 * x) * qx;
    double B = x * (c - th2 * qx);
    const double slack = 1e-13 * (std::fabs(A) + std::fabs(B) + 1.0);
    double a;
    if (A > 0) {
        if (B > A + slack) return {0.0, kNegInf};
        a = 1.0;
    } else if (A < 0) {
        if (B > slack) return {0.0, kNegInf};
        a = std::clamp(B / A, 0.0, 1.0);
    } else {
        if (B > slack) return {0.0, kNegInf};
        a = 1.0;
    }
    return {a, (x * th2 + ((0.5 - x) * th2 + 0.5 * th1) * a) * qx - x * c};
}

// Maximizes a piecewise-smooth function on [lo, hi]: grid, explicit candidates, then golden
// refinement around the best few cells. Ties go to the smaller x.
num::Argmax robust_max(const std::function<double(double)>& f, double lo, double hi, double step,
                       const std::vector<double>& extra) {
    long n = std::max(2L, static_cast<long>(std::ceil((hi - lo) / step - 1e-9)));
    double h = (hi - lo) / static_cast<double>(n);
    std::vector<std::pair<double, double>> pts;
    for (long i = 0; i <= n; ++i) {
        double x = (i == n) ? hi : lo + h * static_cast<double>(i);
        pts.emplace_back(x, f(x));
    }
    num::Argmax best{lo, kNegInf};
    auto keep = [&](double x, double v) {
        if (v > best.value || (v == best.value && x < best.x)) best = {x, v};
    };
    for (auto& p : pts) keep(p.first, p.second);
    for (double x : extra)
        if (x >= lo && x <= hi) keep(x, f(x));
    std::vector<long> order(pts.size());
    for (long i = 0; i <= n; ++i) order[i] = i;
    std::partial_sort(order.begin(), order.begin() + std::min<long>(3, n + 1), order.end(),
                      [&](long a, long b) { return pts[a].second > pts[b].second; });
    for (long r = 0; r < std::min<long>(3, n + 1); ++r) {
        long i = order[r];
        if (!std::isfinite(pts[i].second)) continue;
        double a = pts[std::max(0L, i - 1)].first, b = pts[std::min(n, i + 1)].first;
        num::Argmax g = num::golden_max(f, a, b, 1e-13);
        keep(g.x, g.value);
    }
    for (double x : extra) {
        if (x < lo || x > hi) continue;
        double a = std::max(lo, x - h), b = std::min(hi, x + h);
        num::Argmax g = num::golden_max(f, a, b, 1e-13);
        keep(g.x, g.value);
    }
    return best;
}

// Root of a decreasing-in-x gap on [lo, hi] (gap(lo) > 0 > gap(hi)).
double crossing(const std::function<double(double)>& gap, double lo, double hi) {
    return num::bisect(gap, lo, hi, 1e-15);
}

}  // namespace

PaymentSchedule side_payment_schedule(double target, double b, double c_h) {
    if (!(b > 0 && b <= 1.0)) fail(ErrorKind::Domain, "side_payment_schedule: b must lie in (0,1]");
    if (!(target > 0 && target < b))
        fail(ErrorKind::Domain, "side_payment_schedule: target must lie strictly inside (0,b)");
    PaymentSchedule g;
    g.target_x = target;
    g.b = b;
    g.c_h = c_h;
    g.target_level = target * c_h / b;
    g.form = Proportional{};
    return g;
}

PaymentSchedule bang_schedule(double target, double level, double g_max) {
    PaymentSchedule g;
    g.target_x = target;
    g.b = 1.0;
    g.target_level = level;
    g.form = Bang{g_max, -g_max};
    return g;
}

RestrictionThresholds restriction_thresholds(const Scenario& s) {
    require_two_path_constant(s, "restriction_thresholds");
    double c = s.network.c_h();
    RestrictionThresholds t{Q(s, 0.0), Q(s, 0.5), {}, {}};
    std::vector<double> thetas;
    if (auto* tt = std::get_if<TwoType>(&s.types))
        thetas = {tt->theta1, tt->theta2};
    else
        thetas = {mean_theta(s.types)};
    auto thr = [&](double th, double q) { return th * q > 0 ? std::max(0.0, (th * q - c) / (th * q)) : 0.0; };
    for (double th : thetas) {
        t.a_low.push_back(thr(th, t.q_low));
        t.a_high.push_back(thr(th, t.q_high));
    }
    return t;
}

DesignOutcome design_side_payment(const Scenario& s, const Settings& cfg) {
    if (std::holds_alternative<UniformContinuous>(s.types))
        fail(ErrorKind::Unsupported, "design_side_payment: continuous types, use design_continuous_side_payment");
    if (std::holds_alternative<LinearCost>(s.cost)) return linear_cost_design(s, LinearDesignKind::SidePayment, cfg);
    require_two_path_constant(s, "design_side_payment");
    FlowValue opt = social_optimum(s, cfg);
    double xs = opt.flow[kH];
    auto* tt = std::get_if<TwoType>(&s.types);
    if (!tt) {
        DesignOutcome out = side_outcome(s, xs, 1.0, "SocialOptimum", opt.value, cfg);
        out.diagnostics["x_opt"] = xs;
        return out;
    }
    require_symmetric_values(s, "design_side_payment");
    double c = s.network.c_h();
    double x_ir = ir_root(s, tt->theta1);
    DesignOutcome out;
    double b2 = 1.0 - tt->eta;
    num::Argmax half{0.0, kNegInf};
    double sw_full = planner_sw(s, std::min(x_ir, 0.5));
    if (xs <= x_ir) {
        out = side_outcome(s, xs, 1.0, "SocialOptimum", opt.value, cfg);
    } else {
        if (b2 > 0) half = half_participation(s, tt->theta2, b2, cfg);
        if (half.value > sw_full)
            out = side_outcome(s, half.x, b2, "HalfParticipation", half.value, cfg);
        else
            out = side_outcome(s, x_ir, 1.0, "FullParticipation", sw_full, cfg);
    }
    out.diagnostics["x_opt"] = xs;
    out.diagnostics["x_ir"] = x_ir;
    out.diagnostics["sw_full_ir"] = sw_full;
    if (half.value > kNegInf) {
        out.diagnostics["x_half"] = half.x;
        out.diagnostics["sw_half"] = half.value;
    }
    (void)c;
    return out;
}

DesignOutcome design_content_restriction(const Scenario& s, const Settings& cfg) {
    if (std::holds_alternative<UniformContinuous>(s.types))
        fail(ErrorKind::Unsupported,
             "design_content_restriction: continuous types, use design_continuous_content_restriction");
    if (std::holds_alternative<LinearCost>(s.cost)) return linear_cost_design(s, LinearDesignKind::Restriction, cfg);
    require_two_path_constant(s, "design_content_restriction");
    require_symmetric_values(s, "design_content_restriction");
    const TwoType* tt = half_split_types(s, "design_content_restriction");
    const double c = s.network.c_h();
    const double ql = Q(s, 0.0), qh = Q(s, 0.5);
    const double th0 = mean_theta(s.types);
    auto restrict = [&](double a, std::vector<double> flow, std::string label, double predicted, double eps) {
        DesignOutcome o = finish(s, ContentRestriction{{a, 1.0}}, std::move(flow), 1.0, std::move(label), predicted, cfg);
        o.eps_used = eps;
        o.diagnostics["a"] = a;
        o.diagnostics["q_low"] = ql;
        o.diagnostics["q_high"] = qh;
        return o;
    };
    auto weak = [&]() { return restrict(1.0, {1.0, 0.0}, "WeakRestriction", th0 * ql, 0.0); };
    if (c == 0.0) return restrict(1.0, {0.5, 0.5}, "SocialOptimum", th0 * qh, 0.0);

    if (!tt || tt->theta1 == tt->theta2) {
        if (!(c < th0 * (qh - ql))) return weak();
        double abar = (th0 * qh - c) / (th0 * qh);
        double alow = std::max(0.0, (th0 * ql - c) / (th0 * ql));
        // Slack is taken relative to c/(theta0 Qh) so the H-L payoff gap left on the plateau is eps_mech * c.
        double eps = std::min(cfg.eps_mech * c / (th0 * qh), 0.5 * (abar - alow));
        double a = abar - eps;
        double xh0 = crossing([&](double x) { return (1.0 - a) * th0 * Q(s, x) - c; }, 0.5, 1.0);
        DesignOutcome o = restrict(a, {1.0 - xh0, xh0}, "MediumRestriction", th0 * qh - c, eps);
        o.diagnostics["x_h0"] = xh0;
        o.diagnostics["a_limit"] = abar;
        return o;
    }
    const double t1 = tt->theta1, t2 = tt->theta2;
    const bool diverse = t2 * ql > t1 * qh;
    if (diverse) {
        double thr = (t1 + t2) * (qh - ql) * t2 * ql / (t1 * qh + t2 * ql);
        if (!(c < thr)) return weak();
        double alow2 = (t2 * ql - c) / (t2 * ql);
        double abar1 = t1 * qh > 0 ? std::max(0.0, (t1 * qh - c) / (t1 * qh)) : 0.0;
        double eps = std::min(cfg.eps_mech, 0.5 * (alow2 - abar1));
        double predicted = th0 * qh - ((t1 * qh + t2 * ql) / (2.0 * t2 * ql)) * c;
        DesignOutcome o = restrict(alow2 - eps, {0.5, 0.5}, "LowerMediumRestriction", predicted, eps);
        o.diagnostics["threshold"] = thr;
        o.diagnostics["a_limit"] = alow2;
        return o;
    }
    if (!(c < th0 * (qh - ql))) return weak();
    double a = (t1 * qh - c) / (t1 * qh);
    DesignOutcome o = restrict(a, {0.5, 0.5}, "MediumRestriction", th0 * qh - c, 0.0);
    o.diagnostics["a_limit"] = a;
    return o;
}

DesignOutcome design_combined(const Scenario& s, const Settings& cfg) {
    require_two_path_constant(s, "design_combined");
    require_symmetric_values(s, "design_combined");
    if (std::holds_alternative<UniformContinuous>(s.types))
        fail(ErrorKind::Unsupported, "design_combined: two-type or homogeneous populations only");
    const TwoType* tt = half_split_types(s, "design_combined");
    const double th0 = mean_theta(s.types);
    const double t1 = tt ? tt->theta1 : th0, t2 = tt ? tt->theta2 : th0;
    const double c = s.network.c_h();
    auto q = [&](double x) { return Q(s, x); };
    auto F = [&](double x) { return ir21_at(x, t1, t2, c, q).value; };

    double xs = social_optimum(s, cfg).flow[kH];
    double x_ir = ir_root(s, t1);
    num::Argmax best = robust_max(F, 0.0, 0.5, cfg.grid_step, {xs, x_ir, 0.5});
    num::Argmax half = half_participation(s, t2, 0.5, cfg);

    DesignOutcome out;
    if (best.value >= half.value) {
        double x = best.x;
        if (x <= 0.0) {
            out = finish(s, NoIncentive{}, {1.0, 0.0}, 1.0, "Combined.IR21", best.value, cfg);
            out.diagnostics["a"] = 1.0;
        } else {
            double a = ir21_at(x, t1, t2, c, q).a;
            double level = (c - (1.0 - a) * t2 * Q(s, x)) * x;
            PaymentSchedule g = bang_schedule(x, level, g_cap(cfg, c));
            g.c_h = c;
            out = finish(s, Combined{a, g}, {1.0 - x, x}, 1.0, "Combined.IR21", best.value, cfg);
            out.g_max = g_cap(cfg, c);
            out.diagnostics["a"] = a;
            out.diagnostics["g_target"] = level;
        }
    } else {
        PaymentSchedule g = side_payment_schedule(half.x, 0.5, c);
        out = finish(s, Combined{1.0, g}, {0.5 - half.x, half.x}, 0.5, "Combined.IR2", half.value, cfg);
        out.diagnostics["a"] = 1.0;
    }
    out.diagnostics["sw_ir21"] = best.value;
    out.diagnostics["x_ir21"] = best.x;
    out.diagnostics["sw_ir2"] = half.value;
    out.diagnostics["x_ir2"] = half.x;
    return out;
}

CombinedCases combined_case_values(const Scenario& s, const Settings& cfg) {
    require_two_path_constant(s, "combined_case_values");
    const TwoType* tt = half_split_types(s, "combined_case_values");
    const double th0 = mean_theta(s.types);
    const double t1 = tt ? tt->theta1 : th0, t2 = tt ? tt->theta2 : th0;
    const double c = s.network.c_h();
    auto q = [&](double x) { return Q(s, x); };
    CombinedCases cc{};
    cc.ir21 = robust_max([&](double x) { return ir21_at(x, t1, t2, c, q).value; }, 0.0, 0.5, cfg.grid_step,
                         {social_optimum(s, cfg).flow[kH], ir_root(s, t1), 0.5})
                  .value;
    cc.ir2 = half_participation(s, t2, 0.5, cfg).value;

    const double tol = 1e-12;
    const long n = std::max(10L, static_cast<long>(std::lround(0.5 / cfg.grid_step)));
    const long na = std::max(10L, static_cast<long>(std::lround(1.0 / cfg.grid_step)));
    cc.ir12 = kNegInf;
    for (long i = 0; i <= n; ++i) {
        double x = 0.5 + 0.5 * static_cast<double>(i) / static_cast<double>(n);
        double qx = q(x);
        for (long j = 0; j <= na; ++j) {
            double a = static_cast<double>(j) / static_cast<double>(na);
            double g = (c - (1.0 - a) * t1 * qx) * x;
            if (a * t1 * qx - g < -tol) continue;
            if (t2 * qx - c + (1.0 - x) * g / x < -tol) continue;
            double sw = (1.0 - x) * a * t1 * qx + (x - 0.5) * (t1 * qx - c) + 0.5 * (t2 * qx - c);
            cc.ir12 = std::max(cc.ir12, sw);
        }
    }
    cc.split = kNegInf;
    double qh = q(0.5);
    for (long j = 0; j <= na; ++j) {
        double a = static_cast<double>(j) / static_cast<double>(na);
        double lo = std::max(0.5 * (c - (1.0 - a) * t2 * qh), c - t2 * qh);
        double hi = std::min(0.5 * (c - (1.0 - a) * t1 * qh), a * t1 * qh);
        if (lo > hi + tol) continue;
        cc.split = std::max(cc.split, 0.5 * a * t1 * qh + 0.5 * (t2 * qh - c));
    }
    return cc;
}

DesignOutcome design_continuous_side_payment(const Scenario& s, const Settings& cfg) {
    if (!std::holds_alternative<UniformContinuous>(s.types))
        fail(ErrorKind::Unsupported, "design_continuous_side_payment: requires continuous types");
    require_two_path_constant(s, "design_continuous_side_payment");
    require_symmetric_values(s, "design_continuous_side_payment");
    const double c = s.network.c_h();
    auto W = [&](double b, double x) { return b * (2.0 - b) / 2.0 * Q(s, x, b) - x * c; };
    auto root = [&](double b) -> double {
        auto h = [&](double x) { return (1.0 - b) * b * Q(s, x, b) - x * c; };
        double hb = h(b);
        if (hb > 0.0) return -1.0;
        if (hb == 0.0) return b;
        return num::last_nonnegative(h, 0.0, b, 1e-15);
    };
    auto value = [&](double b) {
        double x = root(b);
        return x < 0.0 ? kNegInf : W(b, x);
    };
    double x1 = 0.0, w1;
    if (c == 0.0) {
        num::Argmax m = num::concave_max([&](double x) { return W(1.0, x); }, 0.0, 0.5, cfg.grid_step);
        x1 = m.x;
        w1 = m.value;
    } else {
        w1 = W(1.0, 0.0);
    }
    double bbest = 1.0, xbest = x1, wbest = w1;
    num::Argmax inner = robust_max(value, cfg.grid_step, 1.0 - cfg.grid_step, cfg.grid_step, {});
    // second pass on u = -log10(1 - b)
    num::Argmax tail = robust_max([&](double u) { return value(1.0 - std::pow(10.0, -u)); },
                                  -std::log10(cfg.grid_step), 12.0, 0.01, {});
    if (tail.value > inner.value) inner = {1.0 - std::pow(10.0, -tail.x), tail.value};
    if (inner.value > wbest) {
        bbest = inner.x;
        xbest = root(inner.x);
        wbest = inner.value;
    }
    DesignOutcome out;
    if (xbest <= 0.0) {
        out = finish(s, NoIncentive{}, {1.0, 0.0}, 1.0, "ContinuousSidePayment", wbest, cfg);
    } else if (bbest >= 1.0) {
        PaymentSchedule g = side_payment_schedule(xbest, 1.0, c);
        out = finish(s, SidePayment{g, 1.0}, {1.0 - xbest, xbest}, 1.0, "ContinuousSidePayment", wbest, cfg);
    } else {
        PaymentSchedule g = side_payment_schedule(xbest, bbest, c);
        out = finish(s, SidePayment{g, bbest}, {bbest - xbest, xbest}, bbest, "ContinuousSidePayment", wbest, cfg);
    }
    out.diagnostics["b"] = bbest;
    out.diagnostics["x"] = xbest;
    return out;
}

DesignOutcome design_continuous_content_restriction(const Scenario& s, const Settings& cfg) {
    if (!std::holds_alternative<UniformContinuous>(s.types))
        fail(ErrorKind::Unsupported, "design_continuous_content_restriction: requires continuous types");
    require_two_path_constant(s, "design_continuous_content_restriction");
    require_symmetric_values(s, "design_continuous_content_restriction");
    const double c = s.network.c_h();
    auto obj = [&](double x) { return 0.5 * (Q(s, x) - (1.0 + x) * c); };
    num::Argmax m = num::concave_max(obj, 0.0, 1.0, cfg.grid_step);
    double x = m.x;
    double qx = Q(s, x), ql = Q(s, 0.0);
    DesignOutcome out;
    if (x > 0.0 && c < (qx - ql) / (1.0 + x)) {
        double a = 1.0 - c / ((1.0 - x) * qx);
        out = finish(s, ContentRestriction{{a, 1.0}}, {1.0 - x, x}, 1.0, "MediumRestriction", m.value, cfg);
        out.diagnostics["a"] = a;
    } else {
        out = finish(s, ContentRestriction{{1.0, 1.0}}, {1.0, 0.0}, 1.0, "WeakRestriction", 0.5 * ql, cfg);
        out.diagnostics["a"] = 1.0;
    }
    out.diagnostics["x_ha"] = x;
    return out;
}

MultiPathSidePayment multipath_payments(const std::vector<double>& target, double c2, double c3) {
    if (target.size() != 3) fail(ErrorKind::Unsupported, "multi-path payments are defined for three paths");
    if (!(target[0] > 0 && target[1] > 0 && target[2] > 0))
        fail(ErrorKind::Domain, "multi-path payments: target must be interior (all paths used)");
    return {target, c2, c3};
}

DesignOutcome design_multipath_side_payment(const Scenario& s, const Settings& cfg) {
    if (s.K() != 3) fail(ErrorKind::Unsupported, "design_multipath_side_payment: K = 3 only");
    if (!std::holds_alternative<Homogeneous>(s.types))
        fail(ErrorKind::Unsupported, "design_multipath_side_payment: homogeneous users only");
    FlowValue opt = social_optimum(s, cfg);
    if (opt.flow[1] <= 1e-9 || opt.flow[2] <= 1e-9)
        fail(ErrorKind::Domain, "design_multipath_side_payment: optimum leaves a path empty, no interior schedule");
    MultiPathSidePayment p = multipath_payments(opt.flow, s.network.costs[1], s.network.costs[2]);
    DesignOutcome out = finish(s, p, opt.flow, 1.0, "SocialOptimum", opt.value, cfg);
    out.diagnostics["g1"] = p.g1(opt.flow);
    out.diagnostics["g2"] = p.g2(opt.flow);
    out.diagnostics["refund3"] = p.refund3(opt.flow);
    return out;
}

DesignOutcome design_multipath_content_restriction(const Scenario& s, const Settings& cfg) {
    if (s.K() != 3) fail(ErrorKind::Unsupported, "design_multipath_content_restriction: K = 3 only");
    if (!std::holds_alternative<Homogeneous>(s.types))
        fail(ErrorKind::Unsupported, "design_multipath_content_restriction: homogeneous users only");
    const double th = mean_theta(s.types);
    const double third = 1.0 / 3.0;
    const double t3 = th * content_value(s, {third, third, third});
    const double t2 = th * content_value(s, {0.5, 0.5, 0.0});
    const double t1 = th * content_value(s, {1.0, 0.0, 0.0});
    const double c2 = s.network.costs[1], c3 = s.network.costs[2];
    const double w_low = t3 - c3, w_med = t2 - c2, w_high = t1;
    DesignOutcome out;
    auto diag = [&](DesignOutcome& o) {
        o.diagnostics["level_low"] = t3;
        o.diagnostics["level_medium"] = t2;
        o.diagnostics["level_high"] = t1;
    };
    if (c3 == 0.0) {
        out = finish(s, ContentRestriction{{1.0, 1.0, 1.0}}, {third, third, 1.0 - 2 * third}, 1.0, "LowCost", t3, cfg);
    } else if (w_high >= w_med && w_high >= w_low) {
        out = finish(s, ContentRestriction{{1.0, 1.0, 1.0}}, {1.0, 0.0, 0.0}, 1.0, "HighCost", w_high, cfg);
    } else if (w_med >= w_low) {
        double eps = std::min(cfg.eps_mech, 0.5 * (t2 - t1));
        double level = t2 - eps;
        double a1 = 1.0 - c2 / level;
        double x = crossing([&](double v) { return th * content_value(s, {1.0 - v, v, 0.0}) - level; }, 0.5, 1.0);
        out = finish(s, ContentRestriction{{a1, 1.0, 1.0}}, {1.0 - x, x, 0.0}, 1.0, "MediumCost", w_med, cfg);
        out.eps_used = eps;
    } else {
        double eps = std::min(cfg.eps_mech, 0.5 * (t3 - t1));
        double level = t3 - eps;
        double a1 = 1.0 - c3 / level, a2 = 1.0 - (c3 - c2) / level;
        auto along = [&](double u) -> std::vector<double> {
            if (u <= 1.0) return {third * (1.0 - u), third, third * (1.0 + u)};
            double v = u - 1.0;
            return {0.0, third * (1.0 - v), 1.0 - third * (1.0 - v)};
        };
        double u = crossing([&](double v) { return th * content_value(s, along(v)) - level; }, 0.0, 2.0);
        out = finish(s, ContentRestriction{{a1, a2, 1.0}}, along(u), 1.0, "LowCost", w_low, cfg);
        out.eps_used = eps;
    }
    diag(out);
    return out;
}

double dynamic_no_incentive_sw(const DynamicParams& p) {
    double r = p.retention();
    return p.theta * 0.5 * p.total_items * (1.0 - r) / (1.0 - p.gamma * r);
}

double dynamic_stationary_sw(const DynamicParams& p, double x) {
    DynamicContentState st = dynamic_stationary(p, x);
    return p.theta * (st.q_h + st.q_l) - x * p.c_h;
}

DynamicOptimum dynamic_stationary_optimum(const DynamicParams& p) {
    const double r = p.retention(), g = p.gamma, lr = std::log(r);
    const double scale = p.theta * 0.5 * p.total_items;
    if (scale * (r - 1.0) * lr / (1.0 - g * r) <= p.c_h) return {0.0, dynamic_stationary_sw(p, 0.0)};
    if (p.c_h == 0.0) return {0.5, dynamic_stationary_sw(p, 0.5)};
    auto F = [&](double x) {
        double rl = std::pow(r, 1.0 - x), rh = std::pow(r, x);
        return scale * (1.0 - g) * lr * (rl / (1.0 - g * rl) - rh / (1.0 - g * rh)) - p.c_h;
    };
    double x = num::bisect(F, 0.0, 0.5, 1e-15);
    return {x, dynamic_stationary_sw(p, x)};
}

DesignOutcome design_dynamic_content_restriction(const DynamicParams& p) {
    const double r = p.retention(), sr = std::sqrt(r), g = p.gamma, N = p.total_items;
    const double pooled = p.theta * N * (1.0 - sr) / (1.0 - g * sr);
    const double none = dynamic_no_incentive_sw(p);
    DesignOutcome out;
    if (p.c_h < pooled - none) {
        double a = 1.0 - p.c_h * (1.0 - g * sr) / (p.theta * N * (1.0 - sr));
        out.mechanism = ContentRestriction{{a, 1.0}};
        out.target_flow = {0.5, 0.5};
        out.regime_label = "MediumRestriction";
        out.predicted_sw = pooled - p.c_h;
        out.diagnostics["a"] = a;
    } else {
        out.mechanism = ContentRestriction{{1.0, 1.0}};
        out.target_flow = {1.0, 0.0};
        out.regime_label = "WeakRestriction";
        out.predicted_sw = none;
        out.diagnostics["a"] = 1.0;
    }
    out.sw_at_design = out.predicted_sw;
    out.diagnostics["threshold"] = pooled - none;
    return out;
}

LinearCostRegions linear_cost_regions(const Scenario& s, const Settings& cfg) {
    auto* lc = std::get_if<LinearCost>(&s.cost);
    if (!lc) fail(ErrorKind::Unsupported, "linear_cost_regions: scenario has no linear cost model");
    if (!std::holds_alternative<Homogeneous>(s.types))
        fail(ErrorKind::Unsupported, "linear cost analysis: homogeneous users only");
    const double th = mean_theta(s.types);
    const double bh = lc->b_h, bl = lc->b_l;
    const double dc = lc->c_h - lc->c_l;
    const double d0 = q1_derivative(s.content, 0.0).right, d1 = q1_derivative(s.content, 1.0).left;
    double dat = 0.0;
    if (bh + bl > 0) {
        auto phi = [&](double d) {
            return th * q1_derivative(s.content, (bl - d) / (bh + bl)).mid() -
                   th * q1_derivative(s.content, (bh + d) / (bh + bl)).mid() + d;
        };
        dat = num::bisect(phi, -bh, bl, 1e-15);
    }
    const double b1 = th * (d1 - d0) - 2.0 * bh, b6 = th * (d0 - d1) + 2.0 * bl;
    const double tol = 1e-12 * std::max(1.0, std::fabs(dc));
    LinearCostRegions R{dc, dat, 0, 0, no_incentive_flow_h(s), social_optimum(s, cfg).flow[kH]};
    if (dc <= b1)
        R.region = 1;
    else if (dc <= -bh)
        R.region = 2;
    else if (std::fabs(dc - dat) <= tol)
        R.region = 4;
    else if (dc < dat)
        R.region = 3;
    else if (dc < bl)
        R.region = 5;
    else if (dc < b6)
        R.region = 6;
    else
        R.region = 7;
    R.adjacent_region = R.region;
    if (std::fabs(dc - b1) <= tol) R.adjacent_region = R.region == 1 ? 2 : 1;
    if (std::fabs(dc + bh) <= tol && R.region != 4) R.adjacent_region = R.region == 2 ? 3 : 2;
    if (std::fabs(dc - bl) <= tol && R.region != 4) R.adjacent_region = R.region == 6 ? 5 : 6;
    if (std::fabs(dc - b6) <= tol) R.adjacent_region = R.region == 7 ? 6 : 7;
    return R;
}

DesignOutcome linear_cost_design(const Scenario& s, LinearDesignKind kind, const Settings& cfg) {
    auto* lc = std::get_if<LinearCost>(&s.cost);
    if (!lc) fail(ErrorKind::Unsupported, "linear_cost_design: scenario has no linear cost model");
    if (lc->b_l == 0 && lc->b_h == 0 && lc->c_l == 0) {
        Scenario base = s;
        base.cost = ConstantCost{};
        base.network = PathNetwork::canonical(lc->c_h);
        DesignOutcome o = kind == LinearDesignKind::SidePayment ? design_side_payment(base, cfg)
                                                                 : design_content_restriction(base, cfg);
        if (!std::holds_alternative<Homogeneous>(s.types)) return o;
        LinearCostRegions R = linear_cost_regions(s, cfg);
        o.diagnostics["canonical_" + o.regime_label] = 1.0;
        o.regime_label = "A" + std::to_string(R.region);
        if (R.adjacent_region != R.region) o.regime_label += "|A" + std::to_string(R.adjacent_region);
        o.diagnostics["delta_c"] = R.delta_c;
        o.diagnostics["delta_a_tilde"] = R.delta_a_tilde;
        o.diagnostics["x_nash"] = R.x_nash;
        o.diagnostics["x_opt"] = R.x_opt;
        return o;
    }
    LinearCostRegions R = linear_cost_regions(s, cfg);
    std::string label = "A" + std::to_string(R.region);
    if (R.adjacent_region != R.region) label += "|A" + std::to_string(R.adjacent_region);
    auto tag = [&](DesignOutcome o) {
        o.diagnostics["delta_c"] = R.delta_c;
        o.diagnostics["delta_a_tilde"] = R.delta_a_tilde;
        o.diagnostics["x_nash"] = R.x_nash;
        o.diagnostics["x_opt"] = R.x_opt;
        return o;
    };
    const double th = mean_theta(s.types);
    const double bh = lc->b_h, bl = lc->b_l, dc = R.delta_c;
    const double xn = R.x_nash, xs = R.x_opt;
    auto none = [&]() { return finish(s, NoIncentive{}, {1.0 - xn, xn}, 1.0, label, planner_sw(s, xn), cfg); };
    const bool up = R.region == 2 || R.region == 3;
    const bool down = R.region == 5 || R.region == 6;
    if (kind == LinearDesignKind::SidePayment) {
        if (!(up || down) || xs <= 0.0 || xs >= 1.0) return tag(none());
        PaymentSchedule g;
        g.target_x = xs;
        g.b = 1.0;
        g.c_h = lc->c_h;
        g.target_level = dc * xs - bl * xs + (bh + bl) * xs * xs;
        g.form = Affine{up};
        DesignOutcome o = finish(s, SidePayment{g, 1.0}, {1.0 - xs, xs}, 1.0, label, planner_sw(s, xs), cfg);
        o.diagnostics["g_bar"] = g.target_level;
        return tag(o);
    }
    const double swn = planner_sw(s, xn);
    if (up) {
        num::Argmax m = num::concave_max([&](double x) { return th * Q(s, x) + bl * x - lc->c_l - bl; }, 0.0, 1.0,
                                         cfg.grid_step);
        double x = m.x;
        if (dc < bl - (bh + bl) * x && m.value > swn) {
            double ah = 1.0 - (bl - (bh + bl) * x - dc) / (th * Q(s, x));
            DesignOutcome o = finish(s, ContentRestriction{{1.0, ah}}, {1.0 - x, x}, 1.0, label, m.value, cfg);
            o.diagnostics["a_h"] = ah;
            return tag(o);
        }
    } else if (down) {
        num::Argmax m =
            num::concave_max([&](double x) { return th * Q(s, x) - bh * x - lc->c_h; }, 0.0, 1.0, cfg.grid_step);
        double x = m.x;
        if (dc > bl - (bh + bl) * x && m.value > swn) {
            double al = 1.0 - (dc + (bh + bl) * x - bl) / (th * Q(s, x));
            DesignOutcome o = finish(s, ContentRestriction{{al, 1.0}}, {1.0 - x, x}, 1.0, label, m.value, cfg);
            o.diagnostics["a_l"] = al;
            return tag(o);
        }
    }
    return tag(none());
}

Designer designer_from_string(const std::string& name) {
    if (name == "none") return Designer::None;
    if (name == "side" || name == "side_payment") return Designer::Side;
    if (name == "restriction" || name == "content_restriction") return Designer::Restriction;
    if (name == "combined") return Designer::Combined;
    fail(ErrorKind::Config, "unknown designer '" + name + "' (expected none, side, restriction, combined)");
}

std::string to_string(Designer d) {
    switch (d) {
        case Designer::None: return "none";
        case Designer::Side: return "side";
        case Designer::Restriction: return "restriction";
        case Designer::Combined: return "combined";
    }
    return "?";
}

DesignOutcome design(const Scenario& s, Designer d, const Settings& cfg) {
    const bool continuous = std::holds_alternative<UniformContinuous>(s.types);
    switch (d) {
        case Designer::None: {
            std::vector<double> flow(s.K(), 0.0);
            if (s.K() == 2) {
                double xh = no_incentive_flow_h(s);
                flow = {1.0 - xh, xh};
            } else {
                flow[0] = 1.0;
            }
            DesignOutcome o = finish(s, NoIncentive{}, flow, 1.0, "NoIncentive", 0.0, cfg);
            o.predicted_sw = o.sw_at_design;
            return o;
        }
        case Designer::Side:
            if (continuous) return design_continuous_side_payment(s, cfg);
            if (s.K() == 3) return design_multipath_side_payment(s, cfg);
            return design_side_payment(s, cfg);
        case Designer::Restriction:
            if (continuous) return design_continuous_content_restriction(s, cfg);
            if (s.K() == 3) return design_multipath_content_restriction(s, cfg);
            return design_content_restriction(s, cfg);
        case Designer::Combined: return design_combined(s, cfg);
    }
    fail(ErrorKind::Config, "unknown designer");
}

}  // namespace crl
