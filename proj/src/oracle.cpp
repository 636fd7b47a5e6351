#include "crl/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "crl/error.hpp"

namespace crl {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double planner(const Scenario& s, const std::vector<double>& f) {
    double sw = mean_theta(s.types) * content_value(s, f);
    for (int k = 0; k < static_cast<int>(f.size()); ++k) sw -= f[k] * path_cost(s, k, f);
    return sw;
}

struct Best {
    double x = 0.0;
    double value = kNegInf;
    void offer(double xx, double v) {
        if (v > value || (v == value && xx < x)) {
            x = xx;
            value = v;
        }
    }
};

// Grid maximization of a possibly infeasible (-inf) objective with three zoom levels.
Best zoom_max(const std::function<double(double)>& f, double lo, double hi, double step) {
    Best best;
    auto scan = [&](double a, double b, double h) {
        long n = std::max(1L, static_cast<long>(std::ceil((b - a) / h - 1e-9)));
        for (long i = 0; i <= n; ++i) {
            double x = (i == n) ? b : a + (b - a) * static_cast<double>(i) / static_cast<double>(n);
            best.offer(x, f(x));
        }
    };
    scan(lo, hi, step);
    for (int level = 0; level < 2 && best.value > kNegInf; ++level) {
        double c = best.x;
        scan(std::max(lo, c - step), std::min(hi, c + step), step / 100.0);
        step /= 100.0;
    }
    return best;
}

struct Segment {
    double lo, hi, theta;
};

std::vector<Segment> segments(const Scenario& s, double b) {
    if (auto* tt = std::get_if<TwoType>(&s.types)) {
        double m2 = std::min(1.0 - tt->eta, b);
        std::vector<Segment> out;
        if (m2 > 0) out.push_back({0.0, m2, tt->theta2});
        if (b > m2) out.push_back({m2, b, tt->theta1});
        return out;
    }
    return {{0.0, b, mean_theta(s.types)}};
}

double gap(const Scenario& s, const Mechanism& m, double theta, double x, double b) {
    std::vector<double> f{b - x, x};
    return payoff(s, m, theta, kH, f) - payoff(s, m, theta, kL, f);
}

// Equilibria of a full-participation two-path game that are stable by payoff comparison:
// the H-share rises below the point and falls above it.
std::vector<double> stable_equilibria(const Scenario& s, const Mechanism& m) {
    const double b = 1.0, h = 1e-10;
    auto segs = segments(s, b);
    std::vector<double> out;
    const double top = segs.front().theta, bottom = segs.back().theta;
    if (gap(s, m, top, 0.0, b) <= 0.0 && gap(s, m, top, h, b) <= 0.0) out.push_back(0.0);
    if (gap(s, m, bottom, b, b) >= 0.0 && gap(s, m, bottom, b - h, b) >= 0.0) out.push_back(b);
    for (std::size_t i = 0; i + 1 < segs.size(); ++i) {
        double x = segs[i].hi;
        if (gap(s, m, segs[i].theta, x, b) >= 0.0 && gap(s, m, segs[i + 1].theta, x, b) <= 0.0 &&
            gap(s, m, segs[i].theta, x - h, b) >= 0.0 && gap(s, m, segs[i + 1].theta, x + h, b) <= 0.0)
            out.push_back(x);
    }
    for (const auto& seg : segs) {
        const long n = 400;
        double xp = seg.lo, gp = gap(s, m, seg.theta, xp, b);
        for (long i = 1; i <= n; ++i) {
            double x = (i == n) ? seg.hi : seg.lo + (seg.hi - seg.lo) * static_cast<double>(i) / n;
            double g = gap(s, m, seg.theta, x, b);
            if (g == 0.0 && gp == 0.0) {
                out.push_back(x);
            } else if (gp > 0.0 && g <= 0.0) {
                double lo = xp, hi = x;
                for (int it = 0; it < 200 && hi - lo > 1e-15; ++it) {
                    double mid = 0.5 * (lo + hi);
                    (gap(s, m, seg.theta, mid, b) > 0.0 ? lo : hi) = mid;
                }
                out.push_back(hi);
            }
            xp = x;
            gp = g;
        }
    }
    return out;
}

double best_stable_sw(const Scenario& s, const Mechanism& m, double* at = nullptr) {
    double best = kNegInf;
    for (double x : stable_equilibria(s, m)) {
        std::vector<double> f{1.0 - x, x};
        double sw = social_welfare(s, m, f, 1.0);
        if (sw > best) {
            best = sw;
            if (at) *at = x;
        }
    }
    return best;
}

double grid_cost_scale(const Scenario& s) { return s.network.c_h() > 0 ? s.network.c_h() : 1.0; }

DesignOutcome side_bf(const Scenario& s, const OracleConfig& cfg) {
    const double c = s.network.c_h();
    std::vector<double> bs{1.0};
    if (auto* tt = std::get_if<TwoType>(&s.types); tt && tt->eta > 0 && tt->eta < 1) bs.push_back(1.0 - tt->eta);
    DesignOutcome out;
    out.predicted_sw = kNegInf;
    {
        std::vector<double> f{1.0 - no_incentive_flow_h(s), no_incentive_flow_h(s)};
        if (verify_equilibrium(s, NoIncentive{}, f, 1.0).is_equilibrium) {
            out.mechanism = NoIncentive{};
            out.target_flow = f;
            out.predicted_sw = social_welfare(s, NoIncentive{}, f, 1.0);
        }
    }
    for (double b : bs) {
        auto value = [&](double x) {
            if (x <= 0.0 || x >= b) return kNegInf;
            Mechanism m = SidePayment{side_payment_schedule(x, b, c), b};
            std::vector<double> f{b - x, x};
            if (!verify_equilibrium(s, m, f, b).is_equilibrium) return kNegInf;
            return social_welfare(s, m, f, b);
        };
        Best r = zoom_max(value, 0.0, b, std::max(cfg.grid_step, 1e-3));
        if (r.value > out.predicted_sw) {
            out.predicted_sw = r.value;
            out.mechanism = SidePayment{side_payment_schedule(r.x, b, c), b};
            out.target_flow = {b - r.x, r.x};
            out.participation_b = b;
        }
    }
    // The label follows whether the lowest type's participation constraint binds at the optimum found.
    if (std::holds_alternative<NoIncentive>(out.mechanism)) {
        double opt = grid_social_optimum(s, cfg).value;
        bool optimal = out.predicted_sw >= opt - 1e-9 * std::max(1.0, std::fabs(opt));
        out.regime_label = optimal ? "SocialOptimum" : "FullParticipation";
    } else if (out.participation_b < 1.0) {
        out.regime_label = "HalfParticipation";
    } else {
        out.regime_label = "SocialOptimum";
        if (auto* tt = std::get_if<TwoType>(&s.types); tt && tt->theta1 < tt->theta2) {
            double u = payoff(s, out.mechanism, tt->theta1, kL, out.target_flow);
            if (u <= 1e-6 * std::max(1.0, std::fabs(out.predicted_sw))) out.regime_label = "FullParticipation";
        }
    }
    return out;
}

DesignOutcome restriction_bf(const Scenario& s, const OracleConfig& cfg) {
    auto value = [&](double a) { return best_stable_sw(s, ContentRestriction{{a, 1.0}}); };
    Best r = zoom_max(value, 0.0, 1.0, std::max(cfg.grid_step, 1e-3));
    DesignOutcome out;
    double x = 0.0;
    out.mechanism = ContentRestriction{{r.x, 1.0}};
    out.predicted_sw = best_stable_sw(s, out.mechanism, &x);
    out.target_flow = {1.0 - x, x};
    out.diagnostics["a"] = r.x;
    out.regime_label = r.x >= 1.0 ? "WeakRestriction" : "Restricted";
    return out;
}

DesignOutcome combined_bf(const Scenario& s, const OracleConfig& cfg) {
    DesignOutcome out = side_bf(s, cfg);
    DesignOutcome r = restriction_bf(s, cfg);
    if (r.predicted_sw > out.predicted_sw) out = r;
    const double c = s.network.c_h();
    const double G = 1e6 * grid_cost_scale(s);
    const auto segs = segments(s, 1.0);
    auto eval = [&](double a, double x, Mechanism* keep) {
        if (x <= 0.0 || x >= 1.0) return kNegInf;
        double best = kNegInf;
        for (const auto& seg : segs) {
            if (x < seg.lo || x > seg.hi) continue;
            double g = x * (c - (1.0 - a) * seg.theta * content_value(s, {1.0 - x, x}));
            PaymentSchedule sch;
            sch.target_x = x;
            sch.target_level = g;
            sch.c_h = c;
            sch.form = Bang{G, -G};
            Mechanism m = Combined{a, sch};
            std::vector<double> f{1.0 - x, x};
            if (!verify_equilibrium(s, m, f, 1.0).is_equilibrium) continue;
            double sw = social_welfare(s, m, f, 1.0);
            if (sw > best) {
                best = sw;
                if (keep) *keep = m;
            }
        }
        return best;
    };
    double ba = 1.0, bx = 0.0, bv = kNegInf;
    auto scan = [&](double a0, double a1, double ha, double x0, double x1, double hx) {
        long na = std::max(1L, std::lround((a1 - a0) / ha)), nx = std::max(1L, std::lround((x1 - x0) / hx));
        for (long i = 0; i <= na; ++i)
            for (long j = 0; j <= nx; ++j) {
                double a = a0 + (a1 - a0) * static_cast<double>(i) / na;
                double x = x0 + (x1 - x0) * static_cast<double>(j) / nx;
                double v = eval(a, x, nullptr);
                if (v > bv) {
                    bv = v;
                    ba = a;
                    bx = x;
                }
            }
    };
    double ha = 0.01, hx = 0.005;
    scan(0.0, 1.0, ha, 0.0, 1.0, hx);
    for (int level = 0; level < 2 && bv > kNegInf; ++level) {
        double a0 = std::max(0.0, ba - ha), a1 = std::min(1.0, ba + ha);
        double x0 = std::max(0.0, bx - hx), x1 = std::min(1.0, bx + hx);
        ha /= 100.0;
        hx /= 100.0;
        scan(a0, a1, ha, x0, x1, hx);
    }
    (void)cfg;
    if (bv > out.predicted_sw) {
        Mechanism m;
        eval(ba, bx, &m);
        out = DesignOutcome{};
        out.mechanism = m;
        out.target_flow = {1.0 - bx, bx};
        out.predicted_sw = bv;
        out.regime_label = "Combined";
        out.diagnostics["a"] = ba;
    }
    return out;
}

// Uniform levels on [0, 1] plus geometric ones crowding toward 1.
std::vector<double> levels_near_one(double h) {
    std::vector<double> v;
    long n = std::lround(1.0 / h);
    for (long i = 0; i <= n; ++i) v.push_back(static_cast<double>(i) / n);
    const int m = 4000;
    for (int i = 0; i <= m; ++i) v.push_back(1.0 - std::pow(10.0, -1.0 - 8.0 * i / m));
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    return v;
}

// Sign changes of g from positive to nonpositive on a uniform scan of [0, hi], bisected.
template <class G>
std::vector<double> crossings(G&& g, double hi, double hx) {
    std::vector<double> out;
    long nx = std::max(1L, static_cast<long>(std::ceil(hi / hx)));
    double xp = 0.0, gp = g(0.0);
    for (long j = 1; j <= nx; ++j) {
        double x = hi * static_cast<double>(j) / nx;
        double gv = g(x);
        if (gp > 0.0 && gv <= 0.0) {
            double lo = xp, up = x;
            for (int it = 0; it < 100; ++it) {
                double mid = 0.5 * (lo + up);
                (g(mid) > 0.0 ? lo : up) = mid;
            }
            out.push_back(lo);
        }
        xp = x;
        gp = gv;
    }
    return out;
}

DesignOutcome continuous_side_bf(const Scenario& s, const OracleConfig& cfg) {
    const double c = s.network.c_h();
    const double hb = std::max(cfg.grid_step, 1e-3), hx = std::max(cfg.grid_step, 1e-3);
    auto Q = [&](double x, double b) { return content_value(s, {b - x, x}); };
    DesignOutcome out;
    out.predicted_sw = kNegInf;
    auto offer = [&](double b, double x) {
        double w = b * (2.0 - b) / 2.0 * Q(x, b) - x * c;
        if (w > out.predicted_sw) {
            out.predicted_sw = w;
            out.participation_b = b;
            out.target_flow = {b - x, x};
        }
    };
    for (double b : levels_near_one(hb)) {
        if (b <= 0.0) continue;
        // participants [1-b, 1] all get theta*Q - x*c/b; the marginal type 1-b must be exactly indifferent
        auto m = [&](double x) { return (1.0 - b) * b * Q(x, b) - x * c; };
        if (b == 1.0) {
            if (c == 0.0) {
                for (long j = 0, n = std::lround(1.0 / hx); j <= n; ++j) offer(1.0, static_cast<double>(j) / n);
            } else {
                offer(1.0, 0.0);
            }
            continue;
        }
        if (m(0.0) < 0.0) continue;
        if (m(b) >= 0.0) {
            offer(b, b);
            continue;
        }
        for (double x : crossings(m, b, hx)) offer(b, x);
    }
    out.regime_label = "ContinuousSidePayment";
    return out;
}

DesignOutcome continuous_restriction_bf(const Scenario& s, const OracleConfig& cfg) {
    const double c = s.network.c_h();
    const double ha = std::max(cfg.grid_step, 1e-3), hx = std::max(cfg.grid_step, 1e-3);
    auto Q = [&](double x) { return content_value(s, {1.0 - x, x}); };
    DesignOutcome out;
    out.predicted_sw = kNegInf;
    auto offer = [&](double a, double x) {
        Mechanism m = ContentRestriction{{a, 1.0}};
        double w = social_welfare(s, m, {1.0 - x, x}, 1.0);
        if (w > out.predicted_sw) {
            out.predicted_sw = w;
            out.mechanism = m;
            out.target_flow = {1.0 - x, x};
            out.diagnostics["a"] = a;
        }
    };
    for (double a : levels_near_one(ha)) {
        // the type at 1-x is the marginal H user: H pays c for full content, L sees a share a
        auto g = [&](double x) { return (1.0 - a) * (1.0 - x) * Q(x) - c; };
        if (g(0.0) <= 0.0) offer(a, 0.0);
        for (double x : crossings(g, 1.0, hx)) offer(a, x);
    }
    out.regime_label = "ContinuousRestriction";
    return out;
}

}  // namespace

FlowValue grid_social_optimum(const Scenario& s, const OracleConfig& cfg) {
    const double h = cfg.grid_step;
    const long n = std::lround(1.0 / h);
    FlowValue best{{}, kNegInf};
    if (s.K() == 2) {
        for (long i = 0; i <= n; ++i) {
            double x = static_cast<double>(i) / n;
            std::vector<double> f{1.0 - x, x};
            double v = planner(s, f);
            if (v > best.value) best = {f, v};
        }
        return best;
    }
    if (s.K() == 3) {
        for (long i = 0; i <= n; ++i)
            for (long j = 0; i + j <= n; ++j) {
                std::vector<double> f{static_cast<double>(n - i - j) / n, static_cast<double>(i) / n,
                                      static_cast<double>(j) / n};
                double v = planner(s, f);
                if (v > best.value) best = {f, v};
            }
        return best;
    }
    fail(ErrorKind::Unsupported, "grid_social_optimum: K <= 3");
}

FiniteAgentResult finite_agent_equilibrium(const Scenario& s, const Mechanism& m, const OracleConfig& cfg) {
    if (cfg.agent_count < 100) fail(ErrorKind::Config, "finite_agent_equilibrium: need at least 100 agents");
    const long n = cfg.agent_count;
    const int K = s.K();
    const bool can_leave = participation(m) < 1.0;
    const int out_choice = K;
    std::mt19937_64 rng(cfg.seed);
    std::uniform_real_distribution<double> U(0.0, 1.0);

    std::vector<double> theta(n);
    for (long i = 0; i < n; ++i) {
        std::visit([&](const auto& t) {
            using T = std::decay_t<decltype(t)>;
            if constexpr (std::is_same_v<T, Homogeneous>)
                theta[i] = t.theta0;
            else if constexpr (std::is_same_v<T, TwoType>)
                theta[i] = i < std::lround(t.eta * n) ? t.theta1 : t.theta2;
            else
                theta[i] = (static_cast<double>(i) + 0.5) / n;
        }, s.types);
    }
    std::vector<int> choice(n);
    std::vector<long> count(K + 1, 0);
    for (long i = 0; i < n; ++i) {
        int c = K == 2 ? (U(rng) < cfg.init_h_prob ? kH : kL) : static_cast<int>(U(rng) * K) % K;
        choice[i] = c;
        ++count[c];
    }
    auto shares = [&]() {
        std::vector<double> f(K);
        for (int k = 0; k < K; ++k) f[k] = static_cast<double>(count[k]) / n;
        return f;
    };
    std::vector<long> order(n);
    std::iota(order.begin(), order.end(), 0L);
    FiniteAgentResult res;
    for (long round = 0; round < cfg.br_rounds; ++round) {
        std::shuffle(order.begin(), order.end(), rng);
        long moved = 0;
        for (long i : order) {
            std::vector<double> f = shares();
            double cur = choice[i] == out_choice ? 0.0 : payoff(s, m, theta[i], choice[i], f);
            int best = choice[i];
            double bv = cur;
            for (int k = 0; k < K; ++k) {
                double v = payoff(s, m, theta[i], k, f);
                if (v > bv + 1e-12) {
                    bv = v;
                    best = k;
                }
            }
            if (can_leave && 0.0 > bv + 1e-12) best = out_choice;
            if (best != choice[i]) {
                --count[choice[i]];
                ++count[best];
                choice[i] = best;
                ++moved;
            }
        }
        res.rounds = round + 1;
        res.moves += moved;
        if (moved == 0) {
            res.converged = true;
            break;
        }
    }
    res.shares = shares();
    res.participating = 1.0 - static_cast<double>(count[out_choice]) / n;
    return res;
}

DesignOutcome brute_force_design(const Scenario& s, Designer kind, const OracleConfig& cfg) {
    if (s.K() != 2) fail(ErrorKind::Unsupported, "brute_force_design: two paths only");
    if (!std::holds_alternative<ConstantCost>(s.cost))
        fail(ErrorKind::Unsupported, "brute_force_design: constant costs only");
    const bool continuous = std::holds_alternative<UniformContinuous>(s.types);
    DesignOutcome out;
    switch (kind) {
        case Designer::None: {
            double x = no_incentive_flow_h(s);
            out.target_flow = {1.0 - x, x};
            out.predicted_sw = planner(s, out.target_flow);
            out.regime_label = "NoIncentive";
            break;
        }
        case Designer::Side: out = continuous ? continuous_side_bf(s, cfg) : side_bf(s, cfg); break;
        case Designer::Restriction:
            out = continuous ? continuous_restriction_bf(s, cfg) : restriction_bf(s, cfg);
            break;
        case Designer::Combined:
            if (continuous) fail(ErrorKind::Unsupported, "brute_force_design: combined needs discrete types");
            out = combined_bf(s, cfg);
            break;
    }
    out.sw_at_design = out.predicted_sw;
    return out;
}

double finite_difference_check(const ContentFunction& f, const std::vector<double>& points, double h) {
    double worst = 0.0;
    for (double x : points) {
        double lo = std::max(0.0, x - h), hi = std::min(1.0, x + h);
        double fd = (q1_eval(f, hi) - q1_eval(f, lo)) / (hi - lo);
        Slope d = q1_derivative(f, x);
        double ref = x - h < 0.0 ? d.right : (x + h > 1.0 ? d.left : d.mid());
        double err = std::fabs(fd - ref) / std::max(std::fabs(ref), 1e-12);
        worst = std::max(worst, err);
    }
    return worst;
}

}  // namespace crl
