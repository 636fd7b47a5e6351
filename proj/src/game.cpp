#include "crl/game.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

#include "crl/dynamics.hpp"
#include "crl/error.hpp"
#include "crl/numerics.hpp"

namespace crl {

namespace {

constexpr double kFlowFloor = 1e-12;
constexpr double kMassEps = 1e-15;

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

bool uses_outside_option(const Mechanism& m) {
    return std::holds_alternative<SidePayment>(m) || std::holds_alternative<Combined>(m);
}

void add_interval(Population& pop, double lo, double hi, int nodes, int path, int K) {
    double len = hi - lo;
    if (len <= 0.0) return;
    int n = std::max(nodes, 2);
    double h = len / (n - 1);
    for (int j = 0; j < n; ++j) {
        double w = (j == 0 || j == n - 1) ? 0.5 * h : h;
        pop.classes.push_back({lo + h * j, w});
        std::vector<double> a(K, 0.0);
        if (path >= 0) a[path] = w;
        pop.alloc.push_back(std::move(a));
    }
}

bool symmetric_two_path(const Scenario& s) {
    if (s.beta && *s.beta != 1.0) return false;
    if (auto* lc = std::get_if<LinearCost>(&s.cost)) return lc->b_l == 0 && lc->b_h == 0 && lc->c_l == 0;
    return true;
}

// Full-participation planner welfare for an aggregate flow without restriction.
double planner_welfare(const Scenario& s, double theta_bar, const std::vector<double>& flow) {
    double sw = theta_bar * content_value(s, flow);
    for (int k = 0; k < static_cast<int>(flow.size()); ++k) sw -= flow[k] * path_cost(s, k, flow);
    return sw;
}

double nested_best(const Scenario& s, double theta_bar, std::vector<double>& x, int j, double used,
                   std::vector<double>& best_flow, double& best_val) {
    int K = static_cast<int>(x.size());
    if (j == 0) {
        x[0] = std::max(0.0, 1.0 - used);
        double v = planner_welfare(s, theta_bar, x);
        if (v > best_val) {
            best_val = v;
            best_flow = x;
        }
        return v;
    }
    double lo = (j == K - 1) ? 0.0 : x[j + 1];
    double hi = (1.0 - used) / static_cast<double>(j + 1);
    if (hi < lo) hi = lo;
    auto f = [&](double v) {
        x[j] = v;
        return nested_best(s, theta_bar, x, j - 1, used + v, best_flow, best_val);
    };
    return num::golden_max(f, lo, hi, 1e-11).value;
}

}  // namespace

double mean_theta(const TypeDistribution& t) {
    return std::visit(overloaded{[](const Homogeneous& h) { return h.theta0; },
                                 [](const TwoType& tt) { return tt.eta * tt.theta1 + (1.0 - tt.eta) * tt.theta2; },
                                 [](const UniformContinuous&) { return 0.5; }},
                      t);
}

PathNetwork PathNetwork::canonical(double c_h) { return {2, {0.0, c_h}}; }

PathNetwork PathNetwork::multipath(int K, double c_h) {
    if (K < 2) fail(ErrorKind::Config, "network: K must be at least 2");
    PathNetwork n{K, std::vector<double>(K)};
    for (int k = 0; k < K; ++k) n.costs[k] = static_cast<double>(k) / static_cast<double>(K - 1) * c_h;
    n.costs[K - 1] = c_h;
    return n;
}

void Scenario::validate() const {
    if (network.K < 2) fail(ErrorKind::Config, "network.K must be at least 2");
    if (static_cast<int>(network.costs.size()) != network.K)
        fail(ErrorKind::Config, "network.costs must have K entries");
    for (int k = 0; k < network.K; ++k) {
        if (!(network.costs[k] >= 0)) fail(ErrorKind::Config, "network.costs must be nonnegative");
        if (k > 0 && network.costs[k] < network.costs[k - 1])
            fail(ErrorKind::Config, "network.costs must be nondecreasing");
    }
    if (network.costs[0] != 0.0) fail(ErrorKind::Config, "network.costs[0] must be 0");
    if (auto* e = std::get_if<ExponentialCoverage>(&content.form()); e && e->paths != network.K)
        fail(ErrorKind::Config, "content.K must equal network.K");
    std::visit(overloaded{[](const Homogeneous& h) {
                              if (!(h.theta0 >= 0)) fail(ErrorKind::Config, "types.theta0 must be nonnegative");
                          },
                          [](const TwoType& t) {
                              if (!(t.theta1 >= 0 && t.theta1 <= t.theta2))
                                  fail(ErrorKind::Config, "types: need 0 <= theta1 <= theta2");
                              if (!(t.eta >= 0 && t.eta <= 1)) fail(ErrorKind::Config, "types.eta must lie in [0,1]");
                          },
                          [](const UniformContinuous&) {}},
               types);
    if (beta) {
        if (!(*beta > 0 && *beta <= 1)) fail(ErrorKind::Config, "beta must lie in (0,1]");
        if (network.K != 2) fail(ErrorKind::Config, "beta weights require two paths");
    }
    if (auto* lc = std::get_if<LinearCost>(&cost)) {
        if (network.K != 2) fail(ErrorKind::Config, "linear cost model requires two paths");
        if (!(lc->c_l >= 0 && lc->b_l >= 0 && lc->c_h >= 0 && lc->b_h >= 0))
            fail(ErrorKind::Config, "linear cost coefficients must be nonnegative");
    }
    if (overlap && !(overlap->items > 0 && overlap->users > 0 && overlap->items_per_user > 0 &&
                     overlap->items_per_user < overlap->items))
        fail(ErrorKind::Config, "overlap: need N0 > phi > 0 and n > 0");
}

double PaymentSchedule::operator()(double x) const {
    return std::visit(overloaded{[&](const Proportional&) { return target_x * c_h * (b - x) / (b * (b - target_x)); },
                                 [&](const Bang& g) {
                                     if (x < target_x - g.band) return g.level_high;
                                     if (x > target_x + g.band) return g.level_low;
                                     return target_level;
                                 },
                                 [&](const Affine& a) {
                                     return a.rising ? target_level * x / target_x
                                                     : target_level * (1.0 - x) / (1.0 - target_x);
                                 }},
                      form);
}

double MultiPathSidePayment::g1(const std::vector<double>& x) const {
    return x[0] * (target[1] * c2 + target[2] * c3) / target[0];
}

double MultiPathSidePayment::g2(const std::vector<double>& x) const {
    return -x[0] * x[0] * target[1] * c2 / (target[0] * std::max(x[1], kFlowFloor)) + x[2] * (c3 - c2);
}

double MultiPathSidePayment::refund3(const std::vector<double>& x) const {
    return x[0] * x[0] * target[2] * c3 / (target[0] * std::max(x[2], kFlowFloor)) + x[1] * (c3 - c2);
}

double participation(const Mechanism& m) {
    if (auto* sp = std::get_if<SidePayment>(&m)) return sp->participation_b;
    if (auto* c = std::get_if<Combined>(&m)) return c->schedule.b;
    return 1.0;
}

std::string mechanism_name(const Mechanism& m) {
    return std::visit(overloaded{[](const NoIncentive&) { return std::string("none"); },
                                 [](const SidePayment&) { return std::string("side_payment"); },
                                 [](const ContentRestriction&) { return std::string("restriction"); },
                                 [](const Combined&) { return std::string("combined"); },
                                 [](const MultiPathSidePayment&) { return std::string("multipath_side_payment"); }},
                      m);
}

std::vector<double> Population::aggregate() const {
    std::size_t K = alloc.empty() ? 0 : alloc.front().size();
    std::vector<double> agg(K, 0.0);
    for (const auto& row : alloc)
        for (std::size_t k = 0; k < K; ++k) agg[k] += row[k];
    return agg;
}

double Population::participating() const {
    double s = 0.0;
    for (const auto& row : alloc)
        for (double v : row) s += v;
    return s;
}

Population build_population(const Scenario& s, const std::vector<double>& flow, double b, const Settings& cfg) {
    const int K = static_cast<int>(flow.size());
    if (K != s.K()) fail(ErrorKind::Mismatch, "flow length does not match the number of paths");
    double sum = 0.0;
    for (double v : flow) {
        if (v < -1e-12) fail(ErrorKind::Domain, "flow entries must be nonnegative");
        sum += v;
    }
    if (std::fabs(sum - b) > 1e-9) fail(ErrorKind::Domain, "flow must sum to the participation mass b");
    if (!(b >= 0 && b <= 1 + 1e-12)) fail(ErrorKind::Domain, "participation must lie in [0,1]");
    std::vector<double> x(flow);
    for (double& v : x) v = std::max(v, 0.0);

    Population pop;
    std::visit(overloaded{[&](const Homogeneous& h) {
                              pop.classes.push_back({h.theta0, 1.0});
                              pop.alloc.push_back(x);
                          },
                          [&](const TwoType& t) {
                              double p2 = std::min(1.0 - t.eta, b);
                              double p1 = std::clamp(b - p2, 0.0, t.eta);
                              pop.classes = {{t.theta1, t.eta}, {t.theta2, 1.0 - t.eta}};
                              pop.alloc.assign(2, std::vector<double>(K, 0.0));
                              if (K == 2) {
                                  double h2 = std::min(p2, x[kH]);
                                  double h1 = std::clamp(x[kH] - h2, 0.0, p1);
                                  pop.alloc[1] = {p2 - h2, h2};
                                  pop.alloc[0] = {p1 - h1, h1};
                              } else if (t.theta1 == t.theta2 || p1 == 0.0 || p2 == 0.0) {
                                  for (int k = 0; k < K; ++k) {
                                      pop.alloc[0][k] = b > 0 ? x[k] * p1 / b : 0.0;
                                      pop.alloc[1][k] = b > 0 ? x[k] * p2 / b : 0.0;
                                  }
                              } else {
                                  fail(ErrorKind::Unsupported, "two-type populations on more than two paths");
                              }
                          },
                          [&](const UniformContinuous&) {
                              if (K != 2) fail(ErrorKind::Unsupported, "continuous types require two paths");
                              int M = cfg.continuum_classes;
                              double lo = 1.0 - b;
                              double cut = std::clamp(1.0 - x[kH], lo, 1.0);
                              add_interval(pop, 0.0, lo, M, -1, K);
                              add_interval(pop, lo, cut, M, kL, K);
                              add_interval(pop, cut, 1.0, M, kH, K);
                          }},
               s.types);
    return pop;
}

double content_value(const Scenario& s, const std::vector<double>& flow) {
    if (s.beta) return q1_eval(s.content, flow[kH]) + *s.beta * q1_eval(s.content, flow[kL]);
    double q = s.overlap ? overlap_value(*s.overlap) : 0.0;
    for (double v : flow) q += q1_eval(s.content, std::clamp(v, 0.0, 1.0));
    return q;
}

double path_cost(const Scenario& s, int path, const std::vector<double>& flow) {
    if (auto* lc = std::get_if<LinearCost>(&s.cost))
        return path == kL ? lc->c_l + lc->b_l * flow[kL] : lc->c_h + lc->b_h * flow[kH];
    return s.network.costs[path];
}

double restriction_factor(const Mechanism& m, int path, int K) {
    if (auto* r = std::get_if<ContentRestriction>(&m)) {
        if (static_cast<int>(r->a.size()) != K)
            fail(ErrorKind::Mismatch, "restriction vector length must equal the number of paths");
        return r->a[path];
    }
    if (auto* c = std::get_if<Combined>(&m)) return path == kL ? c->a : 1.0;
    return 1.0;
}

double transfer(const Mechanism& m, int path, const std::vector<double>& flow) {
    const PaymentSchedule* g = nullptr;
    if (auto* sp = std::get_if<SidePayment>(&m)) g = &sp->schedule;
    if (auto* c = std::get_if<Combined>(&m)) g = &c->schedule;
    if (g) {
        if (flow.size() != 2) fail(ErrorKind::Mismatch, "two-path payment schedule on a multi-path flow");
        double pay = (*g)(flow[kH]);
        return path == kL ? -pay : flow[kL] * pay / std::max(flow[kH], kFlowFloor);
    }
    if (auto* mp = std::get_if<MultiPathSidePayment>(&m)) {
        if (flow.size() != 3) fail(ErrorKind::Mismatch, "three-path payments need three paths");
        if (path == 0) return -mp->g1(flow);
        if (path == 1) return -mp->g2(flow);
        return mp->refund3(flow);
    }
    return 0.0;
}

double payoff(const Scenario& s, const Mechanism& m, double theta, int path, const std::vector<double>& flow) {
    const int K = static_cast<int>(flow.size());
    if (path < 0 || path >= K) fail(ErrorKind::Domain, "path index out of range");
    double v = theta * restriction_factor(m, path, K) * content_value(s, flow);
    return v - path_cost(s, path, flow) + transfer(m, path, flow);
}

double social_welfare(const Scenario& s, const Mechanism& m, const Population& pop) {
    std::vector<double> agg = pop.aggregate();
    const int K = static_cast<int>(agg.size());
    double V = content_value(s, agg);
    double sw = 0.0;
    for (std::size_t i = 0; i < pop.classes.size(); ++i)
        for (int k = 0; k < K; ++k)
            if (pop.alloc[i][k] > 0) sw += pop.alloc[i][k] * pop.classes[i].theta * restriction_factor(m, k, K) * V;
    for (int k = 0; k < K; ++k) sw -= agg[k] * path_cost(s, k, agg);
    return sw;
}

double social_welfare(const Scenario& s, const Mechanism& m, const std::vector<double>& flow, double b,
                      const Settings& cfg) {
    return social_welfare(s, m, build_population(s, flow, b, cfg));
}

FlowValue social_optimum(const Scenario& s, const Settings& cfg) {
    const double tb = mean_theta(s.types);
    if (s.K() == 2) {
        double hi = symmetric_two_path(s) ? 0.5 : 1.0;
        auto f = [&](double x) { return planner_welfare(s, tb, {1.0 - x, x}); };
        num::Argmax r = num::concave_max(f, 0.0, hi, cfg.grid_step);
        return {{1.0 - r.x, r.x}, r.value};
    }
    if (!std::holds_alternative<ConstantCost>(s.cost))
        fail(ErrorKind::Unsupported, "multi-path optimum requires constant costs");
    std::vector<double> x(s.K(), 0.0), best;
    double best_val = -std::numeric_limits<double>::infinity();
    nested_best(s, tb, x, s.K() - 1, 0.0, best, best_val);
    return {best, best_val};
}

std::string to_string(Stability s) {
    switch (s) {
        case Stability::Stable: return "Stable";
        case Stability::Unstable: return "Unstable";
        case Stability::Boundary: return "Boundary";
    }
    return "?";
}

double no_incentive_flow_h(const Scenario& s) {
    if (auto* lc = std::get_if<LinearCost>(&s.cost)) {
        double denom = lc->b_h + lc->b_l;
        double num = lc->c_l + lc->b_l - lc->c_h;
        if (denom == 0.0) return num > 0 ? 1.0 : 0.0;
        return std::clamp(num / denom, 0.0, 1.0);
    }
    return 0.0;
}

EquilibriumReport make_report(const Scenario& s, const Mechanism& m, const Population& pop, Stability st) {
    EquilibriumReport rep;
    rep.flow = pop.aggregate();
    rep.stability = st;
    rep.participation_b = pop.participating();
    rep.social_welfare = social_welfare(s, m, pop);
    const int K = static_cast<int>(rep.flow.size());
    std::vector<double> seen;
    for (const auto& c : pop.classes) {
        if (std::find(seen.begin(), seen.end(), c.theta) != seen.end()) continue;
        seen.push_back(c.theta);
        std::vector<double> u(K);
        for (int k = 0; k < K; ++k) u[k] = payoff(s, m, c.theta, k, rep.flow);
        rep.per_type_payoffs.emplace_back(c.theta, std::move(u));
        if (rep.per_type_payoffs.size() >= 8) break;
    }
    return rep;
}

EquilibriumReport equilibrium_no_incentive(const Scenario& s, const Settings& cfg) {
    std::vector<double> flow(s.K(), 0.0);
    if (s.K() == 2) {
        double xh = no_incentive_flow_h(s);
        flow = {1.0 - xh, xh};
    } else {
        flow[0] = 1.0;
    }
    Mechanism m = NoIncentive{};
    Population pop = build_population(s, flow, 1.0, cfg);
    return make_report(s, m, pop, classify_stability(s, m, pop, cfg));
}

EquilibriumCheck verify_equilibrium(const Scenario& s, const Mechanism& m, const Population& pop, double tol) {
    std::vector<double> agg = pop.aggregate();
    const int K = static_cast<int>(agg.size());
    const bool outside = uses_outside_option(m);
    double max_gain = 0.0;
    std::vector<double> u(K);
    double last_theta = std::numeric_limits<double>::quiet_NaN();
    for (std::size_t i = 0; i < pop.classes.size(); ++i) {
        double th = pop.classes[i].theta;
        if (th != last_theta) {
            for (int k = 0; k < K; ++k) u[k] = payoff(s, m, th, k, agg);
            last_theta = th;
        }
        double best = *std::max_element(u.begin(), u.end());
        double inside = 0.0;
        for (int k = 0; k < K; ++k) {
            double mass = pop.alloc[i][k];
            inside += mass;
            if (mass <= kMassEps) continue;
            max_gain = std::max(max_gain, best - u[k]);
            if (outside) max_gain = std::max(max_gain, -u[k]);
        }
        if (outside && pop.classes[i].mass - inside > kMassEps) max_gain = std::max(max_gain, best);
    }
    return {max_gain <= tol, max_gain};
}

EquilibriumCheck verify_equilibrium(const Scenario& s, const Mechanism& m, const std::vector<double>& flow,
                                    double b, const Settings& cfg) {
    return verify_equilibrium(s, m, build_population(s, flow, b, cfg), cfg.eq_tol);
}

namespace {

enum class Outcome { Returned, Left, Neutral };

Outcome run_perturbation(const Scenario& s, const Mechanism& m, Population pop, const std::vector<double>& eq,
                         double delta) {
    DynamicsConfig dc;
    dc.mode = DynamicsMode::PairwiseSmith;
    const long horizon = 20000;
    auto dist = [&](const std::vector<double>& a) {
        double d = 0.0;
        for (std::size_t k = 0; k < a.size(); ++k) d = std::max(d, std::fabs(a[k] - eq[k]));
        return d;
    };
    double scale = 0.0;
    for (const auto& c : pop.classes)
        for (std::size_t k = 0; k < eq.size(); ++k)
            scale = std::max(scale, std::fabs(payoff(s, m, c.theta, static_cast<int>(k), eq)));
    // Time is rescaled so every step moves the flow by about delta/200. The flow is neutral once
    // the payoff gaps driving it sink to rounding level.
    double d = dist(pop.aggregate());
    for (long t = 0; t < horizon; ++t) {
        auto v = flow_velocity(s, m, pop, dc);
        std::vector<double> agg_v(eq.size(), 0.0);
        for (const auto& row : v)
            for (std::size_t k = 0; k < row.size(); ++k) agg_v[k] += std::fabs(row[k]);
        double speed = *std::max_element(agg_v.begin(), agg_v.end());
        if (speed <= 1e-14 * std::max(scale, 1e-300) * std::max(d, 1e-300)) return Outcome::Neutral;
        dc.step_dt = 0.005 * delta / speed;
        pop = smith_step(s, m, pop, dc);
        d = dist(pop.aggregate());
        if (d <= 0.1 * delta) return Outcome::Returned;
        if (d >= 3.0 * delta) return Outcome::Left;
    }
    return Outcome::Neutral;
}

}  // namespace

Stability classify_stability(const Scenario& s, const Mechanism& m, const Population& pop, const Settings& cfg) {
    EquilibriumCheck chk = verify_equilibrium(s, m, pop, cfg.eq_tol);
    if (!chk.is_equilibrium)
        fail(ErrorKind::Mismatch, "classify_stability: flow is not an equilibrium (gain " +
                                      std::to_string(chk.max_gain) + ")");
    std::vector<double> eq = pop.aggregate();
    const int K = static_cast<int>(eq.size());
    bool all_returned = true, any_left = false;
    for (int j = 0; j < K; ++j) {
        if (eq[j] <= kFlowFloor) continue;
        for (int k = 0; k < K; ++k) {
            if (k == j) continue;
            bool returned = false, always_left = true;
            for (double scale = cfg.stability_eps; scale >= 1e-9 * (1 - 1e-9); scale *= 0.1) {
                double delta = std::min(scale, eq[j]);
                Population p = pop;
                for (std::size_t i = 0; i < p.classes.size(); ++i) {
                    double mv = p.alloc[i][j] / eq[j] * delta;
                    p.alloc[i][j] -= mv;
                    p.alloc[i][k] += mv;
                }
                Outcome o = run_perturbation(s, m, p, eq, delta);
                if (o == Outcome::Returned) {
                    returned = true;
                    break;
                }
                if (o == Outcome::Neutral) always_left = false;
            }
            if (!returned) {
                all_returned = false;
                if (always_left) any_left = true;
            }
        }
    }
    if (all_returned) return Stability::Stable;
    return any_left ? Stability::Unstable : Stability::Boundary;
}

Stability classify_stability(const Scenario& s, const Mechanism& m, const std::vector<double>& flow, double b,
                             const Settings& cfg) {
    return classify_stability(s, m, build_population(s, flow, b, cfg), cfg);
}

}  // namespace crl
