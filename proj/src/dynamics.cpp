#include "crl/dynamics.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <deque>

#include "crl/error.hpp"

namespace crl {

namespace {

using Field = std::vector<std::vector<double>>;

double dot(const Field& a, const Field& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t k = 0; k < a[i].size(); ++k) s += a[i][k] * b[i][k];
    return s;
}

Population advance(const Population& pop, const Field& v, double h, long* clamps) {
    Population out = pop;
    for (std::size_t i = 0; i < out.alloc.size(); ++i) {
        auto& row = out.alloc[i];
        double before = 0.0, after = 0.0;
        bool clamped = false;
        for (std::size_t k = 0; k < row.size(); ++k) {
            before += row[k];
            row[k] += h * v[i][k];
            if (row[k] < 0.0) {
                row[k] = 0.0;
                clamped = true;
            }
            after += row[k];
        }
        if (clamped) {
            if (clamps) ++*clamps;
            if (after > 0.0)
                for (double& x : row) x *= before / after;
        }
    }
    return out;
}

std::vector<double> class_payoffs(const Scenario& s, const Mechanism& m, double theta, const std::vector<double>& agg) {
    std::vector<double> u(agg.size());
    for (std::size_t k = 0; k < agg.size(); ++k) u[k] = payoff(s, m, theta, static_cast<int>(k), agg);
    return u;
}

}  // namespace

std::string to_string(Verdict v) {
    switch (v) {
        case Verdict::Converged: return "Converged";
        case Verdict::Cycling: return "Cycling";
        case Verdict::HorizonExceeded: return "HorizonExceeded";
    }
    return "?";
}

Field flow_velocity(const Scenario& s, const Mechanism& m, const Population& pop, const DynamicsConfig& cfg) {
    std::vector<double> agg = pop.aggregate();
    const std::size_t K = agg.size();
    Field v(pop.alloc.size(), std::vector<double>(K, 0.0));
    std::vector<double> u;
    double last_theta = std::numeric_limits<double>::quiet_NaN();
    for (std::size_t i = 0; i < pop.alloc.size(); ++i) {
        const auto& x = pop.alloc[i];
        double mass = 0.0;
        for (double a : x) mass += a;
        if (mass <= 0.0) continue;
        if (pop.classes[i].theta != last_theta) {
            u = class_payoffs(s, m, pop.classes[i].theta, agg);
            last_theta = pop.classes[i].theta;
        }
        if (cfg.mode == DynamicsMode::PairwiseSmith) {
            for (std::size_t j = 0; j < K; ++j) {
                if (x[j] <= 0.0) continue;
                for (std::size_t k = 0; k < K; ++k) {
                    if (k == j || u[k] <= u[j]) continue;
                    double r = cfg.switch_rate_mu * x[j] * (u[k] - u[j]);
                    v[i][j] -= r;
                    v[i][k] += r;
                }
            }
        } else {
            double umax = *std::max_element(u.begin(), u.end());
            double umin = std::numeric_limits<double>::infinity();
            for (std::size_t k = 0; k < K; ++k)
                if (x[k] > 0.0) umin = std::min(umin, u[k]);
            double gap = umax - umin;
            double tie = 1e-12 * (1.0 + std::fabs(umax));
            if (!(gap > tie)) continue;
            std::vector<std::size_t> src, dst;
            for (std::size_t k = 0; k < K; ++k) {
                if (u[k] >= umax - tie) dst.push_back(k);
                if (x[k] > 0.0 && u[k] <= umin + tie) src.push_back(k);
            }
            double rate = cfg.switch_rate_mu * gap * mass;
            for (auto k : src) v[i][k] -= rate / static_cast<double>(src.size());
            for (auto k : dst) v[i][k] += rate / static_cast<double>(dst.size());
        }
    }
    return v;
}

Population smith_step(const Scenario& s, const Mechanism& m, const Population& pop, const DynamicsConfig& cfg,
                      long* clamp_events) {
    Field v0 = flow_velocity(s, m, pop, cfg);
    const double dt = cfg.step_dt;
    Population full = advance(pop, v0, dt, nullptr);
    Field v1 = flow_velocity(s, m, full, cfg);
    if (dot(v0, v1) >= 0.0) return advance(pop, v0, dt, clamp_events);
    double lo = 0.0, hi = 1.0;
    for (int it = 0; it < 60; ++it) {
        double mid = 0.5 * (lo + hi);
        Field vm = flow_velocity(s, m, advance(pop, v0, mid * dt, nullptr), cfg);
        if (dot(v0, vm) >= 0.0)
            lo = mid;
        else
            hi = mid;
    }
    return advance(pop, v0, lo * dt, clamp_events);
}

Trajectory simulate_to_convergence(const Scenario& s, const Mechanism& m, const Population& x0,
                                   const DynamicsConfig& cfg) {
    Trajectory tr;
    Population pop = x0;
    auto record = [&](double t) {
        Sample smp;
        smp.t = t;
        smp.flow = pop.aggregate();
        for (const auto& c : pop.classes) smp.payoffs.push_back(class_payoffs(s, m, c.theta, smp.flow));
        tr.samples.push_back(std::move(smp));
    };
    struct Mark {
        std::vector<double> flow;
        double travelled;
    };
    std::deque<Mark> window;
    double travelled = 0.0;
    record(0.0);
    std::vector<double> prev = pop.aggregate();
    for (long step = 1; step <= cfg.horizon; ++step) {
        pop = smith_step(s, m, pop, cfg, &tr.clamp_events);
        std::vector<double> cur = pop.aggregate();
        double change = 0.0;
        for (std::size_t k = 0; k < cur.size(); ++k) change = std::max(change, std::fabs(cur[k] - prev[k]));
        travelled += change;
        prev = cur;
        tr.steps = step;
        double t = static_cast<double>(step) * cfg.step_dt;
        if (change < cfg.convergence_eps) {
            record(t);
            tr.verdict = Verdict::Converged;
            tr.final_state = pop;
            return tr;
        }
        if (step % cfg.sample_every == 0) {
            record(t);
            if (tr.samples.size() % 10 == 0) {
                for (const auto& mk : window) {
                    if (travelled - mk.travelled < 100.0 * cfg.cycle_tol) continue;
                    double d = 0.0;
                    for (std::size_t k = 0; k < cur.size(); ++k) d = std::max(d, std::fabs(cur[k] - mk.flow[k]));
                    if (d < cfg.cycle_tol) {
                        tr.verdict = Verdict::Cycling;
                        tr.final_state = pop;
                        return tr;
                    }
                }
            }
            window.push_back({cur, travelled});
            if (static_cast<long>(window.size()) > cfg.cycle_window) window.pop_front();
        }
    }
    record(static_cast<double>(tr.steps) * cfg.step_dt);
    tr.verdict = Verdict::HorizonExceeded;
    tr.final_state = pop;
    return tr;
}

bool in_lyapunov_region(const std::vector<double>& flow) {
    return flow.size() == 3 && 2.0 * flow[2] + flow[1] > 1.0;
}

double lyapunov_value(const Scenario& s, double a1, double a2, const std::vector<double>& flow) {
    if (s.K() != 3) fail(ErrorKind::Unsupported, "lyapunov_value requires three paths");
    if (flow.size() != 3 || 2.0 * flow[2] + flow[1] < 1.0 - 1e-9)
        fail(ErrorKind::Domain, "lyapunov_value: flow outside region 2x3 + x2 >= 1");
    if (!(a1 < 1.0)) fail(ErrorKind::Domain, "lyapunov_value: P1 must be restricted (a1 < 1)");
    double c2 = s.network.costs[1], c3 = s.network.costs[2];
    double level = c3 / (1.0 - a1);
    if (a2 < 1.0) {
        double level2 = (c3 - c2) / (1.0 - a2);
        if (std::fabs(level2 - level) > 1e-6 * std::max(1.0, level))
            fail(ErrorKind::Mismatch, "lyapunov_value: (a1, a2) do not share an indifference level");
    }
    double d = mean_theta(s.types) * content_value(s, flow) - level;
    return d * d;
}

std::vector<double> effective_costs(const Scenario& s, const Mechanism& m, const std::vector<double>& x) {
    std::vector<double> c(x.size());
    for (std::size_t k = 0; k < x.size(); ++k)
        c[k] = path_cost(s, static_cast<int>(k), x) - transfer(m, static_cast<int>(k), x);
    return c;
}

PdCheck jacobian_pd_check(const Scenario& s, const Mechanism& m, const std::vector<double>& flow) {
    if (flow.size() != 3 || s.K() != 3) fail(ErrorKind::Unsupported, "jacobian_pd_check requires three paths");
    const double h = 1e-6;
    Eigen::Matrix3d J;
    for (int l = 0; l < 3; ++l) {
        std::vector<double> up(flow), dn(flow);
        up[l] += h;
        dn[l] -= h;
        auto cu = effective_costs(s, m, up), cd = effective_costs(s, m, dn);
        for (int k = 0; k < 3; ++k) J(k, l) = (cu[k] - cd[k]) / (2 * h);
    }
    Eigen::Matrix3d S = 0.5 * (J + J.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> full(S);
    Eigen::Matrix<double, 3, 2> B;
    B << 1.0 / std::sqrt(2.0), 1.0 / std::sqrt(6.0), -1.0 / std::sqrt(2.0), 1.0 / std::sqrt(6.0), 0.0,
        -2.0 / std::sqrt(6.0);
    Eigen::Matrix2d T = B.transpose() * S * B;
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> tang(T);
    double emin = tang.eigenvalues().minCoeff();
    return {emin > 1e-9, emin, full.eigenvalues().minCoeff()};
}

}  // namespace crl
