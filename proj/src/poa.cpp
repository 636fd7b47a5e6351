#include "crl/poa.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>
#include <thread>

#include "crl/error.hpp"
#include "crl/numerics.hpp"

namespace crl {

namespace {

struct Segment {
    double lo, hi, theta;
};

std::vector<Segment> h_segments(const Scenario& s, double b) {
    if (auto* tt = std::get_if<TwoType>(&s.types)) {
        double m2 = std::min(1.0 - tt->eta, b);
        std::vector<Segment> out{{0.0, m2, tt->theta2}};
        if (b > m2) out.push_back({m2, b, tt->theta1});
        return out;
    }
    if (std::holds_alternative<UniformContinuous>(s.types))
        fail(ErrorKind::Unsupported, "equilibrium enumeration supports homogeneous and two-type populations");
    return {{0.0, b, mean_theta(s.types)}};
}

}  // namespace

double poa_ratio(const Scenario& s, Designer d, const Settings& cfg) {
    FlowValue opt = social_optimum(s, cfg);
    if (!(opt.value > 0)) return 1.0;
    return design(s, d, cfg).sw_at_design / opt.value;
}

std::vector<EquilibriumPoint> enumerate_equilibria(const Scenario& s, const Mechanism& m, const Settings& cfg,
                                                   double scan_step) {
    if (s.K() != 2) fail(ErrorKind::Unsupported, "equilibrium enumeration is implemented for two paths");
    const double b = participation(m);
    std::vector<double> cand;
    for (const auto& seg : h_segments(s, b)) {
        auto gap = [&](double x) {
            std::vector<double> f{b - x, x};
            return payoff(s, m, seg.theta, kH, f) - payoff(s, m, seg.theta, kL, f);
        };
        cand.push_back(seg.lo);
        cand.push_back(seg.hi);
        long n = std::max(4L, static_cast<long>(std::ceil((seg.hi - seg.lo) / scan_step)));
        double h = (seg.hi - seg.lo) / static_cast<double>(n);
        double xp = seg.lo, gp = gap(xp);
        bool in_zero_run = gp == 0.0;
        for (long i = 1; i <= n; ++i) {
            double x = (i == n) ? seg.hi : seg.lo + h * static_cast<double>(i);
            double g = gap(x);
            if (g == 0.0) {
                if (!in_zero_run) cand.push_back(x);
                in_zero_run = true;
            } else {
                if (in_zero_run) cand.push_back(xp);
                in_zero_run = false;
                if (gp != 0.0 && (gp > 0) != (g > 0)) cand.push_back(num::bisect(gap, xp, x, 1e-15));
            }
            xp = x;
            gp = g;
        }
    }
    std::sort(cand.begin(), cand.end());
    cand.erase(std::unique(cand.begin(), cand.end(), [](double a, double c) { return std::fabs(a - c) < 1e-13; }),
               cand.end());
    std::vector<EquilibriumPoint> out;
    for (double x : cand) {
        x = std::clamp(x, 0.0, b);
        std::vector<double> f{b - x, x};
        Population pop = build_population(s, f, b, cfg);
        if (!verify_equilibrium(s, m, pop, cfg.eq_tol).is_equilibrium) continue;
        out.push_back({f, social_welfare(s, m, pop), classify_stability(s, m, pop, cfg)});
    }
    return out;
}

EquilibriumPoint worst_stable_equilibrium(const Scenario& s, const Mechanism& m, const Settings& cfg) {
    auto eqs = enumerate_equilibria(s, m, cfg);
    if (eqs.empty()) fail(ErrorKind::Numeric, "no equilibrium found under the mechanism");
    const EquilibriumPoint* worst = nullptr;
    for (int pass = 0; pass < 2 && !worst; ++pass)
        for (const auto& e : eqs) {
            bool ok = pass == 0 ? e.stability == Stability::Stable : e.stability != Stability::Unstable;
            if (ok && (!worst || e.sw < worst->sw)) worst = &e;
        }
    if (!worst) fail(ErrorKind::Numeric, "every equilibrium under the mechanism is unstable");
    return *worst;
}

double poa_ratio_worst(const Scenario& s, Designer d, const Settings& cfg) {
    FlowValue opt = social_optimum(s, cfg);
    if (!(opt.value > 0)) return 1.0;
    return worst_stable_equilibrium(s, design(s, d, cfg).mechanism, cfg).sw / opt.value;
}

WorstCaseKind worst_case_kind_from_string(const std::string& name) {
    if (name == "prop2" || name == "none") return WorstCaseKind::NoIncentive;
    if (name == "thm1") return WorstCaseKind::SideTwoType;
    if (name == "thm2") return WorstCaseKind::RestrictionHomogeneous;
    if (name == "thm3") return WorstCaseKind::RestrictionTwoType;
    if (name == "multipath") return WorstCaseKind::MultiPath;
    fail(ErrorKind::Config, "unknown worst-case family '" + name + "' (prop2, thm1, thm2, thm3, multipath)");
}

namespace {

double family_cost(const WorstCaseSpec& w) { return w.c_h >= 0 ? w.c_h : 2.0 * w.theta0 * w.q; }

Scenario make(PathNetwork n, TypeDistribution t, ContentFunction f) {
    return {std::move(n), t, std::move(f), std::nullopt, ConstantCost{}, std::nullopt};
}

}  // namespace

Scenario worst_case_instance(const WorstCaseSpec& w) {
    const double c = family_cost(w);
    const double t1 = w.theta1, t2 = 2.0 * w.theta0 - w.theta1;
    switch (w.kind) {
        case WorstCaseKind::NoIncentive:
        case WorstCaseKind::RestrictionHomogeneous:
            return make(PathNetwork::canonical(c), Homogeneous{w.theta0}, ContentFunction(PiecewiseLinearCap{w.q, 0.5}));
        case WorstCaseKind::SideTwoType:
            return make(PathNetwork::canonical(c), TwoType{t1, t2, 0.5}, ContentFunction(PiecewiseLinearCap{w.q, 0.5}));
        case WorstCaseKind::RestrictionTwoType:
            return make(PathNetwork::canonical(c), TwoType{t1, t2, 0.5}, ContentFunction(PiecewiseLinearCap{w.q, w.delta}));
        case WorstCaseKind::MultiPath:
            return make(PathNetwork::multipath(w.K, c), Homogeneous{w.theta0},
                    ContentFunction(PiecewiseLinearCap{w.q, w.delta}));
    }
    fail(ErrorKind::Config, "unknown worst-case family");
}

double worst_case_ratio(const WorstCaseSpec& w) {
    const double c = family_cost(w), th = w.theta0, q = w.q;
    switch (w.kind) {
        case WorstCaseKind::NoIncentive:
        case WorstCaseKind::RestrictionHomogeneous: return th * q / (2.0 * th * q - 0.5 * c);
        case WorstCaseKind::SideTwoType: {
            double t1 = w.theta1, t2 = 2.0 * th - t1;
            double xir = c > 2.0 * t1 * q ? std::min(0.5, t1 * q / (c - 2.0 * t1 * q)) : 0.5;
            double full = th * (q + 2.0 * q * xir) - xir * c;
            return std::max(full, 0.5 * t2 * q) / (2.0 * th * q - 0.5 * c);
        }
        case WorstCaseKind::RestrictionTwoType: return th * q / (2.0 * th * q - w.delta * c);
        case WorstCaseKind::MultiPath: {
            PathNetwork n = PathNetwork::multipath(w.K, c);
            double sum = 0.0;
            for (int k = 1; k < w.K; ++k) sum += n.costs[k];
            return th * q / (w.K * th * q - w.delta * sum);
        }
    }
    return 0.0;
}

Scenario sample_instance(const SamplerSpec& spec, long index, std::uint64_t seed) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(static_cast<std::uint64_t>(index) >> 32)};
    std::mt19937_64 rng(seq);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    auto uni = [&](double lo, double hi) { return lo + (hi - lo) * U(rng); };
    const double th0 = spec.theta0;

    std::string fam = spec.family;
    if (fam == "mixed") fam = (index % 2 == 0) ? "piecewise" : "exponential";
    std::optional<ContentFunction> content;
    TypeDistribution types = Homogeneous{th0};
    bool two = spec.types == "two_type";
    if (fam == "piecewise") {
        content = ContentFunction(PiecewiseLinearCap{1.0, uni(spec.knee_lo, spec.knee_hi)});
    } else if (fam == "exponential") {
        double N = std::round(uni(spec.items_lo, spec.items_hi));
        double n = std::round(uni(spec.items_lo, spec.items_hi));
        double phi = U(rng) < 0.5 ? 1.0 : 2.0;
        content = ContentFunction(ExponentialCoverage{N, n, phi, 2});
    } else if (fam == "prop2") {
        content = ContentFunction(PiecewiseLinearCap{1.0, 0.5});
        two = false;
    } else if (fam == "thm1") {
        content = ContentFunction(PiecewiseLinearCap{1.0, 0.5});
        two = true;
    } else {
        fail(ErrorKind::Config, "unknown sampler family '" + spec.family + "'");
    }
    double t1 = uni(0.0, th0);
    if (spec.family == "thm1") t1 = uni(0.0, 0.01 * th0);
    if (two) types = TwoType{t1, 2.0 * th0 - t1, 0.5};
    double qbar = q_total(*content, 0.5, 1.0);
    double c = th0 * qbar * std::pow(10.0, uni(spec.log10_cost_lo, spec.log10_cost_hi));
    return make(PathNetwork::canonical(c), types, *content);
}

double asserted_bound(Designer d) { return d == Designer::Combined ? 0.7 : 0.5; }

namespace {

std::string describe(const ContentFunction& f) {
    std::ostringstream os;
    os.precision(17);
    if (auto* e = std::get_if<ExponentialCoverage>(&f.form()))
        os << "exponential(N=" << e->total_items << ",n=" << e->users << ",phi=" << e->items_per_user << ")";
    else if (auto* p = std::get_if<PiecewiseLinearCap>(&f.form()))
        os << "piecewise(q=" << p->cap << ",knee=" << p->knee << ")";
    else
        os << "tabulated";
    return os.str();
}

struct Sample {
    bool ok = false;
    double ratio = 1.0;
    std::string regime;
    bool dominance_checked = false;
    double dominance_gap = 0.0;
};

}  // namespace

PoAProbeReport poa_search(const SamplerSpec& spec, Designer d, long n_samples, std::uint64_t seed,
                          const Settings& cfg, int threads) {
    if (n_samples < 1) fail(ErrorKind::Config, "poa_search: need at least one sample");
    if (threads <= 0) threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    threads = static_cast<int>(std::min<long>(threads, n_samples));
    std::vector<Sample> res(n_samples);
    auto work = [&](int w) {
        for (long i = w; i < n_samples; i += threads) {
            Sample& r = res[i];
            try {
                Scenario s = sample_instance(spec, i, seed);
                FlowValue opt = social_optimum(s, cfg);
                DesignOutcome o = design(s, d, cfg);
                r.ratio = opt.value > 0 ? o.sw_at_design / opt.value : 1.0;
                r.regime = o.regime_label;
                if (d == Designer::Combined) {
                    double g = design(s, Designer::Side, cfg).sw_at_design;
                    double a = design(s, Designer::Restriction, cfg).sw_at_design;
                    r.dominance_checked = true;
                    r.dominance_gap = std::max(g, a) - o.sw_at_design;
                }
                r.ok = true;
            } catch (const std::exception&) {
                r.ok = false;
            }
        }
    };
    std::vector<std::thread> pool;
    for (int w = 0; w < threads; ++w) pool.emplace_back(work, w);
    for (auto& t : pool) t.join();

    PoAProbeReport rep;
    rep.family = spec.family;
    rep.designer = to_string(d);
    rep.seed = seed;
    rep.samples = n_samples;
    rep.bound = asserted_bound(d);
    rep.worst_dominance_gap = -std::numeric_limits<double>::infinity();
    for (long i = 0; i < n_samples; ++i) {
        const Sample& r = res[i];
        if (!r.ok) {
            ++rep.errors;
            continue;
        }
        if (r.ratio < rep.bound - 1e-9) ++rep.violations;
        rep.max_ratio = std::max(rep.max_ratio, r.ratio);
        if (rep.argmin.index < 0 || r.ratio < rep.min_ratio) {
            rep.min_ratio = r.ratio;
            rep.argmin.index = i;
            rep.argmin.ratio = r.ratio;
            rep.argmin.regime = r.regime;
        }
        if (r.dominance_checked) {
            ++rep.dominance_checked;
            rep.worst_dominance_gap = std::max(rep.worst_dominance_gap, r.dominance_gap);
            if (r.dominance_gap > 1e-8) ++rep.dominance_violations;
        }
    }
    if (rep.dominance_checked == 0) rep.worst_dominance_gap = 0.0;
    if (rep.argmin.index >= 0) {
        Scenario s = sample_instance(spec, rep.argmin.index, seed);
        rep.argmin.content = describe(s.content);
        rep.argmin.c_h = s.network.c_h();
        if (auto* tt = std::get_if<TwoType>(&s.types)) {
            rep.argmin.theta1 = tt->theta1;
            rep.argmin.theta2 = tt->theta2;
        } else {
            rep.argmin.theta1 = rep.argmin.theta2 = mean_theta(s.types);
        }
    }
    return rep;
}

}  // namespace crl
