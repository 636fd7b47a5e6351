#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "crl/dynamics.hpp"
#include "crl/error.hpp"
#include "crl/game.hpp"
#include "crl/oracle.hpp"
#include "crl/poa.hpp"

using namespace crl;

namespace {

Scenario make(PathNetwork net, TypeDistribution t, ContentFunction f, CostModel cost = ConstantCost{}) {
    Scenario s{std::move(net), t, std::move(f), std::nullopt, cost, std::nullopt};
    s.validate();
    return s;
}

Scenario tight(double c) { return make(PathNetwork::canonical(c), Homogeneous{0.5}, PiecewiseLinearCap{1.0, 0.5}); }

}  // namespace

TEST_CASE("payoffs without incentives") {
    Scenario s = tight(0.3);
    std::vector<double> flow{0.6, 0.4};
    double Q = content_value(s, flow);
    CHECK(Q == doctest::Approx(1.0 + 0.8));
    CHECK(payoff(s, NoIncentive{}, 0.5, kL, flow) == doctest::Approx(0.5 * Q));
    CHECK(payoff(s, NoIncentive{}, 0.5, kH, flow) == doctest::Approx(0.5 * Q - 0.3));
    CHECK_THROWS_AS(payoff(s, NoIncentive{}, 0.5, 2, flow), Error);
}

TEST_CASE("tight instance: no-incentive welfare ratio") {
    for (double c : {0.5, 0.1, 1e-4}) {
        Scenario s = tight(c);
        EquilibriumReport eq = equilibrium_no_incentive(s);
        FlowValue opt = social_optimum(s);
        CHECK(eq.flow[kH] == 0.0);
        CHECK(eq.social_welfare == doctest::Approx(0.5));
        CHECK(opt.flow[kH] == doctest::Approx(0.5));
        CHECK(opt.value == doctest::Approx(1.0 - 0.5 * c).epsilon(1e-12));
        CHECK(eq.social_welfare / opt.value == doctest::Approx(0.5 / (1 - 0.5 * c)).epsilon(1e-12));
        CHECK(eq.stability == Stability::Stable);
    }
}

TEST_CASE("social optimum agrees with the grid oracle") {
    SamplerSpec spec;
    OracleConfig oc;
    for (long i = 0; i < 40; ++i) {
        Scenario s = sample_instance(spec, i, 77);
        FlowValue a = social_optimum(s);
        FlowValue b = grid_social_optimum(s, oc);
        CHECK(a.value >= b.value - 1e-9 * std::max(1.0, std::fabs(b.value)));
        CHECK(a.value == doctest::Approx(b.value).epsilon(1e-4));
    }
}

TEST_CASE("three-path optimum agrees with the simplex grid") {
    Scenario s = make(PathNetwork::multipath(3, 2.0), Homogeneous{0.5}, ExponentialCoverage{90, 60, 1, 3});
    FlowValue a = social_optimum(s);
    OracleConfig oc;
    oc.grid_step = 2e-3;
    FlowValue b = grid_social_optimum(s, oc);
    CHECK(a.value >= b.value - 1e-9);
    CHECK(a.value == doctest::Approx(b.value).epsilon(1e-5));
    double sum = 0;
    for (double x : a.flow) sum += x;
    CHECK(sum == doctest::Approx(1.0));
}

TEST_CASE("linear cost no-incentive flow") {
    Scenario s = make(PathNetwork::canonical(0.3), Homogeneous{0.5}, PiecewiseLinearCap{1.0, 0.5},
                      LinearCost{0.0, 1.0, 0.3, 1.0});
    CHECK(no_incentive_flow_h(s) == 0.35);
    EquilibriumReport r = equilibrium_no_incentive(s);
    CHECK(r.flow[kH] == 0.35);
    CHECK(verify_equilibrium(s, NoIncentive{}, r.flow, 1.0).is_equilibrium);
    Scenario cheap = make(PathNetwork::canonical(5.0), Homogeneous{0.5}, PiecewiseLinearCap{1.0, 0.5},
                          LinearCost{0.0, 1.0, 5.0, 1.0});
    CHECK(no_incentive_flow_h(cheap) == 0.0);
}

TEST_CASE("verify_equilibrium reports the best gain") {
    Scenario s = tight(0.2);
    EquilibriumCheck ok = verify_equilibrium(s, NoIncentive{}, {1.0, 0.0}, 1.0);
    CHECK(ok.is_equilibrium);
    EquilibriumCheck bad = verify_equilibrium(s, NoIncentive{}, {0.5, 0.5}, 1.0);
    CHECK_FALSE(bad.is_equilibrium);
    CHECK(bad.max_gain == doctest::Approx(0.2));
}

TEST_CASE("population: high types fill H first, participants come from the top") {
    Scenario s = make(PathNetwork::canonical(0.2), TwoType{0.2, 0.8, 0.5}, PiecewiseLinearCap{1.0, 0.5});
    Population p = build_population(s, {0.7, 0.3}, 1.0);
    REQUIRE(p.classes.size() == 2);
    CHECK(p.classes[0].theta == 0.2);
    CHECK(p.alloc[1][kH] == doctest::Approx(0.3));
    CHECK(p.alloc[0][kH] == 0.0);
    CHECK(p.alloc[0][kL] == doctest::Approx(0.5));
    Population q = build_population(s, {0.2, 0.3}, 0.5);
    CHECK(q.participating() == doctest::Approx(0.5));
    CHECK(q.alloc[0][kL] + q.alloc[0][kH] == doctest::Approx(0.0));
    auto agg = q.aggregate();
    CHECK(agg[kL] == doctest::Approx(0.2));
    CHECK(agg[kH] == doctest::Approx(0.3));
}

TEST_CASE("continuous types are discretized into equal-mass classes") {
    Settings cfg;
    cfg.continuum_classes = 40;
    Scenario s = make(PathNetwork::canonical(0.5), UniformContinuous{}, PiecewiseLinearCap{1.0, 0.5});
    Population p = build_population(s, {0.3, 0.5}, 0.8, cfg);
    CHECK(p.classes.size() >= 40);
    double mass = 0, mean = 0, in = 0;
    for (std::size_t i = 0; i < p.classes.size(); ++i) {
        mass += p.classes[i].mass;
        mean += p.classes[i].mass * p.classes[i].theta;
        double used = p.alloc[i][kL] + p.alloc[i][kH];
        if (used > 0) CHECK(p.classes[i].theta >= 0.2 - 1e-12);
        in += used;
    }
    CHECK(mass == doctest::Approx(1.0));
    CHECK(mean == doctest::Approx(0.5));
    CHECK(in == doctest::Approx(0.8));
    CHECK(p.participating() == doctest::Approx(0.8));
}

TEST_CASE("side payments are budget balanced") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> U(0.05, 0.95);
    Scenario s = make(PathNetwork::canonical(0.4), TwoType{0.3, 0.7, 0.5}, ExponentialCoverage{100, 100, 1, 2});
    PaymentSchedule g;
    g.target_x = 0.4;
    g.c_h = 0.4;
    SidePayment m{g, 1.0};
    for (int i = 0; i < 20; ++i) {
        double x = U(rng);
        std::vector<double> f{1 - x, x};
        double net = (1 - x) * transfer(m, kL, f) + x * transfer(m, kH, f);
        CHECK(std::fabs(net) < 1e-12);
        CHECK(social_welfare(s, m, f, 1.0) == doctest::Approx(social_welfare(s, NoIncentive{}, f, 1.0)).epsilon(1e-12));
    }
}

TEST_CASE("restriction lowers L-path welfare by the withheld share") {
    Scenario s = tight(0.2);
    std::vector<double> f{0.7, 0.3};
    double base = social_welfare(s, NoIncentive{}, f, 1.0);
    double cut = social_welfare(s, ContentRestriction{{0.6, 1.0}}, f, 1.0);
    CHECK(base - cut == doctest::Approx(0.7 * 0.5 * 0.4 * content_value(s, f)));
}

TEST_CASE("stability of the no-incentive corner and of an unstable split") {
    Scenario s = tight(0.2);
    CHECK(classify_stability(s, NoIncentive{}, {1.0, 0.0}, 1.0) == Stability::Stable);
    CHECK_THROWS_AS(classify_stability(s, NoIncentive{}, {0.5, 0.5}, 1.0), Error);
    // Without cost and with a knee at 1, every split is an equilibrium: perturbations stay put.
    Scenario flat = make(PathNetwork::canonical(0.0), Homogeneous{0.5}, PiecewiseLinearCap{1.0, 1.0});
    CHECK(classify_stability(flat, NoIncentive{}, {0.5, 0.5}, 1.0) == Stability::Boundary);
}

TEST_CASE("restriction at a-bar: the left intersection is unstable, the right one stable") {
    Scenario s = make(PathNetwork::canonical(5.0), Homogeneous{0.5}, ExponentialCoverage{100, 100, 1, 2});
    double qb = content_value(s, {0.5, 0.5});
    double a = 1 - 5.0 / (0.5 * qb) - 0.05;
    ContentRestriction m{{a, 1.0}};
    auto gap = [&](double x) {
        std::vector<double> f{1 - x, x};
        return payoff(s, m, 0.5, kH, f) - payoff(s, m, 0.5, kL, f);
    };
    double lo = 0.01, hi = 0.5;
    for (int i = 0; i < 200; ++i) {
        double mid = 0.5 * (lo + hi);
        (gap(mid) < 0 ? lo : hi) = mid;
    }
    double left = hi;
    lo = 0.5, hi = 0.99;
    for (int i = 0; i < 200; ++i) {
        double mid = 0.5 * (lo + hi);
        (gap(mid) > 0 ? lo : hi) = mid;
    }
    double right = lo;
    CHECK(classify_stability(s, m, {1 - right, right}, 1.0) == Stability::Stable);
    CHECK(classify_stability(s, m, {1 - left, left}, 1.0) == Stability::Unstable);
}

TEST_CASE("invalid scenarios") {
    auto bad = [](auto f) {
        try {
            f();
        } catch (const Error& e) {
            return e.kind() == ErrorKind::Config;
        }
        return false;
    };
    CHECK(bad([] { make(PathNetwork::canonical(-1), Homogeneous{0.5}, PiecewiseLinearCap{1, 0.5}); }));
    CHECK(bad([] { make(PathNetwork::canonical(1), TwoType{0.8, 0.2, 0.5}, PiecewiseLinearCap{1, 0.5}); }));
    CHECK(bad([] { make(PathNetwork::canonical(1), TwoType{0.2, 0.8, 1.5}, PiecewiseLinearCap{1, 0.5}); }));
    CHECK(bad([] { make(PathNetwork::canonical(1), Homogeneous{0.5}, ExponentialCoverage{100, 100, 1, 3}); }));
    CHECK(bad([] {
        make(PathNetwork::multipath(3, 1), Homogeneous{0.5}, ExponentialCoverage{100, 100, 1, 3},
             LinearCost{0, 1, 1, 1});
    }));
}
