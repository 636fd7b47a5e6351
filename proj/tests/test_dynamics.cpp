#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include "crl/dynamics.hpp"
#include "crl/error.hpp"
#include "crl/mechanisms.hpp"

using namespace crl;

namespace {

Scenario make(PathNetwork net, TypeDistribution t, ContentFunction f) {
    return Scenario{std::move(net), t, std::move(f), std::nullopt, ConstantCost{}, std::nullopt};
}

DynamicsConfig quick() {
    DynamicsConfig c;
    c.step_dt = 1e-2;
    c.horizon = 400000;
    c.convergence_eps = 1e-10;
    c.sample_every = 1000;
    return c;
}

Population start(const Scenario& s, double x) { return build_population(s, {1 - x, x}, 1.0); }

}  // namespace

TEST_CASE("velocity vanishes at an equilibrium and conserves mass") {
    Scenario s = make(PathNetwork::canonical(0.3), Homogeneous{0.5}, PiecewiseLinearCap{1.0, 0.5});
    DynamicsConfig cfg;
    auto v0 = flow_velocity(s, NoIncentive{}, start(s, 0.0), cfg);
    for (const auto& row : v0)
        for (double v : row) CHECK(v == 0.0);
    auto v = flow_velocity(s, NoIncentive{}, start(s, 0.4), cfg);
    for (const auto& row : v) {
        CHECK(std::fabs(row[0] + row[1]) < 1e-15);
        CHECK(row[1] < 0);
    }
}

TEST_CASE("no-incentive dynamics leave H") {
    Scenario s = make(PathNetwork::canonical(0.3), Homogeneous{0.5}, PiecewiseLinearCap{1.0, 0.5});
    Trajectory tr = simulate_to_convergence(s, NoIncentive{}, start(s, 0.7), quick());
    CHECK(tr.verdict == Verdict::Converged);
    CHECK(tr.final_state.aggregate()[kH] < 1e-6);
    CHECK(!tr.samples.empty());
    CHECK(tr.samples.front().t == 0.0);
}

TEST_CASE("side payment dynamics reach the target from both sides") {
    Scenario s = make(PathNetwork::canonical(0.3), Homogeneous{0.5}, PiecewiseLinearCap{1.0, 0.5});
    DesignOutcome d = design_side_payment(s);
    for (double x0 : {0.05, 0.95}) {
        Trajectory tr = simulate_to_convergence(s, d.mechanism, start(s, x0), quick());
        CHECK(tr.verdict == Verdict::Converged);
        CHECK(tr.final_state.aggregate()[kH] == doctest::Approx(0.5).epsilon(1e-6));
    }
}

TEST_CASE("two-type restriction converges to the diverse target") {
    Scenario s = make(PathNetwork::canonical(0.5), TwoType{0.1, 0.9, 0.5}, PiecewiseLinearCap{1.0, 0.5});
    DesignOutcome d = design_content_restriction(s);
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> U(0.3, 0.95);
    for (int i = 0; i < 8; ++i) {
        Trajectory tr = simulate_to_convergence(s, d.mechanism, start(s, U(rng)), quick());
        CHECK(tr.verdict == Verdict::Converged);
        CHECK(tr.final_state.aggregate()[kH] == doctest::Approx(0.5).epsilon(1e-5));
        CHECK(social_welfare(s, d.mechanism, tr.final_state.aggregate(), 1.0) ==
              doctest::Approx(25.0 / 36.0).epsilon(1e-4));
    }
}

TEST_CASE("halving the step leaves the verdict and the limit unchanged") {
    Scenario s = make(PathNetwork::canonical(2.0), Homogeneous{0.5}, ExponentialCoverage{100, 100, 1, 2});
    DesignOutcome d = design_content_restriction(s);
    DynamicsConfig a = quick(), b = quick();
    b.step_dt *= 0.5;
    b.horizon *= 2;
    Trajectory ta = simulate_to_convergence(s, d.mechanism, start(s, 0.8), a);
    Trajectory tb = simulate_to_convergence(s, d.mechanism, start(s, 0.8), b);
    CHECK(ta.verdict == tb.verdict);
    CHECK(ta.final_state.aggregate()[kH] == doctest::Approx(tb.final_state.aggregate()[kH]).epsilon(1e-5));
}

TEST_CASE("a short horizon is reported, not hidden") {
    Scenario s = make(PathNetwork::canonical(0.3), Homogeneous{0.5}, PiecewiseLinearCap{1.0, 0.5});
    DynamicsConfig c = quick();
    c.horizon = 5;
    Trajectory tr = simulate_to_convergence(s, NoIncentive{}, start(s, 0.9), c);
    CHECK(tr.verdict == Verdict::HorizonExceeded);
    CHECK(tr.steps == 5);
    CHECK(to_string(Verdict::Converged) == "Converged");
}

TEST_CASE("three-path payments: equal effective costs and a positive definite Jacobian") {
    Scenario s = make(PathNetwork::multipath(3, 2.0), Homogeneous{0.5}, ExponentialCoverage{100, 200, 1, 3});
    std::mt19937_64 rng(19);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    for (int i = 0; i < 25; ++i) {
        double e1 = -std::log(U(rng)), e2 = -std::log(U(rng)), e3 = -std::log(U(rng)), t = e1 + e2 + e3;
        std::vector<double> target{e1 / t, e2 / t, e3 / t};
        MultiPathSidePayment m = multipath_payments(target, 1.0, 2.0);
        std::vector<double> eff = effective_costs(s, m, target);
        CHECK(eff[0] == doctest::Approx(eff[1]).epsilon(1e-12));
        CHECK(eff[1] == doctest::Approx(eff[2]).epsilon(1e-12));
        PdCheck pd = jacobian_pd_check(s, m, target);
        CHECK(pd.is_pd);
        CHECK(pd.eigen_min > 0);
    }
}

TEST_CASE("three-path restriction: Lyapunov value decreases under min-to-max switching") {
    Scenario s = make(PathNetwork::multipath(3, 0.5), Homogeneous{0.5}, ExponentialCoverage{100, 200, 1, 3});
    DesignOutcome d = design_multipath_content_restriction(s);
    const auto& a = std::get<ContentRestriction>(d.mechanism).a;
    DynamicsConfig c = quick();
    c.mode = DynamicsMode::MinToMax;
    c.sample_every = 50;
    for (std::vector<double> x0 : {std::vector<double>{1.0 / 6, 1.0 / 3, 0.5}, std::vector<double>{0.25, 0.3, 0.45},
                                   std::vector<double>{0.3, 0.32, 0.38}}) {
        Trajectory tr = simulate_to_convergence(s, d.mechanism, build_population(s, x0, 1.0), c);
        double prev = std::numeric_limits<double>::infinity();
        for (const auto& smp : tr.samples) {
            if (!in_lyapunov_region(smp.flow)) break;
            double v = lyapunov_value(s, a[0], a[1], smp.flow);
            CHECK(v <= prev * (1 + 1e-12) + 1e-300);
            prev = v;
        }
        if (x0[1] == 1.0 / 3) CHECK(lyapunov_value(s, a[0], a[1], tr.final_state.aggregate()) < 1e-10);
    }
    CHECK_THROWS_AS(lyapunov_value(s, a[0], a[1], {0.6, 0.3, 0.1}), Error);
    CHECK(lyapunov_value(s, a[0], a[1], d.target_flow) < 1e-20);
}
