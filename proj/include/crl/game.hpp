#pragma once

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "crl/content.hpp"

namespace crl {

// Path index convention for two-path models: 0 = L (free), 1 = H (costly).
constexpr int kL = 0;
constexpr int kH = 1;

struct Settings {
    double eps_mech = 1e-6;
    double eq_tol = 1e-9;
    double stability_eps = 1e-4;
    double grid_step = 1e-3;
    double g_max_factor = 1e6;
    int continuum_classes = 64;
};

struct Homogeneous {
    double theta0;
};
struct TwoType {
    double theta1;
    double theta2;
    double eta = 0.5;
};
struct UniformContinuous {};
using TypeDistribution = std::variant<Homogeneous, TwoType, UniformContinuous>;

double mean_theta(const TypeDistribution& t);

struct ConstantCost {};
struct LinearCost {
    double c_l;
    double b_l;
    double c_h;
    double b_h;
};
using CostModel = std::variant<ConstantCost, LinearCost>;

struct PathNetwork {
    int K = 2;
    std::vector<double> costs{0.0, 0.0};

    static PathNetwork canonical(double c_h);
    static PathNetwork multipath(int K, double c_h);
    double c_h() const { return costs.back(); }
};

struct Scenario {
    PathNetwork network;
    TypeDistribution types;
    ContentFunction content;
    std::optional<OverlapSegment> overlap;
    CostModel cost = ConstantCost{};
    std::optional<double> beta;

    int K() const { return network.K; }
    void validate() const;
};

struct Proportional {};
struct Bang {
    double level_high;
    double level_low;
    double band = 1e-12;
};
// Linear schedule anchored at the target: through (0,0) when rising, through (1,0) otherwise.
struct Affine {
    bool rising;
};

struct PaymentSchedule {
    double target_x = 0.0;
    double b = 1.0;
    double c_h = 0.0;
    double target_level = 0.0;
    std::variant<Proportional, Bang, Affine> form = Proportional{};

    double operator()(double x_h) const;
};

struct NoIncentive {};
struct SidePayment {
    PaymentSchedule schedule;
    double participation_b = 1.0;
};
struct ContentRestriction {
    std::vector<double> a;
};
struct Combined {
    double a;
    PaymentSchedule schedule;
};
// Three-path transfers: path 1 and 2 users pay g1, g2; path 3 users share the proceeds.
struct MultiPathSidePayment {
    std::vector<double> target;
    double c2;
    double c3;

    double g1(const std::vector<double>& x) const;
    double g2(const std::vector<double>& x) const;
    double refund3(const std::vector<double>& x) const;
};
using Mechanism = std::variant<NoIncentive, SidePayment, ContentRestriction, Combined, MultiPathSidePayment>;

double participation(const Mechanism& m);
std::string mechanism_name(const Mechanism& m);

struct TypeClass {
    double theta;
    double mass;
};

// Flow broken down by type class: alloc[i][k] is the mass of class i on path k.
struct Population {
    std::vector<TypeClass> classes;
    std::vector<std::vector<double>> alloc;

    std::vector<double> aggregate() const;
    double participating() const;
};

// Assigns types to an aggregate flow: higher valuations fill the H-path first, and the
// participating mass b is taken from the top of the type distribution.
Population build_population(const Scenario& s, const std::vector<double>& flow, double b,
                            const Settings& cfg = {});

double content_value(const Scenario& s, const std::vector<double>& flow);
double path_cost(const Scenario& s, int path, const std::vector<double>& flow);
double restriction_factor(const Mechanism& m, int path, int K);
double transfer(const Mechanism& m, int path, const std::vector<double>& flow);

double payoff(const Scenario& s, const Mechanism& m, double theta, int path, const std::vector<double>& flow);
double social_welfare(const Scenario& s, const Mechanism& m, const Population& pop);
double social_welfare(const Scenario& s, const Mechanism& m, const std::vector<double>& flow, double b,
                      const Settings& cfg = {});

struct FlowValue {
    std::vector<double> flow;
    double value;
};

FlowValue social_optimum(const Scenario& s, const Settings& cfg = {});

enum class Stability { Stable, Unstable, Boundary };
std::string to_string(Stability s);

struct EquilibriumReport {
    std::vector<double> flow;
    Stability stability = Stability::Stable;
    std::vector<std::pair<double, std::vector<double>>> per_type_payoffs;
    double participation_b = 1.0;
    double social_welfare = 0.0;
};

double no_incentive_flow_h(const Scenario& s);
EquilibriumReport equilibrium_no_incentive(const Scenario& s, const Settings& cfg = {});
EquilibriumReport make_report(const Scenario& s, const Mechanism& m, const Population& pop, Stability st);

struct EquilibriumCheck {
    bool is_equilibrium;
    double max_gain;
};

EquilibriumCheck verify_equilibrium(const Scenario& s, const Mechanism& m, const Population& pop,
                                    double tol = 1e-9);
EquilibriumCheck verify_equilibrium(const Scenario& s, const Mechanism& m, const std::vector<double>& flow,
                                    double b, const Settings& cfg = {});

Stability classify_stability(const Scenario& s, const Mechanism& m, const Population& pop,
                             const Settings& cfg = {});
Stability classify_stability(const Scenario& s, const Mechanism& m, const std::vector<double>& flow, double b,
                             const Settings& cfg = {});

}  // namespace crl
