#pragma once

#include <map>
#include <string>
#include <vector>

#include "crl/game.hpp"

namespace crl {

struct DesignOutcome {
    Mechanism mechanism = NoIncentive{};
    std::vector<double> target_flow;
    std::string regime_label;
    double predicted_sw = 0.0;    // analytic value (limit for epsilon-perturbed designs)
    double sw_at_design = 0.0;    // welfare at target_flow under the emitted mechanism
    double participation_b = 1.0;
    double eps_used = 0.0;
    double g_max = 0.0;
    std::map<std::string, double> diagnostics;
};

struct RestrictionThresholds {
    double q_low;
    double q_high;
    std::vector<double> a_low;
    std::vector<double> a_high;
};

RestrictionThresholds restriction_thresholds(const Scenario& s);

PaymentSchedule side_payment_schedule(double target, double b, double c_h);
PaymentSchedule bang_schedule(double target, double level, double g_max);

DesignOutcome design_side_payment(const Scenario& s, const Settings& cfg = {});
DesignOutcome design_content_restriction(const Scenario& s, const Settings& cfg = {});
DesignOutcome design_combined(const Scenario& s, const Settings& cfg = {});
DesignOutcome design_continuous_side_payment(const Scenario& s, const Settings& cfg = {});
DesignOutcome design_continuous_content_restriction(const Scenario& s, const Settings& cfg = {});
DesignOutcome design_multipath_side_payment(const Scenario& s, const Settings& cfg = {});
DesignOutcome design_multipath_content_restriction(const Scenario& s, const Settings& cfg = {});

MultiPathSidePayment multipath_payments(const std::vector<double>& target, double c2, double c3);

// Welfare of the best outcome in each of the combined-mechanism cases that the designer
// never selects, for cross-checking the case reduction.
struct CombinedCases {
    double ir21;
    double ir2;
    double ir12;
    double split;
};
CombinedCases combined_case_values(const Scenario& s, const Settings& cfg = {});

struct DynamicOptimum {
    double x;
    double sw;
};
double dynamic_no_incentive_sw(const DynamicParams& p);
double dynamic_stationary_sw(const DynamicParams& p, double x);
DynamicOptimum dynamic_stationary_optimum(const DynamicParams& p);
DesignOutcome design_dynamic_content_restriction(const DynamicParams& p);

struct LinearCostRegions {
    double delta_c;
    double delta_a_tilde;
    int region;            // 1..7
    int adjacent_region;   // equal to region unless delta_c sits on a boundary
    double x_nash;
    double x_opt;
};
LinearCostRegions linear_cost_regions(const Scenario& s, const Settings& cfg = {});

enum class LinearDesignKind { SidePayment, Restriction };
DesignOutcome linear_cost_design(const Scenario& s, LinearDesignKind kind, const Settings& cfg = {});

enum class Designer { None, Side, Restriction, Combined };
Designer designer_from_string(const std::string& name);
std::string to_string(Designer d);

// Picks the designer variant that matches the scenario (continuous types, three paths,
// linear costs) for the requested mechanism family.
DesignOutcome design(const Scenario& s, Designer d, const Settings& cfg = {});

}  // namespace crl
