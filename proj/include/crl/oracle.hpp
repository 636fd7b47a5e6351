#pragma once

#include <cstdint>
#include <vector>

#include "crl/mechanisms.hpp"

namespace crl {

struct OracleConfig {
    double grid_step = 1e-4;
    long agent_count = 10000;
    long br_rounds = 1000;
    std::uint64_t seed = 1;
    double init_h_prob = 0.5;  // chance an agent starts on the H-path (two paths); otherwise uniform
};

// Exhaustive grid over the simplex (K <= 3) of the planner welfare.
FlowValue grid_social_optimum(const Scenario& s, const OracleConfig& cfg = {});

struct FiniteAgentResult {
    std::vector<double> shares;  // per path, fraction of all agents
    double participating = 1.0;
    bool converged = false;
    long rounds = 0;
    long moves = 0;
};

// Asynchronous best response of discrete agents, each ignoring its own effect on the shares.
FiniteAgentResult finite_agent_equilibrium(const Scenario& s, const Mechanism& m, const OracleConfig& cfg = {});

// Grid search over mechanism parameters with equilibrium, stability and participation checked
// directly from payoff comparisons. Two-path scenarios only.
DesignOutcome brute_force_design(const Scenario& s, Designer kind, const OracleConfig& cfg = {});

// Largest relative deviation of the analytic derivative from a central difference.
double finite_difference_check(const ContentFunction& f, const std::vector<double>& points, double h = 1e-6);

}  // namespace crl
