#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "crl/mechanisms.hpp"

namespace crl {

// Ratio of the designed equilibrium's welfare to the social optimum (1 when the optimum is not positive).
double poa_ratio(const Scenario& s, Designer d, const Settings& cfg = {});

struct EquilibriumPoint {
    std::vector<double> flow;
    double sw;
    Stability stability;
};

// All equilibria of a two-path game under a fixed mechanism: corner flows plus sign changes of
// each type's H-minus-L payoff gap, each confirmed by verify_equilibrium and classified.
std::vector<EquilibriumPoint> enumerate_equilibria(const Scenario& s, const Mechanism& m, const Settings& cfg = {},
                                                   double scan_step = 1e-3);
// Lowest-welfare Stable equilibrium (falls back to Boundary ones when none is Stable).
EquilibriumPoint worst_stable_equilibrium(const Scenario& s, const Mechanism& m, const Settings& cfg = {});
double poa_ratio_worst(const Scenario& s, Designer d, const Settings& cfg = {});

enum class WorstCaseKind { NoIncentive, SideTwoType, RestrictionHomogeneous, RestrictionTwoType, MultiPath };

struct WorstCaseSpec {
    WorstCaseKind kind = WorstCaseKind::NoIncentive;
    double q = 1.0;
    double theta0 = 0.5;
    double theta1 = 0.0;       // two-type families; theta2 = 2*theta0 - theta1
    double delta = 1e-4;       // knee of the piecewise content function where the family uses one
    double c_h = 1e-4;         // negative: use the family's canonical cost (2*theta0*q where defined)
    int K = 3;
};

WorstCaseKind worst_case_kind_from_string(const std::string& name);
Scenario worst_case_instance(const WorstCaseSpec& w);
// Closed-form ratio the family is built to attain.
double worst_case_ratio(const WorstCaseSpec& w);

struct SamplerSpec {
    std::string family = "mixed";  // mixed | piecewise | exponential | prop2 | thm1
    std::string types = "two_type";  // two_type | homogeneous
    double theta0 = 0.5;
    double log10_cost_lo = -4.0;   // c_H = theta0 * Q(0.5,1) * 10^U(lo, hi)
    double log10_cost_hi = 0.3;
    double knee_lo = 0.05, knee_hi = 0.5;
    double items_lo = 50, items_hi = 500;
};

Scenario sample_instance(const SamplerSpec& spec, long index, std::uint64_t seed);

struct InstanceSummary {
    long index = -1;
    std::string content;
    double theta1 = 0, theta2 = 0, c_h = 0;
    std::string regime;
    double ratio = 1.0;
};

struct PoAProbeReport {
    std::string family;
    std::string designer;
    std::uint64_t seed = 0;
    long samples = 0;
    long errors = 0;
    double bound = 0.5;
    double min_ratio = 1.0;
    double max_ratio = 0.0;
    InstanceSummary argmin;
    long violations = 0;
    long dominance_checked = 0;
    long dominance_violations = 0;
    double worst_dominance_gap = 0.0;
};

double asserted_bound(Designer d);

PoAProbeReport poa_search(const SamplerSpec& spec, Designer d, long n_samples, std::uint64_t seed,
                          const Settings& cfg = {}, int threads = 0);

}  // namespace crl
