#pragma once

#include <string>
#include <vector>

#include "crl/game.hpp"

namespace crl {

enum class DynamicsMode { PairwiseSmith, MinToMax };

struct DynamicsConfig {
    double switch_rate_mu = 1.0;
    double step_dt = 1e-3;
    long horizon = 1000000;
    double convergence_eps = 1e-8;
    DynamicsMode mode = DynamicsMode::PairwiseSmith;
    long sample_every = 100;
    long cycle_window = 10000;
    double cycle_tol = 1e-6;
};

enum class Verdict { Converged, Cycling, HorizonExceeded };
std::string to_string(Verdict v);

struct Sample {
    double t;
    std::vector<double> flow;
    std::vector<std::vector<double>> payoffs;  // per class, per path
};

struct Trajectory {
    std::vector<Sample> samples;
    Verdict verdict = Verdict::HorizonExceeded;
    Population final_state;
    long steps = 0;
    long clamp_events = 0;
};

// Per-class velocity of the revision protocol.
std::vector<std::vector<double>> flow_velocity(const Scenario& s, const Mechanism& m, const Population& pop,
                                               const DynamicsConfig& cfg);

// One Euler step with simplex projection. The step is cut back where the velocity reverses
// direction so that discontinuous schedules do not chatter across their target.
Population smith_step(const Scenario& s, const Mechanism& m, const Population& pop, const DynamicsConfig& cfg,
                      long* clamp_events = nullptr);

Trajectory simulate_to_convergence(const Scenario& s, const Mechanism& m, const Population& x0,
                                   const DynamicsConfig& cfg = {});

// Squared distance of the weighted content from the indifference level of a three-path
// restriction design (a1, a2). Zero exactly on the stable set.
double lyapunov_value(const Scenario& s, double a1, double a2, const std::vector<double>& flow);
bool in_lyapunov_region(const std::vector<double>& flow);

struct PdCheck {
    bool is_pd;
    double eigen_min;       // on the tangent space of the simplex
    double eigen_min_full;  // on all of R^3
};

// Effective per-path cost map (travel cost plus net transfer) of a three-path mechanism.
std::vector<double> effective_costs(const Scenario& s, const Mechanism& m, const std::vector<double>& x);
PdCheck jacobian_pd_check(const Scenario& s, const Mechanism& m, const std::vector<double>& flow);

}  // namespace crl
