#pragma once

#include <string>
#include <vector>

#include "lec/intensity.hpp"
#include "lec/rng.hpp"
#include "lec/state_space.hpp"

namespace lec {

/// A semi-Markov model: one intensity per allowed transition, each a function
/// of policy time and duration in the current state.
struct SemiMarkovModel {
    StateSpace space = StateSpace::classic();
    std::vector<TransitionIntensity> intensities;

    /// Intensity of from -> to at (t, u); 0 when no intensity is given.
    double rate(State from, State to, double t, double u) const;
    double exit_rate(State from, double t, double u) const;
    /// True when every intensity is constant or grid based.
    bool piecewise_constant() const noexcept;
};

/// Empty iff every model invariant holds.
std::vector<std::string> validate_model(const SemiMarkovModel& model);

/// Replaces parametric intensities by their cell-midpoint grids of width `step`.
SemiMarkovModel discretize(const SemiMarkovModel& model, double step, double t_max, double u_max);

/// Sets incidence intensities out of `space.active()` to zero from `coverage_end` on.
SemiMarkovModel restrict_coverage(const SemiMarkovModel& model, double coverage_end, double step);

struct Jump {
    double time = 0.0;
    State state = 0;
};

/// One realisation of the biometric state process.
struct BiometricPath {
    double start_time = 0.0;
    State start_state = 0;
    /// Duration already spent in start_state at start_time.
    double start_duration = 0.0;
    std::vector<Jump> jumps;

    State state_at(double t) const;
    /// Time the current sojourn at t began (may precede start_time).
    double sojourn_start(double t) const;
    /// Empty iff times increase, states change and every jump is allowed.
    std::vector<std::string> check(const StateSpace& space) const;
};

struct Interval {
    double start = 0.0;
    double end = 0.0;
};

/// Maximal intervals, clipped to [from, to), on which the path is in `state`.
std::vector<Interval> sojourns_in(const BiometricPath& path, State state, double from, double to);

/// Simulates the path on [t0, t0 + horizon]. Requires a validated,
/// piecewise-constant model; throws std::invalid_argument otherwise.
BiometricPath sample_path(const SemiMarkovModel& model, double t0, State state0, double u0, double horizon,
                          RngStream& rng);

/// Occupation probabilities on the grid t0 + i*step, i = 0..n.
struct OccupationGrid {
    double t0 = 0.0;
    double step = 0.0;
    std::vector<double> times;
    /// probabilities[i][j] = P(Y(times[i]) = j)
    std::vector<std::vector<double>> probabilities;
    /// disabled_duration[i][k] = P(Y(times[i]) = Disabled, duration in [k*step, (k+1)*step))
    std::vector<std::vector<double>> disabled_duration;

    double probability(State s, double t) const;
};

/// Solves the forward equations of the semi-Markov process by a fixed-step
/// fourth-order Runge-Kutta scheme over entry cohorts.
/// Throws std::invalid_argument when step <= 0, step > horizon or the model is invalid.
OccupationGrid transition_probabilities(const SemiMarkovModel& model, double t0, State state0, double u0,
                                        double horizon, double step, bool keep_duration = true);

} // namespace lec
