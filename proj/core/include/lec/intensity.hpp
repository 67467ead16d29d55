#pragma once

#include <string>
#include <variant>
#include <vector>

#include "lec/state_space.hpp"

namespace lec {

/// Piecewise-constant rate on a rectangular (t, u) grid.
///
/// Knots are left cell edges; cells are right-open [knot, next) and the last
/// cell extends to infinity. Arguments below the first knot use the first cell.
struct RateGrid {
    std::vector<double> t_knots;
    std::vector<double> u_knots;
    std::vector<double> values; ///< row-major, t_knots.size() x u_knots.size()

    double operator()(double t, double u) const;
    /// Distance along the diagonal (t + s, u + s) to the next cell edge.
    double distance_to_edge(double t, double u) const;
};

struct ConstantRate {
    double value = 0.0;
};

/// a + b * exp(c * t)
struct GompertzMakeham {
    double a = 0.0;
    double b = 0.0;
    double c = 0.0;
};

/// floor + level * exp(-decay * u)
struct ExponentialDecay {
    double level = 0.0;
    double decay = 0.0;
    double floor = 0.0;
};

using RateSpec = std::variant<ConstantRate, RateGrid, GompertzMakeham, ExponentialDecay>;

/// Intensity of one transition as a function of policy time t and duration u (years).
struct TransitionIntensity {
    State from = 0;
    State to = 0;
    RateSpec rate = ConstantRate{};

    double operator()(double t, double u) const;
    bool piecewise_constant() const noexcept;
    /// Diagonal distance to the next discontinuity; infinity for constant rates.
    /// Only meaningful when piecewise_constant().
    double distance_to_edge(double t, double u) const;
    /// Issues with this rate specification alone (negative values, bad knots).
    std::vector<std::string> check() const;
};

/// Evaluates a parametric rate onto a grid with cells of width `step`,
/// covering [0, t_max) x [0, u_max), using cell-midpoint values.
/// Piecewise-constant specifications are returned unchanged.
TransitionIntensity discretize(const TransitionIntensity& intensity, double step, double t_max, double u_max);

} // namespace lec
