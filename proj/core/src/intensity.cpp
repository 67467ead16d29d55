#include "lec/intensity.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace lec {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::size_t cell_index(const std::vector<double>& knots, double x) {
    const auto it = std::upper_bound(knots.begin(), knots.end(), x);
    if (it == knots.begin()) {
        return 0;
    }
    return static_cast<std::size_t>(it - knots.begin()) - 1;
}

double next_knot_distance(const std::vector<double>& knots, double x) {
    const auto it = std::upper_bound(knots.begin(), knots.end(), x);
    return it == knots.end() ? kInf : *it - x;
}

bool strictly_increasing(const std::vector<double>& v) {
    return std::adjacent_find(v.begin(), v.end(), [](double a, double b) { return !(a < b); }) == v.end();
}

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

} // namespace

double RateGrid::operator()(double t, double u) const {
    const std::size_t i = cell_index(t_knots, t);
    const std::size_t k = cell_index(u_knots, u);
    return values[i * u_knots.size() + k];
}

double RateGrid::distance_to_edge(double t, double u) const {
    return std::min(next_knot_distance(t_knots, t), next_knot_distance(u_knots, u));
}

double TransitionIntensity::operator()(double t, double u) const {
    return std::visit(overloaded{
                          [](const ConstantRate& c) { return c.value; },
                          [&](const RateGrid& g) { return g(t, u); },
                          [&](const GompertzMakeham& g) { return g.a + g.b * std::exp(g.c * t); },
                          [&](const ExponentialDecay& e) { return e.floor + e.level * std::exp(-e.decay * u); },
                      },
                      rate);
}

bool TransitionIntensity::piecewise_constant() const noexcept {
    return std::holds_alternative<ConstantRate>(rate) || std::holds_alternative<RateGrid>(rate);
}

double TransitionIntensity::distance_to_edge(double t, double u) const {
    if (const auto* g = std::get_if<RateGrid>(&rate)) {
        return g->distance_to_edge(t, u);
    }
    return kInf;
}

std::vector<std::string> TransitionIntensity::check() const {
    std::vector<std::string> out;
    std::visit(overloaded{
                   [&](const ConstantRate& c) {
                       if (!(c.value >= 0.0) || !std::isfinite(c.value)) {
                           out.emplace_back("negative intensity");
                       }
                   },
                   [&](const RateGrid& g) {
                       if (g.t_knots.empty() || g.u_knots.empty()) {
                           out.emplace_back("empty knot vector");
                           return;
                       }
                       if (!strictly_increasing(g.t_knots) || !strictly_increasing(g.u_knots)) {
                           out.emplace_back("knots not strictly increasing");
                       }
                       if (g.values.size() != g.t_knots.size() * g.u_knots.size()) {
                           out.emplace_back("grid value count does not match knots");
                       }
                       if (std::any_of(g.values.begin(), g.values.end(),
                                       [](double v) { return !(v >= 0.0) || !std::isfinite(v); })) {
                           out.emplace_back("negative intensity");
                       }
                   },
                   [&](const GompertzMakeham& g) {
                       if (g.a < 0.0 || g.b < 0.0) {
                           out.emplace_back("negative intensity");
                       }
                   },
                   [&](const ExponentialDecay& e) {
                       if (e.floor < 0.0 || e.level < -e.floor || e.decay < 0.0) {
                           out.emplace_back("negative intensity");
                       }
                   },
               },
               rate);
    return out;
}

TransitionIntensity discretize(const TransitionIntensity& intensity, double step, double t_max, double u_max) {
    if (intensity.piecewise_constant()) {
        return intensity;
    }
    if (!(step > 0.0)) {
        throw std::invalid_argument("discretization step must be positive");
    }
    RateGrid grid;
    const bool t_dependent = std::holds_alternative<GompertzMakeham>(intensity.rate);
    const auto nt = t_dependent ? static_cast<std::size_t>(std::ceil(t_max / step - 1e-9)) : 1u;
    const auto nu = t_dependent ? 1u : static_cast<std::size_t>(std::ceil(u_max / step - 1e-9));
    for (std::size_t i = 0; i < std::max<std::size_t>(nt, 1); ++i) {
        grid.t_knots.push_back(static_cast<double>(i) * step);
    }
    for (std::size_t k = 0; k < std::max<std::size_t>(nu, 1); ++k) {
        grid.u_knots.push_back(static_cast<double>(k) * step);
    }
    for (double t : grid.t_knots) {
        for (double u : grid.u_knots) {
            grid.values.push_back(intensity(t + 0.5 * step, u + 0.5 * step));
        }
    }
    return TransitionIntensity{intensity.from, intensity.to, std::move(grid)};
}

} // namespace lec
