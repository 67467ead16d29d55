#pragma once

#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include "lec/rng.hpp"

namespace lec {

/// Point mass at zero.
struct ZeroDelay {};

struct ExponentialDelay {
    double mean = 1.0;
};

struct UniformDelay {
    double low = 0.0;
    double high = 1.0;
};

/// Right-continuous step distribution function: F(x) = cdf[j] for x in [points[j], points[j+1]).
/// F(x) = 0 below points.front(); cdf.back() must be 1.
struct StepDelay {
    std::vector<double> points;
    std::vector<double> cdf;
};

/// A proper distribution on [0, inf) used for reporting, adjudication and reapplication delays.
class DelayDistribution {
public:
    using Spec = std::variant<ZeroDelay, ExponentialDelay, UniformDelay, StepDelay>;

    DelayDistribution() = default;
    DelayDistribution(Spec spec); // NOLINT(google-explicit-constructor)
    template <class Alternative>
        requires std::is_constructible_v<Spec, Alternative> && (!std::is_same_v<std::decay_t<Alternative>, Spec>) &&
                 (!std::is_same_v<std::decay_t<Alternative>, DelayDistribution>)
    DelayDistribution(Alternative alt) // NOLINT(google-explicit-constructor)
        : DelayDistribution(Spec(std::move(alt))) {}

    double cdf(double x) const;
    double survival(double x) const { return 1.0 - cdf(x); }
    double mean() const;
    /// Integral of cdf over [a, b].
    double integrated_cdf(double a, double b) const;
    double sample(RngStream& rng) const;

    const Spec& spec() const noexcept { return spec_; }
    std::string describe() const;

    /// Empty iff the distribution is proper with mass 1 on [0, inf).
    std::vector<std::string> check() const;

private:
    Spec spec_ = ZeroDelay{};
    /// Step distributions only: integral of cdf over [0, points[j]].
    std::vector<double> step_integral_;
};

} // namespace lec
