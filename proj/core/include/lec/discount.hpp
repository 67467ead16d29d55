#pragma once

#include <vector>

namespace lec {

/// Deterministic short rate r(v), piecewise constant with right-open pieces.
class DiscountCurve {
public:
    /// Constant rate.
    explicit DiscountCurve(double rate = 0.0);
    /// knots are left piece edges; the first piece also applies below knots.front().
    DiscountCurve(std::vector<double> knots, std::vector<double> rates);

    double rate(double v) const;
    /// int_a^b r(v) dv (negative when b < a).
    double integral(double a, double b) const;
    /// exp(-int_a^b r)
    double discount(double a, double b) const;
    /// int_a^b exp(-int_at^s r(v) dv) ds, exact for piecewise-constant r.
    /// With at >= b this is the value at `at` of a unit-rate annuity on [a, b]
    /// accumulated with interest.
    double annuity(double a, double b, double at) const;

    const std::vector<double>& knots() const noexcept { return knots_; }
    const std::vector<double>& rates() const noexcept { return rates_; }

private:
    std::vector<double> knots_;
    std::vector<double> rates_;
};

} // namespace lec
