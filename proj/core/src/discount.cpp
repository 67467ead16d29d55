#include "lec/discount.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace lec {

DiscountCurve::DiscountCurve(double rate) : knots_{0.0}, rates_{rate} {
    if (!std::isfinite(rate)) {
        throw std::invalid_argument("discount rate must be finite");
    }
}

DiscountCurve::DiscountCurve(std::vector<double> knots, std::vector<double> rates)
    : knots_(std::move(knots)), rates_(std::move(rates)) {
    if (knots_.empty() || knots_.size() != rates_.size()) {
        throw std::invalid_argument("discount curve needs one rate per knot");
    }
    for (std::size_t i = 1; i < knots_.size(); ++i) {
        if (!(knots_[i] > knots_[i - 1])) {
            throw std::invalid_argument("discount knots not strictly increasing");
        }
    }
    if (std::any_of(rates_.begin(), rates_.end(), [](double r) { return !std::isfinite(r); })) {
        throw std::invalid_argument("discount rate must be finite");
    }
}

double DiscountCurve::rate(double v) const {
    const auto it = std::upper_bound(knots_.begin(), knots_.end(), v);
    const std::size_t i = it == knots_.begin() ? 0 : static_cast<std::size_t>(it - knots_.begin()) - 1;
    return rates_[i];
}

double DiscountCurve::integral(double a, double b) const {
    if (b < a) {
        return -integral(b, a);
    }
    double total = 0.0;
    double x = a;
    while (x < b) {
        const auto it = std::upper_bound(knots_.begin(), knots_.end(), x);
        const double next = it == knots_.end() ? b : std::min(b, *it);
        total += rate(x) * (next - x);
        x = next;
    }
    return total;
}

double DiscountCurve::discount(double a, double b) const { return std::exp(-integral(a, b)); }

double DiscountCurve::annuity(double a, double b, double at) const {
    if (b <= a) {
        return 0.0;
    }
    double total = 0.0;
    double x = a;
    double to_x = integral(at, x);
    while (x < b) {
        const auto it = std::upper_bound(knots_.begin(), knots_.end(), x);
        const double next = it == knots_.end() ? b : std::min(b, *it);
        const double r = rate(x);
        const double len = next - x;
        const double piece = std::abs(r * len) < 1e-12 ? len * (1.0 - 0.5 * r * len) : -std::expm1(-r * len) / r;
        total += std::exp(-to_x) * piece;
        to_x += r * len;
        x = next;
    }
    return total;
}

} // namespace lec
