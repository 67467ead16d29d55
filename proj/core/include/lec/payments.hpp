#pragma once

#include <iosfwd>
#include <limits>
#include <string>
#include <vector>

#include "lec/claim.hpp"
#include "lec/discount.hpp"
#include "lec/multistate.hpp"

namespace lec {

/// Contract terms. Times are policy time in years, money in currency units.
struct PolicySpec {
    double benefit_rate = 100000.0;   ///< b > 0, per year
    double premium = 0.0;             ///< initial premium, <= 0
    double salary = 0.0;              ///< s, per year
    double coverage_fraction = 1.0;   ///< d in (0, 1]
    double deferred_period = 0.25;    ///< q >= 0
    double coverage_period = std::numeric_limits<double>::infinity();
    double retirement_time = 30.0;    ///< R > 0
    double eligibility_threshold = 0.5;
    double relapse_window = 0.5;

    std::vector<std::string> check() const;
};

/// Right-continuous step function of time; value[i] applies on [knots[i], knots[i+1]).
struct StepFunction {
    std::vector<double> knots{0.0};
    std::vector<double> values{0.0};

    double operator()(double t) const;
};

/// Earning capacity e_t and public/other compensation c_t.
struct OffsetTrajectory {
    StepFunction earning_capacity;
    StepFunction compensation;

    std::vector<std::string> check() const;
};

struct RateSegment {
    double start = 0.0;
    double end = 0.0;
    double rate = 0.0;
};

struct LumpPayment {
    double time = 0.0;
    double amount = 0.0;
};

struct CashFlow {
    std::vector<RateSegment> segments;
    std::vector<LumpPayment> lumps;

    /// Undiscounted total paid in [a, b).
    double paid_between(double a, double b) const;
};

/// Value at `at` of all payments strictly after `at` (segments clipped to [at, inf)).
double present_value(const CashFlow& cf, const DiscountCurve& curve, double at);

/// Offset benefit rate min{max{s - e - c, 0}, d*s}.
double offset_rate(const PolicySpec& spec, double earning_capacity, double compensation);

/// dB = 1{Y=Disabled} b dt before retirement, B(0) = premium.
CashFlow contractual_cashflow_simple(const BiometricPath& path, const StateSpace& space, const PolicySpec& spec);

/// dB = 1{Y=Disabled} min{max{s - e_t - c_t, 0}, d s} dt; zero-rate pieces are omitted.
CashFlow contractual_cashflow_offset(const BiometricPath& path, const StateSpace& space, const PolicySpec& spec,
                                     const OffsetTrajectory& offsets);

/// int_alpha^beta exp(int_s^t r) b ds. Throws std::invalid_argument unless alpha <= beta <= t.
double backpay_amount(double alpha, double beta, double t, double benefit_rate, const DiscountCurve& curve);

/// d(realised) = 1{Z=Disabled} b dt + backpay dN. Throws std::invalid_argument when a
/// backpay window falls outside [0, R].
CashFlow realized_cashflow(const ClaimRecord& record, const PolicySpec& spec, const DiscountCurve& curve);

/// Maps a sickness path to an eligibility path: each Disabled spell becomes eligible
/// after the deferred period, except relapses starting within the relapse window of
/// an eligible spell, which are eligible immediately.
BiometricPath apply_deferred_period(const BiometricPath& sickness, const StateSpace& space, const PolicySpec& spec);

/// CSV with columns type,start,end,time,amount_or_rate.
void write_cashflow_csv(std::ostream& os, const CashFlow& cf);

} // namespace lec
