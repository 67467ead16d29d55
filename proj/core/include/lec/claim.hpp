#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "lec/multistate.hpp"

namespace lec {

enum class Decision { award, reject, terminate, reaward };

std::string_view to_string(Decision d) noexcept;
std::optional<Decision> decision_from_string(std::string_view s) noexcept;

/// A claim for benefits. `onset` is the eligibility start (end of the deferred period).
struct Claim {
    int id = 0;
    double onset = 0.0;
    double report_time = 0.0;
    /// Ground truth only: whether the claim corresponds to a genuine eligible spell,
    /// and when that spell ended. Stripped from observed views.
    bool eligible = true;
    std::optional<double> spell_end;
};

/// An adjudication decision. Award and reaward carry the backpay window [window_start, window_end].
struct SettlementEvent {
    double time = 0.0;
    Decision decision = Decision::award;
    int claim = 0;
    double window_start = 0.0;
    double window_end = 0.0;
    /// Ground truth only: a termination while the insured was still eligible.
    bool wrongful = false;

    bool pays_backpay() const noexcept {
        return (decision == Decision::award || decision == Decision::reaward) && window_end > window_start;
    }
};

/// One insured's biometric path Y together with its settlement history Z and N.
struct ClaimRecord {
    std::uint64_t policy_id = 0;
    double inception_age = 0.0;
    BiometricPath biometric;
    std::vector<Claim> claims;
    /// Sorted by time.
    std::vector<SettlementEvent> events;
    /// Intervals on which Z = Disabled, i.e. benefits are actually being paid.
    std::vector<Interval> payments;
    std::optional<double> death_time;

    /// N(t): number of backpay awards at or before t.
    int backpay_count(double t) const;
    bool in_payment(double t) const;
    /// Violations of the record invariants given the state space and retirement time.
    std::vector<std::string> check(const StateSpace& space, double retirement) const;
};

} // namespace lec
