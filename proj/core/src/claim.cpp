#include "lec/claim.hpp"

#include <algorithm>
#include <cmath>

namespace lec {

std::string_view to_string(Decision d) noexcept {
    switch (d) {
    case Decision::award: return "award";
    case Decision::reject: return "reject";
    case Decision::terminate: return "terminate";
    case Decision::reaward: return "reaward";
    }
    return "award";
}

std::optional<Decision> decision_from_string(std::string_view s) noexcept {
    for (Decision d : {Decision::award, Decision::reject, Decision::terminate, Decision::reaward}) {
        if (to_string(d) == s) {
            return d;
        }
    }
    return std::nullopt;
}

int ClaimRecord::backpay_count(double t) const {
    return static_cast<int>(std::count_if(events.begin(), events.end(), [t](const SettlementEvent& e) {
        return e.time <= t && e.pays_backpay();
    }));
}

bool ClaimRecord::in_payment(double t) const {
    return std::any_of(payments.begin(), payments.end(), [t](const Interval& i) { return i.start <= t && t < i.end; });
}

std::vector<std::string> ClaimRecord::check(const StateSpace& space, double retirement) const {
    std::vector<std::string> out = biometric.check(space);
    for (std::size_t i = 1; i < events.size(); ++i) {
        if (events[i].time < events[i - 1].time) {
            out.emplace_back("settlement events not sorted");
        }
    }
    for (const auto& c : claims) {
        if (c.report_time < c.onset) {
            out.emplace_back("claim reported before eligibility");
        }
    }
    for (const auto& p : payments) {
        if (!(p.end > p.start)) {
            out.emplace_back("empty payment interval");
        }
        if (p.end > retirement + 1e-9) {
            out.emplace_back("payment after retirement");
        }
        // Z = Disabled requires Y = Disabled on the whole interval.
        const auto spells = sojourns_in(biometric, space.disabled(), p.start, p.end);
        double covered = 0.0;
        for (const auto& s : spells) covered += s.end - s.start;
        if (std::abs(covered - (p.end - p.start)) > 1e-9) {
            out.emplace_back("payment while not eligible");
        }
        const bool started_by_decision = std::any_of(events.begin(), events.end(), [&](const SettlementEvent& e) {
            return (e.decision == Decision::award || e.decision == Decision::reaward) &&
                   std::abs(e.time - p.start) < 1e-12;
        });
        if (!started_by_decision) {
            out.emplace_back("payment interval not opened by an award");
        }
    }
    for (const auto& e : events) {
        if (e.pays_backpay() && (e.window_start < -1e-12 || e.window_end > e.time + 1e-12)) {
            out.emplace_back("backpay window outside [0, decision time]");
        }
    }
    return out;
}

} // namespace lec
