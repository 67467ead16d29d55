#include "lec/payments.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>

namespace lec {

std::vector<std::string> PolicySpec::check() const {
    std::vector<std::string> out;
    if (!(benefit_rate > 0.0)) out.emplace_back("benefit rate must be positive");
    if (!(premium <= 0.0)) out.emplace_back("premium must be <= 0");
    if (!(coverage_fraction > 0.0 && coverage_fraction <= 1.0)) out.emplace_back("coverage fraction must lie in (0, 1]");
    if (!(deferred_period >= 0.0)) out.emplace_back("deferred period must be >= 0");
    if (!(retirement_time > 0.0) || !std::isfinite(retirement_time)) out.emplace_back("retirement time must be positive");
    if (!(coverage_period > 0.0)) out.emplace_back("coverage period must be positive");
    if (!(salary >= 0.0)) out.emplace_back("salary must be >= 0");
    if (!(eligibility_threshold >= 0.0 && eligibility_threshold <= 1.0)) out.emplace_back("eligibility threshold must lie in [0, 1]");
    if (!(relapse_window >= 0.0)) out.emplace_back("relapse window must be >= 0");
    return out;
}

double StepFunction::operator()(double t) const {
    const auto it = std::upper_bound(knots.begin(), knots.end(), t);
    const std::size_t i = it == knots.begin() ? 0 : static_cast<std::size_t>(it - knots.begin()) - 1;
    return values[i];
}

std::vector<std::string> OffsetTrajectory::check() const {
    std::vector<std::string> out;
    for (const StepFunction* f : {&earning_capacity, &compensation}) {
        if (f->knots.empty() || f->knots.size() != f->values.size()) {
            out.emplace_back("offset trajectory needs one value per knot");
            continue;
        }
        for (std::size_t i = 1; i < f->knots.size(); ++i) {
            if (!(f->knots[i] > f->knots[i - 1])) out.emplace_back("offset knots not strictly increasing");
        }
        if (std::any_of(f->values.begin(), f->values.end(), [](double v) { return !(v >= 0.0); })) {
            out.emplace_back("offset values must be >= 0");
        }
    }
    return out;
}

double CashFlow::paid_between(double a, double b) const {
    double total = 0.0;
    for (const auto& s : segments) {
        const double lo = std::max(a, s.start);
        const double hi = std::min(b, s.end);
        if (hi > lo) total += s.rate * (hi - lo);
    }
    for (const auto& l : lumps) {
        if (l.time >= a && l.time < b) total += l.amount;
    }
    return total;
}

double present_value(const CashFlow& cf, const DiscountCurve& curve, double at) {
    double pv = 0.0;
    for (const auto& s : cf.segments) {
        const double lo = std::max(at, s.start);
        if (s.end > lo) pv += s.rate * curve.annuity(lo, s.end, at);
    }
    for (const auto& l : cf.lumps) {
        if (l.time > at) pv += l.amount * curve.discount(at, l.time);
    }
    return pv;
}

double offset_rate(const PolicySpec& spec, double earning_capacity, double compensation) {
    const double s = spec.salary;
    return std::min(std::max(s - earning_capacity - compensation, 0.0), spec.coverage_fraction * s);
}

CashFlow contractual_cashflow_simple(const BiometricPath& path, const StateSpace& space, const PolicySpec& spec) {
    CashFlow cf;
    cf.lumps.push_back({0.0, spec.premium});
    for (const auto& spell : sojourns_in(path, space.disabled(), 0.0, spec.retirement_time)) {
        cf.segments.push_back({spell.start, spell.end, spec.benefit_rate});
    }
    return cf;
}

CashFlow contractual_cashflow_offset(const BiometricPath& path, const StateSpace& space, const PolicySpec& spec,
                                     const OffsetTrajectory& offsets) {
    CashFlow cf;
    cf.lumps.push_back({0.0, spec.premium});
    std::vector<double> knots = offsets.earning_capacity.knots;
    knots.insert(knots.end(), offsets.compensation.knots.begin(), offsets.compensation.knots.end());
    std::sort(knots.begin(), knots.end());
    knots.erase(std::unique(knots.begin(), knots.end()), knots.end());
    for (const auto& spell : sojourns_in(path, space.disabled(), 0.0, spec.retirement_time)) {
        std::vector<double> cuts{spell.start};
        for (double k : knots) {
            if (k > spell.start && k < spell.end) cuts.push_back(k);
        }
        cuts.push_back(spell.end);
        for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
            const double r = offset_rate(spec, offsets.earning_capacity(cuts[i]), offsets.compensation(cuts[i]));
            if (r > 0.0) cf.segments.push_back({cuts[i], cuts[i + 1], r});
        }
    }
    return cf;
}

double backpay_amount(double alpha, double beta, double t, double benefit_rate, const DiscountCurve& curve) {
    if (alpha > beta) {
        throw std::invalid_argument("backpay window start after its end");
    }
    if (beta > t) {
        throw std::invalid_argument("backpay window ends after the decision time");
    }
    return benefit_rate * curve.annuity(alpha, beta, t);
}

CashFlow realized_cashflow(const ClaimRecord& record, const PolicySpec& spec, const DiscountCurve& curve) {
    CashFlow cf;
    cf.lumps.push_back({0.0, spec.premium});
    for (const auto& p : record.payments) {
        const double end = std::min(p.end, spec.retirement_time);
        if (end > p.start) cf.segments.push_back({p.start, end, spec.benefit_rate});
    }
    constexpr double kEps = 1e-9;
    for (const auto& e : record.events) {
        if (!e.pays_backpay()) continue;
        if (e.window_start < -kEps || e.window_end > spec.retirement_time + kEps) {
            throw std::invalid_argument("backpay window outside the coverage of policy " +
                                        std::to_string(record.policy_id));
        }
        cf.lumps.push_back({e.time, backpay_amount(e.window_start, e.window_end, e.time, spec.benefit_rate, curve)});
    }
    return cf;
}

BiometricPath apply_deferred_period(const BiometricPath& sickness, const StateSpace& space, const PolicySpec& spec) {
    const State disabled = space.disabled();
    // Rebuild as a list of (time, state) segments.
    std::vector<Jump> segs{{sickness.start_time, sickness.start_state}};
    for (const auto& j : sickness.jumps) segs.push_back(j);

    std::vector<Jump> mapped;
    double last_eligible_end = -std::numeric_limits<double>::infinity();
    State pre_state = space.active();
    for (std::size_t i = 0; i < segs.size(); ++i) {
        const double a = segs[i].time;
        const double b = i + 1 < segs.size() ? segs[i + 1].time : std::numeric_limits<double>::infinity();
        const State s = segs[i].state;
        if (s != disabled) {
            State out = s;
            // A spell that never became eligible cannot be left through recovery.
            if (!mapped.empty() && mapped.back().state != disabled && s == space.recovered()) out = mapped.back().state;
            mapped.push_back({a, out});
            pre_state = out;
            continue;
        }
        const bool relapse = a - last_eligible_end <= spec.relapse_window;
        const double start = relapse ? a : a + spec.deferred_period;
        if (start < b) {
            if (start > a) mapped.push_back({a, pre_state});
            mapped.push_back({start, disabled});
            last_eligible_end = b;
        } else {
            mapped.push_back({a, pre_state});
        }
    }
    BiometricPath out{sickness.start_time, mapped.front().state, sickness.start_duration, {}};
    State cur = out.start_state;
    for (std::size_t i = 1; i < mapped.size(); ++i) {
        if (mapped[i].state != cur && mapped[i].time > sickness.start_time) {
            out.jumps.push_back(mapped[i]);
            cur = mapped[i].state;
        }
    }
    return out;
}

void write_cashflow_csv(std::ostream& os, const CashFlow& cf) {
    os << "type,start,end,time,amount_or_rate\n";
    for (const auto& s : cf.segments) {
        os << "rate_segment," << s.start << ',' << s.end << ",," << s.rate << '\n';
    }
    for (const auto& l : cf.lumps) {
        os << "lump,,," << l.time << ',' << l.amount << '\n';
    }
}

} // namespace lec
