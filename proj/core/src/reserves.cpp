#include "lec/reserves.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>

#include "lec/numeric.hpp"

namespace lec {

namespace {

// 5-point Gauss-Legendre on [-1, 1].
constexpr std::array<double, 5> kGaussNodes{-0.9061798459386640, -0.5384693101056831, 0.0, 0.5384693101056831,
                                            0.9061798459386640};
constexpr std::array<double, 5> kGaussWeights{0.2369268850561891, 0.4786286704993665, 0.5688888888888889,
                                              0.4786286704993665, 0.2369268850561891};

std::string join(const std::vector<std::string>& v) {
    std::string out;
    for (const auto& s : v) {
        if (!out.empty()) out += "; ";
        out += s;
    }
    return out;
}

} // namespace

ReserveSurface::ReserveSurface(StateSpace space, double step, double retirement, std::size_t n_times,
                               std::vector<std::vector<double>> values)
    : space_(std::move(space)), step_(step), retirement_(retirement), n_(n_times), values_(std::move(values)) {}

double ReserveSurface::at_node(State s, std::size_t i, std::size_t k) const {
    return values_[static_cast<std::size_t>(s)][i * (n_ + 1) + k];
}

double ReserveSurface::value(State s, double t, double u) const {
    if (!(t < retirement_) || space_.is_absorbing(s)) return 0.0;
    const double x = std::max(t, 0.0) / step_;
    const double y = std::clamp(u, 0.0, static_cast<double>(n_) * step_) / step_;
    const auto i = std::min(static_cast<std::size_t>(x), n_ - 1);
    const auto k = std::min(static_cast<std::size_t>(y), n_ - 1);
    const double wx = std::min(x - static_cast<double>(i), 1.0);
    const double wy = std::min(y - static_cast<double>(k), 1.0);
    return (1 - wx) * ((1 - wy) * at_node(s, i, k) + wy * at_node(s, i, k + 1)) +
           wx * ((1 - wy) * at_node(s, i + 1, k) + wy * at_node(s, i + 1, k + 1));
}

ReserveSurface classic_reserves(const SemiMarkovModel& model, const PolicySpec& spec, const DiscountCurve& curve,
                                double step, const MeanRate& mean_rate) {
    if (auto issues = validate_model(model); !issues.empty()) {
        throw std::invalid_argument("invalid model: " + join(issues));
    }
    if (!(step > 0.0)) throw std::invalid_argument("reserve step must be positive");
    const double retirement = spec.retirement_time;
    if (!(retirement > 0.0) || !std::isfinite(retirement)) {
        throw std::invalid_argument("retirement time must be positive and finite");
    }
    const auto n = static_cast<std::size_t>(std::max(1.0, std::ceil(retirement / step - 1e-9)));
    const double h = retirement / static_cast<double>(n);
    const double delta = 1e-9 * h;
    const auto& space = model.space;
    const auto n_states = static_cast<std::size_t>(space.size());
    const std::size_t width = n + 1;
    std::vector<std::vector<double>> v(n_states, std::vector<double>(width * width, 0.0));
    auto node = [&](std::size_t s, std::size_t i, std::size_t k) -> double& { return v[s][i * width + k]; };

    std::vector<State> live;
    for (State s = 0; s < space.size(); ++s) {
        if (!space.is_absorbing(s)) live.push_back(s);
    }
    auto benefit = [&](State s, double t, double u) {
        if (s != space.disabled() || t >= retirement) return 0.0;
        return mean_rate ? mean_rate(t, u) : spec.benefit_rate;
    };

    std::vector<double> entry(n_states, 0.0);
    // Entry value V_s(t_i + tau, 0): quadratic through t_i, t_{i+1}, t_{i+2} where available.
    auto entry_value = [&](std::size_t s, std::size_t i, double tau) {
        const double w = tau / h;
        if (i + 2 > n) return (1.0 - w) * entry[s] + w * node(s, i + 1, 0);
        return 0.5 * (w - 1.0) * (w - 2.0) * entry[s] - w * (w - 2.0) * node(s, i + 1, 0) +
               0.5 * w * (w - 1.0) * node(s, i + 2, 0);
    };
    // Sub-step edges inside (0, h): rate and discount discontinuities along the characteristic.
    const double min_piece = 1e-6 * h;
    std::vector<double> cuts;
    auto find_cuts = [&](State j, double t, double u) {
        cuts.assign(1, 0.0);
        double tau = 0.0;
        while (tau < h) {
            const double probe = tau + delta;
            double d = h - probe;
            for (const auto& q : model.intensities) {
                if (q.from == j) d = std::min(d, q.distance_to_edge(t + probe, u + probe));
            }
            for (double knot : curve.knots()) {
                if (knot > t + probe) d = std::min(d, knot - (t + probe));
            }
            double next = std::max(probe + d, tau + min_piece);
            if (h - next < min_piece) next = h;
            cuts.push_back(next);
            tau = next;
        }
    };
    // Integrates along the characteristic ending at (t_{i+1}, u_k + h), given the value there.
    auto solve = [&](State j, std::size_t i, std::size_t k, double end_value) {
        const double t = static_cast<double>(i) * h;
        const double u = static_cast<double>(k) * h;
        auto rhs = [&](double tau, double y) {
            const double tt = t + tau;
            const double uu = u + tau;
            double forcing = benefit(j, tt, uu);
            for (const auto& [from, to] : space.transitions()) {
                if (from != j) continue;
                const double mu = model.rate(j, to, tt, uu);
                if (mu == 0.0 || space.is_absorbing(to)) continue;
                forcing += mu * entry_value(static_cast<std::size_t>(to), i, tau);
            }
            return (curve.rate(tt) + model.exit_rate(j, tt, uu)) * y - forcing;
        };
        find_cuts(j, t, u);
        double y = end_value;
        for (std::size_t c = cuts.size() - 1; c > 0; --c) {
            const double a = cuts[c - 1];
            const double b = cuts[c];
            const double len = b - a;
            const double mid = 0.5 * (a + b);
            const double k1 = rhs(b - delta, y);
            const double k2 = rhs(mid, y - 0.5 * len * k1);
            const double k3 = rhs(mid, y - 0.5 * len * k2);
            const double k4 = rhs(a + delta, y - len * k3);
            y -= len / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }
        return y;
    };

    for (std::size_t ii = n; ii-- > 0;) {
        for (State j : live) entry[static_cast<std::size_t>(j)] = node(static_cast<std::size_t>(j), ii + 1, 0);
        // The entry values V_k(t_i, 0) feed every characteristic of the step; iterate them to a fixed point.
        for (int iter = 0; iter < 4; ++iter) {
            std::vector<double> next = entry;
            for (State j : live) {
                const auto s = static_cast<std::size_t>(j);
                next[s] = solve(j, ii, 0, node(s, ii + 1, 1));
            }
            entry = next;
        }
        for (State j : live) {
            const auto s = static_cast<std::size_t>(j);
            for (std::size_t k = 0; k <= n; ++k) {
                node(s, ii, k) = solve(j, ii, k, node(s, ii + 1, std::min(k + 1, n)));
            }
        }
    }
    return ReserveSurface(space, h, retirement, n, std::move(v));
}

double fair_premium(const ReserveSurface& surface) { return -surface.active(0.0); }

std::string_view to_string(ReserveCase c) noexcept {
    switch (c) {
    case ReserveCase::active_ibnr: return "active_ibnr";
    case ReserveCase::rbnp: return "rbnp";
    case ReserveCase::in_payment: return "in_payment";
    case ReserveCase::reaward: return "reaward";
    case ReserveCase::closed: return "closed";
    }
    return "unknown";
}

UnclassifiableRecord::UnclassifiableRecord(std::uint64_t id, const std::string& why)
    : std::runtime_error("policy " + std::to_string(id) + ": " + why), policy_id(id) {}

ClaimSnapshot classify(const ObservedPolicy& policy, double t, double retirement) {
    ClaimSnapshot snap;
    snap.policy_id = policy.policy_id;
    snap.multiple_claims = policy.multiple_claims;
    if (t >= retirement) return snap;
    const bool dead = policy.death_time && *policy.death_time <= t;

    // The claim of interest: the one currently paid, otherwise the most recently reported.
    const Claim* claim = nullptr;
    if (policy.paying) {
        for (auto it = policy.events.rbegin(); it != policy.events.rend() && !claim; ++it) {
            if (it->decision == Decision::award || it->decision == Decision::reaward) {
                for (const auto& c : policy.claims) {
                    if (c.id == it->claim) claim = &c;
                }
            }
        }
        if (!claim) throw UnclassifiableRecord(policy.policy_id, "benefits paid without an award");
    } else {
        for (const auto& c : policy.claims) {
            if (c.report_time > t) continue;
            if (!claim || c.report_time > claim->report_time ||
                (c.report_time == claim->report_time && c.id > claim->id)) {
                claim = &c;
            }
        }
    }
    if (!claim) {
        snap.kind = dead ? ReserveCase::closed : ReserveCase::active_ibnr;
        return snap;
    }
    const SettlementEvent* last = nullptr;
    for (const auto& e : policy.events) {
        if (e.claim == claim->id && e.time <= t) last = &e;
    }
    if (!last) {
        if (claim->onset > claim->report_time) {
            throw UnclassifiableRecord(policy.policy_id, "claim reported before its onset");
        }
        snap.kind = ReserveCase::rbnp;
        snap.eligibility_start = claim->onset;
        snap.elapsed = t - claim->report_time;
        return snap;
    }
    switch (last->decision) {
    case Decision::reject:
        snap.kind = dead ? ReserveCase::closed : ReserveCase::active_ibnr;
        return snap;
    case Decision::award:
    case Decision::reaward:
        if (policy.paying && !dead) {
            snap.kind = ReserveCase::in_payment;
            snap.eligibility_start = claim->onset;
            snap.duration = t - claim->onset;
            return snap;
        }
        // The backpay window closed before the decision: the spell is known to be over.
        snap.kind = ReserveCase::closed;
        return snap;
    case Decision::terminate:
        if (dead) return snap;
        snap.kind = ReserveCase::reaward;
        snap.eligibility_start = last->time;
        snap.duration = last->time - claim->onset;
        snap.elapsed = t - last->time;
        return snap;
    }
    return snap;
}

ReserveResult ibnr_reserve(double t, const ReserveSurface& surface, const TransitionIntensity& incidence,
                           const DelayDistribution& reporting_delay) {
    if (!(t >= 0.0)) throw std::invalid_argument("valuation time must be >= 0");
    ReserveResult r;
    r.kind = ReserveCase::active_ibnr;
    const double active = surface.active(t);
    double unreported = 0.0;
    const double upper = std::min(t, surface.retirement());
    if (upper > 0.0) {
        const auto cells = static_cast<std::size_t>(std::ceil(upper / surface.step() - 1e-9));
        const double width = upper / static_cast<double>(cells);
        std::vector<double> parts(cells, 0.0);
        for (std::size_t c = 0; c < cells; ++c) {
            const double mid = (static_cast<double>(c) + 0.5) * width;
            double acc = 0.0;
            for (std::size_t q = 0; q < kGaussNodes.size(); ++q) {
                const double s = mid + 0.5 * width * kGaussNodes[q];
                acc += kGaussWeights[q] * surface.disabled(s, 0.0) * reporting_delay.survival(t - s) * incidence(s, s);
            }
            parts[c] = 0.5 * width * acc;
        }
        unreported = pairwise_sum(parts);
    }
    r.value = active + unreported;
    r.terms = {{"active", active}, {"unreported", unreported}};
    return r;
}

ReserveResult rbnp_reserve(double t, const ClaimSnapshot& claim, const ReserveSurface& surface, double p_award) {
    if (!(claim.eligibility_start <= t)) throw std::invalid_argument("eligibility start after valuation time");
    if (!(p_award >= 0.0 && p_award <= 1.0)) throw std::invalid_argument("award probability outside [0, 1]");
    ReserveResult r;
    r.kind = ReserveCase::rbnp;
    const double awarded = surface.disabled(claim.eligibility_start, 0.0);
    r.value = p_award * awarded;
    r.terms = {{"award_probability", p_award}, {"value_if_awarded", awarded}};
    return r;
}

ReserveResult in_payment_reserve(double t, const ClaimSnapshot& claim, const ReserveSurface& surface) {
    if (!(claim.duration >= 0.0 && claim.duration <= t + 1e-12)) {
        throw std::invalid_argument("disability duration outside [0, t]");
    }
    ReserveResult r;
    r.kind = ReserveCase::in_payment;
    r.value = surface.disabled(t, claim.duration);
    r.terms = {{"disabled", r.value}};
    return r;
}

ReserveResult reaward_reserve(double t, const ClaimSnapshot& claim, const ReserveSurface& surface, double p_reaward) {
    if (!(claim.eligibility_start <= t)) throw std::invalid_argument("termination after valuation time");
    if (!(p_reaward >= 0.0 && p_reaward <= 1.0)) throw std::invalid_argument("reaward probability outside [0, 1]");
    ReserveResult r;
    r.kind = ReserveCase::reaward;
    const double reawarded = surface.disabled(claim.eligibility_start, claim.duration);
    r.value = p_reaward * reawarded;
    r.terms = {{"reaward_probability", p_reaward}, {"value_if_reawarded", reawarded}};
    return r;
}

PortfolioReserve portfolio_reserve(const ObservedPortfolio& portfolio, const ReserveInputs& inputs) {
    if (!inputs.surface) throw std::invalid_argument("reserve surface missing");
    const auto& surface = *inputs.surface;
    const double t = portfolio.time;
    PortfolioReserve out;
    out.policies.resize(portfolio.policies.size());
    for (std::size_t i = 0; i < portfolio.policies.size(); ++i) {
        out.policies[i].snapshot = classify(portfolio.policies[i], t, surface.retirement());
    }
    // Every active policy shares the same IBNR value.
    const bool any_active = std::any_of(out.policies.begin(), out.policies.end(), [](const PolicyReserve& p) {
        return p.snapshot.kind == ReserveCase::active_ibnr;
    });
    ReserveResult ibnr;
    if (any_active) ibnr = ibnr_reserve(t, surface, inputs.incidence, inputs.reporting_delay);
    parallel_for(out.policies.size(), inputs.threads, [&](std::size_t i) {
        auto& p = out.policies[i];
        switch (p.snapshot.kind) {
        case ReserveCase::active_ibnr: p.result = ibnr; break;
        case ReserveCase::rbnp:
            p.result = rbnp_reserve(t, p.snapshot, surface, inputs.p_award ? inputs.p_award(p.snapshot) : 1.0);
            break;
        case ReserveCase::in_payment: p.result = in_payment_reserve(t, p.snapshot, surface); break;
        case ReserveCase::reaward:
            p.result = reaward_reserve(t, p.snapshot, surface, inputs.p_reaward ? inputs.p_reaward(p.snapshot) : 0.0);
            break;
        case ReserveCase::closed: p.result = ReserveResult{}; break;
        }
    });
    std::vector<double> values(out.policies.size());
    for (std::size_t i = 0; i < out.policies.size(); ++i) {
        const auto& p = out.policies[i];
        values[i] = p.result.value;
        ++out.case_counts[static_cast<std::size_t>(p.snapshot.kind)];
        if (p.snapshot.multiple_claims) ++out.multi_claim_policies;
    }
    out.total = pairwise_sum(values);
    return out;
}

PragmaticReserve aggregate_pragmatic_reserve(const ObservedPortfolio& portfolio, double cutoff_years,
                                             double retirement_age, double benefit_rate) {
    const double t = portfolio.time;
    PragmaticReserve out;
    std::vector<double> ages;
    for (const auto& p : portfolio.policies) {
        if (!p.paying || (p.death_time && *p.death_time <= t)) continue;
        // Duration of the most recent claim in payment.
        double onset = t;
        for (auto it = p.events.rbegin(); it != p.events.rend(); ++it) {
            if (it->decision == Decision::award || it->decision == Decision::reaward) {
                for (const auto& c : p.claims) {
                    if (c.id == it->claim) onset = c.onset;
                }
                break;
            }
        }
        if (t - onset >= cutoff_years) ages.push_back(p.inception_age + t);
    }
    out.open_claims = ages.size();
    if (ages.empty()) return out;
    out.average_age = pairwise_sum(ages) / static_cast<double>(ages.size());
    const double remaining = std::max(retirement_age - out.average_age, 0.0);
    const double annual = static_cast<double>(ages.size()) * benefit_rate;
    out.total = annual * remaining;
    for (double y = 0.0; y < remaining; y += 1.0) {
        out.yearly.push_back(annual * std::min(1.0, remaining - y));
    }
    return out;
}

std::vector<double> projected_yearly_benefits(const SemiMarkovModel& model, const PolicySpec& spec, double t,
                                              State state, double duration, double step) {
    const double horizon = spec.retirement_time - t;
    if (!(horizon > 0.0)) return {};
    const double grid_step = std::min(step, horizon);
    const auto grid = transition_probabilities(model, t, state, duration, horizon, grid_step, false);
    const auto years = static_cast<std::size_t>(std::ceil(horizon - 1e-9));
    std::vector<double> out(years, 0.0);
    const auto d = static_cast<std::size_t>(model.space.disabled());
    for (std::size_t i = 0; i + 1 < grid.times.size(); ++i) {
        double a = grid.times[i] - t;
        const double b = std::min(grid.times[i + 1] - t, horizon);
        const double pa = grid.probabilities[i][d];
        const double pb = grid.probabilities[i + 1][d];
        const double span = grid.times[i + 1] - grid.times[i];
        auto prob = [&](double x) { return pa + (pb - pa) * (x - (grid.times[i] - t)) / span; };
        while (a < b) {
            const auto y = std::min(static_cast<std::size_t>(a + 1e-12), years - 1);
            const double cut = std::min(b, static_cast<double>(y + 1));
            out[y] += spec.benefit_rate * 0.5 * (prob(a) + prob(cut)) * (cut - a);
            if (cut <= a) break;
            a = cut;
        }
    }
    return out;
}

void write_surface_csv(std::ostream& os, const ReserveSurface& surface, State state) {
    const auto n = surface.n_times();
    os << "t";
    for (std::size_t k = 0; k <= n; ++k) os << ",u=" << static_cast<double>(k) * surface.step();
    os << '\n';
    os.precision(12);
    for (std::size_t i = 0; i <= n; ++i) {
        os << static_cast<double>(i) * surface.step();
        for (std::size_t k = 0; k <= n; ++k) os << ',' << surface.at_node(state, i, k);
        os << '\n';
    }
}

} // namespace lec
