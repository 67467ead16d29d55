#include "lec/settlement.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <thread>

namespace lec {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_prob(std::vector<std::string>& out, double p, const char* name) {
    if (!(p >= 0.0 && p <= 1.0)) {
        out.push_back(std::string(name) + " must lie in [0, 1]");
    }
}

struct ClaimBuilder {
    const SettlementModel& model;
    const PolicySpec& spec;
    RngStream& rng;
    ClaimRecord& rec;

    void push(SettlementEvent e) { rec.events.push_back(e); }

    /// Adjudicates a genuine claim covering the eligible spell [claim.onset, end).
    void genuine(const Claim& claim, double end, bool ended_by_recovery) {
        double decision = claim.report_time + model.adjudication_delay.sample(rng);
        const double p = model.award_probability(claim.onset, rec.inception_age);
        bool awarded = rng.bernoulli(p);
        int reapplications = 0;
        while (!awarded) {
            push({decision, Decision::reject, claim.id, 0.0, 0.0, false});
            if (reapplications >= model.max_reapplications || !rng.bernoulli(model.reapply_prob)) {
                return;
            }
            ++reapplications;
            decision += model.reapplication_delay.sample(rng);
            awarded = rng.bernoulli(p);
        }
        push({decision, Decision::award, claim.id, claim.onset, std::min(decision, end), false});
        if (decision >= end) {
            return;
        }
        double current = decision;
        while (true) {
            const double stop = model.termination_hazard > 0.0
                                    ? current + rng.exponential() / model.termination_hazard
                                    : kInf;
            if (stop >= end) {
                rec.payments.push_back({current, end});
                if (ended_by_recovery) {
                    push({end, Decision::terminate, claim.id, 0.0, 0.0, false});
                }
                return;
            }
            rec.payments.push_back({current, stop});
            push({stop, Decision::terminate, claim.id, 0.0, 0.0, true});
            if (!rng.bernoulli(model.reaward_prob)) {
                return;
            }
            const double again = stop + model.reapplication_delay.sample(rng);
            push({again, Decision::reaward, claim.id, stop, std::min(again, end), false});
            if (again >= end) {
                return;
            }
            current = again;
        }
    }

    void spurious(const Claim& claim) {
        const double decision = claim.report_time + model.adjudication_delay.sample(rng);
        push({decision, Decision::reject, claim.id, 0.0, 0.0, false});
    }
};

} // namespace

std::vector<std::string> SettlementModel::check() const {
    std::vector<std::string> out;
    for (const auto* d : {&reporting_delay, &adjudication_delay, &reapplication_delay}) {
        for (auto& issue : d->check()) out.push_back(std::move(issue));
    }
    check_prob(out, award_prob, "award probability");
    check_prob(out, reapply_prob, "reapplication probability");
    check_prob(out, reaward_prob, "reaward probability");
    if (max_reapplications < 0) out.emplace_back("max reapplications must be >= 0");
    if (!(termination_hazard >= 0.0)) out.emplace_back("termination hazard must be >= 0");
    if (!(spurious_claim_rate >= 0.0)) out.emplace_back("spurious claim rate must be >= 0");
    return out;
}

double SettlementModel::award_probability(double onset, double inception_age) const {
    if (award_prob_fn) {
        return std::clamp(award_prob_fn(onset, inception_age), 0.0, 1.0);
    }
    return award_prob;
}

double SettlementModel::reaward_probability(double wrongful_prior, double elapsed) const {
    const double pending = wrongful_prior * reaward_prob * reapplication_delay.survival(elapsed);
    const double denom = pending + (1.0 - wrongful_prior * reaward_prob);
    return denom > 0.0 ? pending / denom : 0.0;
}

double wrongful_termination_prior(const SemiMarkovModel& model, const SettlementModel& settlement, double t,
                                  double u) {
    const double recovery = model.rate(model.space.disabled(), model.space.recovered(), t, u);
    const double wrongful = settlement.termination_hazard;
    return wrongful + recovery > 0.0 ? wrongful / (wrongful + recovery) : 0.0;
}

double pending_award_probability(const SemiMarkovModel& model, const SettlementModel& settlement, double onset,
                                 double inception_age) {
    const double genuine = model.rate(model.space.active(), model.space.disabled(), onset, onset);
    const double spurious = settlement.spurious_claim_rate;
    const double share = genuine + spurious > 0.0 ? genuine / (genuine + spurious) : 1.0;
    return settlement.award_probability(onset, inception_age) * share;
}

ClaimRecord simulate_settlement(const BiometricPath& path, const StateSpace& space, const SettlementModel& model,
                                const PolicySpec& spec, RngStream& rng, std::uint64_t policy_id) {
    ClaimRecord rec;
    rec.policy_id = policy_id;
    rec.biometric = path;
    for (const auto& j : path.jumps) {
        if (j.state == space.dead()) {
            rec.death_time = j.time;
            break;
        }
    }
    const double retirement = spec.retirement_time;
    ClaimBuilder builder{model, spec, rng, rec};

    struct Pending {
        Claim claim;
        double end;
        bool recovery;
    };
    std::vector<Pending> claims;
    for (const auto& spell : sojourns_in(path, space.disabled(), 0.0, kInf)) {
        if (spell.start >= retirement) break;
        const double end = std::min(spell.end, retirement);
        const State next = path.state_at(spell.end);
        const bool recovery = std::isfinite(spell.end) && spell.end < retirement && next != space.dead();
        Claim c;
        c.onset = spell.start;
        c.report_time = spell.start + model.reporting_delay.sample(rng);
        c.eligible = true;
        c.spell_end = end;
        claims.push_back({c, end, recovery});
    }
    if (model.spurious_claim_rate > 0.0) {
        const double cover_end = std::min(spec.coverage_period, retirement);
        for (const auto& spell : sojourns_in(path, space.active(), 0.0, cover_end)) {
            double x = spell.start + rng.exponential() / model.spurious_claim_rate;
            while (x < spell.end) {
                Claim c;
                c.onset = x;
                c.report_time = x + model.reporting_delay.sample(rng);
                c.eligible = false;
                claims.push_back({c, x, false});
                x += rng.exponential() / model.spurious_claim_rate;
            }
        }
    }
    std::stable_sort(claims.begin(), claims.end(),
                     [](const Pending& a, const Pending& b) { return a.claim.onset < b.claim.onset; });
    for (std::size_t i = 0; i < claims.size(); ++i) {
        claims[i].claim.id = static_cast<int>(i);
        rec.claims.push_back(claims[i].claim);
        if (claims[i].claim.eligible) {
            builder.genuine(claims[i].claim, claims[i].end, claims[i].recovery);
        } else {
            builder.spurious(claims[i].claim);
        }
    }
    std::stable_sort(rec.events.begin(), rec.events.end(),
                     [](const SettlementEvent& a, const SettlementEvent& b) { return a.time < b.time; });
    std::sort(rec.payments.begin(), rec.payments.end(),
              [](const Interval& a, const Interval& b) { return a.start < b.start; });
    return rec;
}

void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& fn) {
    threads = std::max(1u, threads);
    if (threads == 1 || n < 2) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::jthread> pool;
    const std::size_t chunk = (n + threads - 1) / threads;
    for (unsigned w = 0; w < threads; ++w) {
        const std::size_t lo = w * chunk;
        const std::size_t hi = std::min(n, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([lo, hi, &fn] {
            for (std::size_t i = lo; i < hi; ++i) fn(i);
        });
    }
}

std::vector<ClaimRecord> simulate_portfolio(const SemiMarkovModel& model, const SettlementModel& settlement,
                                            const PolicySpec& spec, const PortfolioSettings& settings) {
    std::vector<ClaimRecord> out(settings.n_policies);
    parallel_for(settings.n_policies, settings.threads, [&](std::size_t i) {
        const std::uint64_t id = settings.first_policy_id + i;
        RngStream bio(settings.seed, id, RngStream::Domain::biometric);
        RngStream set(settings.seed, id, RngStream::Domain::settlement);
        const auto path = sample_path(model, 0.0, model.space.active(), 0.0, spec.retirement_time, bio);
        out[i] = simulate_settlement(path, model.space, settlement, spec, set, id);
        if (!settings.inception_ages.empty()) {
            out[i].inception_age = settings.inception_ages[i % settings.inception_ages.size()];
        }
    });
    return out;
}

ObservedPortfolio observe(const std::vector<ClaimRecord>& records, double t, const std::vector<double>& entry_times) {
    ObservedPortfolio out;
    out.time = t;
    out.policies.reserve(records.size());
    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto& r = records[i];
        const double entry = entry_times.empty() ? 0.0 : entry_times.at(i);
        if (r.death_time && *r.death_time < entry) {
            continue;
        }
        ObservedPolicy p;
        p.policy_id = r.policy_id;
        p.inception_age = r.inception_age;
        p.entry_time = entry;
        if (r.death_time && *r.death_time <= t) {
            p.death_time = r.death_time;
        }
        for (const auto& c : r.claims) {
            if (c.report_time <= t) {
                Claim masked = c;
                masked.eligible = true;
                masked.spell_end.reset();
                p.claims.push_back(masked);
            }
        }
        for (const auto& e : r.events) {
            if (e.time <= t) {
                SettlementEvent masked = e;
                masked.wrongful = false;
                p.events.push_back(masked);
            }
        }
        for (const auto& iv : r.payments) {
            if (iv.start <= t) {
                p.payments.push_back({iv.start, std::min(iv.end, t)});
                p.paying = p.paying || t < iv.end;
            }
        }
        p.multiple_claims = p.claims.size() > 1;
        out.policies.push_back(std::move(p));
    }
    return out;
}

double ground_truth_present_value(const ClaimRecord& record, const PolicySpec& spec, const DiscountCurve& curve,
                                  double t) {
    return present_value(realized_cashflow(record, spec, curve), curve, t);
}

} // namespace lec
