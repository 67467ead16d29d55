#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "lec/claim.hpp"
#include "lec/distributions.hpp"
#include "lec/multistate.hpp"
#include "lec/payments.hpp"
#include "lec/rng.hpp"

namespace lec {

/// Reporting, adjudication and benefit-stop behaviour of the claim settlement layer.
///
/// Genuine claims start at every entry into Disabled and are reported after a
/// reporting delay; a decision follows after an adjudication delay. Rejected
/// genuine claims may reapply. While benefits are paid they can be stopped
/// wrongfully at `termination_hazard`; such stops are reawarded with
/// probability `reaward_prob` after a reapplication delay. Active insured
/// may also file non-eligible claims, which are always rejected.
struct SettlementModel {
    DelayDistribution reporting_delay;
    DelayDistribution adjudication_delay;
    DelayDistribution reapplication_delay;
    double award_prob = 1.0;
    /// Optional covariate hook overriding award_prob: (claim onset, inception age) -> probability.
    std::function<double(double, double)> award_prob_fn;
    double reapply_prob = 0.0;
    int max_reapplications = 2;
    double termination_hazard = 0.0;
    double reaward_prob = 1.0;
    double spurious_claim_rate = 0.0;

    std::vector<std::string> check() const;
    double award_probability(double onset, double inception_age) const;
    /// P(claim is reawarded | terminated `elapsed` years ago, no reaward yet), given the
    /// prior probability that the termination was wrongful.
    double reaward_probability(double wrongful_prior, double elapsed) const;
};

/// Prior probability that a benefit stop at time t, duration u, was wrongful rather than a recovery.
double wrongful_termination_prior(const SemiMarkovModel& model, const SettlementModel& settlement, double t,
                                  double u);

/// P(a reported, undecided claim with eligibility start `onset` is awarded): the award probability times
/// the share of genuine claims among claims filed at that time (incidence against the spurious claim rate).
double pending_award_probability(const SemiMarkovModel& model, const SettlementModel& settlement, double onset,
                                 double inception_age);

/// Simulates the settlement history of one insured. Claims, decisions and backpay windows
/// are derived from the eligibility path; payments never extend past retirement.
ClaimRecord simulate_settlement(const BiometricPath& path, const StateSpace& space, const SettlementModel& model,
                                const PolicySpec& spec, RngStream& rng, std::uint64_t policy_id = 0);

/// Portfolio run: policy i uses biometric stream (seed, i) and settlement stream (seed, i).
struct PortfolioSettings {
    std::size_t n_policies = 0;
    std::uint64_t seed = 0;
    unsigned threads = 1;
    std::uint64_t first_policy_id = 0;
    /// Cycled over policies; empty means age 0.
    std::vector<double> inception_ages;
};

std::vector<ClaimRecord> simulate_portfolio(const SemiMarkovModel& model, const SettlementModel& settlement,
                                            const PolicySpec& spec, const PortfolioSettings& settings);

/// Information available to the insurer at the analysis time.
struct ObservedPolicy {
    std::uint64_t policy_id = 0;
    double inception_age = 0.0;
    double entry_time = 0.0;
    std::optional<double> death_time;
    std::vector<Claim> claims;
    std::vector<SettlementEvent> events;
    std::vector<Interval> payments;
    bool multiple_claims = false;
    /// Benefits are being paid at the analysis time (payments are truncated there).
    bool paying = false;
};

struct ObservedPortfolio {
    double time = 0.0;
    std::vector<ObservedPolicy> policies;
};

/// Masks everything not known at time t. Policies that died before their entry time are
/// left out. `entry_times` may be empty (all policies observed from inception).
ObservedPortfolio observe(const std::vector<ClaimRecord>& records, double t,
                          const std::vector<double>& entry_times = {});

/// Value at t of the realised payments strictly after t.
double ground_truth_present_value(const ClaimRecord& record, const PolicySpec& spec, const DiscountCurve& curve,
                                  double t);

/// Runs fn(i) for i in [0, n) on `threads` workers; results must be written to per-index slots.
void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& fn);

} // namespace lec
