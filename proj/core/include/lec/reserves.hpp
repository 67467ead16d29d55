#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "lec/discount.hpp"
#include "lec/distributions.hpp"
#include "lec/multistate.hpp"
#include "lec/payments.hpp"
#include "lec/settlement.hpp"

namespace lec {

/// Mean benefit rate while disabled as a function of (time, duration); defaults to b.
using MeanRate = std::function<double(double t, double u)>;

/// Classic reserves V_j(t, u) for every state on the lattice t = i*step, u = k*step.
class ReserveSurface {
public:
    ReserveSurface(StateSpace space, double step, double retirement, std::size_t n_times,
                   std::vector<std::vector<double>> values);

    /// Bilinear in (t, u), clamped to the lattice; 0 for t >= retirement.
    double value(State s, double t, double u) const;
    /// V_a(t) for an insured active since inception.
    double active(double t) const { return value(space_.active(), t, t); }
    /// V_i(t, u): disabled at t with duration u.
    double disabled(double t, double u) const { return value(space_.disabled(), t, u); }

    const StateSpace& space() const noexcept { return space_; }
    double step() const noexcept { return step_; }
    double retirement() const noexcept { return retirement_; }
    std::size_t n_times() const noexcept { return n_; }
    double at_node(State s, std::size_t i, std::size_t k) const;

private:
    StateSpace space_;
    double step_;
    double retirement_;
    std::size_t n_;
    std::vector<std::vector<double>> values_;
};

/// Solves the backward (Thiele) system along duration characteristics with fixed-step RK4.
/// Benefit-only: the premium lump is not part of V. Throws std::invalid_argument for
/// an invalid model or a non-positive step.
ReserveSurface classic_reserves(const SemiMarkovModel& model, const PolicySpec& spec, const DiscountCurve& curve,
                                double step, const MeanRate& mean_rate = {});

/// Premium -V_a(0) (<= 0) from a surface computed with zero premium.
double fair_premium(const ReserveSurface& surface);

enum class ReserveCase { active_ibnr, rbnp, in_payment, reaward, closed };
std::string_view to_string(ReserveCase c) noexcept;

struct ReserveTerm {
    std::string label;
    double value = 0.0;
};

struct ReserveResult {
    ReserveCase kind = ReserveCase::closed;
    double value = 0.0;
    std::vector<ReserveTerm> terms;
};

/// G_t-measurable summary of the most recent claim of one policy.
struct ClaimSnapshot {
    std::uint64_t policy_id = 0;
    ReserveCase kind = ReserveCase::closed;
    /// G(t): time from which benefits run if the claim is (re)awarded.
    double eligibility_start = 0.0;
    /// W(t): disability duration at G(t) (in-payment: at t).
    double duration = 0.0;
    /// Time since report (rbnp) or since the benefit stop (reaward).
    double elapsed = 0.0;
    bool multiple_claims = false;
};

/// Thrown when a policy history does not fit exactly one case.
struct UnclassifiableRecord : std::runtime_error {
    std::uint64_t policy_id;
    UnclassifiableRecord(std::uint64_t id, const std::string& why);
};

ClaimSnapshot classify(const ObservedPolicy& policy, double t, double retirement);

/// V_a(t) + int_0^t V_i(s,0) P(delay > t-s) mu_ai(s) ds
ReserveResult ibnr_reserve(double t, const ReserveSurface& surface, const TransitionIntensity& incidence,
                           const DelayDistribution& reporting_delay);
/// p_award * V_i(G(t), 0)
ReserveResult rbnp_reserve(double t, const ClaimSnapshot& claim, const ReserveSurface& surface, double p_award);
/// V_i(t, W(t))
ReserveResult in_payment_reserve(double t, const ClaimSnapshot& claim, const ReserveSurface& surface);
/// p_reaward * V_i(G(t), W(t))
ReserveResult reaward_reserve(double t, const ClaimSnapshot& claim, const ReserveSurface& surface, double p_reaward);

struct ReserveInputs {
    const ReserveSurface* surface = nullptr;
    TransitionIntensity incidence;
    DelayDistribution reporting_delay;
    std::function<double(const ClaimSnapshot&)> p_award;
    std::function<double(const ClaimSnapshot&)> p_reaward;
    unsigned threads = 1;
};

struct PolicyReserve {
    ClaimSnapshot snapshot;
    ReserveResult result;
};

struct PortfolioReserve {
    double total = 0.0;
    std::vector<PolicyReserve> policies;
    std::array<std::size_t, 5> case_counts{};
    std::size_t multi_claim_policies = 0;
};

/// Classifies every policy and sums the case formulas. Throws UnclassifiableRecord.
PortfolioReserve portfolio_reserve(const ObservedPortfolio& portfolio, const ReserveInputs& inputs);

/// Size-only baseline: open claims older than `cutoff_years` are paid at a constant rate
/// until retirement age minus their average current age. Undiscounted.
struct PragmaticReserve {
    double total = 0.0;
    std::size_t open_claims = 0;
    double average_age = 0.0;
    /// Projected payments in years [t+y, t+y+1).
    std::vector<double> yearly;
};

PragmaticReserve aggregate_pragmatic_reserve(const ObservedPortfolio& portfolio, double cutoff_years,
                                             double retirement_age, double benefit_rate);

/// Expected undiscounted benefit payments per year [t+y, t+y+1) for an insured in `state`
/// with duration `duration` at t, up to retirement.
std::vector<double> projected_yearly_benefits(const SemiMarkovModel& model, const PolicySpec& spec, double t,
                                              State state, double duration, double step);

/// Grid CSV of one state's surface: first column t, then one column per duration node.
void write_surface_csv(std::ostream& os, const ReserveSurface& surface, State state);

} // namespace lec
