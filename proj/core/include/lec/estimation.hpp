#pragma once

#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "lec/distributions.hpp"
#include "lec/multistate.hpp"
#include "lec/settlement.hpp"

namespace lec {

/// Raised when the data cannot support the requested estimate.
struct InsufficientData : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DelayDistributionEstimate {
    /// Product-limit distribution function: F(x) = cdf[j] on [points[j], points[j+1]).
    std::vector<double> points;
    std::vector<double> cdf;
    /// False when the right-truncation adjustment was switched off (raw empirical distribution).
    bool truncation_adjusted = true;
    std::size_t n_claims = 0;
    /// Conditional maximum likelihood fit of an exponential delay under right-truncation.
    double exponential_mean = 0.0;
    double exponential_mean_se = 0.0;

    DelayDistribution nonparametric() const;
    DelayDistribution exponential() const;
    /// Mean of the step distribution function.
    double nonparametric_mean() const;
};

/// Reporting delays of all reported claims, adjusted for right-truncation at the analysis time.
/// Throws InsufficientData without reported claims.
DelayDistributionEstimate estimate_reporting_delay(const ObservedPortfolio& portfolio, bool truncation_adjusted = true);

/// P(reaward | termination, not reawarded after `elapsed` years) = q S(e) / (q S(e) + 1 - q)
/// where q is the eventual reaward share and S the survival of the reaward lag.
struct ReawardModel {
    double eventual = 0.0;
    double eventual_se = 0.0;
    std::size_t terminations = 0;
    DelayDistribution lag;

    double probability(double elapsed) const;
};

struct AwardModels {
    double p_award = 1.0;
    double p_award_se = 0.0;
    std::size_t resolved_claims = 0;
    std::optional<ReawardModel> reaward;

    /// Throws InsufficientData when no terminations were resolved.
    double reaward_probability(double elapsed) const;
};

/// Claims count as resolved once awarded, or once rejected at least `resolution_window` years before t.
/// Terminations count once `resolution_window` years have passed. Throws InsufficientData without
/// resolved claims.
AwardModels estimate_award_probabilities(const ObservedPortfolio& portfolio, double resolution_window = 2.0);

/// Cell boundaries for occurrence-exposure estimates; the last cell in each direction is open-ended.
struct EstimationGrid {
    std::vector<double> t_knots{0.0};
    std::vector<double> u_knots{0.0};
};

struct CellEstimate {
    double occurrences = 0.0;
    double exposure = 0.0;
    double rate = 0.0;
    double standard_error = 0.0;
    /// Zero exposure: the rate is copied from a neighbouring cell.
    bool flagged = false;
};

struct HazardEstimate {
    State from = 0;
    State to = 0;
    std::vector<double> t_knots;
    std::vector<double> u_knots;
    /// Row-major, t_knots.size() x u_knots.size().
    std::vector<CellEstimate> cells;

    const CellEstimate& cell(double t, double u) const;
    TransitionIntensity intensity() const;
};

struct OccurrenceExposure {
    StateSpace space = StateSpace::classic();
    double analysis_time = 0.0;
    bool corrected = false;
    std::vector<HazardEstimate> hazards;

    const HazardEstimate& hazard(State from, State to) const;
    SemiMarkovModel model() const;
};

/// Two-step estimator: incidence exposure at s is scaled by P(delay <= t - s), pending claims count as
/// occurrences with weight p_award and unreversed terminations with weight 1 - p_reaward(elapsed).
OccurrenceExposure corrected_occurrence_exposure(const ObservedPortfolio& portfolio, const StateSpace& space,
                                                 const DelayDistribution& reporting_delay, const AwardModels& awards,
                                                 const EstimationGrid& grid = {}, unsigned threads = 1);

/// Takes the observed histories at face value.
OccurrenceExposure naive_occurrence_exposure(const ObservedPortfolio& portfolio, const StateSpace& space,
                                             const EstimationGrid& grid = {}, unsigned threads = 1);

/// One row per transition and cell with naive and corrected estimates side by side.
void write_estimates_csv(std::ostream& os, const OccurrenceExposure& naive, const OccurrenceExposure& corrected);
void write_delay_csv(std::ostream& os, const DelayDistributionEstimate& estimate);

} // namespace lec
