#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace lec {

/// One insured in a prevention study. Potential outcomes are only known for simulated data.
struct TreatmentSample {
    std::vector<double> covariates;
    int treatment = 0;
    double outcome = 0.0;
    std::optional<double> outcome_treated;
    std::optional<double> outcome_control;
};

struct AssignmentMechanism {
    enum class Kind { randomized, unconfounded, cutoff };
    Kind kind = Kind::randomized;
    /// randomized: constant propensity.
    double probability = 0.5;
    /// unconfounded: logistic in the first covariate, clipped to [epsilon, 1 - epsilon].
    double intercept = 0.0;
    double slope = 1.0;
    double epsilon = 0.05;
    /// cutoff: propensity `below` for w < cutoff and `above` for w >= cutoff (first covariate).
    double cutoff = 0.0;
    double below = 0.0;
    double above = 1.0;

    double propensity(const std::vector<double>& w) const;
    std::vector<std::string> check() const;
};

struct CovariateModel {
    enum class Kind { normal, uniform };
    Kind kind = Kind::normal;
    std::size_t dimension = 1;
    double mean = 0.0;
    double sd = 1.0;
    double low = 0.0;
    double high = 1.0;
};

/// Control outcome: intercept + slopes . W + N(0, noise_sd^2). Effect: effect + effect_slope * W[0].
struct EffectModel {
    double intercept = 50000.0;
    std::vector<double> slopes{10000.0};
    double noise_sd = 20000.0;
    double effect = -5000.0;
    double effect_slope = 0.0;

    double effect_at(const std::vector<double>& w) const;
};

struct InterventionSettings {
    std::size_t n_samples = 0;
    std::uint64_t seed = 0;
    CovariateModel covariates;
    unsigned threads = 1;
};

/// Potential outcomes are drawn independently of the assignment given W. Throws std::invalid_argument
/// for an invalid mechanism.
std::vector<TreatmentSample> simulate_intervention(const InterventionSettings& settings,
                                                   const AssignmentMechanism& mechanism, const EffectModel& effect);

struct NoOverlap : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct NoDiscontinuity : std::runtime_error {
    NoDiscontinuity() : std::runtime_error("no identifiable discontinuity") {}
};

struct EffectEstimate {
    double estimate = 0.0;
    double standard_error = 0.0;
    double bandwidth = 0.0;
    std::size_t n_treated = 0;
    std::size_t n_control = 0;
};

struct CateOptions {
    /// 0 selects sd(W) * n^(-1/5) per coordinate.
    double bandwidth = 0.0;
    std::size_t bootstrap = 200;
    std::uint64_t seed = 0;
    unsigned threads = 1;
};

/// E[O | W = w, A = 1] - E[O | W = w, A = 0]: local-linear with a triangular kernel for scalar W,
/// arm means within a box of half-width `bandwidth` otherwise. Bootstrap standard error.
/// Throws NoOverlap when an arm has fewer than 3 samples near w.
EffectEstimate cate_unconfounded(const std::vector<TreatmentSample>& samples, const std::vector<double>& w_query,
                                 const CateOptions& options = {});

struct RddOptions {
    double bandwidth = 0.0;
    double min_jump = 0.1;
    std::size_t bootstrap = 200;
    std::uint64_t seed = 0;
    unsigned threads = 1;
};

struct RddEstimate {
    double estimate = 0.0;
    double standard_error = 0.0;
    double outcome_jump = 0.0;
    double outcome_jump_se = 0.0;
    double treatment_jump = 0.0;
    double treatment_jump_se = 0.0;
    double bandwidth = 0.0;
    bool sharp = false;
};

/// Ratio of one-sided local-linear limits of O and A at the cutoff (first covariate).
/// Throws NoDiscontinuity when the treatment jump is below min_jump or within 3 standard errors of 0.
RddEstimate rdd_cate(const std::vector<TreatmentSample>& samples, double cutoff, const RddOptions& options = {});

struct PositivityBin {
    double low = 0.0;
    double high = 0.0;
    std::size_t n = 0;
    std::size_t treated = 0;
    double propensity = 0.0;
    bool flagged = false;
};

struct PositivityReport {
    double epsilon = 0.05;
    std::vector<PositivityBin> bins;
    double min_propensity = 0.0;
    double max_propensity = 0.0;
    std::size_t flagged = 0;
    bool passed() const noexcept { return flagged == 0; }
};

/// Treated share in equal-count bins of the first covariate.
PositivityReport positivity_check(const std::vector<TreatmentSample>& samples, double epsilon = 0.05,
                                  std::size_t n_bins = 10);

void write_samples_csv(std::ostream& os, const std::vector<TreatmentSample>& samples);
/// Reads the format written above; lines starting with '#' are skipped.
std::vector<TreatmentSample> read_samples_csv(std::istream& is);

} // namespace lec
