#include "lec/prevention.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>

#include "lec/numeric.hpp"
#include "lec/rng.hpp"
#include "lec/settlement.hpp"

namespace lec {

namespace {

/// Weighted sums for a local-linear fit y ~ a + b x; the intercept is the limit at x = 0.
struct LinearSums {
    double s0 = 0.0, s1 = 0.0, s2 = 0.0, t0 = 0.0, t1 = 0.0;
    std::size_t points = 0;

    void add(double x, double y, double w) {
        s0 += w;
        s1 += w * x;
        s2 += w * x * x;
        t0 += w * y;
        t1 += w * x * y;
        ++points;
    }
    double intercept() const {
        const double det = s0 * s2 - s1 * s1;
        if (points < 3 || !(det > 1e-14 * s0 * s2)) return std::nan("");
        return (s2 * t0 - s1 * t1) / det;
    }
};

double covariate_sd(const std::vector<TreatmentSample>& samples, std::size_t d) {
    RunningStats st;
    for (const auto& s : samples) st.add(s.covariates.at(d));
    return std::sqrt(st.variance());
}

double default_bandwidth(const std::vector<TreatmentSample>& samples, std::size_t d) {
    return covariate_sd(samples, d) * std::pow(static_cast<double>(samples.size()), -0.2);
}

using Counts = std::vector<std::uint32_t>;

/// Resampling multiplicities for replicate b.
Counts bootstrap_counts(std::size_t n, std::uint64_t seed, std::size_t b) {
    Counts counts(n, 0);
    RngStream rng(seed, b, RngStream::Domain::resampling);
    for (std::size_t i = 0; i < n; ++i) {
        const auto j = std::min(n - 1, static_cast<std::size_t>(rng.uniform() * static_cast<double>(n)));
        ++counts[j];
    }
    return counts;
}

template <class Estimator>
double bootstrap_se(std::size_t n, std::size_t replicates, std::uint64_t seed, unsigned threads, Estimator&& est) {
    if (replicates < 2) return 0.0;
    std::vector<double> values(replicates, std::nan(""));
    parallel_for(replicates, threads, [&](std::size_t b) {
        const Counts counts = bootstrap_counts(n, seed, b);
        values[b] = est(&counts);
    });
    RunningStats st;
    for (double v : values) {
        if (std::isfinite(v)) st.add(v);
    }
    return std::sqrt(st.variance());
}

double weight_of(const Counts* counts, std::size_t i) { return counts ? static_cast<double>((*counts)[i]) : 1.0; }

} // namespace

double AssignmentMechanism::propensity(const std::vector<double>& w) const {
    switch (kind) {
    case Kind::randomized: return probability;
    case Kind::unconfounded: {
        const double p = 1.0 / (1.0 + std::exp(-(intercept + slope * w.at(0))));
        return std::clamp(p, epsilon, 1.0 - epsilon);
    }
    case Kind::cutoff: return w.at(0) < cutoff ? below : above;
    }
    return probability;
}

std::vector<std::string> AssignmentMechanism::check() const {
    std::vector<std::string> out;
    auto prob = [&](double p, const char* name) {
        if (!(p >= 0.0 && p <= 1.0)) out.push_back(std::string(name) + " must lie in [0, 1]");
    };
    switch (kind) {
    case Kind::randomized: prob(probability, "assignment probability"); break;
    case Kind::unconfounded:
        if (!(epsilon > 0.0 && epsilon < 0.5)) out.emplace_back("propensity bound epsilon must lie in (0, 0.5)");
        break;
    case Kind::cutoff:
        prob(below, "propensity below the cutoff");
        prob(above, "propensity above the cutoff");
        if (below == above) out.emplace_back("cutoff mechanism needs a propensity jump at the cutoff");
        break;
    }
    return out;
}

double EffectModel::effect_at(const std::vector<double>& w) const {
    return effect + (w.empty() ? 0.0 : effect_slope * w[0]);
}

std::vector<TreatmentSample> simulate_intervention(const InterventionSettings& settings,
                                                   const AssignmentMechanism& mechanism, const EffectModel& effect) {
    if (auto issues = mechanism.check(); !issues.empty()) throw std::invalid_argument(issues.front());
    const auto& cov = settings.covariates;
    if (cov.dimension == 0) throw std::invalid_argument("covariate dimension must be >= 1");
    std::vector<TreatmentSample> out(settings.n_samples);
    parallel_for(settings.n_samples, settings.threads, [&](std::size_t i) {
        RngStream rng(settings.seed, i, RngStream::Domain::intervention);
        auto& s = out[i];
        s.covariates.resize(cov.dimension);
        for (auto& w : s.covariates) {
            w = cov.kind == CovariateModel::Kind::normal ? cov.mean + cov.sd * rng.normal()
                                                         : cov.low + (cov.high - cov.low) * rng.uniform();
        }
        s.treatment = rng.bernoulli(mechanism.propensity(s.covariates)) ? 1 : 0;
        double control = effect.intercept + effect.noise_sd * rng.normal();
        for (std::size_t d = 0; d < std::min(effect.slopes.size(), s.covariates.size()); ++d) {
            control += effect.slopes[d] * s.covariates[d];
        }
        s.outcome_control = control;
        s.outcome_treated = control + effect.effect_at(s.covariates);
        s.outcome = s.treatment ? *s.outcome_treated : control;
    });
    return out;
}

EffectEstimate cate_unconfounded(const std::vector<TreatmentSample>& samples, const std::vector<double>& w_query,
                                 const CateOptions& options) {
    if (samples.empty()) throw NoOverlap("no samples");
    const std::size_t dims = w_query.size();
    if (dims == 0 || samples.front().covariates.size() != dims) {
        throw std::invalid_argument("query point dimension does not match the covariates");
    }
    std::vector<double> bandwidth(dims);
    for (std::size_t d = 0; d < dims; ++d) {
        bandwidth[d] = options.bandwidth > 0.0 ? options.bandwidth : default_bandwidth(samples, d);
        if (!(bandwidth[d] > 0.0)) throw std::invalid_argument("bandwidth must be positive");
    }
    // Samples inside the kernel support, with their kernel weights.
    std::vector<std::size_t> local;
    std::vector<double> kernel;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        double k = 1.0;
        for (std::size_t d = 0; d < dims && k > 0.0; ++d) {
            const double x = std::abs(samples[i].covariates[d] - w_query[d]) / bandwidth[d];
            k = x < 1.0 ? (dims == 1 ? 1.0 - x : 1.0) : 0.0;
        }
        if (k > 0.0) {
            local.push_back(i);
            kernel.push_back(k);
        }
    }
    auto estimate = [&](const Counts* counts) {
        if (dims == 1) {
            LinearSums arm[2];
            for (std::size_t j = 0; j < local.size(); ++j) {
                const auto& s = samples[local[j]];
                const double w = kernel[j] * weight_of(counts, local[j]);
                if (w > 0.0) arm[s.treatment].add(s.covariates[0] - w_query[0], s.outcome, w);
            }
            return arm[1].intercept() - arm[0].intercept();
        }
        double sum[2] = {0.0, 0.0};
        double weight[2] = {0.0, 0.0};
        for (std::size_t j = 0; j < local.size(); ++j) {
            const auto& s = samples[local[j]];
            const double w = weight_of(counts, local[j]);
            sum[s.treatment] += w * s.outcome;
            weight[s.treatment] += w;
        }
        if (weight[0] < 3.0 || weight[1] < 3.0) return std::nan("");
        return sum[1] / weight[1] - sum[0] / weight[0];
    };
    EffectEstimate out;
    out.bandwidth = bandwidth[0];
    for (std::size_t i : local) ++(samples[i].treatment ? out.n_treated : out.n_control);
    out.estimate = estimate(nullptr);
    if (!std::isfinite(out.estimate)) throw NoOverlap("empty treatment arm near the query point");
    out.standard_error = bootstrap_se(samples.size(), options.bootstrap, options.seed, options.threads, estimate);
    return out;
}

RddEstimate rdd_cate(const std::vector<TreatmentSample>& samples, double cutoff, const RddOptions& options) {
    if (samples.empty()) throw NoDiscontinuity();
    const double h = options.bandwidth > 0.0 ? options.bandwidth : default_bandwidth(samples, 0);
    if (!(h > 0.0)) throw std::invalid_argument("bandwidth must be positive");
    std::vector<std::size_t> local;
    std::vector<double> kernel;
    // Sharp when treatment is constant on each side of the cutoff within the window.
    int side_value[2] = {-1, -1};
    bool sharp = true;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const double x = samples[i].covariates.at(0) - cutoff;
        if (std::abs(x) >= h) continue;
        local.push_back(i);
        kernel.push_back(1.0 - std::abs(x) / h);
        int& v = side_value[x >= 0.0 ? 1 : 0];
        if (v < 0) v = samples[i].treatment;
        sharp = sharp && v == samples[i].treatment;
    }
    sharp = sharp && side_value[0] >= 0 && side_value[1] >= 0;

    struct Jumps {
        double outcome;
        double treatment;
    };
    auto jumps = [&](const Counts* counts) {
        LinearSums o[2], a[2];
        for (std::size_t j = 0; j < local.size(); ++j) {
            const auto& s = samples[local[j]];
            const double w = kernel[j] * weight_of(counts, local[j]);
            if (w <= 0.0) continue;
            const double x = s.covariates[0] - cutoff;
            const int side = x >= 0.0 ? 1 : 0;
            o[side].add(x, s.outcome, w);
            a[side].add(x, static_cast<double>(s.treatment), w);
        }
        const double treatment =
            sharp ? static_cast<double>(side_value[1] - side_value[0]) : a[1].intercept() - a[0].intercept();
        return Jumps{o[1].intercept() - o[0].intercept(), treatment};
    };
    RddEstimate out;
    out.bandwidth = h;
    out.sharp = sharp;
    const Jumps point = jumps(nullptr);
    out.outcome_jump = point.outcome;
    out.treatment_jump = point.treatment;
    if (!std::isfinite(point.outcome) || !std::isfinite(point.treatment)) throw NoDiscontinuity();

    std::vector<Jumps> reps(options.bootstrap, Jumps{std::nan(""), std::nan("")});
    parallel_for(options.bootstrap, options.threads, [&](std::size_t b) {
        const Counts counts = bootstrap_counts(samples.size(), options.seed, b);
        reps[b] = jumps(&counts);
    });
    RunningStats so, sa, sr;
    for (const auto& r : reps) {
        if (!std::isfinite(r.outcome) || !std::isfinite(r.treatment)) continue;
        so.add(r.outcome);
        sa.add(r.treatment);
        if (r.treatment != 0.0) sr.add(r.outcome / r.treatment);
    }
    out.outcome_jump_se = std::sqrt(so.variance());
    out.treatment_jump_se = sharp ? 0.0 : std::sqrt(sa.variance());
    if (std::abs(out.treatment_jump) < options.min_jump ||
        std::abs(out.treatment_jump) < 3.0 * out.treatment_jump_se) {
        throw NoDiscontinuity();
    }
    out.estimate = sharp && out.treatment_jump == 1.0 ? out.outcome_jump : out.outcome_jump / out.treatment_jump;
    out.standard_error = std::sqrt(sr.variance());
    return out;
}

PositivityReport positivity_check(const std::vector<TreatmentSample>& samples, double epsilon, std::size_t n_bins) {
    PositivityReport report;
    report.epsilon = epsilon;
    if (samples.empty() || n_bins == 0) return report;
    std::vector<std::size_t> order(samples.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return samples[a].covariates.at(0) < samples[b].covariates.at(0);
    });
    const std::size_t n = samples.size();
    const std::size_t bins = std::min(n_bins, n);
    report.min_propensity = 1.0;
    report.max_propensity = 0.0;
    for (std::size_t j = 0; j < bins; ++j) {
        const std::size_t lo = n * j / bins;
        const std::size_t hi = n * (j + 1) / bins;
        PositivityBin bin;
        bin.low = samples[order[lo]].covariates[0];
        bin.high = samples[order[hi - 1]].covariates[0];
        bin.n = hi - lo;
        for (std::size_t i = lo; i < hi; ++i) bin.treated += static_cast<std::size_t>(samples[order[i]].treatment);
        bin.propensity = static_cast<double>(bin.treated) / static_cast<double>(bin.n);
        bin.flagged = bin.propensity < epsilon || bin.propensity > 1.0 - epsilon;
        report.flagged += bin.flagged ? 1 : 0;
        report.min_propensity = std::min(report.min_propensity, bin.propensity);
        report.max_propensity = std::max(report.max_propensity, bin.propensity);
        report.bins.push_back(bin);
    }
    return report;
}

void write_samples_csv(std::ostream& os, const std::vector<TreatmentSample>& samples) {
    const std::size_t dims = samples.empty() ? 1 : samples.front().covariates.size();
    for (std::size_t d = 0; d < dims; ++d) os << 'w' << d + 1 << ',';
    os << "A,O\n";
    os.precision(17);
    for (const auto& s : samples) {
        for (double w : s.covariates) os << w << ',';
        os << s.treatment << ',' << s.outcome << '\n';
    }
}

std::vector<TreatmentSample> read_samples_csv(std::istream& is) {
    std::vector<TreatmentSample> out;
    std::string line;
    std::size_t columns = 0;
    std::size_t line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        if (line.empty() || line.front() == '#') continue;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        for (std::string cell; std::getline(ss, cell, ',');) cells.push_back(cell);
        if (columns == 0) {
            columns = cells.size();
            if (columns < 3) throw std::runtime_error("samples line " + std::to_string(line_no) + ": need W, A, O columns");
            continue;
        }
        if (cells.size() != columns) {
            throw std::runtime_error("samples line " + std::to_string(line_no) + ": expected " +
                                     std::to_string(columns) + " columns");
        }
        TreatmentSample s;
        try {
            for (std::size_t d = 0; d + 2 < columns; ++d) s.covariates.push_back(std::stod(cells[d]));
            s.treatment = std::stoi(cells[columns - 2]);
            s.outcome = std::stod(cells[columns - 1]);
        } catch (const std::logic_error&) {
            throw std::runtime_error("samples line " + std::to_string(line_no) + ": not a number");
        }
        if (s.treatment != 0 && s.treatment != 1) {
            throw std::runtime_error("samples line " + std::to_string(line_no) + ": treatment must be 0 or 1");
        }
        out.push_back(std::move(s));
    }
    return out;
}

} // namespace lec
