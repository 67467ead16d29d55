#include "commands.hpp"

#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "json.hpp"
#include "lec/estimation.hpp"
#include "lec/io.hpp"
#include "lec/numeric.hpp"
#include "lec/prevention.hpp"
#include "lec/reserves.hpp"
#include "lec/settlement.hpp"
#include "lec/version.hpp"

namespace lec::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

int guarded(std::ostream& err, const std::function<int()>& body) {
    try {
        return body();
    } catch (const InsufficientData& e) {
        err << "insufficient data: " << e.what() << '\n';
        return insufficient_data;
    } catch (const ConfigError& e) {
        err << "invalid input: " << e.what() << '\n';
        return validation_failure;
    } catch (const std::invalid_argument& e) {
        err << "invalid input: " << e.what() << '\n';
        return validation_failure;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return validation_failure;
    }
}

ScenarioConfig load(const CommandOptions& opts) {
    auto cfg = load_config(opts.config);
    if (opts.seed) cfg.set_seed(*opts.seed);
    return cfg;
}

fs::path output_dir(const CommandOptions& opts, const ScenarioConfig& cfg) {
    const fs::path dir = opts.out ? *opts.out : fs::path(cfg.output_dir);
    fs::create_directories(dir);
    return dir;
}

std::ofstream open_output(const fs::path& path) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("cannot write " + path.string());
    return os;
}

void write_json(const fs::path& path, const json& j) { open_output(path) << j.dump(2) << '\n'; }

std::string csv_banner(const ScenarioConfig& cfg) {
    return "# engine=" + std::string(kEngineVersion) + " config_hash=" + cfg.hash + "\n";
}

json stamp(const ScenarioConfig& cfg) { return {{"engine", std::string(kEngineVersion)}, {"config_hash", cfg.hash}}; }

/// The model the simulation runs on: parametric rates discretized, incidence cut at coverage end.
SemiMarkovModel effective_model(const ScenarioConfig& cfg) {
    SemiMarkovModel m = cfg.model;
    const double horizon = cfg.policy.retirement_time;
    if (!m.piecewise_constant()) m = discretize(m, cfg.simulation.step, horizon, horizon);
    if (std::isfinite(cfg.policy.coverage_period)) {
        m = restrict_coverage(m, cfg.policy.coverage_period, cfg.simulation.step);
    }
    return m;
}

double analysis_time(const CommandOptions& opts, const ScenarioConfig& cfg) {
    if (opts.time) return *opts.time;
    if (!cfg.analysis_times.empty()) return cfg.analysis_times.front();
    throw ConfigError("analysis time missing: pass --time or set analysis_times");
}

std::vector<ClaimRecord> load_portfolio(const CommandOptions& opts, const ScenarioConfig& cfg, std::ostream& err) {
    const fs::path path = opts.portfolio ? *opts.portfolio : output_dir(opts, cfg) / "claims.ndjson";
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open portfolio " + path.string());
    RecordFileHeader header;
    auto records = read_records_ndjson(in, &header);
    if (!header.state_space.empty() && header.state_space != cfg.model.space.name()) {
        throw ConfigError("portfolio state space '" + header.state_space + "' does not match the model");
    }
    if (!header.config_hash.empty() && header.config_hash != cfg.hash) {
        err << "warning: portfolio was simulated with config " << header.config_hash << '\n';
    }
    return records;
}

std::optional<TransitionIntensity> find_intensity(const SemiMarkovModel& m, State from, State to) {
    for (const auto& ti : m.intensities) {
        if (ti.from == from && ti.to == to) return ti;
    }
    return std::nullopt;
}

int run_simulate(const CommandOptions& opts, std::ostream& out, std::ostream& err) {
    (void)err;
    auto cfg = load(opts);
    if (!cfg.simulation.seed) throw ConfigError("simulate needs a seed: set simulation.seed or pass --seed");
    const auto model = effective_model(cfg);
    PortfolioSettings settings;
    settings.n_policies = cfg.simulation.n_policies;
    settings.seed = *cfg.simulation.seed;
    settings.threads = opts.threads;
    settings.inception_ages = cfg.simulation.inception_ages;
    const auto records = simulate_portfolio(model, cfg.settlement, cfg.policy, settings);
    const auto dir = output_dir(opts, cfg);

    {
        auto os = open_output(dir / "claims.ndjson");
        write_records_ndjson(os, records, model.space, cfg.hash);
    }
    std::vector<double> times{0.0};
    for (double t : cfg.analysis_times) times.push_back(t);
    std::vector<std::vector<double>> pv(times.size(), std::vector<double>(records.size(), 0.0));
    parallel_for(records.size(), opts.threads, [&](std::size_t i) {
        for (std::size_t k = 0; k < times.size(); ++k) {
            pv[k][i] = ground_truth_present_value(records[i], cfg.policy, cfg.discount, times[k]);
        }
    });
    {
        auto os = open_output(dir / "ground_truth.csv");
        os << csv_banner(cfg) << "policy_id,inception_age,death_time,claims,awards";
        for (double t : times) os << ",pv_t" << t;
        os << '\n' << std::setprecision(12);
        for (std::size_t i = 0; i < records.size(); ++i) {
            const auto& r = records[i];
            std::size_t awards = 0;
            for (const auto& e : r.events) awards += e.decision == Decision::award ? 1 : 0;
            os << r.policy_id << ',' << r.inception_age << ',';
            if (r.death_time) os << *r.death_time;
            os << ',' << r.claims.size() << ',' << awards;
            for (std::size_t k = 0; k < times.size(); ++k) os << ',' << pv[k][i];
            os << '\n';
        }
    }
    std::size_t claims = 0, eligible = 0, first_decisions = 0, first_awards = 0;
    std::map<std::string, std::size_t> decisions;
    for (const auto& r : records) {
        claims += r.claims.size();
        for (const auto& c : r.claims) {
            eligible += c.eligible ? 1 : 0;
            for (const auto& e : r.events) {
                if (e.claim != c.id) continue;
                if (c.eligible && (e.decision == Decision::award || e.decision == Decision::reject)) {
                    ++first_decisions;
                    first_awards += e.decision == Decision::award ? 1 : 0;
                }
                break;
            }
        }
        for (const auto& e : r.events) ++decisions[std::string(to_string(e.decision))];
    }
    json summary = stamp(cfg);
    summary["seed"] = *cfg.simulation.seed;
    summary["n_policies"] = records.size();
    summary["claims"] = claims;
    summary["eligible_claims"] = eligible;
    summary["decisions"] = decisions;
    summary["eligible_first_decision_award_fraction"] =
        first_decisions ? json(static_cast<double>(first_awards) / static_cast<double>(first_decisions)) : json(nullptr);
    json totals = json::array();
    for (std::size_t k = 0; k < times.size(); ++k) {
        totals.push_back({{"time", times[k]}, {"total_present_value", pairwise_sum(pv[k])}});
    }
    summary["ground_truth"] = totals;
    write_json(dir / "summary.json", summary);
    out << "simulated " << records.size() << " policies into " << dir.string() << '\n';
    return success;
}

int run_reserve(const CommandOptions& opts, std::ostream& out, std::ostream& err) {
    auto cfg = load(opts);
    const double t = analysis_time(opts, cfg);
    const auto records = load_portfolio(opts, cfg, err);
    const auto portfolio = observe(records, t);
    std::vector<std::uint64_t> bad;
    for (const auto& p : portfolio.policies) {
        try {
            classify(p, t, cfg.policy.retirement_time);
        } catch (const UnclassifiableRecord& e) {
            bad.push_back(e.policy_id);
        }
    }
    if (!bad.empty()) {
        err << "unclassifiable records:";
        for (auto id : bad) err << ' ' << id;
        err << '\n';
        return validation_failure;
    }

    SemiMarkovModel model = effective_model(cfg);
    ReserveInputs inputs;
    inputs.threads = opts.threads;
    inputs.reporting_delay = cfg.settlement.reporting_delay;
    const auto& settlement = cfg.settlement;
    std::optional<AwardModels> awards;
    if (cfg.reserve.parameters == "estimated") {
        const auto delay = estimate_reporting_delay(portfolio);
        inputs.reporting_delay =
            cfg.estimation.delay_method == "exponential" ? delay.exponential() : delay.nonparametric();
        awards = estimate_award_probabilities(portfolio, cfg.reserve.resolution_window);
        model = corrected_occurrence_exposure(portfolio, cfg.model.space, inputs.reporting_delay, *awards,
                                              cfg.estimation.grid, opts.threads)
                    .model();
        const double p_award = awards->p_award;
        inputs.p_award = [p_award](const ClaimSnapshot&) { return p_award; };
        inputs.p_reaward = [&awards](const ClaimSnapshot& s) { return awards->reaward_probability(s.elapsed); };
    } else {
        inputs.p_award = [&settlement, &model](const ClaimSnapshot& s) {
            return pending_award_probability(model, settlement, s.eligibility_start, 0.0);
        };
        inputs.p_reaward = [&settlement, &model](const ClaimSnapshot& s) {
            const double prior = wrongful_termination_prior(model, settlement, s.eligibility_start, s.duration);
            return settlement.reaward_probability(prior, s.elapsed);
        };
    }
    const State active = model.space.active();
    const State disabled = model.space.disabled();
    inputs.incidence = find_intensity(model, active, disabled).value_or(TransitionIntensity{active, disabled, {}});
    const auto surface = classic_reserves(model, cfg.policy, cfg.discount, cfg.reserve.step);
    inputs.surface = &surface;
    const auto result = portfolio_reserve(portfolio, inputs);

    json report = stamp(cfg);
    std::ostringstream settings;
    settings << std::setprecision(17) << cfg.hash << "|t=" << t << "|parameters=" << cfg.reserve.parameters
             << "|step=" << cfg.reserve.step;
    report["settings_hash"] = fnv1a_hex(settings.str());
    report["time"] = t;
    report["total"] = result.total;
    report["active_value"] = surface.active(t);
    json counts = json::object();
    json totals = json::object();
    for (std::size_t c = 0; c < result.case_counts.size(); ++c) {
        const auto name = std::string(to_string(static_cast<ReserveCase>(c)));
        counts[name] = result.case_counts[c];
        std::vector<double> values;
        for (const auto& p : result.policies) {
            if (static_cast<std::size_t>(p.snapshot.kind) == c) values.push_back(p.result.value);
        }
        totals[name] = pairwise_sum(values);
    }
    report["case_counts"] = counts;
    report["case_totals"] = totals;
    report["multi_claim_policies"] = result.multi_claim_policies;
    if (awards) report["estimated_award_probability"] = awards->p_award;
    json per_policy = json::array();
    for (const auto& p : result.policies) {
        json terms = json::object();
        for (const auto& term : p.result.terms) terms[term.label] = term.value;
        per_policy.push_back({{"id", p.snapshot.policy_id},
                              {"case", std::string(to_string(p.snapshot.kind))},
                              {"value", p.result.value},
                              {"decomposition", terms},
                              {"multiple_claims", p.snapshot.multiple_claims}});
    }
    report["per_policy"] = per_policy;
    const auto dir = output_dir(opts, cfg);
    write_json(dir / "reserve.json", report);
    {
        auto os = open_output(dir / "surface_disabled.csv");
        os << csv_banner(cfg);
        write_surface_csv(os, surface, disabled);
    }
    out << "reserve at t=" << t << ": " << std::setprecision(12) << result.total << '\n';
    return success;
}

int run_estimate(const CommandOptions& opts, std::ostream& out, std::ostream& err) {
    auto cfg = load(opts);
    const double t = analysis_time(opts, cfg);
    const auto portfolio = observe(load_portfolio(opts, cfg, err), t);
    const auto delay = estimate_reporting_delay(portfolio);
    const auto delay_dist = cfg.estimation.delay_method == "exponential" ? delay.exponential() : delay.nonparametric();
    const auto awards = estimate_award_probabilities(portfolio, cfg.estimation.resolution_window);
    const auto& space = cfg.model.space;
    const auto naive = naive_occurrence_exposure(portfolio, space, cfg.estimation.grid, opts.threads);
    const auto corrected =
        corrected_occurrence_exposure(portfolio, space, delay_dist, awards, cfg.estimation.grid, opts.threads);

    const auto dir = output_dir(opts, cfg);
    {
        auto os = open_output(dir / "estimates.csv");
        os << csv_banner(cfg);
        write_estimates_csv(os, naive, corrected);
    }
    {
        auto os = open_output(dir / "delay.csv");
        os << csv_banner(cfg);
        write_delay_csv(os, delay);
    }
    open_output(dir / "estimated_model.json") << model_to_json(corrected.model(), cfg.hash);
    json summary = stamp(cfg);
    summary["time"] = t;
    summary["reporting_delay"] = {{"claims", delay.n_claims},
                                  {"method", cfg.estimation.delay_method},
                                  {"nonparametric_mean", delay.nonparametric_mean()},
                                  {"exponential_mean", delay.exponential_mean},
                                  {"exponential_mean_se", delay.exponential_mean_se}};
    summary["award_probability"] = {
        {"estimate", awards.p_award}, {"standard_error", awards.p_award_se}, {"resolved_claims", awards.resolved_claims}};
    if (awards.reaward) {
        summary["reaward"] = {{"eventual", awards.reaward->eventual},
                              {"standard_error", awards.reaward->eventual_se},
                              {"terminations", awards.reaward->terminations}};
    } else {
        summary["reaward"] = nullptr;
    }
    write_json(dir / "estimation.json", summary);
    out << "estimated " << corrected.hazards.size() << " transitions at t=" << t << '\n';
    return success;
}

int run_evaluate(const CommandOptions& opts, std::ostream& out, std::ostream& err) {
    (void)err;
    auto cfg = load(opts);
    auto& iv = cfg.intervention;
    const auto dir = output_dir(opts, cfg);
    std::vector<TreatmentSample> samples;
    bool simulated = false;
    if (opts.samples) {
        std::ifstream in(*opts.samples, std::ios::binary);
        if (!in) throw ConfigError("cannot open samples " + opts.samples->string());
        samples = read_samples_csv(in);
    } else {
        if (!cfg.simulation.seed && !opts.seed) throw ConfigError("evaluate needs a seed to simulate samples");
        auto settings = iv.settings;
        settings.threads = opts.threads;
        samples = simulate_intervention(settings, iv.mechanism, iv.effect);
        simulated = true;
        auto os = open_output(dir / "samples.csv");
        os << csv_banner(cfg);
        write_samples_csv(os, samples);
    }
    const auto positivity = positivity_check(samples, iv.epsilon);
    json report = stamp(cfg);
    report["n_samples"] = samples.size();
    json bins = json::array();
    for (const auto& b : positivity.bins) {
        bins.push_back({{"low", b.low}, {"high", b.high}, {"n", b.n}, {"treated", b.treated},
                        {"propensity", b.propensity}, {"flagged", b.flagged}});
    }
    report["positivity"] = {{"epsilon", positivity.epsilon},     {"passed", positivity.passed()},
                            {"flagged_bins", positivity.flagged}, {"min_propensity", positivity.min_propensity},
                            {"max_propensity", positivity.max_propensity}, {"bins", bins}};
    json warnings = json::array();
    const bool cutoff_design = simulated && iv.mechanism.kind == AssignmentMechanism::Kind::cutoff;
    if (cutoff_design && !iv.rdd) {
        warnings.push_back("cutoff assignment without rdd: the unconfounded CATE is invalid near the cutoff");
    }
    if (!positivity.passed()) warnings.push_back("positivity check failed: propensity outside [epsilon, 1 - epsilon]");

    CateOptions cate_opts;
    cate_opts.bandwidth = iv.bandwidth;
    cate_opts.bootstrap = iv.bootstrap;
    cate_opts.seed = iv.settings.seed;
    cate_opts.threads = opts.threads;
    json cate = json::array();
    for (const auto& w : iv.query_points) {
        try {
            const auto e = cate_unconfounded(samples, w, cate_opts);
            cate.push_back({{"w", w}, {"estimate", e.estimate}, {"standard_error", e.standard_error},
                            {"bandwidth", e.bandwidth}, {"n_treated", e.n_treated}, {"n_control", e.n_control}});
        } catch (const NoOverlap& e) {
            cate.push_back({{"w", w}, {"error", e.what()}});
        }
    }
    report["cate"] = cate;
    int code = success;
    if (iv.rdd) {
        RddOptions rdd_opts;
        rdd_opts.bandwidth = iv.bandwidth;
        rdd_opts.min_jump = iv.min_jump;
        rdd_opts.bootstrap = iv.bootstrap;
        rdd_opts.seed = iv.settings.seed;
        rdd_opts.threads = opts.threads;
        try {
            const auto r = rdd_cate(samples, iv.rdd_cutoff, rdd_opts);
            report["rdd"] = {{"cutoff", iv.rdd_cutoff},
                             {"estimate", r.estimate},
                             {"standard_error", r.standard_error},
                             {"outcome_jump", r.outcome_jump},
                             {"outcome_jump_se", r.outcome_jump_se},
                             {"treatment_jump", r.treatment_jump},
                             {"treatment_jump_se", r.treatment_jump_se},
                             {"bandwidth", r.bandwidth},
                             {"sharp", r.sharp}};
        } catch (const NoDiscontinuity& e) {
            report["rdd"] = {{"cutoff", iv.rdd_cutoff}, {"error", e.what()}};
            err << "insufficient data: " << e.what() << '\n';
            code = insufficient_data;
        }
    }
    report["warnings"] = warnings;
    write_json(dir / "effect.json", report);
    for (const auto& w : warnings) err << "warning: " << w.get<std::string>() << '\n';
    out << "evaluated " << samples.size() << " samples\n";
    return code;
}

int run_validate(const CommandOptions& opts, std::ostream& out, std::ostream& err) {
    const auto cfg = load(opts);
    if (opts.portfolio) {
        const auto records = load_portfolio(opts, cfg, err);
        std::size_t bad = 0;
        for (const auto& r : records) {
            for (const auto& issue : r.check(cfg.model.space, cfg.policy.retirement_time)) {
                err << "policy " << r.policy_id << ": " << issue << '\n';
                ++bad;
            }
        }
        if (bad) return validation_failure;
        out << "portfolio OK (" << records.size() << " records)\n";
    }
    out << "config OK (hash " << cfg.hash << ")\n";
    return success;
}

} // namespace

int validate(const CommandOptions& opts, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] { return run_validate(opts, out, err); });
}
int simulate(const CommandOptions& opts, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] { return run_simulate(opts, out, err); });
}
int reserve(const CommandOptions& opts, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] { return run_reserve(opts, out, err); });
}
int estimate(const CommandOptions& opts, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] { return run_estimate(opts, out, err); });
}
int evaluate(const CommandOptions& opts, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] { return run_evaluate(opts, out, err); });
}

} // namespace lec::cli
