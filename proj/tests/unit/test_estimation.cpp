#include <cmath>
#include <sstream>

#include "doctest.h"
#include "helpers.hpp"
#include "lec/estimation.hpp"
#include "lec/settlement.hpp"

using namespace lec;
using lec::test::classic_model;

namespace {

std::vector<ClaimRecord> simulate(const SemiMarkovModel& model, const SettlementModel& settlement, std::size_t n,
                                  std::uint64_t seed, double retirement = 30.0) {
    PolicySpec spec;
    spec.retirement_time = retirement;
    PortfolioSettings ps;
    ps.n_policies = n;
    ps.seed = seed;
    ps.threads = 8;
    return simulate_portfolio(model, settlement, spec, ps);
}

bool same(const OccurrenceExposure& a, const OccurrenceExposure& b) {
    if (a.hazards.size() != b.hazards.size()) return false;
    for (std::size_t h = 0; h < a.hazards.size(); ++h) {
        for (std::size_t c = 0; c < a.hazards[h].cells.size(); ++c) {
            const auto& x = a.hazards[h].cells[c];
            const auto& y = b.hazards[h].cells[c];
            if (x.rate != y.rate || x.exposure != y.exposure || x.occurrences != y.occurrences) return false;
        }
    }
    return true;
}

} // namespace

TEST_SUITE("estimation") {
    TEST_CASE("reporting delay: point mass at zero") {
        const auto records = simulate(classic_model(0.2, 0.3, 0.01, 0.01), SettlementModel{}, 500, 1);
        const auto est = estimate_reporting_delay(observe(records, 10.0));
        CHECK(est.n_claims > 0);
        CHECK(est.nonparametric().cdf(0.0) == 1.0);
        CHECK(est.nonparametric_mean() == 0.0);
        CHECK(est.exponential_mean == 0.0);
    }

    TEST_CASE("reporting delay: no claims") {
        ObservedPortfolio empty;
        empty.time = 3.0;
        CHECK_THROWS_AS(estimate_reporting_delay(empty), InsufficientData);
    }

    TEST_CASE("reporting delay: long window recovers the mean") {
        SettlementModel settlement;
        settlement.reporting_delay = ExponentialDelay{0.5};
        const auto records = simulate(classic_model(0.1, 0.5, 0.0, 0.0), settlement, 5000, 2);
        const auto est = estimate_reporting_delay(observe(records, 30.0));
        REQUIRE(est.n_claims > 10000);
        const double se = 0.5 / std::sqrt(static_cast<double>(est.n_claims));
        CHECK(std::abs(est.nonparametric_mean() - 0.5) < 3.0 * se);
        CHECK(std::abs(est.exponential_mean - 0.5) < 3.0 * est.exponential_mean_se);
        const auto cdf = est.nonparametric();
        for (double x = 0.0; x < 5.0; x += 0.1) CHECK(cdf.cdf(x) <= cdf.cdf(x + 0.1));
    }

    TEST_CASE("reporting delay: short window needs the truncation adjustment") {
        SettlementModel settlement;
        settlement.reporting_delay = ExponentialDelay{0.5};
        const auto obs = observe(simulate(classic_model(0.5, 0.0, 0.0, 0.0), settlement, 30000, 3), 1.0);
        const auto raw = estimate_reporting_delay(obs, false);
        const auto adjusted = estimate_reporting_delay(obs, true);
        CHECK_FALSE(raw.truncation_adjusted);
        const double se = 0.5 / std::sqrt(static_cast<double>(raw.n_claims));
        CHECK(raw.nonparametric_mean() < 0.5 - 10.0 * se);
        CHECK(std::abs(adjusted.exponential_mean - 0.5) < 3.0 * adjusted.exponential_mean_se);
        CHECK(adjusted.nonparametric_mean() > raw.nonparametric_mean());
    }

    TEST_CASE("award probability") {
        SettlementModel all;
        const auto awarded = estimate_award_probabilities(observe(simulate(classic_model(0.2, 0.3, 0, 0), all, 300, 4), 30.0));
        CHECK(awarded.p_award == 1.0);

        SettlementModel partial;
        partial.award_prob = 0.8;
        partial.adjudication_delay = ExponentialDelay{0.3};
        const auto obs = observe(simulate(classic_model(0.1, 0.5, 0.0, 0.0), partial, 4000, 5), 30.0);
        const auto est = estimate_award_probabilities(obs);
        REQUIRE(est.resolved_claims > 10000);
        const double se = std::sqrt(0.8 * 0.2 / static_cast<double>(est.resolved_claims));
        CHECK(std::abs(est.p_award - 0.8) < 3.0 * se);
        CHECK(est.p_award_se == doctest::Approx(se).epsilon(0.05));

        // Without recoveries or wrongful stops there are no terminations at all.
        const auto permanent = estimate_award_probabilities(
            observe(simulate(classic_model(0.1, 0.0, 0.0, 0.01), partial, 500, 12), 30.0));
        CHECK_FALSE(permanent.reaward.has_value());
        CHECK_THROWS_AS(permanent.reaward_probability(1.0), InsufficientData);

        ObservedPortfolio empty;
        empty.time = 1.0;
        CHECK_THROWS_AS(estimate_award_probabilities(empty), InsufficientData);
    }

    TEST_CASE("reaward model") {
        SettlementModel settlement;
        settlement.termination_hazard = 0.2;
        settlement.reaward_prob = 0.5;
        settlement.reapplication_delay = ExponentialDelay{0.4};
        const auto obs = observe(simulate(classic_model(0.1, 0.2, 0.0, 0.0), settlement, 4000, 6), 30.0);
        const auto est = estimate_award_probabilities(obs);
        REQUIRE(est.reaward.has_value());
        // Terminations: wrongful at 0.2 against recoveries at 0.2, half of the wrongful ones reawarded.
        const auto& m = *est.reaward;
        CHECK(std::abs(m.eventual - 0.25) < 3.0 * m.eventual_se);
        CHECK(m.probability(0.0) == doctest::Approx(m.eventual));
        CHECK(m.probability(1.0) < m.probability(0.5));
        CHECK(est.reaward_probability(0.5) == m.probability(0.5));
    }

    TEST_CASE("no events gives zero hazards") {
        ObservedPortfolio quiet;
        quiet.time = 5.0;
        for (std::uint64_t i = 0; i < 10; ++i) quiet.policies.push_back(ObservedPolicy{i});
        const auto naive = naive_occurrence_exposure(quiet, StateSpace::classic());
        const auto& inc = naive.hazard(0, 1);
        CHECK(inc.cells[0].rate == 0.0);
        CHECK(inc.cells[0].exposure == doctest::Approx(50.0));
        CHECK(naive.hazard(1, 0).cells[0].flagged);
    }

    TEST_CASE("zero delays and certain awards: corrected equals naive") {
        const auto model = classic_model(0.1, 0.3, 0.01, 0.02);
        const auto obs = observe(simulate(model, SettlementModel{}, 3000, 7), 5.0);
        const auto awards = estimate_award_probabilities(obs);
        REQUIRE(awards.p_award == 1.0);
        REQUIRE(awards.reaward->eventual == 0.0);
        EstimationGrid grid{{0.0, 1.0, 2.5}, {0.0, 0.5, 2.0}};
        const auto naive = naive_occurrence_exposure(obs, model.space, grid, 4);
        const auto corrected = corrected_occurrence_exposure(obs, model.space, ZeroDelay{}, awards, grid, 4);
        CHECK(same(naive, corrected));
    }

    TEST_CASE("corrected incidence removes the reporting-delay bias") {
        const auto model = classic_model(0.05, 0.0, 0.0, 0.0);
        SettlementModel settlement;
        settlement.reporting_delay = ExponentialDelay{0.5};
        const auto obs = observe(simulate(model, settlement, 50000, 8), 3.0);
        const auto awards = estimate_award_probabilities(obs);
        const auto delay = estimate_reporting_delay(obs);
        const auto naive = naive_occurrence_exposure(obs, model.space);
        const auto corrected = corrected_occurrence_exposure(obs, model.space, delay.nonparametric(), awards);
        const auto& c = corrected.hazard(0, 1).cells[0];
        const auto& n = naive.hazard(0, 1).cells[0];
        CHECK(std::abs(c.rate - 0.05) < 3.0 * c.standard_error);
        CHECK(n.rate < 0.05 - 3.0 * n.standard_error);
        CHECK(c.rate >= n.rate);
        CHECK(c.exposure <= n.exposure);

        // Parallel and serial runs agree bit for bit.
        const auto serial = corrected_occurrence_exposure(obs, model.space, delay.nonparametric(), awards, {}, 1);
        const auto parallel = corrected_occurrence_exposure(obs, model.space, delay.nonparametric(), awards, {}, 8);
        CHECK(same(serial, parallel));
    }

    TEST_CASE("corrected recovery discounts terminations that may still be reawarded") {
        const auto model = classic_model(0.5, 0.2, 0.0, 0.0);
        SettlementModel settlement;
        settlement.termination_hazard = 0.1;
        settlement.reaward_prob = 0.3;
        settlement.reapplication_delay = ExponentialDelay{1.0};
        const auto records = simulate(model, settlement, 50000, 9);
        const auto awards = estimate_award_probabilities(observe(records, 20.0), 5.0);
        const auto obs = observe(records, 2.0);
        const auto naive = naive_occurrence_exposure(obs, model.space);
        const auto corrected = corrected_occurrence_exposure(obs, model.space, ZeroDelay{}, awards);
        const auto& c = corrected.hazard(1, 0).cells[0];
        const auto& n = naive.hazard(1, 0).cells[0];
        // Benefit stops that stay permanent act as exits: 0.2 + 0.1 * (1 - 0.3).
        CHECK(std::abs(c.rate - 0.27) < 3.0 * c.standard_error);
        CHECK(n.rate > c.rate + 3.0 * c.standard_error);
    }

    TEST_CASE("zero-exposure cells are flagged and filled") {
        const auto model = classic_model(0.1, 0.3, 0.01, 0.02);
        const auto obs = observe(simulate(model, SettlementModel{}, 500, 10), 5.0);
        EstimationGrid grid{{0.0, 2.0, 20.0}, {0.0}};
        const auto naive = naive_occurrence_exposure(obs, model.space, grid);
        const auto& inc = naive.hazard(0, 1);
        REQUIRE(inc.cells.size() == 3);
        CHECK(inc.cells[2].flagged);
        CHECK(inc.cells[2].exposure == 0.0);
        CHECK(inc.cells[2].rate == inc.cells[1].rate);
        CHECK_FALSE(inc.cells[1].flagged);
        CHECK(inc.cell(25.0, 0.0).flagged);
        CHECK(inc.intensity()(25.0, 0.0) == inc.cells[1].rate);
        CHECK(validate_model(naive.model()).empty());
    }

    TEST_CASE("CSV outputs") {
        const auto model = classic_model(0.1, 0.3, 0.01, 0.02);
        SettlementModel settlement;
        settlement.reporting_delay = ExponentialDelay{0.2};
        const auto obs = observe(simulate(model, settlement, 300, 11), 5.0);
        const auto naive = naive_occurrence_exposure(obs, model.space);
        const auto corrected = corrected_occurrence_exposure(obs, model.space, ExponentialDelay{0.2},
                                                             estimate_award_probabilities(obs));
        std::ostringstream os;
        write_estimates_csv(os, naive, corrected);
        CHECK(os.str().rfind("from,to,t_start,u_start,", 0) == 0);
        std::ostringstream ds;
        write_delay_csv(ds, estimate_reporting_delay(obs));
        CHECK(ds.str().rfind("delay,cdf\n", 0) == 0);
    }
}
