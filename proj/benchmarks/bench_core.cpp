#include <benchmark/benchmark.h>

#include "lec/multistate.hpp"
#include "lec/reserves.hpp"
#include "lec/settlement.hpp"

using namespace lec;

namespace {

SemiMarkovModel bench_model() {
    SemiMarkovModel m;
    m.space = StateSpace::classic();
    m.intensities = {{0, 1, ConstantRate{0.05}},
                     {1, 0, ExponentialDecay{0.8, 1.0, 0.05}},
                     {0, 2, ConstantRate{0.01}},
                     {1, 2, ConstantRate{0.01}}};
    return discretize(m, 0.05, 40.0, 40.0);
}

PolicySpec bench_spec() {
    PolicySpec spec;
    spec.benefit_rate = 100000.0;
    spec.retirement_time = 30.0;
    spec.deferred_period = 0.0;
    return spec;
}

void BM_ForwardSolve(benchmark::State& state) {
    const auto model = bench_model();
    const double step = 1.0 / static_cast<double>(state.range(0));
    for (auto _ : state)
        benchmark::DoNotOptimize(transition_probabilities(model, 0.0, model.space.active(), 0.0, 30.0, step));
}
BENCHMARK(BM_ForwardSolve)->Arg(10)->Arg(20)->Unit(benchmark::kMillisecond);

void BM_Thiele(benchmark::State& state) {
    const auto model = bench_model();
    const auto spec = bench_spec();
    const DiscountCurve curve(0.02);
    const double step = 1.0 / static_cast<double>(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(classic_reserves(model, spec, curve, step));
}
BENCHMARK(BM_Thiele)->Arg(10)->Arg(20)->Unit(benchmark::kMillisecond);

void BM_SamplePath(benchmark::State& state) {
    const auto model = bench_model();
    std::uint64_t i = 0;
    for (auto _ : state) {
        RngStream rng(1, i++, RngStream::Domain::biometric);
        benchmark::DoNotOptimize(sample_path(model, 0.0, model.space.active(), 0.0, 30.0, rng));
    }
}
BENCHMARK(BM_SamplePath);

void BM_SettlementPortfolio(benchmark::State& state) {
    const auto model = bench_model();
    const auto spec = bench_spec();
    SettlementModel settlement;
    settlement.reporting_delay = ExponentialDelay{0.5};
    settlement.adjudication_delay = ExponentialDelay{0.25};
    settlement.reapplication_delay = ExponentialDelay{0.5};
    settlement.award_prob = 0.8;
    settlement.termination_hazard = 0.1;
    settlement.reaward_prob = 0.5;
    PortfolioSettings ps;
    ps.n_policies = static_cast<std::size_t>(state.range(0));
    ps.seed = 3;
    for (auto _ : state) benchmark::DoNotOptimize(simulate_portfolio(model, settlement, spec, ps));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_SettlementPortfolio)->Arg(10000)->Unit(benchmark::kMillisecond);

} // namespace

BENCHMARK_MAIN();
