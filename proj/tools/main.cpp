#include <iostream>

#include "CLI11.hpp"
#include "commands.hpp"

int main(int argc, char** argv) {
    CLI::App app{"lecsim: disability insurance simulation, reserving and estimation"};
    app.require_subcommand(1);
    lec::cli::CommandOptions opts;
    std::string config;
    std::uint64_t seed = 0;
    std::string out;
    double time = 0.0;
    std::string portfolio;
    std::string samples;

    auto add = [&](const char* name, const char* help) {
        auto* sub = app.add_subcommand(name, help);
        sub->add_option("--config", config, "Scenario config (JSON)")->required()->check(CLI::ExistingFile);
        sub->add_option("--seed", seed, "Seed, overrides the config");
        sub->add_option("--out", out, "Output directory, overrides the config");
        sub->add_option("--time", time, "Analysis time t (policy years)");
        sub->add_option("--threads", opts.threads, "Worker threads")->check(CLI::PositiveNumber);
        sub->add_option("--portfolio", portfolio, "Claim records (NDJSON)");
        sub->add_option("--samples", samples, "Treatment samples (CSV)");
        return sub;
    };
    auto* validate = add("validate", "Check a config (and optionally a portfolio file)");
    auto* simulate = add("simulate", "Simulate a portfolio of claim histories");
    auto* reserve = add("reserve", "Compute case reserves at an analysis time");
    auto* estimate = add("estimate", "Estimate hazards with naive and corrected occurrence-exposure");
    auto* evaluate = add("evaluate", "Estimate prevention effects");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : lec::cli::validation_failure;
    }
    opts.config = config;
    for (auto* sub : app.get_subcommands()) {
        if (sub->count("--seed")) opts.seed = seed;
        if (sub->count("--out")) opts.out = out;
        if (sub->count("--time")) opts.time = time;
        if (sub->count("--portfolio")) opts.portfolio = portfolio;
        if (sub->count("--samples")) opts.samples = samples;
    }
    if (validate->parsed()) return lec::cli::validate(opts, std::cout, std::cerr);
    if (simulate->parsed()) return lec::cli::simulate(opts, std::cout, std::cerr);
    if (reserve->parsed()) return lec::cli::reserve(opts, std::cout, std::cerr);
    if (estimate->parsed()) return lec::cli::estimate(opts, std::cout, std::cerr);
    if (evaluate->parsed()) return lec::cli::evaluate(opts, std::cout, std::cerr);
    return lec::cli::validation_failure;
}
