#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>

namespace lec::cli {

enum ExitCode : int { success = 0, validation_failure = 1, insufficient_data = 2 };

struct CommandOptions {
    std::filesystem::path config;
    std::optional<std::uint64_t> seed;
    std::optional<std::filesystem::path> out;
    std::optional<double> time;
    unsigned threads = 1;
    /// Claim records for reserve/estimate; defaults to <out>/claims.ndjson.
    std::optional<std::filesystem::path> portfolio;
    /// Treatment samples for evaluate; simulated from the config when absent.
    std::optional<std::filesystem::path> samples;
};

int validate(const CommandOptions& opts, std::ostream& out, std::ostream& err);
/// Writes claims.ndjson, ground_truth.csv and summary.json.
int simulate(const CommandOptions& opts, std::ostream& out, std::ostream& err);
/// Writes reserve.json and surface_disabled.csv.
int reserve(const CommandOptions& opts, std::ostream& out, std::ostream& err);
/// Writes estimates.csv, delay.csv, estimated_model.json and estimation.json.
int estimate(const CommandOptions& opts, std::ostream& out, std::ostream& err);
/// Writes effect.json (and samples.csv when simulating).
int evaluate(const CommandOptions& opts, std::ostream& out, std::ostream& err);

} // namespace lec::cli
