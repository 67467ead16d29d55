#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "lec/claim.hpp"
#include "lec/discount.hpp"
#include "lec/estimation.hpp"
#include "lec/multistate.hpp"
#include "lec/payments.hpp"
#include "lec/prevention.hpp"
#include "lec/settlement.hpp"

namespace lec {

/// Invalid configuration or input file. `line` is 1-based, 0 when unknown.
struct ConfigError : std::runtime_error {
    std::size_t line = 0;
    ConfigError(const std::string& what, std::size_t line_no = 0);
};

/// FNV-1a 64-bit digest as 16 hex digits.
std::string fnv1a_hex(std::string_view bytes);

SemiMarkovModel parse_model(std::string_view json_text);
SemiMarkovModel load_model(const std::filesystem::path& path);
/// Reloadable with parse_model. A non-empty hash adds engine version and config hash metadata.
std::string model_to_json(const SemiMarkovModel& model, const std::string& config_hash = {});

struct SimulationConfig {
    std::size_t n_policies = 0;
    std::optional<std::uint64_t> seed;
    std::vector<double> inception_ages{40.0};
    /// Step for discretizing parametric intensities and the coverage cut-off.
    double step = 0.05;
};

struct ReserveConfig {
    double step = 0.1;
    /// "config": true model and settlement parameters; "estimated": two-step estimates from the data.
    std::string parameters = "config";
    double resolution_window = 2.0;
};

struct EstimationConfig {
    EstimationGrid grid;
    /// "nonparametric" or "exponential".
    std::string delay_method = "nonparametric";
    double resolution_window = 2.0;
};

struct InterventionConfig {
    InterventionSettings settings;
    AssignmentMechanism mechanism;
    EffectModel effect;
    std::vector<std::vector<double>> query_points{{0.0}};
    double epsilon = 0.05;
    std::size_t bootstrap = 200;
    double bandwidth = 0.0;
    bool rdd = false;
    double rdd_cutoff = 0.0;
    double min_jump = 0.1;
};

struct ScenarioConfig {
    SemiMarkovModel model;
    PolicySpec policy;
    SettlementModel settlement;
    DiscountCurve discount;
    SimulationConfig simulation;
    ReserveConfig reserve;
    EstimationConfig estimation;
    InterventionConfig intervention;
    std::vector<double> analysis_times;
    std::string output_dir = "out";
    /// Key-sorted configuration text and its digest.
    std::string canonical;
    std::string hash;

    /// Overrides the simulation and intervention seeds and refreshes the digest.
    void set_seed(std::uint64_t seed);
};

/// Throws ConfigError carrying the line of the offending entry.
ScenarioConfig parse_config(std::string_view json_text, const std::filesystem::path& base_dir = {});
ScenarioConfig load_config(const std::filesystem::path& path);

struct RecordFileHeader {
    std::string engine;
    std::string config_hash;
    std::string state_space;
    std::size_t n_policies = 0;
};

void write_records_ndjson(std::ostream& os, const std::vector<ClaimRecord>& records, const StateSpace& space,
                          const std::string& config_hash);
/// Throws ConfigError with the line number of a malformed record.
std::vector<ClaimRecord> read_records_ndjson(std::istream& is, RecordFileHeader* header = nullptr);

} // namespace lec
