#include <filesystem>
#include <fstream>
#include <sstream>

#include "commands.hpp"
#include "doctest.h"
#include "json.hpp"
#include "lec/io.hpp"
#include "lec/version.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const char* kBase = R"({
  "model": {"state_space": "classic", "transitions": [
    {"from": "Active", "to": "Disabled", "rate": 0.05},
    {"from": "Disabled", "to": "Active", "rate": 0.2},
    {"from": "Active", "to": "Dead", "rate": 0.01},
    {"from": "Disabled", "to": "Dead", "rate": 0.01}]},
  "policy": {"benefit_rate": 100000, "retirement_time": 30},
  "settlement": {"reporting_delay": {"type": "exponential", "mean": 0.5},
                 "adjudication_delay": {"type": "exponential", "mean": 0.25},
                 "award_prob": 0.9, "termination_hazard": 0.05},
  "discount": {"rate": 0.02},
  "simulation": {"n_policies": 500, "seed": 7},
  "intervention": {"n_samples": 3000, "query_points": [0], "bootstrap": 20},
  "analysis_times": [5]
})";

struct Workspace {
    fs::path dir;
    explicit Workspace(const std::string& name) : dir(fs::temp_directory_path() / ("lec_cli_" + name)) {
        fs::remove_all(dir);
        fs::create_directories(dir);
    }
    ~Workspace() { fs::remove_all(dir); }

    fs::path write(const std::string& file, const std::string& text) const {
        std::ofstream(dir / file) << text;
        return dir / file;
    }
    lec::cli::CommandOptions options(const fs::path& config, const std::string& out) const {
        lec::cli::CommandOptions o;
        o.config = config;
        o.out = dir / out;
        o.threads = 2;
        return o;
    }
};

std::string replace(std::string text, const std::string& from, const std::string& to) {
    text.replace(text.find(from), from.size(), to);
    return text;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::size_t count_lines(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

} // namespace

TEST_SUITE("cli") {
    TEST_CASE("validate") {
        Workspace ws("validate");
        std::ostringstream out, err;
        CHECK(lec::cli::validate(ws.options(ws.write("ok.json", kBase), "o"), out, err) == lec::cli::success);
        const auto bad = ws.write("bad.json", replace(kBase, "\"award_prob\": 0.9", "\"award_prob\": 2"));
        CHECK(lec::cli::validate(ws.options(bad, "o"), out, err) == lec::cli::validation_failure);
        CHECK(err.str().find("line 10") != std::string::npos);
    }

    TEST_CASE("simulate needs a seed") {
        Workspace ws("seedless");
        const auto cfg = ws.write("c.json", replace(kBase, ", \"seed\": 7", ""));
        std::ostringstream out, err;
        CHECK(lec::cli::simulate(ws.options(cfg, "o"), out, err) == lec::cli::validation_failure);
        auto opts = ws.options(cfg, "o");
        opts.seed = 3;
        CHECK(lec::cli::simulate(opts, out, err) == lec::cli::success);
    }

    TEST_CASE("empty portfolio gives header-only outputs") {
        Workspace ws("empty");
        const auto cfg = ws.write("c.json", replace(kBase, "\"n_policies\": 500", "\"n_policies\": 0"));
        std::ostringstream out, err;
        REQUIRE(lec::cli::simulate(ws.options(cfg, "o"), out, err) == lec::cli::success);
        CHECK(count_lines(slurp(ws.dir / "o" / "claims.ndjson")) == 1);
        const auto truth = slurp(ws.dir / "o" / "ground_truth.csv");
        CHECK(count_lines(truth) == 2);
        CHECK(truth.rfind("# engine=" + std::string(lec::kEngineVersion), 0) == 0);
    }

    TEST_CASE("outputs are byte-identical across runs and stamped") {
        Workspace ws("determinism");
        const auto cfg = ws.write("c.json", kBase);
        const auto hash = lec::load_config(cfg).hash;
        for (const std::string run : {"a", "b"}) {
            std::ostringstream out, err;
            auto opts = ws.options(cfg, run);
            opts.threads = run == "a" ? 1 : 4;
            REQUIRE(lec::cli::simulate(opts, out, err) == 0);
            REQUIRE(lec::cli::reserve(opts, out, err) == 0);
            REQUIRE(lec::cli::estimate(opts, out, err) == 0);
            REQUIRE(lec::cli::evaluate(opts, out, err) == 0);
        }
        std::size_t files = 0;
        for (const auto& entry : fs::directory_iterator(ws.dir / "a")) {
            const auto name = entry.path().filename();
            const auto text = slurp(entry.path());
            CHECK_MESSAGE(text == slurp(ws.dir / "b" / name), name.string());
            CHECK_MESSAGE(text.find(hash) != std::string::npos, name.string());
            ++files;
        }
        CHECK(files >= 10);
    }

    TEST_CASE("reserve at time zero") {
        Workspace ws("reserve0");
        const auto cfg = ws.write("c.json", kBase);
        std::ostringstream out, err;
        auto opts = ws.options(cfg, "o");
        REQUIRE(lec::cli::simulate(opts, out, err) == 0);
        opts.time = 0.0;
        REQUIRE(lec::cli::reserve(opts, out, err) == 0);
        const auto report = json::parse(slurp(ws.dir / "o" / "reserve.json"));
        CHECK(report["total"].get<double>() ==
              doctest::Approx(500.0 * report["active_value"].get<double>()).epsilon(1e-12));
        CHECK(report["case_counts"]["active_ibnr"] == 500);
        CHECK(report["per_policy"].size() == 500);
    }

    TEST_CASE("unclassifiable records fail with their ids") {
        Workspace ws("unclassifiable");
        const auto cfg = ws.write("c.json", kBase);
        lec::ClaimRecord broken;
        broken.policy_id = 42;
        broken.payments = {{1.0, 5.0}};
        std::ostringstream records;
        lec::write_records_ndjson(records, {broken}, lec::StateSpace::classic(), "");
        auto opts = ws.options(cfg, "o");
        opts.portfolio = ws.write("bad.ndjson", records.str());
        opts.time = 3.0;
        std::ostringstream out, err;
        CHECK(lec::cli::reserve(opts, out, err) == lec::cli::validation_failure);
        CHECK(err.str().find("42") != std::string::npos);
    }

    TEST_CASE("estimation without claims is insufficient data") {
        Workspace ws("noclaims");
        const auto cfg = ws.write("c.json", replace(kBase, "\"to\": \"Disabled\", \"rate\": 0.05", "\"to\": \"Disabled\", \"rate\": 0"));
        std::ostringstream out, err;
        auto opts = ws.options(cfg, "o");
        REQUIRE(lec::cli::simulate(opts, out, err) == 0);
        CHECK(lec::cli::estimate(opts, out, err) == lec::cli::insufficient_data);
        CHECK(err.str().find("insufficient data") != std::string::npos);
    }

    TEST_CASE("evaluate warns about cutoff designs and rejects missing discontinuities") {
        Workspace ws("evaluate");
        const auto cutoff = ws.write(
            "cut.json", replace(kBase, "\"query_points\": [0]",
                                "\"query_points\": [0], \"mechanism\": {\"kind\": \"cutoff\", \"cutoff\": 0.5, "
                                "\"below\": 0.1, \"above\": 0.9}"));
        std::ostringstream out, err;
        REQUIRE(lec::cli::evaluate(ws.options(cutoff, "o"), out, err) == 0);
        const auto report = json::parse(slurp(ws.dir / "o" / "effect.json"));
        bool warned = false;
        for (const auto& w : report["warnings"]) warned |= w.get<std::string>().find("invalid near the cutoff") != std::string::npos;
        CHECK(warned);
        CHECK(report.contains("positivity"));

        const auto flat = ws.write("flat.json", replace(kBase, "\"query_points\": [0]",
                                                        "\"query_points\": [0], \"rdd\": {\"enabled\": true, \"cutoff\": 0.5}"));
        CHECK(lec::cli::evaluate(ws.options(flat, "p"), out, err) == lec::cli::insufficient_data);
        CHECK(err.str().find("no identifiable discontinuity") != std::string::npos);
    }
}
