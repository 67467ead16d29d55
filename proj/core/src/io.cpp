#include "lec/io.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <set>
#include <sstream>

#include "json.hpp"

#include "lec/version.hpp"

namespace lec {

using nlohmann::json;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::size_t line_at(std::string_view text, std::size_t offset) {
    offset = std::min(offset, text.size());
    return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<long>(offset), '\n'));
}

/// Resolves a key path to the line of its last key by scanning for the quoted keys in order.
class Locator {
public:
    explicit Locator(std::string_view text) : text_(text) {}
    std::size_t line_of(const std::vector<std::string>& path) const {
        std::size_t pos = 0;
        bool found = false;
        for (const auto& key : path) {
            if (key.empty()) continue;
            if (key.front() == '[') {
                if (!found) continue;
                const auto hit = element_start(pos, std::stoul(key.substr(1)));
                if (hit == std::string_view::npos) break;
                pos = hit;
                continue;
            }
            const auto hit = text_.find('"' + key + '"', pos);
            if (hit == std::string_view::npos) break;
            pos = hit;
            found = true;
        }
        return found ? line_at(text_, pos) : 0;
    }

private:
    // Offset of element `index` of the first array opening after `from`.
    std::size_t element_start(std::size_t from, std::size_t index) const {
        auto pos = text_.find('[', from);
        if (pos == std::string_view::npos) return pos;
        std::size_t depth = 0;
        std::size_t count = 0;
        bool in_string = false;
        for (; pos < text_.size(); ++pos) {
            const char c = text_[pos];
            if (in_string) {
                if (c == '\\') ++pos;
                else if (c == '"') in_string = false;
                continue;
            }
            if (c == '"') in_string = true;
            if (c == '[' || c == '{') {
                if (++depth == 1) continue;
            } else if (c == ']' || c == '}') {
                if (--depth == 0) return std::string_view::npos;
            } else if (c == ',' && depth == 1) {
                ++count;
                continue;
            }
            if (depth >= 1 && count == index && !std::isspace(static_cast<unsigned char>(c))) return pos;
        }
        return std::string_view::npos;
    }

private:
    std::string_view text_;
};

json parse_json(std::string_view text, const std::string& what) {
    try {
        return json::parse(text.begin(), text.end());
    } catch (const json::parse_error& e) {
        const std::size_t line = e.byte > 0 ? line_at(text, e.byte - 1) : 1;
        std::string msg = e.what();
        if (const auto cut = msg.find("parse error"); cut != std::string::npos) msg = msg.substr(cut);
        throw ConfigError(what + " line " + std::to_string(line) + ": " + msg, line);
    }
}

class Node {
public:
    Node(const json& j, const Locator& loc, std::vector<std::string> path) : j_(j), loc_(loc), path_(std::move(path)) {}

    [[noreturn]] void fail(const std::string& msg) const {
        const std::size_t line = loc_.line_of(path_);
        std::string where;
        for (const auto& p : path_) where += (where.empty() || p.front() == '[' ? "" : ".") + p;
        throw ConfigError((line ? "line " + std::to_string(line) + ": " : std::string()) +
                              (where.empty() ? "" : where + ": ") + msg,
                          line);
    }

    const json& raw() const { return j_; }
    bool has(const char* key) const { return j_.is_object() && j_.contains(key) && !j_.at(key).is_null(); }

    Node at(const char* key) const {
        if (!has(key)) Node(j_, loc_, path_).fail(std::string("missing '") + key + "'");
        return child(key);
    }
    Node child(const std::string& key) const {
        auto p = path_;
        p.push_back(key);
        return {j_.at(key), loc_, std::move(p)};
    }
    Node item(std::size_t i) const {
        auto p = path_;
        p.push_back("[" + std::to_string(i) + "]");
        return {j_.at(i), loc_, std::move(p)};
    }

    void require_object(std::initializer_list<const char*> allowed) const {
        if (!j_.is_object()) fail("expected an object");
        const std::set<std::string> ok(allowed.begin(), allowed.end());
        for (const auto& [k, v] : j_.items()) {
            if (!ok.count(k)) child(k).fail("unknown key");
        }
    }

    double number() const {
        if (!j_.is_number()) fail("expected a number");
        return j_.get<double>();
    }
    double number(const char* key, double fallback) const { return has(key) ? child(key).number() : fallback; }
    double probability(const char* key, double fallback) const {
        const double v = number(key, fallback);
        if (!(v >= 0.0 && v <= 1.0)) child(key).fail("must lie in [0, 1]");
        return v;
    }
    double non_negative(const char* key, double fallback) const {
        const double v = number(key, fallback);
        if (!(v >= 0.0) || !std::isfinite(v)) child(key).fail("must be finite and >= 0");
        return v;
    }
    std::uint64_t unsigned_integer() const {
        if (!j_.is_number_unsigned() && !(j_.is_number_integer() && j_.get<long long>() >= 0)) {
            fail("expected a non-negative integer");
        }
        return j_.get<std::uint64_t>();
    }
    std::uint64_t unsigned_integer(const char* key, std::uint64_t fallback) const {
        return has(key) ? child(key).unsigned_integer() : fallback;
    }
    std::string string() const {
        if (!j_.is_string()) fail("expected a string");
        return j_.get<std::string>();
    }
    std::string string(const char* key, const std::string& fallback) const {
        return has(key) ? child(key).string() : fallback;
    }
    bool boolean(const char* key, bool fallback) const {
        if (!has(key)) return fallback;
        const auto c = child(key);
        if (!c.raw().is_boolean()) c.fail("expected true or false");
        return c.raw().get<bool>();
    }
    std::vector<double> numbers() const {
        if (!j_.is_array()) fail("expected an array of numbers");
        std::vector<double> out;
        for (std::size_t i = 0; i < j_.size(); ++i) out.push_back(item(i).number());
        return out;
    }
    std::size_t size() const { return j_.is_array() ? j_.size() : 0; }

private:
    const json& j_;
    const Locator& loc_;
    std::vector<std::string> path_;
};

void fail_on(const Node& n, const std::vector<std::string>& issues) {
    if (issues.empty()) return;
    std::string msg;
    for (const auto& i : issues) msg += (msg.empty() ? "" : "; ") + i;
    n.fail(msg);
}

RateSpec parse_rate(const Node& n) {
    if (n.raw().is_number()) return ConstantRate{n.number()};
    const std::string type = n.at("type").string();
    if (type == "constant") {
        n.require_object({"type", "value"});
        return ConstantRate{n.at("value").number()};
    }
    if (type == "gompertz_makeham") {
        n.require_object({"type", "a", "b", "c"});
        return GompertzMakeham{n.number("a", 0.0), n.number("b", 0.0), n.number("c", 0.0)};
    }
    if (type == "exponential_decay") {
        n.require_object({"type", "level", "decay", "floor"});
        return ExponentialDecay{n.number("level", 0.0), n.number("decay", 0.0), n.number("floor", 0.0)};
    }
    if (type == "grid") {
        n.require_object({"type", "t_knots", "u_knots", "values"});
        RateGrid g;
        g.t_knots = n.at("t_knots").numbers();
        g.u_knots = n.has("u_knots") ? n.at("u_knots").numbers() : std::vector<double>{0.0};
        const auto rows = n.at("values");
        if (rows.size() != g.t_knots.size()) rows.fail("expected one row per t knot");
        for (std::size_t i = 0; i < rows.size(); ++i) {
            const auto row = rows.item(i).numbers();
            if (row.size() != g.u_knots.size()) rows.item(i).fail("expected one value per u knot");
            g.values.insert(g.values.end(), row.begin(), row.end());
        }
        return g;
    }
    n.child("type").fail("unknown rate type '" + type + "'");
}

SemiMarkovModel parse_model_node(const Node& n) {
    n.require_object({"state_space", "transitions", "engine", "config_hash"});
    SemiMarkovModel m;
    try {
        m.space = StateSpace::from_name(n.string("state_space", "classic"));
    } catch (const std::invalid_argument& e) {
        n.child("state_space").fail(e.what());
    }
    const auto list = n.at("transitions");
    if (!list.raw().is_array()) list.fail("expected an array");
    for (std::size_t i = 0; i < list.size(); ++i) {
        const auto t = list.item(i);
        t.require_object({"from", "to", "rate"});
        TransitionIntensity ti;
        for (auto [key, dest] : {std::pair{"from", &ti.from}, std::pair{"to", &ti.to}}) {
            const auto name = t.at(key).string();
            const auto idx = m.space.index_of(name);
            if (!idx) t.child(key).fail("unknown state '" + name + "'");
            *dest = *idx;
        }
        if (!m.space.allows(ti.from, ti.to)) {
            t.fail("transition " + std::to_string(ti.from + 1) + "→" + std::to_string(ti.to + 1) + " not allowed");
        }
        ti.rate = parse_rate(t.at("rate"));
        if (auto issues = ti.check(); !issues.empty()) fail_on(t.child("rate"), issues);
        m.intensities.push_back(std::move(ti));
    }
    fail_on(list, validate_model(m));
    return m;
}

json rate_to_json(const RateSpec& spec) {
    return std::visit(
        [](const auto& r) -> json {
            using T = std::decay_t<decltype(r)>;
            if constexpr (std::is_same_v<T, ConstantRate>) {
                return {{"type", "constant"}, {"value", r.value}};
            } else if constexpr (std::is_same_v<T, GompertzMakeham>) {
                return {{"type", "gompertz_makeham"}, {"a", r.a}, {"b", r.b}, {"c", r.c}};
            } else if constexpr (std::is_same_v<T, ExponentialDecay>) {
                return {{"type", "exponential_decay"}, {"level", r.level}, {"decay", r.decay}, {"floor", r.floor}};
            } else {
                json rows = json::array();
                for (std::size_t i = 0; i < r.t_knots.size(); ++i) {
                    rows.push_back(std::vector<double>(r.values.begin() + static_cast<long>(i * r.u_knots.size()),
                                                       r.values.begin() + static_cast<long>((i + 1) * r.u_knots.size())));
                }
                return {{"type", "grid"}, {"t_knots", r.t_knots}, {"u_knots", r.u_knots}, {"values", rows}};
            }
        },
        spec);
}

DelayDistribution parse_delay(const Node& n) {
    if (n.raw().is_number() && n.number() == 0.0) return ZeroDelay{};
    const std::string type = n.at("type").string();
    DelayDistribution d;
    if (type == "zero") {
        n.require_object({"type"});
    } else if (type == "exponential") {
        n.require_object({"type", "mean"});
        d = ExponentialDelay{n.at("mean").number()};
    } else if (type == "uniform") {
        n.require_object({"type", "low", "high"});
        d = UniformDelay{n.at("low").number(), n.at("high").number()};
    } else if (type == "step") {
        n.require_object({"type", "points", "cdf"});
        d = StepDelay{n.at("points").numbers(), n.at("cdf").numbers()};
    } else {
        n.child("type").fail("unknown delay type '" + type + "'");
    }
    fail_on(n, d.check());
    return d;
}

PolicySpec parse_policy(const Node& n) {
    n.require_object({"benefit_rate", "premium", "salary", "coverage_fraction", "deferred_period", "coverage_period",
                      "retirement_time", "eligibility_threshold", "relapse_window"});
    PolicySpec p;
    p.benefit_rate = n.number("benefit_rate", p.benefit_rate);
    p.premium = n.number("premium", p.premium);
    p.salary = n.number("salary", p.salary);
    p.coverage_fraction = n.number("coverage_fraction", p.coverage_fraction);
    p.deferred_period = n.number("deferred_period", p.deferred_period);
    p.coverage_period = n.number("coverage_period", kInf);
    p.retirement_time = n.number("retirement_time", p.retirement_time);
    p.eligibility_threshold = n.number("eligibility_threshold", p.eligibility_threshold);
    p.relapse_window = n.number("relapse_window", p.relapse_window);
    fail_on(n, p.check());
    return p;
}

SettlementModel parse_settlement(const Node& n) {
    n.require_object({"reporting_delay", "adjudication_delay", "reapplication_delay", "award_prob", "reapply_prob",
                      "max_reapplications", "termination_hazard", "reaward_prob", "spurious_claim_rate"});
    SettlementModel s;
    if (n.has("reporting_delay")) s.reporting_delay = parse_delay(n.child("reporting_delay"));
    if (n.has("adjudication_delay")) s.adjudication_delay = parse_delay(n.child("adjudication_delay"));
    if (n.has("reapplication_delay")) s.reapplication_delay = parse_delay(n.child("reapplication_delay"));
    s.award_prob = n.probability("award_prob", s.award_prob);
    s.reapply_prob = n.probability("reapply_prob", s.reapply_prob);
    s.max_reapplications = static_cast<int>(n.unsigned_integer("max_reapplications", 2));
    s.termination_hazard = n.non_negative("termination_hazard", s.termination_hazard);
    s.reaward_prob = n.probability("reaward_prob", s.reaward_prob);
    s.spurious_claim_rate = n.non_negative("spurious_claim_rate", s.spurious_claim_rate);
    fail_on(n, s.check());
    return s;
}

DiscountCurve parse_discount(const Node& n) {
    if (n.raw().is_number()) return DiscountCurve(n.number());
    n.require_object({"rate", "knots", "rates"});
    try {
        if (n.has("knots")) return DiscountCurve(n.at("knots").numbers(), n.at("rates").numbers());
        return DiscountCurve(n.number("rate", 0.0));
    } catch (const std::invalid_argument& e) {
        n.fail(e.what());
    }
}

void parse_intervention(const Node& n, InterventionConfig& cfg) {
    n.require_object({"n_samples", "seed", "covariates", "mechanism", "effect", "query_points", "epsilon", "bootstrap",
                      "bandwidth", "rdd"});
    cfg.settings.n_samples = n.unsigned_integer("n_samples", 0);
    if (n.has("seed")) cfg.settings.seed = n.child("seed").unsigned_integer();
    if (n.has("covariates")) {
        const auto c = n.child("covariates");
        c.require_object({"kind", "dimension", "mean", "sd", "low", "high"});
        const auto kind = c.string("kind", "normal");
        if (kind != "normal" && kind != "uniform") c.child("kind").fail("expected 'normal' or 'uniform'");
        auto& cov = cfg.settings.covariates;
        cov.kind = kind == "normal" ? CovariateModel::Kind::normal : CovariateModel::Kind::uniform;
        cov.dimension = c.unsigned_integer("dimension", 1);
        cov.mean = c.number("mean", 0.0);
        cov.sd = c.number("sd", 1.0);
        cov.low = c.number("low", 0.0);
        cov.high = c.number("high", 1.0);
        if (cov.dimension == 0) c.fail("dimension must be >= 1");
        if (!(cov.sd > 0.0) || !(cov.high > cov.low)) c.fail("covariate spread must be positive");
    }
    if (n.has("mechanism")) {
        const auto m = n.child("mechanism");
        m.require_object({"kind", "probability", "intercept", "slope", "epsilon", "cutoff", "below", "above"});
        const auto kind = m.string("kind", "randomized");
        auto& mech = cfg.mechanism;
        if (kind == "randomized") {
            mech.kind = AssignmentMechanism::Kind::randomized;
        } else if (kind == "unconfounded") {
            mech.kind = AssignmentMechanism::Kind::unconfounded;
        } else if (kind == "cutoff") {
            mech.kind = AssignmentMechanism::Kind::cutoff;
        } else {
            m.child("kind").fail("expected 'randomized', 'unconfounded' or 'cutoff'");
        }
        mech.probability = m.number("probability", mech.probability);
        mech.intercept = m.number("intercept", mech.intercept);
        mech.slope = m.number("slope", mech.slope);
        mech.epsilon = m.number("epsilon", mech.epsilon);
        mech.cutoff = m.number("cutoff", mech.cutoff);
        mech.below = m.number("below", mech.below);
        mech.above = m.number("above", mech.above);
        fail_on(m, mech.check());
    }
    if (n.has("effect")) {
        const auto e = n.child("effect");
        e.require_object({"intercept", "slopes", "noise_sd", "effect", "effect_slope"});
        auto& eff = cfg.effect;
        eff.intercept = e.number("intercept", eff.intercept);
        if (e.has("slopes")) eff.slopes = e.child("slopes").numbers();
        eff.noise_sd = e.number("noise_sd", eff.noise_sd);
        eff.effect = e.number("effect", eff.effect);
        eff.effect_slope = e.number("effect_slope", eff.effect_slope);
        if (!(eff.noise_sd >= 0.0)) e.child("noise_sd").fail("must be >= 0");
    }
    if (n.has("query_points")) {
        const auto q = n.child("query_points");
        cfg.query_points.clear();
        for (std::size_t i = 0; i < q.size(); ++i) {
            const auto item = q.item(i);
            cfg.query_points.push_back(item.raw().is_number() ? std::vector<double>{item.number()} : item.numbers());
            if (cfg.query_points.back().size() != cfg.settings.covariates.dimension) {
                item.fail("query point dimension does not match the covariates");
            }
        }
    }
    cfg.epsilon = n.number("epsilon", cfg.epsilon);
    if (!(cfg.epsilon > 0.0 && cfg.epsilon < 0.5)) n.child("epsilon").fail("must lie in (0, 0.5)");
    cfg.bootstrap = n.unsigned_integer("bootstrap", cfg.bootstrap);
    cfg.bandwidth = n.number("bandwidth", cfg.bandwidth);
    if (n.has("rdd")) {
        const auto r = n.child("rdd");
        r.require_object({"enabled", "cutoff", "min_jump"});
        cfg.rdd = r.boolean("enabled", true);
        cfg.rdd_cutoff = r.number("cutoff", cfg.mechanism.cutoff);
        cfg.min_jump = r.number("min_jump", cfg.min_jump);
    } else {
        cfg.rdd_cutoff = cfg.mechanism.cutoff;
    }
}

ScenarioConfig build_config(const json& root, const Locator& loc, const std::filesystem::path& base_dir) {
    const Node n(root, loc, {});
    n.require_object({"model", "model_file", "policy", "settlement", "discount", "simulation", "reserve", "estimation",
                      "intervention", "analysis_times", "output_dir"});
    ScenarioConfig cfg;
    if (n.has("model")) {
        cfg.model = parse_model_node(n.child("model"));
    } else if (n.has("model_file")) {
        const auto file = base_dir / n.child("model_file").string();
        try {
            cfg.model = load_model(file);
        } catch (const ConfigError& e) {
            n.child("model_file").fail(e.what());
        }
    } else {
        n.fail("missing 'model' or 'model_file'");
    }
    if (n.has("policy")) cfg.policy = parse_policy(n.child("policy"));
    if (n.has("settlement")) cfg.settlement = parse_settlement(n.child("settlement"));
    if (n.has("discount")) cfg.discount = parse_discount(n.child("discount"));
    if (n.has("simulation")) {
        const auto s = n.child("simulation");
        s.require_object({"n_policies", "seed", "inception_ages", "step"});
        cfg.simulation.n_policies = s.unsigned_integer("n_policies", 0);
        if (s.has("seed")) cfg.simulation.seed = s.child("seed").unsigned_integer();
        if (s.has("inception_ages")) cfg.simulation.inception_ages = s.child("inception_ages").numbers();
        cfg.simulation.step = s.number("step", cfg.simulation.step);
        if (!(cfg.simulation.step > 0.0)) s.child("step").fail("must be positive");
    }
    if (n.has("reserve")) {
        const auto r = n.child("reserve");
        r.require_object({"step", "parameters", "resolution_window"});
        cfg.reserve.step = r.number("step", cfg.reserve.step);
        cfg.reserve.parameters = r.string("parameters", cfg.reserve.parameters);
        cfg.reserve.resolution_window = r.number("resolution_window", cfg.reserve.resolution_window);
        if (!(cfg.reserve.step > 0.0)) r.child("step").fail("must be positive");
        if (cfg.reserve.parameters != "config" && cfg.reserve.parameters != "estimated") {
            r.child("parameters").fail("expected 'config' or 'estimated'");
        }
    }
    if (n.has("estimation")) {
        const auto e = n.child("estimation");
        e.require_object({"t_knots", "u_knots", "delay_method", "resolution_window"});
        if (e.has("t_knots")) cfg.estimation.grid.t_knots = e.child("t_knots").numbers();
        if (e.has("u_knots")) cfg.estimation.grid.u_knots = e.child("u_knots").numbers();
        cfg.estimation.delay_method = e.string("delay_method", cfg.estimation.delay_method);
        cfg.estimation.resolution_window = e.number("resolution_window", cfg.estimation.resolution_window);
        if (cfg.estimation.delay_method != "nonparametric" && cfg.estimation.delay_method != "exponential") {
            e.child("delay_method").fail("expected 'nonparametric' or 'exponential'");
        }
        for (const auto* k : {&cfg.estimation.grid.t_knots, &cfg.estimation.grid.u_knots}) {
            if (k->empty() || k->front() != 0.0 || std::adjacent_find(k->begin(), k->end(), std::greater_equal<>()) !=
                                                       k->end()) {
                e.fail("knots must start at 0 and increase strictly");
            }
        }
    }
    if (cfg.simulation.seed) cfg.intervention.settings.seed = *cfg.simulation.seed;
    if (n.has("intervention")) parse_intervention(n.child("intervention"), cfg.intervention);
    if (n.has("analysis_times")) {
        cfg.analysis_times = n.child("analysis_times").numbers();
        for (double t : cfg.analysis_times) {
            if (!(t >= 0.0)) n.child("analysis_times").fail("analysis times must be >= 0");
        }
    }
    cfg.output_dir = n.string("output_dir", cfg.output_dir);
    cfg.canonical = root.dump();
    cfg.hash = fnv1a_hex(cfg.canonical);
    return cfg;
}

json path_to_json(const BiometricPath& p) {
    json jumps = json::array();
    for (const auto& j : p.jumps) jumps.push_back({j.time, j.state});
    return {{"start_time", p.start_time}, {"start_state", p.start_state}, {"start_duration", p.start_duration},
            {"jumps", jumps}};
}

json record_to_json(const ClaimRecord& r) {
    json claims = json::array();
    for (const auto& c : r.claims) {
        claims.push_back({{"id", c.id},
                          {"onset", c.onset},
                          {"report_time", c.report_time},
                          {"eligible", c.eligible},
                          {"spell_end", c.spell_end ? json(*c.spell_end) : json(nullptr)}});
    }
    json events = json::array();
    for (const auto& e : r.events) {
        events.push_back({{"time", e.time},
                          {"decision", std::string(to_string(e.decision))},
                          {"claim", e.claim},
                          {"window_start", e.window_start},
                          {"window_end", e.window_end},
                          {"wrongful", e.wrongful}});
    }
    json payments = json::array();
    for (const auto& iv : r.payments) payments.push_back({iv.start, iv.end});
    return {{"policy_id", r.policy_id},
            {"inception_age", r.inception_age},
            {"biometric", path_to_json(r.biometric)},
            {"claims", claims},
            {"events", events},
            {"payments", payments},
            {"death_time", r.death_time ? json(*r.death_time) : json(nullptr)}};
}

ClaimRecord record_from_json(const json& j) {
    ClaimRecord r;
    r.policy_id = j.at("policy_id").get<std::uint64_t>();
    r.inception_age = j.at("inception_age").get<double>();
    const auto& b = j.at("biometric");
    r.biometric.start_time = b.at("start_time").get<double>();
    r.biometric.start_state = b.at("start_state").get<State>();
    r.biometric.start_duration = b.at("start_duration").get<double>();
    for (const auto& jump : b.at("jumps")) r.biometric.jumps.push_back({jump.at(0).get<double>(), jump.at(1).get<State>()});
    for (const auto& c : j.at("claims")) {
        Claim claim;
        claim.id = c.at("id").get<int>();
        claim.onset = c.at("onset").get<double>();
        claim.report_time = c.at("report_time").get<double>();
        claim.eligible = c.value("eligible", true);
        if (c.contains("spell_end") && !c.at("spell_end").is_null()) claim.spell_end = c.at("spell_end").get<double>();
        r.claims.push_back(claim);
    }
    for (const auto& e : j.at("events")) {
        SettlementEvent ev;
        ev.time = e.at("time").get<double>();
        const auto d = decision_from_string(e.at("decision").get<std::string>());
        if (!d) throw std::invalid_argument("unknown decision");
        ev.decision = *d;
        ev.claim = e.at("claim").get<int>();
        ev.window_start = e.value("window_start", 0.0);
        ev.window_end = e.value("window_end", 0.0);
        ev.wrongful = e.value("wrongful", false);
        r.events.push_back(ev);
    }
    for (const auto& iv : j.at("payments")) r.payments.push_back({iv.at(0).get<double>(), iv.at(1).get<double>()});
    if (j.contains("death_time") && !j.at("death_time").is_null()) r.death_time = j.at("death_time").get<double>();
    return r;
}

} // namespace

ConfigError::ConfigError(const std::string& what, std::size_t line_no) : std::runtime_error(what), line(line_no) {}

std::string fnv1a_hex(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    static constexpr char kHex[] = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i, h >>= 4) out[static_cast<std::size_t>(i)] = kHex[h & 0xF];
    return out;
}

SemiMarkovModel parse_model(std::string_view json_text) {
    const json root = parse_json(json_text, "model");
    const Locator loc(json_text);
    return parse_model_node(Node(root, loc, {}));
}

SemiMarkovModel load_model(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open model file " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_model(ss.str());
}

std::string model_to_json(const SemiMarkovModel& model, const std::string& config_hash) {
    json list = json::array();
    for (const auto& ti : model.intensities) {
        list.push_back({{"from", model.space.label(ti.from)},
                        {"to", model.space.label(ti.to)},
                        {"rate", rate_to_json(ti.rate)}});
    }
    json root = {{"state_space", std::string(model.space.name())}, {"transitions", list}};
    if (!config_hash.empty()) {
        root["engine"] = std::string(kEngineVersion);
        root["config_hash"] = config_hash;
    }
    return root.dump(2) + "\n";
}

ScenarioConfig parse_config(std::string_view json_text, const std::filesystem::path& base_dir) {
    const json root = parse_json(json_text, "config");
    const Locator loc(json_text);
    return build_config(root, loc, base_dir);
}

ScenarioConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), path.parent_path());
}

void ScenarioConfig::set_seed(std::uint64_t seed) {
    simulation.seed = seed;
    intervention.settings.seed = seed;
    json root = json::parse(canonical);
    root["simulation"]["seed"] = seed;
    if (root.contains("intervention")) root["intervention"]["seed"] = seed;
    canonical = root.dump();
    hash = fnv1a_hex(canonical);
}

void write_records_ndjson(std::ostream& os, const std::vector<ClaimRecord>& records, const StateSpace& space,
                          const std::string& config_hash) {
    const json header = {{"type", "header"},
                         {"engine", std::string(kEngineVersion)},
                         {"config_hash", config_hash},
                         {"state_space", std::string(space.name())},
                         {"n_policies", records.size()}};
    os << header.dump() << '\n';
    for (const auto& r : records) os << record_to_json(r).dump() << '\n';
}

std::vector<ClaimRecord> read_records_ndjson(std::istream& is, RecordFileHeader* header) {
    std::vector<ClaimRecord> out;
    std::string line;
    std::size_t line_no = 0;
    bool seen_header = false;
    while (std::getline(is, line)) {
        ++line_no;
        if (line.empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::parse_error& e) {
            throw ConfigError("records line " + std::to_string(line_no) + ": " + e.what(), line_no);
        }
        if (!seen_header) {
            seen_header = true;
            if (j.value("type", "") == "header") {
                if (header) {
                    header->engine = j.value("engine", "");
                    header->config_hash = j.value("config_hash", "");
                    header->state_space = j.value("state_space", "");
                    header->n_policies = j.value("n_policies", std::size_t{0});
                }
                continue;
            }
        }
        try {
            out.push_back(record_from_json(j));
        } catch (const std::exception& e) {
            throw ConfigError("records line " + std::to_string(line_no) + ": malformed record (" + e.what() + ")",
                              line_no);
        }
    }
    return out;
}

} // namespace lec
