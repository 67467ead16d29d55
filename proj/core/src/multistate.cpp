#include "lec/multistate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>

namespace lec {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

bool identically_zero(const TransitionIntensity& mu) {
    if (const auto* c = std::get_if<ConstantRate>(&mu.rate)) {
        return c->value == 0.0;
    }
    if (const auto* g = std::get_if<RateGrid>(&mu.rate)) {
        return std::all_of(g->values.begin(), g->values.end(), [](double v) { return v == 0.0; });
    }
    if (const auto* g = std::get_if<GompertzMakeham>(&mu.rate)) {
        return g->a == 0.0 && g->b == 0.0;
    }
    const auto& e = std::get<ExponentialDecay>(mu.rate);
    return e.floor == 0.0 && e.level == 0.0;
}

std::string arrow(State from, State to) {
    return std::to_string(from + 1) + "→" + std::to_string(to + 1);
}

struct Outgoing {
    State to;
    const TransitionIntensity* mu;
};

std::vector<std::vector<Outgoing>> outgoing_table(const SemiMarkovModel& model) {
    std::vector<std::vector<Outgoing>> out(static_cast<std::size_t>(model.space.size()));
    for (const auto& mu : model.intensities) {
        if (mu.from != mu.to && model.space.allows(mu.from, mu.to) && !identically_zero(mu)) {
            out[static_cast<std::size_t>(mu.from)].push_back({mu.to, &mu});
        }
    }
    return out;
}

} // namespace

double SemiMarkovModel::rate(State from, State to, double t, double u) const {
    double total = 0.0;
    for (const auto& mu : intensities) {
        if (mu.from == from && mu.to == to) {
            total += mu(t, u);
        }
    }
    return total;
}

double SemiMarkovModel::exit_rate(State from, double t, double u) const {
    double total = 0.0;
    for (const auto& mu : intensities) {
        if (mu.from == from && mu.to != from) {
            total += mu(t, u);
        }
    }
    return total;
}

bool SemiMarkovModel::piecewise_constant() const noexcept {
    return std::all_of(intensities.begin(), intensities.end(),
                       [](const TransitionIntensity& mu) { return mu.piecewise_constant(); });
}

std::vector<std::string> validate_model(const SemiMarkovModel& model) {
    std::vector<std::string> out = model.space.check();
    std::map<std::pair<State, State>, int> seen;
    for (const auto& mu : model.intensities) {
        if (mu.from < 0 || mu.to < 0 || mu.from >= model.space.size() || mu.to >= model.space.size()) {
            out.push_back("transition " + arrow(mu.from, mu.to) + " refers to an unknown state");
            continue;
        }
        if (!model.space.allows(mu.from, mu.to) && !identically_zero(mu)) {
            out.push_back("transition " + arrow(mu.from, mu.to) + " not allowed");
        }
        if (++seen[{mu.from, mu.to}] == 2) {
            out.push_back("duplicate intensity for transition " + arrow(mu.from, mu.to));
        }
        for (auto& issue : mu.check()) {
            out.push_back(std::move(issue));
        }
    }
    return out;
}

SemiMarkovModel discretize(const SemiMarkovModel& model, double step, double t_max, double u_max) {
    SemiMarkovModel out{model.space, {}};
    out.intensities.reserve(model.intensities.size());
    for (const auto& mu : model.intensities) {
        out.intensities.push_back(discretize(mu, step, t_max, u_max));
    }
    return out;
}

SemiMarkovModel restrict_coverage(const SemiMarkovModel& model, double coverage_end, double step) {
    SemiMarkovModel out = model;
    for (auto& mu : out.intensities) {
        if (mu.from != model.space.active() || mu.to != model.space.disabled()) {
            continue;
        }
        TransitionIntensity pc = discretize(mu, step, coverage_end, coverage_end);
        RateGrid grid;
        if (const auto* c = std::get_if<ConstantRate>(&pc.rate)) {
            grid = RateGrid{{0.0}, {0.0}, {c->value}};
        } else {
            grid = std::get<RateGrid>(pc.rate);
        }
        RateGrid cut;
        cut.u_knots = grid.u_knots;
        const std::size_t nu = grid.u_knots.size();
        for (std::size_t i = 0; i < grid.t_knots.size(); ++i) {
            if (grid.t_knots[i] >= coverage_end) {
                break;
            }
            cut.t_knots.push_back(grid.t_knots[i]);
            cut.values.insert(cut.values.end(), grid.values.begin() + static_cast<std::ptrdiff_t>(i * nu),
                              grid.values.begin() + static_cast<std::ptrdiff_t>((i + 1) * nu));
        }
        cut.t_knots.push_back(coverage_end);
        cut.values.insert(cut.values.end(), nu, 0.0);
        mu.rate = std::move(cut);
    }
    return out;
}

State BiometricPath::state_at(double t) const {
    State s = start_state;
    for (const auto& j : jumps) {
        if (j.time > t) {
            break;
        }
        s = j.state;
    }
    return s;
}

double BiometricPath::sojourn_start(double t) const {
    double since = start_time - start_duration;
    for (const auto& j : jumps) {
        if (j.time > t) {
            break;
        }
        since = j.time;
    }
    return since;
}

std::vector<std::string> BiometricPath::check(const StateSpace& space) const {
    std::vector<std::string> out;
    double last_time = start_time;
    State last_state = start_state;
    for (const auto& j : jumps) {
        if (!(j.time > last_time)) {
            out.emplace_back("jump times not strictly increasing");
        }
        if (j.state == last_state) {
            out.emplace_back("jump to the same state");
        }
        if (!space.allows(last_state, j.state)) {
            out.push_back("jump " + arrow(last_state, j.state) + " not allowed");
        }
        last_time = j.time;
        last_state = j.state;
    }
    return out;
}

std::vector<Interval> sojourns_in(const BiometricPath& path, State state, double from, double to) {
    std::vector<Interval> out;
    double seg_start = path.start_time;
    State s = path.start_state;
    auto emit = [&](double a, double b) {
        a = std::max(a, from);
        b = std::min(b, to);
        if (b > a) {
            out.push_back({a, b});
        }
    };
    for (const auto& j : path.jumps) {
        if (s == state) {
            emit(seg_start, j.time);
        }
        seg_start = j.time;
        s = j.state;
    }
    if (s == state) {
        emit(seg_start, kInf);
    }
    return out;
}

BiometricPath sample_path(const SemiMarkovModel& model, double t0, State state0, double u0, double horizon,
                          RngStream& rng) {
    if (!model.piecewise_constant()) {
        throw std::invalid_argument("sample_path requires piecewise-constant intensities; discretize first");
    }
    BiometricPath path{t0, state0, u0, {}};
    const auto out = outgoing_table(model);
    const double end = t0 + horizon;
    constexpr double kNudge = 1e-12;

    double t = t0;
    double entry = t0 - u0;
    State s = state0;
    while (t < end) {
        const auto& exits = out[static_cast<std::size_t>(s)];
        if (exits.empty()) {
            break;
        }
        double budget = rng.exponential();
        bool jumped = false;
        while (t < end) {
            const double tt = t + kNudge;
            const double uu = t - entry + kNudge;
            double lambda = 0.0;
            double edge = kInf;
            for (const auto& e : exits) {
                lambda += (*e.mu)(tt, uu);
                edge = std::min(edge, e.mu->distance_to_edge(tt, uu));
            }
            const double seg_end = std::min(end, t + edge + kNudge);
            const double mass = lambda * (seg_end - t);
            if (lambda > 0.0 && mass >= budget) {
                const double tj = t + budget / lambda;
                double pick = rng.uniform() * lambda;
                State dest = exits.back().to;
                for (const auto& e : exits) {
                    pick -= (*e.mu)(tt, uu);
                    if (pick < 0.0) {
                        dest = e.to;
                        break;
                    }
                }
                path.jumps.push_back({tj, dest});
                s = dest;
                entry = tj;
                t = tj;
                jumped = true;
                break;
            }
            budget -= mass;
            t = seg_end;
        }
        if (!jumped) {
            break;
        }
    }
    return path;
}

double OccupationGrid::probability(State s, double t) const {
    const double x = (t - t0) / step;
    if (x <= 0.0) {
        return probabilities.front()[static_cast<std::size_t>(s)];
    }
    const auto i = static_cast<std::size_t>(x);
    if (i + 1 >= times.size()) {
        return probabilities.back()[static_cast<std::size_t>(s)];
    }
    const double w = x - static_cast<double>(i);
    return (1.0 - w) * probabilities[i][static_cast<std::size_t>(s)] +
           w * probabilities[i + 1][static_cast<std::size_t>(s)];
}

OccupationGrid transition_probabilities(const SemiMarkovModel& model, double t0, State state0, double u0,
                                        double horizon, double step, bool keep_duration) {
    if (!(step > 0.0) || !(horizon > 0.0)) {
        throw std::invalid_argument("step and horizon must be positive");
    }
    if (step > horizon * (1.0 + 1e-12)) {
        throw std::invalid_argument("step exceeds horizon");
    }
    if (const auto issues = validate_model(model); !issues.empty()) {
        throw std::invalid_argument("invalid model: " + issues.front());
    }
    const int n_states = model.space.size();
    if (state0 < 0 || state0 >= n_states) {
        throw std::invalid_argument("initial state out of range");
    }
    const auto out = outgoing_table(model);
    const auto n_steps = static_cast<std::size_t>(std::ceil(horizon / step - 1e-9));
    const double h = step;
    const double delta = 1e-9 * h;

    // A cohort is the mass that entered state `state` during one step (or the
    // initial mass); its duration at the start of step i is duration + i*h - origin.
    struct Cohort {
        State state;
        double duration_at_t0; ///< duration the cohort would have at t0 (may be negative)
        double mass;
    };
    std::vector<Cohort> cohorts;
    std::vector<double> absorbed(static_cast<std::size_t>(n_states), 0.0);
    if (out[static_cast<std::size_t>(state0)].empty()) {
        absorbed[static_cast<std::size_t>(state0)] = 1.0;
    } else {
        cohorts.push_back({state0, u0, 1.0});
    }

    OccupationGrid grid;
    grid.t0 = t0;
    grid.step = h;
    const auto n_buckets = static_cast<std::size_t>(std::ceil((u0 + horizon) / h)) + 2;

    auto record = [&](std::size_t i) {
        const double t = t0 + static_cast<double>(i) * h;
        grid.times.push_back(t);
        std::vector<double> p = absorbed;
        std::vector<double> dens;
        if (keep_duration) {
            dens.assign(n_buckets, 0.0);
        }
        for (const auto& c : cohorts) {
            p[static_cast<std::size_t>(c.state)] += c.mass;
            if (keep_duration && c.state == model.space.disabled()) {
                const double d = c.duration_at_t0 + (t - t0);
                const auto k = std::min(n_buckets - 1, static_cast<std::size_t>(std::max(0.0, d / h)));
                dens[k] += c.mass;
            }
        }
        grid.probabilities.push_back(std::move(p));
        if (keep_duration) {
            grid.disabled_duration.push_back(std::move(dens));
        }
    };
    record(0);

    const std::size_t S = static_cast<std::size_t>(n_states);
    std::vector<double> y, k1, k2, k3, k4, tmp;
    // Layout: [cohort masses..., entrants per state...]
    auto derivative = [&](double t_start, double tau, const std::vector<double>& in, std::vector<double>& d) {
        const std::size_t q = cohorts.size();
        std::fill(d.begin(), d.end(), 0.0);
        const double t = t_start + tau;
        for (std::size_t c = 0; c < q; ++c) {
            const double u = cohorts[c].duration_at_t0 + (t - t0);
            const double m = in[c];
            for (const auto& e : out[static_cast<std::size_t>(cohorts[c].state)]) {
                const double flow = (*e.mu)(t, u) * m;
                d[c] -= flow;
                d[q + static_cast<std::size_t>(e.to)] += flow;
            }
        }
        for (std::size_t j = 0; j < S; ++j) {
            const double m = in[q + j];
            if (m == 0.0) {
                continue;
            }
            for (const auto& e : out[j]) {
                const double flow = (*e.mu)(t, 0.5 * tau) * m;
                d[q + j] -= flow;
                d[q + static_cast<std::size_t>(e.to)] += flow;
            }
        }
    };

    for (std::size_t i = 0; i < n_steps; ++i) {
        const double ts = t0 + static_cast<double>(i) * h;
        const std::size_t q = cohorts.size();
        const std::size_t n = q + S;
        y.assign(n, 0.0);
        for (std::size_t c = 0; c < q; ++c) {
            y[c] = cohorts[c].mass;
        }
        k1.resize(n);
        k2.resize(n);
        k3.resize(n);
        k4.resize(n);
        tmp.resize(n);
        derivative(ts, delta, y, k1);
        for (std::size_t x = 0; x < n; ++x) tmp[x] = y[x] + 0.5 * h * k1[x];
        derivative(ts, 0.5 * h, tmp, k2);
        for (std::size_t x = 0; x < n; ++x) tmp[x] = y[x] + 0.5 * h * k2[x];
        derivative(ts, 0.5 * h, tmp, k3);
        for (std::size_t x = 0; x < n; ++x) tmp[x] = y[x] + h * k3[x];
        derivative(ts, h - delta, tmp, k4);
        for (std::size_t x = 0; x < n; ++x) {
            y[x] += h / 6.0 * (k1[x] + 2.0 * k2[x] + 2.0 * k3[x] + k4[x]);
        }
        for (std::size_t c = 0; c < q; ++c) {
            cohorts[c].mass = y[c];
        }
        const double te = ts + h;
        for (std::size_t j = 0; j < S; ++j) {
            const double m = y[q + j];
            if (m == 0.0) {
                continue;
            }
            if (out[j].empty()) {
                absorbed[j] += m;
            } else {
                // Entrants spread over the step; represent them at mid-step duration.
                cohorts.push_back({static_cast<State>(j), 0.5 * h - (te - t0), m});
            }
        }
        record(i + 1);
    }
    return grid;
}

} // namespace lec
