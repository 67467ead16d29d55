#include "lec/estimation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <ostream>

namespace lec {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr std::size_t kChunks = 64;

enum class SpellEnd { ongoing, terminated, closed };

/// A disability spell as the insurer sees it at t.
struct ObservedSpell {
    double start = 0.0;
    double end = kInf;
    SpellEnd how = SpellEnd::ongoing;
    bool pending = false;
};

std::vector<ObservedSpell> observed_spells(const ObservedPolicy& p, double t) {
    std::vector<const Claim*> claims;
    for (const auto& c : p.claims) {
        if (c.report_time <= t) claims.push_back(&c);
    }
    std::stable_sort(claims.begin(), claims.end(), [](const Claim* a, const Claim* b) { return a->onset < b->onset; });
    std::vector<ObservedSpell> out;
    for (const Claim* c : claims) {
        ObservedSpell spell;
        spell.start = c->onset;
        bool decided = false;
        bool awarded = false;
        for (const auto& e : p.events) {
            if (e.claim != c->id || e.time > t) continue;
            decided = true;
            switch (e.decision) {
            case Decision::award:
            case Decision::reaward:
                awarded = true;
                if (e.window_end < e.time) {
                    spell.end = e.window_end;
                    spell.how = SpellEnd::closed;
                } else {
                    spell.end = kInf;
                    spell.how = SpellEnd::ongoing;
                }
                break;
            case Decision::terminate:
                spell.end = e.time;
                spell.how = SpellEnd::terminated;
                break;
            case Decision::reject: break;
            }
        }
        if (!decided) {
            spell.pending = true;
            out.push_back(spell);
        } else if (awarded) {
            out.push_back(spell);
        }
    }
    return out;
}

std::size_t knot_index(const std::vector<double>& knots, double x) {
    const auto it = std::upper_bound(knots.begin(), knots.end(), x);
    return it == knots.begin() ? 0 : static_cast<std::size_t>(it - knots.begin()) - 1;
}

void check_grid(const EstimationGrid& g) {
    for (const auto* k : {&g.t_knots, &g.u_knots}) {
        if (k->empty() || k->front() != 0.0) throw std::invalid_argument("estimation grid knots must start at 0");
        if (!std::is_sorted(k->begin(), k->end()) || std::adjacent_find(k->begin(), k->end()) != k->end()) {
            throw std::invalid_argument("estimation grid knots must increase strictly");
        }
    }
}

struct Accumulator {
    const EstimationGrid* grid;
    std::vector<std::vector<double>> exposure;    // per state
    std::vector<double> incidence_exposure;       // active exposure scaled by the reporting probability
    std::vector<std::vector<double>> occurrences; // per transition

    Accumulator(const EstimationGrid& g, std::size_t states, std::size_t transitions)
        : grid(&g),
          exposure(states, std::vector<double>(g.t_knots.size() * g.u_knots.size(), 0.0)),
          incidence_exposure(g.t_knots.size() * g.u_knots.size(), 0.0),
          occurrences(transitions, std::vector<double>(g.t_knots.size() * g.u_knots.size(), 0.0)) {}

    std::size_t cell(double t, double u) const {
        return knot_index(grid->t_knots, t) * grid->u_knots.size() + knot_index(grid->u_knots, u);
    }

    void add(const Accumulator& o) {
        for (std::size_t s = 0; s < exposure.size(); ++s) {
            for (std::size_t c = 0; c < exposure[s].size(); ++c) exposure[s][c] += o.exposure[s][c];
        }
        for (std::size_t c = 0; c < incidence_exposure.size(); ++c) incidence_exposure[c] += o.incidence_exposure[c];
        for (std::size_t j = 0; j < occurrences.size(); ++j) {
            for (std::size_t c = 0; c < occurrences[j].size(); ++c) occurrences[j][c] += o.occurrences[j][c];
        }
    }
};

class HistoryScanner {
public:
    HistoryScanner(const StateSpace& space, double t, bool corrected, const DelayDistribution* delay,
                   const AwardModels* awards)
        : space_(space), t_(t), corrected_(corrected), delay_(delay), awards_(awards) {}

    void scan(const ObservedPolicy& p, Accumulator& acc) const {
        const double end = p.death_time ? std::min(*p.death_time, t_) : t_;
        if (!(p.entry_time < end)) return;
        Branch main{space_.active(), 0.0, 1.0, p.entry_time};
        std::vector<Branch> parked;
        for (const auto& spell : observed_spells(p, t_)) {
            if (main.state != space_.active()) break;
            if (spell.start < main.from || spell.start >= end) continue;
            expose(main, spell.start, acc);
            const double award = spell.pending && corrected_ ? awards_->p_award : 1.0;
            occur(main.state, space_.disabled(), spell.start, spell.start - main.since, main.weight * award, acc);
            if (award < 1.0) parked.push_back({main.state, main.since, main.weight * (1.0 - award), spell.start});
            main = {space_.disabled(), spell.start, main.weight * award, spell.start};
            if (spell.how == SpellEnd::ongoing || spell.end >= end) continue;
            expose(main, spell.end, acc);
            const double reaward =
                spell.how == SpellEnd::terminated && corrected_ ? awards_->reaward_probability(t_ - spell.end) : 0.0;
            occur(main.state, space_.recovered(), spell.end, spell.end - main.since, main.weight * (1.0 - reaward),
                  acc);
            if (reaward > 0.0) parked.push_back({main.state, main.since, main.weight * reaward, spell.end});
            main = {space_.recovered(), spell.end, main.weight * (1.0 - reaward), spell.end};
        }
        parked.push_back(main);
        for (auto& b : parked) {
            expose(b, end, acc);
            if (p.death_time && *p.death_time <= t_) {
                occur(b.state, space_.dead(), end, end - b.since, b.weight, acc);
            }
        }
    }

private:
    struct Branch {
        State state;
        double since; // entry into the current state, for durations
        double weight;
        double from;  // exposure accumulated up to here
    };

    void expose(Branch& b, double to, Accumulator& acc) const {
        const double a = b.from;
        b.from = std::max(b.from, to);
        if (!(to > a) || b.weight <= 0.0 || space_.is_absorbing(b.state)) return;
        const double u0 = a - b.since;
        std::vector<double> cuts{a, to};
        for (double k : acc.grid->t_knots) {
            if (k > a && k < to) cuts.push_back(k);
        }
        for (double k : acc.grid->u_knots) {
            const double s = a + (k - u0);
            if (s > a && s < to) cuts.push_back(s);
        }
        std::sort(cuts.begin(), cuts.end());
        const bool active = b.state == space_.active();
        auto& row = acc.exposure[static_cast<std::size_t>(b.state)];
        for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
            const double lo = cuts[i];
            const double hi = cuts[i + 1];
            if (!(hi > lo)) continue;
            const double length = hi - lo;
            const double mid = 0.5 * (lo + hi);
            const std::size_t cell = acc.cell(mid, u0 + (mid - a));
            row[cell] += b.weight * length;
            if (!active) continue;
            // P(delay <= t - s) integrated over the piece; exactly the length when it is 1 throughout.
            double scaled = length;
            if (corrected_ && delay_->cdf(t_ - hi) < 1.0) scaled = delay_->integrated_cdf(t_ - hi, t_ - lo);
            acc.incidence_exposure[cell] += b.weight * scaled;
        }
    }

    void occur(State from, State to, double time, double duration, double weight, Accumulator& acc) const {
        if (weight <= 0.0) return;
        const auto& tr = space_.transitions();
        for (std::size_t j = 0; j < tr.size(); ++j) {
            if (tr[j].first == from && tr[j].second == to) {
                acc.occurrences[j][acc.cell(time, duration)] += weight;
                return;
            }
        }
    }

    const StateSpace& space_;
    double t_;
    bool corrected_;
    const DelayDistribution* delay_;
    const AwardModels* awards_;
};

OccurrenceExposure occurrence_exposure(const ObservedPortfolio& portfolio, const StateSpace& space,
                                       const EstimationGrid& grid, unsigned threads, bool corrected,
                                       const DelayDistribution* delay, const AwardModels* awards) {
    check_grid(grid);
    const auto n_states = static_cast<std::size_t>(space.size());
    const auto& transitions = space.transitions();
    const HistoryScanner scanner(space, portfolio.time, corrected, delay, awards);
    // Fixed chunking keeps the floating-point reduction order independent of the thread count.
    const std::size_t n = portfolio.policies.size();
    std::vector<Accumulator> parts(kChunks, Accumulator(grid, n_states, transitions.size()));
    parallel_for(kChunks, threads, [&](std::size_t c) {
        const std::size_t lo = n * c / kChunks;
        const std::size_t hi = n * (c + 1) / kChunks;
        for (std::size_t i = lo; i < hi; ++i) scanner.scan(portfolio.policies[i], parts[c]);
    });
    Accumulator total(grid, n_states, transitions.size());
    for (const auto& p : parts) total.add(p);

    OccurrenceExposure out;
    out.space = space;
    out.analysis_time = portfolio.time;
    out.corrected = corrected;
    const std::size_t nt = grid.t_knots.size();
    const std::size_t nu = grid.u_knots.size();
    for (std::size_t j = 0; j < transitions.size(); ++j) {
        HazardEstimate h;
        h.from = transitions[j].first;
        h.to = transitions[j].second;
        h.t_knots = grid.t_knots;
        h.u_knots = grid.u_knots;
        h.cells.resize(nt * nu);
        const bool incidence = h.from == space.active() && h.to == space.disabled();
        const auto& exposure = incidence ? total.incidence_exposure : total.exposure[static_cast<std::size_t>(h.from)];
        for (std::size_t c = 0; c < h.cells.size(); ++c) {
            auto& cell = h.cells[c];
            cell.occurrences = total.occurrences[j][c];
            cell.exposure = exposure[c];
            if (cell.exposure > 0.0) {
                cell.rate = cell.occurrences / cell.exposure;
                cell.standard_error = std::sqrt(cell.occurrences) / cell.exposure;
            } else {
                cell.flagged = true;
            }
        }
        // Flagged cells copy the nearest cell with exposure (row-major order breaks ties).
        for (std::size_t c = 0; c < h.cells.size(); ++c) {
            if (!h.cells[c].flagged) continue;
            const auto ci = static_cast<long>(c / nu);
            const auto ck = static_cast<long>(c % nu);
            long best = -1;
            long best_distance = std::numeric_limits<long>::max();
            for (std::size_t d = 0; d < h.cells.size(); ++d) {
                if (h.cells[d].flagged) continue;
                const long dist = std::labs(static_cast<long>(d / nu) - ci) + std::labs(static_cast<long>(d % nu) - ck);
                if (dist < best_distance) {
                    best_distance = dist;
                    best = static_cast<long>(d);
                }
            }
            if (best >= 0) h.cells[c].rate = h.cells[static_cast<std::size_t>(best)].rate;
        }
        out.hazards.push_back(std::move(h));
    }
    return out;
}

} // namespace

DelayDistribution DelayDistributionEstimate::nonparametric() const {
    if (points.size() == 1 && points.front() == 0.0) return ZeroDelay{};
    return StepDelay{points, cdf};
}

DelayDistribution DelayDistributionEstimate::exponential() const {
    if (exponential_mean <= 0.0) return ZeroDelay{};
    return ExponentialDelay{exponential_mean};
}

double DelayDistributionEstimate::nonparametric_mean() const {
    double mean = 0.0;
    double prev = 0.0;
    for (std::size_t j = 0; j < points.size(); ++j) {
        mean += points[j] * (cdf[j] - prev);
        prev = cdf[j];
    }
    return mean;
}

DelayDistributionEstimate estimate_reporting_delay(const ObservedPortfolio& portfolio, bool truncation_adjusted) {
    const double t = portfolio.time;
    std::vector<double> delays;
    std::vector<double> windows;
    for (const auto& p : portfolio.policies) {
        for (const auto& c : p.claims) {
            if (c.report_time > t) continue;
            delays.push_back(std::max(0.0, c.report_time - c.onset));
            windows.push_back(t - c.onset);
        }
    }
    if (delays.empty()) throw InsufficientData("no reported claims");
    DelayDistributionEstimate est;
    est.truncation_adjusted = truncation_adjusted;
    est.n_claims = delays.size();
    const auto n = static_cast<double>(delays.size());

    std::vector<double> sorted_d = delays;
    std::vector<double> sorted_w = windows;
    std::sort(sorted_d.begin(), sorted_d.end());
    std::sort(sorted_w.begin(), sorted_w.end());
    std::vector<double> counts;
    for (double d : sorted_d) {
        if (est.points.empty() || d != est.points.back()) {
            est.points.push_back(d);
            counts.push_back(0.0);
        }
        counts.back() += 1.0;
    }
    est.cdf.assign(est.points.size(), 1.0);
    if (truncation_adjusted) {
        // Reverse-time product limit: F(x) = prod_{x_j > x} (1 - n_j / R_j), R_j = #{d_i <= x_j <= T_i}.
        double f = 1.0;
        for (std::size_t j = est.points.size(); j-- > 0;) {
            est.cdf[j] = f;
            const double x = est.points[j];
            const auto at_most = std::upper_bound(sorted_d.begin(), sorted_d.end(), x) - sorted_d.begin();
            const auto before = std::lower_bound(sorted_w.begin(), sorted_w.end(), x) - sorted_w.begin();
            const auto at_risk = static_cast<double>(at_most - before);
            f *= 1.0 - counts[j] / at_risk;
        }
    } else {
        double cum = 0.0;
        for (std::size_t j = 0; j < est.points.size(); ++j) {
            cum += counts[j];
            est.cdf[j] = j + 1 == est.points.size() ? 1.0 : cum / n;
        }
    }

    double total_delay = 0.0;
    for (double d : delays) total_delay += d;
    if (total_delay <= 0.0) return est;
    if (!truncation_adjusted) {
        est.exponential_mean = total_delay / n;
        est.exponential_mean_se = est.exponential_mean / std::sqrt(n);
        return est;
    }
    // Conditional likelihood sum[log f(d_i) - log F(T_i)]; the score is decreasing in the rate.
    auto score = [&](double rate) {
        double s = n / rate - total_delay;
        for (double w : windows) {
            if (w > 0.0) s -= w / std::expm1(rate * w);
        }
        return s;
    };
    double lo = std::log(1e-8);
    double hi = std::log(1e8);
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        (score(std::exp(mid)) > 0.0 ? lo : hi) = mid;
    }
    const double rate = std::exp(0.5 * (lo + hi));
    double info = n / (rate * rate);
    for (double w : windows) {
        if (w > 0.0) {
            const double sh = std::sinh(0.5 * rate * w);
            info -= w * w / (4.0 * sh * sh);
        }
    }
    est.exponential_mean = 1.0 / rate;
    est.exponential_mean_se = info > 0.0 ? 1.0 / (std::sqrt(info) * rate * rate) : kInf;
    return est;
}

double ReawardModel::probability(double elapsed) const {
    const double pending = eventual * lag.survival(elapsed);
    const double denom = pending + 1.0 - eventual;
    return denom > 0.0 ? pending / denom : eventual;
}

double AwardModels::reaward_probability(double elapsed) const {
    if (!reaward) throw InsufficientData("no resolved benefit terminations: reaward probability undefined");
    return reaward->probability(elapsed);
}

AwardModels estimate_award_probabilities(const ObservedPortfolio& portfolio, double resolution_window) {
    const double t = portfolio.time;
    double awarded = 0.0;
    double resolved = 0.0;
    double reawarded = 0.0;
    double terminations = 0.0;
    std::vector<double> lags;
    for (const auto& p : portfolio.policies) {
        for (const auto& c : p.claims) {
            if (c.report_time > t) continue;
            bool award = false;
            double last_reject = -kInf;
            for (const auto& e : p.events) {
                if (e.claim != c.id || e.time > t) continue;
                if (e.decision == Decision::award) award = true;
                if (e.decision == Decision::reject) last_reject = e.time;
            }
            if (award) {
                awarded += 1.0;
                resolved += 1.0;
            } else if (last_reject <= t - resolution_window) {
                resolved += 1.0;
            }
        }
        for (const auto& e : p.events) {
            if (e.decision != Decision::terminate || e.time > t - resolution_window) continue;
            terminations += 1.0;
            for (const auto& r : p.events) {
                if (r.decision == Decision::reaward && r.claim == e.claim && r.window_start == e.time && r.time <= t) {
                    reawarded += 1.0;
                    lags.push_back(r.time - e.time);
                    break;
                }
            }
        }
    }
    if (resolved == 0.0) throw InsufficientData("no resolved claim decisions");
    AwardModels out;
    out.resolved_claims = static_cast<std::size_t>(resolved);
    out.p_award = awarded / resolved;
    out.p_award_se = std::sqrt(out.p_award * (1.0 - out.p_award) / resolved);
    if (terminations > 0.0) {
        ReawardModel m;
        m.terminations = static_cast<std::size_t>(terminations);
        m.eventual = reawarded / terminations;
        m.eventual_se = std::sqrt(m.eventual * (1.0 - m.eventual) / terminations);
        if (!lags.empty()) {
            std::sort(lags.begin(), lags.end());
            StepDelay step;
            for (std::size_t i = 0; i < lags.size(); ++i) {
                if (i + 1 < lags.size() && lags[i + 1] == lags[i]) continue;
                step.points.push_back(lags[i]);
                step.cdf.push_back(static_cast<double>(i + 1) / static_cast<double>(lags.size()));
            }
            if (step.points.size() == 1 && step.points.front() == 0.0) {
                m.lag = ZeroDelay{};
            } else {
                m.lag = std::move(step);
            }
        }
        out.reaward = std::move(m);
    }
    return out;
}

const CellEstimate& HazardEstimate::cell(double t, double u) const {
    return cells.at(knot_index(t_knots, t) * u_knots.size() + knot_index(u_knots, u));
}

TransitionIntensity HazardEstimate::intensity() const {
    RateGrid grid;
    grid.t_knots = t_knots;
    grid.u_knots = u_knots;
    grid.values.reserve(cells.size());
    for (const auto& c : cells) grid.values.push_back(c.rate);
    return {from, to, grid};
}

const HazardEstimate& OccurrenceExposure::hazard(State from, State to) const {
    for (const auto& h : hazards) {
        if (h.from == from && h.to == to) return h;
    }
    throw std::out_of_range("no estimate for transition " + std::to_string(from + 1) + "->" + std::to_string(to + 1));
}

SemiMarkovModel OccurrenceExposure::model() const {
    SemiMarkovModel m;
    m.space = space;
    for (const auto& h : hazards) m.intensities.push_back(h.intensity());
    return m;
}

OccurrenceExposure corrected_occurrence_exposure(const ObservedPortfolio& portfolio, const StateSpace& space,
                                                 const DelayDistribution& reporting_delay, const AwardModels& awards,
                                                 const EstimationGrid& grid, unsigned threads) {
    return occurrence_exposure(portfolio, space, grid, threads, true, &reporting_delay, &awards);
}

OccurrenceExposure naive_occurrence_exposure(const ObservedPortfolio& portfolio, const StateSpace& space,
                                             const EstimationGrid& grid, unsigned threads) {
    return occurrence_exposure(portfolio, space, grid, threads, false, nullptr, nullptr);
}

void write_estimates_csv(std::ostream& os, const OccurrenceExposure& naive, const OccurrenceExposure& corrected) {
    os << "from,to,t_start,u_start,naive_occurrences,naive_exposure,naive_rate,naive_se,"
          "corrected_occurrences,corrected_exposure,corrected_rate,corrected_se,flagged\n";
    os.precision(10);
    for (const auto& h : corrected.hazards) {
        const auto& raw = naive.hazard(h.from, h.to);
        for (std::size_t c = 0; c < h.cells.size(); ++c) {
            const auto& a = raw.cells.at(c);
            const auto& b = h.cells[c];
            os << corrected.space.label(h.from) << ',' << corrected.space.label(h.to) << ','
               << h.t_knots[c / h.u_knots.size()] << ',' << h.u_knots[c % h.u_knots.size()] << ',' << a.occurrences
               << ',' << a.exposure << ',' << a.rate << ',' << a.standard_error << ',' << b.occurrences << ','
               << b.exposure << ',' << b.rate << ',' << b.standard_error << ',' << (a.flagged || b.flagged ? 1 : 0)
               << '\n';
        }
    }
}

void write_delay_csv(std::ostream& os, const DelayDistributionEstimate& estimate) {
    os << "delay,cdf\n";
    os.precision(10);
    for (std::size_t j = 0; j < estimate.points.size(); ++j) os << estimate.points[j] << ',' << estimate.cdf[j] << '\n';
}

} // namespace lec
