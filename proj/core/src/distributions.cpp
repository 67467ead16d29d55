#include "lec/distributions.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace lec {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

double exp_integrated_cdf(double mean, double a, double b) {
    // int_a^b (1 - e^{-x/m}) dx
    return (b - a) - mean * (std::exp(-a / mean) - std::exp(-b / mean));
}

} // namespace

DelayDistribution::DelayDistribution(Spec spec) : spec_(std::move(spec)) {
    if (const auto* s = std::get_if<StepDelay>(&spec_); s && s->points.size() == s->cdf.size()) {
        step_integral_.assign(s->points.size(), 0.0);
        for (std::size_t j = 1; j < s->points.size(); ++j) {
            step_integral_[j] = step_integral_[j - 1] + s->cdf[j - 1] * (s->points[j] - s->points[j - 1]);
        }
    }
}

double DelayDistribution::cdf(double x) const {
    if (x < 0.0) {
        return 0.0;
    }
    return std::visit(overloaded{
                          [](const ZeroDelay&) { return 1.0; },
                          [&](const ExponentialDelay& e) { return -std::expm1(-x / e.mean); },
                          [&](const UniformDelay& u) {
                              if (u.high <= u.low) {
                                  return x >= u.low ? 1.0 : 0.0;
                              }
                              return std::clamp((x - u.low) / (u.high - u.low), 0.0, 1.0);
                          },
                          [&](const StepDelay& s) {
                              const auto it = std::upper_bound(s.points.begin(), s.points.end(), x);
                              if (it == s.points.begin()) {
                                  return 0.0;
                              }
                              return s.cdf[static_cast<std::size_t>(it - s.points.begin()) - 1];
                          },
                      },
                      spec_);
}

double DelayDistribution::mean() const {
    return std::visit(overloaded{
                          [](const ZeroDelay&) { return 0.0; },
                          [](const ExponentialDelay& e) { return e.mean; },
                          [](const UniformDelay& u) { return 0.5 * (u.low + u.high); },
                          [](const StepDelay& s) {
                              double m = 0.0;
                              double prev = 0.0;
                              for (std::size_t j = 0; j < s.points.size(); ++j) {
                                  m += (s.cdf[j] - prev) * s.points[j];
                                  prev = s.cdf[j];
                              }
                              return m;
                          },
                      },
                      spec_);
}

double DelayDistribution::integrated_cdf(double a, double b) const {
    if (b <= a) {
        return 0.0;
    }
    if (b <= 0.0) {
        return 0.0;
    }
    a = std::max(a, 0.0);
    return std::visit(overloaded{
                          [&](const ZeroDelay&) { return b - a; },
                          [&](const ExponentialDelay& e) { return exp_integrated_cdf(e.mean, a, b); },
                          [&](const UniformDelay& u) {
                              // piecewise linear; integrate exactly on three pieces
                              auto F = [&](double x) { return cdf(x); };
                              std::vector<double> cuts{a, b};
                              for (double c : {u.low, u.high}) {
                                  if (c > a && c < b) cuts.push_back(c);
                              }
                              std::sort(cuts.begin(), cuts.end());
                              double total = 0.0;
                              for (std::size_t j = 0; j + 1 < cuts.size(); ++j) {
                                  total += 0.5 * (F(cuts[j]) + F(cuts[j + 1])) * (cuts[j + 1] - cuts[j]);
                              }
                              return total;
                          },
                          [&](const StepDelay& s) {
                              auto integral_to = [&](double x) {
                                  const auto it = std::upper_bound(s.points.begin(), s.points.end(), x);
                                  if (it == s.points.begin()) return 0.0;
                                  const auto j = static_cast<std::size_t>(it - s.points.begin()) - 1;
                                  return step_integral_[j] + s.cdf[j] * (x - s.points[j]);
                              };
                              return integral_to(b) - integral_to(a);
                          },
                      },
                      spec_);
}

double DelayDistribution::sample(RngStream& rng) const {
    return std::visit(overloaded{
                          [](const ZeroDelay&) { return 0.0; },
                          [&](const ExponentialDelay& e) { return e.mean * rng.exponential(); },
                          [&](const UniformDelay& u) { return u.low + (u.high - u.low) * rng.uniform(); },
                          [&](const StepDelay& s) {
                              const double v = rng.uniform();
                              const auto it = std::upper_bound(s.cdf.begin(), s.cdf.end(), v);
                              const auto j = std::min(static_cast<std::size_t>(it - s.cdf.begin()),
                                                      s.points.size() - 1);
                              return s.points[j];
                          },
                      },
                      spec_);
}

std::string DelayDistribution::describe() const {
    std::ostringstream os;
    std::visit(overloaded{
                   [&](const ZeroDelay&) { os << "zero"; },
                   [&](const ExponentialDelay& e) { os << "exponential(mean=" << e.mean << ")"; },
                   [&](const UniformDelay& u) { os << "uniform(" << u.low << "," << u.high << ")"; },
                   [&](const StepDelay& s) { os << "step(" << s.points.size() << " points)"; },
               },
               spec_);
    return os.str();
}

std::vector<std::string> DelayDistribution::check() const {
    std::vector<std::string> out;
    std::visit(overloaded{
                   [](const ZeroDelay&) {},
                   [&](const ExponentialDelay& e) {
                       if (!(e.mean > 0.0) || !std::isfinite(e.mean)) out.emplace_back("exponential mean must be positive");
                   },
                   [&](const UniformDelay& u) {
                       if (!(u.low >= 0.0) || !(u.high >= u.low)) out.emplace_back("uniform bounds must satisfy 0 <= low <= high");
                   },
                   [&](const StepDelay& s) {
                       if (s.points.empty() || s.points.size() != s.cdf.size()) {
                           out.emplace_back("step distribution needs matching points and cdf values");
                           return;
                       }
                       if (s.points.front() < 0.0) out.emplace_back("delay support must be nonnegative");
                       for (std::size_t j = 1; j < s.points.size(); ++j) {
                           if (!(s.points[j] > s.points[j - 1])) out.emplace_back("delay points not strictly increasing");
                           if (s.cdf[j] < s.cdf[j - 1]) out.emplace_back("delay cdf decreasing");
                       }
                       if (std::abs(s.cdf.back() - 1.0) > 1e-9) out.emplace_back("delay cdf does not reach 1");
                   },
               },
               spec_);
    return out;
}

} // namespace lec
