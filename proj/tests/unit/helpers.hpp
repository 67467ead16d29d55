#pragma once

#include <cmath>

#include "lec/multistate.hpp"

namespace lec::test {

inline TransitionIntensity constant(State from, State to, double rate) { return {from, to, ConstantRate{rate}}; }

/// Active/Disabled/Dead with constant rates.
inline SemiMarkovModel classic_model(double incidence, double recovery, double mort_active, double mort_disabled) {
    SemiMarkovModel m;
    m.space = StateSpace::classic();
    m.intensities = {constant(0, 1, incidence), constant(1, 0, recovery), constant(0, 2, mort_active),
                     constant(1, 2, mort_disabled)};
    return m;
}

inline SemiMarkovModel reactivation_model(double incidence, double recovery, double mortality) {
    SemiMarkovModel m;
    m.space = StateSpace::with_reactivation();
    m.intensities = {constant(0, 1, incidence), constant(1, 2, recovery), constant(0, 3, mortality),
                     constant(1, 3, mortality), constant(2, 3, mortality)};
    return m;
}

inline double rel_diff(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

} // namespace lec::test
