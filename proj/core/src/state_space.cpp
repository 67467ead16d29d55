#include "lec/state_space.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>

namespace lec {

StateSpace::StateSpace(Kind kind, std::vector<std::string> labels, std::vector<std::pair<State, State>> allowed)
    : kind_(kind), labels_(std::move(labels)), allowed_(std::move(allowed)) {}

StateSpace StateSpace::classic() {
    return StateSpace(Kind::classic, {"Active", "Disabled", "Dead"}, {{0, 1}, {1, 0}, {0, 2}, {1, 2}});
}

StateSpace StateSpace::with_reactivation() {
    return StateSpace(Kind::reactivation, {"Active", "Disabled", "Reactivated", "Dead"},
                      {{0, 1}, {1, 2}, {0, 3}, {1, 3}, {2, 3}});
}

StateSpace StateSpace::from_name(std::string_view name) {
    if (name == "classic") {
        return classic();
    }
    if (name == "reactivation") {
        return with_reactivation();
    }
    throw std::invalid_argument("unknown state space '" + std::string(name) + "'");
}

std::string_view StateSpace::name() const noexcept {
    return kind_ == Kind::classic ? "classic" : "reactivation";
}

std::optional<State> StateSpace::index_of(std::string_view label) const {
    const auto it = std::find(labels_.begin(), labels_.end(), label);
    if (it == labels_.end()) {
        return std::nullopt;
    }
    return static_cast<State>(it - labels_.begin());
}

bool StateSpace::allows(State from, State to) const noexcept {
    return std::find(allowed_.begin(), allowed_.end(), std::pair{from, to}) != allowed_.end();
}

bool StateSpace::is_absorbing(State s) const noexcept {
    return std::none_of(allowed_.begin(), allowed_.end(), [s](const auto& p) { return p.first == s; });
}

std::vector<std::string> StateSpace::check() const {
    std::vector<std::string> out;
    if (!is_absorbing(dead())) {
        out.emplace_back("Dead is not absorbing");
    }
    std::set<std::string> unique(labels_.begin(), labels_.end());
    if (unique.size() != labels_.size()) {
        out.emplace_back("duplicate state labels");
    }
    const StateSpace reference = kind_ == Kind::classic ? classic() : with_reactivation();
    auto a = allowed_;
    auto b = reference.allowed_;
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    if (a != b) {
        out.emplace_back("allowed transitions differ from the " + std::string(name()) + " diagram");
    }
    return out;
}

} // namespace lec
