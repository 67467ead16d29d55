#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace lec {

/// Zero-based state index. User-facing text uses one-based numbering.
using State = int;

/// The two disability state spaces supported by the engine.
///
/// classic:      1 Active, 2 Disabled, 3 Dead with 1->2, 2->1, 1->3, 2->3.
/// reactivation: 1 Active, 2 Disabled, 3 Reactivated, 4 Dead with
///               1->2, 2->3, 1->4, 2->4, 3->4 (no relapse).
class StateSpace {
public:
    enum class Kind { classic, reactivation };

    static StateSpace classic();
    static StateSpace with_reactivation();
    /// Accepts "classic" or "reactivation"; throws std::invalid_argument otherwise.
    static StateSpace from_name(std::string_view name);

    Kind kind() const noexcept { return kind_; }
    std::string_view name() const noexcept;
    int size() const noexcept { return static_cast<int>(labels_.size()); }
    const std::string& label(State s) const { return labels_.at(static_cast<std::size_t>(s)); }
    std::optional<State> index_of(std::string_view label) const;

    const std::vector<std::pair<State, State>>& transitions() const noexcept { return allowed_; }
    bool allows(State from, State to) const noexcept;
    bool is_absorbing(State s) const noexcept;

    State active() const noexcept { return 0; }
    State disabled() const noexcept { return 1; }
    State dead() const noexcept { return size() - 1; }
    /// State entered when benefits end through recovery.
    State recovered() const noexcept { return kind_ == Kind::classic ? 0 : 2; }

    /// Empty when Dead is absorbing, indices are unique and the arrows match the kind.
    std::vector<std::string> check() const;

    friend bool operator==(const StateSpace& a, const StateSpace& b) noexcept { return a.kind_ == b.kind_; }

private:
    StateSpace(Kind kind, std::vector<std::string> labels, std::vector<std::pair<State, State>> allowed);

    Kind kind_;
    std::vector<std::string> labels_;
    std::vector<std::pair<State, State>> allowed_;
};

} // namespace lec
