#pragma once

#include <Eigen/Core>

#include <array>
#include <cstddef>
#include <optional>
#include <string>

namespace selfprior::discrete {

inline constexpr int kHandPositions = 5;
inline constexpr int kSensorCount = 3;
inline constexpr std::size_t kNumObservations = 40;  // 8 touch patterns x 5 hand positions
inline constexpr std::size_t kNumStates = 20;        // 5 hand positions x {none, 1, 2, 3}
inline constexpr std::size_t kNumActions = 3;

enum class DiscreteAction { Left = 0, Stay = 1, Right = 2 };

inline constexpr std::array<DiscreteAction, kNumActions> kAllActions{
    DiscreteAction::Left, DiscreteAction::Stay, DiscreteAction::Right};

constexpr std::size_t action_index(DiscreteAction a) { return static_cast<std::size_t>(a); }
DiscreteAction action_from_index(std::size_t i);
std::string action_name(DiscreteAction a);
/// Accepts "LEFT", "STAY", "RIGHT" (case-insensitive); throws std::invalid_argument.
DiscreteAction parse_action(const std::string& name);

/// Hand position in [0, 4] and an optional sticker on arm position 1..3.
struct DiscreteWorldState {
    int hand = 0;
    std::optional<int> sticker;

    DiscreteWorldState() = default;
    /// Throws std::invalid_argument on out-of-range hand or sticker.
    DiscreteWorldState(int hand, std::optional<int> sticker);

    /// Dense hidden-state index: hand + 5 * sticker_slot, sticker_slot 0 when absent.
    std::size_t index() const;
    static DiscreteWorldState from_index(std::size_t s);

    friend bool operator==(const DiscreteWorldState&, const DiscreteWorldState&) = default;
};

/// Sensor bits for arm positions 1, 2, 3 in that order.
struct TouchPattern {
    std::array<bool, kSensorCount> bits{};

    /// Position 1 is the most significant bit.
    int value() const;
    static TouchPattern from_value(int value);
    /// "101" style string, position 1 first.
    std::string str() const;
    static TouchPattern parse(const std::string& s);

    friend bool operator==(const TouchPattern&, const TouchPattern&) = default;
};

struct DiscreteObservation {
    std::size_t index = 0;

    DiscreteObservation() = default;
    explicit DiscreteObservation(std::size_t index);

    friend bool operator==(const DiscreteObservation&, const DiscreteObservation&) = default;
};

struct CaregiverEvent {
    enum class Kind { NoChange, Attach, Remove };
    Kind kind = Kind::NoChange;
    int position = 0;  // only meaningful for Attach

    static CaregiverEvent none() { return {}; }
    static CaregiverEvent attach(int position);
    static CaregiverEvent remove() { return {Kind::Remove, 0}; }

    std::string str() const;
    static CaregiverEvent parse(const std::string& s);

    friend bool operator==(const CaregiverEvent&, const CaregiverEvent&) = default;
};

DiscreteObservation encode_observation(const TouchPattern& touch, int hand);
std::pair<TouchPattern, int> decode_observation(DiscreteObservation o);

/// Touch at p in {1,2,3} iff the hand or the sticker is at p.
DiscreteObservation observe(const DiscreteWorldState& state);

/// Hand moves one step and clamps at the ends; the caregiver event is applied
/// afterwards. Attach on an occupied arm replaces the sticker.
DiscreteWorldState step_world(const DiscreteWorldState& state, DiscreteAction action,
                              CaregiverEvent event = CaregiverEvent::none());

/// A (40 x 20): column s is the one-hot of observe(s).
Eigen::MatrixXd build_likelihood_matrix();

/// B_a (20 x 20) for a = LEFT, STAY, RIGHT. The sticker persists under B.
std::array<Eigen::MatrixXd, kNumActions> build_transition_matrices();

}  // namespace selfprior::discrete
