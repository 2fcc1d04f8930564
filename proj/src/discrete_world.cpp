#include "selfprior/discrete_world.hpp"

#include <algorithm>
#include <cctype>
#include <stdexcept>

namespace selfprior::discrete {

DiscreteAction action_from_index(std::size_t i) {
    if (i >= kNumActions) throw std::invalid_argument("action index out of range");
    return static_cast<DiscreteAction>(i);
}

std::string action_name(DiscreteAction a) {
    switch (a) {
        case DiscreteAction::Left: return "LEFT";
        case DiscreteAction::Stay: return "STAY";
        case DiscreteAction::Right: return "RIGHT";
    }
    return "?";
}

DiscreteAction parse_action(const std::string& name) {
    std::string upper = name;
    std::transform(upper.begin(), upper.end(), upper.begin(), [](unsigned char c) { return std::toupper(c); });
    for (auto a : kAllActions)
        if (action_name(a) == upper) return a;
    throw std::invalid_argument("unknown action '" + name + "'");
}

DiscreteWorldState::DiscreteWorldState(int hand_, std::optional<int> sticker_) : hand(hand_), sticker(sticker_) {
    if (hand < 0 || hand >= kHandPositions) throw std::invalid_argument("hand position must be in [0, 4]");
    if (sticker && (*sticker < 1 || *sticker > kSensorCount))
        throw std::invalid_argument("sticker position must be in {1, 2, 3}");
}

std::size_t DiscreteWorldState::index() const {
    const int slot = sticker ? *sticker : 0;
    return static_cast<std::size_t>(hand + kHandPositions * slot);
}

DiscreteWorldState DiscreteWorldState::from_index(std::size_t s) {
    if (s >= kNumStates) throw std::invalid_argument("hidden state index out of range");
    const int hand = static_cast<int>(s) % kHandPositions;
    const int slot = static_cast<int>(s) / kHandPositions;
    return DiscreteWorldState(hand, slot == 0 ? std::nullopt : std::optional<int>(slot));
}

int TouchPattern::value() const { return (bits[0] ? 4 : 0) | (bits[1] ? 2 : 0) | (bits[2] ? 1 : 0); }

TouchPattern TouchPattern::from_value(int value) {
    if (value < 0 || value > 7) throw std::invalid_argument("touch value must be in [0, 7]");
    return TouchPattern{{(value & 4) != 0, (value & 2) != 0, (value & 1) != 0}};
}

std::string TouchPattern::str() const {
    std::string s;
    for (bool b : bits) s.push_back(b ? '1' : '0');
    return s;
}

TouchPattern TouchPattern::parse(const std::string& s) {
    if (s.size() != kSensorCount) throw std::invalid_argument("touch pattern must have 3 characters");
    TouchPattern t;
    for (std::size_t k = 0; k < s.size(); ++k) {
        if (s[k] != '0' && s[k] != '1') throw std::invalid_argument("touch pattern must contain only 0 and 1");
        t.bits[k] = s[k] == '1';
    }
    return t;
}

DiscreteObservation::DiscreteObservation(std::size_t index_) : index(index_) {
    if (index >= kNumObservations) throw std::invalid_argument("observation index out of range");
}

CaregiverEvent CaregiverEvent::attach(int position) {
    if (position < 1 || position > kSensorCount) throw std::invalid_argument("sticker position must be in {1, 2, 3}");
    return {Kind::Attach, position};
}

std::string CaregiverEvent::str() const {
    switch (kind) {
        case Kind::NoChange: return "none";
        case Kind::Attach: return "attach:" + std::to_string(position);
        case Kind::Remove: return "remove";
    }
    return "none";
}

CaregiverEvent CaregiverEvent::parse(const std::string& s) {
    if (s == "none") return none();
    if (s == "remove") return remove();
    if (s.rfind("attach:", 0) == 0 && s.size() == 8) return attach(s[7] - '0');
    throw std::invalid_argument("unknown caregiver event '" + s + "'");
}

DiscreteObservation encode_observation(const TouchPattern& touch, int hand) {
    if (hand < 0 || hand >= kHandPositions) throw std::invalid_argument("hand position must be in [0, 4]");
    return DiscreteObservation(static_cast<std::size_t>(touch.value() * kHandPositions + hand));
}

std::pair<TouchPattern, int> decode_observation(DiscreteObservation o) {
    const int idx = static_cast<int>(o.index);
    return {TouchPattern::from_value(idx / kHandPositions), idx % kHandPositions};
}

DiscreteObservation observe(const DiscreteWorldState& state) {
    TouchPattern touch;
    for (int p = 1; p <= kSensorCount; ++p)
        touch.bits[static_cast<std::size_t>(p - 1)] = state.hand == p || state.sticker == p;
    return encode_observation(touch, state.hand);
}

DiscreteWorldState step_world(const DiscreteWorldState& state, DiscreteAction action, CaregiverEvent event) {
    const int delta = static_cast<int>(action_index(action)) - 1;
    DiscreteWorldState next = state;
    next.hand = std::clamp(state.hand + delta, 0, kHandPositions - 1);
    switch (event.kind) {
        case CaregiverEvent::Kind::NoChange: break;
        case CaregiverEvent::Kind::Attach: next.sticker = event.position; break;
        case CaregiverEvent::Kind::Remove: next.sticker.reset(); break;
    }
    return next;
}

Eigen::MatrixXd build_likelihood_matrix() {
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(kNumObservations, kNumStates);
    for (std::size_t s = 0; s < kNumStates; ++s)
        a(static_cast<Eigen::Index>(observe(DiscreteWorldState::from_index(s)).index), static_cast<Eigen::Index>(s)) = 1.0;
    return a;
}

std::array<Eigen::MatrixXd, kNumActions> build_transition_matrices() {
    std::array<Eigen::MatrixXd, kNumActions> b;
    for (auto action : kAllActions) {
        Eigen::MatrixXd m = Eigen::MatrixXd::Zero(kNumStates, kNumStates);
        for (std::size_t s = 0; s < kNumStates; ++s) {
            const auto next = step_world(DiscreteWorldState::from_index(s), action);
            m(static_cast<Eigen::Index>(next.index()), static_cast<Eigen::Index>(s)) = 1.0;
        }
        b[action_index(action)] = std::move(m);
    }
    return b;
}

}  // namespace selfprior::discrete
