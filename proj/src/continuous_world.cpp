#include "selfprior/continuous_world.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace selfprior::continuous {

namespace {

constexpr double kLeftUpperArmDirection = std::numbers::pi - Body::left_shoulder_angle;
constexpr double kLeftForearmDirection = kLeftUpperArmDirection - Body::left_elbow_angle;

double clip(double x, double lo, double hi) {
    return std::clamp(std::isnan(x) ? 0.0 : x, lo, hi);
}

ArmPose clip_pose(ArmPose p) {
    p.shoulder = clip(p.shoulder, Body::shoulder_min, Body::shoulder_max);
    p.elbow = clip(p.elbow, Body::elbow_min, Body::elbow_max);
    p.height = clip(p.height, Body::height_min, Body::height_max);
    return p;
}

double hand_band_distance(const ArmPose& pose) {
    return distance_to_band(forearm_local_coords(forward_kinematics(pose)));
}

double hand_intensity(double height) {
    if (height > Body::contact_height) return 0.0;
    return std::max(0.0, 1.0 - height / Body::contact_height);
}

// Value of cell (i, j); shared by both render kernels.
double cell_value(int i, int j, bool hand_active, Vec2 hand, double hand_level, const std::optional<Sticker>& sticker) {
    const double cu = i + 0.5;
    const double cv = j + 0.5;
    double value = 0.0;
    if (hand_active) {
        const double du = cu - hand.x;
        const double dv = cv - hand.y;
        if (du * du + dv * dv <= Body::hand_radius * Body::hand_radius) value = hand_level;
    }
    if (sticker) {
        const double du = cu - sticker->center.x;
        const double dv = cv - sticker->center.y;
        if (du * du + dv * dv <= kStickerRadius * kStickerRadius) value = std::max(value, 1.0);
    }
    return value;
}

void mark_covered(std::vector<unsigned char>& covered, Vec2 local, double tolerance) {
    const int i_lo = std::max(0, static_cast<int>(std::floor(local.x - tolerance - 0.5)));
    const int i_hi = std::min(kTactileRows - 1, static_cast<int>(std::ceil(local.x + tolerance - 0.5)));
    const int j_lo = std::max(0, static_cast<int>(std::floor(local.y - tolerance - 0.5)));
    const int j_hi = std::min(kTactileCols - 1, static_cast<int>(std::ceil(local.y + tolerance - 0.5)));
    for (int i = i_lo; i <= i_hi; ++i) {
        for (int j = j_lo; j <= j_hi; ++j) {
            const double du = i + 0.5 - local.x;
            const double dv = j + 0.5 - local.y;
            if (du * du + dv * dv <= tolerance * tolerance) covered[TactileFrame::flat_index(i, j)] = 1;
        }
    }
}

CoverageResult summarize_coverage(const std::vector<unsigned char>& covered, std::size_t poses) {
    CoverageResult result;
    result.poses_evaluated = poses;
    for (std::size_t k = 0; k < covered.size(); ++k) {
        if (covered[k]) ++result.covered;
        else result.uncovered.push_back(k);
    }
    return result;
}

std::size_t grid_steps(double range, double resolution) {
    if (!(resolution > 0.0)) throw std::invalid_argument("coverage resolution must be positive");
    return static_cast<std::size_t>(std::floor(range / resolution)) + 1;
}

}  // namespace

bool ArmPose::within_limits() const {
    return shoulder >= Body::shoulder_min && shoulder <= Body::shoulder_max && elbow >= Body::elbow_min &&
           elbow <= Body::elbow_max && height >= Body::height_min && height <= Body::height_max;
}

ContinuousAction ContinuousAction::clipped() const {
    return {clip(d_shoulder, -Body::max_joint_step, Body::max_joint_step),
            clip(d_elbow, -Body::max_joint_step, Body::max_joint_step),
            clip(d_height, -Body::max_height_step, Body::max_height_step)};
}

Vec2 right_shoulder_position() { return {Body::torso / 2.0, 0.0}; }

Vec2 left_elbow_position() {
    return {-Body::torso / 2.0 + Body::left_upper_arm * std::cos(kLeftUpperArmDirection),
            Body::left_upper_arm * std::sin(kLeftUpperArmDirection)};
}

Vec2 left_forearm_tip() {
    const Vec2 e = left_elbow_position();
    return {e.x + Body::left_forearm * std::cos(kLeftForearmDirection),
            e.y + Body::left_forearm * std::sin(kLeftForearmDirection)};
}

Vec2 forward_kinematics(const ArmPose& pose) {
    const Vec2 s = right_shoulder_position();
    const double a1 = pose.shoulder;
    const double a2 = pose.shoulder + pose.elbow;
    return {s.x + Body::right_upper_arm * std::cos(a1) + Body::right_forearm * std::cos(a2),
            s.y + Body::right_upper_arm * std::sin(a1) + Body::right_forearm * std::sin(a2)};
}

Vec2 forearm_local_coords(Vec2 point) {
    const Vec2 origin = left_elbow_position();
    const double ax = std::cos(kLeftForearmDirection);
    const double ay = std::sin(kLeftForearmDirection);
    const double dx = point.x - origin.x;
    const double dy = point.y - origin.y;
    // Lateral axis is the forearm axis turned +90 degrees, away from the torso.
    return {dx * ax + dy * ay, -dx * ay + dy * ax};
}

double distance_to_band(Vec2 local) {
    const double du = std::max({0.0 - local.x, 0.0, local.x - Body::left_forearm});
    const double dv = std::max({0.0 - local.y, 0.0, local.y - static_cast<double>(kTactileCols)});
    return std::hypot(du, dv);
}

TactileFrame render_tactile(const ContinuousWorldState& state) {
    TactileFrame frame;
    const Vec2 hand = forearm_local_coords(forward_kinematics(state.pose));
    const double level = hand_intensity(state.pose.height);
    const bool hand_active = state.pose.height <= Body::contact_height;
    auto& cells = frame.flat();
#pragma omp parallel for schedule(static)
    for (int i = 0; i < kTactileRows; ++i)
        for (int j = 0; j < kTactileCols; ++j)
            cells[TactileFrame::flat_index(i, j)] = cell_value(i, j, hand_active, hand, level, state.sticker);
    return frame;
}

TactileFrame render_tactile_serial(const ContinuousWorldState& state) {
    TactileFrame frame;
    const Vec2 hand = forearm_local_coords(forward_kinematics(state.pose));
    const double level = hand_intensity(state.pose.height);
    const bool hand_active = state.pose.height <= Body::contact_height;
    for (int i = 0; i < kTactileRows; ++i)
        for (int j = 0; j < kTactileCols; ++j)
            frame.at(i, j) = cell_value(i, j, hand_active, hand, level, state.sticker);
    return frame;
}

ProprioVector proprioception(const ContinuousWorldState& state) {
    return {state.pose.shoulder, state.pose.elbow, state.pose.height};
}

ActionResult apply_action(const ContinuousWorldState& state, const ContinuousAction& action) {
    const ContinuousAction a = action.clipped();
    ArmPose candidate = state.pose;
    candidate.shoulder += a.d_shoulder;
    candidate.elbow += a.d_elbow;
    candidate.height += a.d_height;
    candidate = clip_pose(candidate);
    if (hand_band_distance(candidate) > Body::band_margin) return {state, false};
    ContinuousWorldState next = state;
    next.pose = candidate;
    return {next, true};
}

ContactResult update_sticker_contact(const ContinuousWorldState& state) {
    if (!state.sticker) return {state, false};
    ContinuousWorldState next = state;
    const Vec2 hand = forearm_local_coords(forward_kinematics(state.pose));
    const double d = std::hypot(hand.x - state.sticker->center.x, hand.y - state.sticker->center.y);
    if (d <= Body::hand_radius + kStickerRadius) {
        next.sticker->contact_streak += 1;
    } else {
        next.sticker->contact_streak = 0;
    }
    if (next.sticker->contact_streak >= kRemovalStreak) {
        next.sticker.reset();
        return {next, true};
    }
    return {next, false};
}

StepResult step(const ContinuousWorldState& state, const ContinuousAction& action) {
    auto moved = apply_action(state, action);
    auto contact = update_sticker_contact(moved.state);
    return {contact.state, moved.accepted, contact.removed};
}

bool sticker_position_valid(double u, double v) {
    return std::isfinite(u) && std::isfinite(v) && u >= kStickerRadius && u <= kTactileRows - kStickerRadius &&
           v >= kStickerRadius && v <= kTactileCols - kStickerRadius;
}

ContinuousWorldState place_sticker(ContinuousWorldState state, double u, double v) {
    if (!sticker_position_valid(u, v))
        throw std::invalid_argument("sticker centre must be at least 4 mm from every band edge");
    state.sticker = Sticker{{u, v}, 0};
    return state;
}

Vec2 random_sticker_center(RandomStream& rng) {
    const double u = rng.uniform(kStickerRadius, kTactileRows - kStickerRadius);
    const double v = rng.uniform(kStickerRadius, kTactileCols - kStickerRadius);
    return {u, v};
}

ContinuousWorldState reset_world(RandomStream& rng, const StickerMode& mode) {
    ContinuousWorldState state;
    do {
        state.pose.shoulder = rng.uniform(Body::shoulder_min, Body::shoulder_max);
        state.pose.elbow = rng.uniform(Body::elbow_min, Body::elbow_max);
    } while (hand_band_distance(state.pose) > Body::band_margin);
    state.pose.height = Body::height_max;
    if (std::holds_alternative<RandomSticker>(mode)) {
        const Vec2 c = random_sticker_center(rng);
        state.sticker = Sticker{c, 0};
    } else if (const auto* at = std::get_if<StickerAt>(&mode)) {
        state = place_sticker(state, at->u, at->v);
    }
    return state;
}

ContinuousWorldState reset_world(std::uint64_t seed, const StickerMode& mode) {
    RandomStream rng(seed);
    return reset_world(rng, mode);
}

CoverageResult workspace_coverage(double resolution, double tolerance) {
    const std::size_t ns = grid_steps(Body::shoulder_max - Body::shoulder_min, resolution);
    const std::size_t ne = grid_steps(Body::elbow_max - Body::elbow_min, resolution);
    std::vector<unsigned char> covered(kTactileCells, 0);
    const auto count = static_cast<long>(ns);
#pragma omp parallel
    {
        std::vector<unsigned char> local(kTactileCells, 0);
#pragma omp for schedule(static)
        for (long a = 0; a < count; ++a) {
            ArmPose pose{Body::shoulder_min + static_cast<double>(a) * resolution, 0.0, 0.0};
            for (std::size_t b = 0; b < ne; ++b) {
                pose.elbow = Body::elbow_min + static_cast<double>(b) * resolution;
                mark_covered(local, forearm_local_coords(forward_kinematics(pose)), tolerance);
            }
        }
#pragma omp critical
        for (std::size_t k = 0; k < kTactileCells; ++k) covered[k] |= local[k];
    }
    return summarize_coverage(covered, ns * ne);
}

CoverageResult workspace_coverage_serial(double resolution, double tolerance) {
    const std::size_t ns = grid_steps(Body::shoulder_max - Body::shoulder_min, resolution);
    const std::size_t ne = grid_steps(Body::elbow_max - Body::elbow_min, resolution);
    std::vector<unsigned char> covered(kTactileCells, 0);
    for (std::size_t a = 0; a < ns; ++a) {
        for (std::size_t b = 0; b < ne; ++b) {
            const ArmPose pose{Body::shoulder_min + static_cast<double>(a) * resolution,
                               Body::elbow_min + static_cast<double>(b) * resolution, 0.0};
            mark_covered(covered, forearm_local_coords(forward_kinematics(pose)), tolerance);
        }
    }
    return summarize_coverage(covered, ns * ne);
}

}  // namespace selfprior::continuous
