#pragma once

#include "selfprior/categorical.hpp"

#include <array>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <optional>
#include <variant>
#include <vector>

namespace selfprior::continuous {

/// Fixed body geometry, millimetres and radians.
struct Body {
    static constexpr double left_forearm = 80.0;
    static constexpr double left_upper_arm = 70.0;
    static constexpr double torso = 140.0;
    static constexpr double right_upper_arm = 70.0;
    static constexpr double right_forearm = 80.0;
    static constexpr double left_shoulder_angle = 2.0 * std::numbers::pi / 3.0;
    static constexpr double left_elbow_angle = std::numbers::pi / 3.0;
    static constexpr double hand_radius = 6.0;

    static constexpr double shoulder_min = 0.0;
    static constexpr double shoulder_max = 2.0 * std::numbers::pi / 3.0;
    static constexpr double elbow_min = 0.0;
    static constexpr double elbow_max = 3.0 * std::numbers::pi / 4.0;
    static constexpr double height_min = 0.0;
    static constexpr double height_max = 20.0;

    static constexpr double max_joint_step = 0.05;
    static constexpr double max_height_step = 0.5;
    /// Hand centre must stay within this planar distance of the tactile band.
    static constexpr double band_margin = 15.0;
    /// Touch registers at or below this height.
    static constexpr double contact_height = 10.0;
};

inline constexpr int kTactileRows = 80;  // along the forearm, u
inline constexpr int kTactileCols = 30;  // lateral, v
inline constexpr std::size_t kTactileCells = kTactileRows * kTactileCols;
inline constexpr double kStickerRadius = 4.0;
inline constexpr int kRemovalStreak = 10;

struct Vec2 {
    double x = 0.0;
    double y = 0.0;
};

struct ArmPose {
    double shoulder = 0.0;
    double elbow = 0.0;
    double height = Body::height_max;

    bool within_limits() const;
    friend bool operator==(const ArmPose&, const ArmPose&) = default;
};

struct ContinuousAction {
    double d_shoulder = 0.0;
    double d_elbow = 0.0;
    double d_height = 0.0;

    /// Componentwise clip onto the action box; NaN becomes zero.
    ContinuousAction clipped() const;
};

struct Sticker {
    Vec2 center;  // forearm-local (u, v)
    int contact_streak = 0;

    friend bool operator==(const Sticker& a, const Sticker& b) {
        return a.center.x == b.center.x && a.center.y == b.center.y && a.contact_streak == b.contact_streak;
    }
};

struct ContinuousWorldState {
    ArmPose pose;
    std::optional<Sticker> sticker;

    friend bool operator==(const ContinuousWorldState&, const ContinuousWorldState&) = default;
};

/// 80 x 30 intensities in [0, 1]; flat index of cell (i, j) is 30 * i + j.
class TactileFrame {
public:
    TactileFrame() : cells_(kTactileCells, 0.0) {}

    double at(int i, int j) const { return cells_[flat_index(i, j)]; }
    double& at(int i, int j) { return cells_[flat_index(i, j)]; }
    static constexpr std::size_t flat_index(int i, int j) {
        return static_cast<std::size_t>(i) * kTactileCols + static_cast<std::size_t>(j);
    }
    const std::vector<double>& flat() const { return cells_; }
    std::vector<double>& flat() { return cells_; }

    friend bool operator==(const TactileFrame&, const TactileFrame&) = default;

private:
    std::vector<double> cells_;
};

using ProprioVector = std::array<double, 3>;

Vec2 right_shoulder_position();
Vec2 left_elbow_position();
Vec2 left_forearm_tip();

/// Right-hand centre in the body plane.
Vec2 forward_kinematics(const ArmPose& pose);

/// Body-plane point to forearm-local (u along the forearm from the left
/// elbow, v lateral towards the array side).
Vec2 forearm_local_coords(Vec2 point);

/// Planar distance from a local point to the 80 x 30 band (0 inside).
double distance_to_band(Vec2 local);

/// Hand disc (radius 6, intensity 1 - z/10 for z <= 10) and sticker disc
/// (radius 4, intensity 1) combined by max. OpenMP over rows.
TactileFrame render_tactile(const ContinuousWorldState& state);
/// Single-threaded reference for render_tactile.
TactileFrame render_tactile_serial(const ContinuousWorldState& state);

ProprioVector proprioception(const ContinuousWorldState& state);

struct ActionResult {
    ContinuousWorldState state;
    bool accepted = false;
};

/// Clip the action, clip the pose to its limits, then commit only if the
/// candidate hand stays within 15 mm of the band.
ActionResult apply_action(const ContinuousWorldState& state, const ContinuousAction& action);

struct ContactResult {
    ContinuousWorldState state;
    bool removed = false;
};

/// Streak of consecutive steps with the hand centre within 10 mm of the
/// sticker centre; the sticker is removed when the streak reaches 10.
ContactResult update_sticker_contact(const ContinuousWorldState& state);

struct StepResult {
    ContinuousWorldState state;
    bool accepted = false;
    bool sticker_removed = false;
};

/// apply_action followed by update_sticker_contact.
StepResult step(const ContinuousWorldState& state, const ContinuousAction& action);

struct NoSticker {};
struct RandomSticker {};
struct StickerAt {
    double u = 0.0;
    double v = 0.0;
};
using StickerMode = std::variant<NoSticker, RandomSticker, StickerAt>;

/// True when a sticker centred at (u, v) lies fully on the band.
bool sticker_position_valid(double u, double v);

/// Throws std::invalid_argument when the position violates the 4 mm margin.
ContinuousWorldState place_sticker(ContinuousWorldState state, double u, double v);

/// Uniform sticker centre over the admissible rectangle.
Vec2 random_sticker_center(RandomStream& rng);

/// Rejection-sampled right-arm pose inside the band margin, hand at 20 mm.
ContinuousWorldState reset_world(std::uint64_t seed, const StickerMode& mode);
ContinuousWorldState reset_world(RandomStream& rng, const StickerMode& mode);

struct CoverageResult {
    std::size_t covered = 0;
    std::vector<std::size_t> uncovered;  // flat cell indices
    std::size_t poses_evaluated = 0;
};

/// Grid search over the joint box: a cell is covered when some pose puts the
/// hand within `tolerance` mm of the cell centre. OpenMP over shoulder angles.
CoverageResult workspace_coverage(double resolution = 0.005, double tolerance = 1.0);
CoverageResult workspace_coverage_serial(double resolution = 0.005, double tolerance = 1.0);

}  // namespace selfprior::continuous
