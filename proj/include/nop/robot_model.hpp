#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string_view>

namespace nop::robot {

inline constexpr std::size_t kNumJoints = 20;

/// Canonical joint order. Bus device id of a joint is its index + 1.
enum class Joint : std::uint8_t {
  LeftHipYaw, LeftHipRoll, LeftHipPitch, LeftKneePitch, LeftAnklePitch, LeftAnkleRoll,
  RightHipYaw, RightHipRoll, RightHipPitch, RightKneePitch, RightAnklePitch, RightAnkleRoll,
  LeftShoulderPitch, LeftShoulderRoll, LeftElbowPitch,
  RightShoulderPitch, RightShoulderRoll, RightElbowPitch,
  NeckYaw, NeckPitch,
};

constexpr std::size_t index(Joint j) { return static_cast<std::size_t>(j); }
constexpr std::uint8_t bus_id(Joint j) { return static_cast<std::uint8_t>(index(j) + 1); }

std::string_view joint_name(Joint j);
std::string_view joint_name(std::size_t idx);
std::optional<Joint> joint_from_name(std::string_view name);

/// Joints whose sign flips under left/right mirroring.
bool is_lateral(Joint j);
/// Sagittal pitch joints that carry a gravity load in the planar-chain model.
bool is_sagittal_pitch(Joint j);

/// Ordered 20-element joint quantity (rad unless noted).
struct JointVector {
  std::array<double, kNumJoints> values{};

  double& operator[](Joint j) { return values[index(j)]; }
  double operator[](Joint j) const { return values[index(j)]; }
  double& operator[](std::size_t i) { return values[i]; }
  double operator[](std::size_t i) const { return values[i]; }

  bool operator==(const JointVector&) const = default;
};

struct JointLimits {
  std::array<double, kNumJoints> lo{};
  std::array<double, kNumJoints> hi{};
};

struct RobotConstants {
  double height_m = 0.95;
  double mass_kg = 6.6;
  double battery_nominal_v = 14.8;

  double trunk_m = 0.35;
  double thigh_m = 0.21;
  double shank_m = 0.21;
  double foot_m = 0.05;
  double upper_arm_m = 0.17;
  double forearm_m = 0.17;
  double head_m = 0.13;
  /// Vertical offset from the top of the trunk (neck axis) to the camera.
  double camera_offset_m = 0.05;

  double trunk_kg = 1.0;
  double thigh_kg = 0.8;
  double shank_kg = 0.7;
  double foot_kg = 0.3;
  double upper_arm_kg = 0.4;
  double forearm_kg = 0.4;
  double head_kg = 0.4;

  JointLimits limits = default_limits();

  double total_link_mass() const;
  static JointLimits default_limits();
};

inline constexpr int kTicksPerRev = 4096;
inline constexpr int kCenterTick = 2048;
inline constexpr int kMaxTick = 4095;

/// (ticks - 2048) * 2pi / 4096. Throws DomainError outside [0, 4095].
double ticks_to_rad(int ticks);
/// Nearest-tick inverse of ticks_to_rad, clamped to [0, 4095]. Throws DomainError on NaN.
int rad_to_ticks(double angle);

JointVector mirror(const JointVector& joints);
JointVector clamp_to_limits(const JointVector& joints, const JointLimits& limits);

/// Vertical distance from the ground to the camera for a given (leg-symmetric) pose.
double camera_height(const RobotConstants& rc, const JointVector& pose);

}  // namespace nop::robot
