#include "nop/robot_model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "nop/errors.hpp"

namespace nop::robot {

namespace {

constexpr std::array<std::string_view, kNumJoints> kNames = {
    "left_hip_yaw",       "left_hip_roll",       "left_hip_pitch",  "left_knee_pitch",
    "left_ankle_pitch",   "left_ankle_roll",     "right_hip_yaw",   "right_hip_roll",
    "right_hip_pitch",    "right_knee_pitch",    "right_ankle_pitch", "right_ankle_roll",
    "left_shoulder_pitch", "left_shoulder_roll", "left_elbow_pitch", "right_shoulder_pitch",
    "right_shoulder_roll", "right_elbow_pitch",  "neck_yaw",        "neck_pitch",
};

// Left/right partner of every joint; the neck maps onto itself.
constexpr std::array<Joint, kNumJoints> kPartner = {
    Joint::RightHipYaw,   Joint::RightHipRoll,   Joint::RightHipPitch,
    Joint::RightKneePitch, Joint::RightAnklePitch, Joint::RightAnkleRoll,
    Joint::LeftHipYaw,    Joint::LeftHipRoll,    Joint::LeftHipPitch,
    Joint::LeftKneePitch, Joint::LeftAnklePitch, Joint::LeftAnkleRoll,
    Joint::RightShoulderPitch, Joint::RightShoulderRoll, Joint::RightElbowPitch,
    Joint::LeftShoulderPitch,  Joint::LeftShoulderRoll,  Joint::LeftElbowPitch,
    Joint::NeckYaw, Joint::NeckPitch,
};

}  // namespace

std::string_view joint_name(Joint j) { return kNames[index(j)]; }

std::string_view joint_name(std::size_t idx) {
  if (idx >= kNumJoints) throw DomainError("joint index out of range");
  return kNames[idx];
}

std::optional<Joint> joint_from_name(std::string_view name) {
  for (std::size_t i = 0; i < kNumJoints; ++i) {
    if (kNames[i] == name) return static_cast<Joint>(i);
  }
  return std::nullopt;
}

bool is_lateral(Joint j) {
  switch (j) {
    case Joint::LeftHipYaw: case Joint::RightHipYaw:
    case Joint::LeftHipRoll: case Joint::RightHipRoll:
    case Joint::LeftAnkleRoll: case Joint::RightAnkleRoll:
    case Joint::LeftShoulderRoll: case Joint::RightShoulderRoll:
    case Joint::NeckYaw:
      return true;
    default:
      return false;
  }
}

bool is_sagittal_pitch(Joint j) {
  switch (j) {
    case Joint::LeftHipPitch: case Joint::RightHipPitch:
    case Joint::LeftKneePitch: case Joint::RightKneePitch:
    case Joint::LeftAnklePitch: case Joint::RightAnklePitch:
    case Joint::LeftShoulderPitch: case Joint::RightShoulderPitch:
    case Joint::LeftElbowPitch: case Joint::RightElbowPitch:
      return true;
    default:
      return false;
  }
}

double RobotConstants::total_link_mass() const {
  return trunk_kg + 2.0 * (thigh_kg + shank_kg + foot_kg) + 2.0 * (upper_arm_kg + forearm_kg) +
         head_kg;
}

JointLimits RobotConstants::default_limits() {
  JointLimits l;
  l.lo.fill(-2.6);
  l.hi.fill(2.6);
  for (Joint k : {Joint::LeftKneePitch, Joint::RightKneePitch}) {
    l.lo[index(k)] = 0.0;
  }
  for (Joint a : {Joint::LeftAnkleRoll, Joint::RightAnkleRoll}) {
    l.lo[index(a)] = -0.8;
    l.hi[index(a)] = 0.8;
  }
  return l;
}

double ticks_to_rad(int ticks) {
  if (ticks < 0 || ticks > kMaxTick) {
    throw DomainError("ticks out of range: " + std::to_string(ticks));
  }
  return (ticks - kCenterTick) * (2.0 * std::numbers::pi / kTicksPerRev);
}

int rad_to_ticks(double angle) {
  if (std::isnan(angle)) throw DomainError("angle is NaN");
  const double t = std::round(angle * (kTicksPerRev / (2.0 * std::numbers::pi))) + kCenterTick;
  return static_cast<int>(std::clamp(t, 0.0, static_cast<double>(kMaxTick)));
}

JointVector mirror(const JointVector& joints) {
  JointVector out;
  for (std::size_t i = 0; i < kNumJoints; ++i) {
    const auto j = static_cast<Joint>(i);
    const double v = joints[kPartner[i]];
    out[j] = is_lateral(j) ? -v : v;
  }
  return out;
}

JointVector clamp_to_limits(const JointVector& joints, const JointLimits& limits) {
  JointVector out;
  for (std::size_t i = 0; i < kNumJoints; ++i) {
    out[i] = std::clamp(joints[i], limits.lo[i], limits.hi[i]);
  }
  return out;
}

double camera_height(const RobotConstants& rc, const JointVector& pose) {
  // Pitch angles accumulate down the leg; the sum over a chain is the link's tilt.
  const double thigh_tilt = pose[Joint::LeftHipPitch];
  const double shank_tilt = thigh_tilt + pose[Joint::LeftKneePitch];
  const double leg = rc.thigh_m * std::cos(thigh_tilt) + rc.shank_m * std::cos(shank_tilt) +
                     rc.foot_m;
  return leg + rc.trunk_m + rc.camera_offset_m;
}

}  // namespace nop::robot
