#include "nop/gait.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace nop::gait {

using robot::Joint;
using robot::JointVector;

namespace {

constexpr double kPi = std::numbers::pi;

struct LegJoints {
  Joint hip_yaw, hip_roll, hip_pitch, knee, ankle_pitch, ankle_roll;
  Joint shoulder_pitch;
  double side;  // +1 left, -1 right
};

constexpr LegJoints kLeft{Joint::LeftHipYaw,     Joint::LeftHipRoll,    Joint::LeftHipPitch,
                          Joint::LeftKneePitch,  Joint::LeftAnklePitch, Joint::LeftAnkleRoll,
                          Joint::LeftShoulderPitch, 1.0};
constexpr LegJoints kRight{Joint::RightHipYaw,    Joint::RightHipRoll,    Joint::RightHipPitch,
                           Joint::RightKneePitch, Joint::RightAnklePitch, Joint::RightAnkleRoll,
                           Joint::RightShoulderPitch, -1.0};

}  // namespace

double wrap_phase(double phase) {
  constexpr double two_pi = 2.0 * kPi;
  phase = std::fmod(phase + kPi, two_pi);
  if (phase < 0.0) phase += two_pi;
  return phase - kPi;
}

GaitCommand GaitCommand::clamped() const {
  return {std::clamp(vx, -1.0, 1.0), std::clamp(vy, -1.0, 1.0), std::clamp(vyaw, -1.0, 1.0),
          enabled};
}

JointVector stand_pose(const GaitParams& p) {
  JointVector q;
  for (const auto& leg : {kLeft, kRight}) {
    q[leg.hip_roll] = leg.side * p.hip_roll_offset;
    q[leg.ankle_roll] = -q[leg.hip_roll];
    q[leg.hip_pitch] = p.hip_pitch_offset;
    q[leg.knee] = p.knee_offset;
    q[leg.ankle_pitch] = p.ankle_pitch_offset;
  }
  q[Joint::LeftShoulderRoll] = p.shoulder_roll_offset;
  q[Joint::RightShoulderRoll] = -p.shoulder_roll_offset;
  q[Joint::LeftElbowPitch] = p.elbow_offset;
  q[Joint::RightElbowPitch] = p.elbow_offset;
  return q;
}

JointVector gait_pattern(double phase, const GaitCommand& raw_cmd, const GaitParams& p,
                         const estimation::AttitudeEstimate& att) {
  const GaitCommand cmd = raw_cmd.clamped();
  JointVector q = stand_pose(p);

  const double pitch_fb = p.kp_pitch * (att.pitch - p.pitch_nominal) + p.kd_pitch * att.rates[1];
  const double roll_fb = p.kp_roll * att.roll + p.kd_roll * att.rates[0];

  for (const auto& leg : {kLeft, kRight}) {
    const double leg_phase = leg.side > 0.0 ? phase : wrap_phase(phase + kPi);
    const double s = std::sin(leg_phase);
    const double swing = p.shortening_amp * std::max(0.0, s);
    const double fwd = cmd.vx * p.step_x * s;

    const double hip_roll =
        leg.side * (p.hip_roll_offset + p.lateral_amp * s) + cmd.vy * p.step_y * s;
    q[leg.hip_roll] = hip_roll + roll_fb;
    q[leg.ankle_roll] = -hip_roll + roll_fb;
    q[leg.hip_yaw] = leg.side * cmd.vyaw * p.step_yaw * s;

    q[leg.hip_pitch] = p.hip_pitch_offset + fwd - 0.5 * swing + pitch_fb;
    q[leg.knee] = p.knee_offset + swing;
    q[leg.ankle_pitch] = p.ankle_pitch_offset - 0.5 * swing - 0.5 * fwd + pitch_fb;

    q[leg.shoulder_pitch] = cmd.vx * p.step_x * std::sin(leg_phase + kPi);
  }
  return q;
}

BodyTwist body_twist(const GaitCommand& raw_cmd, const GaitParams& p) {
  if (!raw_cmd.enabled) return {};
  const GaitCommand cmd = raw_cmd.clamped();
  return {cmd.vx * p.speed_x, cmd.vy * p.speed_y, cmd.vyaw * p.speed_yaw};
}

GaitOutput gait_step(GaitState& state, const GaitCommand& cmd, const GaitParams& params,
                     const estimation::AttitudeEstimate& attitude, double dt,
                     const robot::JointLimits& limits) {
  JointVector raw = cmd.enabled ? gait_pattern(state.phase, cmd, params, attitude)
                                : stand_pose(params);
  raw = robot::clamp_to_limits(raw, limits);

  if (!state.primed) {
    state.last = raw;
    state.primed = true;
  }
  JointVector out;
  for (std::size_t i = 0; i < robot::kNumJoints; ++i) {
    const double delta = std::clamp(raw[i] - state.last[i], -params.max_step_rad, params.max_step_rad);
    out[i] = state.last[i] + delta;
  }
  state.last = out;

  if (cmd.enabled) {
    state.phase = wrap_phase(state.phase + 2.0 * kPi * params.freq * dt);
  } else {
    state.phase = 0.0;
  }
  return {out, body_twist(cmd, params)};
}

}  // namespace nop::gait
