#pragma once

#include "nop/robot_model.hpp"
#include "nop/state_estimation.hpp"

namespace nop::gait {

/// Normalized walking command; every component lives in [-1, 1].
struct GaitCommand {
  double vx = 0.0;
  double vy = 0.0;
  double vyaw = 0.0;
  bool enabled = false;

  GaitCommand clamped() const;
  bool operator==(const GaitCommand&) const = default;
};

struct GaitParams {
  double freq = 1.8;             // Hz
  double lateral_amp = 0.06;     // rad, lateral rocking on the hip/ankle rolls
  double shortening_amp = 0.35;  // rad, leg shortening during swing
  double step_x = 0.25;          // rad of hip swing at vx = 1
  double step_y = 0.12;
  double step_yaw = 0.2;

  // Stance pose.
  double hip_roll_offset = 0.0;
  double hip_pitch_offset = -0.3;
  double knee_offset = 0.6;
  double ankle_pitch_offset = -0.3;
  double shoulder_roll_offset = 0.2;
  double elbow_offset = 0.5;

  // Attitude feedback.
  double pitch_nominal = 0.0;
  double kp_pitch = 0.2;
  double kd_pitch = 0.02;
  double kp_roll = 0.2;
  double kd_roll = 0.02;

  double max_step_rad = 0.1;  // per-cycle joint change limit

  // Body speed produced at unit command.
  double speed_x = 0.3;    // m/s
  double speed_y = 0.15;   // m/s
  double speed_yaw = 0.8;  // rad/s
};

struct BodyTwist {
  double vx = 0.0;
  double vy = 0.0;
  double vyaw = 0.0;
};

struct GaitState {
  double phase = 0.0;  // [-pi, pi)
  robot::JointVector last;
  bool primed = false;  // `last` holds a previously emitted pose
};

struct GaitOutput {
  robot::JointVector targets;
  BodyTwist twist;
};

robot::JointVector stand_pose(const GaitParams& params);

/// The raw CPG pattern at a given phase, before rate limiting and joint-limit clamping.
robot::JointVector gait_pattern(double phase, const GaitCommand& cmd, const GaitParams& params,
                                const estimation::AttitudeEstimate& attitude);

BodyTwist body_twist(const GaitCommand& cmd, const GaitParams& params);

/// Emits the pattern at the current phase (clamped and rate limited against the last output),
/// then advances the phase by 2*pi*freq*dt. A disabled command holds the stance pose.
GaitOutput gait_step(GaitState& state, const GaitCommand& cmd, const GaitParams& params,
                     const estimation::AttitudeEstimate& attitude, double dt,
                     const robot::JointLimits& limits = robot::RobotConstants::default_limits());

double wrap_phase(double phase);

}  // namespace nop::gait
