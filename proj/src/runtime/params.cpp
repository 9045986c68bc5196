#include "nop/runtime/params.hpp"

#include <functional>

namespace nop::runtime {

namespace {

using config::ParamStore;

struct Real {
  const char* path;
  std::function<double&(RuntimeParams&)> field;
  double min, max, step;
};

struct Integer {
  const char* path;
  std::function<int&(RuntimeParams&)> field;
  int min, max;
};

#define NOP_F(expr) [](RuntimeParams& p) -> double& { return p.expr; }
#define NOP_I(expr) [](RuntimeParams& p) -> int& { return p.expr; }

const std::vector<Real>& reals() {
  static const std::vector<Real> table = {
      {"/robot/trunk_m", NOP_F(robot.trunk_m), 0.1, 1.0, 0.01},
      {"/robot/thigh_m", NOP_F(robot.thigh_m), 0.05, 0.5, 0.01},
      {"/robot/shank_m", NOP_F(robot.shank_m), 0.05, 0.5, 0.01},
      {"/robot/foot_m", NOP_F(robot.foot_m), 0.0, 0.2, 0.01},
      {"/robot/upper_arm_m", NOP_F(robot.upper_arm_m), 0.05, 0.5, 0.01},
      {"/robot/forearm_m", NOP_F(robot.forearm_m), 0.05, 0.5, 0.01},
      {"/robot/head_m", NOP_F(robot.head_m), 0.0, 0.3, 0.01},
      {"/robot/camera_offset_m", NOP_F(robot.camera_offset_m), 0.0, 0.3, 0.01},
      {"/robot/trunk_kg", NOP_F(robot.trunk_kg), 0.1, 5.0, 0.05},
      {"/robot/thigh_kg", NOP_F(robot.thigh_kg), 0.05, 3.0, 0.05},
      {"/robot/shank_kg", NOP_F(robot.shank_kg), 0.05, 3.0, 0.05},
      {"/robot/foot_kg", NOP_F(robot.foot_kg), 0.05, 2.0, 0.05},
      {"/robot/upper_arm_kg", NOP_F(robot.upper_arm_kg), 0.05, 2.0, 0.05},
      {"/robot/forearm_kg", NOP_F(robot.forearm_kg), 0.05, 2.0, 0.05},
      {"/robot/head_kg", NOP_F(robot.head_kg), 0.05, 2.0, 0.05},

      {"/servo/inertia", NOP_F(servo.inertia), 0.001, 0.1, 0.001},
      {"/servo/stiffness", NOP_F(servo.stiffness), 0.5, 50.0, 0.5},
      {"/servo/viscous", NOP_F(servo.viscous), 0.0, 2.0, 0.01},
      {"/servo/coulomb", NOP_F(servo.coulomb), 0.0, 2.0, 0.01},
      {"/servo/torque_max", NOP_F(servo.torque_max), 0.5, 20.0, 0.5},

      {"/ilc/gain", NOP_F(ilc.gain), 0.0, 2.0, 0.05},

      {"/ff/k_v", NOP_F(ff_k_v), -1.0, 1.0, 0.005},
      {"/ff/k_c", NOP_F(ff_k_c), -1.0, 1.0, 0.005},
      {"/ff/k_g", NOP_F(ff_k_g), -1.0, 1.0, 0.005},

      {"/fall/trigger_rad", NOP_F(fall.trigger_rad), 0.1, 1.5, 0.05},
      {"/fall/fallen_rad", NOP_F(fall.fallen_rad), 0.2, 1.6, 0.05},
      {"/fall/dwell_s", NOP_F(fall.dwell_s), 0.0, 5.0, 0.1},
      {"/fall/alpha", NOP_F(filter.alpha), 0.0, 1.0, 0.005},
      {"/fall/accel_gate", NOP_F(filter.gate), 0.0, 20.0, 0.1},

      {"/gait/freq", NOP_F(gait.freq), 0.2, 4.0, 0.05},
      {"/gait/lateral_amp", NOP_F(gait.lateral_amp), 0.0, 0.5, 0.01},
      {"/gait/shortening_amp", NOP_F(gait.shortening_amp), 0.0, 1.0, 0.01},
      {"/gait/step_x", NOP_F(gait.step_x), 0.0, 1.0, 0.01},
      {"/gait/step_y", NOP_F(gait.step_y), 0.0, 1.0, 0.01},
      {"/gait/step_yaw", NOP_F(gait.step_yaw), 0.0, 1.0, 0.01},
      {"/gait/hip_roll_offset", NOP_F(gait.hip_roll_offset), -0.5, 0.5, 0.01},
      {"/gait/hip_pitch_offset", NOP_F(gait.hip_pitch_offset), -1.5, 1.5, 0.01},
      {"/gait/knee_offset", NOP_F(gait.knee_offset), 0.0, 2.5, 0.01},
      {"/gait/ankle_pitch_offset", NOP_F(gait.ankle_pitch_offset), -1.5, 1.5, 0.01},
      {"/gait/shoulder_roll_offset", NOP_F(gait.shoulder_roll_offset), -1.5, 1.5, 0.01},
      {"/gait/elbow_offset", NOP_F(gait.elbow_offset), -2.0, 2.0, 0.01},
      {"/gait/pitch_nominal", NOP_F(gait.pitch_nominal), -0.5, 0.5, 0.01},
      {"/gait/kp_pitch", NOP_F(gait.kp_pitch), 0.0, 2.0, 0.01},
      {"/gait/kd_pitch", NOP_F(gait.kd_pitch), 0.0, 1.0, 0.005},
      {"/gait/kp_roll", NOP_F(gait.kp_roll), 0.0, 2.0, 0.01},
      {"/gait/kd_roll", NOP_F(gait.kd_roll), 0.0, 1.0, 0.005},
      {"/gait/max_step_rad", NOP_F(gait.max_step_rad), 0.001, 1.0, 0.005},
      {"/gait/speed_x", NOP_F(gait.speed_x), 0.0, 1.0, 0.01},
      {"/gait/speed_y", NOP_F(gait.speed_y), 0.0, 1.0, 0.01},
      {"/gait/speed_yaw", NOP_F(gait.speed_yaw), 0.0, 3.0, 0.05},

      {"/behavior/stale_s", NOP_F(behavior.stale_s), 0.1, 10.0, 0.1},
      {"/behavior/ball_radius_m", NOP_F(behavior.ball_radius_m), 0.0, 0.5, 0.01},
      {"/behavior/kick_distance", NOP_F(behavior.kick_distance), 0.05, 2.0, 0.01},
      {"/behavior/kick_ball_bearing", NOP_F(behavior.kick_ball_bearing), 0.01, 1.5, 0.01},
      {"/behavior/kick_goal_bearing", NOP_F(behavior.kick_goal_bearing), 0.01, 3.2, 0.01},
      {"/behavior/align_distance", NOP_F(behavior.align_distance), 0.05, 3.0, 0.01},
      {"/behavior/behind_ball", NOP_F(behavior.behind_ball), 0.0, 2.0, 0.01},
      {"/behavior/default_goal_distance", NOP_F(behavior.default_goal_distance), 0.5, 20.0, 0.1},
      {"/behavior/kick_spot_x", NOP_F(behavior.kick_spot_x), 0.0, 1.0, 0.01},
      {"/behavior/kick_spot_y", NOP_F(behavior.kick_spot_y), -0.5, 0.5, 0.01},
      {"/behavior/turn_gain", NOP_F(behavior.turn_gain), 0.0, 5.0, 0.05},
      {"/behavior/lateral_gain", NOP_F(behavior.lateral_gain), 0.0, 10.0, 0.05},
      {"/behavior/align_gain", NOP_F(behavior.align_gain), 0.0, 10.0, 0.05},
      {"/behavior/search_vyaw", NOP_F(behavior.search_vyaw), -1.0, 1.0, 0.05},
      {"/behavior/scan_amplitude", NOP_F(behavior.scan_amplitude), 0.0, 1.5, 0.05},
      {"/behavior/scan_freq", NOP_F(behavior.scan_freq), 0.0, 2.0, 0.01},
      {"/behavior/head_pitch", NOP_F(behavior.head_pitch), -0.5, 1.2, 0.01},

      {"/vision/goal_aspect", NOP_F(vision.goal_aspect), 0.5, 10.0, 0.1},
      {"/vision/lens_f", NOP_F(lens.f), 50.0, 1000.0, 0.05},
      {"/vision/lens_cx", NOP_F(lens.cx), 0.0, 800.0, 0.5},
      {"/vision/lens_cy", NOP_F(lens.cy), 0.0, 600.0, 0.5},
      {"/vision/lens_k1", NOP_F(lens.k1), -1.0, 1.0, 0.001},
      {"/vision/lens_k2", NOP_F(lens.k2), -1.0, 1.0, 0.001},
      {"/vision/lines/split_tolerance", NOP_F(vision.lines.split_tolerance), 0.5, 10.0, 0.1},
      {"/vision/lines/merge_angle_rad", NOP_F(vision.lines.merge_angle_rad), 0.0, 1.0, 0.01},
      {"/vision/lines/merge_gap_cells", NOP_F(vision.lines.merge_gap_cells), 0.0, 50.0, 0.5},

      {"/world/field_length", NOP_F(world.field.length), 2.0, 20.0, 0.1},
      {"/world/field_width", NOP_F(world.field.width), 2.0, 15.0, 0.1},
      {"/world/line_width", NOP_F(world.field.line_width), 0.01, 0.2, 0.01},
      {"/world/goal_width", NOP_F(world.field.goal_width), 0.5, 5.0, 0.1},
      {"/world/ball_radius", NOP_F(world.field.ball_radius), 0.03, 0.3, 0.01},
      {"/world/center_circle_radius", NOP_F(world.field.center_circle_radius), 0.1, 3.0, 0.05},
      {"/world/goal_area_depth", NOP_F(world.field.goal_area_depth), 0.2, 3.0, 0.05},
      {"/world/goal_area_width", NOP_F(world.field.goal_area_width), 0.5, 6.0, 0.05},
      {"/world/border", NOP_F(world.field.border), 0.0, 3.0, 0.1},
      {"/world/post_radius", NOP_F(world.field.post_radius), 0.01, 0.3, 0.01},
      {"/world/post_height", NOP_F(world.field.post_height), 0.1, 3.0, 0.05},
      {"/world/ball_friction", NOP_F(world.ball_friction), 0.0, 5.0, 0.05},
      {"/world/battery_decay", NOP_F(world.battery_decay), 0.0, 0.01, 0.00001},
      {"/world/battery_low", NOP_F(world.battery_low), 12.8, 16.8, 0.1},
      {"/world/push_duration", NOP_F(world.push_duration), 0.05, 3.0, 0.05},
      {"/world/kick_gain", NOP_F(world.kick_gain), 0.0, 5.0, 0.05},
      {"/world/gyro_noise", NOP_F(gyro_noise), 0.0, 1.0, 0.001},
      {"/world/accel_noise", NOP_F(accel_noise), 0.0, 5.0, 0.01},

      {"/bus/corrupt_rate", NOP_F(corrupt_rate), 0.0, 0.1, 0.0001},
  };
  return table;
}

const std::vector<Integer>& integers() {
  static const std::vector<Integer> table = {
      {"/ilc/lead", NOP_I(ilc.lead), 0, 50},
      {"/ilc/smoothing_width", NOP_I(ilc.smoothing_width), 1, 51},
      {"/behavior/ball_miss_frames", NOP_I(behavior.ball_miss_frames), 1, 100},
      {"/vision/on_threshold", NOP_I(vision.on_threshold), 1, 16},
      {"/vision/min_ball_area", NOP_I(vision.min_ball_area), 1, 1000},
      {"/vision/min_obstacle_area", NOP_I(vision.min_obstacle_area), 1, 1000},
      {"/vision/goal_band", NOP_I(vision.goal_band), 0, 50},
      {"/vision/lines/spur_length", NOP_I(vision.lines.spur_length), 0, 50},
      {"/vision/lines/bridge_length", NOP_I(vision.lines.bridge_length), 0, 50},
      {"/vision/lines/min_segment_points", NOP_I(vision.lines.min_segment_points), 2, 100},
  };
  return table;
}

#undef NOP_F
#undef NOP_I

}  // namespace

vision::Yuv goal_color(const std::string& hue) {
  return hue == "blue" ? vision::palette::kBlue : vision::palette::kYellow;
}

void declare_runtime_params(ParamStore& store) {
  RuntimeParams defaults;
  for (const auto& r : reals()) store.declare(r.path, r.field(defaults), r.min, r.max, r.step);
  for (const auto& i : integers()) store.declare_int(i.path, i.field(defaults), i.min, i.max);
  store.declare("/ff/enabled", defaults.ff_enabled);
  store.declare("/vision/goal_class_hue", defaults.goal_hue);
}

RuntimeParams read_runtime_params(const ParamStore& store) {
  RuntimeParams p;
  for (const auto& r : reals()) r.field(p) = store.get_double(r.path);
  for (const auto& i : integers()) i.field(p) = static_cast<int>(store.get_int(i.path));
  p.ff_enabled = store.get_bool("/ff/enabled");
  p.goal_hue = store.get_string("/vision/goal_class_hue");
  return p;
}

}  // namespace nop::runtime
