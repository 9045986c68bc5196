#pragma once

#include "nop/actuator_control.hpp"
#include "nop/behavior.hpp"
#include "nop/config/param_store.hpp"
#include "nop/gait.hpp"
#include "nop/runtime/world.hpp"
#include "nop/state_estimation.hpp"
#include "nop/vision/detect.hpp"
#include "nop/vision/lens.hpp"

namespace nop::runtime {

/// Everything the control loop reads from the parameter tree, taken as one snapshot.
struct RuntimeParams {
  robot::RobotConstants robot;
  actuator::ServoDynamicsParams servo;
  actuator::IlcParams ilc;
  estimation::FilterParams filter;
  estimation::FallParams fall;
  gait::GaitParams gait;
  behavior::BehaviorParams behavior;
  vision::VisionParams vision;
  vision::LensModel lens;
  std::string goal_hue = "yellow";
  WorldParams world;
  double corrupt_rate = 0.0;
  bool ff_enabled = true;
  double ff_k_v = 0.0;
  double ff_k_c = 0.0;
  double ff_k_g = 0.125;
  // IMU noise standard deviations, drawn from the run's seeded generator.
  double gyro_noise = 0.005;
  double accel_noise = 0.05;
};

/// Declares every runtime entry with its bounds. Safe to call on a store that already has them.
void declare_runtime_params(config::ParamStore& store);
RuntimeParams read_runtime_params(const config::ParamStore& store);

/// YUV of a goal hue name ("yellow" or "blue"); unknown names fall back to yellow.
vision::Yuv goal_color(const std::string& hue);

}  // namespace nop::runtime
