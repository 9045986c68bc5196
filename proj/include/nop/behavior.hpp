#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <variant>

#include "nop/gait.hpp"
#include "nop/state_estimation.hpp"
#include "nop/vision/detect.hpp"

namespace nop::behavior {

enum class State { Search, Approach, Align, Kick, Relax, Getup };

std::string_view to_string(State s);

struct BallBelief {
  double bearing = 0.0;               // rad, body frame, + left
  std::optional<double> distance;     // m on the ground, unknown above the horizon
  double age_s = 0.0;
};

struct GoalBelief {
  double bearing = 0.0;
  std::optional<double> distance;
  double age_s = 0.0;
};

struct WorldBelief {
  std::optional<BallBelief> ball;
  std::optional<GoalBelief> goal;
  estimation::AttitudeEstimate attitude;
  estimation::FallState fall = estimation::FallState::Stable;
  /// Name of the motion the runtime is currently playing, empty when none.
  std::string active_motion;
  int ball_misses = 0;
};

/// Where the camera was when the frame was taken.
struct CameraPose {
  double height_m = 0.85;  // optical center above the ground
  double neck_yaw = 0.0;
  double neck_pitch = 0.0;  // > 0 looks down
  double roll = 0.0;
  double pitch = 0.0;
};

struct BehaviorParams {
  double stale_s = 2.0;
  /// Consecutive processed frames without a ball before the ball belief is dropped.
  int ball_miss_frames = 1;
  double ball_radius_m = 0.11;

  double kick_distance = 0.3;
  double kick_ball_bearing = 0.2;
  double kick_goal_bearing = 0.3;
  double align_distance = 0.5;
  double behind_ball = 0.25;
  /// Assumed goal distance when only its bearing is known.
  double default_goal_distance = 3.0;
  /// Ball position in the body frame the alignment drives toward.
  double kick_spot_x = 0.2;
  double kick_spot_y = 0.0;

  double turn_gain = 1.0;
  double lateral_gain = 2.0;
  double align_gain = 2.0;

  double search_vyaw = 0.4;
  double scan_amplitude = 1.0;
  double scan_freq = 0.25;
  double head_pitch = 0.5;
};

struct RelaxAction {
  bool operator==(const RelaxAction&) const = default;
};

struct PlayMotion {
  std::string name;
  bool operator==(const PlayMotion&) const = default;
};

using Action = std::variant<gait::GaitCommand, PlayMotion, RelaxAction>;

struct HeadCommand {
  double yaw = 0.0;
  double pitch = 0.0;
};

struct Decision {
  State state = State::Search;
  Action action;
  HeadCommand head;
};

/// Unit direction in the gravity-leveled body frame for a camera-frame bearing.
Eigen::Vector3d leveled_direction(const vision::Bearing& b, const CameraPose& cam);

/// Ages the belief by dt and, when a new frame was processed, folds in its detections.
WorldBelief update_belief(WorldBelief belief, const vision::Detections* detections,
                          const CameraPose& cam, double dt, const BehaviorParams& params = {});

class Behavior {
public:
  explicit Behavior(BehaviorParams params = {}) : params_(params) {}

  Decision tick(const WorldBelief& belief, double dt);

  State state() const { return state_; }
  double time_in_state() const { return time_in_state_; }
  void set_params(const BehaviorParams& p) { params_ = p; }
  const BehaviorParams& params() const { return params_; }

private:
  void enter(State s);
  gait::GaitCommand approach(const BallBelief& ball, const std::optional<GoalBelief>& goal) const;
  gait::GaitCommand align(const BallBelief& ball, const std::optional<GoalBelief>& goal) const;
  bool fresh(const std::optional<BallBelief>& ball) const;

  BehaviorParams params_;
  State state_ = State::Search;
  double time_in_state_ = 0.0;
  double scan_time_ = 0.0;
};

}  // namespace nop::behavior
