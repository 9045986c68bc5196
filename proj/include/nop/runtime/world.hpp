#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "nop/robot_model.hpp"

namespace nop::runtime {

/// Field layout in meters. The origin is the center spot, +x points at the goal we attack.
struct FieldGeometry {
  double length = 9.0;
  double width = 6.0;
  double line_width = 0.05;
  double goal_width = 2.6;
  double ball_radius = 0.11;
  double center_circle_radius = 0.75;
  double goal_area_depth = 1.0;
  double goal_area_width = 3.0;
  /// Green carpet beyond the outer lines.
  double border = 1.0;
  double post_radius = 0.05;
  double post_height = 0.8;

  /// True when (x, y) lies on a painted line.
  bool on_line(double x, double y) const;
  bool on_carpet(double x, double y) const {
    return std::abs(x) <= length / 2 + border && std::abs(y) <= width / 2 + border;
  }
  /// Post centers: two at +x, then two at -x, each ordered +y first.
  std::vector<std::pair<double, double>> post_positions() const;
};

struct Pose2 {
  double x = 0.0;
  double y = 0.0;
  double theta = 0.0;
};

struct BallState {
  bool present = true;
  double x = 0.0;
  double y = 0.0;
  double vx = 0.0;
  double vy = 0.0;
};

/// Black vertical cylinder standing on the field (another robot, a referee).
struct ObstacleBody {
  double x = 0.0;
  double y = 0.0;
  double radius = 0.15;
  double height = 0.6;
};

struct WorldParams {
  FieldGeometry field;
  double ball_friction = 0.5;  // m/s^2
  double battery_full = 16.8;
  double battery_min = 12.8;
  double battery_decay = 0.0001;  // V per cycle while walking
  double battery_low = 14.0;
  double push_duration = 0.3;  // s for the kinematic fall
  double robot_radius = 0.12;
  /// Ball speed per unit of foot speed at contact.
  double kick_gain = 1.5;
  double foot_half_width = 0.05;
  double hip_offset_y = 0.055;
};

// Injected events.
struct Push {
  double pitch = 0.0;  // final attitude, rad
  double roll = 0.0;
};
struct Teleport {
  Pose2 pose;
};
struct SetBall {
  double x = 0.0, y = 0.0, vx = 0.0, vy = 0.0;
};
struct RemoveBall {};
struct AddObstacle {
  double x = 0.0, y = 0.0;
};
struct ResetWorld {};
struct SetParam {
  std::string path;
  nlohmann::json value;
};
using Event = std::variant<Push, Teleport, SetBall, RemoveBall, AddObstacle, ResetWorld, SetParam>;

struct TimedEvent {
  double at_s = 0.0;
  Event event;
};

/// Parses one {"type": ..., ...} object (or a bare type string).
Event parse_event(const nlohmann::json& j);
/// Scenario file: JSON list of {"at_s": t, "event": {...}}; sorted by time on return.
std::vector<TimedEvent> parse_scenario(const nlohmann::json& j);
std::vector<TimedEvent> load_scenario(const std::string& path);

/// What the robot contributes to one world step.
struct WorldInput {
  /// Body velocity in the robot frame while walking; ignored when not upright.
  double vx = 0.0, vy = 0.0, vyaw = 0.0;
  bool walking = false;
  /// Measured joint angles, used for the kicking foot.
  robot::JointVector joints;
  /// Progress in [0, 1] of a running get-up motion.
  std::optional<double> getup_progress;
  bool getup_done = false;
};

struct WorldState {
  Pose2 robot;
  BallState ball;
  std::vector<ObstacleBody> obstacles;
  double battery_v = 16.8;
  bool low_battery_reported = false;
  // Kinematic body attitude.
  double roll = 0.0, pitch = 0.0;
  double roll_rate = 0.0, pitch_rate = 0.0, yaw_rate = 0.0;
};

/// Kinematic world: no contact dynamics, everything deterministic.
class World {
public:
  explicit World(WorldParams params = {}, Pose2 start = {-1.0, 0.0, 0.0}, BallState ball = {true, 1.0, 0.0, 0.0, 0.0});

  void apply(const Event& e);
  /// Advances by dt. Returns true when the low-battery threshold was crossed during this step.
  bool step(double dt, const WorldInput& in);

  const WorldState& state() const { return s_; }
  WorldState& mutable_state() { return s_; }
  const WorldParams& params() const { return p_; }
  void set_params(const WorldParams& p) { p_ = p; }
  void set_constants(const robot::RobotConstants& rc) { rc_ = rc; }

  bool upright() const { return !falling_ && std::abs(s_.pitch) < 0.3 && std::abs(s_.roll) < 0.3; }
  int kicks() const { return kicks_; }
  /// Forward reach of the right foot in the robot frame for the given joints.
  double foot_reach(const robot::JointVector& q) const;

private:
  void step_ball(double dt);
  void step_attitude(double dt, const WorldInput& in);
  void collide_and_kick(double dt, const WorldInput& in);

  WorldParams p_;
  Pose2 start_pose_;
  BallState start_ball_;
  WorldState s_;
  robot::RobotConstants rc_;

  bool falling_ = false;
  double fall_t_ = 0.0;
  double fall_from_roll_ = 0.0, fall_from_pitch_ = 0.0, fall_to_roll_ = 0.0, fall_to_pitch_ = 0.0;
  std::optional<std::pair<double, double>> getup_from_;
  std::optional<double> prev_foot_;
  int kicks_ = 0;
};

}  // namespace nop::runtime
