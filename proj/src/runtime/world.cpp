#include "nop/runtime/world.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <stdexcept>

namespace nop::runtime {

using nlohmann::json;

namespace {

bool near_segment_x(double x, double y, double x0, double y_lo, double y_hi, double half) {
  return std::abs(x - x0) <= half && y >= y_lo - half && y <= y_hi + half;
}

}  // namespace

bool FieldGeometry::on_line(double x, double y) const {
  const double h = line_width / 2;
  const double lx = length / 2, ly = width / 2;
  if (std::abs(x) > lx + h || std::abs(y) > ly + h) return false;
  // Touch lines and goal lines.
  if (std::abs(std::abs(y) - ly) <= h) return true;
  if (std::abs(std::abs(x) - lx) <= h) return true;
  // Halfway line and center circle.
  if (std::abs(x) <= h) return true;
  if (std::abs(std::hypot(x, y) - center_circle_radius) <= h) return true;
  // Goal areas.
  const double ax = lx - goal_area_depth, ay = goal_area_width / 2;
  const double fx = std::abs(x);
  if (near_segment_x(fx, y, ax, -ay, ay, h)) return true;
  if (std::abs(std::abs(y) - ay) <= h && fx >= ax - h && fx <= lx) return true;
  return false;
}

std::vector<std::pair<double, double>> FieldGeometry::post_positions() const {
  const double gx = length / 2, gy = goal_width / 2;
  return {{gx, gy}, {gx, -gy}, {-gx, gy}, {-gx, -gy}};
}

Event parse_event(const json& j) {
  const std::string type = j.is_string() ? j.get<std::string>() : j.at("type").get<std::string>();
  const auto num = [&](const char* k, double def) { return j.is_object() ? j.value(k, def) : def; };
  if (type == "push") return Push{num("pitch", 0.0), num("roll", 0.0)};
  if (type == "teleport") return Teleport{{num("x", 0.0), num("y", 0.0), num("theta", 0.0)}};
  if (type == "set_ball") return SetBall{num("x", 0.0), num("y", 0.0), num("vx", 0.0), num("vy", 0.0)};
  if (type == "remove_ball") return RemoveBall{};
  if (type == "add_obstacle") return AddObstacle{num("x", 0.0), num("y", 0.0)};
  if (type == "reset") return ResetWorld{};
  if (type == "set") return SetParam{j.at("path").get<std::string>(), j.at("value")};
  throw std::invalid_argument("unknown event type '" + type + "'");
}

std::vector<TimedEvent> parse_scenario(const json& j) {
  if (!j.is_array()) throw std::invalid_argument("scenario must be a JSON list");
  std::vector<TimedEvent> out;
  for (const auto& item : j) out.push_back({item.at("at_s").get<double>(), parse_event(item.at("event"))});
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.at_s < b.at_s; });
  return out;
}

std::vector<TimedEvent> load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open scenario " + path);
  return parse_scenario(json::parse(in));
}

World::World(WorldParams params, Pose2 start, BallState ball)
    : p_(params), start_pose_(start), start_ball_(ball) {
  s_.robot = start;
  s_.ball = ball;
  s_.battery_v = p_.battery_full;
}

void World::apply(const Event& e) {
  std::visit(
      [&](const auto& ev) {
        using T = std::decay_t<decltype(ev)>;
        if constexpr (std::is_same_v<T, Push>) {
          falling_ = true;
          fall_t_ = 0.0;
          fall_from_roll_ = s_.roll;
          fall_from_pitch_ = s_.pitch;
          fall_to_roll_ = ev.roll;
          fall_to_pitch_ = ev.pitch;
          getup_from_.reset();
        } else if constexpr (std::is_same_v<T, Teleport>) {
          s_.robot = ev.pose;
        } else if constexpr (std::is_same_v<T, SetBall>) {
          s_.ball = {true, ev.x, ev.y, ev.vx, ev.vy};
        } else if constexpr (std::is_same_v<T, RemoveBall>) {
          s_.ball.present = false;
        } else if constexpr (std::is_same_v<T, AddObstacle>) {
          s_.obstacles.push_back({ev.x, ev.y});
        } else if constexpr (std::is_same_v<T, ResetWorld>) {
          s_ = WorldState{};
          s_.robot = start_pose_;
          s_.ball = start_ball_;
          s_.battery_v = p_.battery_full;
          falling_ = false;
          getup_from_.reset();
          prev_foot_.reset();
        } else {
          // SetParam is handled by the runtime, which owns the config store.
        }
      },
      e);
}

double World::foot_reach(const robot::JointVector& q) const {
  using robot::Joint;
  const double hip = q[Joint::RightHipPitch];
  return rc_.thigh_m * std::sin(hip) + rc_.shank_m * std::sin(hip + q[Joint::RightKneePitch]);
}

void World::step_ball(double dt) {
  auto& b = s_.ball;
  if (!b.present) return;
  const double speed = std::hypot(b.vx, b.vy);
  if (speed > 0.0) {
    const double slowed = std::max(0.0, speed - p_.ball_friction * dt);
    const double k = slowed / speed;
    // Trapezoidal position update: exact for constant deceleration.
    b.x += 0.5 * (1.0 + k) * b.vx * dt;
    b.y += 0.5 * (1.0 + k) * b.vy * dt;
    b.vx *= k;
    b.vy *= k;
  }
  const double xmax = p_.field.length / 2 + p_.field.border - p_.field.ball_radius;
  const double ymax = p_.field.width / 2 + p_.field.border - p_.field.ball_radius;
  if (std::abs(b.x) > xmax || std::abs(b.y) > ymax) {
    b.x = std::clamp(b.x, -xmax, xmax);
    b.y = std::clamp(b.y, -ymax, ymax);
    b.vx = b.vy = 0.0;
  }
}

void World::step_attitude(double dt, const WorldInput& in) {
  const double roll0 = s_.roll, pitch0 = s_.pitch;
  if (falling_) {
    fall_t_ += dt;
    const double a = std::min(1.0, fall_t_ / p_.push_duration);
    s_.roll = fall_from_roll_ + (fall_to_roll_ - fall_from_roll_) * a;
    s_.pitch = fall_from_pitch_ + (fall_to_pitch_ - fall_from_pitch_) * a;
    if (a >= 1.0) falling_ = false;
  }
  if (in.getup_progress) {
    if (!getup_from_) getup_from_ = std::make_pair(s_.roll, s_.pitch);
    const double a = std::clamp(*in.getup_progress, 0.0, 1.0);
    s_.roll = getup_from_->first * (1.0 - a);
    s_.pitch = getup_from_->second * (1.0 - a);
  }
  if (in.getup_done) {
    s_.roll = s_.pitch = 0.0;
    getup_from_.reset();
  }
  s_.roll_rate = (s_.roll - roll0) / dt;
  s_.pitch_rate = (s_.pitch - pitch0) / dt;
}

void World::collide_and_kick(double dt, const WorldInput& in) {
  auto& b = s_.ball;
  const double c = std::cos(s_.robot.theta), s = std::sin(s_.robot.theta);
  const double r = p_.field.ball_radius;
  const double foot = foot_reach(in.joints);
  const std::optional<double> prev = std::exchange(prev_foot_, foot);
  if (!b.present || !upright()) return;

  // Ball in the robot frame.
  const double dx = b.x - s_.robot.x, dy = b.y - s_.robot.y;
  const double bx = c * dx + s * dy, by = -s * dx + c * dy;

  // The right foot sweeps forward through the ball's near edge.
  if (prev && *prev < bx - r && foot >= bx - r && std::abs(by + p_.hip_offset_y) < r + p_.foot_half_width) {
    const double speed = p_.kick_gain * (foot - *prev) / dt;
    b.vx = speed * c;
    b.vy = speed * s;
    const double nx = foot + r;
    b.x = s_.robot.x + c * nx - s * by;
    b.y = s_.robot.y + s * nx + c * by;
    ++kicks_;
    return;
  }

  // Keep the ball outside the robot's footprint.
  const double dist = std::hypot(dx, dy);
  const double min_dist = p_.robot_radius + r;
  if (dist < min_dist) {
    const double nx = dist > 1e-9 ? dx / dist : c, ny = dist > 1e-9 ? dy / dist : s;
    b.x = s_.robot.x + nx * min_dist;
    b.y = s_.robot.y + ny * min_dist;
    const double vn = b.vx * nx + b.vy * ny;
    if (vn < 0.0) {
      b.vx -= 1.3 * vn * nx;
      b.vy -= 1.3 * vn * ny;
    }
  }
}

bool World::step(double dt, const WorldInput& in) {
  step_attitude(dt, in);

  s_.yaw_rate = 0.0;
  if (in.walking && upright()) {
    const double c = std::cos(s_.robot.theta), s = std::sin(s_.robot.theta);
    s_.robot.x += (c * in.vx - s * in.vy) * dt;
    s_.robot.y += (s * in.vx + c * in.vy) * dt;
    s_.robot.theta = std::remainder(s_.robot.theta + in.vyaw * dt, 2.0 * std::numbers::pi);
    s_.yaw_rate = in.vyaw;
  }

  step_ball(dt);
  collide_and_kick(dt, in);

  bool crossed = false;
  if (in.walking) {
    const double before = s_.battery_v;
    s_.battery_v = std::max(p_.battery_min, s_.battery_v - p_.battery_decay);
    if (!s_.low_battery_reported && before > p_.battery_low && s_.battery_v <= p_.battery_low) {
      s_.low_battery_reported = true;
      crossed = true;
    }
  }
  return crossed;
}

}  // namespace nop::runtime
