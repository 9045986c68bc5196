#include "nop/behavior.hpp"

#include <Eigen/Geometry>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace nop::behavior {

using estimation::FallState;

namespace {

constexpr std::string_view kKick = "kick";

double clamp1(double v) { return std::clamp(v, -1.0, 1.0); }

std::optional<double> ground_distance(const Eigen::Vector3d& d, double height) {
  const double elevation = std::atan2(d.z(), std::hypot(d.x(), d.y()));
  if (elevation >= 0.0 || height <= 0.0) return std::nullopt;
  return height / std::tan(-elevation);
}

}  // namespace

std::string_view to_string(State s) {
  switch (s) {
    case State::Search: return "SEARCH";
    case State::Approach: return "APPROACH";
    case State::Align: return "ALIGN";
    case State::Kick: return "KICK";
    case State::Relax: return "RELAX";
    case State::Getup: return "GETUP";
  }
  return "?";
}

Eigen::Vector3d leveled_direction(const vision::Bearing& b, const CameraPose& cam) {
  const Eigen::Vector3d d(std::cos(b.elevation) * std::cos(b.azimuth),
                          std::cos(b.elevation) * std::sin(b.azimuth), std::sin(b.elevation));
  const Eigen::Matrix3d r = (Eigen::AngleAxisd(cam.pitch, Eigen::Vector3d::UnitY()) *
                             Eigen::AngleAxisd(cam.roll, Eigen::Vector3d::UnitX()) *
                             Eigen::AngleAxisd(cam.neck_yaw, Eigen::Vector3d::UnitZ()) *
                             Eigen::AngleAxisd(cam.neck_pitch, Eigen::Vector3d::UnitY()))
                                .toRotationMatrix();
  return r * d;
}

WorldBelief update_belief(WorldBelief belief, const vision::Detections* detections,
                          const CameraPose& cam, double dt, const BehaviorParams& params) {
  if (belief.ball) {
    belief.ball->age_s += dt;
    if (belief.ball->age_s > params.stale_s) belief.ball.reset();
  }
  if (belief.goal) {
    belief.goal->age_s += dt;
    if (belief.goal->age_s > params.stale_s) belief.goal.reset();
  }
  if (detections == nullptr) return belief;

  if (detections->ball) {
    const auto d = leveled_direction(detections->ball->bearing, cam);
    belief.ball = BallBelief{std::atan2(d.y(), d.x()),
                             ground_distance(d, cam.height_m - params.ball_radius_m), 0.0};
    belief.ball_misses = 0;
  } else if (++belief.ball_misses >= params.ball_miss_frames) {
    belief.ball.reset();
  }

  if (!detections->goal_posts.empty()) {
    Eigen::Vector2d sum = Eigen::Vector2d::Zero();
    double dist_sum = 0.0;
    int dist_n = 0;
    for (const auto& post : detections->goal_posts) {
      const auto d = leveled_direction(post.bearing, cam);
      sum += Eigen::Vector2d(d.x(), d.y()).normalized();
      if (const auto g = ground_distance(leveled_direction(post.base_bearing, cam), cam.height_m)) {
        dist_sum += *g;
        ++dist_n;
      }
    }
    GoalBelief goal{std::atan2(sum.y(), sum.x()), std::nullopt, 0.0};
    if (dist_n > 0) goal.distance = dist_sum / dist_n;
    belief.goal = goal;
  }
  return belief;
}

void Behavior::enter(State s) {
  if (s == state_) return;
  state_ = s;
  time_in_state_ = 0.0;
  if (s == State::Search) scan_time_ = 0.0;
}

bool Behavior::fresh(const std::optional<BallBelief>& ball) const {
  return ball.has_value() && ball->age_s <= params_.stale_s;
}

gait::GaitCommand Behavior::approach(const BallBelief& ball, const std::optional<GoalBelief>& goal) const {
  const double d = ball.distance.value_or(1.0);
  const Eigen::Vector2d b(d * std::cos(ball.bearing), d * std::sin(ball.bearing));
  Eigen::Vector2d toward = b.normalized();
  if (goal) {
    const double gd = std::max(goal->distance.value_or(params_.default_goal_distance), d + 1.0);
    const Eigen::Vector2d g(gd * std::cos(goal->bearing), gd * std::sin(goal->bearing));
    if ((g - b).norm() > 1e-6) toward = (g - b).normalized();
  }
  const Eigen::Vector2d target = b - params_.behind_ball * toward;
  const double heading = std::atan2(target.y(), target.x());
  const double near = 1.0 - std::clamp(d / 2.0, 0.0, 1.0);
  return {std::clamp(d, 0.0, 1.0) * std::max(0.0, std::cos(heading)),
          clamp1(params_.lateral_gain * near * target.y()), clamp1(params_.turn_gain * heading), true};
}

gait::GaitCommand Behavior::align(const BallBelief& ball, const std::optional<GoalBelief>& goal) const {
  const double d = ball.distance.value_or(params_.align_distance);
  const double bx = d * std::cos(ball.bearing);
  const double by = d * std::sin(ball.bearing);
  const double face = goal ? goal->bearing : ball.bearing;
  return {std::clamp(params_.align_gain * (bx - params_.kick_spot_x), -0.5, 0.5),
          clamp1(params_.align_gain * (by - params_.kick_spot_y)), clamp1(params_.turn_gain * face), true};
}

Decision Behavior::tick(const WorldBelief& belief, double dt) {
  Decision out;
  const HeadCommand forward{0.0, params_.head_pitch};

  if (belief.fall == FallState::Falling) {
    enter(State::Relax);
    out = {state_, RelaxAction{}, forward};
  } else if (belief.fall == FallState::FallenProne || belief.fall == FallState::FallenSupine) {
    enter(State::Getup);
    out = {state_, PlayMotion{belief.fall == FallState::FallenProne ? "getup_prone" : "getup_supine"},
           forward};
  } else {
    if (state_ == State::Relax || state_ == State::Getup) enter(State::Search);
    if (state_ == State::Kick && time_in_state_ > 0.0 && belief.active_motion != kKick) {
      enter(State::Search);
    }

    if (state_ == State::Kick) {
      out = {state_, PlayMotion{std::string(kKick)}, forward};
    } else if (!fresh(belief.ball)) {
      enter(State::Search);
      const double t = scan_time_;
      scan_time_ += dt;
      const double yaw = params_.scan_amplitude * (2.0 / std::numbers::pi) *
                         std::asin(std::sin(2.0 * std::numbers::pi * params_.scan_freq * t));
      out = {state_, gait::GaitCommand{0.0, 0.0, params_.search_vyaw, true}, {yaw, params_.head_pitch}};
    } else {
      const auto& ball = *belief.ball;
      const double d = ball.distance.value_or(std::numeric_limits<double>::infinity());
      const bool goal_ok = !belief.goal || std::abs(belief.goal->bearing) < params_.kick_goal_bearing;
      if (d < params_.kick_distance && std::abs(ball.bearing) < params_.kick_ball_bearing && goal_ok) {
        enter(State::Kick);
        out = {state_, PlayMotion{std::string(kKick)}, forward};
      } else if (d < params_.align_distance) {
        enter(State::Align);
        out = {state_, align(ball, belief.goal), forward};
      } else {
        enter(State::Approach);
        out = {state_, approach(ball, belief.goal), forward};
      }
    }
  }
  time_in_state_ += dt;
  return out;
}

}  // namespace nop::behavior
