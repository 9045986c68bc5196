#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "nop/robot_model.hpp"

namespace nop::motion {

enum class Interpolation { Linear, Cosine };

struct Keyframe {
  double duration_s = 1.0;
  robot::JointVector targets;
  /// Jump to the targets at the start of the span and hold them (no blend).
  bool hold = false;

  bool operator==(const Keyframe&) const = default;
};

struct MotionFile {
  std::string name;
  Interpolation interpolation = Interpolation::Cosine;
  std::vector<Keyframe> keyframes;

  double total_duration() const;
  bool operator==(const MotionFile&) const = default;
};

/// Grammar problem; `line()` is 1-based.
class SyntaxError : public std::runtime_error {
public:
  SyntaxError(std::size_t line, const std::string& msg);
  std::size_t line() const { return line_; }

private:
  std::size_t line_;
};

/// Invariant violation. `field()` is "duration", "arity", "keyframes" or the offending joint name.
class ValidationError : public std::runtime_error {
public:
  ValidationError(std::string field, const std::string& msg);
  const std::string& field() const { return field_; }

private:
  std::string field_;
};

/// Parses the line-oriented `.motion` format:
///
///     motion <name>
///     interp linear|cosine
///     frame <duration_s> [hold]
///       <joint_name> <angle_rad>      (exactly 20 lines, one per joint)
///
/// `#` starts a comment, blank lines are ignored.
MotionFile load_motion(std::string_view text,
                       const robot::JointLimits& limits = robot::RobotConstants::default_limits());

/// Canonical text form (joints in canonical order, shortest round-trip numbers, LF endings).
std::string serialize(const MotionFile& motion);

void validate(const MotionFile& motion, const robot::JointLimits& limits);

/// Joint targets at time t into the motion, blending from start_pose into the first keyframe.
robot::JointVector sample(const MotionFile& motion, double t, const robot::JointVector& start_pose);

/// Shipped motions keyed by name: "kick", "getup_prone", "getup_supine".
const std::map<std::string, MotionFile>& standard_motions();
/// Raw text of a shipped motion.
std::string_view standard_motion_text(std::string_view name);

/// Playback cursor owned by the control loop.
class MotionPlayer {
public:
  void start(const MotionFile& motion, const robot::JointVector& start_pose);
  /// Returns the targets at the current time, then advances by dt. Deactivates after emitting
  /// the final keyframe targets.
  robot::JointVector step(double dt);
  void stop() { active_ = false; }

  bool active() const { return active_; }
  double elapsed() const { return elapsed_; }
  const std::string& name() const { return motion_.name; }

private:
  MotionFile motion_;
  robot::JointVector start_pose_;
  double elapsed_ = 0.0;
  bool active_ = false;
};

}  // namespace nop::motion
