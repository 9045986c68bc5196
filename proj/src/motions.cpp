#include "nop/motions.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <numbers>
#include <optional>

#include "nop/errors.hpp"

namespace nop::motion {

// Generated at configure time from data/motions/*.motion.
extern const std::array<std::pair<std::string_view, std::string_view>, 3> kEmbeddedMotions;

namespace {

std::vector<std::string_view> tokens(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    const std::size_t start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t') ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

std::optional<double> parse_number(std::string_view s) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

std::string format_number(double v) {
  std::array<char, 32> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

struct PendingFrame {
  Keyframe frame;
  std::array<bool, robot::kNumJoints> seen{};
  std::size_t count = 0;
  std::size_t line = 0;
};

void finish(PendingFrame& pending, MotionFile& motion) {
  if (pending.count != robot::kNumJoints) {
    throw ValidationError("arity", "frame at line " + std::to_string(pending.line) + " has " +
                                       std::to_string(pending.count) + " joint values, expected 20");
  }
  motion.keyframes.push_back(pending.frame);
}

}  // namespace

SyntaxError::SyntaxError(std::size_t line, const std::string& msg)
    : std::runtime_error("line " + std::to_string(line) + ": " + msg), line_(line) {}

ValidationError::ValidationError(std::string field, const std::string& msg)
    : std::runtime_error(msg), field_(std::move(field)) {}

double MotionFile::total_duration() const {
  double t = 0.0;
  for (const auto& k : keyframes) t += k.duration_s;
  return t;
}

void validate(const MotionFile& motion, const robot::JointLimits& limits) {
  if (motion.keyframes.empty()) throw ValidationError("keyframes", "motion has no keyframes");
  for (const auto& k : motion.keyframes) {
    if (!(k.duration_s > 0.0)) throw ValidationError("duration", "keyframe duration must be > 0");
    for (std::size_t i = 0; i < robot::kNumJoints; ++i) {
      if (k.targets[i] < limits.lo[i] || k.targets[i] > limits.hi[i]) {
        const auto name = std::string(robot::joint_name(i));
        throw ValidationError(name, "target for " + name + " outside joint limits");
      }
    }
  }
}

MotionFile load_motion(std::string_view text, const robot::JointLimits& limits) {
  MotionFile motion;
  bool have_name = false;
  bool have_interp = false;
  std::optional<PendingFrame> pending;

  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const std::size_t eol = std::min(text.find('\n', pos), text.size());
    std::string_view line = text.substr(pos, eol - pos);
    pos = eol + 1;
    ++line_no;

    if (!line.empty() && line.back() == '\r') throw SyntaxError(line_no, "CR line ending");
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    const auto tok = tokens(line);
    if (tok.empty()) continue;

    if (!have_name) {
      if (tok[0] != "motion" || tok.size() != 2) throw SyntaxError(line_no, "expected 'motion <name>'");
      motion.name = std::string(tok[1]);
      have_name = true;
    } else if (!have_interp) {
      if (tok[0] != "interp" || tok.size() != 2) {
        throw SyntaxError(line_no, "expected 'interp linear|cosine'");
      }
      if (tok[1] == "linear") motion.interpolation = Interpolation::Linear;
      else if (tok[1] == "cosine") motion.interpolation = Interpolation::Cosine;
      else throw SyntaxError(line_no, "unknown interpolation '" + std::string(tok[1]) + "'");
      have_interp = true;
    } else if (tok[0] == "frame") {
      if (pending) finish(*pending, motion);
      if (tok.size() < 2 || tok.size() > 3 || (tok.size() == 3 && tok[2] != "hold")) {
        throw SyntaxError(line_no, "expected 'frame <duration_s> [hold]'");
      }
      const auto dur = parse_number(tok[1]);
      if (!dur) throw SyntaxError(line_no, "bad duration '" + std::string(tok[1]) + "'");
      if (!(*dur > 0.0)) throw ValidationError("duration", "line " + std::to_string(line_no) + ": duration must be > 0");
      pending.emplace();
      pending->frame.duration_s = *dur;
      pending->frame.hold = tok.size() == 3;
      pending->line = line_no;
    } else {
      if (!pending) throw SyntaxError(line_no, "joint value outside a frame");
      if (tok.size() != 2) throw SyntaxError(line_no, "expected '<joint_name> <angle_rad>'");
      const auto joint = robot::joint_from_name(tok[0]);
      if (!joint) throw SyntaxError(line_no, "unknown joint '" + std::string(tok[0]) + "'");
      const auto value = parse_number(tok[1]);
      if (!value) throw SyntaxError(line_no, "bad angle '" + std::string(tok[1]) + "'");
      const auto idx = robot::index(*joint);
      if (pending->seen[idx]) {
        throw ValidationError(std::string(tok[0]), "line " + std::to_string(line_no) +
                                                       ": duplicate joint " + std::string(tok[0]));
      }
      pending->seen[idx] = true;
      pending->frame.targets[idx] = *value;
      ++pending->count;
    }
  }
  if (!have_name || !have_interp) throw SyntaxError(line_no, "missing motion header");
  if (pending) finish(*pending, motion);
  validate(motion, limits);
  return motion;
}

std::string serialize(const MotionFile& motion) {
  std::string out = "motion " + motion.name + "\n";
  out += motion.interpolation == Interpolation::Linear ? "interp linear\n" : "interp cosine\n";
  for (const auto& k : motion.keyframes) {
    out += "frame " + format_number(k.duration_s) + (k.hold ? " hold\n" : "\n");
    for (std::size_t i = 0; i < robot::kNumJoints; ++i) {
      out += "  ";
      out += robot::joint_name(i);
      out += ' ';
      out += format_number(k.targets[i]);
      out += '\n';
    }
  }
  return out;
}

robot::JointVector sample(const MotionFile& motion, double t, const robot::JointVector& start_pose) {
  if (motion.keyframes.empty()) throw DomainError("cannot sample an empty motion");
  if (t < 0.0) throw DomainError("motion time must be >= 0");

  double span_start = 0.0;
  const robot::JointVector* from = &start_pose;
  for (const auto& k : motion.keyframes) {
    const double span_end = span_start + k.duration_s;
    if (t < span_end) {
      const double s = (t - span_start) / k.duration_s;
      double w = 1.0;
      if (!k.hold) {
        w = motion.interpolation == Interpolation::Cosine
                ? 0.5 * (1.0 - std::cos(std::numbers::pi * s))
                : s;
      }
      robot::JointVector q;
      for (std::size_t i = 0; i < robot::kNumJoints; ++i) {
        q[i] = (*from)[i] + w * (k.targets[i] - (*from)[i]);
      }
      return q;
    }
    span_start = span_end;
    from = &k.targets;
  }
  return motion.keyframes.back().targets;
}

const std::map<std::string, MotionFile>& standard_motions() {
  static const std::map<std::string, MotionFile> motions = [] {
    std::map<std::string, MotionFile> m;
    for (const auto& [name, text] : kEmbeddedMotions) m.emplace(std::string(name), load_motion(text));
    return m;
  }();
  return motions;
}

std::string_view standard_motion_text(std::string_view name) {
  for (const auto& [n, text] : kEmbeddedMotions) {
    if (n == name) return text;
  }
  throw DomainError("no standard motion named " + std::string(name));
}

void MotionPlayer::start(const MotionFile& motion, const robot::JointVector& start_pose) {
  motion_ = motion;
  start_pose_ = start_pose;
  elapsed_ = 0.0;
  active_ = !motion.keyframes.empty();
}

robot::JointVector MotionPlayer::step(double dt) {
  const auto q = sample(motion_, elapsed_, start_pose_);
  // The final targets are emitted once before the player goes idle.
  if (elapsed_ >= motion_.total_duration() - 1e-9) active_ = false;
  elapsed_ += dt;
  return q;
}

}  // namespace nop::motion
