// Acceptance suite: one PASS/FAIL line per headline requirement. Exit status is the number of
// failures, so ctest reports the suite as failed when any line does.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <iterator>
#include <limits>
#include <map>
#include <numbers>
#include <random>
#include <sstream>
#include <thread>

#include <Eigen/SVD>

#include "nop/behavior.hpp"
#include "nop/config/param_store.hpp"
#include "nop/gait.hpp"
#include "nop/ilc_benchmark.hpp"
#include "nop/runtime/system.hpp"
#include "nop/servo_bus.hpp"
#include "nop/vision/detect.hpp"

namespace {

using namespace nop;
using namespace nop::runtime;
using Clock = std::chrono::steady_clock;
constexpr double kPi = std::numbers::pi;
constexpr double kDeg = kPi / 180.0;

struct Outcome {
  bool pass = false;
  std::string detail;
};

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const auto n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::string fmt(double v, int precision = 3) {
  std::ostringstream os;
  os.precision(precision);
  os << v;
  return os.str();
}

// ---------------------------------------------------------------------------------------------
// Synthetic scenes rendered through the camera model.

struct Junction {
  double x, y;
  char kind;  // 'T', 'X' or 'L'
};

std::vector<Junction> field_junctions(const FieldGeometry& f) {
  const double gx = f.length / 2, ty = f.width / 2, ax = gx - f.goal_area_depth, ay = f.goal_area_width / 2;
  std::vector<Junction> j = {{0, ty, 'T'},  {0, -ty, 'T'}, {0, f.center_circle_radius, 'X'},
                             {0, -f.center_circle_radius, 'X'}};
  for (double sx : {-1.0, 1.0}) {
    for (double sy : {-1.0, 1.0}) {
      j.push_back({sx * gx, sy * ay, 'T'});
      j.push_back({sx * gx, sy * ty, 'L'});
      j.push_back({sx * ax, sy * ay, 'L'});
    }
  }
  return j;
}

struct Scene {
  WorldState world;
  CameraPlacement cam;
  int expected_posts = 0;
};

class SceneMaker {
public:
  explicit SceneMaker(std::uint64_t seed) : rng_(seed) {
    const robot::RobotConstants rc;
    height_ = robot::camera_height(rc, gait::stand_pose(gait::GaitParams{}));
    neck_pitch_ = behavior::BehaviorParams{}.head_pitch;
  }

  const vision::LensModel& lens() const { return lens_; }
  const FieldGeometry& field() const { return field_; }

  Eigen::Vector3d to_camera(const CameraPlacement& cam, const Eigen::Vector3d& p) const {
    return cam.rotation.transpose() * (p - cam.position);
  }

  // Inside the frame with a margin and well within the lens.
  bool clearly_visible(const CameraPlacement& cam, const Eigen::Vector3d& p, double margin = 40.0) const {
    const Eigen::Vector3d c = to_camera(cam, p);
    if (std::acos(std::clamp(c.normalized().x(), -1.0, 1.0)) > 80 * kDeg) return false;
    const auto px = lens_.project(c);
    return px.u >= margin && px.u <= vision::kImageWidth - margin && px.v >= margin &&
           px.v <= vision::kImageHeight - margin;
  }

  bool clearly_hidden(const CameraPlacement& cam, const Eigen::Vector3d& p) const {
    const Eigen::Vector3d c = to_camera(cam, p);
    if (std::acos(std::clamp(c.normalized().x(), -1.0, 1.0)) > 100 * kDeg) return true;
    const auto px = lens_.project(c);
    return px.u < -30 || px.u > vision::kImageWidth + 30 || px.v < -30 || px.v > vision::kImageHeight + 30;
  }

  // A scene aimed at a line junction (when `junction` is set) or at an arbitrary spot of the
  // field. Scenes whose ground truth would be ambiguous are redrawn.
  Scene make(bool junction) {
    const auto junctions = field_junctions(field_);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (;;) {
      Scene s;
      Pose2 pose;
      if (junction) {
        std::vector<Junction> tx;
        std::copy_if(junctions.begin(), junctions.end(), std::back_inserter(tx),
                     [](const Junction& j) { return j.kind != 'L'; });
        const auto& j = tx[static_cast<std::size_t>(u(rng_) * static_cast<double>(tx.size())) % tx.size()];
        const double d = 1.2 + 1.3 * u(rng_), a = 2 * kPi * u(rng_);
        pose.x = j.x + d * std::cos(a);
        pose.y = j.y + d * std::sin(a);
        pose.theta = std::atan2(j.y - pose.y, j.x - pose.x) + (u(rng_) - 0.5) * 0.8;
      } else {
        pose = {-4.0 + 7.5 * u(rng_), -2.5 + 5.0 * u(rng_), -kPi + 2 * kPi * u(rng_)};
      }
      if (std::abs(pose.x) > 4.3 || std::abs(pose.y) > 2.8) continue;
      const double bd = 0.6 + 2.0 * u(rng_), bb = (u(rng_) - 0.5) * 1.2;
      const double bx = pose.x + bd * std::cos(pose.theta + bb), by = pose.y + bd * std::sin(pose.theta + bb);
      if (std::abs(bx) > 4.3 || std::abs(by) > 2.8) continue;

      s.world.robot = pose;
      s.world.ball = {true, bx, by, 0.0, 0.0};
      s.cam = place_camera(pose, height_, 0.0, 0.0, 0.0, neck_pitch_);
      const Eigen::Vector3d ball(bx, by, field_.ball_radius);
      if (!clearly_visible(s.cam, ball)) continue;

      bool ambiguous = false;
      int in_view = 0;
      for (const auto& [px, py] : field_.post_positions()) {
        bool all_in = true, all_out = true;
        for (double z = 0.0; z <= field_.post_height + 1e-9; z += field_.post_height / 4) {
          const Eigen::Vector3d p(px, py, z);
          all_in = all_in && clearly_visible(s.cam, p, 30.0);
          all_out = all_out && clearly_hidden(s.cam, p);
        }
        const double dist = std::hypot(px - pose.x, py - pose.y);
        if (all_in && dist < 7.0) {
          const Eigen::Vector3d pc = to_camera(s.cam, {px, py, field_.post_height / 2}).normalized();
          const Eigen::Vector3d bc = to_camera(s.cam, ball).normalized();
          if (std::acos(std::clamp(pc.dot(bc), -1.0, 1.0)) < 10 * kDeg) ambiguous = true;
          ++in_view;
        } else if (!all_out) {
          ambiguous = true;
        }
      }
      if (ambiguous) continue;
      s.expected_posts = std::min(in_view, 2);
      return s;
    }
  }

  // Narrowest apparent width, in pixels, of the painted lines leaving a junction. Below one cell
  // a line breaks into dashes at the classifier's resolution and its branch cannot be traced.
  double branch_width_px(const CameraPlacement& cam, const Junction& j) const {
    double narrowest = std::numeric_limits<double>::infinity();
    constexpr int kRing = 360;
    std::vector<bool> on(kRing);
    for (int a = 0; a < kRing; ++a) {
      const double ang = 2 * kPi * a / kRing;
      on[a] = field_.on_line(j.x + 0.3 * std::cos(ang), j.y + 0.3 * std::sin(ang));
    }
    for (int a = 0; a < kRing; ++a) {
      // The middle of each run of on-line ring samples is one branch.
      if (!on[a] || on[(a + kRing - 1) % kRing]) continue;
      int len = 0;
      while (on[(a + len) % kRing] && len < kRing) ++len;
      const double ang = 2 * kPi * (a + 0.5 * (len - 1)) / kRing;
      const Eigen::Vector2d dir(std::cos(ang), std::sin(ang)), normal(-dir.y(), dir.x());
      for (double r : {0.15, 0.4}) {
        const Eigen::Vector2d c = Eigen::Vector2d(j.x, j.y) + r * dir;
        const Eigen::Vector2d a0 = c + 0.5 * field_.line_width * normal, a1 = c - 0.5 * field_.line_width * normal;
        const Eigen::Vector3d c0 = to_camera(cam, {a0.x(), a0.y(), 0.0}), c1 = to_camera(cam, {a1.x(), a1.y(), 0.0});
        if (c0.x() <= 0.0 || c1.x() <= 0.0) return 0.0;
        const auto p0 = lens_.project(c0), p1 = lens_.project(c1);
        narrowest = std::min(narrowest, std::hypot(p0.u - p1.u, p0.v - p1.v));
      }
    }
    return narrowest;
  }

  vision::YuyvImage render(const Scene& s) const { return renderer_.render(s.world, field_, s.cam); }

private:
  std::mt19937_64 rng_;
  vision::LensModel lens_;
  FieldGeometry field_;
  Renderer renderer_{lens_};
  double height_ = 0.0;
  double neck_pitch_ = 0.0;
};

Eigen::Vector3d bearing_vector(const vision::Bearing& b) {
  return {std::cos(b.elevation) * std::cos(b.azimuth), std::cos(b.elevation) * std::sin(b.azimuth),
          std::sin(b.elevation)};
}

// ---------------------------------------------------------------------------------------------

Outcome vision_throughput() {
  SceneMaker maker(7);
  const auto lut = vision::default_lut();
  std::vector<double> times;
  for (int k = 0; k < 100; ++k) {
    const auto img = maker.render(maker.make(k % 2 == 0));
    const auto t0 = Clock::now();
    const auto det = vision::run_pipeline(img, lut, maker.lens());
    times.push_back(ms_since(t0));
  }
  const double med = median(times);
  return {med < 40.0, "median " + fmt(med) + " ms over 100 frames (max " +
                          fmt(*std::max_element(times.begin(), times.end())) + " ms)"};
}

Outcome vision_accuracy() {
  SceneMaker maker(2024);
  const auto lut = vision::default_lut();
  const auto junctions = field_junctions(maker.field());
  double worst_ball = 0.0;
  int missed_balls = 0, post_errors = 0, matched = 0, wrong = 0, edge = 0, unmatched = 0;
  int clear_tx = 0, found_tx = 0;
  for (int k = 0; k < 20; ++k) {
    const auto scene = maker.make(k >= 10);
    const auto det = vision::run_pipeline(maker.render(scene), lut, maker.lens());

    const auto& b = scene.world.ball;
    const Eigen::Vector3d truth =
        maker.to_camera(scene.cam, {b.x, b.y, maker.field().ball_radius}).normalized();
    if (det.ball) {
      const double err = std::acos(std::clamp(bearing_vector(det.ball->bearing).dot(truth), -1.0, 1.0));
      worst_ball = std::max(worst_ball, err / kDeg);
    } else {
      ++missed_balls;
    }
    if (static_cast<int>(det.goal_posts.size()) != scene.expected_posts) ++post_errors;

    // Ground-truth junctions, projected into cell coordinates.
    struct Projected {
      double cx, cy;
      char kind;
      bool clear;
    };
    std::vector<Projected> truth_j;
    for (const auto& j : junctions) {
      const Eigen::Vector3d p(j.x, j.y, 0.0);
      const Eigen::Vector3d c = maker.to_camera(scene.cam, p);
      if (std::acos(std::clamp(c.normalized().x(), -1.0, 1.0)) > 110 * kDeg) continue;
      const auto px = maker.lens().project(c);
      const bool near_ball = std::hypot(j.x - b.x, j.y - b.y) < 0.5;
      const bool clear = maker.clearly_visible(scene.cam, p) && !near_ball &&
                         maker.branch_width_px(scene.cam, j) >= vision::kCellSize;
      truth_j.push_back({(px.u - 1.5) / vision::kCellSize, (px.v - 1.5) / vision::kCellSize, j.kind, clear});
      if (clear && j.kind != 'L') ++clear_tx;
    }
    std::vector<bool> hit(truth_j.size(), false);
    for (const auto& c : det.crossings) {
      std::size_t best = truth_j.size();
      double best_d = 6.0;
      for (std::size_t i = 0; i < truth_j.size(); ++i) {
        const double d = std::hypot(truth_j[i].cx - c.position.x, truth_j[i].cy - c.position.y);
        if (d < best_d) best_d = d, best = i;
      }
      if (best == truth_j.size()) {
        ++unmatched;
        continue;
      }
      const auto& t = truth_j[best];
      if (!t.clear) {
        ++edge;
        continue;
      }
      ++matched;
      const char kind = c.kind == vision::CrossingKind::T ? 'T' : 'X';
      if (kind != t.kind) ++wrong;
      if (t.kind != 'L' && !hit[best]) ++found_tx, hit[best] = true;
    }
  }
  const bool pass = missed_balls == 0 && worst_ball < 2.0 && post_errors == 0 && wrong == 0 && matched > 0;
  return {pass, "ball worst " + fmt(worst_ball) + " deg, missed " + std::to_string(missed_balls) +
                    "; post count errors " + std::to_string(post_errors) + "; crossings " +
                    std::to_string(matched - wrong) + "/" + std::to_string(matched) + " correct (" +
                    std::to_string(found_tx) + "/" + std::to_string(clear_tx) + " clear T/X found, " +
                    std::to_string(edge) + " at frame edge or unresolved, " + std::to_string(unmatched) + " unmatched)"};
}

// Pixels of one straight painted line, back-projected through the lens, must lie on a great
// circle (the plane through the optical center and the line). The scene is rendered four times
// finer than the sensor so that pixel quantization stays well below the tolerance; sample
// positions are converted back to sensor pixels before undistortion.
Outcome undistortion() {
  constexpr int kSuper = 4;
  const vision::LensModel lens;
  vision::LensModel fine = lens;
  fine.cx *= kSuper, fine.cy *= kSuper, fine.f *= kSuper;
  const Renderer renderer(fine, vision::kImageWidth * kSuper, vision::kImageHeight * kSuper);
  const FieldGeometry field;
  const robot::RobotConstants rc;
  const double h = robot::camera_height(rc, gait::stand_pose(gait::GaitParams{}));
  const double np = behavior::BehaviorParams{}.head_pitch;

  struct Case {
    Pose2 pose;
    bool line_is_y;  // true: y = value, false: x = value
    double value;
  };
  const std::vector<Case> cases = {{{1.5, 1.2, kPi / 2}, true, field.width / 2},
                                   {{2.5, -0.5, 0.3}, false, field.length / 2},
                                   {{-1.8, 0.4, 0.1}, false, 0.0}};
  double worst = 0.0;
  std::size_t samples = 0;
  for (const auto& c : cases) {
    WorldState w;
    w.robot = c.pose;
    w.ball.present = false;
    const auto cam = place_camera(c.pose, h, 0.0, 0.0, 0.0, np);
    const auto mat = renderer.materials(w, field, cam);
    const int W = renderer.width(), H = renderer.height();
    auto sensor = [&](double fu, double fv) { return vision::Pixel{fu / kSuper, fv / kSuper}; };

    // Mask of the line's pixels, selected by where their ray meets the ground.
    std::vector<char> mask(static_cast<std::size_t>(W) * H, 0);
    for (int v = 0; v < H; ++v) {
      for (int u = 0; u < W; ++u) {
        const std::size_t i = static_cast<std::size_t>(v) * W + u;
        if (mat[i] != Material::Line) continue;
        const auto d = lens.try_direction(sensor(u + 0.5, v + 0.5));
        if (!d) continue;
        const Eigen::Vector3d wd = cam.rotation * *d;
        if (wd.z() >= -1e-6) continue;
        const Eigen::Vector3d g = cam.position - wd * (cam.position.z() / wd.z());
        const double off = c.line_is_y ? g.y() - c.value : g.x() - c.value;
        const double along = c.line_is_y ? g.x() : g.y();
        // Stay clear of the junctions along the line.
        const bool near_junction = c.line_is_y ? std::abs(along) < 0.3 || std::abs(std::abs(along) - 4.5) < 0.3
                                               : std::abs(std::abs(along) - field.goal_area_width / 2) < 0.3 ||
                                                     std::abs(along) < field.center_circle_radius + 0.3 ||
                                                     std::abs(std::abs(along) - field.width / 2) < 0.3;
        if (std::abs(off) > field.line_width || near_junction) continue;
        mask[i] = 1;
      }
    }
    // Centroids across the line: columns where it runs flat, rows where it runs steep. A
    // scan that cuts the line obliquely over a long run would bias the centroid.
    std::vector<Eigen::Vector3d> rays;
    auto add = [&](const vision::Pixel& center) {
      const auto ray = lens.try_undistort(center);
      if (ray && ray->theta < 85 * kDeg) rays.push_back(vision::ray_direction(*ray));
    };
    constexpr int kMaxRun = 6 * kSuper;
    // A run is whole only if the line paint stops where the selection stops; otherwise the
    // exclusion around a junction has clipped it.
    auto paint_at = [&](int u, int v) {
      return u >= 0 && v >= 0 && u < W && v < H && mat[static_cast<std::size_t>(v) * W + u] == Material::Line;
    };
    for (int u = 0; u < W; ++u) {
      int n = 0, lo = H, hi = -1;
      for (int v = 0; v < H; ++v) {
        if (!mask[static_cast<std::size_t>(v) * W + u]) continue;
        ++n, lo = std::min(lo, v), hi = std::max(hi, v);
      }
      if (n >= 2 && n <= kMaxRun && hi - lo + 1 == n && !paint_at(u, lo - 1) && !paint_at(u, hi + 1))
        add(sensor(u + 0.5, 0.5 * (lo + hi) + 0.5));
    }
    for (int v = 0; v < H; ++v) {
      int n = 0, lo = W, hi = -1;
      for (int u = 0; u < W; ++u) {
        if (!mask[static_cast<std::size_t>(v) * W + u]) continue;
        ++n, lo = std::min(lo, u), hi = std::max(hi, u);
      }
      if (n >= 2 && n <= kMaxRun && hi - lo + 1 == n && !paint_at(lo - 1, v) && !paint_at(hi + 1, v))
        add(sensor(0.5 * (lo + hi) + 0.5, v + 0.5));
    }
    if (rays.size() < 80) return {false, "too few line samples in a test view"};
    Eigen::MatrixXd m(static_cast<Eigen::Index>(rays.size()), 3);
    for (std::size_t i = 0; i < rays.size(); ++i) m.row(static_cast<Eigen::Index>(i)) = rays[i].transpose();
    const Eigen::JacobiSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeThinV);
    const Eigen::Vector3d normal = svd.matrixV().col(2);
    for (const auto& r : rays) {
      worst = std::max(worst, std::abs(std::asin(std::clamp(normal.dot(r), -1.0, 1.0))) * lens.f);
    }
    samples += rays.size();
  }
  return {worst < 0.5, "max residual " + fmt(worst) + " px over " + std::to_string(samples) +
                           " cross-line samples on 3 lines (4x supersampled, theta < 85 deg)"};
}

Outcome loop_timing() {
  config::ParamStore store;
  RuntimeOptions o;
  o.threaded_vision = false;
  System sys(store, o);
  bool cadence = true;
  std::uint64_t frames = 0;
  for (int k = 0; k < 1250; ++k) {
    sys.run_cycle();
    const std::uint64_t expect = frames + (sys.cycle() % kVisionEvery == 0 ? 1 : 0);
    cadence = cadence && sys.vision_frames() == expect;
    frames = sys.vision_frames();
  }
  const bool exact = sys.cycle() == 1250 && sys.clock().now_us() == 10'000'000;

  // Realtime pacing is reported but not gated.
  config::ParamStore rt_store;
  RuntimeOptions rt;
  rt.clock = ClockMode::Realtime;
  System rt_sys(rt_store, rt);
  rt_sys.run_for(1.0);
  const auto st = rt_sys.clock().stats();
  return {exact && cadence && frames == 250,
          "10 s = " + std::to_string(sys.cycle()) + " cycles, " + std::to_string(frames) +
              " vision frames on every 5th cycle; realtime mean period " + fmt(st.mean_period_us / 1000.0) +
              " ms, p99 jitter " + fmt(st.p99_jitter_us / 1000.0) + " ms (informational)"};
}

Outcome protocol() {
  using namespace nop::bus;
  std::mt19937_64 rng(99);
  std::uniform_int_distribution<int> byte(0, 255), id(0, 253), len(0, 250), which(0, 4);
  static constexpr Instruction kInstr[] = {Instruction::Ping, Instruction::Read, Instruction::Write,
                                           Instruction::SyncWrite, Instruction::BulkRead};
  int mismatches = 0;
  for (int i = 0; i < 10000; ++i) {
    BusPacket p;
    p.id = static_cast<std::uint8_t>(id(rng));
    p.instruction = kInstr[which(rng)];
    p.params.resize(static_cast<std::size_t>(len(rng)));
    for (auto& b : p.params) b = static_cast<std::uint8_t>(byte(rng));
    const auto bytes = encode(p);
    const auto r = decode(bytes);
    if (!r.ok() || r.consumed != bytes.size() || !(std::get<BusPacket>(r.packet) == p)) ++mismatches;
  }

  const std::vector<std::uint8_t> goal{0x00, 0x08, 0x10, 0x04};
  const auto sample = make_write(5, reg::GoalPosition, goal);
  const auto bytes = encode(sample);
  int corruptions = 0, undetected = 0;
  for (std::size_t pos = 0; pos < bytes.size(); ++pos) {
    for (int v = 0; v < 256; ++v) {
      if (v == bytes[pos]) continue;
      auto bad = bytes;
      bad[pos] = static_cast<std::uint8_t>(v);
      ++corruptions;
      const auto r = decode(bad);
      if (r.ok() && std::get<BusPacket>(r.packet) == sample && r.consumed == bad.size()) ++undetected;
    }
  }
  return {mismatches == 0 && undetected == 0,
          "10000 round trips, " + std::to_string(mismatches) + " mismatches; " + std::to_string(corruptions) +
              " single-byte corruptions, " + std::to_string(undetected) + " accepted as the original"};
}

Outcome ilc() {
  const auto t0 = Clock::now();
  const auto run = actuator::run_ilc(actuator::IlcBenchmark{}, 10);
  const double secs = ms_since(t0) / 1000.0;
  bool monotone = true;
  for (std::size_t k = 2; k + 1 < run.rms.size(); ++k) monotone = monotone && run.rms[k + 1] <= run.rms[k];
  const double ratio = run.rms.back() / run.rms.front();
  return {ratio <= 0.25 && monotone && secs < 10.0,
          "rms " + fmt(run.rms.front() * 1000) + " -> " + fmt(run.rms.back() * 1000) + " mrad (" +
              fmt(100 * ratio) + "%), non-increasing from 2: " + (monotone ? "yes" : "no") + ", " + fmt(secs) +
              " s"};
}

Outcome gait_symmetry() {
  gait::GaitParams p;
  p.kp_pitch = p.kd_pitch = p.kp_roll = p.kd_roll = 0.0;
  const gait::GaitCommand cmd{0, 0, 0, true};
  // Pattern level: exact half-period shift at arbitrary phases.
  double worst = 0.0;
  const int per_period = 1000;
  for (int k = 0; k < 10 * per_period; ++k) {
    const double phase = gait::wrap_phase(2 * kPi * k / per_period);
    const auto q = gait::gait_pattern(phase, cmd, p, {});
    const auto shifted = robot::mirror(gait::gait_pattern(gait::wrap_phase(phase + kPi), cmd, p, {}));
    for (std::size_t j = 0; j < robot::kNumJoints; ++j) worst = std::max(worst, std::abs(q[j] - shifted[j]));
  }
  // Emitted targets: 1.25 Hz puts half a period on exactly 50 cycles.
  p.freq = 1.25;
  gait::GaitState st;
  std::vector<robot::JointVector> out;
  for (int k = 0; k < 1050; ++k) out.push_back(gait::gait_step(st, cmd, p, {}, kCycleS).targets);
  double worst_emitted = 0.0;
  for (std::size_t k = 0; k + 50 < out.size(); ++k) {
    const auto m = robot::mirror(out[k + 50]);
    for (std::size_t j = 0; j < robot::kNumJoints; ++j) {
      worst_emitted = std::max(worst_emitted, std::abs(out[k][j] - m[j]));
    }
  }
  return {worst < 1e-9 && worst_emitted < 1e-9,
          "max |q_L(t) - mirror(q_R)(t + T/2)| over 10 periods: pattern " + fmt(worst) + ", targets " +
              fmt(worst_emitted) + " rad"};
}

Outcome end_to_end() {
  std::string detail;
  bool kick_ok = false;
  {
    config::ParamStore store;
    RuntimeOptions o;
    o.threaded_vision = false;
    o.start_pose = {-2.0, 0.0, 0.0};
    o.ball = {true, 0.0, 0.0, 0.0, 0.0};
    System sys(store, o);
    double kick_at = -1.0, displaced_at = -1.0;
    while (sys.clock().now_s() < 60.0 && displaced_at < 0.0) {
      sys.run_cycle();
      if (kick_at < 0.0 && sys.behavior_state() == behavior::State::Kick) kick_at = sys.clock().now_s();
      const auto& b = sys.world().state().ball;
      if (kick_at >= 0.0 && std::hypot(b.x, b.y) > 1.0) displaced_at = sys.clock().now_s();
    }
    kick_ok = kick_at >= 0.0 && displaced_at >= 0.0;
    detail = "KICK at " + fmt(kick_at) + " s, ball > 1 m at " + fmt(displaced_at) + " s";
  }

  bool push_ok = false;
  {
    config::ParamStore store;
    RuntimeOptions o;
    o.threaded_vision = false;
    System sys(store, o);
    sys.run_for(2.0);
    sys.inject(Push{1.6, 0.0});
    const double t_push = sys.clock().now_s() + kCycleS;
    double relax_pitch = -1.0, search_at = -1.0;
    std::string getup;
    while (sys.clock().now_s() < t_push + 20.0) {
      sys.run_cycle();
      if (relax_pitch < 0.0 && sys.behavior_state() == behavior::State::Relax) {
        relax_pitch = std::abs(sys.world().state().pitch);
      }
      if (getup.empty() && sys.player().active() && sys.player().name().rfind("getup", 0) == 0) {
        getup = sys.player().name();
      }
      if (!getup.empty() && sys.behavior_state() == behavior::State::Search) {
        search_at = sys.clock().now_s() - t_push;
        break;
      }
    }
    push_ok = relax_pitch >= 0.0 && relax_pitch < 1.3 && getup == "getup_prone" && search_at >= 0.0;
    detail += "; push: RELAX at |pitch| " + fmt(relax_pitch) + ", " + (getup.empty() ? "no get-up" : getup) +
              ", SEARCH after " + fmt(search_at) + " s";
  }
  return {kick_ok && push_ok, detail};
}

Outcome determinism() {
  const auto dir = std::filesystem::temp_directory_path();
  auto run = [&](const std::string& tag, bool threaded) {
    config::ParamStore store;
    RuntimeOptions o;
    o.seed = 1234;
    o.threaded_vision = threaded;
    o.telemetry_path = (dir / ("nop_accept_" + tag + ".ndjson")).string();
    o.packet_log_path = (dir / ("nop_accept_" + tag + ".bin")).string();
    {
      System sys(store, o);
      sys.schedule({{3.0, SetBall{1.0, 0.5, 0.0, 0.0}},
                    {6.0, Push{0.0, -1.6}},
                    {8.0, SetParam{"/bus/corrupt_rate", 0.01}}});
      sys.run_for(15.0);
    }
    auto slurp = [](const std::string& p) {
      std::ifstream in(p, std::ios::binary);
      return std::string(std::istreambuf_iterator<char>(in), {});
    };
    return std::pair{slurp(o.telemetry_path), slurp(o.packet_log_path)};
  };
  const auto a = run("a", true);
  const auto b = run("b", true);
  const auto c = run("c", false);
  const bool same = a == b && a == c;
  return {same && !a.first.empty(), "telemetry " + std::to_string(a.first.size()) + " B, packet log " +
                                        std::to_string(a.second.size()) + " B, 3 runs " +
                                        (same ? "identical" : "differ")};
}

Outcome config_server() {
  const auto file = (std::filesystem::temp_directory_path() / "nop_accept_config.json").string();
  config::ParamStore a;
  declare_runtime_params(a);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (const auto& [path, e] : a.list("/")) {
    if (!e.meta) continue;
    const double v = e.meta->min + u(rng) * (e.meta->max - e.meta->min);
    if (std::holds_alternative<std::int64_t>(e.value)) {
      a.set(path, static_cast<std::int64_t>(std::floor(v)));
    } else {
      a.set(path, v);
    }
  }
  a.set("/ff/enabled", false);
  a.set("/vision/goal_class_hue", std::string("blue"));
  a.save(file);
  config::ParamStore b;
  declare_runtime_params(b);
  b.load(file);
  const auto la = a.list("/"), lb = b.list("/");
  bool identical = la.size() == lb.size();
  for (std::size_t i = 0; identical && i < la.size(); ++i) {
    identical = la[i].first == lb[i].first && la[i].second.value == lb[i].second.value;
  }

  config::ParamStore s;
  for (int w = 0; w < 4; ++w) s.declare("/writer" + std::to_string(w) + "/value", 0.0, -1e9, 1e9);
  auto all = s.subscribe("/", 1 << 14);
  std::vector<std::thread> writers;
  for (int w = 0; w < 4; ++w) {
    writers.emplace_back([&s, w] {
      for (int k = 1; k <= 1000; ++k) s.set("/writer" + std::to_string(w) + "/value", double(k));
    });
  }
  for (auto& t : writers) t.join();
  const auto items = all->queue().drain();
  std::map<std::pair<std::string, double>, int> seen;
  bool ordered = true;
  for (std::size_t i = 0; i < items.size(); ++i) {
    ++seen[{items[i].path, std::get<double>(items[i].value)}];
    ordered = ordered && items[i].seq == i + 1;
  }
  const bool once = items.size() == 4000 && seen.size() == 4000 && !all->queue().take_lost() &&
                    std::all_of(seen.begin(), seen.end(), [](const auto& kv) { return kv.second == 1; });
  return {identical && once && ordered,
          std::to_string(la.size()) + " params " + (identical ? "identical" : "differ") + " after save/load; " +
              std::to_string(items.size()) + " notifications for 4000 sets, " + std::to_string(seen.size()) +
              " distinct, seq " + (ordered ? "gap-free" : "broken")};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"vision throughput", vision_throughput}, {"vision accuracy", vision_accuracy},
      {"undistortion", undistortion},           {"loop timing", loop_timing},
      {"protocol", protocol},                   {"ilc", ilc},
      {"gait symmetry", gait_symmetry},         {"end-to-end soccer", end_to_end},
      {"determinism", determinism},             {"config server", config_server},
  };
  int failures = 0;
  for (const auto& [name, check] : criteria) {
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += !o.pass;
    std::cout << (o.pass ? "PASS " : "FAIL ") << name << ": " << o.detail << std::endl;
  }
  return failures;
}
