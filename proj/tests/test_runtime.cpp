#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <numbers>

#include "nop/behavior.hpp"
#include "nop/config/codec.hpp"
#include "nop/config/service.hpp"
#include "nop/gait.hpp"
#include "nop/runtime/system.hpp"
#include "nop/vision/detect.hpp"

using namespace nop::runtime;
using nlohmann::json;
using nop::behavior::State;
using nop::estimation::FallState;

namespace {

RuntimeOptions sync_options() {
  RuntimeOptions o;
  o.threaded_vision = false;
  return o;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

std::filesystem::path temp_path(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("nop_runtime_" + name);
}

}  // namespace

TEST_CASE("one second is 125 control cycles") {
  nop::config::ParamStore store;
  System sys(store, sync_options());
  sys.run_for(1.0);
  CHECK(sys.cycle() == 125);
  CHECK(sys.clock().now_us() == 1'000'000);
}

TEST_CASE("vision runs on every fifth cycle and telemetry on every twelfth") {
  nop::config::ParamStore store;
  System sys(store, sync_options());
  std::vector<std::uint64_t> frames;
  sys.set_sink([&](const json& m) {
    if (m.value("event", "") == "telemetry") frames.push_back(m.at("cycle").get<std::uint64_t>());
  });
  std::uint64_t seen = 0;
  for (int k = 0; k < 120; ++k) {
    sys.run_cycle();
    const bool vision_cycle = sys.cycle() % 5 == 0;
    CHECK(sys.vision_frames() == seen + (vision_cycle ? 1 : 0));
    seen = sys.vision_frames();
  }
  CHECK(seen == 24);
  CHECK(sys.telemetry_frames() == 10);
  REQUIRE(frames.size() == 10);
  for (std::size_t i = 0; i < frames.size(); ++i) CHECK(frames[i] == 12 * (i + 1));
}

TEST_CASE("ball one meter ahead is seen straight ahead") {
  nop::config::ParamStore store;
  auto o = sync_options();
  o.start_pose = {-1.0, 0.0, 0.0};
  o.ball = {true, 0.0, 0.0, 0.0, 0.0};
  System sys(store, o);
  for (int k = 0; k < 5; ++k) sys.run_cycle();
  REQUIRE(sys.last_detections().has_value());
  REQUIRE(sys.last_detections()->ball.has_value());
  REQUIRE(sys.belief().ball.has_value());
  CHECK(std::abs(sys.belief().ball->bearing) < 2.0 * std::numbers::pi / 180.0);
  REQUIRE(sys.belief().ball->distance.has_value());
  CHECK(*sys.belief().ball->distance == doctest::Approx(1.0).epsilon(0.15));
}

TEST_CASE("no ball pixels once the ball is removed") {
  nop::config::ParamStore store;
  System sys(store, sync_options());
  for (int k = 0; k < 5; ++k) sys.run_cycle();
  auto count_ball = [&] {
    const auto frame = sys.latest_frame();
    const auto lut = sys.lut();
    int n = 0;
    for (int y = 0; y < frame->height(); ++y) {
      for (int x = 0; x < frame->width(); ++x) n += lut->lookup(frame->pixel(x, y)) == nop::vision::ColorClass::Ball;
    }
    return n;
  };
  CHECK(count_ball() > 50);
  sys.inject(RemoveBall{});
  for (int k = 0; k < 5; ++k) sys.run_cycle();
  CHECK(count_ball() == 0);
  CHECK_FALSE(sys.last_detections()->ball.has_value());
}

TEST_CASE("a forward push relaxes every servo and ends prone") {
  nop::config::ParamStore store;
  System sys(store, sync_options());
  sys.run_for(0.5);
  sys.inject(Push{1.6, 0.0});
  bool relaxed = false;
  int cycles = 0;
  while (sys.fall_state() != FallState::FallenProne && cycles < 250) {
    sys.run_cycle();
    ++cycles;
    if (sys.behavior_state() == State::Relax && !relaxed) {
      relaxed = true;
      CHECK(std::abs(sys.world().state().pitch) < 1.3);
      sys.run_cycle();
      ++cycles;
      for (std::uint8_t id = 1; id <= nop::robot::kNumJoints; ++id) {
        CHECK(sys.bus().registers(id).u8(nop::bus::reg::TorqueEnable) == 0);
      }
    }
  }
  CHECK(relaxed);
  CHECK(sys.fall_state() == FallState::FallenProne);
  CHECK(cycles < 250);  // within two seconds
}

TEST_CASE("teleport places the robot exactly") {
  World w;
  w.apply(Teleport{{2.0, -1.5, 0.7}});
  CHECK(w.state().robot.x == 2.0);
  CHECK(w.state().robot.y == -1.5);
  CHECK(w.state().robot.theta == 0.7);

  nop::config::ParamStore store;
  System sys(store, sync_options());
  sys.run_for(0.2);
  sys.inject(Teleport{{2.0, -1.5, 0.7}});
  sys.run_cycle();
  // One cycle of walking at most after the jump.
  const auto& r = sys.world().state().robot;
  CHECK(std::hypot(r.x - 2.0, r.y + 1.5) < 0.01);
  CHECK(r.theta == doctest::Approx(0.7).epsilon(0.02));
}

TEST_CASE("moving the ball behind the robot returns to search at the next vision frame") {
  nop::config::ParamStore store;
  System sys(store, sync_options());
  while (sys.behavior_state() != State::Approach && sys.cycle() < 500) sys.run_cycle();
  REQUIRE(sys.behavior_state() == State::Approach);
  const auto r = sys.world().state().robot;
  sys.inject(SetBall{r.x - 2.0, r.y, 0.0, 0.0});
  do {
    sys.run_cycle();
    if (sys.cycle() % kVisionEvery != 0) CHECK(sys.behavior_state() == State::Approach);
  } while (sys.cycle() % kVisionEvery != 0);
  CHECK(sys.behavior_state() == State::Search);
}

TEST_CASE("low battery is reported once") {
  nop::config::ParamStore store;
  System sys(store, sync_options());
  store.set("/world/battery_low", 16.7);
  store.set("/world/battery_decay", 0.001);
  int events = 0;
  sys.set_sink([&](const json& m) { events += m.value("event", "") == "battery_low"; });
  sys.run_for(3.0);
  CHECK(events == 1);
  CHECK(sys.world().state().battery_v < 16.7);
  CHECK(sys.bus().registers(nop::bus::kImuBoardId).u8(nop::bus::reg::BoardVoltage) ==
        static_cast<int>(std::lround(sys.world().state().battery_v * 10.0)));
}

TEST_CASE("runs are reproducible byte for byte") {
  auto run = [](const std::string& tag, bool threaded) {
    nop::config::ParamStore store;
    RuntimeOptions o;
    o.seed = 42;
    o.threaded_vision = threaded;
    o.telemetry_path = temp_path(tag + ".ndjson").string();
    o.packet_log_path = temp_path(tag + ".bin").string();
    {
      System sys(store, o);
      sys.schedule({{1.0, SetBall{0.5, 0.3, 0.0, 0.0}}, {2.0, Push{0.0, 1.6}}});
      sys.run_for(3.0);
    }
    return std::pair{slurp(o.telemetry_path), slurp(o.packet_log_path)};
  };
  const auto a = run("a", false);
  const auto b = run("b", true);
  CHECK(a.first.size() > 1000);
  CHECK(a.second.size() > 10000);
  CHECK(a.first == b.first);
  CHECK(a.second == b.second);
}

TEST_CASE("bus corruption is counted and tolerated") {
  nop::config::ParamStore store;
  System sys(store, sync_options());
  store.set("/bus/corrupt_rate", 0.2);
  sys.run_for(1.0);
  CHECK(sys.bus_warnings() > 0);
  CHECK(sys.fall_state() == FallState::Stable);
}

TEST_CASE("dashboard operations reach the control loop") {
  nop::config::ParamStore store;
  System sys(store, sync_options());
  nop::config::ConfigService service(store);
  sys.register_ops(service);
  nop::config::Session session;

  nop::vision::ColorLUT blank;
  const auto bytes = blank.to_bytes();
  auto r = service.handle({{"id", 1}, {"op", "lut_upload"}, {"data", nop::config::base64_encode(bytes)}}, session);
  CHECK(r.at("ok") == true);
  sys.run_cycle();
  CHECK(*sys.lut() == blank);

  r = service.handle({{"id", 2}, {"op", "lut_upload"}, {"data", "not base64!"}}, session);
  CHECK(r.at("ok") == false);

  r = service.handle({{"id", 3}, {"op", "motion_download"}, {"name", "kick"}}, session);
  REQUIRE(r.at("ok") == true);
  const auto text = r.at("text").get<std::string>();
  r = service.handle({{"id", 4}, {"op", "motion_upload"}, {"text", text}, {"play", true}}, session);
  CHECK(r.at("ok") == true);
  sys.run_cycle();
  CHECK(sys.player().active());
  sys.run_cycle();
  CHECK(sys.target_source() == TargetSource::Motion);

  r = service.handle({{"id", 5}, {"op", "event"}, {"event", {{"type", "teleport"}, {"x", 1}, {"y", 1}}}}, session);
  CHECK(r.at("ok") == true);
  sys.run_cycle();
  CHECK(sys.world().state().robot.x == 1.0);

  sys.run_for(0.1);
  r = service.handle({{"id", 6}, {"op", "status"}}, session);
  CHECK(r.at("frame").at("cycle").get<int>() % kTelemetryEvery == 0);
}

TEST_CASE("ball rolls to a stop under constant friction") {
  World w;
  w.apply(SetBall{0.0, 0.0, 2.0, 0.0});
  WorldInput in;
  for (int k = 0; k < 1000; ++k) w.step(0.008, in);
  // v^2 / (2 a) with a = 0.5
  CHECK(w.state().ball.x == doctest::Approx(4.0).epsilon(0.01));
  CHECK(w.state().ball.vx == 0.0);
}

TEST_CASE("field lines") {
  const FieldGeometry f;
  CHECK(f.on_line(0.0, 1.0));
  CHECK(f.on_line(0.75, 0.0));
  CHECK(f.on_line(4.5, 2.0));
  CHECK(f.on_line(3.0, 2.99));
  CHECK(f.on_line(3.5, 1.0));
  CHECK_FALSE(f.on_line(1.5, 1.5));
  CHECK_FALSE(f.on_line(-2.0, -1.0));
  CHECK(f.on_carpet(5.4, 3.9));
  CHECK_FALSE(f.on_carpet(5.6, 0.0));
  CHECK(f.post_positions().size() == 4);
}

TEST_CASE("scenario files are parsed and ordered") {
  const auto j = json::parse(R"([
    {"at_s": 2.0, "event": {"type": "push", "pitch": 1.6}},
    {"at_s": 0.5, "event": "remove_ball"},
    {"at_s": 1.0, "event": {"type": "set", "path": "/bus/corrupt_rate", "value": 0.1}}
  ])");
  const auto s = parse_scenario(j);
  REQUIRE(s.size() == 3);
  CHECK(s[0].at_s == 0.5);
  CHECK(std::holds_alternative<RemoveBall>(s[0].event));
  CHECK(std::get<SetParam>(s[1].event).path == "/bus/corrupt_rate");
  CHECK(std::get<Push>(s[2].event).pitch == 1.6);
  CHECK_THROWS(parse_event(json{{"type", "explode"}}));
}

TEST_CASE("kick geometry reaches forward") {
  World w;
  nop::robot::JointVector q;
  using nop::robot::Joint;
  q[Joint::RightHipPitch] = -0.3;
  q[Joint::RightKneePitch] = 0.6;
  CHECK(std::abs(w.foot_reach(q)) < 0.01);
  q[Joint::RightHipPitch] = 0.6;
  q[Joint::RightKneePitch] = 0.2;
  CHECK(w.foot_reach(q) > 0.25);
}

TEST_CASE("center circle crossing seen obliquely is traced as an X") {
  // A thin halfway line meets a wide, near arc; the short stub beyond the circle used to
  // fold back into the junction region and the crossing came out as a T.
  const nop::vision::LensModel lens;
  const Renderer renderer(lens);
  const FieldGeometry field;
  WorldState w;
  w.robot = {0.29315041286993004, -0.67141350315829573, 2.564680272806946};
  w.ball = {true, -0.94047714530423532, 0.14270385799781315, 0.0, 0.0};
  const nop::robot::RobotConstants rc;
  const double h = nop::robot::camera_height(rc, nop::gait::stand_pose(nop::gait::GaitParams{}));
  const auto cam = place_camera(w.robot, h, 0, 0, 0, nop::behavior::BehaviorParams{}.head_pitch);
  const Eigen::Vector3d c = cam.rotation.transpose() * (Eigen::Vector3d(0.0, 0.75, 0.0) - cam.position);
  const auto px = lens.project(c);
  const double cx = (px.u - 1.5) / nop::vision::kCellSize, cy = (px.v - 1.5) / nop::vision::kCellSize;
  const auto det = nop::vision::run_pipeline(renderer.render(w, field, cam), nop::vision::default_lut(), lens);
  int near = 0;
  for (const auto& x : det.crossings) {
    if (std::hypot(x.position.x - cx, x.position.y - cy) > 6.0) continue;
    ++near;
    CHECK(x.kind == nop::vision::CrossingKind::X);
  }
  CHECK(near == 1);
}
