// Command-line front end: the simulated robot, offline vision, the ILC benchmark and the renderer.
#include <CLI11.hpp>

#include <atomic>
#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "nop/config/codec.hpp"
#include "nop/config/service.hpp"
#include "nop/ilc_benchmark.hpp"
#include "nop/runtime/system.hpp"
#include "nop/vision/detect.hpp"

namespace {

using namespace nop;
using nlohmann::json;

std::atomic<bool> g_stop{false};

std::vector<double> parse_list(const std::string& text, std::size_t n) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(std::stod(item));
  if (out.size() != n) throw CLI::ValidationError("expected " + std::to_string(n) + " comma-separated numbers");
  return out;
}

struct RunArgs {
  std::string config;
  std::uint64_t seed = 1;
  double seconds = 0.0;
  bool headless = false;
  bool realtime = false;
  std::string record;
  std::string scenario;
  std::string packet_log;
};

int cmd_run(const RunArgs& a) {
  config::ParamStore store;
  runtime::declare_runtime_params(store);
  if (!a.config.empty() && std::filesystem::exists(a.config)) store.load(a.config);

  runtime::RuntimeOptions opts;
  opts.seed = a.seed;
  opts.clock = a.realtime ? runtime::ClockMode::Realtime : runtime::ClockMode::Virtual;
  opts.telemetry_path = a.record;
  opts.packet_log_path = a.packet_log;
  runtime::System sys(store, opts);
  if (!a.scenario.empty()) sys.schedule(runtime::load_scenario(a.scenario));
  if (a.realtime && !sys.clock().request_realtime_priority()) {
    std::cerr << "realtime priority unavailable, running with normal scheduling\n";
  }

  std::unique_ptr<config::ConfigService> service;
  std::unique_ptr<config::ImageServer> images;
  if (!a.headless) {
    service = std::make_unique<config::ConfigService>(store, a.config.empty() ? "config.json" : a.config);
    sys.register_ops(*service);
    sys.set_sink([&](const json& msg) { service->publish(msg); });
    const auto cport = service->start(config::port_from_env("NOP_CONFIG_PORT", config::kDefaultConfigPort));

    auto camera = [&sys]() -> std::optional<vision::RgbImage> {
      if (auto f = sys.latest_frame()) return vision::to_rgb(*f);
      return std::nullopt;
    };
    auto classes = [&sys]() -> std::optional<vision::RgbImage> {
      auto f = sys.latest_frame();
      if (!f) return std::nullopt;
      return runtime::class_overlay(*f, *sys.lut());
    };
    images = std::make_unique<config::ImageServer>(camera, classes);
    const auto hport = images->start(config::port_from_env("NOP_HTTP_PORT", config::kDefaultHttpPort));
    std::cerr << "config on tcp/" << cport << ", images on http/" << hport << "\n";
  }

  std::signal(SIGINT, [](int) { g_stop = true; });
  std::signal(SIGTERM, [](int) { g_stop = true; });
  const auto limit = static_cast<std::uint64_t>(std::llround(a.seconds / runtime::kCycleS));
  while (!g_stop && (a.seconds <= 0.0 || sys.cycle() < limit)) sys.run_cycle();

  if (service) service->stop();
  if (images) images->stop();
  const auto& w = sys.world().state();
  json summary{{"cycles", sys.cycle()},
               {"t_s", sys.clock().now_s()},
               {"behavior", behavior::to_string(sys.behavior_state())},
               {"kicks", sys.world().kicks()},
               {"pose", {w.robot.x, w.robot.y, w.robot.theta}},
               {"bus_warnings", sys.bus_warnings()}};
  if (w.ball.present) summary["ball"] = {w.ball.x, w.ball.y};
  if (a.realtime) {
    const auto st = sys.clock().stats();
    summary["timing"] = {{"mean_period_us", st.mean_period_us}, {"p99_jitter_us", st.p99_jitter_us},
                         {"max_jitter_us", st.max_jitter_us}, {"elevated_priority", st.elevated_priority}};
  }
  std::cout << summary.dump() << "\n";
  return 0;
}

int cmd_vision(const std::string& image, const std::string& lut_path, const std::string& out) {
  const auto rgb = vision::read_ppm(image);
  const auto lut = lut_path.empty() ? vision::default_lut() : vision::ColorLUT::load(lut_path);
  const auto det = vision::run_pipeline(vision::to_yuyv(rgb), lut, vision::LensModel{});
  const auto text = vision::to_json(det).dump(2) + "\n";
  if (out.empty() || out == "-") {
    std::cout << text;
  } else {
    std::ofstream(out, std::ios::binary) << text;
  }
  return 0;
}

int cmd_ilc(const std::string& joint, int iterations, const std::string& out) {
  actuator::IlcBenchmark bench;
  const auto j = robot::joint_from_name(joint);
  if (!j) throw CLI::ValidationError("unknown joint '" + joint + "'");
  bench.joint = *j;
  const auto run = actuator::run_ilc(bench, iterations);
  std::ofstream csv(out, std::ios::binary);
  if (!csv) throw std::runtime_error("cannot write " + out);
  csv << "iteration,rms_rad\n";
  for (std::size_t k = 0; k < run.rms.size(); ++k) csv << k << ',' << run.rms[k] << '\n';
  std::cout << "rms " << run.rms.front() << " -> " << run.rms.back() << " rad\n";
  return 0;
}

int cmd_render(const std::string& pose, const std::string& ball, bool no_ball, double neck_yaw, double neck_pitch,
               const std::string& goal_hue, const std::string& out, const std::string& classes_out) {
  const auto p = parse_list(pose, 3);
  const auto b = parse_list(ball, 2);
  runtime::WorldState w;
  w.robot = {p[0], p[1], p[2]};
  w.ball = {!no_ball, b[0], b[1], 0.0, 0.0};
  const runtime::FieldGeometry field;
  const robot::RobotConstants rc;
  const auto stand = gait::stand_pose(gait::GaitParams{});
  const auto cam = runtime::place_camera(w.robot, robot::camera_height(rc, stand), 0.0, 0.0, neck_yaw, neck_pitch);
  runtime::RenderPalette palette;
  palette.goal = runtime::goal_color(goal_hue);
  const runtime::Renderer renderer(vision::LensModel{});
  const auto img = renderer.render(w, field, cam, palette);
  vision::write_ppm(out, vision::to_rgb(img));
  if (!classes_out.empty()) {
    const auto overlay = runtime::class_overlay(
        img, vision::default_lut(vision::ColorClass::Goal, runtime::goal_color(goal_hue)));
    const auto png = config::encode_png(overlay);
    std::ofstream(classes_out, std::ios::binary).write(reinterpret_cast<const char*>(png.data()),
                                                       static_cast<std::streamsize>(png.size()));
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Simulated humanoid soccer robot software"};
  app.require_subcommand(1);

  RunArgs run;
  auto* run_cmd = app.add_subcommand("run", "Run the control loop against the simulated world");
  run_cmd->add_option("--config", run.config, "Parameter file loaded at start and used by save/load");
  run_cmd->add_option("--seed", run.seed, "Seed for every random source");
  run_cmd->add_option("--seconds", run.seconds, "Simulated seconds to run (0 runs until interrupted)");
  run_cmd->add_flag("--headless", run.headless, "Do not start the config and image servers");
  run_cmd->add_flag("--realtime", run.realtime, "Pace cycles against the wall clock");
  run_cmd->add_option("--record", run.record, "Write telemetry frames as JSON lines");
  run_cmd->add_option("--scenario", run.scenario, "JSON list of timed events")->check(CLI::ExistingFile);
  run_cmd->add_option("--packet-log", run.packet_log, "Record every bus frame");

  std::string image, lut_path, vision_out = "-";
  auto* vision_cmd = app.add_subcommand("vision", "Run the vision pipeline on one PPM image");
  vision_cmd->add_option("--image", image, "Binary PPM (P6)")->required()->check(CLI::ExistingFile);
  vision_cmd->add_option("--lut", lut_path, "Color table (default table when omitted)");
  vision_cmd->add_option("--out", vision_out, "Output JSON file, '-' for stdout");

  std::string joint = "LeftKneePitch", ilc_out = "rms.csv";
  int iterations = 10;
  auto* ilc_cmd = app.add_subcommand("ilc", "Learn feed-forward for one joint and log the tracking error");
  ilc_cmd->add_option("--joint", joint, "Joint name");
  ilc_cmd->add_option("--iterations", iterations, "Learning iterations")->check(CLI::NonNegativeNumber);
  ilc_cmd->add_option("--out", ilc_out, "CSV output");

  std::string pose = "0,0,0", ball = "1,0", hue = "yellow", render_out = "frame.ppm", classes_out;
  bool no_ball = false;
  double neck_yaw = 0.0, neck_pitch = behavior::BehaviorParams{}.head_pitch;
  auto* render_cmd = app.add_subcommand("render", "Render one camera frame");
  render_cmd->add_option("--pose", pose, "Robot pose x,y,theta");
  render_cmd->add_option("--ball", ball, "Ball position x,y");
  render_cmd->add_flag("--no-ball", no_ball, "Leave the ball out");
  render_cmd->add_option("--neck-yaw", neck_yaw);
  render_cmd->add_option("--neck-pitch", neck_pitch);
  render_cmd->add_option("--goal-hue", hue)->check(CLI::IsMember({"yellow", "blue"}));
  render_cmd->add_option("--out", render_out, "PPM output");
  render_cmd->add_option("--classes", classes_out, "Also write the class overlay as PNG");

  std::string lut_out = "default.lut";
  auto* lut_cmd = app.add_subcommand("lut", "Write the default color table");
  lut_cmd->add_option("--out", lut_out);

  CLI11_PARSE(app, argc, argv);
  try {
    if (*run_cmd) return cmd_run(run);
    if (*vision_cmd) return cmd_vision(image, lut_path, vision_out);
    if (*ilc_cmd) return cmd_ilc(joint, iterations, ilc_out);
    if (*render_cmd) return cmd_render(pose, ball, no_ball, neck_yaw, neck_pitch, hue, render_out, classes_out);
    if (*lut_cmd) {
      vision::default_lut().save(lut_out);
      return 0;
    }
  } catch (const CLI::Error& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
