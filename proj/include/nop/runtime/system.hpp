#pragma once

#include <cstdint>
#include <deque>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "nop/behavior.hpp"
#include "nop/config/param_store.hpp"
#include "nop/gait.hpp"
#include "nop/motions.hpp"
#include "nop/runtime/clock.hpp"
#include "nop/runtime/params.hpp"
#include "nop/runtime/render.hpp"
#include "nop/runtime/vision_worker.hpp"
#include "nop/runtime/world.hpp"
#include "nop/servo_bus.hpp"
#include "nop/state_estimation.hpp"

namespace nop::config {
class ConfigService;
}

namespace nop::runtime {

inline constexpr int kVisionEvery = 5;
inline constexpr int kTelemetryEvery = 12;

struct RuntimeOptions {
  std::uint64_t seed = 1;
  ClockMode clock = ClockMode::Virtual;
  /// Run vision in its own thread. Results are still picked up at fixed cycles in virtual mode.
  bool threaded_vision = true;
  std::string telemetry_path;
  std::string packet_log_path;
  Pose2 start_pose{-1.0, 0.0, 0.0};
  BallState ball{true, 1.0, 0.0, 0.0, 0.0};
};

/// Which source produced this cycle's joint targets.
enum class TargetSource { None, Gait, Motion };

/// The control loop and everything it owns. Single-threaded: call run_cycle() from one
/// thread. The upload/inject/latest_* members may be called from any thread.
class System {
public:
  System(config::ParamStore& store, RuntimeOptions options = {});
  ~System();
  System(const System&) = delete;
  System& operator=(const System&) = delete;

  void run_cycle();
  /// Runs round(seconds / 8 ms) cycles.
  void run_for(double seconds);

  void schedule(std::vector<TimedEvent> events);
  /// Applied at the start of the next cycle.
  void inject(Event e);

  /// Receives every telemetry frame and event message.
  void set_sink(std::function<void(const nlohmann::json&)> sink) { sink_ = std::move(sink); }
  /// Installs lut_upload, lut_download, motion_upload, motion_play, motion_download, event and status.
  void register_ops(config::ConfigService& service);

  // Thread-safe hand-offs, applied at the config step of the next cycle.
  void upload_lut(vision::ColorLUT lut);
  void upload_motion(motion::MotionFile m, bool play);
  void play_motion(const std::string& name);

  std::shared_ptr<const vision::YuyvImage> latest_frame() const;
  std::shared_ptr<const vision::ColorLUT> lut() const;
  std::optional<motion::MotionFile> motion_by_name(const std::string& name) const;

  // Control-thread accessors.
  std::uint64_t cycle() const { return cycle_; }
  const SimClock& clock() const { return clock_; }
  SimClock& clock() { return clock_; }
  const World& world() const { return world_; }
  World& world() { return world_; }
  behavior::State behavior_state() const { return behavior_.state(); }
  estimation::FallState fall_state() const { return fall_.state(); }
  const estimation::AttitudeEstimate& attitude() const { return attitude_; }
  const behavior::WorldBelief& belief() const { return belief_; }
  const robot::JointVector& targets() const { return targets_; }
  robot::JointVector measured() const { return measured_; }
  TargetSource target_source() const { return source_; }
  bool torque_enabled() const { return torque_on_; }
  const bus::SimulatedBus& bus() const { return *bus_; }
  std::uint64_t vision_frames() const { return vision_frames_; }
  std::uint64_t telemetry_frames() const { return telemetry_frames_; }
  std::uint64_t bus_warnings() const { return bus_warnings_; }
  const std::optional<vision::Detections>& last_detections() const { return detections_; }
  const RuntimeParams& params() const { return params_; }
  const motion::MotionPlayer& player() const { return player_; }
  nlohmann::json telemetry_frame() const;

private:
  void apply_due_events();
  void apply_event(const Event& e);
  void read_sensors();
  void vision_step();
  void produce_targets(const behavior::Decision& d);
  void write_goals();
  void apply_config();
  void step_world();
  void emit(const nlohmann::json& msg);
  behavior::CameraPose camera_pose_estimate() const;
  CameraPlacement camera_placement_truth() const;
  void rebuild_vision_assets(bool lens_changed, bool hue_changed);

  config::ParamStore& store_;
  RuntimeOptions options_;
  std::shared_ptr<config::Subscription> config_sub_;
  RuntimeParams params_;

  SimClock clock_;
  std::uint64_t cycle_ = 0;
  std::mt19937_64 rng_;
  std::unique_ptr<bus::PacketLog> packet_log_;
  std::unique_ptr<bus::SimulatedBus> bus_;

  estimation::AttitudeEstimate attitude_;
  estimation::FallDetector fall_;
  behavior::Behavior behavior_;
  behavior::WorldBelief belief_;
  gait::GaitState gait_state_;
  gait::BodyTwist twist_;
  motion::MotionPlayer player_;
  bool getup_done_ = false;

  robot::JointVector measured_;
  robot::JointVector targets_;
  robot::JointVector prev_targets_;
  bool have_prev_targets_ = false;
  TargetSource source_ = TargetSource::None;
  bool relax_ = false;
  bool torque_on_ = true;

  World world_;
  std::unique_ptr<Renderer> renderer_;
  VisionWorker vision_;
  std::optional<vision::Detections> detections_;
  std::uint64_t vision_frames_ = 0;
  std::uint64_t telemetry_frames_ = 0;
  std::uint64_t bus_warnings_ = 0;
  bool lut_custom_ = false;

  std::vector<TimedEvent> scenario_;
  std::size_t scenario_next_ = 0;
  nlohmann::json pending_events_ = nlohmann::json::array();

  std::ofstream telemetry_out_;
  std::function<void(const nlohmann::json&)> sink_;

  // Shared with server threads.
  mutable std::mutex shared_mu_;
  std::shared_ptr<const vision::YuyvImage> latest_frame_;
  std::shared_ptr<const vision::ColorLUT> lut_;
  std::map<std::string, motion::MotionFile> motions_;
  std::optional<vision::ColorLUT> pending_lut_;
  std::vector<std::pair<motion::MotionFile, bool>> pending_uploads_;
  std::vector<std::string> pending_plays_;
  std::vector<Event> injected_;
  nlohmann::json last_frame_;
};

}  // namespace nop::runtime
