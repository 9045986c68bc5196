#include "nop/runtime/system.hpp"

#include <Eigen/Geometry>
#include <algorithm>
#include <cmath>

#include "nop/config/codec.hpp"
#include "nop/config/service.hpp"

namespace nop::runtime {

using nlohmann::json;
using robot::Joint;
using robot::kNumJoints;

namespace {

std::string_view source_name(TargetSource s) {
  switch (s) {
    case TargetSource::Gait: return "gait";
    case TargetSource::Motion: return "motion";
    case TargetSource::None: break;
  }
  return "none";
}

json event_name(const Event& e) {
  return std::visit(
      [](const auto& ev) -> json {
        using T = std::decay_t<decltype(ev)>;
        if constexpr (std::is_same_v<T, Push>) return {{"type", "push"}, {"pitch", ev.pitch}, {"roll", ev.roll}};
        if constexpr (std::is_same_v<T, Teleport>)
          return {{"type", "teleport"}, {"x", ev.pose.x}, {"y", ev.pose.y}, {"theta", ev.pose.theta}};
        if constexpr (std::is_same_v<T, SetBall>) return {{"type", "set_ball"}, {"x", ev.x}, {"y", ev.y}};
        if constexpr (std::is_same_v<T, RemoveBall>) return {{"type", "remove_ball"}};
        if constexpr (std::is_same_v<T, AddObstacle>) return {{"type", "add_obstacle"}, {"x", ev.x}, {"y", ev.y}};
        if constexpr (std::is_same_v<T, ResetWorld>) return {{"type", "reset"}};
        if constexpr (std::is_same_v<T, SetParam>) return {{"type", "set"}, {"path", ev.path}, {"value", ev.value}};
        return {};
      },
      e);
}

std::array<double, 3> gravity_reading(double roll, double pitch) {
  const Eigen::Matrix3d r = (Eigen::AngleAxisd(pitch, Eigen::Vector3d::UnitY()) *
                             Eigen::AngleAxisd(roll, Eigen::Vector3d::UnitX()))
                                .toRotationMatrix();
  const Eigen::Vector3d f = r.transpose() * Eigen::Vector3d(0.0, 0.0, actuator::kGravity);
  return {f.x(), f.y(), f.z()};
}

}  // namespace

System::System(config::ParamStore& store, RuntimeOptions options)
    : store_(store),
      options_(std::move(options)),
      clock_(options_.clock),
      rng_(options_.seed),
      world_(WorldParams{}, options_.start_pose, options_.ball),
      vision_(options_.threaded_vision) {
  declare_runtime_params(store_);
  params_ = read_runtime_params(store_);
  config_sub_ = store_.subscribe("/");

  bus::BusConfig bc;
  bc.servo = params_.servo;
  bc.limits = params_.robot.limits;
  bc.corrupt_rate = params_.corrupt_rate;
  bc.seed = options_.seed * 2 + 1;
  bus_ = std::make_unique<bus::SimulatedBus>(bc);
  if (!options_.packet_log_path.empty()) {
    packet_log_ = std::make_unique<bus::PacketLog>(options_.packet_log_path);
    bus_->attach_log(packet_log_.get());
  }

  world_.set_params(params_.world);
  world_.set_constants(params_.robot);
  fall_.set_params(params_.fall);
  behavior_.set_params(params_.behavior);

  // Start standing with the goal registers already holding the stance.
  const auto stand = gait::stand_pose(params_.gait);
  for (std::size_t j = 0; j < kNumJoints; ++j) bus_->set_servo_state(j, {stand[j], 0.0, 0.0});
  targets_ = measured_ = stand;
  gait_state_.last = stand;
  gait_state_.primed = true;
  std::vector<bus::SyncEntry> entries;
  for (std::size_t j = 0; j < kNumJoints; ++j) {
    const auto t = bus::le16(static_cast<std::uint16_t>(robot::rad_to_ticks(stand[j])));
    entries.push_back({robot::bus_id(static_cast<Joint>(j)), {t[0], t[1]}});
  }
  bus_->transact(bus::make_sync_write(bus::reg::GoalPosition, 2, entries));

  renderer_ = std::make_unique<Renderer>(params_.lens);
  lut_ = std::make_shared<const vision::ColorLUT>(
      vision::default_lut(vision::ColorClass::Goal, goal_color(params_.goal_hue)));
  for (const auto& [name, m] : motion::standard_motions()) motions_[name] = m;

  if (!options_.telemetry_path.empty()) {
    telemetry_out_.open(options_.telemetry_path, std::ios::binary | std::ios::trunc);
    if (!telemetry_out_) throw std::runtime_error("cannot write telemetry to " + options_.telemetry_path);
  }
}

System::~System() { store_.unsubscribe(config_sub_); }

void System::run_for(double seconds) {
  const auto n = static_cast<std::uint64_t>(std::llround(seconds / kCycleS));
  for (std::uint64_t k = 0; k < n; ++k) run_cycle();
}

void System::schedule(std::vector<TimedEvent> events) {
  scenario_.insert(scenario_.end(), std::make_move_iterator(events.begin()), std::make_move_iterator(events.end()));
  std::stable_sort(scenario_.begin() + static_cast<std::ptrdiff_t>(scenario_next_), scenario_.end(),
                   [](const auto& a, const auto& b) { return a.at_s < b.at_s; });
}

void System::inject(Event e) {
  std::lock_guard lock(shared_mu_);
  injected_.push_back(std::move(e));
}

void System::upload_lut(vision::ColorLUT lut) {
  std::lock_guard lock(shared_mu_);
  pending_lut_ = std::move(lut);
}

void System::upload_motion(motion::MotionFile m, bool play) {
  std::lock_guard lock(shared_mu_);
  pending_uploads_.emplace_back(std::move(m), play);
}

void System::play_motion(const std::string& name) {
  std::lock_guard lock(shared_mu_);
  if (!motions_.count(name)) throw std::invalid_argument("no motion named '" + name + "'");
  pending_plays_.push_back(name);
}

std::shared_ptr<const vision::YuyvImage> System::latest_frame() const {
  std::lock_guard lock(shared_mu_);
  return latest_frame_;
}

std::shared_ptr<const vision::ColorLUT> System::lut() const {
  std::lock_guard lock(shared_mu_);
  return lut_;
}

std::optional<motion::MotionFile> System::motion_by_name(const std::string& name) const {
  std::lock_guard lock(shared_mu_);
  if (auto it = motions_.find(name); it != motions_.end()) return it->second;
  return std::nullopt;
}

void System::emit(const json& msg) {
  if (sink_) sink_(msg);
}

void System::apply_event(const Event& e) {
  pending_events_.push_back(event_name(e));
  if (const auto* sp = std::get_if<SetParam>(&e)) {
    try {
      store_.set_json(sp->path, sp->value);
    } catch (const std::exception& ex) {
      pending_events_.push_back({{"type", "error"}, {"message", ex.what()}});
    }
    return;
  }
  world_.apply(e);
  if (std::holds_alternative<ResetWorld>(e)) {
    fall_.reset();
    attitude_ = {};
    belief_ = {};
    player_.stop();
  }
}

void System::apply_due_events() {
  std::vector<Event> injected;
  {
    std::lock_guard lock(shared_mu_);
    injected.swap(injected_);
  }
  for (const auto& e : injected) apply_event(e);
  const double now = clock_.now_s();
  while (scenario_next_ < scenario_.size() && scenario_[scenario_next_].at_s <= now + 1e-9) {
    apply_event(scenario_[scenario_next_++].event);
  }
}

void System::read_sensors() {
  std::vector<bus::BulkEntry> entries;
  for (std::size_t j = 0; j < kNumJoints; ++j) {
    entries.push_back({robot::bus_id(static_cast<Joint>(j)), bus::reg::PresentPosition, 2});
  }
  entries.push_back({bus::kImuBoardId, bus::reg::GyroXyz, 13});
  const bus::Reply reply = bus_->transact(bus::make_bulk_read(entries));
  bus_warnings_ += reply.timeouts.size();

  estimation::ImuSample imu;
  bool have_imu = false;
  for (const auto& st : reply.statuses) {
    if (st.id >= 1 && st.id <= kNumJoints && st.params.size() == 2) {
      const int ticks = st.params[0] | (st.params[1] << 8);
      if (ticks <= robot::kMaxTick) measured_[st.id - 1u] = robot::ticks_to_rad(ticks);
    } else if (st.id == bus::kImuBoardId && st.params.size() == 13) {
      for (std::size_t k = 0; k < 3; ++k) {
        const auto g = static_cast<std::int16_t>(st.params[2 * k] | (st.params[2 * k + 1] << 8));
        const auto a = static_cast<std::int16_t>(st.params[6 + 2 * k] | (st.params[7 + 2 * k] << 8));
        imu.gyro[k] = g / 1000.0;
        imu.accel[k] = a / 1000.0;
      }
      have_imu = true;
    }
  }
  // A missing IMU reply keeps the last estimate (stale values, counted above).
  if (have_imu) attitude_ = estimation::update_attitude(attitude_, imu, kCycleS, params_.filter);
  fall_.update(attitude_, kCycleS);
}

behavior::CameraPose System::camera_pose_estimate() const {
  behavior::CameraPose p;
  p.height_m = robot::camera_height(params_.robot, measured_);
  p.neck_yaw = measured_[Joint::NeckYaw];
  p.neck_pitch = measured_[Joint::NeckPitch];
  p.roll = attitude_.roll;
  p.pitch = attitude_.pitch;
  return p;
}

CameraPlacement System::camera_placement_truth() const {
  robot::JointVector q;
  for (std::size_t j = 0; j < kNumJoints; ++j) q[j] = bus_->servo_state(j).q;
  const auto& w = world_.state();
  return place_camera(w.robot, robot::camera_height(params_.robot, q), w.roll, w.pitch, q[Joint::NeckYaw],
                      q[Joint::NeckPitch]);
}

void System::vision_step() {
  std::optional<VisionResult> result;
  const bool sync = clock_.mode() == ClockMode::Virtual;
  if (!sync) result = vision_.take(false);

  RenderPalette palette;
  palette.goal = goal_color(params_.goal_hue);
  auto frame = std::make_shared<const vision::YuyvImage>(
      renderer_->render(world_.state(), params_.world.field, camera_placement_truth(), palette));
  std::shared_ptr<const vision::ColorLUT> lut;
  {
    std::lock_guard lock(shared_mu_);
    latest_frame_ = frame;
    lut = lut_;
  }
  VisionJob job{++vision_frames_, frame, lut, params_.vision, params_.lens, camera_pose_estimate()};
  vision_.submit(std::move(job));
  // Virtual time hands the result over in the same cycle, which keeps runs reproducible.
  if (sync) result = vision_.take(true);

  if (result) {
    detections_ = *result->detections;
    belief_ = behavior::update_belief(belief_, &*detections_, result->pose, kCycleS, params_.behavior);
  } else {
    belief_ = behavior::update_belief(belief_, nullptr, {}, kCycleS, params_.behavior);
  }
}

void System::produce_targets(const behavior::Decision& d) {
  getup_done_ = false;
  relax_ = false;
  twist_ = {};
  bool walking = false;

  if (std::holds_alternative<behavior::RelaxAction>(d.action)) {
    player_.stop();
    relax_ = true;
    source_ = TargetSource::None;
    targets_ = measured_;
    return;
  }
  if (const auto* pm = std::get_if<behavior::PlayMotion>(&d.action)) {
    if (!player_.active() || player_.name() != pm->name) {
      if (auto it = motions_.find(pm->name); it != motions_.end()) player_.start(it->second, measured_);
    }
  }

  if (player_.active()) {
    const bool getup = player_.name().rfind("getup", 0) == 0;
    targets_ = player_.step(kCycleS);
    if (getup && !player_.active()) getup_done_ = true;
    source_ = TargetSource::Motion;
    gait_state_.last = targets_;
    gait_state_.primed = true;
  } else if (const auto* cmd = std::get_if<gait::GaitCommand>(&d.action)) {
    const auto out = gait::gait_step(gait_state_, *cmd, params_.gait, attitude_, kCycleS, params_.robot.limits);
    targets_ = out.targets;
    twist_ = out.twist;
    walking = cmd->enabled;
    const auto& lim = params_.robot.limits;
    targets_[Joint::NeckYaw] = std::clamp(d.head.yaw, lim.lo[robot::index(Joint::NeckYaw)],
                                          lim.hi[robot::index(Joint::NeckYaw)]);
    targets_[Joint::NeckPitch] = std::clamp(d.head.pitch, lim.lo[robot::index(Joint::NeckPitch)],
                                            lim.hi[robot::index(Joint::NeckPitch)]);
    source_ = TargetSource::Gait;
  } else {
    source_ = TargetSource::None;
  }
  if (!walking) twist_ = {};
}

void System::write_goals() {
  if (relax_) {
    const std::uint8_t off = 0;
    bus_->transact(bus::make_write(bus::kBroadcastId, bus::reg::TorqueEnable, std::span(&off, 1)));
    torque_on_ = false;
    have_prev_targets_ = false;
    return;
  }
  if (source_ == TargetSource::None) return;
  if (!torque_on_) {
    const std::uint8_t on = 1;
    bus_->transact(bus::make_write(bus::kBroadcastId, bus::reg::TorqueEnable, std::span(&on, 1)));
    torque_on_ = true;
  }
  const actuator::FeedForwardModel ff{params_.ff_k_v, params_.ff_k_c, params_.ff_k_g, {}};
  const auto& lim = params_.robot.limits;
  std::vector<bus::SyncEntry> entries;
  entries.reserve(kNumJoints);
  for (std::size_t j = 0; j < kNumJoints; ++j) {
    double cmd = targets_[j];
    if (params_.ff_enabled) {
      const double qd = have_prev_targets_ ? (targets_[j] - prev_targets_[j]) / kCycleS : 0.0;
      const double tau_g = actuator::gravity_torque(targets_, static_cast<Joint>(j), params_.robot);
      cmd += actuator::feedforward(qd, tau_g, ff, -1);
    }
    cmd = std::clamp(cmd, lim.lo[j], lim.hi[j]);
    const auto t = bus::le16(static_cast<std::uint16_t>(robot::rad_to_ticks(cmd)));
    entries.push_back({robot::bus_id(static_cast<Joint>(j)), {t[0], t[1]}});
  }
  bus_->transact(bus::make_sync_write(bus::reg::GoalPosition, 2, entries));
  prev_targets_ = targets_;
  have_prev_targets_ = true;
}

void System::rebuild_vision_assets(bool lens_changed, bool hue_changed) {
  if (lens_changed) renderer_ = std::make_unique<Renderer>(params_.lens);
  if (hue_changed && !lut_custom_) {
    auto lut = std::make_shared<const vision::ColorLUT>(
        vision::default_lut(vision::ColorClass::Goal, goal_color(params_.goal_hue)));
    std::lock_guard lock(shared_mu_);
    lut_ = std::move(lut);
  }
}

void System::apply_config() {
  auto changes = config_sub_->queue().drain();
  const bool lost = config_sub_->queue().take_lost();
  if (!changes.empty() || lost) {
    const RuntimeParams np = read_runtime_params(store_);
    const bool lens_changed = np.lens.f != params_.lens.f || np.lens.cx != params_.lens.cx ||
                              np.lens.cy != params_.lens.cy || np.lens.k1 != params_.lens.k1 ||
                              np.lens.k2 != params_.lens.k2;
    const bool hue_changed = np.goal_hue != params_.goal_hue;
    params_ = np;
    bus_->set_servo_params(params_.servo);
    bus_->set_corrupt_rate(params_.corrupt_rate);
    fall_.set_params(params_.fall);
    behavior_.set_params(params_.behavior);
    world_.set_params(params_.world);
    world_.set_constants(params_.robot);
    rebuild_vision_assets(lens_changed, hue_changed);
  }

  std::optional<vision::ColorLUT> lut;
  std::vector<std::pair<motion::MotionFile, bool>> uploads;
  std::vector<std::string> plays;
  {
    std::lock_guard lock(shared_mu_);
    lut.swap(pending_lut_);
    uploads.swap(pending_uploads_);
    plays.swap(pending_plays_);
    for (const auto& [m, play] : uploads) motions_[m.name] = m;
  }
  if (lut) {
    auto shared = std::make_shared<const vision::ColorLUT>(std::move(*lut));
    std::lock_guard lock(shared_mu_);
    lut_ = std::move(shared);
    lut_custom_ = true;
  }
  for (const auto& [m, play] : uploads) {
    if (play) player_.start(m, measured_);
  }
  for (const auto& name : plays) {
    if (auto it = motions_.find(name); it != motions_.end()) player_.start(it->second, measured_);
  }
}

void System::step_world() {
  WorldInput in;
  in.vx = twist_.vx;
  in.vy = twist_.vy;
  in.vyaw = twist_.vyaw;
  in.walking = source_ == TargetSource::Gait && (twist_.vx != 0.0 || twist_.vy != 0.0 || twist_.vyaw != 0.0);
  for (std::size_t j = 0; j < kNumJoints; ++j) in.joints[j] = bus_->servo_state(j).q;
  if (player_.active() && player_.name().rfind("getup", 0) == 0) {
    if (const auto m = motions_.find(player_.name()); m != motions_.end()) {
      in.getup_progress = player_.elapsed() / std::max(1e-9, m->second.total_duration());
    }
  }
  in.getup_done = getup_done_;

  if (world_.step(kCycleS, in)) {
    const json ev{{"event", "battery_low"}, {"battery_v", world_.state().battery_v}, {"cycle", cycle_}};
    pending_events_.push_back({{"type", "battery_low"}, {"battery_v", world_.state().battery_v}});
    emit(ev);
  }
  const auto& w = world_.state();
  bus_->set_supply_voltage(w.battery_v);

  auto accel = gravity_reading(w.roll, w.pitch);
  std::array<double, 3> gyro{w.roll_rate, w.pitch_rate, w.yaw_rate};
  if (params_.gyro_noise > 0.0) {
    std::normal_distribution<double> n(0.0, params_.gyro_noise);
    for (auto& g : gyro) g += n(rng_);
  }
  if (params_.accel_noise > 0.0) {
    std::normal_distribution<double> n(0.0, params_.accel_noise);
    for (auto& a : accel) a += n(rng_);
  }
  bus_->set_imu(gyro, accel);

  if (getup_done_) {
    // Standing again: restart fall detection and re-level the estimate from gravity.
    fall_.reset();
    const auto level = estimation::accel_angles(gravity_reading(0.0, 0.0));
    attitude_.roll = level[0];
    attitude_.pitch = level[1];
  }

  std::array<double, kNumJoints> tau{};
  if (world_.upright()) {
    for (std::size_t j = 0; j < kNumJoints; ++j) {
      tau[j] = actuator::gravity_torque(in.joints, static_cast<Joint>(j), params_.robot);
    }
  }
  bus_->step(kCycleS, tau);
}

json System::telemetry_frame() const {
  const auto& w = world_.state();
  json det = nullptr;
  if (detections_) {
    int t = 0, x = 0;
    for (const auto& c : detections_->crossings) (c.kind == vision::CrossingKind::T ? t : x)++;
    json ball = nullptr;
    if (detections_->ball) {
      ball = {{"u", detections_->ball->centroid.u},
              {"v", detections_->ball->centroid.v},
              {"azimuth", detections_->ball->bearing.azimuth},
              {"elevation", detections_->ball->bearing.elevation}};
    }
    det = {{"ball", ball},
           {"goal_posts", detections_->goal_posts.size()},
           {"obstacles", detections_->obstacles.size()},
           {"line_segments", detections_->line_segments.size()},
           {"crossings_t", t},
           {"crossings_x", x}};
  }
  json belief_ball = nullptr;
  if (belief_.ball) {
    belief_ball = {{"bearing", belief_.ball->bearing}, {"age_s", belief_.ball->age_s}};
    belief_ball["distance"] = belief_.ball->distance ? json(*belief_.ball->distance) : json(nullptr);
  }
  return {
      {"cycle", cycle_},
      {"t_us", clock_.now_us()},
      {"targets", targets_.values},
      {"positions", measured_.values},
      {"attitude", {{"roll", attitude_.roll}, {"pitch", attitude_.pitch}, {"yaw", attitude_.yaw}}},
      {"fall", estimation::to_string(fall_.state())},
      {"behavior", behavior::to_string(behavior_.state())},
      {"source", source_name(source_)},
      {"motion", player_.active() ? player_.name() : std::string()},
      {"battery_v", w.battery_v},
      {"pose", {{"x", w.robot.x}, {"y", w.robot.y}, {"theta", w.robot.theta}}},
      {"ball", w.ball.present ? json{{"x", w.ball.x}, {"y", w.ball.y}} : json(nullptr)},
      {"belief_ball", belief_ball},
      {"detections", det},
      {"vision_frame", vision_frames_},
      {"bus_warnings", bus_warnings_},
  };
}

void System::run_cycle() {
  // (1) time and injected events
  clock_.advance();
  ++cycle_;
  bus_->set_time_us(clock_.now_us());
  apply_due_events();

  // (2, 3) sensors and estimation
  read_sensors();

  // (4) camera frame to vision every 5th cycle; belief ages every cycle
  if (cycle_ % kVisionEvery == 0) {
    vision_step();
  } else {
    belief_ = behavior::update_belief(belief_, nullptr, {}, kCycleS, params_.behavior);
  }
  belief_.attitude = attitude_;
  belief_.fall = fall_.state();
  belief_.active_motion = player_.active() ? player_.name() : std::string();

  // (5) behavior, (6) targets, (7, 8) feed-forward and bus writes
  const auto decision = behavior_.tick(belief_, kCycleS);
  produce_targets(decision);
  write_goals();

  // (9) config, (10) world
  apply_config();
  step_world();

  // (11) telemetry
  if (cycle_ % kTelemetryEvery == 0) {
    json frame = telemetry_frame();
    frame["events"] = std::exchange(pending_events_, json::array());
    ++telemetry_frames_;
    if (telemetry_out_.is_open()) telemetry_out_ << frame.dump() << '\n';
    frame["event"] = "telemetry";
    {
      std::lock_guard lock(shared_mu_);
      last_frame_ = frame;
    }
    emit(frame);
  }
}

void System::register_ops(config::ConfigService& service) {
  service.add_op("lut_upload", [this](const json& req) -> json {
    const auto bytes = config::base64_decode(req.at("data").get<std::string>());
    if (!bytes) throw std::invalid_argument("data is not valid base64");
    upload_lut(vision::ColorLUT::from_bytes(*bytes));
    return {{"entries", vision::kLutSize}};
  });
  service.add_op("lut_download", [this](const json&) -> json {
    return {{"data", config::base64_encode(lut()->to_bytes())}};
  });
  service.add_op("motion_upload", [this](const json& req) -> json {
    auto m = motion::load_motion(req.at("text").get<std::string>(), robot::RobotConstants::default_limits());
    const json info{{"name", m.name}, {"frames", m.keyframes.size()}, {"duration_s", m.total_duration()}};
    upload_motion(std::move(m), req.value("play", false));
    return info;
  });
  service.add_op("motion_play", [this](const json& req) -> json {
    play_motion(req.at("name").get<std::string>());
    return json::object();
  });
  service.add_op("motion_download", [this](const json& req) -> json {
    const auto m = motion_by_name(req.at("name").get<std::string>());
    if (!m) throw std::invalid_argument("no such motion");
    return {{"name", m->name}, {"text", motion::serialize(*m)}};
  });
  service.add_op("event", [this](const json& req) -> json {
    inject(parse_event(req.at("event")));
    return json::object();
  });
  service.add_op("status", [this](const json&) -> json {
    std::lock_guard lock(shared_mu_);
    return {{"frame", last_frame_}};
  });
}

}  // namespace nop::runtime
