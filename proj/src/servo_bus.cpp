#include "nop/servo_bus.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace nop::bus {

namespace {

constexpr std::uint8_t kHeader = 0xFF;
constexpr std::uint16_t kModelMx106 = 320;
constexpr std::uint16_t kModelMx64 = 310;
constexpr std::uint16_t kModelCm730 = 0x7300;
constexpr std::uint8_t kTemperatureC = 40;

std::vector<std::uint8_t> frame(std::uint8_t id, std::uint8_t instr,
                                const std::vector<std::uint8_t>& params) {
  if (params.size() > kMaxParams) {
    throw EncodeError("packet has " + std::to_string(params.size()) + " params, limit is 250");
  }
  if (id == kHeader) throw EncodeError("id 0xFF is reserved for the frame header");
  std::vector<std::uint8_t> out;
  out.reserve(params.size() + 6);
  out.push_back(kHeader);
  out.push_back(kHeader);
  out.push_back(id);
  out.push_back(static_cast<std::uint8_t>(params.size() + 2));
  out.push_back(instr);
  out.insert(out.end(), params.begin(), params.end());
  out.push_back(checksum(std::span(out).subspan(2)));
  return out;
}

std::uint16_t signed_magnitude(double value, double full_scale) {
  const double mag = std::min(1023.0, std::round(std::abs(value) / full_scale * 1023.0));
  const auto bits = static_cast<std::uint16_t>(mag);
  return value < 0.0 ? static_cast<std::uint16_t>(bits | 0x400) : bits;
}

std::int16_t milli(double v) {
  return static_cast<std::int16_t>(std::clamp(std::round(v * 1000.0), -32768.0, 32767.0));
}

}  // namespace

std::uint8_t checksum(std::span<const std::uint8_t> covered) {
  unsigned sum = 0;
  for (auto b : covered) sum += b;
  return static_cast<std::uint8_t>(~sum & 0xFF);
}

std::vector<std::uint8_t> encode(const BusPacket& packet) {
  return frame(packet.id, static_cast<std::uint8_t>(packet.instruction), packet.params);
}

std::vector<std::uint8_t> encode(const StatusPacket& packet) {
  if (packet.id == kBroadcastId) throw EncodeError("status packet cannot carry the broadcast id");
  return frame(packet.id, packet.error, packet.params);
}

DecodeResult decode(std::span<const std::uint8_t> bytes, Direction dir) {
  const std::size_t n = bytes.size();
  std::size_t i = 0;
  for (;;) {
    while (i + 1 < n && !(bytes[i] == kHeader && bytes[i + 1] == kHeader)) ++i;
    if (i + 1 >= n) {
      // A trailing 0xFF may be the first half of a header.
      const std::size_t keep = (n > 0 && bytes[n - 1] == kHeader) ? 1 : 0;
      return {DecodeStatus::NeedMoreData, n - keep, {}};
    }
    if (i + 2 < n && bytes[i + 2] == kHeader) {
      ++i;  // run of 0xFF: the header is the last two
      continue;
    }
    break;
  }
  if (i + 3 >= n) return {DecodeStatus::NeedMoreData, i, {}};

  const std::uint8_t id = bytes[i + 2];
  const std::uint8_t len = bytes[i + 3];
  if (len < 2) return {DecodeStatus::Malformed, i + 2, {}};
  const std::size_t total = 4 + static_cast<std::size_t>(len);
  if (i + total > n) return {DecodeStatus::NeedMoreData, i, {}};

  const auto covered = bytes.subspan(i + 2, total - 3);
  if (checksum(covered) != bytes[i + total - 1]) {
    return {DecodeStatus::ChecksumMismatch, i + total, {}};
  }

  const std::uint8_t head = bytes[i + 4];
  std::vector<std::uint8_t> params(bytes.begin() + static_cast<std::ptrdiff_t>(i + 5),
                                   bytes.begin() + static_cast<std::ptrdiff_t>(i + total - 1));
  if (dir == Direction::ToDevice) {
    return {DecodeStatus::Ok, i + total,
            BusPacket{id, static_cast<Instruction>(head), std::move(params)}};
  }
  if (id == kBroadcastId) return {DecodeStatus::Malformed, i + total, {}};
  return {DecodeStatus::Ok, i + total, StatusPacket{id, head, std::move(params)}};
}

BusPacket make_ping(std::uint8_t id) { return {id, Instruction::Ping, {}}; }

BusPacket make_read(std::uint8_t id, std::uint8_t addr, std::uint8_t len) {
  return {id, Instruction::Read, {addr, len}};
}

BusPacket make_write(std::uint8_t id, std::uint8_t addr, std::span<const std::uint8_t> data) {
  BusPacket p{id, Instruction::Write, std::vector<std::uint8_t>(data.size() + 1)};
  p.params[0] = addr;
  std::copy(data.begin(), data.end(), p.params.begin() + 1);
  return p;
}

BusPacket make_sync_write(std::uint8_t addr, std::uint8_t len,
                          std::span<const SyncEntry> entries) {
  BusPacket p{kBroadcastId, Instruction::SyncWrite, {addr, len}};
  for (const auto& e : entries) {
    if (e.data.size() != len) throw EncodeError("sync write entry length mismatch");
    p.params.push_back(e.id);
    p.params.insert(p.params.end(), e.data.begin(), e.data.end());
  }
  return p;
}

BusPacket make_bulk_read(std::span<const BulkEntry> entries) {
  BusPacket p{kBroadcastId, Instruction::BulkRead, {0x00}};
  for (const auto& e : entries) {
    p.params.push_back(e.len);
    p.params.push_back(e.id);
    p.params.push_back(e.addr);
  }
  return p;
}

std::array<std::uint8_t, 2> le16(std::uint16_t v) {
  return {static_cast<std::uint8_t>(v & 0xFF), static_cast<std::uint8_t>(v >> 8)};
}

std::optional<std::vector<std::uint8_t>> RegisterFile::read(std::size_t addr,
                                                            std::size_t len) const {
  if (!in_range(addr, len)) return std::nullopt;
  return std::vector<std::uint8_t>(bytes_.begin() + static_cast<std::ptrdiff_t>(addr),
                                   bytes_.begin() + static_cast<std::ptrdiff_t>(addr + len));
}

bool RegisterFile::write(std::size_t addr, std::span<const std::uint8_t> data) {
  if (!in_range(addr, data.size())) return false;
  std::copy(data.begin(), data.end(), bytes_.begin() + static_cast<std::ptrdiff_t>(addr));
  return true;
}

std::uint16_t RegisterFile::u16(std::size_t addr) const {
  return static_cast<std::uint16_t>(bytes_.at(addr) | (bytes_.at(addr + 1) << 8));
}

void RegisterFile::set_u16(std::size_t addr, std::uint16_t v) {
  const auto b = le16(v);
  bytes_.at(addr) = b[0];
  bytes_.at(addr + 1) = b[1];
}

PacketLog::PacketLog(const std::string& path) : out_(path, std::ios::binary | std::ios::trunc) {
  if (!out_) throw std::runtime_error("cannot open packet log " + path);
}

void PacketLog::record(std::int64_t time_us, std::span<const std::uint8_t> frame) {
  std::array<std::uint8_t, 10> head{};
  auto t = static_cast<std::uint64_t>(time_us);
  for (int k = 0; k < 8; ++k) head[static_cast<std::size_t>(k)] = static_cast<std::uint8_t>(t >> (8 * k));
  const auto len = le16(static_cast<std::uint16_t>(frame.size()));
  head[8] = len[0];
  head[9] = len[1];
  out_.write(reinterpret_cast<const char*>(head.data()), head.size());
  out_.write(reinterpret_cast<const char*>(frame.data()), static_cast<std::streamsize>(frame.size()));
}

std::vector<PacketLog::Entry> PacketLog::read(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open packet log " + path);
  std::vector<Entry> entries;
  std::array<std::uint8_t, 10> head{};
  while (in.read(reinterpret_cast<char*>(head.data()), head.size())) {
    std::uint64_t t = 0;
    for (int k = 7; k >= 0; --k) t = (t << 8) | head[static_cast<std::size_t>(k)];
    const std::size_t len = head[8] | (head[9] << 8);
    Entry e{static_cast<std::int64_t>(t), std::vector<std::uint8_t>(len)};
    if (!in.read(reinterpret_cast<char*>(e.frame.data()), static_cast<std::streamsize>(len))) {
      throw std::runtime_error("truncated packet log " + path);
    }
    entries.push_back(std::move(e));
  }
  return entries;
}

SimulatedBus::SimulatedBus(BusConfig config) : config_(std::move(config)), rng_(config_.seed) {
  for (std::size_t j = 0; j < robot::kNumJoints; ++j) {
    auto& r = servos_[j].regs;
    r.set_u16(reg::ModelNumber, j < 12 ? kModelMx106 : kModelMx64);
    r.set_u8(reg::Id, static_cast<std::uint8_t>(j + 1));
    r.set_u8(reg::TorqueEnable, 1);
    r.set_u16(reg::GoalPosition, robot::kCenterTick);
    refresh_present(j);
  }
  imu_.set_u16(reg::ModelNumber, kModelCm730);
  imu_.set_u8(reg::Id, kImuBoardId);
  set_imu({0.0, 0.0, 0.0}, {0.0, 0.0, actuator::kGravity});
  set_supply_voltage(16.8);
}

RegisterFile* SimulatedBus::device(std::uint8_t id) {
  if (id >= 1 && id <= robot::kNumJoints) return &servos_[id - 1u].regs;
  if (id == kImuBoardId) return &imu_;
  return nullptr;
}

const RegisterFile& SimulatedBus::registers(std::uint8_t id) const {
  if (id >= 1 && id <= robot::kNumJoints) return servos_[id - 1u].regs;
  if (id == kImuBoardId) return imu_;
  throw std::out_of_range("no device with id " + std::to_string(id));
}

std::vector<std::uint8_t> SimulatedBus::wire(std::vector<std::uint8_t> bytes) {
  if (config_.corrupt_rate > 0.0) {
    std::uniform_real_distribution<double> coin(0.0, 1.0);
    std::uniform_int_distribution<int> flip(1, 255);
    for (auto& b : bytes) {
      if (coin(rng_) < config_.corrupt_rate) b = static_cast<std::uint8_t>(b ^ flip(rng_));
    }
  }
  if (log_ != nullptr) log_->record(time_us_, bytes);
  return bytes;
}

std::optional<StatusPacket> SimulatedBus::respond(std::uint8_t id, const BusPacket& p) {
  RegisterFile* dev = device(id);
  if (dev == nullptr) return std::nullopt;
  StatusPacket status{id, 0, {}};
  if (id != kImuBoardId) {
    const auto& s = servos_[id - 1u].state;
    if (std::abs(s.motor_torque) >= config_.servo.torque_max) status.error |= kErrOverload;
  }
  switch (p.instruction) {
    case Instruction::Ping:
      break;
    case Instruction::Read: {
      if (p.params.size() != 2) {
        status.error |= kErrInstruction;
        break;
      }
      auto data = dev->read(p.params[0], p.params[1]);
      if (data) status.params = std::move(*data);
      else status.error |= kErrRange;
      break;
    }
    case Instruction::Write: {
      if (p.params.empty()) {
        status.error |= kErrInstruction;
        break;
      }
      if (!dev->write(p.params[0], std::span(p.params).subspan(1))) status.error |= kErrRange;
      break;
    }
    default:
      status.error |= kErrInstruction;
  }
  return status;
}

Reply SimulatedBus::transact(const BusPacket& packet) {
  Reply reply;
  std::vector<std::uint8_t> addressed;
  if (packet.instruction == Instruction::BulkRead) {
    for (std::size_t k = 1; k + 2 < packet.params.size(); k += 3) {
      addressed.push_back(packet.params[k + 1]);
    }
  } else if (packet.id != kBroadcastId && packet.instruction != Instruction::SyncWrite) {
    addressed.push_back(packet.id);
  }

  const auto received = wire(encode(packet));
  const DecodeResult in = decode(received, Direction::ToDevice);
  if (!in.ok()) {
    ++dropped_;
    reply.timeouts = addressed;
    return reply;
  }
  const auto& p = std::get<BusPacket>(in.packet);

  auto answer = [&](const StatusPacket& status) {
    const auto back = wire(encode(status));
    const DecodeResult out = decode(back, Direction::FromDevice);
    if (out.ok()) {
      reply.statuses.push_back(std::get<StatusPacket>(out.packet));
    } else {
      ++dropped_;
      reply.timeouts.push_back(status.id);
    }
  };

  switch (p.instruction) {
    case Instruction::SyncWrite: {
      if (p.params.size() < 2) break;
      const std::size_t addr = p.params[0];
      const std::size_t len = p.params[1];
      const std::size_t stride = len + 1;
      if ((p.params.size() - 2) % stride != 0 || !RegisterFile::in_range(addr, len)) break;
      // Parse fully before touching registers so all servos change at one instant.
      std::vector<std::pair<RegisterFile*, std::span<const std::uint8_t>>> writes;
      for (std::size_t k = 2; k < p.params.size(); k += stride) {
        if (RegisterFile* dev = device(p.params[k])) {
          writes.emplace_back(dev, std::span(p.params).subspan(k + 1, len));
        }
      }
      for (auto& [dev, data] : writes) dev->write(addr, data);
      break;
    }
    case Instruction::BulkRead: {
      for (std::size_t k = 1; k + 2 < p.params.size(); k += 3) {
        const std::uint8_t len = p.params[k];
        const std::uint8_t id = p.params[k + 1];
        const std::uint8_t addr = p.params[k + 2];
        if (device(id) == nullptr) {
          reply.timeouts.push_back(id);
          continue;
        }
        answer(*respond(id, BusPacket{id, Instruction::Read, {addr, len}}));
      }
      break;
    }
    default: {
      if (p.id == kBroadcastId) {
        if (p.instruction == Instruction::Write && !p.params.empty()) {
          const auto data = std::span(p.params).subspan(1);
          for (auto& s : servos_) s.regs.write(p.params[0], data);
          imu_.write(p.params[0], data);
        }
        break;
      }
      if (auto status = respond(p.id, p)) answer(*status);
      else reply.timeouts.push_back(p.id);
    }
  }
  return reply;
}

void SimulatedBus::step(double dt, const std::array<double, robot::kNumJoints>& external_torque) {
  for (std::size_t j = 0; j < robot::kNumJoints; ++j) {
    auto& s = servos_[j];
    const int goal = std::min<int>(s.regs.u16(reg::GoalPosition), robot::kMaxTick);
    const bool enabled = s.regs.u8(reg::TorqueEnable) != 0;
    s.state = actuator::step_servo(s.state, goal, external_torque[j], dt, config_.servo,
                                   {config_.limits.lo[j], config_.limits.hi[j]}, enabled);
    refresh_present(j);
  }
}

void SimulatedBus::set_servo_state(std::size_t joint, const actuator::ServoState& s) {
  servos_.at(joint).state = s;
  refresh_present(joint);
}

void SimulatedBus::refresh_present(std::size_t joint) {
  auto& s = servos_[joint];
  s.regs.set_u16(reg::PresentPosition, static_cast<std::uint16_t>(robot::rad_to_ticks(s.state.q)));
  // MX speed unit is 0.114 rpm.
  const double rpm = s.state.qdot * 60.0 / (2.0 * std::numbers::pi);
  s.regs.set_u16(reg::PresentSpeed, signed_magnitude(rpm, 0.114 * 1023.0));
  s.regs.set_u16(reg::PresentLoad, signed_magnitude(s.state.motor_torque, config_.servo.torque_max));
  s.regs.set_u8(reg::PresentVoltage, imu_.u8(reg::BoardVoltage));
  s.regs.set_u8(reg::PresentTemperature, kTemperatureC);
}

void SimulatedBus::set_imu(const std::array<double, 3>& gyro, const std::array<double, 3>& accel) {
  for (std::size_t k = 0; k < 3; ++k) {
    imu_.set_s16(reg::GyroXyz + 2 * k, milli(gyro[k]));
    imu_.set_s16(reg::AccelXyz + 2 * k, milli(accel[k]));
  }
}

void SimulatedBus::set_supply_voltage(double volts) {
  const auto v = static_cast<std::uint8_t>(std::clamp(std::round(volts * 10.0), 0.0, 255.0));
  imu_.set_u8(reg::BoardVoltage, v);
  for (auto& s : servos_) s.regs.set_u8(reg::PresentVoltage, v);
}

}  // namespace nop::bus
