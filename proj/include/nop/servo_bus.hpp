#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "nop/actuator_control.hpp"
#include "nop/robot_model.hpp"

namespace nop::bus {

enum class Instruction : std::uint8_t {
  Ping = 0x01,
  Read = 0x02,
  Write = 0x03,
  SyncWrite = 0x83,
  BulkRead = 0x92,
};

inline constexpr std::uint8_t kImuBoardId = 200;
inline constexpr std::uint8_t kBroadcastId = 254;
inline constexpr std::size_t kMaxParams = 250;

// Status error flags.
inline constexpr std::uint8_t kErrInputVoltage = 1u << 0;
inline constexpr std::uint8_t kErrOverheat = 1u << 2;
inline constexpr std::uint8_t kErrRange = 1u << 3;
inline constexpr std::uint8_t kErrChecksum = 1u << 4;
inline constexpr std::uint8_t kErrOverload = 1u << 5;
inline constexpr std::uint8_t kErrInstruction = 1u << 6;

struct BusPacket {
  std::uint8_t id = 0;
  Instruction instruction = Instruction::Ping;
  std::vector<std::uint8_t> params;

  bool operator==(const BusPacket&) const = default;
};

struct StatusPacket {
  std::uint8_t id = 0;
  std::uint8_t error = 0;
  std::vector<std::uint8_t> params;

  bool operator==(const StatusPacket&) const = default;
};

class EncodeError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// ~(sum of bytes) & 0xFF over id, length, instruction/error and params.
std::uint8_t checksum(std::span<const std::uint8_t> covered);

/// Wire form: FF FF id len instr params... chk, len = params + 2.
std::vector<std::uint8_t> encode(const BusPacket& packet);
std::vector<std::uint8_t> encode(const StatusPacket& packet);

enum class DecodeStatus { Ok, NeedMoreData, ChecksumMismatch, Malformed };

/// Status packets share the instruction framing, so the caller says which side it listens on.
enum class Direction { ToDevice, FromDevice };

struct DecodeResult {
  DecodeStatus status = DecodeStatus::NeedMoreData;
  std::size_t consumed = 0;
  std::variant<std::monostate, BusPacket, StatusPacket> packet;

  bool ok() const { return status == DecodeStatus::Ok; }
};

/// Scans for FF FF, skipping garbage, and decodes the first frame. On NeedMoreData only the
/// skipped garbage is consumed; on ChecksumMismatch the whole bad frame is consumed.
DecodeResult decode(std::span<const std::uint8_t> bytes, Direction dir = Direction::ToDevice);

// Packet builders.
BusPacket make_ping(std::uint8_t id);
BusPacket make_read(std::uint8_t id, std::uint8_t addr, std::uint8_t len);
BusPacket make_write(std::uint8_t id, std::uint8_t addr, std::span<const std::uint8_t> data);

struct SyncEntry {
  std::uint8_t id;
  std::vector<std::uint8_t> data;
};
BusPacket make_sync_write(std::uint8_t addr, std::uint8_t len, std::span<const SyncEntry> entries);

struct BulkEntry {
  std::uint8_t id;
  std::uint8_t addr;
  std::uint8_t len;
};
BusPacket make_bulk_read(std::span<const BulkEntry> entries);

namespace reg {
inline constexpr std::size_t kSize = 74;
inline constexpr std::uint8_t ModelNumber = 0;
inline constexpr std::uint8_t Id = 3;
inline constexpr std::uint8_t TorqueEnable = 24;
inline constexpr std::uint8_t GoalPosition = 30;
inline constexpr std::uint8_t MovingSpeed = 32;
inline constexpr std::uint8_t PresentPosition = 36;
inline constexpr std::uint8_t PresentSpeed = 38;
inline constexpr std::uint8_t PresentLoad = 40;
inline constexpr std::uint8_t PresentVoltage = 42;
inline constexpr std::uint8_t PresentTemperature = 43;
// IMU board (id 200)
inline constexpr std::uint8_t GyroXyz = 38;
inline constexpr std::uint8_t AccelXyz = 44;
inline constexpr std::uint8_t BoardVoltage = 50;
}  // namespace reg

/// 74-byte control table, little-endian multi-byte registers.
class RegisterFile {
public:
  std::optional<std::vector<std::uint8_t>> read(std::size_t addr, std::size_t len) const;
  bool write(std::size_t addr, std::span<const std::uint8_t> data);
  static bool in_range(std::size_t addr, std::size_t len) { return addr + len <= reg::kSize; }

  std::uint8_t u8(std::size_t addr) const { return bytes_.at(addr); }
  std::uint16_t u16(std::size_t addr) const;
  std::int16_t s16(std::size_t addr) const { return static_cast<std::int16_t>(u16(addr)); }
  void set_u8(std::size_t addr, std::uint8_t v) { bytes_.at(addr) = v; }
  void set_u16(std::size_t addr, std::uint16_t v);
  void set_s16(std::size_t addr, std::int16_t v) { set_u16(addr, static_cast<std::uint16_t>(v)); }

private:
  std::array<std::uint8_t, reg::kSize> bytes_{};
};

std::array<std::uint8_t, 2> le16(std::uint16_t v);

/// Binary packet log: per frame an 8-byte LE microsecond timestamp, a 2-byte LE frame length,
/// then the raw wire bytes.
class PacketLog {
public:
  explicit PacketLog(const std::string& path);
  void record(std::int64_t time_us, std::span<const std::uint8_t> frame);

  struct Entry {
    std::int64_t time_us;
    std::vector<std::uint8_t> frame;
  };
  static std::vector<Entry> read(const std::string& path);

private:
  std::ofstream out_;
};

struct BusConfig {
  actuator::ServoDynamicsParams servo{};
  robot::JointLimits limits = robot::RobotConstants::default_limits();
  /// Per-byte corruption probability on the wire.
  double corrupt_rate = 0.0;
  std::uint64_t seed = 1;
};

struct Reply {
  std::vector<StatusPacket> statuses;
  /// Addressed devices that never answered.
  std::vector<std::uint8_t> timeouts;

  bool timed_out() const { return !timeouts.empty(); }
};

/// One-wire bus with 20 MX-style servos (ids 1..20) and the IMU/power board (id 200).
/// Single master: transact() and step() must be called from one context.
class SimulatedBus {
public:
  explicit SimulatedBus(BusConfig config = {});

  Reply transact(const BusPacket& packet);

  /// Integrates every servo over dt with the given external load torques.
  void step(double dt, const std::array<double, robot::kNumJoints>& external_torque);

  // Simulator-side access (not over the wire).
  const actuator::ServoState& servo_state(std::size_t joint) const { return servos_.at(joint).state; }
  void set_servo_state(std::size_t joint, const actuator::ServoState& s);
  void set_imu(const std::array<double, 3>& gyro, const std::array<double, 3>& accel);
  void set_supply_voltage(double volts);
  const RegisterFile& registers(std::uint8_t id) const;
  void set_servo_params(const actuator::ServoDynamicsParams& p) { config_.servo = p; }
  void set_corrupt_rate(double rate) { config_.corrupt_rate = rate; }
  void set_time_us(std::int64_t t) { time_us_ = t; }
  void attach_log(PacketLog* log) { log_ = log; }

  std::size_t dropped_frames() const { return dropped_; }

private:
  struct Servo {
    RegisterFile regs;
    actuator::ServoState state;
  };

  RegisterFile* device(std::uint8_t id);
  std::vector<std::uint8_t> wire(std::vector<std::uint8_t> bytes);
  std::optional<StatusPacket> respond(std::uint8_t id, const BusPacket& p);
  void refresh_present(std::size_t joint);

  BusConfig config_;
  std::array<Servo, robot::kNumJoints> servos_{};
  RegisterFile imu_;
  std::mt19937_64 rng_;
  PacketLog* log_ = nullptr;
  std::int64_t time_us_ = 0;
  std::size_t dropped_ = 0;
};

}  // namespace nop::bus
