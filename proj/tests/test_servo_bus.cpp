#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <random>

#include "nop/servo_bus.hpp"

using namespace nop::bus;
using Bytes = std::vector<std::uint8_t>;

namespace {

// Independent checksum oracle: sum everything after the FF FF header, invert.
std::uint8_t oracle_checksum(const Bytes& frame) {
  unsigned sum = 0;
  for (std::size_t i = 2; i + 1 < frame.size(); ++i) sum += frame[i];
  return static_cast<std::uint8_t>(~sum & 0xFF);
}

BusPacket random_packet(std::mt19937_64& rng) {
  static constexpr Instruction kInstr[] = {Instruction::Ping, Instruction::Read, Instruction::Write,
                                           Instruction::SyncWrite, Instruction::BulkRead};
  std::uniform_int_distribution<int> byte(0, 255);
  std::uniform_int_distribution<int> id(0, 253);
  std::uniform_int_distribution<int> len(0, 250);
  std::uniform_int_distribution<int> which(0, 4);
  BusPacket p;
  p.id = static_cast<std::uint8_t>(id(rng));
  p.instruction = kInstr[which(rng)];
  p.params.resize(static_cast<std::size_t>(len(rng)));
  for (auto& b : p.params) b = static_cast<std::uint8_t>(byte(rng));
  return p;
}

}  // namespace

TEST_CASE("encode examples") {
  CHECK(encode(make_ping(1)) == Bytes{0xFF, 0xFF, 0x01, 0x02, 0x01, 0xFB});
  const Bytes goal{0x00, 0x08};
  CHECK(encode(make_write(5, 30, goal)) == Bytes{0xFF, 0xFF, 0x05, 0x05, 0x03, 0x1E, 0x00, 0x08, 0xCC});
  const SyncEntry entries[] = {{1, {0x00, 0x08}}, {2, {0x10, 0x08}}};
  const auto sync = encode(make_sync_write(30, 2, entries));
  CHECK(sync[2] == 0xFE);
  CHECK(sync.back() == oracle_checksum(sync));
}

TEST_CASE("encode rejects oversize params") {
  BusPacket p{1, Instruction::Write, Bytes(251, 0)};
  CHECK_THROWS_AS(encode(p), EncodeError);
  p.params.resize(250);
  CHECK(encode(p).size() == 256);
}

TEST_CASE("decode examples") {
  const Bytes ping{0xFF, 0xFF, 0x01, 0x02, 0x01, 0xFB};
  auto r = decode(ping);
  REQUIRE(r.ok());
  CHECK(r.consumed == 6);
  CHECK(std::get<BusPacket>(r.packet) == make_ping(1));

  Bytes bad = ping;
  bad.back() = 0xFA;
  r = decode(bad);
  CHECK(r.status == DecodeStatus::ChecksumMismatch);
  CHECK(r.consumed == 6);

  Bytes garbage{0x12, 0x00, 0xFF};
  garbage.insert(garbage.end(), ping.begin(), ping.end());
  r = decode(garbage);
  REQUIRE(r.ok());
  CHECK(r.consumed == 9);
  CHECK(std::get<BusPacket>(r.packet) == make_ping(1));
}

TEST_CASE("decode of a partial frame needs more data") {
  const Bytes ping{0xFF, 0xFF, 0x01, 0x02, 0x01, 0xFB};
  for (std::size_t n = 0; n < ping.size(); ++n) {
    const auto r = decode(std::span(ping).first(n));
    CHECK(r.status == DecodeStatus::NeedMoreData);
  }
  const Bytes junk_then_partial{0x01, 0x02, 0xFF, 0xFF, 0x01};
  const auto r = decode(junk_then_partial);
  CHECK(r.status == DecodeStatus::NeedMoreData);
  CHECK(r.consumed == 2);
}

TEST_CASE("status packets round trip through the device-to-host direction") {
  const StatusPacket s{7, kErrOverload | kErrInputVoltage, {1, 2, 3}};
  const auto bytes = encode(s);
  CHECK(bytes.back() == oracle_checksum(bytes));
  const auto r = decode(bytes, Direction::FromDevice);
  REQUIRE(r.ok());
  CHECK(std::get<StatusPacket>(r.packet) == s);
}

TEST_CASE("round trip of random packets") {
  std::mt19937_64 rng(42);
  for (int i = 0; i < 10000; ++i) {
    const auto p = random_packet(rng);
    const auto bytes = encode(p);
    REQUIRE(bytes.back() == oracle_checksum(bytes));
    const auto r = decode(bytes);
    REQUIRE(r.ok());
    REQUIRE(r.consumed == bytes.size());
    REQUIRE(std::get<BusPacket>(r.packet) == p);
  }
}

TEST_CASE("every single-byte corruption of the covered span is detected") {
  const Bytes data{0x00, 0x08, 0x10, 0x04};
  const auto bytes = encode(make_write(5, 30, data));
  for (std::size_t pos = 2; pos < bytes.size(); ++pos) {
    for (int v = 0; v < 256; ++v) {
      if (v == bytes[pos]) continue;
      Bytes bad = bytes;
      bad[pos] = static_cast<std::uint8_t>(v);
      const auto r = decode(bad);
      if (r.ok()) {
        // A corrupted length byte can only yield a packet if it reframes; it must never
        // reproduce the original packet.
        CHECK_FALSE(std::get<BusPacket>(r.packet) == make_write(5, 30, data));
        CHECK(pos == 3);
      }
    }
  }
}

TEST_CASE("bulk read and sync write builders") {
  const BulkEntry e[] = {{1, reg::PresentPosition, 2}, {2, reg::PresentPosition, 2}};
  const auto p = make_bulk_read(e);
  CHECK(p.id == kBroadcastId);
  CHECK(p.params == Bytes{0x00, 2, 1, 36, 2, 2, 36});
  const SyncEntry s[] = {{3, {1, 2}}};
  CHECK(make_sync_write(30, 2, s).params == Bytes{30, 2, 3, 1, 2});
}

TEST_CASE("simulated bus: write goal then read present position after settling") {
  SimulatedBus bus;
  nop::actuator::ServoState start;
  start.q = 0.3;
  bus.set_servo_state(2, start);
  const auto goal = le16(2048);
  auto reply = bus.transact(make_write(3, reg::GoalPosition, goal));
  REQUIRE(reply.statuses.size() == 1);
  CHECK(reply.statuses[0].error == 0);
  std::array<double, 20> zero{};
  for (int i = 0; i < 500; ++i) bus.step(0.008, zero);
  reply = bus.transact(make_read(3, reg::PresentPosition, 2));
  REQUIRE(reply.statuses.size() == 1);
  const auto& b = reply.statuses[0].params;
  REQUIRE(b.size() == 2);
  const int ticks = b[0] | (b[1] << 8);
  // Coulomb friction leaves at most tau_c / K_p of droop.
  CHECK(std::abs(ticks - 2048) <= 2 + static_cast<int>(0.1 / 8.0 / (2 * 3.14159265 / 4096) + 1));
}

TEST_CASE("simulated bus: settle with no friction reaches the goal within 2 ticks") {
  BusConfig cfg;
  cfg.servo.coulomb = 0.0;
  SimulatedBus bus(cfg);
  nop::actuator::ServoState start;
  start.q = -0.4;
  bus.set_servo_state(2, start);
  std::array<double, 20> zero{};
  for (int i = 0; i < 500; ++i) bus.step(0.008, zero);
  const auto reply = bus.transact(make_read(3, reg::PresentPosition, 2));
  REQUIRE(reply.statuses.size() == 1);
  const int ticks = reply.statuses[0].params[0] | (reply.statuses[0].params[1] << 8);
  CHECK(std::abs(ticks - 2048) <= 2);
}

TEST_CASE("simulated bus: absent device times out") {
  SimulatedBus bus;
  const auto reply = bus.transact(make_ping(21));
  CHECK(reply.statuses.empty());
  CHECK(reply.timeouts == Bytes{21});
  CHECK(bus.transact(make_ping(200)).statuses.size() == 1);
}

TEST_CASE("simulated bus: bulk read answers in request order") {
  SimulatedBus bus;
  const BulkEntry e[] = {{2, reg::PresentPosition, 2}, {1, reg::PresentPosition, 2},
                         {kImuBoardId, reg::AccelXyz, 6}};
  const auto reply = bus.transact(make_bulk_read(e));
  REQUIRE(reply.statuses.size() == 3);
  CHECK(reply.statuses[0].id == 2);
  CHECK(reply.statuses[1].id == 1);
  CHECK(reply.statuses[2].id == kImuBoardId);
  CHECK(reply.statuses[2].params.size() == 6);
  const auto az = static_cast<std::int16_t>(reply.statuses[2].params[4] | (reply.statuses[2].params[5] << 8));
  CHECK(az == 9810);
}

TEST_CASE("simulated bus: invalid address sets the range flag") {
  SimulatedBus bus;
  const auto reply = bus.transact(make_read(1, 73, 2));
  REQUIRE(reply.statuses.size() == 1);
  CHECK((reply.statuses[0].error & kErrRange) != 0);
  CHECK(reply.statuses[0].params.empty());
}

TEST_CASE("simulated bus: sync write equals individual writes") {
  SimulatedBus a, b;
  std::vector<SyncEntry> entries;
  for (std::uint8_t id = 1; id <= 20; ++id) {
    const auto g = le16(static_cast<std::uint16_t>(1500 + 30 * id));
    entries.push_back({id, {g[0], g[1]}});
  }
  CHECK(a.transact(make_sync_write(reg::GoalPosition, 2, entries)).statuses.empty());
  for (const auto& e : entries) b.transact(make_write(e.id, reg::GoalPosition, e.data));
  for (std::uint8_t id = 1; id <= 20; ++id) {
    for (std::size_t addr = 0; addr < reg::kSize; ++addr) {
      CHECK(a.registers(id).u8(addr) == b.registers(id).u8(addr));
    }
  }
}

TEST_CASE("simulated bus: broadcast write returns no status") {
  SimulatedBus bus;
  const Bytes off{0};
  const auto reply = bus.transact(make_write(kBroadcastId, reg::TorqueEnable, off));
  CHECK(reply.statuses.empty());
  CHECK(reply.timeouts.empty());
  for (std::uint8_t id = 1; id <= 20; ++id) CHECK(bus.registers(id).u8(reg::TorqueEnable) == 0);
}

TEST_CASE("simulated bus: corruption is seeded and surfaces as timeouts") {
  BusConfig cfg;
  cfg.corrupt_rate = 0.05;
  cfg.seed = 9;
  SimulatedBus a(cfg), b(cfg);
  std::size_t timeouts = 0;
  for (int i = 0; i < 200; ++i) {
    const auto ra = a.transact(make_read(1, reg::PresentPosition, 2));
    const auto rb = b.transact(make_read(1, reg::PresentPosition, 2));
    CHECK(ra.statuses == rb.statuses);
    CHECK(ra.timeouts == rb.timeouts);
    timeouts += ra.timeouts.size();
  }
  CHECK(timeouts > 0);
  CHECK(a.dropped_frames() == timeouts);
}

TEST_CASE("packet log round trip") {
  const auto path = (std::filesystem::temp_directory_path() / "nop_bus_log.bin").string();
  {
    PacketLog log(path);
    SimulatedBus bus;
    bus.attach_log(&log);
    bus.set_time_us(123456789);
    bus.transact(make_ping(1));
  }
  const auto entries = PacketLog::read(path);
  REQUIRE(entries.size() == 2);
  CHECK(entries[0].time_us == 123456789);
  CHECK(entries[0].frame == encode(make_ping(1)));
  CHECK(entries[1].frame == encode(StatusPacket{1, 0, {}}));
  std::filesystem::remove(path);
}
