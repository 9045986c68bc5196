#pragma once

#include <chrono>
#include <cstdint>
#include <vector>

namespace nop::runtime {

inline constexpr std::int64_t kCycleUs = 8000;
inline constexpr double kCycleS = 0.008;

enum class ClockMode { Virtual, Realtime };

struct TimingStats {
  std::size_t cycles = 0;
  double mean_period_us = 0.0;
  double p99_jitter_us = 0.0;  // |period - 8 ms|
  double max_jitter_us = 0.0;
  bool elevated_priority = false;
};

/// Control-loop time source. now_us() is the logical cycle time in both modes; realtime
/// mode additionally sleeps to the next 8 ms deadline and records the achieved periods.
class SimClock {
public:
  explicit SimClock(ClockMode mode = ClockMode::Virtual);

  ClockMode mode() const { return mode_; }
  std::int64_t now_us() const { return now_us_; }
  double now_s() const { return static_cast<double>(now_us_) * 1e-6; }
  /// Moves to the next cycle.
  void advance();
  /// Asks for SCHED_FIFO. Returns false without it (no privileges, not Linux).
  bool request_realtime_priority();
  TimingStats stats() const;

private:
  ClockMode mode_;
  std::int64_t now_us_ = 0;
  bool elevated_ = false;
  std::chrono::steady_clock::time_point start_;
  std::chrono::steady_clock::time_point last_;
  std::vector<double> periods_us_;
};

}  // namespace nop::runtime
