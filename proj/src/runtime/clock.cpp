#include "nop/runtime/clock.hpp"

#include <pthread.h>
#include <sched.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <thread>

namespace nop::runtime {

SimClock::SimClock(ClockMode mode) : mode_(mode) {
  start_ = last_ = std::chrono::steady_clock::now();
}

void SimClock::advance() {
  now_us_ += kCycleUs;
  if (mode_ != ClockMode::Realtime) return;
  const auto deadline = start_ + std::chrono::microseconds(now_us_);
  std::this_thread::sleep_until(deadline);
  const auto now = std::chrono::steady_clock::now();
  periods_us_.push_back(std::chrono::duration<double, std::micro>(now - last_).count());
  last_ = now;
}

bool SimClock::request_realtime_priority() {
  sched_param sp{};
  sp.sched_priority = std::max(1, sched_get_priority_max(SCHED_FIFO) / 2);
  elevated_ = pthread_setschedparam(pthread_self(), SCHED_FIFO, &sp) == 0;
  return elevated_;
}

TimingStats SimClock::stats() const {
  TimingStats s;
  s.elevated_priority = elevated_;
  s.cycles = periods_us_.size();
  if (periods_us_.empty()) return s;
  s.mean_period_us = std::accumulate(periods_us_.begin(), periods_us_.end(), 0.0) / periods_us_.size();
  std::vector<double> jitter;
  jitter.reserve(periods_us_.size());
  for (double p : periods_us_) jitter.push_back(std::abs(p - double(kCycleUs)));
  std::sort(jitter.begin(), jitter.end());
  s.max_jitter_us = jitter.back();
  s.p99_jitter_us = jitter[std::min(jitter.size() - 1, static_cast<std::size_t>(std::ceil(0.99 * jitter.size())) - 1)];
  return s;
}

}  // namespace nop::runtime
