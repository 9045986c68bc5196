#include "nop/state_estimation.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace nop::estimation {

namespace {

// Into (-pi, pi].
double wrap(double a) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  a = std::fmod(a + std::numbers::pi, two_pi);
  if (a <= 0.0) a += two_pi;
  return a - std::numbers::pi;
}

}  // namespace

std::array<double, 2> accel_angles(const std::array<double, 3>& a) {
  return {std::atan2(a[1], a[2]), std::atan2(-a[0], std::hypot(a[1], a[2]))};
}

bool accel_trusted(const std::array<double, 3>& a, const FilterParams& params) {
  const double norm = std::sqrt(a[0] * a[0] + a[1] * a[1] + a[2] * a[2]);
  return std::abs(norm - params.gravity) <= params.gate;
}

AttitudeEstimate update_attitude(const AttitudeEstimate& est, const ImuSample& sample, double dt,
                                 const FilterParams& params) {
  std::array<double, 3> w{};
  for (std::size_t k = 0; k < 3; ++k) w[k] = sample.gyro[k] - params.gyro_bias[k];

  const double alpha = accel_trusted(sample.accel, params) ? params.alpha : 0.0;
  const auto [roll_a, pitch_a] = accel_angles(sample.accel);

  AttitudeEstimate out;
  out.rates = w;
  out.roll = wrap((1.0 - alpha) * (est.roll + w[0] * dt) + alpha * roll_a);
  out.pitch = wrap((1.0 - alpha) * (est.pitch + w[1] * dt) + alpha * pitch_a);
  out.yaw = est.yaw + w[2] * dt;
  return out;
}

std::string_view to_string(FallState s) {
  switch (s) {
    case FallState::Stable: return "STABLE";
    case FallState::Falling: return "FALLING";
    case FallState::FallenProne: return "FALLEN_PRONE";
    case FallState::FallenSupine: return "FALLEN_SUPINE";
  }
  return "?";
}

FallState FallDetector::update(const AttitudeEstimate& est, double dt) {
  switch (state_) {
    case FallState::Stable: {
      const bool pitch_out =
          std::abs(est.pitch) > params_.trigger_rad && est.pitch * est.rates[1] > 0.0;
      const bool roll_out =
          std::abs(est.roll) > params_.trigger_rad && est.roll * est.rates[0] > 0.0;
      if (pitch_out || roll_out) {
        state_ = FallState::Falling;
        dwell_ = 0.0;
      }
      break;
    }
    case FallState::Falling: {
      const bool down = std::abs(est.pitch) > params_.fallen_rad ||
                        std::abs(est.roll) > params_.fallen_rad;
      dwell_ = down ? dwell_ + dt : 0.0;
      if (down && dwell_ >= params_.dwell_s - 1e-9) {
        // Sideways falls resolve by the sign of pitch at rest; ties go prone.
        state_ = est.pitch >= 0.0 ? FallState::FallenProne : FallState::FallenSupine;
      }
      break;
    }
    case FallState::FallenProne:
    case FallState::FallenSupine:
      break;
  }
  return state_;
}

}  // namespace nop::estimation
