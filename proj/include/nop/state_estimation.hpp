#pragma once

#include <array>
#include <string_view>

namespace nop::estimation {

/// Body frame: x forward, y left, z up. Specific force reads (0, 0, +9.81) upright at rest.
struct ImuSample {
  std::array<double, 3> gyro{};   // rad/s
  std::array<double, 3> accel{};  // m/s^2
};

/// Pitch > 0 means leaning forward (toward prone).
struct AttitudeEstimate {
  double roll = 0.0;
  double pitch = 0.0;
  double yaw = 0.0;  // unwrapped
  std::array<double, 3> rates{};
};

struct FilterParams {
  double alpha = 0.02;
  double gravity = 9.81;
  /// Accel is trusted only while | |a| - g | stays inside this band (0.3 g).
  double gate = 2.94;
  std::array<double, 3> gyro_bias{};
};

/// Roll/pitch implied by the gravity direction in an accelerometer reading.
std::array<double, 2> accel_angles(const std::array<double, 3>& accel);

bool accel_trusted(const std::array<double, 3>& accel, const FilterParams& params);

/// One complementary-filter step: per axis (1 - a)(prev + w dt) + a * accel_angle, where a is
/// alpha when the accel magnitude is plausible and 0 otherwise. Yaw integrates gyro z only.
AttitudeEstimate update_attitude(const AttitudeEstimate& est, const ImuSample& sample, double dt,
                                 const FilterParams& params);

enum class FallState { Stable, Falling, FallenProne, FallenSupine };

std::string_view to_string(FallState s);

struct FallParams {
  double trigger_rad = 0.9;
  double fallen_rad = 1.3;
  double dwell_s = 0.5;
};

/// STABLE -> FALLING -> FALLEN_*; leaving FALLEN_* is an external reset().
class FallDetector {
public:
  explicit FallDetector(FallParams params = {}) : params_(params) {}

  FallState update(const AttitudeEstimate& est, double dt);
  FallState state() const { return state_; }
  void reset() {
    state_ = FallState::Stable;
    dwell_ = 0.0;
  }
  void set_params(const FallParams& p) { params_ = p; }

private:
  FallParams params_;
  FallState state_ = FallState::Stable;
  double dwell_ = 0.0;
};

}  // namespace nop::estimation
