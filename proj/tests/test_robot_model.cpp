#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "nop/errors.hpp"
#include "nop/robot_model.hpp"

using namespace nop::robot;
constexpr double kPi = std::numbers::pi;

TEST_CASE("joint table order, names and bus ids") {
  CHECK(kNumJoints == 20);
  CHECK(joint_name(Joint::LeftHipYaw) == "left_hip_yaw");
  CHECK(joint_name(Joint::RightAnkleRoll) == "right_ankle_roll");
  CHECK(joint_name(Joint::NeckPitch) == "neck_pitch");
  CHECK(index(Joint::RightHipYaw) == 6);
  CHECK(index(Joint::LeftShoulderPitch) == 12);
  CHECK(index(Joint::NeckYaw) == 18);
  for (std::size_t i = 0; i < kNumJoints; ++i) {
    const auto j = joint_from_name(joint_name(i));
    REQUIRE(j.has_value());
    CHECK(index(*j) == i);
    CHECK(bus_id(*j) == i + 1);
  }
  CHECK_FALSE(joint_from_name("left_toe").has_value());

  int legs = 0, arms = 0, neck = 0;
  for (std::size_t i = 0; i < kNumJoints; ++i) {
    const auto n = joint_name(i);
    if (n.find("hip") != n.npos || n.find("knee") != n.npos || n.find("ankle") != n.npos) ++legs;
    else if (n.find("neck") != n.npos) ++neck;
    else ++arms;
  }
  CHECK(legs == 12);
  CHECK(arms == 6);
  CHECK(neck == 2);
}

TEST_CASE("constants: link masses sum to the body mass and limits are ordered") {
  RobotConstants rc;
  CHECK(rc.total_link_mass() == doctest::Approx(rc.mass_kg).epsilon(1e-9));
  CHECK(rc.mass_kg == 6.6);
  CHECK(rc.height_m == 0.95);
  CHECK(rc.battery_nominal_v == 14.8);
  for (std::size_t i = 0; i < kNumJoints; ++i) CHECK(rc.limits.lo[i] < rc.limits.hi[i]);
  CHECK(rc.limits.lo[index(Joint::LeftKneePitch)] == 0.0);
  CHECK(rc.limits.hi[index(Joint::LeftAnkleRoll)] == 0.8);
  CHECK(rc.limits.lo[index(Joint::NeckYaw)] == -2.6);
}

TEST_CASE("tick conversion examples") {
  CHECK(ticks_to_rad(2048) == 0.0);
  CHECK(ticks_to_rad(0) == doctest::Approx(-kPi));
  CHECK(ticks_to_rad(3072) == doctest::Approx(kPi / 2));
  CHECK(rad_to_ticks(0.0) == 2048);
  CHECK(rad_to_ticks(kPi / 2) == 3072);
  CHECK(rad_to_ticks(10.0) == 4095);
  CHECK(rad_to_ticks(-10.0) == 0);
  CHECK_THROWS_AS(ticks_to_rad(-1), nop::DomainError);
  CHECK_THROWS_AS(ticks_to_rad(4096), nop::DomainError);
  CHECK_THROWS_AS(rad_to_ticks(std::nan("")), nop::DomainError);
}

TEST_CASE("tick round trip stays within half a tick") {
  std::mt19937_64 rng(7);
  const double half_tick = kPi / 4096;
  // Tick 4096 does not exist, so the top half tick below +pi clamps to 4095.
  std::uniform_real_distribution<double> angle(-kPi + 1e-9, kPi - half_tick);
  for (int i = 0; i < 10000; ++i) {
    const double a = angle(rng);
    CHECK(std::abs(ticks_to_rad(rad_to_ticks(a)) - a) <= half_tick + 1e-12);
  }
  std::uniform_real_distribution<double> top(kPi - half_tick, kPi);
  for (int i = 0; i < 100; ++i) {
    const double a = top(rng);
    CHECK(rad_to_ticks(a) == 4095);
    CHECK(std::abs(ticks_to_rad(4095) - a) <= 2 * half_tick + 1e-12);
  }
}

TEST_CASE("mirror examples") {
  JointVector zero;
  CHECK(mirror(zero) == zero);

  JointVector knee;
  knee[Joint::LeftKneePitch] = 0.5;
  JointVector want;
  want[Joint::RightKneePitch] = 0.5;
  CHECK(mirror(knee) == want);

  JointVector roll;
  roll[Joint::LeftHipRoll] = 0.2;
  const auto m = mirror(roll);
  CHECK(m[Joint::RightHipRoll] == -0.2);
  CHECK(m[Joint::LeftHipRoll] == 0.0);

  JointVector neck;
  neck[Joint::NeckYaw] = 0.3;
  neck[Joint::NeckPitch] = 0.4;
  CHECK(mirror(neck)[Joint::NeckYaw] == -0.3);
  CHECK(mirror(neck)[Joint::NeckPitch] == 0.4);
}

TEST_CASE("mirror is an involution on random vectors") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> d(-3.0, 3.0);
  for (int n = 0; n < 1000; ++n) {
    JointVector v;
    for (auto& x : v.values) x = d(rng);
    CHECK(mirror(mirror(v)) == v);
  }
}

TEST_CASE("clamp_to_limits keeps every value inside the limits") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> d(-5.0, 5.0);
  const auto lim = RobotConstants::default_limits();
  for (int n = 0; n < 200; ++n) {
    JointVector v;
    for (auto& x : v.values) x = d(rng);
    const auto c = clamp_to_limits(v, lim);
    for (std::size_t i = 0; i < kNumJoints; ++i) {
      CHECK(c[i] >= lim.lo[i]);
      CHECK(c[i] <= lim.hi[i]);
      if (v[i] >= lim.lo[i] && v[i] <= lim.hi[i]) CHECK(c[i] == v[i]);
    }
  }
}

TEST_CASE("camera height of the straight pose") {
  RobotConstants rc;
  JointVector straight;
  const double expected = rc.thigh_m + rc.shank_m + rc.foot_m + rc.trunk_m + rc.camera_offset_m;
  CHECK(camera_height(rc, straight) == doctest::Approx(expected));
}
