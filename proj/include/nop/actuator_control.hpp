#pragma once

#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "nop/robot_model.hpp"

namespace nop::actuator {

/// Per-servo plant: J*qdd = clamp(Kp*(q_cmd - q), +-tau_max) - b*qd - tau_c*sign(qd) - tau_ext.
struct ServoDynamicsParams {
  double inertia = 0.01;     // kg m^2
  double stiffness = 8.0;    // N m / rad
  double viscous = 0.3;      // N m s / rad
  double coulomb = 0.1;      // N m
  double torque_max = 10.0;  // N m
};

struct ServoState {
  double q = 0.0;
  double qdot = 0.0;
  /// Motor torque applied during the last substep; always within +-torque_max.
  double motor_torque = 0.0;
};

struct PositionRange {
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();
};

inline constexpr int kServoSubsteps = 4;

/// Advances the plant by dt using kServoSubsteps semi-implicit Euler substeps.
/// With torque disabled the motor contributes nothing.
ServoState step_servo(ServoState state, double q_cmd, double tau_ext, double dt,
                      const ServoDynamicsParams& params, PositionRange range = {},
                      bool torque_enabled = true);
ServoState step_servo(ServoState state, int cmd_ticks, double tau_ext, double dt,
                      const ServoDynamicsParams& params, PositionRange range = {},
                      bool torque_enabled = true);

double sign(double x);

/// Feed-forward coefficients for one joint plus the learned residual, one entry per sample.
struct FeedForwardModel {
  double k_v = 0.0;
  double k_c = 0.0;
  double k_g = 0.0;
  std::vector<double> residual;
};

/// Offset added to q_des: k_v*qd + k_c*sign(qd) + k_g*tau_g + u(t_i). Out-of-range t_i reads u = 0.
double feedforward(double qdot_des, double gravity_torque, const FeedForwardModel& model,
                   std::ptrdiff_t sample);

/// Uniformly sampled desired trajectory with the gravity torque expected at each sample.
class ReferenceTrajectory {
public:
  ReferenceTrajectory(std::vector<double> positions, double dt,
                      std::vector<double> gravity_torque = {});

  std::size_t size() const { return q_.size(); }
  double dt() const { return dt_; }
  const std::vector<double>& positions() const { return q_; }
  const std::vector<double>& velocities() const { return qd_; }
  const std::vector<double>& accelerations() const { return qdd_; }
  const std::vector<double>& gravity_torque() const { return gravity_; }

private:
  std::vector<double> q_;
  std::vector<double> qd_;
  std::vector<double> qdd_;
  std::vector<double> gravity_;
  double dt_;
};

struct IlcParams {
  double gain = 0.5;
  int lead = 2;
  int smoothing_width = 5;
};

/// Centered moving average; windows are truncated at the edges.
std::vector<double> moving_average(std::span<const double> x, int width);

/// u_{k+1}(i) = smooth(u_k(i) + gain * e_k(i + lead)). Errors past the end read 0.
FeedForwardModel ilc_iterate(FeedForwardModel model, const ReferenceTrajectory& traj,
                             std::span<const double> errors, const IlcParams& params);

struct FitResult {
  bool singular = false;
  double k_v = 0.0;
  double k_c = 0.0;
  double k_g = 0.0;
};

/// Least-squares fit of the residual against [qd_des, sign(qd_des), tau_g]. On success the
/// coefficients are added to the model and the residual is replaced by the fit residual; a
/// rank-deficient regressor leaves the model untouched and sets `singular`. All-zero regressor
/// columns are skipped and keep their coefficient.
FitResult fit_coefficients(FeedForwardModel& model, const ReferenceTrajectory& traj);

inline constexpr double kGravity = 9.81;

/// Gravity moment about a sagittal pitch joint from the distal point-mass links of a hanging
/// planar chain. Returns 0 for non-sagittal joints.
double gravity_torque(const robot::JointVector& joints, robot::Joint joint,
                      const robot::RobotConstants& rc);

}  // namespace nop::actuator
