#include "nop/actuator_control.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Dense>

#include "nop/errors.hpp"

namespace nop::actuator {

using robot::Joint;

double sign(double x) { return (x > 0.0) - (x < 0.0); }

ServoState step_servo(ServoState state, double q_cmd, double tau_ext, double dt,
                      const ServoDynamicsParams& p, PositionRange range, bool torque_enabled) {
  const double h = dt / kServoSubsteps;
  for (int s = 0; s < kServoSubsteps; ++s) {
    const double motor =
        torque_enabled ? std::clamp(p.stiffness * (q_cmd - state.q), -p.torque_max, p.torque_max)
                       : 0.0;
    state.motor_torque = motor;
    const double drive = motor - p.viscous * state.qdot - tau_ext;

    double qdot;
    if (state.qdot != 0.0) {
      qdot = state.qdot + (drive - p.coulomb * sign(state.qdot)) / p.inertia * h;
      // Friction stops the joint; it never reverses it.
      if (qdot * state.qdot < 0.0) qdot = 0.0;
    } else if (std::abs(drive) <= p.coulomb) {
      qdot = 0.0;
    } else {
      qdot = (drive - p.coulomb * sign(drive)) / p.inertia * h;
    }

    state.qdot = qdot;
    state.q += qdot * h;
    if (state.q < range.lo) {
      state.q = range.lo;
      state.qdot = std::max(0.0, state.qdot);
    } else if (state.q > range.hi) {
      state.q = range.hi;
      state.qdot = std::min(0.0, state.qdot);
    }
  }
  return state;
}

ServoState step_servo(ServoState state, int cmd_ticks, double tau_ext, double dt,
                      const ServoDynamicsParams& params, PositionRange range, bool torque_enabled) {
  return step_servo(state, robot::ticks_to_rad(cmd_ticks), tau_ext, dt, params, range,
                    torque_enabled);
}

double feedforward(double qdot_des, double gravity_torque, const FeedForwardModel& model,
                   std::ptrdiff_t sample) {
  double u = 0.0;
  if (sample >= 0 && static_cast<std::size_t>(sample) < model.residual.size()) {
    u = model.residual[static_cast<std::size_t>(sample)];
  }
  return model.k_v * qdot_des + model.k_c * sign(qdot_des) + model.k_g * gravity_torque + u;
}

ReferenceTrajectory::ReferenceTrajectory(std::vector<double> positions, double dt,
                                         std::vector<double> gravity_torque)
    : q_(std::move(positions)), gravity_(std::move(gravity_torque)), dt_(dt) {
  if (q_.size() < 3) throw DomainError("reference trajectory needs at least 3 samples");
  if (!(dt_ > 0.0)) throw DomainError("reference trajectory needs dt > 0");
  if (gravity_.empty()) gravity_.assign(q_.size(), 0.0);
  if (gravity_.size() != q_.size()) throw DomainError("gravity torque length mismatch");

  const std::size_t n = q_.size();
  qd_.resize(n);
  qdd_.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    // Central differences inside, one-sided at the ends.
    const std::size_t a = i == 0 ? 0 : i - 1;
    const std::size_t b = i + 1 == n ? n - 1 : i + 1;
    qd_[i] = (q_[b] - q_[a]) / (static_cast<double>(b - a) * dt_);
  }
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t c = std::clamp<std::size_t>(i, 1, n - 2);
    qdd_[i] = (q_[c + 1] - 2.0 * q_[c] + q_[c - 1]) / (dt_ * dt_);
  }
}

std::vector<double> moving_average(std::span<const double> x, int width) {
  const auto n = static_cast<std::ptrdiff_t>(x.size());
  const std::ptrdiff_t half = std::max(0, width / 2);
  std::vector<double> out(x.size());
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const std::ptrdiff_t lo = std::max<std::ptrdiff_t>(0, i - half);
    const std::ptrdiff_t hi = std::min(n - 1, i + half);
    double sum = 0.0;
    for (std::ptrdiff_t k = lo; k <= hi; ++k) sum += x[static_cast<std::size_t>(k)];
    out[static_cast<std::size_t>(i)] = sum / static_cast<double>(hi - lo + 1);
  }
  return out;
}

FeedForwardModel ilc_iterate(FeedForwardModel model, const ReferenceTrajectory& traj,
                             std::span<const double> errors, const IlcParams& params) {
  const std::size_t n = traj.size();
  if (errors.size() != n) {
    throw DomainError("ILC error length " + std::to_string(errors.size()) +
                      " does not match trajectory length " + std::to_string(n));
  }
  if (!(params.gain > 0.0 && params.gain <= 1.0)) throw DomainError("ILC gain must be in (0, 1]");
  model.residual.resize(n, 0.0);

  std::vector<double> raw(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(std::max(0, params.lead));
    const double e = j < n ? errors[j] : 0.0;
    raw[i] = model.residual[i] + params.gain * e;
  }
  model.residual = moving_average(raw, params.smoothing_width);
  return model;
}

FitResult fit_coefficients(FeedForwardModel& model, const ReferenceTrajectory& traj) {
  const std::size_t n = traj.size();
  FitResult result{false, model.k_v, model.k_c, model.k_g};
  if (model.residual.size() != n) throw DomainError("residual length does not match trajectory");

  Eigen::MatrixXd a(static_cast<Eigen::Index>(n), 3);
  Eigen::VectorXd u(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    a(r, 0) = traj.velocities()[i];
    a(r, 1) = sign(traj.velocities()[i]);
    a(r, 2) = traj.gravity_torque()[i];
    u(r) = model.residual[i];
  }

  // Identically zero regressors carry no information and keep a zero coefficient; the rest
  // are scaled so the rank threshold is unit-independent.
  std::vector<int> active;
  std::vector<double> scale;
  for (int c = 0; c < 3; ++c) {
    const double norm = a.col(c).norm();
    if (norm > 0.0) {
      active.push_back(c);
      scale.push_back(norm);
    }
  }
  if (active.empty()) {
    result.singular = true;
    return result;
  }
  Eigen::MatrixXd m(a.rows(), static_cast<Eigen::Index>(active.size()));
  for (std::size_t c = 0; c < active.size(); ++c) {
    m.col(static_cast<Eigen::Index>(c)) = a.col(active[c]) / scale[c];
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(m);
  qr.setThreshold(1e-9);
  if (qr.rank() < m.cols()) {
    result.singular = true;
    return result;
  }
  const Eigen::VectorXd x = qr.solve(u);
  const Eigen::VectorXd rest = u - m * x;
  Eigen::Vector3d k = Eigen::Vector3d::Zero();
  for (std::size_t c = 0; c < active.size(); ++c) k(active[c]) = x(static_cast<Eigen::Index>(c)) / scale[c];

  model.k_v += k(0);
  model.k_c += k(1);
  model.k_g += k(2);
  for (std::size_t i = 0; i < n; ++i) model.residual[i] = rest(static_cast<Eigen::Index>(i));

  result.k_v = model.k_v;
  result.k_c = model.k_c;
  result.k_g = model.k_g;
  return result;
}

namespace {

struct PointMass {
  double kg;
  double x;  // horizontal offset from the joint axis
};

double moment(std::initializer_list<PointMass> masses) {
  double tau = 0.0;
  for (const auto& m : masses) tau += m.kg * kGravity * m.x;
  return tau;
}

double leg_torque(const robot::JointVector& q, Joint hip, Joint knee, Joint ankle, Joint joint,
                  const robot::RobotConstants& rc) {
  const double thigh_tilt = q[hip];
  const double shank_tilt = thigh_tilt + q[knee];
  const double foot_tilt = shank_tilt + q[ankle];
  const double foot_com = 0.5 * rc.foot_m * std::sin(foot_tilt);

  if (joint == hip) {
    const double knee_x = rc.thigh_m * std::sin(thigh_tilt);
    const double ankle_x = knee_x + rc.shank_m * std::sin(shank_tilt);
    return moment({{rc.thigh_kg, 0.5 * rc.thigh_m * std::sin(thigh_tilt)},
                   {rc.shank_kg, knee_x + 0.5 * rc.shank_m * std::sin(shank_tilt)},
                   {rc.foot_kg, ankle_x + foot_com}});
  }
  if (joint == knee) {
    const double ankle_x = rc.shank_m * std::sin(shank_tilt);
    return moment({{rc.shank_kg, 0.5 * rc.shank_m * std::sin(shank_tilt)},
                   {rc.foot_kg, ankle_x + foot_com}});
  }
  return moment({{rc.foot_kg, foot_com}});
}

double arm_torque(const robot::JointVector& q, Joint shoulder, Joint elbow, Joint joint,
                  const robot::RobotConstants& rc) {
  const double upper_tilt = q[shoulder];
  const double fore_tilt = upper_tilt + q[elbow];
  if (joint == shoulder) {
    return moment({{rc.upper_arm_kg, 0.5 * rc.upper_arm_m * std::sin(upper_tilt)},
                   {rc.forearm_kg, rc.upper_arm_m * std::sin(upper_tilt) +
                                       0.5 * rc.forearm_m * std::sin(fore_tilt)}});
  }
  return moment({{rc.forearm_kg, 0.5 * rc.forearm_m * std::sin(fore_tilt)}});
}

}  // namespace

double gravity_torque(const robot::JointVector& joints, Joint joint,
                      const robot::RobotConstants& rc) {
  switch (joint) {
    case Joint::LeftHipPitch: case Joint::LeftKneePitch: case Joint::LeftAnklePitch:
      return leg_torque(joints, Joint::LeftHipPitch, Joint::LeftKneePitch, Joint::LeftAnklePitch,
                        joint, rc);
    case Joint::RightHipPitch: case Joint::RightKneePitch: case Joint::RightAnklePitch:
      return leg_torque(joints, Joint::RightHipPitch, Joint::RightKneePitch,
                        Joint::RightAnklePitch, joint, rc);
    case Joint::LeftShoulderPitch: case Joint::LeftElbowPitch:
      return arm_torque(joints, Joint::LeftShoulderPitch, Joint::LeftElbowPitch, joint, rc);
    case Joint::RightShoulderPitch: case Joint::RightElbowPitch:
      return arm_torque(joints, Joint::RightShoulderPitch, Joint::RightElbowPitch, joint, rc);
    default:
      return 0.0;
  }
}

}  // namespace nop::actuator
