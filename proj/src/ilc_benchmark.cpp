#include "nop/ilc_benchmark.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace nop::actuator {

namespace {

robot::JointVector single_joint_pose(robot::Joint joint, double q) {
  robot::JointVector pose;
  pose[joint] = q;
  return pose;
}

// Center the swing inside the joint's range so the reference never touches a limit.
double reference_center(const IlcBenchmark& bench) {
  const auto i = robot::index(bench.joint);
  const double lo = bench.constants.limits.lo[i];
  const double hi = bench.constants.limits.hi[i];
  return std::clamp(0.0, lo + 2.0 * bench.amplitude, hi - 2.0 * bench.amplitude);
}

}  // namespace

ReferenceTrajectory benchmark_reference(const IlcBenchmark& bench) {
  const auto n = static_cast<std::size_t>(std::lround(bench.duration_s / bench.dt));
  const double center = reference_center(bench);
  const double omega = 2.0 * std::numbers::pi / bench.duration_s;
  std::vector<double> q(n);
  std::vector<double> g(n);
  for (std::size_t i = 0; i < n; ++i) {
    // Starts at rest at the bottom of the swing.
    q[i] = center - bench.amplitude * std::cos(omega * static_cast<double>(i) * bench.dt);
    g[i] = gravity_torque(single_joint_pose(bench.joint, q[i]), bench.joint, bench.constants);
  }
  return ReferenceTrajectory(std::move(q), bench.dt, std::move(g));
}

std::vector<double> rollout(const IlcBenchmark& bench, const ReferenceTrajectory& traj,
                            const FeedForwardModel& model) {
  const auto i_joint = robot::index(bench.joint);
  const PositionRange range{bench.constants.limits.lo[i_joint], bench.constants.limits.hi[i_joint]};

  ServoState state{traj.positions().front(), 0.0, 0.0};
  std::vector<double> errors(traj.size());
  for (std::size_t i = 0; i < traj.size(); ++i) {
    errors[i] = traj.positions()[i] - state.q;
    const double cmd = traj.positions()[i] +
                       feedforward(traj.velocities()[i], traj.gravity_torque()[i], model,
                                   static_cast<std::ptrdiff_t>(i));
    const double load =
        gravity_torque(single_joint_pose(bench.joint, state.q), bench.joint, bench.constants);
    state = step_servo(state, cmd, load, traj.dt(), bench.servo, range);
  }
  return errors;
}

double rms(const std::vector<double>& e) {
  if (e.empty()) return 0.0;
  double s = 0.0;
  for (double v : e) s += v * v;
  return std::sqrt(s / static_cast<double>(e.size()));
}

IlcRun run_ilc(const IlcBenchmark& bench, int iterations) {
  const ReferenceTrajectory traj = benchmark_reference(bench);
  IlcRun run;
  run.model.residual.assign(traj.size(), 0.0);
  for (int k = 0; k <= iterations; ++k) {
    const auto e = rollout(bench, traj, run.model);
    run.rms.push_back(rms(e));
    if (k < iterations) run.model = ilc_iterate(std::move(run.model), traj, e, bench.ilc);
  }
  return run;
}

}  // namespace nop::actuator
