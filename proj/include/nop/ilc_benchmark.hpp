#pragma once

#include <vector>

#include "nop/actuator_control.hpp"
#include "nop/robot_model.hpp"

namespace nop::actuator {

/// Single-joint tracking experiment: one joint follows a 2 s raised-cosine reference against
/// its own gravity load while every other joint stays at zero. Each iteration is one rollout
/// followed by one ILC update.
struct IlcBenchmark {
  robot::Joint joint = robot::Joint::LeftKneePitch;
  double duration_s = 2.0;
  double dt = 0.008;
  double amplitude = 0.4;  // rad, peak-to-peak is twice this
  ServoDynamicsParams servo{};
  IlcParams ilc{};
  robot::RobotConstants constants{};
};

struct IlcRun {
  std::vector<double> rms;  // rms[k] = tracking RMS of rollout k (k = 0 before any learning)
  FeedForwardModel model;   // learned model after the last update
};

ReferenceTrajectory benchmark_reference(const IlcBenchmark& bench);

/// Plays the reference once with the given model; returns e(i) = q_des(i) - q(i).
std::vector<double> rollout(const IlcBenchmark& bench, const ReferenceTrajectory& traj,
                            const FeedForwardModel& model);

double rms(const std::vector<double>& e);

/// Runs `iterations` learning updates and records iterations + 1 rollouts.
IlcRun run_ilc(const IlcBenchmark& bench, int iterations);

}  // namespace nop::actuator
