#pragma once

#include <functional>
#include <optional>
#include <string_view>
#include <vector>

#include "skilladapt/intention/energy_tank.hpp"
#include "skilladapt/kmp/kmp_model.hpp"
#include "skilladapt/kmp/time_profile.hpp"
#include "skilladapt/sim/impedance.hpp"

namespace skilladapt::sim {

enum class RunState { idle, executing, done, aborted };
std::string_view to_string(RunState s);

// Per-axis predicted variance along s, from a coarse grid of covariance
// predictions; rotational axes use the qx, qy, qz diagonal entries.
class VarianceTable {
 public:
  VarianceTable() = default;
  VarianceTable(const kmp::KmpModel& model, int points = 50);

  Vector6d at(double s) const;
  // Per-axis median over the grid.
  const Vector6d& median() const { return median_; }
  bool empty() const { return values_.empty(); }

 private:
  std::vector<Vector6d> values_;
  Vector6d median_ = Vector6d::Zero();
};

struct ExecutionConfig {
  double rate_hz = 400.0;
  int status_every = 20;  // steps between status reports
  int samples = 500;
  bool hid_enabled = true;
};

struct ExecutionStatus {
  RunState state = RunState::idle;
  int index = 0;
  double progress = 0.0;
  double t = 0.0;
  double s = 0.0;
  Vector7d pose = Vector7d::Zero();
  Vector7d target = Vector7d::Zero();
  Vector6d h = Vector6d::Zero();
  intention::StiffnessCommand stiffness;
};

// Runs one trajectory execution in caller-driven chunks so commands can be
// interleaved between steps. The model is mutated in place when the
// intention detector fires.
class Executor {
 public:
  Executor(kmp::KmpModel& model, kmp::TimeProfile profile, intention::EnergyTankBank& hid,
           ExecutionConfig config = {});

  // Adds a constant wrench for `duration` seconds starting at the current
  // simulation time.
  void inject_wrench(const Vector6d& wrench, double duration);

  // Advances up to `max_steps` control steps; returns false once terminal.
  bool advance(int max_steps);
  // Runs to completion.
  void run();
  // Stops at the next step boundary with state aborted.
  void abort();

  const ExecutionStatus& status() const { return status_; }
  const EffectorState& effector() const { return effector_; }
  const kmp::Trajectory& trajectory() const { return traj_; }
  const std::vector<int>& inserted_via_points() const { return inserted_; }
  double duration() const { return duration_; }
  double max_tracking_error() const { return max_tracking_error_; }
  int steps() const { return steps_; }

  std::function<void(const ExecutionStatus&)> on_status;
  std::function<void(const kmp::ViaPoint&)> on_via_point;

 private:
  Vector7d target_at(double t, int* index) const;
  void resample_from(int index);
  void finish(RunState state);
  Vector6d external_wrench(double t) const;

  struct Pulse {
    double t0;
    double t1;
    Vector6d wrench;
  };

  kmp::KmpModel& model_;
  kmp::TimeProfile profile_;
  intention::EnergyTankBank& hid_;
  ExecutionConfig config_;
  double dt_;
  double duration_;
  kmp::Trajectory traj_;
  VarianceTable variance_;
  intention::TriggerGate gate_;
  EffectorState effector_;
  ImpedanceParams impedance_;
  std::vector<Pulse> pulses_;
  std::vector<int> inserted_;
  ExecutionStatus status_;
  int steps_ = 0;
  bool abort_requested_ = false;
  double max_tracking_error_ = 0.0;
};

}  // namespace skilladapt::sim
