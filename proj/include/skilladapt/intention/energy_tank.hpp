#pragma once

#include <array>
#include <vector>

#include "skilladapt/kmp/types.hpp"

namespace skilladapt::intention {

inline constexpr int kAxes = 6;  // x, y, z, rx, ry, rz

struct TankParams {
  double e_max;
  double e_star;
  double p_d;  // baseline dissipation per second
};

inline constexpr TankParams kTranslationalTank{0.4, 0.38, 0.04};
inline constexpr TankParams kRotationalTank{1.0, 0.7, 0.2};

struct EnergyTank {
  TankParams params;
  double energy = 0.0;
};

struct HidConfig {
  double dead_zone_force = 7.0;   // N
  double dead_zone_torque = 7.0;  // Nm
  double h_th = 0.9;
  double kappa = 2.0;        // variance gain on dissipation
  double refractory = 0.5;   // s between trigger events on one axis
  TankParams translational = kTranslationalTank;
  TankParams rotational = kRotationalTank;
};

struct IntentionState {
  Vector6d h = Vector6d::Zero();
  std::vector<int> triggered_axes;  // ascending
};

struct StiffnessCommand {
  Vector3d k_f = Vector3d::Constant(1000.0);  // N/m
  Vector3d k_t = Vector3d::Constant(100.0);   // Nm/rad
};

inline constexpr double kResetForceStiffness = 1000.0;
inline constexpr double kResetTorqueStiffness = 100.0;

// Continuous shrinkage: 0 inside the band, sign(w)(|w| - band) outside.
Vector6d apply_dead_zone(const Vector6d& wrench, double force_band = 7.0, double torque_band = 7.0);

// Six independent tanks. Injected power per axis is |w_i v_i| of the
// dead-zoned wrench; dissipation is P_d (1 + kappa sigma_i^2 / sigma_ref_i^2).
class EnergyTankBank {
 public:
  explicit EnergyTankBank(HidConfig config = {});

  const HidConfig& config() const { return config_; }
  const std::array<EnergyTank, kAxes>& tanks() const { return tanks_; }
  double energy(int axis) const { return tanks_[static_cast<std::size_t>(axis)].energy; }
  void set_energy(int axis, double e);

  bool enabled() const { return enabled_; }
  void set_enabled(bool on);

  // Per-axis variance scale; non-positive entries disable the variance term.
  void set_reference_variance(const Vector6d& sigma_ref_sq) { sigma_ref_sq_ = sigma_ref_sq; }
  const Vector6d& reference_variance() const { return sigma_ref_sq_; }

  // Throws NonPositiveDt. A disabled bank holds every tank at zero.
  IntentionState step(const Vector6d& wrench, const Vector6d& velocity, const Vector6d& variance,
                      double dt);

  IntentionState state() const;

  // Drains every tank and returns the reset stiffness.
  StiffnessCommand reset();

 private:
  HidConfig config_;
  std::array<EnergyTank, kAxes> tanks_;
  Vector6d sigma_ref_sq_ = Vector6d::Zero();
  bool enabled_ = true;
};

// K_i = (1 - h_i) K_base,i.
StiffnessCommand stiffness_from_intention(const IntentionState& state,
                                          const StiffnessCommand& base = {});

// Measured values on triggered translational axes, prediction elsewhere;
// the whole measured orientation if any rotational axis triggered.
// Throws NoTriggeredAxis.
kmp::ViaPoint compose_via_point(const IntentionState& state, const Vector7d& measured_pose,
                                const Vector7d& kmp_prediction, double s_now);

// Turns the level signal h >= h_th into events: an axis fires on a rising
// edge and then stays quiet for the refractory period.
class TriggerGate {
 public:
  explicit TriggerGate(double refractory = 0.5) : refractory_(refractory) {}
  std::vector<int> update(const IntentionState& state, double t);
  void reset();

 private:
  double refractory_;
  std::array<bool, kAxes> above_{};
  std::array<double, kAxes> last_fire_{-1e300, -1e300, -1e300, -1e300, -1e300, -1e300};
};

}  // namespace skilladapt::intention
