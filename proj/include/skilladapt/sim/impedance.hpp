#pragma once

#include "skilladapt/intention/energy_tank.hpp"
#include "skilladapt/kmp/types.hpp"

namespace skilladapt::sim {

struct EffectorState {
  Vector3d pos = Vector3d::Zero();
  Vector4d quat = Vector4d(1.0, 0.0, 0.0, 0.0);  // w, x, y, z
  Vector6d vel = Vector6d::Zero();                // linear m/s, angular rad/s (world)

  Vector7d pose() const {
    Vector7d p;
    p << pos, quat;
    return p;
  }
};

struct ImpedanceParams {
  Vector3d k_f = Vector3d::Constant(intention::kResetForceStiffness);
  Vector3d k_t = Vector3d::Constant(intention::kResetTorqueStiffness);
  double damping_ratio = 1.0;
};

// Per-axis damping 2 zeta sqrt(max(K, K_reset)): critical at the reset
// stiffness and never below it, so a released axis still settles.
Vector6d damping(const ImpedanceParams& p);

// Axis-angle vector of q_d q^-1 (world frame), shortest rotation.
Vector3d orientation_error(const Vector4d& q_desired, const Vector4d& q);

// Unit-mass impedance step, semi-implicit Euler. Throws InvalidArgument for
// dt outside (0, 0.01].
EffectorState step(const EffectorState& state, const Vector7d& target, const ImpedanceParams& imp,
                   const Vector6d& external_wrench, double dt);

// Lyapunov-style energy: kinetic plus spring potential toward `target`.
double impedance_energy(const EffectorState& state, const Vector7d& target, const ImpedanceParams& imp);

}  // namespace skilladapt::sim
