#include "skilladapt/sim/impedance.hpp"

#include <Eigen/Geometry>

#include <cmath>

#include "skilladapt/error.hpp"

namespace skilladapt::sim {
namespace {

Eigen::Quaterniond to_quat(const Vector4d& q) { return Eigen::Quaterniond(q(0), q(1), q(2), q(3)); }

Vector4d from_quat(const Eigen::Quaterniond& q) { return {q.w(), q.x(), q.y(), q.z()}; }

}  // namespace

Vector6d damping(const ImpedanceParams& p) {
  Vector6d d;
  for (int i = 0; i < 3; ++i) {
    d(i) = 2.0 * p.damping_ratio * std::sqrt(std::max(p.k_f(i), intention::kResetForceStiffness));
    d(i + 3) = 2.0 * p.damping_ratio * std::sqrt(std::max(p.k_t(i), intention::kResetTorqueStiffness));
  }
  return d;
}

Vector3d orientation_error(const Vector4d& q_desired, const Vector4d& q) {
  Eigen::Quaterniond e = to_quat(q_desired).normalized() * to_quat(q).normalized().conjugate();
  if (e.w() < 0.0) e.coeffs() *= -1.0;
  const Eigen::AngleAxisd aa(e);
  return aa.angle() * aa.axis();
}

EffectorState step(const EffectorState& state, const Vector7d& target, const ImpedanceParams& imp,
                   const Vector6d& external_wrench, double dt) {
  if (!(dt > 0.0 && dt <= 0.01)) throw Error(ErrorCode::InvalidArgument, "simulation dt must lie in (0, 0.01]");
  const Vector6d d = damping(imp);
  Vector6d acc;
  acc.head<3>() = imp.k_f.cwiseProduct(target.head<3>() - state.pos) - d.head<3>().cwiseProduct(state.vel.head<3>()) +
                  external_wrench.head<3>();
  acc.tail<3>() = imp.k_t.cwiseProduct(orientation_error(target.tail<4>(), state.quat)) -
                  d.tail<3>().cwiseProduct(state.vel.tail<3>()) + external_wrench.tail<3>();
  EffectorState next;
  next.vel = state.vel + dt * acc;
  next.pos = state.pos + dt * next.vel.head<3>();
  const Vector3d w = next.vel.tail<3>() * dt;
  const double angle = w.norm();
  Eigen::Quaterniond dq = Eigen::Quaterniond::Identity();
  if (angle > 0.0) dq = Eigen::Quaterniond(Eigen::AngleAxisd(angle, w / angle));
  next.quat = from_quat((dq * to_quat(state.quat)).normalized());
  return next;
}

double impedance_energy(const EffectorState& state, const Vector7d& target, const ImpedanceParams& imp) {
  const Vector3d dx = target.head<3>() - state.pos;
  const Vector3d dr = orientation_error(target.tail<4>(), state.quat);
  return 0.5 * state.vel.squaredNorm() + 0.5 * dx.dot(imp.k_f.cwiseProduct(dx)) +
         0.5 * dr.dot(imp.k_t.cwiseProduct(dr));
}

}  // namespace skilladapt::sim
