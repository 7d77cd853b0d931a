#include "skilladapt/intention/energy_tank.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "skilladapt/error.hpp"

namespace skilladapt::intention {
namespace {

double shrink(double v, double band) {
  const double a = std::abs(v);
  return a <= band ? 0.0 : std::copysign(a - band, v);
}

}  // namespace

Vector6d apply_dead_zone(const Vector6d& wrench, double force_band, double torque_band) {
  Vector6d out;
  for (int i = 0; i < 3; ++i) out(i) = shrink(wrench(i), force_band);
  for (int i = 3; i < 6; ++i) out(i) = shrink(wrench(i), torque_band);
  return out;
}

EnergyTankBank::EnergyTankBank(HidConfig config) : config_(config) {
  if (!(config_.h_th > 0.0 && config_.h_th <= 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "intention threshold must lie in (0, 1]");
  }
  if (config_.dead_zone_force < 0.0 || config_.dead_zone_torque < 0.0) {
    throw Error(ErrorCode::InvalidArgument, "dead zones must be non-negative");
  }
  for (const auto& p : {config_.translational, config_.rotational}) {
    if (!(p.p_d > 0.0 && p.e_star > 0.0 && p.e_star <= p.e_max)) {
      throw Error(ErrorCode::InvalidArgument, "tank parameters need P_d > 0 and 0 < E* <= E_max");
    }
  }
  for (int i = 0; i < kAxes; ++i) {
    tanks_[static_cast<std::size_t>(i)].params = i < 3 ? config_.translational : config_.rotational;
  }
}

void EnergyTankBank::set_energy(int axis, double e) {
  auto& tank = tanks_.at(static_cast<std::size_t>(axis));
  tank.energy = std::clamp(e, 0.0, tank.params.e_max);
}

void EnergyTankBank::set_enabled(bool on) {
  enabled_ = on;
  if (!on) {
    for (auto& t : tanks_) t.energy = 0.0;
  }
}

IntentionState EnergyTankBank::step(const Vector6d& wrench, const Vector6d& velocity,
                                    const Vector6d& variance, double dt) {
  if (!(dt > 0.0)) throw Error(ErrorCode::NonPositiveDt, "tank step needs dt > 0");
  if (!enabled_) return state();
  const Vector6d w = apply_dead_zone(wrench, config_.dead_zone_force, config_.dead_zone_torque);
  for (int i = 0; i < kAxes; ++i) {
    auto& tank = tanks_[static_cast<std::size_t>(i)];
    const double ref = sigma_ref_sq_(i);
    const double ratio = ref > 0.0 ? std::max(variance(i), 0.0) / ref : 0.0;
    const double dissipation = tank.params.p_d * (1.0 + config_.kappa * ratio);
    const double injected = std::abs(w(i) * velocity(i));
    tank.energy = std::clamp(tank.energy + (injected - dissipation) * dt, 0.0, tank.params.e_max);
  }
  return state();
}

IntentionState EnergyTankBank::state() const {
  IntentionState s;
  for (int i = 0; i < kAxes; ++i) {
    const auto& tank = tanks_[static_cast<std::size_t>(i)];
    s.h(i) = std::min(tank.energy / tank.params.e_star, 1.0);
    if (s.h(i) >= config_.h_th) s.triggered_axes.push_back(i);
  }
  return s;
}

StiffnessCommand EnergyTankBank::reset() {
  for (auto& t : tanks_) t.energy = 0.0;
  return StiffnessCommand{};
}

StiffnessCommand stiffness_from_intention(const IntentionState& state, const StiffnessCommand& base) {
  StiffnessCommand out;
  for (int i = 0; i < 3; ++i) {
    out.k_f(i) = std::max(0.0, (1.0 - state.h(i)) * base.k_f(i));
    out.k_t(i) = std::max(0.0, (1.0 - state.h(i + 3)) * base.k_t(i));
  }
  return out;
}

kmp::ViaPoint compose_via_point(const IntentionState& state, const Vector7d& measured_pose,
                                const Vector7d& kmp_prediction, double s_now) {
  if (state.triggered_axes.empty()) {
    throw Error(ErrorCode::NoTriggeredAxis, "no axis crossed the intention threshold");
  }
  kmp::ViaPoint via;
  via.s_bar = s_now;
  via.gamma = kmp::ViaPoint{}.gamma;
  via.source = kmp::ViaSource::physical;
  via.mu_bar = kmp_prediction;
  bool rotational = false;
  for (int axis : state.triggered_axes) {
    if (axis < 3) {
      via.mu_bar(axis) = measured_pose(axis);
    } else {
      rotational = true;
    }
  }
  if (rotational) via.mu_bar.tail<4>() = measured_pose.tail<4>();
  return via;
}

std::vector<int> TriggerGate::update(const IntentionState& state, double t) {
  std::vector<int> fired;
  std::array<bool, kAxes> now{};
  for (int axis : state.triggered_axes) now[static_cast<std::size_t>(axis)] = true;
  for (std::size_t i = 0; i < kAxes; ++i) {
    if (now[i] && !above_[i] && t - last_fire_[i] >= refractory_) {
      fired.push_back(static_cast<int>(i));
      last_fire_[i] = t;
    }
    // While refractory, a rising edge is swallowed but the level is still
    // tracked so a held push does not fire again when the period ends.
    above_[i] = now[i];
  }
  return fired;
}

void TriggerGate::reset() {
  above_.fill(false);
  last_fire_.fill(-1e300);
}

}  // namespace skilladapt::intention
