#include "skilladapt/sim/executor.hpp"

#include <algorithm>
#include <cmath>

#include "skilladapt/error.hpp"

namespace skilladapt::sim {

std::string_view to_string(RunState s) {
  switch (s) {
    case RunState::idle:
      return "idle";
    case RunState::executing:
      return "executing";
    case RunState::done:
      return "done";
    case RunState::aborted:
      return "aborted";
  }
  return "idle";
}

VarianceTable::VarianceTable(const kmp::KmpModel& model, int points) {
  std::vector<double> s(static_cast<std::size_t>(points));
  for (int i = 0; i < points; ++i) s[static_cast<std::size_t>(i)] = static_cast<double>(i) / (points - 1);
  const auto covs = model.predict_covariances(s);
  values_.reserve(covs.size());
  for (const auto& c : covs) {
    Vector6d v;
    v << c(0, 0), c(1, 1), c(2, 2), c(4, 4), c(5, 5), c(6, 6);
    values_.push_back(v.cwiseMax(0.0));
  }
  for (int axis = 0; axis < 6; ++axis) {
    std::vector<double> col;
    for (const auto& v : values_) col.push_back(v(axis));
    std::sort(col.begin(), col.end());
    const auto n = col.size();
    median_(axis) = n % 2 ? col[n / 2] : 0.5 * (col[n / 2 - 1] + col[n / 2]);
  }
}

Vector6d VarianceTable::at(double s) const {
  if (values_.empty()) return Vector6d::Zero();
  const double x = std::clamp(s, 0.0, 1.0) * static_cast<double>(values_.size() - 1);
  const auto i = std::min(static_cast<std::size_t>(x), values_.size() - 2);
  const double a = x - static_cast<double>(i);
  return (1.0 - a) * values_[i] + a * values_[i + 1];
}

Executor::Executor(kmp::KmpModel& model, kmp::TimeProfile profile, intention::EnergyTankBank& hid,
                   ExecutionConfig config)
    : model_(model),
      profile_(std::move(profile)),
      hid_(hid),
      config_(config),
      dt_(1.0 / config.rate_hz),
      duration_(profile_.duration()),
      gate_(hid.config().refractory) {
  if (config_.samples < 2) throw Error(ErrorCode::InvalidArgument, "execution needs at least two samples");
  traj_ = kmp::sample_trajectory(model_, config_.samples, profile_);
  if (config_.hid_enabled) {
    variance_ = VarianceTable(model_);
    hid_.set_reference_variance(variance_.median());
  }
  hid_.reset();
  const auto& first = traj_.points.front().pose;
  effector_.pos = first.head<3>();
  effector_.quat = first.tail<4>();
  status_.state = RunState::executing;
  status_.pose = effector_.pose();
  status_.target = first;
}

void Executor::inject_wrench(const Vector6d& wrench, double duration) {
  if (!(duration > 0.0)) throw Error(ErrorCode::InvalidArgument, "wrench duration must be positive");
  pulses_.push_back({status_.t, status_.t + duration, wrench});
}

Vector6d Executor::external_wrench(double t) const {
  Vector6d w = Vector6d::Zero();
  for (const auto& p : pulses_) {
    if (t >= p.t0 && t < p.t1) w += p.wrench;
  }
  return w;
}

Vector7d Executor::target_at(double t, int* index) const {
  const auto& pts = traj_.points;
  const double x = std::clamp(t / duration_, 0.0, 1.0) * static_cast<double>(pts.size() - 1);
  const auto i = std::min(static_cast<std::size_t>(x), pts.size() - 2);
  const double a = x - static_cast<double>(i);
  if (index) *index = static_cast<int>(i);
  Vector7d q0 = pts[i].pose;
  Vector7d q1 = pts[i + 1].pose;
  if (q0.tail<4>().dot(q1.tail<4>()) < 0.0) q1.tail<4>() *= -1.0;
  Vector7d out = (1.0 - a) * q0 + a * q1;
  out.tail<4>().normalize();
  return out;
}

void Executor::resample_from(int index) {
  for (std::size_t i = static_cast<std::size_t>(std::max(index, 0)); i < traj_.points.size(); ++i) {
    traj_.points[i].pose = model_.predict_mean(traj_.points[i].s);
  }
  if (config_.hid_enabled) {
    variance_ = VarianceTable(model_);
    hid_.set_reference_variance(variance_.median());
  }
}

void Executor::finish(RunState state) {
  impedance_.k_f = Vector3d::Constant(intention::kResetForceStiffness);
  impedance_.k_t = Vector3d::Constant(intention::kResetTorqueStiffness);
  status_.stiffness = hid_.reset();
  status_.h = Vector6d::Zero();
  status_.state = state;
  if (state == RunState::done) status_.progress = 1.0;
  if (on_status) on_status(status_);
}

bool Executor::advance(int max_steps) {
  for (int n = 0; n < max_steps; ++n) {
    if (status_.state != RunState::executing) return false;
    if (abort_requested_) {
      finish(RunState::aborted);
      return false;
    }
    const double t = status_.t;
    int index = 0;
    const Vector7d target = target_at(t, &index);
    const double s = profile_.s_at(std::min(t, duration_));
    const Vector6d wrench = external_wrench(t);

    if (config_.hid_enabled && hid_.enabled()) {
      const auto state = hid_.step(wrench, effector_.vel, variance_.at(s), dt_);
      const auto stiff = intention::stiffness_from_intention(state);
      impedance_.k_f = stiff.k_f;
      impedance_.k_t = stiff.k_t;
      status_.h = state.h;
      if (!gate_.update(state, t).empty()) {
        // Compose from the level set, not just the newly fired axes, so a
        // diagonal push moves every axis it is holding.
        auto via = intention::compose_via_point(state, effector_.pose(), model_.predict_mean(s), s);
        const int id = model_.add_via_point(via.s_bar, via.mu_bar, via.gamma, via.source);
        inserted_.push_back(id);
        resample_from(index + 1);
        if (on_via_point) on_via_point(model_.via_point(id));
      }
    }

    effector_ = step(effector_, target, impedance_, wrench, dt_);
    ++steps_;
    status_.t = t + dt_;
    status_.index = index;
    status_.s = s;
    status_.progress = std::max(status_.progress, std::min(status_.t / duration_, 1.0));
    status_.pose = effector_.pose();
    status_.target = target;
    status_.stiffness.k_f = impedance_.k_f;
    status_.stiffness.k_t = impedance_.k_t;
    const bool external = wrench.squaredNorm() > 0.0 || !inserted_.empty() ||
                          (status_.h.array() > 0.0).any();
    if (!external) {
      max_tracking_error_ = std::max(max_tracking_error_, (target.head<3>() - effector_.pos).norm());
    }
    if (status_.t >= duration_ - 1e-12) {
      finish(RunState::done);
      return false;
    }
    if (steps_ % config_.status_every == 0 && on_status) on_status(status_);
  }
  return status_.state == RunState::executing;
}

void Executor::run() {
  while (advance(1000)) {
  }
}

void Executor::abort() { abort_requested_ = true; }

}  // namespace skilladapt::sim
