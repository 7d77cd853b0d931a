#include "skilladapt/kmp/time_profile.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "skilladapt/error.hpp"

namespace skilladapt::kmp {

TimeProfile::TimeProfile(double nominal_duration) : nominal_duration_(nominal_duration) {
  if (!(nominal_duration > 0.0) || !std::isfinite(nominal_duration)) {
    throw Error(ErrorCode::InvalidArgument, "nominal duration must be positive");
  }
  segments_.push_back({0.0, 1.0, 1.0});
}

double TimeProfile::window_duration(double s0, double s1) const {
  double t = 0.0;
  for (const auto& seg : segments_) {
    const double lo = std::max(seg.s0, s0);
    const double hi = std::min(seg.s1, s1);
    if (hi > lo) t += nominal_duration_ * (hi - lo) / seg.speed;
  }
  return t;
}

double TimeProfile::t_at(double s) const {
  return window_duration(0.0, std::clamp(s, 0.0, 1.0));
}

double TimeProfile::s_at(double t) const {
  if (t <= 0.0) return 0.0;
  double elapsed = 0.0;
  for (const auto& seg : segments_) {
    const double span = nominal_duration_ * (seg.s1 - seg.s0) / seg.speed;
    if (t <= elapsed + span) {
      return std::min(seg.s1, seg.s0 + (t - elapsed) * seg.speed / nominal_duration_);
    }
    elapsed += span;
  }
  return 1.0;
}

TimeProfile TimeProfile::scaled(double s0, double s1, double factor) const {
  TimeProfile out = *this;
  std::vector<Segment> next;
  for (const auto& seg : segments_) {
    // Split each segment at the window borders, then rescale the inside.
    double cuts[4] = {seg.s0, std::clamp(s0, seg.s0, seg.s1), std::clamp(s1, seg.s0, seg.s1), seg.s1};
    for (int i = 0; i < 3; ++i) {
      if (cuts[i + 1] <= cuts[i]) continue;
      const bool inside = cuts[i] >= s0 && cuts[i + 1] <= s1;
      const double speed = inside ? seg.speed * factor : seg.speed;
      if (!next.empty() && next.back().speed == speed && next.back().s1 == cuts[i]) {
        next.back().s1 = cuts[i + 1];
      } else {
        next.push_back({cuts[i], cuts[i + 1], speed});
      }
    }
  }
  out.segments_ = std::move(next);
  return out;
}

TimeProfile time_scale(const TimeProfile& profile, double percentage, double t_start,
                       double t_end, ScaleMode mode) {
  if (!(percentage >= 1.0 && percentage <= 100.0)) {
    throw Error(ErrorCode::InvalidRange,
                "percentage " + std::to_string(percentage) + " outside [1, 100]");
  }
  if (mode == ScaleMode::slow && percentage > 99.0) {
    throw Error(ErrorCode::InvalidRange, "slow-down above 99% would stop the motion");
  }
  if (!(t_start >= 0.0 && t_start < t_end && t_end <= 1.0)) {
    throw Error(ErrorCode::InvalidRange, "window must satisfy 0 <= t_start < t_end <= 1");
  }
  const double factor = mode == ScaleMode::slow ? 1.0 - percentage / 100.0 : 1.0 + percentage / 100.0;
  return profile.scaled(t_start, t_end, factor);
}

Trajectory sample_trajectory(const KmpModel& model, int n, const TimeProfile& profile,
                             bool with_covariance) {
  if (n < 2) throw Error(ErrorCode::InvalidArgument, "sample_trajectory needs n >= 2");
  Trajectory traj;
  traj.points.resize(static_cast<std::size_t>(n));
  const double total = profile.duration();
  std::vector<double> s(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    auto& p = traj.points[static_cast<std::size_t>(i)];
    p.t = i == n - 1 ? total : total * static_cast<double>(i) / (n - 1);
    p.s = i == n - 1 ? 1.0 : profile.s_at(p.t);
    p.pose = model.predict_mean(p.s);
    s[static_cast<std::size_t>(i)] = p.s;
  }
  if (with_covariance) {
    const auto covs = model.predict_covariances(s);
    for (std::size_t i = 0; i < covs.size(); ++i) traj.points[i].covariance = covs[i];
  }
  return traj;
}

}  // namespace skilladapt::kmp
