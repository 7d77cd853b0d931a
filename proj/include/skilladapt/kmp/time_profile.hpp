#pragma once

#include <vector>

#include "skilladapt/kmp/kmp_model.hpp"

namespace skilladapt::kmp {

enum class ScaleMode { slow, fast };

// Monotone map between wall-clock time and normalized trajectory time s,
// stored as piecewise-constant traversal speed over s. Speed 1 covers the
// whole [0, 1] range in `nominal_duration` seconds.
class TimeProfile {
 public:
  struct Segment {
    double s0;
    double s1;
    double speed;
  };

  explicit TimeProfile(double nominal_duration = 10.0);

  double nominal_duration() const { return nominal_duration_; }
  const std::vector<Segment>& segments() const { return segments_; }

  double duration() const { return t_at(1.0); }
  double window_duration(double s0, double s1) const;
  double t_at(double s) const;
  double s_at(double t) const;

  // Multiplies the speed inside [s0, s1] by `factor` (> 0).
  TimeProfile scaled(double s0, double s1, double factor) const;

 private:
  double nominal_duration_;
  std::vector<Segment> segments_;
};

// Slow: speed factor (1 - p/100); fast: (1 + p/100). Composes with the
// existing profile. Throws InvalidRange on bad percentage or window.
TimeProfile time_scale(const TimeProfile& profile, double percentage, double t_start,
                       double t_end, ScaleMode mode);

// n points equispaced in wall-clock time along the profile.
Trajectory sample_trajectory(const KmpModel& model, int n, const TimeProfile& profile,
                             bool with_covariance = false);

}  // namespace skilladapt::kmp
