#pragma once

#include <vector>

#include "skilladapt/kmp/kmp_model.hpp"

namespace skilladapt::kmp {

inline constexpr double kMaxRepulsionRadius = 1.0;

struct RepulsionOptions {
  double margin = 0.02;       // clearance beyond the sphere surface, m
  double min_spacing = 0.1;   // minimum s distance between inserted via-points
  int samples = 500;
  int max_rounds = 4;
  double gamma = kDefaultViaPrecision;
};

// Signed distance of `p` to a sphere.
double sphere_distance(const Vector3d& p, const Vector3d& center, double radius);

// Pushes every sampled pose whose signed distance to the sphere is below the
// margin out to radius + margin, sideways with respect to the local path
// direction, and pins it with a via-point. Rounds repeat on the adapted
// trajectory until it clears or `max_rounds` is reached. Returns inserted ids.
std::vector<int> repulsion_via_points(KmpModel& model, const Vector3d& center, double radius,
                                      const RepulsionOptions& options = {},
                                      ViaSource source = ViaSource::language);

}  // namespace skilladapt::kmp
