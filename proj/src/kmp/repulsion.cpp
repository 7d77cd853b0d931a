#include "skilladapt/kmp/repulsion.hpp"

#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <string>

#include "skilladapt/error.hpp"

namespace skilladapt::kmp {
namespace {

Vector3d any_perpendicular(const Vector3d& t) {
  const Vector3d axis = std::abs(t.z()) < 0.9 ? Vector3d::UnitZ() : Vector3d::UnitX();
  return t.cross(axis).normalized();
}

// `dir` with its component along the path tangent removed.
Vector3d lateral(const Vector3d& tangent, const Vector3d& dir) {
  if (tangent.norm() < 1e-12) return dir;
  const Vector3d t = tangent.normalized();
  const Vector3d n = dir - dir.dot(t) * t;
  return n.norm() > 1e-9 ? n.normalized() : any_perpendicular(t);
}

// Displacement along lateral(tangent, dir) that moves `p` onto the
// clearance sphere.
Vector3d push_out(const Vector3d& p, const Vector3d& tangent, const Vector3d& dir,
                  const Vector3d& center, double clearance) {
  const Vector3d r = p - center;
  const Vector3d n = lateral(tangent, dir);
  const double rn = r.dot(n);
  const double d = -rn + std::sqrt(std::max(0.0, rn * rn - r.squaredNorm() + clearance * clearance));
  return std::max(d, 0.0) * n;
}

// Sideways direction out of the sphere at the deepest sample.
Vector3d escape_direction(const Vector3d& p, const Vector3d& tangent, const Vector3d& center) {
  const Vector3d r = p - center;
  if (tangent.norm() < 1e-12) return r.norm() > 1e-12 ? r.normalized() : Vector3d::UnitZ();
  const Vector3d t = tangent.normalized();
  const Vector3d lateral = r - r.dot(t) * t;
  return lateral.norm() > 1e-9 ? lateral.normalized() : any_perpendicular(t);
}

}  // namespace

double sphere_distance(const Vector3d& p, const Vector3d& center, double radius) {
  return (p - center).norm() - radius;
}

std::vector<int> repulsion_via_points(KmpModel& model, const Vector3d& center, double radius,
                                      const RepulsionOptions& options, ViaSource source) {
  if (!(radius > 0.0)) {
    throw Error(ErrorCode::RadiusOutOfBounds, "repulsion radius must be positive");
  }
  if (radius > kMaxRepulsionRadius) {
    throw Error(ErrorCode::RadiusOutOfBounds,
                "repulsion radius " + std::to_string(radius) + " m exceeds 1.0 m");
  }
  if (!center.allFinite()) throw Error(ErrorCode::InvalidArgument, "obstacle center not finite");

  const int n = std::max(options.samples, 3);
  std::vector<int> inserted;
  std::vector<double> used_s;
  std::optional<Vector3d> dir;
  for (int round = 0; round < options.max_rounds; ++round) {
    std::vector<double> s(static_cast<std::size_t>(n));
    std::vector<Vector7d> pose(static_cast<std::size_t>(n));
    std::vector<double> sd(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      s[static_cast<std::size_t>(i)] = i == n - 1 ? 1.0 : static_cast<double>(i) / (n - 1);
      pose[static_cast<std::size_t>(i)] = model.predict_mean(s[static_cast<std::size_t>(i)]);
      sd[static_cast<std::size_t>(i)] =
          sphere_distance(pose[static_cast<std::size_t>(i)].head<3>(), center, radius);
    }
    const int deep = static_cast<int>(std::min_element(sd.begin(), sd.end()) - sd.begin());
    const Vector3d deepest = pose[static_cast<std::size_t>(deep)].head<3>();
    const Vector3d tangent_at_deepest =
        pose[static_cast<std::size_t>(std::min(deep + 1, n - 1))].head<3>() -
        pose[static_cast<std::size_t>(std::max(deep - 1, 0))].head<3>();
    // Cover each run of violating samples with evenly spaced via-points that
    // include both ends, at least min_spacing apart. Each one supersedes the
    // references within its share of the run.
    bool any = false;
    int i = 0;
    while (i < n) {
      if (sd[static_cast<std::size_t>(i)] >= options.margin) {
        ++i;
        continue;
      }
      int j = i;
      while (j + 1 < n && sd[static_cast<std::size_t>(j + 1)] < options.margin) ++j;
      const double a = s[static_cast<std::size_t>(i)];
      const double b = s[static_cast<std::size_t>(j)];
      const int gaps = static_cast<int>(std::floor((b - a) / options.min_spacing + 1e-9));
      const double step = gaps > 0 ? (b - a) / gaps : options.min_spacing;
      for (int k = 0; k <= gaps; ++k) {
        const double sk = gaps > 0 ? a + k * step : 0.5 * (a + b);
        const bool crowded = std::any_of(used_s.begin(), used_s.end(), [&](double u) {
          return std::abs(u - sk) < options.min_spacing - 1e-12;
        });
        if (crowded) continue;
        if (!dir) dir = escape_direction(deepest, tangent_at_deepest, center);
        // Largest push needed by any sample this via-point stands for.
        double push = 0.0;
        for (int q = i; q <= j; ++q) {
          if (std::abs(s[static_cast<std::size_t>(q)] - sk) > 0.5 * step + 1e-12) continue;
          const auto qs = static_cast<std::size_t>(q);
          const Vector3d tq = pose[static_cast<std::size_t>(std::min(q + 1, n - 1))].head<3>() -
                              pose[static_cast<std::size_t>(std::max(q - 1, 0))].head<3>();
          push = std::max(push, push_out(pose[qs].head<3>(), tq, *dir, center, radius + options.margin).norm());
        }
        const Vector7d p = model.predict_mean(sk);
        const double h = 0.5 / (n - 1);
        const Vector3d tangent = model.predict_mean(std::min(sk + h, 1.0)).head<3>() -
                                 model.predict_mean(std::max(sk - h, 0.0)).head<3>();
        Vector7d target = p;
        target.head<3>() += push * lateral(tangent, *dir);
        inserted.push_back(model.add_via_point(sk, target, options.gamma, source, step));
        used_s.push_back(sk);
        any = true;
      }
      i = j + 1;
    }
    if (!any) break;
  }
  return inserted;
}

}  // namespace skilladapt::kmp
