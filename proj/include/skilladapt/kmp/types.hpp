#pragma once

#include <Eigen/Core>

#include <optional>
#include <string>
#include <vector>

namespace skilladapt {

// Pose layout used throughout: x, y, z, qw, qx, qy, qz.
inline constexpr int kPoseDim = 7;

using Vector3d = Eigen::Vector3d;
using Vector4d = Eigen::Vector4d;
using Vector6d = Eigen::Matrix<double, 6, 1>;
using Vector7d = Eigen::Matrix<double, 7, 1>;
using Matrix7d = Eigen::Matrix<double, 7, 7>;

namespace kmp {

struct DemoSample {
  double t = 0.0;
  Vector3d pos = Vector3d::Zero();
  Vector4d quat = Vector4d(1.0, 0.0, 0.0, 0.0);  // w, x, y, z
  std::optional<Vector6d> wrench;

  Vector7d pose() const;
};

struct Demonstration {
  std::vector<DemoSample> samples;
};

// Throws InvalidArgument describing the first violated invariant.
void validate(const Demonstration& demo);

// Flips each quaternion onto the hemisphere of its predecessor.
void align_hemispheres(Demonstration& demo);

struct ReferencePoint {
  double s = 0.0;
  Vector7d mu = Vector7d::Zero();
  Matrix7d sigma = Matrix7d::Identity();
};

enum class ViaSource { physical, language, graphical };

const char* to_string(ViaSource source) noexcept;
ViaSource via_source_from_string(const std::string& name);

struct ViaPoint {
  int id = 0;
  double s_bar = 0.0;
  Vector7d mu_bar = Vector7d::Zero();
  double gamma = 1e-8;  // covariance = gamma * I
  ViaSource source = ViaSource::graphical;
  // Width in s of the neighbourhood whose reference points this via-point
  // supersedes. Zero keeps only the nearest-reference rule.
  double span = 0.0;
};

struct TrajectoryPoint {
  double t = 0.0;
  double s = 0.0;
  Vector7d pose = Vector7d::Zero();
  std::optional<Matrix7d> covariance;
};

struct Trajectory {
  std::vector<TrajectoryPoint> points;
};

// Unit-normalizes the quaternion block of a pose in place.
void normalize_quaternion(Vector7d& pose);

}  // namespace kmp
}  // namespace skilladapt
