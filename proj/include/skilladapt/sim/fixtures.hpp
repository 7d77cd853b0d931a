#pragma once

#include <Eigen/Core>

#include <span>
#include <vector>

#include "skilladapt/kmp/gmm.hpp"
#include "skilladapt/sim/impedance.hpp"

namespace skilladapt::sim {

inline constexpr std::size_t kMaxActiveFixtures = 10;

// Guidance toward a GMR mean path: wrench = gain * P(s) (x_path(s) - x) at
// the nearest path point, P the inverse position covariance.
class TrajectoryFixture {
 public:
  TrajectoryFixture(std::vector<Vector3d> path, std::vector<Eigen::Matrix3d> covariances, double gain = 0.01);
  static TrajectoryFixture from_demonstrations(std::span<const kmp::Demonstration> demos, int components = 6,
                                               int points = 200, double gain = 0.01);

  std::size_t nearest(const Vector3d& x) const;
  // Expert target and precision at the nearest path point.
  const Vector3d& point(std::size_t i) const { return path_[i]; }
  const Eigen::Matrix3d& precision(std::size_t i) const { return precision_[i]; }
  double gain() const { return gain_; }
  Vector3d wrench(const Vector3d& x) const;

 private:
  std::vector<Vector3d> path_;
  std::vector<Eigen::Matrix3d> precision_;
  double gain_;
};

// Desired velocity field v_des(x): kernel regression over GMR-conditioned
// velocity references with an RBF kernel on position.
class VelocityFixture {
 public:
  struct Options {
    int components = 6;
    int references = 80;
    double length_scale = 0.03;
    double lambda = 0.1;
    double gain = 20.0;               // K_v, N s/m
    double nominal_duration = 10.0;   // s, to turn d/ds into d/dt
  };

  VelocityFixture(std::span<const kmp::Demonstration> demos, Options options);
  explicit VelocityFixture(std::span<const kmp::Demonstration> demos) : VelocityFixture(demos, Options{}) {}

  Vector3d desired_velocity(const Vector3d& x) const;
  // GMR conditional precision of the velocity at x.
  Eigen::Matrix3d precision(const Vector3d& x) const;
  double gain() const { return options_.gain; }

 private:
  Options options_;
  kmp::GmmModel gmm_;  // over [x; v]
  Eigen::MatrixXd ref_x_;  // n x 3
  Eigen::MatrixXd alpha_;  // n x 3
};

class FixtureSet {
 public:
  // Throw TooManyFixtures beyond ten active fixtures in total.
  void add(TrajectoryFixture f);
  void add(VelocityFixture f);
  std::size_t size() const { return trajectory_.size() + velocity_.size(); }
  void clear();

  // Trajectory experts add up (precision-weighted product of experts);
  // velocity experts are fused by their precisions. Torques are zero.
  Vector6d wrench(const EffectorState& state) const;

 private:
  std::vector<TrajectoryFixture> trajectory_;
  std::vector<VelocityFixture> velocity_;
};

}  // namespace skilladapt::sim
