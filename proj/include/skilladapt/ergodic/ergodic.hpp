#pragma once

#include <Eigen/Core>

#include <string>
#include <string_view>
#include <vector>

namespace skilladapt::ergodic {

using Vector2d = Eigen::Vector2d;

// Non-negative density on a G x G grid of cells over [0,1]^2, normalized so
// that sum(values) / G^2 == 1. values(i, j) is the cell centred at
// ((i + 0.5) / G, (j + 0.5) / G).
class TargetDistribution {
 public:
  explicit TargetDistribution(Eigen::MatrixXd values);

  static TargetDistribution uniform(int g);
  struct Bump {
    Vector2d mean;
    double sigma;
    double weight = 1.0;
  };
  static TargetDistribution gaussian_mixture(int g, const std::vector<Bump>& bumps);

  int resolution() const { return static_cast<int>(values_.rows()); }
  const Eigen::MatrixXd& values() const { return values_; }

 private:
  Eigen::MatrixXd values_;
};

// Separable cosine basis f_k(x) = cos(k1 pi x1) cos(k2 pi x2) / h_k with
// Sobolev weights (1 + |k|^2)^-1.5. Coefficient index is k1 * K + k2.
class FourierBasis {
 public:
  explicit FourierBasis(int modes = 15);

  int modes() const { return k_; }
  int size() const { return k_ * k_; }
  const Eigen::VectorXd& weights() const { return lambda_; }
  const Eigen::VectorXd& normalizers() const { return h_; }

  Eigen::VectorXd evaluate(const Vector2d& x) const;
  // size() x 2
  Eigen::MatrixXd gradient(const Vector2d& x) const;

 private:
  int k_;
  Eigen::VectorXd h_;
  Eigen::VectorXd lambda_;
};

// Midpoint quadrature over the distribution's grid.
Eigen::VectorXd target_coefficients(const TargetDistribution& dist, const FourierBasis& basis);

double ergodic_metric(const Eigen::VectorXd& coverage, const Eigen::VectorXd& target,
                      const FourierBasis& basis);

enum class ExecState { idle, running, paused };
std::string_view to_string(ExecState s);

inline constexpr double kVelocityMin = 3.0, kVelocityMax = 16.0, kVelocityDefault = 6.0;
inline constexpr double kForceMin = 5.0, kForceMax = 30.0, kForceDefault = 15.0;
inline constexpr double kStiffnessMin = 500.0, kStiffnessMax = 2000.0, kStiffnessDefault = 1000.0;
inline constexpr double kNormalStiffness = 800.0;
// Domain units per second per unit of the velocity setpoint.
inline constexpr double kVelocityScale = 0.01;

class Setpoints {
 public:
  double velocity() const { return velocity_; }
  double force() const { return force_; }
  double stiffness_tangential() const { return stiffness_; }
  double stiffness_normal() const { return kNormalStiffness; }
  double v_max() const { return velocity_ * kVelocityScale; }

  // Throw OutOfBounds and leave the value unchanged outside the range.
  void set_velocity(double v);
  void set_force(double f);
  void set_stiffness(double k);

 private:
  double velocity_ = kVelocityDefault;
  double force_ = kForceDefault;
  double stiffness_ = kStiffnessDefault;
};

struct ControllerOptions {
  int modes = 15;
  int heatmap_bins = 16;
  Vector2d start = Vector2d(0.5, 0.5);
};

// Spectral multiscale coverage on the unit square with a first-order agent
// (x' = u) reflected at the boundary.
class ErgodicController {
 public:
  ErgodicController(const TargetDistribution& target, ControllerOptions options = {});

  const FourierBasis& basis() const { return basis_; }
  const Eigen::VectorXd& target() const { return phi_; }
  const Eigen::VectorXd& coverage() const { return c_; }
  double time() const { return t_; }
  const Vector2d& position() const { return x_; }
  ExecState exec() const { return exec_; }
  Setpoints& setpoints() { return setpoints_; }
  const Setpoints& setpoints() const { return setpoints_; }

  void set_target(const TargetDistribution& target);

  // idle -> running; clears coverage history. Busy if not idle.
  void start();
  // Any state -> idle.
  void stop();
  // "pause" | "resume". InvalidTransition for pause/resume from idle and for
  // unknown commands; repeated commands are no-ops.
  void set_exec_state(std::string_view cmd);

  // Throws NotRunning unless running.
  void update_coverage(const Vector2d& x_new, double dt);
  Vector2d control() const;
  // One closed-loop step: control, integrate with reflection, update coverage.
  Vector2d step(double dt);

  double metric() const;
  // Time spent per cell, heatmap_bins x heatmap_bins, row index along x1.
  const Eigen::MatrixXd& visit_histogram() const { return visits_; }

 private:
  FourierBasis basis_;
  Eigen::VectorXd phi_;
  Eigen::VectorXd c_;
  double t_ = 0.0;
  Vector2d x_;
  Vector2d start_;
  ExecState exec_ = ExecState::idle;
  Setpoints setpoints_;
  Eigen::MatrixXd visits_;
};

}  // namespace skilladapt::ergodic
