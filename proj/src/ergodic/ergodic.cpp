#include "skilladapt/ergodic/ergodic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "skilladapt/error.hpp"

namespace skilladapt::ergodic {
namespace {

constexpr double kPi = std::numbers::pi;

double reflect(double v) {
  // Fold into [0, 1]; steps are far smaller than the domain.
  if (v < 0.0) v = -v;
  if (v > 1.0) v = 2.0 - v;
  return std::clamp(v, 0.0, 1.0);
}

void check_range(double v, double lo, double hi, const char* what) {
  if (!(v >= lo && v <= hi)) {
    throw Error(ErrorCode::OutOfBounds, std::string(what) + " " + std::to_string(v) + " outside [" +
                                            std::to_string(lo) + ", " + std::to_string(hi) + "]");
  }
}

}  // namespace

TargetDistribution::TargetDistribution(Eigen::MatrixXd values) : values_(std::move(values)) {
  if (values_.rows() == 0 || values_.rows() != values_.cols()) {
    throw Error(ErrorCode::InvalidArgument, "target grid must be square and non-empty");
  }
  if (!values_.allFinite() || values_.minCoeff() < 0.0) {
    throw Error(ErrorCode::InvalidArgument, "target density must be finite and non-negative");
  }
  const double mass = values_.sum() / static_cast<double>(values_.size());
  if (!(mass > 0.0)) throw Error(ErrorCode::InvalidArgument, "target density has zero mass");
  values_ /= mass;
}

TargetDistribution TargetDistribution::uniform(int g) {
  return TargetDistribution(Eigen::MatrixXd::Ones(g, g));
}

TargetDistribution TargetDistribution::gaussian_mixture(int g, const std::vector<Bump>& bumps) {
  Eigen::MatrixXd v = Eigen::MatrixXd::Zero(g, g);
  for (int i = 0; i < g; ++i) {
    for (int j = 0; j < g; ++j) {
      const Vector2d x((i + 0.5) / g, (j + 0.5) / g);
      for (const auto& b : bumps) {
        v(i, j) += b.weight * std::exp(-0.5 * (x - b.mean).squaredNorm() / (b.sigma * b.sigma)) /
                   (2.0 * kPi * b.sigma * b.sigma);
      }
    }
  }
  return TargetDistribution(std::move(v));
}

FourierBasis::FourierBasis(int modes) : k_(modes) {
  if (modes < 1) throw Error(ErrorCode::InvalidArgument, "basis needs at least one mode");
  h_.resize(size());
  lambda_.resize(size());
  for (int k1 = 0; k1 < k_; ++k1) {
    for (int k2 = 0; k2 < k_; ++k2) {
      const int idx = k1 * k_ + k2;
      h_(idx) = (k1 == 0 ? 1.0 : std::sqrt(0.5)) * (k2 == 0 ? 1.0 : std::sqrt(0.5));
      lambda_(idx) = std::pow(1.0 + static_cast<double>(k1 * k1 + k2 * k2), -1.5);
    }
  }
}

Eigen::VectorXd FourierBasis::evaluate(const Vector2d& x) const {
  Eigen::VectorXd c1(k_), c2(k_);
  for (int k = 0; k < k_; ++k) {
    c1(k) = std::cos(k * kPi * x(0));
    c2(k) = std::cos(k * kPi * x(1));
  }
  Eigen::VectorXd f(size());
  for (int k1 = 0; k1 < k_; ++k1)
    for (int k2 = 0; k2 < k_; ++k2) f(k1 * k_ + k2) = c1(k1) * c2(k2) / h_(k1 * k_ + k2);
  return f;
}

Eigen::MatrixXd FourierBasis::gradient(const Vector2d& x) const {
  Eigen::VectorXd c1(k_), c2(k_), s1(k_), s2(k_);
  for (int k = 0; k < k_; ++k) {
    c1(k) = std::cos(k * kPi * x(0));
    c2(k) = std::cos(k * kPi * x(1));
    s1(k) = -k * kPi * std::sin(k * kPi * x(0));
    s2(k) = -k * kPi * std::sin(k * kPi * x(1));
  }
  Eigen::MatrixXd g(size(), 2);
  for (int k1 = 0; k1 < k_; ++k1) {
    for (int k2 = 0; k2 < k_; ++k2) {
      const int idx = k1 * k_ + k2;
      g(idx, 0) = s1(k1) * c2(k2) / h_(idx);
      g(idx, 1) = c1(k1) * s2(k2) / h_(idx);
    }
  }
  return g;
}

Eigen::VectorXd target_coefficients(const TargetDistribution& dist, const FourierBasis& basis) {
  const int g = dist.resolution();
  const int k = basis.modes();
  // Separable: phi_k = sum_ij v_ij C1(k1, i) C2(k2, j) / h_k / G^2.
  Eigen::MatrixXd c(k, g);
  for (int m = 0; m < k; ++m)
    for (int i = 0; i < g; ++i) c(m, i) = std::cos(m * kPi * (i + 0.5) / g);
  const Eigen::MatrixXd raw = c * dist.values() * c.transpose() / static_cast<double>(g * g);
  Eigen::VectorXd phi(basis.size());
  for (int k1 = 0; k1 < k; ++k1)
    for (int k2 = 0; k2 < k; ++k2) phi(k1 * k + k2) = raw(k1, k2) / basis.normalizers()(k1 * k + k2);
  return phi;
}

double ergodic_metric(const Eigen::VectorXd& coverage, const Eigen::VectorXd& target,
                      const FourierBasis& basis) {
  return (basis.weights().array() * (coverage - target).array().square()).sum();
}

std::string_view to_string(ExecState s) {
  switch (s) {
    case ExecState::idle:
      return "idle";
    case ExecState::running:
      return "running";
    case ExecState::paused:
      return "paused";
  }
  return "idle";
}

void Setpoints::set_velocity(double v) {
  check_range(v, kVelocityMin, kVelocityMax, "velocity");
  velocity_ = v;
}

void Setpoints::set_force(double f) {
  check_range(f, kForceMin, kForceMax, "force");
  force_ = f;
}

void Setpoints::set_stiffness(double k) {
  check_range(k, kStiffnessMin, kStiffnessMax, "stiffness");
  stiffness_ = k;
}

ErgodicController::ErgodicController(const TargetDistribution& target, ControllerOptions options)
    : basis_(options.modes),
      phi_(target_coefficients(target, basis_)),
      c_(Eigen::VectorXd::Zero(basis_.size())),
      x_(options.start),
      start_(options.start),
      visits_(Eigen::MatrixXd::Zero(options.heatmap_bins, options.heatmap_bins)) {
  if (!(start_.minCoeff() >= 0.0 && start_.maxCoeff() <= 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "start position outside the unit square");
  }
}

void ErgodicController::set_target(const TargetDistribution& target) {
  phi_ = target_coefficients(target, basis_);
}

void ErgodicController::start() {
  if (exec_ != ExecState::idle) throw Error(ErrorCode::Busy, "coverage execution already active");
  c_.setZero();
  t_ = 0.0;
  x_ = start_;
  visits_.setZero();
  exec_ = ExecState::running;
}

void ErgodicController::stop() { exec_ = ExecState::idle; }

void ErgodicController::set_exec_state(std::string_view cmd) {
  if (cmd == "pause") {
    if (exec_ == ExecState::idle) throw Error(ErrorCode::InvalidTransition, "cannot pause while idle");
    exec_ = ExecState::paused;
  } else if (cmd == "resume") {
    if (exec_ == ExecState::idle) throw Error(ErrorCode::InvalidTransition, "cannot resume while idle");
    exec_ = ExecState::running;
  } else {
    throw Error(ErrorCode::InvalidTransition, "unknown execution command '" + std::string(cmd) + "'");
  }
}

void ErgodicController::update_coverage(const Vector2d& x_new, double dt) {
  if (exec_ != ExecState::running) throw Error(ErrorCode::NotRunning, "coverage is not running");
  if (!(dt > 0.0)) throw Error(ErrorCode::NonPositiveDt, "coverage update needs dt > 0");
  c_ = (t_ * c_ + basis_.evaluate(x_new) * dt) / (t_ + dt);
  t_ += dt;
  x_ = x_new;
  const auto bins = visits_.rows();
  const auto bi = std::min<Eigen::Index>(static_cast<Eigen::Index>(x_new(0) * bins), bins - 1);
  const auto bj = std::min<Eigen::Index>(static_cast<Eigen::Index>(x_new(1) * bins), bins - 1);
  visits_(bi, bj) += dt;
}

Vector2d ErgodicController::control() const {
  if (exec_ != ExecState::running) throw Error(ErrorCode::NotRunning, "coverage is not running");
  const Eigen::VectorXd w = basis_.weights().cwiseProduct(c_ - phi_);
  const Vector2d b = basis_.gradient(x_).transpose() * w;
  const double v = setpoints_.v_max();
  if (b.norm() < 1e-12) return Vector2d(v, 0.0);
  return -v * b / b.norm();
}

Vector2d ErgodicController::step(double dt) {
  const Vector2d u = control();
  const Vector2d next(reflect(x_(0) + u(0) * dt), reflect(x_(1) + u(1) * dt));
  update_coverage(next, dt);
  return next;
}

double ErgodicController::metric() const { return ergodic_metric(c_, phi_, basis_); }

}  // namespace skilladapt::ergodic
