#pragma once

// Deterministic demonstration generators and a dense reference solver used
// as an oracle by the test suites.

#include <Eigen/Dense>
#include <Eigen/Geometry>

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "skilladapt/kmp/gmm.hpp"
#include "skilladapt/kmp/kmp_model.hpp"

namespace skilladapt::testing {

inline Vector4d quat_about_z(double angle) {
  return {std::cos(angle / 2.0), 0.0, 0.0, std::sin(angle / 2.0)};
}

// Straight line p0 -> p1 with uniformly spaced time and constant orientation.
inline kmp::Demonstration line_demo(const Vector3d& p0, const Vector3d& p1, int n,
                                    double yaw = 0.0) {
  kmp::Demonstration d;
  for (int i = 0; i < n; ++i) {
    kmp::DemoSample s;
    s.t = i == n - 1 ? 1.0 : static_cast<double>(i) / (n - 1);
    s.pos = p0 + s.t * (p1 - p0);
    s.quat = quat_about_z(yaw);
    d.samples.push_back(s);
  }
  return d;
}

// Sweep along +y with a z bump and a slow yaw rotation; `variant` perturbs
// amplitude and offset, `noise` adds seeded Gaussian jitter to positions.
inline kmp::Demonstration sinusoid_demo(int variant, int n = 200, double noise = 0.002,
                                        unsigned seed = 7) {
  std::mt19937 rng(seed + static_cast<unsigned>(variant));
  std::normal_distribution<double> jitter(0.0, noise);
  kmp::Demonstration d;
  const double amp = 0.05 * (1.0 + 0.15 * variant);
  for (int i = 0; i < n; ++i) {
    kmp::DemoSample s;
    s.t = i == n - 1 ? 1.0 : static_cast<double>(i) / (n - 1);
    s.pos = Vector3d(0.45 + 0.01 * variant + jitter(rng), -0.2 + 0.4 * s.t + jitter(rng),
                     0.3 + amp * std::sin(std::numbers::pi * s.t) + jitter(rng));
    s.quat = quat_about_z(0.3 * s.t + 0.02 * variant);
    d.samples.push_back(s);
  }
  return d;
}

inline std::vector<kmp::Demonstration> sinusoid_demos(int count = 3, int n = 200) {
  std::vector<kmp::Demonstration> out;
  for (int k = 0; k < count; ++k) out.push_back(sinusoid_demo(k, n));
  return out;
}

// Independent dense evaluation of the KMP predictive equations over the
// model's active set using a full-pivot LU instead of a Cholesky factor.
struct DenseOracle {
  std::vector<kmp::KmpModel::ActiveEntry> entries;
  kmp::KmpParams params;

  DenseOracle(const kmp::KmpModel& model) : entries(model.active_entries()), params(model.params()) {}

  Eigen::MatrixXd system(double lambda) const {
    const auto n = static_cast<Eigen::Index>(entries.size());
    Eigen::MatrixXd a(7 * n, 7 * n);
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < n; ++j) {
        const double k = params.kernel(std::abs(entries[i].s - entries[j].s));
        a.block<7, 7>(7 * i, 7 * j) = k * Matrix7d::Identity();
      }
      a.block<7, 7>(7 * i, 7 * i) += lambda * entries[i].sigma;
    }
    return a;
  }

  Eigen::MatrixXd kstar(double s) const {
    const auto n = static_cast<Eigen::Index>(entries.size());
    Eigen::MatrixXd k(7, 7 * n);
    for (Eigen::Index j = 0; j < n; ++j) {
      k.block<7, 7>(0, 7 * j) = params.kernel(std::abs(s - entries[j].s)) * Matrix7d::Identity();
    }
    return k;
  }

  Vector7d mean(double s) const {
    const auto n = static_cast<Eigen::Index>(entries.size());
    Eigen::VectorXd mu(7 * n);
    for (Eigen::Index j = 0; j < n; ++j) mu.segment<7>(7 * j) = entries[j].mu;
    Vector7d out = kstar(s) * system(params.lambda1).fullPivLu().solve(mu);
    out.tail<4>().normalize();
    return out;
  }

  Matrix7d covariance(double s) const {
    const Eigen::MatrixXd k = kstar(s);
    const Eigen::MatrixXd inner = system(params.lambda2).fullPivLu().solve(k.transpose());
    Matrix7d c = params.kernel(0.0) * Matrix7d::Identity() - k * inner;
    return static_cast<double>(entries.size()) / params.lambda2 * 0.5 * (c + c.transpose());
  }
};

// Random symmetric positive-definite 7x7 with eigenvalues in [lo, hi].
inline Matrix7d random_spd(std::mt19937& rng, double lo, double hi) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::uniform_real_distribution<double> e(lo, hi);
  Matrix7d m;
  for (int i = 0; i < 7; ++i)
    for (int j = 0; j < 7; ++j) m(i, j) = u(rng);
  Eigen::HouseholderQR<Matrix7d> qr(m);
  const Matrix7d q = qr.householderQ();
  Vector7d ev;
  for (int i = 0; i < 7; ++i) ev(i) = e(rng);
  Matrix7d out = q * ev.asDiagonal() * q.transpose();
  return 0.5 * (out + out.transpose());
}

// Toy model: n refs on a uniform grid with smooth random poses.
inline std::vector<kmp::ReferencePoint> random_refs(std::mt19937& rng, int n) {
  std::uniform_real_distribution<double> u(-0.1, 0.1);
  std::vector<kmp::ReferencePoint> refs(static_cast<std::size_t>(n));
  const Vector3d a(u(rng), u(rng), u(rng));
  const double yaw = 2.0 * u(rng);
  for (int i = 0; i < n; ++i) {
    auto& r = refs[static_cast<std::size_t>(i)];
    r.s = n == 1 ? 0.5 : static_cast<double>(i) / (n - 1);
    r.mu.head<3>() = Vector3d(0.4, 0.0, 0.3) + a * std::sin(3.0 * r.s) + Vector3d(u(rng), u(rng), u(rng)) * 0.05;
    r.mu.tail<4>() = quat_about_z(yaw * r.s + u(rng));
    r.sigma = random_spd(rng, 0.01, 0.05);
  }
  return refs;
}

}  // namespace skilladapt::testing
