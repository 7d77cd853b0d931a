#include "skilladapt/sim/fixtures.hpp"

#include <Eigen/Cholesky>
#include <Eigen/LU>

#include <algorithm>
#include <cmath>
#include <limits>

#include "skilladapt/error.hpp"

namespace skilladapt::sim {

TrajectoryFixture::TrajectoryFixture(std::vector<Vector3d> path, std::vector<Eigen::Matrix3d> covariances,
                                     double gain)
    : path_(std::move(path)), gain_(gain) {
  if (path_.empty() || path_.size() != covariances.size()) {
    throw Error(ErrorCode::InvalidArgument, "fixture path and covariances must be non-empty and paired");
  }
  precision_.reserve(covariances.size());
  for (const auto& c : covariances) {
    Eigen::LDLT<Eigen::Matrix3d> ldlt(c);
    if (ldlt.info() != Eigen::Success || !(ldlt.vectorD().minCoeff() > 0.0)) {
      throw Error(ErrorCode::InvalidArgument, "fixture covariance is not positive definite");
    }
    precision_.push_back(ldlt.solve(Eigen::Matrix3d::Identity()));
  }
}

TrajectoryFixture TrajectoryFixture::from_demonstrations(std::span<const kmp::Demonstration> demos, int components,
                                                         int points, double gain) {
  const auto gmm = kmp::fit_gmm(demos, components);
  const auto refs = kmp::gmr_reference(gmm, points);
  std::vector<Vector3d> path;
  std::vector<Eigen::Matrix3d> covs;
  for (const auto& r : refs) {
    path.push_back(r.mu.head<3>());
    covs.push_back(r.sigma.topLeftCorner<3, 3>());
  }
  return TrajectoryFixture(std::move(path), std::move(covs), gain);
}

std::size_t TrajectoryFixture::nearest(const Vector3d& x) const {
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < path_.size(); ++i) {
    const double d = (path_[i] - x).squaredNorm();
    if (d < best_d) {
      best_d = d;
      best = i;
    }
  }
  return best;
}

Vector3d TrajectoryFixture::wrench(const Vector3d& x) const {
  const auto i = nearest(x);
  return gain_ * precision_[i] * (path_[i] - x);
}

VelocityFixture::VelocityFixture(std::span<const kmp::Demonstration> demos, Options options)
    : options_(options) {
  std::vector<Eigen::Matrix<double, 1, 6>> rows;
  for (const auto& d : demos) {
    for (std::size_t i = 0; i + 1 < d.samples.size(); ++i) {
      const double ds = d.samples[i + 1].t - d.samples[i].t;
      if (!(ds > 0.0)) continue;
      Eigen::Matrix<double, 1, 6> row;
      row.head<3>() = d.samples[i].pos.transpose();
      row.tail<3>() = ((d.samples[i + 1].pos - d.samples[i].pos) / (ds * options_.nominal_duration)).transpose();
      rows.push_back(row);
    }
  }
  if (rows.size() < 2) throw Error(ErrorCode::TooFewSamples, "velocity fixture needs demonstrations with motion");
  Eigen::MatrixXd data(static_cast<Eigen::Index>(rows.size()), 6);
  for (std::size_t i = 0; i < rows.size(); ++i) data.row(static_cast<Eigen::Index>(i)) = rows[i];
  gmm_ = kmp::fit_gmm(data, std::min<int>(options_.components, static_cast<int>(rows.size())));

  const auto n = std::min<Eigen::Index>(options_.references, data.rows());
  ref_x_.resize(n, 3);
  Eigen::MatrixXd mu(n, 3);
  std::vector<Eigen::Matrix3d> sigma(static_cast<std::size_t>(n));
  for (Eigen::Index r = 0; r < n; ++r) {
    const auto src = n == 1 ? 0 : r * (data.rows() - 1) / (n - 1);
    const Eigen::VectorXd x = data.row(src).head<3>().transpose();
    const auto g = kmp::gmr(gmm_, x);
    ref_x_.row(r) = x.transpose();
    mu.row(r) = g.mean.transpose();
    sigma[static_cast<std::size_t>(r)] = g.cov;
  }
  // Block-diagonal Gram over positions; outputs share the scalar kernel.
  Eigen::MatrixXd k(3 * n, 3 * n);
  const double l2 = options_.length_scale * options_.length_scale;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      const double v = std::exp(-0.5 * (ref_x_.row(i) - ref_x_.row(j)).squaredNorm() / l2);
      k.block<3, 3>(3 * i, 3 * j) = v * Eigen::Matrix3d::Identity();
    }
    k.block<3, 3>(3 * i, 3 * i) += options_.lambda * sigma[static_cast<std::size_t>(i)];
  }
  Eigen::VectorXd m(3 * n);
  for (Eigen::Index i = 0; i < n; ++i) m.segment<3>(3 * i) = mu.row(i).transpose();
  Eigen::LLT<Eigen::MatrixXd> llt(k);
  if (llt.info() != Eigen::Success) throw Error(ErrorCode::SolveFailure, "velocity fixture Gram matrix is singular");
  const Eigen::VectorXd a = llt.solve(m);
  alpha_ = Eigen::Map<const Eigen::MatrixXd>(a.data(), 3, n).transpose();
}

Vector3d VelocityFixture::desired_velocity(const Vector3d& x) const {
  const double l2 = options_.length_scale * options_.length_scale;
  Vector3d v = Vector3d::Zero();
  for (Eigen::Index i = 0; i < ref_x_.rows(); ++i) {
    v += std::exp(-0.5 * (ref_x_.row(i).transpose() - x).squaredNorm() / l2) * alpha_.row(i).transpose();
  }
  return v;
}

Eigen::Matrix3d VelocityFixture::precision(const Vector3d& x) const {
  return kmp::gmr(gmm_, x).cov.inverse();
}

void FixtureSet::add(TrajectoryFixture f) {
  if (size() >= kMaxActiveFixtures) throw Error(ErrorCode::TooManyFixtures, "at most 10 fixtures may be active");
  trajectory_.push_back(std::move(f));
}

void FixtureSet::add(VelocityFixture f) {
  if (size() >= kMaxActiveFixtures) throw Error(ErrorCode::TooManyFixtures, "at most 10 fixtures may be active");
  velocity_.push_back(std::move(f));
}

void FixtureSet::clear() {
  trajectory_.clear();
  velocity_.clear();
}

Vector6d FixtureSet::wrench(const EffectorState& state) const {
  Vector6d w = Vector6d::Zero();
  for (const auto& f : trajectory_) w.head<3>() += f.wrench(state.pos);
  if (!velocity_.empty()) {
    Eigen::Matrix3d q_sum = Eigen::Matrix3d::Zero();
    Vector3d qv = Vector3d::Zero();
    double gain = 0.0;
    for (const auto& f : velocity_) {
      const Eigen::Matrix3d q = f.precision(state.pos);
      q_sum += q;
      qv += q * f.desired_velocity(state.pos);
      gain += f.gain();
    }
    const Vector3d v_des = q_sum.ldlt().solve(qv);
    w.head<3>() += gain / static_cast<double>(velocity_.size()) * (v_des - state.vel.head<3>());
  }
  return w;
}

}  // namespace skilladapt::sim
