#include "skilladapt/kmp/kmp_model.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <string>

#include "skilladapt/error.hpp"

namespace skilladapt::kmp {
namespace {

// Above this many superseded references a fresh factorization is cheaper.
constexpr std::size_t kMaxIncrementalRemovals = 4;

}  // namespace

double KernelConfig::operator()(double r) const {
  switch (family) {
    case KernelFamily::matern52: {
      const double a = std::sqrt(5.0) * r / length_scale;
      return (1.0 + a + a * a / 3.0) * std::exp(-a);
    }
    case KernelFamily::rbf:
      return std::exp(-0.5 * r * r / (length_scale * length_scale));
  }
  return 0.0;
}

KmpModel::KmpModel(std::vector<ReferencePoint> refs, KmpParams params)
    : refs_(std::move(refs)), params_(params) {
  if (refs_.empty()) throw Error(ErrorCode::EmptyData, "KMP needs at least one reference point");
  if (!(params_.kernel.length_scale > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "kernel length scale must be positive");
  }
  if (params_.lambda1 < 0.0 || params_.lambda2 <= 0.0) {
    throw Error(ErrorCode::InvalidArgument, "lambda1 must be >= 0 and lambda2 > 0");
  }
  for (std::size_t i = 0; i < refs_.size(); ++i) {
    const auto& r = refs_[i];
    if (i > 0 && !(r.s > refs_[i - 1].s)) {
      throw Error(ErrorCode::InvalidArgument, "reference s values must be strictly increasing");
    }
    if ((r.sigma - r.sigma.transpose()).cwiseAbs().maxCoeff() > 1e-9) {
      throw Error(ErrorCode::InvalidArgument, "reference covariance " + std::to_string(i) +
                                                  " is not symmetric");
    }
    Eigen::SelfAdjointEigenSolver<Matrix7d> eig(r.sigma, Eigen::EigenvaluesOnly);
    if (eig.eigenvalues().minCoeff() < -1e-12) {
      throw Error(ErrorCode::InvalidArgument, "reference covariance " + std::to_string(i) +
                                                  " is not positive semidefinite");
    }
  }
  shadowed_.assign(refs_.size(), false);
  mean_base_ = std::make_shared<const BlockCholesky>(factor_base(params_.lambda1));
  mean_chol_ = *mean_base_;
  order_.clear();
  for (std::size_t i = 0; i < refs_.size(); ++i) order_.push_back({false, static_cast<int>(i)});
  refresh_weights();
}

double KmpModel::s_of(const Key& k) const {
  return k.via ? vias_[via_slot(k.index)].s_bar : refs_[static_cast<std::size_t>(k.index)].s;
}

Vector7d KmpModel::mu_of(const Key& k) const {
  return k.via ? vias_[via_slot(k.index)].mu_bar : refs_[static_cast<std::size_t>(k.index)].mu;
}

Matrix7d KmpModel::sigma_of(const Key& k) const {
  if (k.via) return vias_[via_slot(k.index)].gamma * Matrix7d::Identity();
  return refs_[static_cast<std::size_t>(k.index)].sigma;
}

std::size_t KmpModel::via_slot(int id) const {
  for (std::size_t i = 0; i < vias_.size(); ++i) {
    if (vias_[i].id == id) return i;
  }
  throw Error(ErrorCode::UnknownId, "unknown via-point id " + std::to_string(id));
}

const ViaPoint& KmpModel::via_point(int id) const { return vias_[via_slot(id)]; }

const std::vector<std::size_t>& KmpModel::shadowed_references(int id) const {
  return shadow_[via_slot(id)];
}

BlockCholesky KmpModel::factor_base(double lambda) const {
  const auto n = static_cast<Eigen::Index>(refs_.size());
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n * kPoseDim, n * kPoseDim);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j <= i; ++j) {
      const double k = params_.kernel(std::abs(refs_[static_cast<std::size_t>(i)].s -
                                               refs_[static_cast<std::size_t>(j)].s));
      for (int d = 0; d < kPoseDim; ++d) {
        a(i * kPoseDim + d, j * kPoseDim + d) = k;
        a(j * kPoseDim + d, i * kPoseDim + d) = k;
      }
    }
    a.block<kPoseDim, kPoseDim>(i * kPoseDim, i * kPoseDim) +=
        lambda * refs_[static_cast<std::size_t>(i)].sigma;
  }
  return BlockCholesky(a, kPoseDim);
}

BlockCholesky KmpModel::factor_keys(double lambda, const std::vector<Key>& order) const {
  const auto n = static_cast<Eigen::Index>(order.size());
  std::vector<double> s(order.size());
  for (std::size_t i = 0; i < order.size(); ++i) s[i] = s_of(order[i]);
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n * kPoseDim, n * kPoseDim);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j <= i; ++j) {
      const double k = params_.kernel(std::abs(s[static_cast<std::size_t>(i)] - s[static_cast<std::size_t>(j)]));
      for (int d = 0; d < kPoseDim; ++d) {
        a(i * kPoseDim + d, j * kPoseDim + d) = k;
        a(j * kPoseDim + d, i * kPoseDim + d) = k;
      }
    }
    a.block<kPoseDim, kPoseDim>(i * kPoseDim, i * kPoseDim) +=
        lambda * sigma_of(order[static_cast<std::size_t>(i)]);
  }
  return BlockCholesky(a, kPoseDim);
}

void KmpModel::append_via(BlockCholesky& chol, std::vector<Key>& order, const ViaPoint& via,
                          double lambda) const {
  const auto n = static_cast<Eigen::Index>(order.size());
  Eigen::MatrixXd cross = Eigen::MatrixXd::Zero(n * kPoseDim, kPoseDim);
  for (Eigen::Index j = 0; j < n; ++j) {
    const double k = params_.kernel(std::abs(via.s_bar - s_of(order[static_cast<std::size_t>(j)])));
    for (int d = 0; d < kPoseDim; ++d) cross(j * kPoseDim + d, d) = k;
  }
  const Matrix7d diag =
      params_.kernel(0.0) * Matrix7d::Identity() + lambda * via.gamma * Matrix7d::Identity();
  chol.append_block(cross, diag);
  order.push_back({true, via.id});
}

void KmpModel::rebuild_from(const BlockCholesky& base, double lambda, BlockCholesky& chol,
                            std::vector<Key>& order) const {
  order.clear();
  const auto removed = static_cast<std::size_t>(std::count(shadowed_.begin(), shadowed_.end(), true));
  if (removed > kMaxIncrementalRemovals) {
    // Many rank updates cost more than one fresh factorization.
    for (std::size_t i = 0; i < refs_.size(); ++i) {
      if (!shadowed_[i]) order.push_back({false, static_cast<int>(i)});
    }
    for (const auto& via : vias_) order.push_back({true, via.id});
    chol = factor_keys(lambda, order);
    return;
  }
  chol = base;
  for (std::size_t i = 0; i < refs_.size(); ++i) order.push_back({false, static_cast<int>(i)});
  // Highest index first keeps the remaining positions valid and the
  // trailing updates short.
  for (std::size_t i = refs_.size(); i-- > 0;) {
    if (shadowed_[i]) {
      chol.remove_block(static_cast<Eigen::Index>(i));
      order.erase(order.begin() + static_cast<std::ptrdiff_t>(i));
    }
  }
  for (const auto& via : vias_) append_via(chol, order, via, lambda);
}

void KmpModel::refresh_weights() {
  const auto n = static_cast<Eigen::Index>(order_.size());
  Eigen::VectorXd mu(n * kPoseDim);
  active_s_.resize(order_.size());
  for (Eigen::Index j = 0; j < n; ++j) {
    const auto& key = order_[static_cast<std::size_t>(j)];
    mu.segment<kPoseDim>(j * kPoseDim) = mu_of(key);
    active_s_[static_cast<std::size_t>(j)] = s_of(key);
  }
  const Eigen::VectorXd alpha = mean_chol_.solve(mu);
  if (!alpha.allFinite()) throw Error(ErrorCode::SolveFailure, "KMP weights are not finite");
  weights_ = Eigen::Map<const Eigen::MatrixXd>(alpha.data(), kPoseDim, n);
}

void KmpModel::ensure_covariance_factor() const {
  if (!cov_dirty_) return;
  if (!cov_base_) {
    cov_base_ = std::make_shared<const BlockCholesky>(factor_base(params_.lambda2));
  }
  if (vias_.empty()) {
    cov_chol_ = *cov_base_;
    cov_order_.clear();
    for (std::size_t i = 0; i < refs_.size(); ++i) cov_order_.push_back({false, static_cast<int>(i)});
  } else {
    rebuild_from(*cov_base_, params_.lambda2, cov_chol_, cov_order_);
  }
  cov_dirty_ = false;
}

Vector7d KmpModel::predict_mean(double s) const {
  if (!(s >= 0.0 && s <= 1.0)) {
    throw Error(ErrorCode::InvalidTime, "query time " + std::to_string(s) + " outside [0, 1]");
  }
  Vector7d out = Vector7d::Zero();
  for (std::size_t j = 0; j < active_s_.size(); ++j) {
    out += params_.kernel(std::abs(s - active_s_[j])) * weights_.col(static_cast<Eigen::Index>(j));
  }
  normalize_quaternion(out);
  return out;
}

Matrix7d KmpModel::predict_covariance(double s) const {
  const double q[1] = {s};
  return predict_covariances(q).front();
}

std::vector<Matrix7d> KmpModel::predict_covariances(std::span<const double> s) const {
  for (double v : s) {
    if (!(v >= 0.0 && v <= 1.0)) {
      throw Error(ErrorCode::InvalidTime, "query time " + std::to_string(v) + " outside [0, 1]");
    }
  }
  ensure_covariance_factor();
  const auto n = static_cast<Eigen::Index>(cov_order_.size());
  const auto q = static_cast<Eigen::Index>(s.size());
  Eigen::MatrixXd kstar = Eigen::MatrixXd::Zero(n * kPoseDim, q * kPoseDim);
  for (Eigen::Index j = 0; j < n; ++j) {
    const double sj = s_of(cov_order_[static_cast<std::size_t>(j)]);
    for (Eigen::Index c = 0; c < q; ++c) {
      const double k = params_.kernel(std::abs(s[static_cast<std::size_t>(c)] - sj));
      for (int d = 0; d < kPoseDim; ++d) kstar(j * kPoseDim + d, c * kPoseDim + d) = k;
    }
  }
  const Eigen::MatrixXd w = cov_chol_.solve_lower(kstar);
  const double scale = static_cast<double>(n) / params_.lambda2;
  std::vector<Matrix7d> out(s.size());
  for (Eigen::Index c = 0; c < q; ++c) {
    const auto wc = w.middleCols(c * kPoseDim, kPoseDim);
    Matrix7d cov = params_.kernel(0.0) * Matrix7d::Identity() - wc.transpose() * wc;
    cov = (scale * 0.5 * (cov + cov.transpose())).eval();
    Eigen::SelfAdjointEigenSolver<Matrix7d> eig(cov);
    if (eig.eigenvalues().minCoeff() < 0.0) {
      cov = eig.eigenvectors() * eig.eigenvalues().cwiseMax(0.0).asDiagonal() *
            eig.eigenvectors().transpose();
    }
    out[static_cast<std::size_t>(c)] = cov;
  }
  return out;
}

Vector7d KmpModel::prepare_via_pose(double s_bar, const Vector7d& mu) const {
  if (!mu.allFinite()) throw Error(ErrorCode::InvalidArgument, "via-point pose is not finite");
  Vector7d out = mu;
  const double qn = out.segment<4>(3).norm();
  if (std::abs(qn - 1.0) > 1e-3) {
    throw Error(ErrorCode::NonUnitQuaternion,
                "via-point quaternion norm " + std::to_string(qn) + " is not within 1e-3 of 1");
  }
  out.segment<4>(3) /= qn;
  const Vector7d predicted = predict_mean(s_bar);
  if (out.segment<4>(3).dot(predicted.segment<4>(3)) < 0.0) out.segment<4>(3) *= -1.0;
  return out;
}

int KmpModel::add_via_point(double s_bar, const Vector7d& mu_bar, double gamma, ViaSource source,
                            double span) {
  return insert_via({next_id_, s_bar, mu_bar, gamma, source, span});
}

int KmpModel::restore_via_point(const ViaPoint& via) {
  if (std::any_of(vias_.begin(), vias_.end(), [&](const ViaPoint& v) { return v.id == via.id; })) {
    throw Error(ErrorCode::InvalidArgument, "duplicate via-point id " + std::to_string(via.id));
  }
  return insert_via(via);
}

int KmpModel::insert_via(ViaPoint via) {
  const double s_bar = via.s_bar;
  if (!(s_bar >= 0.0 && s_bar <= 1.0)) {
    throw Error(ErrorCode::InvalidTime, "via-point time " + std::to_string(s_bar) + " outside [0, 1]");
  }
  if (!(via.gamma > 0.0) || !std::isfinite(via.gamma)) {
    throw Error(ErrorCode::InvalidArgument, "via-point precision gamma must be positive");
  }
  via.mu_bar = prepare_via_pose(s_bar, via.mu_bar);

  if (!(via.span >= 0.0) || !std::isfinite(via.span)) {
    throw Error(ErrorCode::InvalidArgument, "via-point span must be non-negative");
  }

  // Supersede the nearest reference when it sits within half a grid step,
  // and every free reference inside the via-point's span.
  std::vector<std::size_t> shadow;
  const auto it = std::lower_bound(refs_.begin(), refs_.end(), s_bar,
                                   [](const ReferencePoint& r, double v) { return r.s < v; });
  std::size_t nearest = static_cast<std::size_t>(it - refs_.begin());
  if (nearest == refs_.size() ||
      (nearest > 0 && s_bar - refs_[nearest - 1].s < refs_[nearest].s - s_bar)) {
    nearest = nearest == 0 ? 0 : nearest - 1;
  }
  const double half_step = 0.5 / static_cast<double>(refs_.size());
  for (std::size_t i = 0; i < refs_.size(); ++i) {
    if (shadowed_[i]) continue;
    const double d = std::abs(refs_[i].s - s_bar);
    if ((i == nearest && d < half_step && refs_.size() > 1) || (via.span > 0.0 && d < 0.5 * via.span + half_step)) {
      shadow.push_back(i);
    }
  }

  for (std::size_t i : shadow) shadowed_[i] = true;
  vias_.push_back(via);
  shadow_.push_back(shadow);
  try {
    if (shadow.size() > kMaxIncrementalRemovals) {
      rebuild_from(*mean_base_, params_.lambda1, mean_chol_, order_);
    } else {
      for (auto r = shadow.rbegin(); r != shadow.rend(); ++r) {
        const auto pos = std::find_if(order_.begin(), order_.end(), [&](const Key& k) {
          return !k.via && k.index == static_cast<int>(*r);
        });
        mean_chol_.remove_block(pos - order_.begin());
        order_.erase(pos);
      }
      append_via(mean_chol_, order_, via, params_.lambda1);
    }
  } catch (...) {
    vias_.pop_back();
    shadow_.pop_back();
    for (std::size_t i : shadow) shadowed_[i] = false;
    rebuild_from(*mean_base_, params_.lambda1, mean_chol_, order_);
    throw;
  }
  next_id_ = std::max(next_id_, via.id + 1);
  cov_dirty_ = true;
  refresh_weights();
  return via.id;
}

void KmpModel::remove_via_point(int id) {
  const std::size_t slot = via_slot(id);
  for (std::size_t i : shadow_[slot]) shadowed_[i] = false;
  vias_.erase(vias_.begin() + static_cast<std::ptrdiff_t>(slot));
  shadow_.erase(shadow_.begin() + static_cast<std::ptrdiff_t>(slot));
  if (vias_.empty()) {
    mean_chol_ = *mean_base_;
    order_.clear();
    for (std::size_t i = 0; i < refs_.size(); ++i) order_.push_back({false, static_cast<int>(i)});
  } else {
    rebuild_from(*mean_base_, params_.lambda1, mean_chol_, order_);
  }
  cov_dirty_ = true;
  refresh_weights();
}

void KmpModel::adapt_via_point(int id, const Vector7d& mu_new) {
  const std::size_t slot = via_slot(id);
  // Same time and precision: the factorization is unchanged, only the targets move.
  vias_[slot].mu_bar = prepare_via_pose(vias_[slot].s_bar, mu_new);
  refresh_weights();
}

void KmpModel::clear_via_points() {
  vias_.clear();
  shadow_.clear();
  shadowed_.assign(refs_.size(), false);
  mean_chol_ = *mean_base_;
  order_.clear();
  for (std::size_t i = 0; i < refs_.size(); ++i) order_.push_back({false, static_cast<int>(i)});
  cov_dirty_ = true;
  refresh_weights();
}

std::vector<KmpModel::ActiveEntry> KmpModel::active_entries() const {
  std::vector<ActiveEntry> out;
  out.reserve(order_.size());
  for (const auto& k : order_) out.push_back({s_of(k), mu_of(k), sigma_of(k)});
  return out;
}

}  // namespace skilladapt::kmp
