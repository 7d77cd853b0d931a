#pragma once

#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "skilladapt/kmp/block_cholesky.hpp"
#include "skilladapt/kmp/types.hpp"

namespace skilladapt::kmp {

enum class KernelFamily { matern52, rbf };

struct KernelConfig {
  KernelFamily family = KernelFamily::matern52;
  double length_scale = 0.1;

  // Stationary kernel value at distance r >= 0.
  double operator()(double r) const;
};

struct KmpParams {
  KernelConfig kernel;
  double lambda1 = 0.1;  // mean regularizer
  double lambda2 = 1.0;  // covariance regularizer
};

inline constexpr double kDefaultViaPrecision = 1e-8;

// Kernelized movement primitive over normalized time s in [0, 1] with a
// 7-D pose output. The mean is k*(K + lambda1 Sigma)^-1 mu over the active
// set (reference points minus shadowed ones, plus via-points); covariance
// uses the lambda2-regularized form (N / lambda2)(k** - k*(K + lambda2 Sigma)^-1 k*^T).
//
// Not thread-safe: covariance queries lazily build a second factorization.
class KmpModel {
 public:
  KmpModel(std::vector<ReferencePoint> refs, KmpParams params = {});

  Vector7d predict_mean(double s) const;
  Matrix7d predict_covariance(double s) const;
  // One triangular solve for all query points.
  std::vector<Matrix7d> predict_covariances(std::span<const double> s) const;

  // A reference within half a grid step of s_bar is superseded; with
  // span > 0 so is every reference with |s - s_bar| < span / 2.
  int add_via_point(double s_bar, const Vector7d& mu_bar, double gamma = kDefaultViaPrecision,
                    ViaSource source = ViaSource::graphical, double span = 0.0);
  // Re-inserts a via-point keeping its id (model import).
  int restore_via_point(const ViaPoint& via);
  void remove_via_point(int id);
  void adapt_via_point(int id, const Vector7d& mu_new);
  void clear_via_points();

  const std::vector<ReferencePoint>& references() const { return refs_; }
  const std::vector<ViaPoint>& via_points() const { return vias_; }
  const ViaPoint& via_point(int id) const;
  // Indices of the references superseded by a via-point, ascending.
  const std::vector<std::size_t>& shadowed_references(int id) const;
  const KmpParams& params() const { return params_; }

  struct ActiveEntry {
    double s;
    Vector7d mu;
    Matrix7d sigma;
  };
  // The data the Gram system is built from, in no particular order.
  std::vector<ActiveEntry> active_entries() const;
  std::size_t active_size() const { return order_.size(); }

 private:
  struct Key {
    bool via;
    int index;  // reference index or via-point id
  };

  double s_of(const Key& k) const;
  Vector7d mu_of(const Key& k) const;
  Matrix7d sigma_of(const Key& k) const;
  std::size_t via_slot(int id) const;

  BlockCholesky factor_base(double lambda) const;
  BlockCholesky factor_keys(double lambda, const std::vector<Key>& order) const;
  void append_via(BlockCholesky& chol, std::vector<Key>& order, const ViaPoint& via,
                  double lambda) const;
  void rebuild_from(const BlockCholesky& base, double lambda, BlockCholesky& chol,
                    std::vector<Key>& order) const;
  void refresh_weights();
  void ensure_covariance_factor() const;
  int insert_via(ViaPoint via);
  Vector7d prepare_via_pose(double s_bar, const Vector7d& mu) const;

  std::vector<ReferencePoint> refs_;
  KmpParams params_;
  std::vector<ViaPoint> vias_;
  std::vector<std::vector<std::size_t>> shadow_;  // parallel to vias_
  std::vector<bool> shadowed_;                     // parallel to refs_
  int next_id_ = 1;

  std::shared_ptr<const BlockCholesky> mean_base_;
  BlockCholesky mean_chol_;
  std::vector<Key> order_;
  std::vector<double> active_s_;
  Eigen::MatrixXd weights_;  // 7 x active, column j pairs with active_s_[j]

  mutable std::shared_ptr<const BlockCholesky> cov_base_;
  mutable BlockCholesky cov_chol_;
  mutable std::vector<Key> cov_order_;
  mutable bool cov_dirty_ = true;
};

}  // namespace skilladapt::kmp
