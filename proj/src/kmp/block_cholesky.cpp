#include "skilladapt/kmp/block_cholesky.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>

#include "skilladapt/error.hpp"

namespace skilladapt::kmp {
namespace {

// In-place L <- chol(L L^T + v v^T) for a lower-triangular block.
void rank_one_update(Eigen::Ref<Eigen::MatrixXd> l, Eigen::VectorXd v) {
  const Eigen::Index n = l.rows();
  for (Eigen::Index k = 0; k < n; ++k) {
    const double lkk = l(k, k);
    const double r = std::hypot(lkk, v(k));
    const double c = r / lkk;
    const double s = v(k) / lkk;
    l(k, k) = r;
    const Eigen::Index rest = n - k - 1;
    if (rest > 0) {
      l.col(k).tail(rest) = (l.col(k).tail(rest) + s * v.tail(rest)) / c;
      v.tail(rest) = c * v.tail(rest) - s * l.col(k).tail(rest);
    }
  }
}

}  // namespace

BlockCholesky::BlockCholesky(const Eigen::MatrixXd& a, int block) : block_(block) {
  if (block <= 0 || a.rows() != a.cols() || a.rows() % block != 0) {
    throw Error(ErrorCode::InvalidArgument, "matrix is not block-square");
  }
  Eigen::LLT<Eigen::MatrixXd> llt(a);
  if (llt.info() != Eigen::Success) {
    throw Error(ErrorCode::SolveFailure, "regularized Gram matrix is not positive definite");
  }
  storage_ = llt.matrixL();
  n_ = a.rows();
}

BlockCholesky& BlockCholesky::operator=(const BlockCholesky& other) {
  if (this == &other) return *this;
  block_ = other.block_;
  n_ = other.n_;
  if (storage_.rows() < n_) storage_.resize(other.storage_.rows(), other.storage_.cols());
  storage_.topLeftCorner(n_, n_) = other.storage_.topLeftCorner(n_, n_);
  return *this;
}

void BlockCholesky::remove_block(Eigen::Index index) {
  const Eigen::Index n = n_;
  const Eigen::Index b = block_;
  const Eigen::Index p = index * b;
  if (index < 0 || p + b > n) throw Error(ErrorCode::InvalidArgument, "block index out of range");
  const Eigen::Index m = n - p - b;

  const Eigen::MatrixXd removed = storage_.block(p + b, p, m, b);
  double* data = storage_.data();
  const Eigen::Index ld = storage_.rows();
  // Shift the rows below the removed block up, then the trailing block left.
  // Destinations always precede sources, so forward copies are safe.
  for (Eigen::Index j = 0; j < p; ++j) {
    double* col = data + j * ld;
    std::copy(col + p + b, col + n, col + p);
  }
  for (Eigen::Index j = 0; j < m; ++j) {
    const double* src = data + (p + b + j) * ld;
    double* dst = data + (p + j) * ld;
    std::fill(dst + p, dst + p + j, 0.0);
    std::copy(src + p + b + j, src + n, dst + p + j);
  }
  n_ = n - b;
  auto trailing = storage_.block(p, p, m, m);
  for (Eigen::Index j = 0; j < b; ++j) rank_one_update(trailing, removed.col(j));
}

void BlockCholesky::append_block(const Eigen::MatrixXd& cross, const Eigen::MatrixXd& diag) {
  const Eigen::Index n = n_;
  const Eigen::Index b = block_;
  if (cross.rows() != n || cross.cols() != b || diag.rows() != b || diag.cols() != b) {
    throw Error(ErrorCode::InvalidArgument, "appended block has the wrong shape");
  }
  const Eigen::MatrixXd w = n > 0 ? solve_lower(cross) : Eigen::MatrixXd(0, b);
  Eigen::MatrixXd schur = diag - w.transpose() * w;
  schur = 0.5 * (schur + schur.transpose()).eval();
  Eigen::LLT<Eigen::MatrixXd> llt(schur);
  if (llt.info() != Eigen::Success) {
    throw Error(ErrorCode::SolveFailure, "appended block makes the Gram matrix indefinite");
  }
  if (storage_.rows() < n + b) {
    const Eigen::Index cap = n + b + std::max<Eigen::Index>(8 * b, (n / 8) / b * b);
    Eigen::MatrixXd grown(cap, cap);
    grown.topLeftCorner(n, n) = storage_.topLeftCorner(n, n);
    storage_ = std::move(grown);
  }
  storage_.block(0, n, n, b).setZero();
  storage_.block(n, 0, b, n) = w.transpose();
  storage_.block(n, n, b, b) = llt.matrixL();
  storage_.block(n, n, b, b).triangularView<Eigen::StrictlyUpper>().setZero();
  n_ = n + b;
}

Eigen::VectorXd BlockCholesky::solve(const Eigen::VectorXd& rhs) const {
  const auto lower = storage_.topLeftCorner(n_, n_).triangularView<Eigen::Lower>();
  Eigen::VectorXd y = lower.solve(rhs);
  return lower.transpose().solve(y);
}

Eigen::MatrixXd BlockCholesky::solve_lower(const Eigen::MatrixXd& rhs) const {
  return storage_.topLeftCorner(n_, n_).triangularView<Eigen::Lower>().solve(rhs);
}

}  // namespace skilladapt::kmp
