#pragma once

#include <Eigen/Core>

namespace skilladapt::kmp {

// Lower Cholesky factor of a symmetric positive-definite matrix partitioned
// into equally sized square blocks. Supports deleting a block row/column
// (rank updates of the trailing factor) and appending a new bordered block,
// both in O(n^2) instead of a full O(n^3) refactorization. Storage keeps
// spare capacity so repeated edits do not reallocate.
class BlockCholesky {
 public:
  BlockCholesky() = default;

  // Throws SolveFailure when `a` is not numerically positive definite.
  BlockCholesky(const Eigen::MatrixXd& a, int block);

  BlockCholesky(const BlockCholesky&) = default;
  BlockCholesky(BlockCholesky&&) noexcept = default;
  // Reuses the existing allocation when it is large enough.
  BlockCholesky& operator=(const BlockCholesky& other);
  BlockCholesky& operator=(BlockCholesky&&) noexcept = default;

  Eigen::Index size() const { return n_; }
  Eigen::Index blocks() const { return block_ == 0 ? 0 : n_ / block_; }
  int block() const { return block_; }
  Eigen::MatrixXd factor() const { return storage_.topLeftCorner(n_, n_); }

  void remove_block(Eigen::Index index);

  // Appends rows/columns [cross; diag] where `cross` couples the new block to
  // the existing ones. Throws SolveFailure if the Schur complement is not PD;
  // the factor is left unchanged in that case.
  void append_block(const Eigen::MatrixXd& cross, const Eigen::MatrixXd& diag);

  Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const;
  Eigen::MatrixXd solve_lower(const Eigen::MatrixXd& rhs) const;

 private:
  Eigen::MatrixXd storage_;
  Eigen::Index n_ = 0;
  int block_ = 0;
};

}  // namespace skilladapt::kmp
