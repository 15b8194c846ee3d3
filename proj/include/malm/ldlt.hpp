#pragma once

#include <vector>

#include <Eigen/Core>

namespace malm {

/// Eigenvalue sign counts of a symmetric matrix.
struct Inertia {
  int positive = 0;
  int negative = 0;
  int zero = 0;

  friend bool operator==(const Inertia&, const Inertia&) = default;
};

/**
 * Dense symmetric indefinite factorization P·A·Pᵀ = L·D·Lᵀ with Bunch–Kaufman
 * partial pivoting. L is unit lower triangular and D is block diagonal with
 * 1×1 and 2×2 blocks, from which the inertia of A follows by Sylvester's law.
 *
 * Construction throws SingularSystemError when a pivot block has an
 * eigenvalue of magnitude below singular_tolerance·‖A‖∞.
 */
class SymmetricIndefiniteLdlt {
 public:
  explicit SymmetricIndefiniteLdlt(const Eigen::MatrixXd& a,
                                   double singular_tolerance = 1e-14);

  /// Solves A·z = rhs, with one step of iterative refinement.
  Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const;

  int size() const { return static_cast<int>(perm_.size()); }
  const Inertia& inertia() const { return inertia_; }
  int two_by_two_blocks() const { return two_by_two_blocks_; }

  /// Largest over smallest pivot eigenvalue magnitude. A rough conditioning
  /// indicator, not a bound.
  double pivot_ratio() const { return pivot_ratio_; }

  const Eigen::MatrixXd& matrix() const { return original_; }

 private:
  Eigen::VectorXd solve_once(const Eigen::VectorXd& rhs) const;

  Eigen::MatrixXd original_;
  Eigen::MatrixXd lower_;
  Eigen::VectorXd diag_;
  // offdiag_(k) is D(k+1, k) when a 2×2 block starts at k, zero otherwise.
  Eigen::VectorXd offdiag_;
  std::vector<int> block_start_;
  std::vector<int> block_size_;
  // Position k of the permuted system holds original index perm_[k].
  std::vector<int> perm_;
  Inertia inertia_;
  int two_by_two_blocks_ = 0;
  double pivot_ratio_ = 1.0;
};

}  // namespace malm
