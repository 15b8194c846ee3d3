#include "malm/ldlt.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <utility>

#include "malm/errors.hpp"

namespace malm {

namespace {

// Bunch–Kaufman growth-bounding constant (1 + √17)/8.
const double kAlpha = (1.0 + std::sqrt(17.0)) / 8.0;

struct BlockEigenvalues {
  double small;
  double large;
};

BlockEigenvalues block_eigenvalues(double a, double b, double c) {
  const double mean = 0.5 * (a + c);
  const double radius = std::hypot(0.5 * (a - c), b);
  const double e1 = mean - radius;
  const double e2 = mean + radius;
  return {std::min(std::abs(e1), std::abs(e2)),
          std::max(std::abs(e1), std::abs(e2))};
}

void symmetric_swap(Eigen::MatrixXd& a, int p, int q) {
  a.row(p).swap(a.row(q));
  a.col(p).swap(a.col(q));
}

}  // namespace

SymmetricIndefiniteLdlt::SymmetricIndefiniteLdlt(const Eigen::MatrixXd& a,
                                                 double singular_tolerance)
    : original_(a) {
  const int size = static_cast<int>(a.rows());
  if (a.cols() != size) {
    throw UsageError("SymmetricIndefiniteLdlt: matrix is not square");
  }
  lower_ = Eigen::MatrixXd::Identity(size, size);
  diag_ = Eigen::VectorXd::Zero(size);
  offdiag_ = Eigen::VectorXd::Zero(size);
  perm_.resize(size);
  for (int i = 0; i < size; ++i) perm_[i] = i;

  const double norm_inf =
      size == 0 ? 0.0 : a.cwiseAbs().rowwise().sum().maxCoeff();
  const double threshold = singular_tolerance * norm_inf;
  if (size > 0 && !(norm_inf > 0.0)) {
    throw SingularSystemError("SymmetricIndefiniteLdlt: zero matrix");
  }

  Eigen::MatrixXd work = a;
  double smallest = std::numeric_limits<double>::infinity();
  double largest = 0.0;

  int k = 0;
  while (k < size) {
    const double absakk = std::abs(work(k, k));
    int imax = k;
    double colmax = 0.0;
    for (int i = k + 1; i < size; ++i) {
      if (std::abs(work(i, k)) > colmax) {
        colmax = std::abs(work(i, k));
        imax = i;
      }
    }

    int block = 1;
    int pivot = k;
    if (std::max(absakk, colmax) <= threshold) {
      throw SingularSystemError("SymmetricIndefiniteLdlt: pivot column " +
                                std::to_string(k) + " is numerically zero");
    }
    if (absakk < kAlpha * colmax) {
      double rowmax = 0.0;
      for (int j = k; j < size; ++j) {
        if (j != imax) rowmax = std::max(rowmax, std::abs(work(imax, j)));
      }
      if (absakk * rowmax >= kAlpha * colmax * colmax) {
        pivot = k;
      } else if (std::abs(work(imax, imax)) >= kAlpha * rowmax) {
        pivot = imax;
      } else {
        pivot = imax;
        block = 2;
      }
    }

    const int target = k + block - 1;
    if (pivot != target) {
      symmetric_swap(work, target, pivot);
      if (k > 0) {
        lower_.row(target).head(k).swap(lower_.row(pivot).head(k));
      }
      std::swap(perm_[target], perm_[pivot]);
    }

    const int rest = size - k - block;
    if (block == 1) {
      const double d = work(k, k);
      if (std::abs(d) <= threshold) {
        throw SingularSystemError("SymmetricIndefiniteLdlt: 1x1 pivot " +
                                  std::to_string(k) + " is numerically zero");
      }
      diag_(k) = d;
      block_start_.push_back(k);
      block_size_.push_back(1);
      if (d > 0) {
        ++inertia_.positive;
      } else {
        ++inertia_.negative;
      }
      smallest = std::min(smallest, std::abs(d));
      largest = std::max(largest, std::abs(d));
      if (rest > 0) {
        const Eigen::VectorXd col = work.col(k).tail(rest);
        const Eigen::VectorXd l = col / d;
        work.bottomRightCorner(rest, rest).noalias() -= l * col.transpose();
        lower_.col(k).tail(rest) = l;
      }
    } else {
      const double d11 = work(k, k);
      const double d21 = work(k + 1, k);
      const double d22 = work(k + 1, k + 1);
      const BlockEigenvalues eig = block_eigenvalues(d11, d21, d22);
      if (eig.small <= threshold) {
        throw SingularSystemError("SymmetricIndefiniteLdlt: 2x2 pivot " +
                                  std::to_string(k) + " is numerically zero");
      }
      diag_(k) = d11;
      diag_(k + 1) = d22;
      offdiag_(k) = d21;
      block_start_.push_back(k);
      block_size_.push_back(2);
      ++two_by_two_blocks_;
      const double det = d11 * d22 - d21 * d21;
      if (det < 0) {
        ++inertia_.positive;
        ++inertia_.negative;
      } else if (d11 + d22 > 0) {
        inertia_.positive += 2;
      } else {
        inertia_.negative += 2;
      }
      smallest = std::min(smallest, eig.small);
      largest = std::max(largest, eig.large);
      if (rest > 0) {
        Eigen::Matrix2d d_inv;
        d_inv << d22, -d21, -d21, d11;
        d_inv /= det;
        const Eigen::MatrixXd cols = work.block(k + 2, k, rest, 2);
        const Eigen::MatrixXd l = cols * d_inv;
        work.bottomRightCorner(rest, rest).noalias() -= l * cols.transpose();
        lower_.block(k + 2, k, rest, 2) = l;
      }
    }
    if (rest > 0) {
      auto trailing = work.bottomRightCorner(rest, rest);
      trailing.triangularView<Eigen::StrictlyUpper>() = trailing.transpose();
    }
    k += block;
  }
  pivot_ratio_ = size == 0 ? 1.0 : largest / smallest;
}

Eigen::VectorXd SymmetricIndefiniteLdlt::solve_once(
    const Eigen::VectorXd& rhs) const {
  const int size = this->size();
  Eigen::VectorXd y(size);
  for (int k = 0; k < size; ++k) y(k) = rhs(perm_[k]);
  lower_.triangularView<Eigen::UnitLower>().solveInPlace(y);
  for (std::size_t blk = 0; blk < block_start_.size(); ++blk) {
    const int start = block_start_[blk];
    if (block_size_[blk] == 1) {
      y(start) /= diag_(start);
      continue;
    }
    const double a = diag_(start);
    const double b = offdiag_(start);
    const double c = diag_(start + 1);
    const double det = a * c - b * b;
    const double y0 = y(start);
    const double y1 = y(start + 1);
    y(start) = (c * y0 - b * y1) / det;
    y(start + 1) = (a * y1 - b * y0) / det;
  }
  lower_.transpose().triangularView<Eigen::UnitUpper>().solveInPlace(y);
  Eigen::VectorXd z(size);
  for (int k = 0; k < size; ++k) z(perm_[k]) = y(k);
  return z;
}

Eigen::VectorXd SymmetricIndefiniteLdlt::solve(
    const Eigen::VectorXd& rhs) const {
  if (rhs.size() != size()) {
    throw UsageError("SymmetricIndefiniteLdlt::solve: dimension mismatch");
  }
  Eigen::VectorXd z = solve_once(rhs);
  const Eigen::VectorXd r = rhs - original_ * z;
  z += solve_once(r);
  return z;
}

}  // namespace malm
