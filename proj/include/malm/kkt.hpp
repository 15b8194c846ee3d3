#pragma once

#include <utility>
#include <vector>

#include "malm/ldlt.hpp"
#include "malm/problem.hpp"

namespace malm {

/**
 * Saddle-point Newton matrix
 *
 *   K = [ B    J     ]
 *       [ Jᵀ  −δ·I   ]
 *
 * with B n×n symmetric, J = ∇c(x) n×m and δ ≥ 0 the magnitude of the (2,2)
 * block (ω̃ for the penalty and ALM subproblems, ω + ω̃ for the modified
 * ALM). The second block of unknowns is −Δλ̃.
 */
struct KktSystem {
  Matrix B;
  Matrix J;
  double delta = 0.0;
  Matrix K;

  int n() const { return static_cast<int>(B.rows()); }
  int m() const { return static_cast<int>(J.cols()); }
};

/// A factored KKT matrix; immutable once built.
struct KktFactorization {
  SymmetricIndefiniteLdlt ldlt;
  int n = 0;
  int m = 0;
};

struct KktSolution {
  Vector dx;
  Vector dlambda;
};

/// Result of inertia control: the accepted B = H + ξ·I and its factorization.
struct Regularization {
  Matrix B;
  double xi = 0.0;
  Inertia inertia;
  KktFactorization factorization;
  /// Number of shifts tried, including the accepted one.
  int trials = 0;
};

inline constexpr int kMaxRegularizationTrials = 60;

KktSystem assemble(const Matrix& B, const Matrix& J, double delta);

/// Throws SingularSystemError if a pivot block is below 1e-14·‖K‖∞.
std::pair<KktFactorization, Inertia> factor_with_inertia(
    const KktSystem& system);

/// The shift sequence 0, 1e-8·(1 + ‖H‖∞), then ×10, for 60 entries.
std::vector<double> regularization_schedule(const Matrix& H);

/**
 * Smallest shift in regularization_schedule(H) for which K(H + ξI, J, δ) has
 * inertia (n, m, 0). Singular trials are treated as wrong inertia. Throws
 * RegularizationFailure when the schedule is exhausted.
 */
Regularization regularize(const Matrix& H, const Matrix& J, double delta);

/// Solves K·(dx, s) = rhs and returns dλ = −s.
KktSolution solve(const KktFactorization& factorization, const Vector& rhs);

/// ‖K·z − rhs‖∞ / (‖K‖∞·‖z‖∞ + ‖rhs‖∞); zero when both sides vanish.
double backward_error(const Matrix& K, const Vector& z, const Vector& rhs);

/// The stacked unknown (dx, −dλ) of a KKT solution.
Vector stacked_unknown(const KktSolution& solution);

}  // namespace malm
