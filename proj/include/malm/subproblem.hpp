#pragma once

#include <string>
#include <vector>

#include "malm/kkt.hpp"
#include "malm/problem.hpp"

namespace malm {

/**
 * Which subproblem the inner Newton loop solves.
 *
 * The unified root function is
 *
 *   F(x, λ̃) = ( ∇f(x) − ∇c(x)·(λₖ + λ̃) ;  c(x) + ω·λₖ + (ω + ω̃)·λ̃ )
 *
 * which is the penalty root function for λₖ = 0, ω = 0, the ALM root function
 * for ω = 0, and the modified-ALM root function otherwise.
 */
struct MethodContext {
  enum class Variant { penalty, alm, modified_alm };

  Vector lambda_k;
  double omega = 0.0;
  double omega_tilde = 0.1;
  double nu = 1.0;
  /// Weights the first penalty term of the merit by ω̃/2 instead of 1/(2ω̃).
  /// Only meaningful for the penalty variant.
  bool omega_weighted_penalty_term = false;

  Variant variant() const;
  /// Throws UsageError unless ω̃ > 0, ν > 0, ω ≥ 0 and λₖ has size m.
  void validate(int m) const;
};

/// Primal-dual pair w = (x, λ̃).
struct Iterate {
  Vector x;
  Vector lambda_tilde;
};

/// Increment Δw = (Δx, Δλ̃).
struct IterateStep {
  Vector dx;
  Vector dlambda;

  bool is_zero() const {
    return dx.isZero(0.0) && dlambda.isZero(0.0);
  }
};

Iterate operator+(const Iterate& w, const IterateStep& dw);
IterateStep operator*(double alpha, const IterateStep& dw);

enum class SocScaling { identity, regularized_hessian };

struct InnerOptions {
  double armijo = 1e-4;
  double backtrack = 0.5;
  double alpha_min = 1e-12;
  bool soc = true;
  int max_soc = 2;
  SocScaling soc_scaling = SocScaling::identity;
};

struct NewtonDiagnostics {
  double xi = 0.0;
  Inertia inertia;
  int regularization_trials = 0;
  double pivot_ratio = 1.0;
  double backward_error = 0.0;
};

struct NewtonStep {
  IterateStep dw;
  NewtonDiagnostics diagnostics;
  /// Regularized Hessian approximation used in the step.
  Matrix B;
};

struct SocResult {
  IterateStep increment;
  bool solved = false;
  double backward_error = 0.0;
};

struct LineSearchResult {
  double alpha = 0.0;
  /// SOC steps applied to the accepted point (0 if the plain step won).
  int soc_used = 0;
  Iterate next;
  double merit = 0.0;
  std::vector<double> soc_backward_errors;
};

struct StepRecord {
  double alpha = 0.0;
  double merit_value = 0.0;
  int soc_steps_used = 0;
  double xi = 0.0;
};

enum class InnerStatus {
  converged,
  max_iterations,
  line_search_failure,
  regularization_failure
};

std::string to_string(InnerStatus status);

struct InnerResult {
  Iterate iterate;
  double residual_norm = 0.0;
  int iterations = 0;
  std::vector<StepRecord> step_history;
  InnerStatus status = InnerStatus::max_iterations;
  /// Backward error of every SOC linear solve performed.
  std::vector<double> soc_backward_errors;
  std::string message;
};

Vector residual(const Problem& problem, const MethodContext& ctx,
                const Iterate& w);

/**
 * M(x, λ̃) = f + (ω/2)‖λ̃‖² − λₖᵀc + ‖c + ωλₖ + ωλ̃‖²/(2ω̃)
 *           + ν‖c + ωλₖ + (ω + ω̃)λ̃‖²/(2ω̃)
 *
 * Constant terms of the lifted merit are dropped.
 */
double merit(const Problem& problem, const MethodContext& ctx,
             const Iterate& w);

/// Analytic directional derivative of merit at w along dw.
double merit_directional_derivative(const Problem& problem,
                                    const MethodContext& ctx, const Iterate& w,
                                    const IterateStep& dw);

/// Regularized Newton step on the unified root function; B approximates
/// ∇²ₓₓL(x, λₖ + λ̃) and the (2,2) block is −(ω + ω̃)·I.
NewtonStep newton_step(const Problem& problem, const MethodContext& ctx,
                       const Iterate& w);

/**
 * Second-order correction at a trial point: solves
 *
 *   [ S   J      ] (Δx, −Δλ̃) = −( 0 ; c(x_trial) + ωλₖ + (ω + ω̃)λ̃_trial )
 *   [ Jᵀ −(ω+ω̃)I ]
 *
 * with J = ∇c at the base point. A singular system yields solved = false.
 */
SocResult soc_step(const Problem& problem, const MethodContext& ctx,
                   const Vector& base_x, const Iterate& trial, const Matrix& S);

/// The SPD matrix used for SOC steps under the given scaling policy.
Matrix soc_scaling_matrix(SocScaling scaling, const Matrix& B);

/**
 * Backtracking Armijo search on merit along dw, with up to max_soc
 * second-order corrections of the unit step before backtracking. Throws
 * UsageError if dw is not a descent direction and LineSearchFailure when α
 * drops below alpha_min.
 */
LineSearchResult line_search(const Problem& problem, const MethodContext& ctx,
                             const Iterate& w, const IterateStep& dw,
                             const InnerOptions& options = {},
                             const Matrix& soc_matrix = Matrix());

/// Line-search Newton iteration until ‖F(w)‖₂ ≤ inner_tol.
InnerResult solve_subproblem(const Problem& problem, const MethodContext& ctx,
                             const Iterate& w0, double inner_tol, int max_iter,
                             const InnerOptions& options = {});

}  // namespace malm
