#pragma once

#include <optional>
#include <string>
#include <vector>

#include "malm/problem.hpp"
#include "malm/subproblem.hpp"

namespace malm {

enum class Method { penalty, alm, malm };

std::string to_string(Method method);
/// Throws UsageError for anything but "penalty", "alm" or "malm".
Method parse_method(const std::string& name);

struct SolverConfig {
  Method method = Method::malm;
  /// Merit-problem parameter ω; 0 targets the constrained problem.
  double omega = 0.0;
  double omega_tilde_init = 0.1;
  double theta_omega = 0.1;
  double theta_lambda = 0.1;
  double tol = 1e-8;
  double nu = 1.0;
  /// Defaults to tol.
  std::optional<double> inner_tol;
  int max_outer = 100;
  int max_inner = 200;
  bool allow_omega_increase = true;
  /// Floor for ω̃ under repeated rejection; defaults to max{ω, 1e-12}.
  std::optional<double> omega_tilde_min;
  /// Cap for ω̃ after an accepted update; defaults to omega_tilde_init.
  std::optional<double> omega_tilde_cap;
  /// Penalty method only: weight the merit's first penalty term by ω̃/2.
  bool omega_weighted_penalty_term = false;
  InnerOptions inner;
  /// Starting point; defaults to the problem's initial point.
  std::optional<Vector> x0;

  double effective_inner_tol() const { return inner_tol.value_or(tol); }
  double effective_omega_tilde_min() const;
  double effective_omega_tilde_cap() const;

  /// Throws UsageError naming the offending field.
  void validate() const;
};

/// Outer-loop state at the start of iteration k (1-based).
struct OuterState {
  int k = 1;
  Vector lambda_k;
  double omega_tilde_k = 0.0;
  /// Acceptance metric of x₀ followed by one entry per finished iteration.
  std::vector<double> metric_history;
  Iterate w;
};

enum class Branch { accept, reject, terminal };
std::string to_string(Branch branch);

struct OuterRecord {
  int k = 0;
  /// λₖ and ω̃ₖ used for this iteration's subproblem.
  Vector lambda_k;
  double omega_tilde = 0.0;
  int inner_iterations = 0;
  InnerStatus inner_status = InnerStatus::converged;
  double norm_c = 0.0;
  double acceptance_metric = 0.0;
  double residual_norm = 0.0;
  double f_value = 0.0;
  double lambda_tilde_norm = 0.0;
  Branch branch = Branch::terminal;
  long cumulative_evaluations = 0;
};

enum class RunStatus { solved, max_outer, inner_failure };
std::string to_string(RunStatus status);

struct RunTotals {
  long inner_iterations = 0;
  EvaluationCounts evaluations;
  long soc_solves = 0;
  double max_soc_backward_error = 0.0;
};

struct RunReport {
  RunStatus status = RunStatus::max_outer;
  Method method = Method::malm;
  Vector x_final;
  /// Best multiplier estimate: λₖ + λ̃ₖ (λ̃ for the penalty method).
  Vector lambda_final;
  Vector lambda_tilde_final;
  double omega_tilde_final = 0.0;
  std::vector<OuterRecord> outer_trace;
  RunTotals totals;
  std::string message;

  int outer_iterations() const { return static_cast<int>(outer_trace.size()); }
};

/// ‖c(x) + ω·λₖ + ω·λ̃‖₂; reduces to ‖c(x)‖₂ for ω = 0.
double acceptance_metric(const Problem& problem, const Vector& lambda_k,
                         const Iterate& w, double omega);

/**
 * metric ≤ θ_λ · min(history). The first outer iteration accepts whenever its
 * metric is finite.
 */
bool acceptance_test(const OuterState& state, double metric,
                     const SolverConfig& config);

/**
 * Outer termination. For malm:
 *   max{ω + ω̃ₖ, ‖∇c(xₖ)‖₂}·‖λ̃ₖ‖₂ ≤ tol,
 * for alm the stacked KKT residual ‖(∇f − ∇c·λₖ ; c)‖₂ ≤ tol. Both also
 * require the subproblem to have converged.
 */
bool termination_test(const Problem& problem, const OuterState& state,
                      const Iterate& w_k, const SolverConfig& config,
                      InnerStatus inner_status);

/// Continuation ω̃ₖ₊₁ = max{θ_ω·ω̃ₖ, ω} until ω̃ₖ = ω.
RunReport run_penalty(const Problem& problem, const SolverConfig& config);

/// Modified ALM; with method = alm and ω = 0 this is the classical ALM.
RunReport run_malm(const Problem& problem, const SolverConfig& config);

/// Dispatches on config.method.
RunReport run_solver(const Problem& problem, const SolverConfig& config);

/// Largest singular value of ∇c(x).
double jacobian_norm(const Matrix& J);

}  // namespace malm
