#include "malm/subproblem.hpp"

#include <cmath>
#include <limits>

#include <Eigen/Cholesky>

#include "malm/errors.hpp"

namespace malm {

namespace {

void check_iterate(const Problem& problem, const Iterate& w) {
  if (w.x.size() != problem.n() || w.lambda_tilde.size() != problem.m()) {
    throw UsageError("iterate dimensions do not match problem '" +
                     problem.name() + "'");
  }
}

void check_step(const Problem& problem, const IterateStep& dw) {
  if (dw.dx.size() != problem.n() || dw.dlambda.size() != problem.m()) {
    throw UsageError("step dimensions do not match problem '" +
                     problem.name() + "'");
  }
}

// Weight of ‖c + ωλₖ + ωλ̃‖².
double feasibility_weight(const MethodContext& ctx) {
  if (ctx.omega_weighted_penalty_term) return ctx.omega_tilde / 2.0;
  return 1.0 / (2.0 * ctx.omega_tilde);
}

// Merit comparisons allow for rounding in the merit value itself.
double merit_noise(double value) {
  return 10.0 * std::numeric_limits<double>::epsilon() *
         std::max(1.0, std::abs(value));
}

double safe_merit(const Problem& problem, const MethodContext& ctx,
                  const Iterate& w) {
  try {
    return merit(problem, ctx, w);
  } catch (const EvaluationError&) {
    return std::numeric_limits<double>::infinity();
  }
}

double safe_target_norm(const Problem& problem, const MethodContext& ctx,
                        const Iterate& w) {
  try {
    return residual(problem, ctx, w).tail(problem.m()).norm();
  } catch (const EvaluationError&) {
    return std::numeric_limits<double>::infinity();
  }
}

}  // namespace

MethodContext::Variant MethodContext::variant() const {
  if (omega > 0.0) return Variant::modified_alm;
  if (lambda_k.size() == 0 || lambda_k.isZero(0.0)) return Variant::penalty;
  return Variant::alm;
}

void MethodContext::validate(int m) const {
  if (!(omega_tilde > 0.0) || !std::isfinite(omega_tilde)) {
    throw UsageError("method context: omega_tilde must be positive");
  }
  if (!(nu > 0.0) || !std::isfinite(nu)) {
    throw UsageError("method context: nu must be positive");
  }
  if (!(omega >= 0.0) || !std::isfinite(omega)) {
    throw UsageError("method context: omega must be non-negative");
  }
  if (lambda_k.size() != m) {
    throw UsageError("method context: lambda_k has size " +
                     std::to_string(lambda_k.size()) + ", expected " +
                     std::to_string(m));
  }
  if (omega_weighted_penalty_term && variant() != Variant::penalty) {
    throw UsageError(
        "method context: the omega-weighted penalty term applies to the "
        "penalty subproblem only");
  }
}

Iterate operator+(const Iterate& w, const IterateStep& dw) {
  return Iterate{w.x + dw.dx, w.lambda_tilde + dw.dlambda};
}

IterateStep operator*(double alpha, const IterateStep& dw) {
  return IterateStep{alpha * dw.dx, alpha * dw.dlambda};
}

std::string to_string(InnerStatus status) {
  switch (status) {
    case InnerStatus::converged:
      return "converged";
    case InnerStatus::max_iterations:
      return "max_iterations";
    case InnerStatus::line_search_failure:
      return "line_search_failure";
    case InnerStatus::regularization_failure:
      return "regularization_failure";
  }
  return "unknown";
}

Vector residual(const Problem& problem, const MethodContext& ctx,
                const Iterate& w) {
  check_iterate(problem, w);
  ctx.validate(problem.m());
  const int n = problem.n();
  const int m = problem.m();
  const Vector multiplier = ctx.lambda_k + w.lambda_tilde;
  const Vector shifted = problem.constraints(w.x) + ctx.omega * ctx.lambda_k;
  Vector f(n + m);
  f.head(n) = problem.gradient(w.x) - problem.jacobian(w.x) * multiplier;
  f.tail(m) = shifted + (ctx.omega + ctx.omega_tilde) * w.lambda_tilde;
  return f;
}

double merit(const Problem& problem, const MethodContext& ctx,
             const Iterate& w) {
  check_iterate(problem, w);
  ctx.validate(problem.m());
  const Vector c = problem.constraints(w.x);
  const Vector shifted = c + ctx.omega * ctx.lambda_k;
  const Vector r1 = shifted + ctx.omega * w.lambda_tilde;
  const Vector r2 = shifted + (ctx.omega + ctx.omega_tilde) * w.lambda_tilde;
  double value = problem.objective(w.x);
  value = value + ctx.omega / 2.0 * w.lambda_tilde.squaredNorm();
  value = value - ctx.lambda_k.dot(c);
  value = value + feasibility_weight(ctx) * r1.squaredNorm();
  value = value + ctx.nu / (2.0 * ctx.omega_tilde) * r2.squaredNorm();
  return value;
}

double merit_directional_derivative(const Problem& problem,
                                    const MethodContext& ctx, const Iterate& w,
                                    const IterateStep& dw) {
  check_iterate(problem, w);
  check_step(problem, dw);
  ctx.validate(problem.m());
  const Vector c = problem.constraints(w.x);
  const Matrix J = problem.jacobian(w.x);
  const Vector shifted = c + ctx.omega * ctx.lambda_k;
  const Vector r1 = shifted + ctx.omega * w.lambda_tilde;
  const Vector r2 = shifted + (ctx.omega + ctx.omega_tilde) * w.lambda_tilde;
  const Vector dc = J.transpose() * dw.dx;
  const double delta = ctx.omega + ctx.omega_tilde;
  return problem.gradient(w.x).dot(dw.dx) +
         ctx.omega * w.lambda_tilde.dot(dw.dlambda) - ctx.lambda_k.dot(dc) +
         2.0 * feasibility_weight(ctx) * r1.dot(dc + ctx.omega * dw.dlambda) +
         ctx.nu / ctx.omega_tilde * r2.dot(dc + delta * dw.dlambda);
}

NewtonStep newton_step(const Problem& problem, const MethodContext& ctx,
                       const Iterate& w) {
  const Vector f = residual(problem, ctx, w);
  const Matrix H = problem.hessian(w.x, ctx.lambda_k + w.lambda_tilde);
  const Matrix J = problem.jacobian(w.x);
  Regularization reg = regularize(H, J, ctx.omega + ctx.omega_tilde);
  const Vector rhs = -f;
  const KktSolution sol = solve(reg.factorization, rhs);

  NewtonStep step;
  step.dw = IterateStep{sol.dx, sol.dlambda};
  step.diagnostics.xi = reg.xi;
  step.diagnostics.inertia = reg.inertia;
  step.diagnostics.regularization_trials = reg.trials;
  step.diagnostics.pivot_ratio = reg.factorization.ldlt.pivot_ratio();
  step.diagnostics.backward_error = backward_error(
      reg.factorization.ldlt.matrix(), stacked_unknown(sol), rhs);
  step.B = std::move(reg.B);
  return step;
}

SocResult soc_step(const Problem& problem, const MethodContext& ctx,
                   const Vector& base_x, const Iterate& trial,
                   const Matrix& S) {
  check_iterate(problem, trial);
  if (base_x.size() != problem.n() || S.rows() != problem.n() ||
      S.cols() != problem.n()) {
    throw UsageError("soc_step: dimension mismatch");
  }
  const int n = problem.n();
  const int m = problem.m();
  const Matrix J = problem.jacobian(base_x);
  Vector rhs = Vector::Zero(n + m);
  rhs.tail(m) = -residual(problem, ctx, trial).tail(m);

  SocResult result;
  try {
    const KktSystem system = assemble(S, J, ctx.omega + ctx.omega_tilde);
    const auto [factorization, inertia] = factor_with_inertia(system);
    const KktSolution sol = solve(factorization, rhs);
    result.increment = IterateStep{sol.dx, sol.dlambda};
    result.backward_error =
        backward_error(system.K, stacked_unknown(sol), rhs);
    result.solved = result.increment.dx.allFinite() &&
                    result.increment.dlambda.allFinite();
  } catch (const SingularSystemError&) {
    result.solved = false;
  }
  if (!result.solved) {
    result.increment = IterateStep{Vector::Zero(n), Vector::Zero(m)};
  }
  return result;
}

Matrix soc_scaling_matrix(SocScaling scaling, const Matrix& B) {
  const auto n = B.rows();
  if (scaling == SocScaling::identity) return Matrix::Identity(n, n);
  for (double xi : regularization_schedule(B)) {
    Matrix S = B;
    S.diagonal().array() += xi;
    if (Eigen::LLT<Matrix>(S).info() == Eigen::Success) return S;
  }
  return Matrix::Identity(n, n);
}

LineSearchResult line_search(const Problem& problem, const MethodContext& ctx,
                             const Iterate& w, const IterateStep& dw,
                             const InnerOptions& options,
                             const Matrix& soc_matrix) {
  check_step(problem, dw);
  const double m0 = merit(problem, ctx, w);
  const double slope = merit_directional_derivative(problem, ctx, w, dw);
  if (!(slope < 0.0)) {
    throw UsageError("line_search: step is not a descent direction (slope " +
                     std::to_string(slope) + ")");
  }
  const double noise = merit_noise(m0);
  auto sufficient = [&](double value, double alpha) {
    return value <= m0 + options.armijo * alpha * slope + noise;
  };

  LineSearchResult result;
  const Iterate full = w + dw;
  const double m_full = safe_merit(problem, ctx, full);
  if (sufficient(m_full, 1.0)) {
    result.alpha = 1.0;
    result.next = full;
    result.merit = m_full;
    return result;
  }

  if (options.soc && options.max_soc > 0 &&
      safe_target_norm(problem, ctx, full) >
          safe_target_norm(problem, ctx, w)) {
    const Matrix S = soc_matrix.size() == 0
                         ? Matrix::Identity(problem.n(), problem.n())
                         : soc_matrix;
    Iterate corrected = full;
    for (int attempt = 1; attempt <= options.max_soc; ++attempt) {
      SocResult soc;
      try {
        soc = soc_step(problem, ctx, w.x, corrected, S);
      } catch (const EvaluationError&) {
        break;
      }
      if (!soc.solved) break;
      result.soc_backward_errors.push_back(soc.backward_error);
      corrected = corrected + soc.increment;
      const double m_soc = safe_merit(problem, ctx, corrected);
      if (sufficient(m_soc, 1.0)) {
        result.alpha = 1.0;
        result.soc_used = attempt;
        result.next = corrected;
        result.merit = m_soc;
        return result;
      }
    }
  }

  for (double alpha = options.backtrack; alpha >= options.alpha_min;
       alpha *= options.backtrack) {
    const Iterate trial = w + alpha * dw;
    const double value = safe_merit(problem, ctx, trial);
    if (sufficient(value, alpha)) {
      result.alpha = alpha;
      result.next = trial;
      result.merit = value;
      return result;
    }
  }
  throw LineSearchFailure("line_search: step length fell below " +
                          std::to_string(options.alpha_min));
}

InnerResult solve_subproblem(const Problem& problem, const MethodContext& ctx,
                             const Iterate& w0, double inner_tol, int max_iter,
                             const InnerOptions& options) {
  if (!(inner_tol > 0.0)) {
    throw UsageError("solve_subproblem: inner_tol must be positive");
  }
  if (max_iter < 0) {
    throw UsageError("solve_subproblem: max_iter must be non-negative");
  }
  InnerResult result;
  result.iterate = w0;
  for (int iter = 0;; ++iter) {
    result.iterations = iter;
    result.residual_norm = residual(problem, ctx, result.iterate).norm();
    if (result.residual_norm <= inner_tol) {
      result.status = InnerStatus::converged;
      return result;
    }
    if (iter == max_iter) {
      result.status = InnerStatus::max_iterations;
      return result;
    }

    NewtonStep step;
    try {
      step = newton_step(problem, ctx, result.iterate);
    } catch (const RegularizationFailure& e) {
      result.status = InnerStatus::regularization_failure;
      result.message = e.what();
      return result;
    } catch (const SingularSystemError& e) {
      result.status = InnerStatus::regularization_failure;
      result.message = e.what();
      return result;
    }

    LineSearchResult search;
    try {
      const Matrix S = options.soc
                           ? soc_scaling_matrix(options.soc_scaling, step.B)
                           : Matrix();
      search = line_search(problem, ctx, result.iterate, step.dw, options, S);
    } catch (const LineSearchFailure& e) {
      result.status = InnerStatus::line_search_failure;
      result.message = e.what();
      return result;
    } catch (const UsageError& e) {
      // Loss of descent, typically from rounding at a nearly stationary point.
      result.status = InnerStatus::line_search_failure;
      result.message = e.what();
      return result;
    }
    result.soc_backward_errors.insert(result.soc_backward_errors.end(),
                                      search.soc_backward_errors.begin(),
                                      search.soc_backward_errors.end());
    result.step_history.push_back(StepRecord{
        search.alpha, search.merit, search.soc_used, step.diagnostics.xi});
    result.iterate = std::move(search.next);
  }
}

}  // namespace malm
