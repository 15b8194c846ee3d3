#pragma once

#include <functional>
#include <memory>
#include <string>

#include <Eigen/Core>

namespace malm {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/**
 * Callbacks describing f: ℝⁿ → ℝ and c: ℝⁿ → ℝᵐ.
 *
 * Only f and c are mandatory. Missing derivatives are replaced by finite
 * differences. The constraint Jacobian is stored column-per-constraint, i.e.
 * ∇c(x) is n×m with column j equal to ∇cⱼ(x). The Hessian callback receives a
 * full multiplier vector y and returns ∇²ₓₓL(x, y) = ∇²f(x) − Σⱼ yⱼ∇²cⱼ(x).
 *
 * Callbacks must be pure and reentrant. f and c are assumed twice continuously
 * differentiable on the region the solver visits.
 */
struct ProblemFunctions {
  std::function<double(const Vector&)> objective;
  std::function<Vector(const Vector&)> constraints;
  std::function<Vector(const Vector&)> objective_gradient;
  std::function<Matrix(const Vector&)> constraint_jacobian;
  std::function<Matrix(const Vector&, const Vector&)> lagrangian_hessian;
};

/// Evaluation tallies; shared by a counting wrapper for the length of one run.
struct EvaluationCounts {
  long objective = 0;
  long constraints = 0;
  long gradient = 0;
  long jacobian = 0;
  long hessian = 0;

  long total() const {
    return objective + constraints + gradient + jacobian + hessian;
  }
};

/**
 * An evaluable problem: objective f, equality constraints c, derivatives.
 *
 * All accessors validate the output dimension and finiteness of the callback
 * results; m > n is allowed.
 */
class Problem {
 public:
  Problem(std::string name, int n, int m, ProblemFunctions functions,
          Vector initial_point = Vector());

  const std::string& name() const { return name_; }
  int n() const { return n_; }
  int m() const { return m_; }
  const Vector& initial_point() const { return initial_point_; }
  const ProblemFunctions& functions() const { return functions_; }

  bool has_analytic_gradients() const {
    return static_cast<bool>(functions_.objective_gradient) &&
           static_cast<bool>(functions_.constraint_jacobian);
  }
  bool has_analytic_hessian() const {
    return static_cast<bool>(functions_.lagrangian_hessian);
  }

  double objective(const Vector& x) const;
  Vector constraints(const Vector& x) const;
  /// ∇f(x), analytic or central differences.
  Vector gradient(const Vector& x) const;
  /// ∇c(x) as an n×m matrix, analytic or central differences.
  Matrix jacobian(const Vector& x) const;
  /// ∇²ₓₓL(x, y), symmetrized so that H == Hᵀ bitwise.
  Matrix hessian(const Vector& x, const Vector& y) const;

 private:
  void check_point(const Vector& x) const;
  void check_multiplier(const Vector& y) const;

  std::string name_;
  int n_;
  int m_;
  ProblemFunctions functions_;
  Vector initial_point_;
};

/// L(x, y) = f(x) − yᵀc(x).
double eval_lagrangian(const Problem& problem, const Vector& x,
                       const Vector& y);

/// Central-difference ∇f with hᵢ = √ε·(1 + |xᵢ|).
Vector fd_gradient(const Problem& problem, const Vector& x);

/// Central-difference ∇c (n×m, one column per constraint), same step rule.
Matrix fd_jacobian(const Problem& problem, const Vector& x);

/// Forward differences of ∇ₓL(x, y), symmetrized.
Matrix fd_hessian(const Problem& problem, const Vector& x, const Vector& y);

/// Returns a copy of problem whose callbacks increment *counts.
Problem with_evaluation_counter(const Problem& problem,
                                std::shared_ptr<EvaluationCounts> counts);

}  // namespace malm
