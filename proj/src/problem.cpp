#include "malm/problem.hpp"

#include <cmath>
#include <limits>
#include <utility>

#include "malm/errors.hpp"

namespace malm {

namespace {

const double kSqrtEps = std::sqrt(std::numeric_limits<double>::epsilon());

// Larger forward step when the differenced gradient is itself a finite
// difference; otherwise the noise of the inner difference dominates.
const double kQuarticRootEps =
    std::sqrt(std::sqrt(std::numeric_limits<double>::epsilon()));

void require_finite(double value, const std::string& what) {
  if (!std::isfinite(value)) {
    throw EvaluationError(what + " returned a non-finite value");
  }
}

template <typename Derived>
void require_finite(const Eigen::MatrixBase<Derived>& value,
                    const std::string& what) {
  if (!value.allFinite()) {
    throw EvaluationError(what + " returned a non-finite value");
  }
}

std::string dims(long rows, long cols) {
  return std::to_string(rows) + "x" + std::to_string(cols);
}

}  // namespace

Problem::Problem(std::string name, int n, int m, ProblemFunctions functions,
                 Vector initial_point)
    : name_(std::move(name)),
      n_(n),
      m_(m),
      functions_(std::move(functions)),
      initial_point_(std::move(initial_point)) {
  if (n_ < 1 || m_ < 1) {
    throw UsageError("problem '" + name_ + "': n and m must be at least 1");
  }
  if (!functions_.objective || !functions_.constraints) {
    throw UsageError("problem '" + name_ +
                     "': objective and constraints are required");
  }
  if (initial_point_.size() == 0) {
    initial_point_ = Vector::Zero(n_);
  } else if (initial_point_.size() != n_) {
    throw UsageError("problem '" + name_ + "': initial point has size " +
                     std::to_string(initial_point_.size()) + ", expected " +
                     std::to_string(n_));
  }
}

void Problem::check_point(const Vector& x) const {
  if (x.size() != n_) {
    throw UsageError("problem '" + name_ + "': point has size " +
                     std::to_string(x.size()) + ", expected " +
                     std::to_string(n_));
  }
}

void Problem::check_multiplier(const Vector& y) const {
  if (y.size() != m_) {
    throw UsageError("problem '" + name_ + "': multiplier has size " +
                     std::to_string(y.size()) + ", expected " +
                     std::to_string(m_));
  }
}

double Problem::objective(const Vector& x) const {
  check_point(x);
  const double value = functions_.objective(x);
  require_finite(value, "objective");
  return value;
}

Vector Problem::constraints(const Vector& x) const {
  check_point(x);
  Vector value = functions_.constraints(x);
  if (value.size() != m_) {
    throw UsageError("problem '" + name_ + "': constraints returned size " +
                     std::to_string(value.size()));
  }
  require_finite(value, "constraints");
  return value;
}

Vector Problem::gradient(const Vector& x) const {
  check_point(x);
  if (!functions_.objective_gradient) {
    return fd_gradient(*this, x);
  }
  Vector value = functions_.objective_gradient(x);
  if (value.size() != n_) {
    throw UsageError("problem '" + name_ + "': gradient returned size " +
                     std::to_string(value.size()));
  }
  require_finite(value, "gradient");
  return value;
}

Matrix Problem::jacobian(const Vector& x) const {
  check_point(x);
  if (!functions_.constraint_jacobian) {
    return fd_jacobian(*this, x);
  }
  Matrix value = functions_.constraint_jacobian(x);
  if (value.rows() != n_ || value.cols() != m_) {
    throw UsageError("problem '" + name_ + "': Jacobian returned " +
                     dims(value.rows(), value.cols()) + ", expected " +
                     dims(n_, m_));
  }
  require_finite(value, "constraint Jacobian");
  return value;
}

Matrix Problem::hessian(const Vector& x, const Vector& y) const {
  check_point(x);
  check_multiplier(y);
  if (!functions_.lagrangian_hessian) {
    return fd_hessian(*this, x, y);
  }
  Matrix value = functions_.lagrangian_hessian(x, y);
  if (value.rows() != n_ || value.cols() != n_) {
    throw UsageError("problem '" + name_ + "': Hessian returned " +
                     dims(value.rows(), value.cols()) + ", expected " +
                     dims(n_, n_));
  }
  require_finite(value, "Lagrangian Hessian");
  // (a + b) and (b + a) round identically, so the result is exactly
  // symmetric.
  return (0.5 * (value + value.transpose())).eval();
}

double eval_lagrangian(const Problem& problem, const Vector& x,
                       const Vector& y) {
  if (x.size() != problem.n() || y.size() != problem.m()) {
    throw UsageError("eval_lagrangian: dimension mismatch");
  }
  return problem.objective(x) - y.dot(problem.constraints(x));
}

Vector fd_gradient(const Problem& problem, const Vector& x) {
  if (x.size() != problem.n()) {
    throw UsageError("fd_gradient: dimension mismatch");
  }
  Vector g(problem.n());
  Vector probe = x;
  for (int i = 0; i < problem.n(); ++i) {
    const double h = kSqrtEps * (1.0 + std::abs(x(i)));
    probe(i) = x(i) + h;
    const double f_plus = problem.objective(probe);
    probe(i) = x(i) - h;
    const double f_minus = problem.objective(probe);
    probe(i) = x(i);
    g(i) = (f_plus - f_minus) / (2.0 * h);
  }
  return g;
}

Matrix fd_jacobian(const Problem& problem, const Vector& x) {
  if (x.size() != problem.n()) {
    throw UsageError("fd_jacobian: dimension mismatch");
  }
  Matrix jac(problem.n(), problem.m());
  Vector probe = x;
  for (int i = 0; i < problem.n(); ++i) {
    const double h = kSqrtEps * (1.0 + std::abs(x(i)));
    probe(i) = x(i) + h;
    const Vector c_plus = problem.constraints(probe);
    probe(i) = x(i) - h;
    const Vector c_minus = problem.constraints(probe);
    probe(i) = x(i);
    // Row i holds ∂c/∂xᵢ for every constraint.
    jac.row(i) = ((c_plus - c_minus) / (2.0 * h)).transpose();
  }
  return jac;
}

Matrix fd_hessian(const Problem& problem, const Vector& x, const Vector& y) {
  if (x.size() != problem.n() || y.size() != problem.m()) {
    throw UsageError("fd_hessian: dimension mismatch");
  }
  const double base_step =
      problem.has_analytic_gradients() ? kSqrtEps : kQuarticRootEps;
  auto lagrangian_gradient = [&](const Vector& point) -> Vector {
    return problem.gradient(point) - problem.jacobian(point) * y;
  };
  const Vector g0 = lagrangian_gradient(x);
  Matrix hess(problem.n(), problem.n());
  Vector probe = x;
  for (int i = 0; i < problem.n(); ++i) {
    const double h = base_step * (1.0 + std::abs(x(i)));
    probe(i) = x(i) + h;
    hess.col(i) = (lagrangian_gradient(probe) - g0) / h;
    probe(i) = x(i);
  }
  return (0.5 * (hess + hess.transpose())).eval();
}

Problem with_evaluation_counter(const Problem& problem,
                                std::shared_ptr<EvaluationCounts> counts) {
  const ProblemFunctions& base = problem.functions();
  ProblemFunctions counted;
  counted.objective = [f = base.objective, counts](const Vector& x) {
    ++counts->objective;
    return f(x);
  };
  counted.constraints = [c = base.constraints, counts](const Vector& x) {
    ++counts->constraints;
    return c(x);
  };
  if (base.objective_gradient) {
    counted.objective_gradient = [g = base.objective_gradient,
                                  counts](const Vector& x) {
      ++counts->gradient;
      return g(x);
    };
  }
  if (base.constraint_jacobian) {
    counted.constraint_jacobian = [j = base.constraint_jacobian,
                                   counts](const Vector& x) {
      ++counts->jacobian;
      return j(x);
    };
  }
  if (base.lagrangian_hessian) {
    counted.lagrangian_hessian = [h = base.lagrangian_hessian, counts](
                                     const Vector& x, const Vector& y) {
      ++counts->hessian;
      return h(x, y);
    };
  }
  return Problem(problem.name(), problem.n(), problem.m(), std::move(counted),
                 problem.initial_point());
}

}  // namespace malm
