#include "malm/catalog.hpp"

#include <random>

#include <Eigen/Cholesky>
#include <Eigen/LU>
#include <Eigen/SVD>

#include "malm/errors.hpp"

namespace malm {

namespace {

ProblemCatalogEntry make_quad1() {
  ProblemFunctions fns;
  fns.objective = [](const Vector& x) { return 0.5 * x(0) * x(0); };
  fns.constraints = [](const Vector& x) {
    return Vector::Constant(1, x(0) - 1.0);
  };
  fns.objective_gradient = [](const Vector& x) { return Vector(x); };
  fns.constraint_jacobian = [](const Vector&) {
    return Matrix::Constant(1, 1, 1.0);
  };
  fns.lagrangian_hessian = [](const Vector&, const Vector&) {
    return Matrix::Constant(1, 1, 1.0);
  };
  ProblemCatalogEntry entry{Problem("QUAD1", 1, 1, std::move(fns)), {}, {}};
  // x + (x − 1)/ω = 0
  entry.merit_solution = [](double omega) {
    return Vector::Constant(1, 1.0 / (1.0 + omega));
  };
  entry.constrained_solution =
      ConstrainedSolution{Vector::Constant(1, 1.0), Vector::Constant(1, 1.0)};
  return entry;
}

ProblemCatalogEntry make_rosen_circle() {
  ProblemFunctions fns;
  fns.objective = [](const Vector& x) {
    const double a = 1.0 - x(0);
    const double b = x(1) - x(0) * x(0);
    return a * a + 100.0 * b * b;
  };
  fns.constraints = [](const Vector& x) {
    return Vector::Constant(1, x(0) * x(0) + x(1) * x(1) - 2.0);
  };
  fns.objective_gradient = [](const Vector& x) {
    const double b = x(1) - x(0) * x(0);
    Vector g(2);
    g << -2.0 * (1.0 - x(0)) - 400.0 * x(0) * b, 200.0 * b;
    return g;
  };
  fns.constraint_jacobian = [](const Vector& x) {
    Matrix jac(2, 1);
    jac << 2.0 * x(0), 2.0 * x(1);
    return jac;
  };
  fns.lagrangian_hessian = [](const Vector& x, const Vector& y) {
    Matrix h(2, 2);
    h << 2.0 - 400.0 * (x(1) - x(0) * x(0)) + 800.0 * x(0) * x(0),
        -400.0 * x(0), -400.0 * x(0), 200.0;
    h.diagonal().array() -= 2.0 * y(0);
    return h;
  };
  Vector start(2);
  start << -1.2, 1.0;
  ProblemCatalogEntry entry{
      Problem("ROSEN-CIRCLE", 2, 1, std::move(fns), start), {}, {}};
  // The unconstrained minimizer lies on the circle, so it is stationary for
  // every merit weight.
  entry.merit_solution = [](double) { return Vector::Ones(2).eval(); };
  entry.constrained_solution =
      ConstrainedSolution{Vector::Ones(2), Vector::Zero(1)};
  return entry;
}

ProblemCatalogEntry make_lsq_over() {
  ProblemFunctions fns;
  fns.objective = [](const Vector&) { return 0.0; };
  fns.constraints = [](const Vector& x) {
    Vector c(2);
    c << x(0) - 1.0, x(0) - 2.0;
    return c;
  };
  fns.objective_gradient = [](const Vector&) { return Vector::Zero(1).eval(); };
  fns.constraint_jacobian = [](const Vector&) {
    return Matrix::Ones(1, 2).eval();
  };
  fns.lagrangian_hessian = [](const Vector&, const Vector&) {
    return Matrix::Zero(1, 1).eval();
  };
  ProblemCatalogEntry entry{Problem("LSQ-OVER", 1, 2, std::move(fns)), {}, {}};
  entry.merit_solution = [](double) { return Vector::Constant(1, 1.5); };
  return entry;
}

}  // namespace

ProblemCatalogEntry random_quadratic_problem(int n, int m,
                                             std::uint64_t seed) {
  if (n < 1 || m < 1) {
    throw UsageError("random_quadratic_problem: n and m must be at least 1");
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  auto random_matrix = [&](int rows, int cols) {
    Matrix a(rows, cols);
    for (int j = 0; j < cols; ++j) {
      for (int i = 0; i < rows; ++i) {
        a(i, j) = unit(rng);
      }
    }
    return a;
  };

  const Matrix root = random_matrix(n, n);
  Matrix q = root.transpose() * root / n;
  q.diagonal().array() += 0.5;
  q = (0.5 * (q + q.transpose())).eval();
  const Vector g = random_matrix(n, 1);
  Matrix a = random_matrix(n, m);
  const Vector b = random_matrix(m, 1);
  if (m <= n) {
    while (Eigen::JacobiSVD<Matrix>(a).singularValues().minCoeff() < 0.1) {
      a.topRows(m).diagonal().array() += 0.5;
    }
  }

  ProblemFunctions fns;
  fns.objective = [q, g](const Vector& x) {
    return 0.5 * x.dot(q * x) + g.dot(x);
  };
  fns.constraints = [a, b](const Vector& x) -> Vector {
    return a.transpose() * x - b;
  };
  fns.objective_gradient = [q, g](const Vector& x) -> Vector {
    return q * x + g;
  };
  fns.constraint_jacobian = [a](const Vector&) { return a; };
  fns.lagrangian_hessian = [q](const Vector&, const Vector&) { return q; };

  Vector start(n);
  for (int i = 0; i < n; ++i) {
    start(i) = unit(rng);
  }

  ProblemCatalogEntry entry{
      Problem("RANDQP", n, m, std::move(fns), start), {}, {}};

  // Stationarity of the merit function scaled by ω:
  //   (ωQ + AAᵀ)x = Ab − ωg.
  entry.merit_solution = [q, g, a, b](double omega) -> Vector {
    Matrix k = omega * q + a * a.transpose();
    const Vector rhs = a * b - omega * g;
    const Eigen::LDLT<Matrix> ldlt(k);
    Vector x = ldlt.solve(rhs);
    x += ldlt.solve(rhs - k * x);
    return x;
  };
  if (m <= n) {
    Matrix k(n + m, n + m);
    k << q, -a, a.transpose(), Matrix::Zero(m, m);
    Vector rhs(n + m);
    rhs << -g, b;
    const Vector sol = Eigen::FullPivLU<Matrix>(k).solve(rhs);
    entry.constrained_solution = ConstrainedSolution{sol.head(n), sol.tail(m)};
  }
  return entry;
}

ProblemCatalogEntry builtin_problem(std::string_view name,
                                    std::uint64_t seed) {
  if (name == "QUAD1") return make_quad1();
  if (name == "ROSEN-CIRCLE") return make_rosen_circle();
  if (name == "LSQ-OVER") return make_lsq_over();
  if (name == "RANDQP") return random_quadratic_problem(4, 2, seed);
  throw UsageError("unknown problem '" + std::string(name) + "'");
}

std::vector<std::string> catalog_names() {
  return {"QUAD1", "ROSEN-CIRCLE", "LSQ-OVER", "RANDQP"};
}

}  // namespace malm
