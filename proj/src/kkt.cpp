#include "malm/kkt.hpp"

#include <cmath>
#include <string>

#include "malm/errors.hpp"

namespace malm {

namespace {

double norm_inf(const Matrix& a) {
  return a.size() == 0 ? 0.0 : a.cwiseAbs().rowwise().sum().maxCoeff();
}

}  // namespace

KktSystem assemble(const Matrix& B, const Matrix& J, double delta) {
  const auto n = B.rows();
  const auto m = J.cols();
  if (B.cols() != n || J.rows() != n) {
    throw UsageError("assemble: B is " + std::to_string(B.rows()) + "x" +
                     std::to_string(B.cols()) + ", J is " +
                     std::to_string(J.rows()) + "x" + std::to_string(J.cols()));
  }
  if (!(delta >= 0.0) || !std::isfinite(delta)) {
    throw UsageError("assemble: delta must be finite and non-negative");
  }
  if ((B - B.transpose()).cwiseAbs().maxCoeff() >
      1e-12 * (1.0 + B.cwiseAbs().maxCoeff())) {
    throw UsageError("assemble: B is not symmetric");
  }

  KktSystem system;
  system.B = 0.5 * (B + B.transpose());
  system.J = J;
  system.delta = delta;
  system.K.resize(n + m, n + m);
  system.K.topLeftCorner(n, n) = system.B;
  system.K.topRightCorner(n, m) = J;
  system.K.bottomLeftCorner(m, n) = J.transpose();
  system.K.bottomRightCorner(m, m) = -delta * Matrix::Identity(m, m);
  return system;
}

std::pair<KktFactorization, Inertia> factor_with_inertia(
    const KktSystem& system) {
  KktFactorization factorization{SymmetricIndefiniteLdlt(system.K), system.n(),
                                 system.m()};
  const Inertia inertia = factorization.ldlt.inertia();
  return {std::move(factorization), inertia};
}

std::vector<double> regularization_schedule(const Matrix& H) {
  std::vector<double> schedule;
  schedule.reserve(kMaxRegularizationTrials);
  schedule.push_back(0.0);
  double xi = 1e-8 * (1.0 + norm_inf(H));
  while (static_cast<int>(schedule.size()) < kMaxRegularizationTrials) {
    schedule.push_back(xi);
    xi *= 10.0;
  }
  return schedule;
}

Regularization regularize(const Matrix& H, const Matrix& J, double delta) {
  const int n = static_cast<int>(H.rows());
  const int m = static_cast<int>(J.cols());
  const Inertia wanted{n, m, 0};
  const std::vector<double> schedule = regularization_schedule(H);
  int trial = 0;
  for (double xi : schedule) {
    ++trial;
    Matrix B = H;
    B.diagonal().array() += xi;
    const KktSystem system = assemble(B, J, delta);
    try {
      auto [factorization, inertia] = factor_with_inertia(system);
      if (inertia == wanted) {
        return Regularization{system.B, xi, inertia, std::move(factorization),
                              trial};
      }
    } catch (const SingularSystemError&) {
      // Treated like wrong inertia; try the next shift.
    }
  }
  throw RegularizationFailure("regularize: no shift in " +
                              std::to_string(schedule.size()) +
                              " trials gave inertia (" + std::to_string(n) +
                              ", " + std::to_string(m) + ", 0)");
}

KktSolution solve(const KktFactorization& factorization, const Vector& rhs) {
  const int n = factorization.n;
  const int m = factorization.m;
  if (rhs.size() != n + m) {
    throw UsageError("solve: rhs has size " + std::to_string(rhs.size()) +
                     ", expected " + std::to_string(n + m));
  }
  const Vector z = factorization.ldlt.solve(rhs);
  return KktSolution{z.head(n), -z.tail(m)};
}

double backward_error(const Matrix& K, const Vector& z, const Vector& rhs) {
  const double residual = (K * z - rhs).lpNorm<Eigen::Infinity>();
  const double scale =
      norm_inf(K) * z.lpNorm<Eigen::Infinity>() + rhs.lpNorm<Eigen::Infinity>();
  if (scale == 0.0) return residual;
  return residual / scale;
}

Vector stacked_unknown(const KktSolution& solution) {
  Vector z(solution.dx.size() + solution.dlambda.size());
  z << solution.dx, -solution.dlambda;
  return z;
}

}  // namespace malm
