#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "malm/problem.hpp"

namespace malm {

struct ConstrainedSolution {
  Vector x;
  Vector lambda;
};

/// A catalog problem together with whatever closed-form solutions are known.
struct ProblemCatalogEntry {
  Problem problem;
  /// ω ↦ argmin f(x) + ‖c(x)‖²/(2ω); empty when no closed form exists.
  std::function<Vector(double)> merit_solution;
  std::optional<ConstrainedSolution> constrained_solution;

  bool has_merit_solution() const { return static_cast<bool>(merit_solution); }
};

/**
 * Looks up a built-in problem by name.
 *
 *  - QUAD1:        f = x²/2, c = x − 1.
 *  - ROSEN-CIRCLE: Rosenbrock objective, c = x₁² + x₂² − 2, start (−1.2, 1).
 *  - LSQ-OVER:     f = 0, c = (x − 1, x − 2); more constraints than unknowns.
 *  - RANDQP:       random_quadratic_problem(4, 2, seed).
 *
 * Throws UsageError for unknown names.
 */
ProblemCatalogEntry builtin_problem(std::string_view name,
                                    std::uint64_t seed = 0);

std::vector<std::string> catalog_names();

/**
 * Seeded random problem: f = ½xᵀQx + gᵀx with Q ≻ 0, c = Aᵀx − b with A
 * n×m. For m ≤ n, A is shifted until its smallest singular value is at least
 * 0.1, so the constrained solution exists and is reported; for m > n no rank
 * condition is imposed and only the merit solution is known.
 */
ProblemCatalogEntry random_quadratic_problem(int n, int m, std::uint64_t seed);

}  // namespace malm
