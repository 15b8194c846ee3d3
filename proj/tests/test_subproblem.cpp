#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "malm/catalog.hpp"
#include "malm/errors.hpp"
#include "malm/subproblem.hpp"
#include "oracles.hpp"

using namespace malm;

namespace {

Vector vec(std::initializer_list<double> values) {
  Vector v(static_cast<Eigen::Index>(values.size()));
  Eigen::Index i = 0;
  for (double value : values) v(i++) = value;
  return v;
}

MethodContext ctx_of(const Vector& lambda_k, double omega, double omega_tilde,
                     double nu = 1.0) {
  return MethodContext{lambda_k, omega, omega_tilde, nu, false};
}

bool bitwise_equal(const Vector& a, const Vector& b) {
  return a.size() == b.size() && (a.array() == b.array()).all();
}

const Problem& quad1() {
  static const Problem p = builtin_problem("QUAD1").problem;
  return p;
}

}  // namespace

TEST_CASE("residual examples") {
  const MethodContext pen = ctx_of(vec({0.0}), 0.0, 0.1);
  const Vector r0 = residual(quad1(), pen, Iterate{vec({0.0}), vec({0.0})});
  CHECK(r0(0) == 0.0);
  CHECK(r0(1) == -1.0);

  const Vector r1 =
      residual(quad1(), pen, Iterate{vec({10.0 / 11.0}), vec({10.0 / 11.0})});
  CHECK(r1.norm() <= 1e-15);

  const double omega = 0.01;
  const MethodContext modified = ctx_of(vec({1.0 / (1.0 + omega)}), omega, 0.1);
  const Vector r2 = residual(
      quad1(), modified, Iterate{vec({1.0 / (1.0 + omega)}), vec({0.0})});
  CHECK(r2.norm() <= 1e-15);
}

TEST_CASE("merit examples") {
  const MethodContext pen = ctx_of(vec({0.0}), 0.0, 0.1);
  CHECK(merit(quad1(), pen, Iterate{vec({0.0}), vec({0.0})}) ==
        doctest::Approx(10.0));
  const double x = 10.0 / 11.0;
  CHECK(merit(quad1(), pen, Iterate{vec({x}), vec({x})}) ==
        doctest::Approx(x * x / 2.0 + 5.0 / 121.0));

  const Problem rosen = builtin_problem("ROSEN-CIRCLE").problem;
  const Vector on_circle = vec({std::sqrt(2.0), 0.0});
  CHECK(merit(rosen, ctx_of(vec({0.0}), 0.0, 0.3, 2.0),
              Iterate{on_circle, vec({0.0})}) == rosen.objective(on_circle));
}

TEST_CASE("method context classification and validation") {
  CHECK(ctx_of(vec({0.0}), 0.0, 0.1).variant() ==
        MethodContext::Variant::penalty);
  CHECK(ctx_of(vec({0.5}), 0.0, 0.1).variant() == MethodContext::Variant::alm);
  CHECK(ctx_of(vec({0.0}), 1e-3, 0.1).variant() ==
        MethodContext::Variant::modified_alm);

  const Iterate w{vec({0.0}), vec({0.0})};
  CHECK_THROWS_AS(residual(quad1(), ctx_of(vec({0.0}), 0.0, 0.0), w),
                  UsageError);
  CHECK_THROWS_AS(merit(quad1(), ctx_of(vec({0.0}), 0.0, 0.1, 0.0), w),
                  UsageError);
  CHECK_THROWS_AS(merit(quad1(), ctx_of(vec({0.0}), -1.0, 0.1), w),
                  UsageError);
  CHECK_THROWS_AS(residual(quad1(), ctx_of(vec({0.0, 1.0}), 0.0, 0.1), w),
                  UsageError);
  CHECK_THROWS_AS(
      residual(quad1(), ctx_of(vec({0.0}), 0.0, 0.1), Iterate{vec({0.0}), {}}),
      UsageError);
  MethodContext weighted = ctx_of(vec({0.5}), 0.0, 0.1);
  weighted.omega_weighted_penalty_term = true;
  CHECK_THROWS_AS(merit(quad1(), weighted, w), UsageError);
}

TEST_CASE("residual reports non-finite evaluations") {
  ProblemFunctions fns;
  fns.objective = [](const Vector& x) { return std::sqrt(x(0)); };
  fns.constraints = [](const Vector& x) { return Vector::Constant(1, x(0)); };
  fns.objective_gradient = [](const Vector& x) {
    return Vector::Constant(1, 0.5 / std::sqrt(x(0)));
  };
  fns.constraint_jacobian = [](const Vector&) { return Matrix::Ones(1, 1).eval(); };
  const Problem p("SQRT", 1, 1, fns);
  const MethodContext ctx = ctx_of(vec({0.0}), 0.0, 0.1);
  CHECK_THROWS_AS(residual(p, ctx, Iterate{vec({-1.0}), vec({0.0})}),
                  EvaluationError);
  CHECK_THROWS_AS(merit(p, ctx, Iterate{vec({-1.0}), vec({0.0})}),
                  EvaluationError);
}

TEST_CASE("reduction identities hold bitwise") {
  std::mt19937_64 rng(1000);
  const std::vector<ProblemCatalogEntry> problems = oracle::property_problems();
  std::uniform_int_distribution<std::size_t> pick(0, problems.size() - 1);
  std::uniform_int_distribution<int> n_dist(1, 6);
  std::uniform_int_distribution<int> m_dist(1, 4);
  for (int sample = 0; sample < 1000; ++sample) {
    // Alternate catalog problems with fresh random quadratics of every shape.
    const ProblemCatalogEntry entry =
        sample % 2 == 0 ? problems[pick(rng)]
                        : random_quadratic_problem(n_dist(rng), m_dist(rng),
                                                   static_cast<unsigned>(sample));
    const Problem& p = entry.problem;
    INFO(p.name() << " sample " << sample);

    const oracle::RandomState alm = oracle::random_state(p, rng, true, false);
    CHECK(bitwise_equal(
        residual(p, alm.ctx, alm.w),
        oracle::alm_residual(p, alm.ctx.lambda_k, alm.ctx.omega_tilde, alm.w)));
    CHECK(merit(p, alm.ctx, alm.w) ==
          oracle::alm_merit(p, alm.ctx.lambda_k, alm.ctx.omega_tilde,
                            alm.ctx.nu, alm.w));

    oracle::RandomState pen = oracle::random_state(p, rng, true, true);
    CHECK(bitwise_equal(
        residual(p, pen.ctx, pen.w),
        oracle::penalty_residual(p, pen.ctx.omega_tilde, pen.w)));
    CHECK(merit(p, pen.ctx, pen.w) ==
          oracle::penalty_merit(p, pen.ctx.omega_tilde, pen.ctx.nu, pen.w));
    pen.ctx.omega_weighted_penalty_term = true;
    CHECK(merit(p, pen.ctx, pen.w) ==
          oracle::penalty_merit_omega_weighted(p, pen.ctx.omega_tilde,
                                               pen.ctx.nu, pen.w));
  }
}

TEST_CASE("analytic merit derivative matches finite differences") {
  std::mt19937_64 rng(50);
  for (const ProblemCatalogEntry& entry : oracle::property_problems()) {
    const Problem& p = entry.problem;
    for (int sample = 0; sample < 50; ++sample) {
      const oracle::RandomState s =
          oracle::random_state(p, rng, sample % 3 == 0, sample % 6 == 0);
      const IterateStep dw{oracle::random_vector(p.n(), rng),
                           oracle::random_vector(p.m(), rng)};
      const double analytic =
          merit_directional_derivative(p, s.ctx, s.w, dw);
      const double fd = oracle::directional_fd(
          [&](double t) { return merit(p, s.ctx, s.w + t * dw); }, 1e-4);
      INFO(p.name() << " sample " << sample << " analytic " << analytic
                    << " fd " << fd);
      CHECK(std::abs(analytic - fd) <= 1e-5 * std::abs(analytic));
    }
  }
}

TEST_CASE("regularized Newton steps are descent directions") {
  std::mt19937_64 rng(100);
  for (const ProblemCatalogEntry& entry : oracle::property_problems()) {
    const Problem& p = entry.problem;
    for (int sample = 0; sample < 100; ++sample) {
      const oracle::RandomState s =
          oracle::random_state(p, rng, sample % 3 == 0, sample % 6 == 0);
      const NewtonStep step = newton_step(p, s.ctx, s.w);
      CHECK(step.diagnostics.inertia == Inertia{p.n(), p.m(), 0});
      INFO(p.name() << " sample " << sample);
      CHECK(merit_directional_derivative(p, s.ctx, s.w, step.dw) < 0.0);
    }
  }
}

TEST_CASE("newton_step examples") {
  const MethodContext pen = ctx_of(vec({0.0}), 0.0, 0.1);
  const NewtonStep a = newton_step(quad1(), pen, Iterate{vec({0.0}), vec({0.0})});
  CHECK(a.dw.dx(0) == doctest::Approx(10.0 / 11.0));
  CHECK(a.dw.dlambda(0) == doctest::Approx(10.0 / 11.0));
  CHECK(a.diagnostics.xi == 0.0);

  const Problem rosen = builtin_problem("ROSEN-CIRCLE").problem;
  const Iterate solution{vec({1.0, 1.0}), vec({0.0})};
  REQUIRE(residual(rosen, pen, solution).isZero(0.0));
  CHECK(newton_step(rosen, pen, solution).dw.is_zero());

  const Problem lsq = builtin_problem("LSQ-OVER").problem;
  const MethodContext modified = ctx_of(vec({0.0, 0.0}), 0.01, 0.1);
  const NewtonStep c =
      newton_step(lsq, modified, Iterate{vec({0.0}), vec({0.0, 0.0})});
  CHECK(c.dw.dx.allFinite());
  CHECK(c.dw.dlambda.allFinite());
  CHECK(c.diagnostics.inertia == Inertia{1, 2, 0});
  const Matrix K = assemble(c.B, lsq.jacobian(vec({0.0})), 0.11).K;
  CHECK(K.rows() == 3);
  CHECK(oracle::eigen_inertia(K) == Inertia{1, 2, 0});
}

TEST_CASE("line_search examples") {
  const MethodContext pen = ctx_of(vec({0.0}), 0.0, 0.1);
  const Iterate w0{vec({0.0}), vec({0.0})};
  const NewtonStep step = newton_step(quad1(), pen, w0);
  const LineSearchResult ls = line_search(quad1(), pen, w0, step.dw);
  CHECK(ls.alpha == 1.0);
  CHECK(ls.soc_used == 0);
  CHECK(ls.merit < merit(quad1(), pen, w0));

  CHECK_THROWS_AS(
      line_search(quad1(), pen, w0, IterateStep{vec({0.0}), vec({0.0})}),
      UsageError);

  const Problem rosen = builtin_problem("ROSEN-CIRCLE").problem;
  const Vector x0 = vec({-1.2, 1.0});
  const Iterate w{x0, -rosen.constraints(x0) / 0.1};
  const NewtonStep rs = newton_step(rosen, pen, w);
  const LineSearchResult rl = line_search(rosen, pen, w, rs.dw);
  const double m0 = merit(rosen, pen, w);
  const double slope = merit_directional_derivative(rosen, pen, w, rs.dw);
  CHECK(rl.alpha <= 1.0);
  CHECK(rl.alpha > 0.0);
  CHECK(merit(rosen, pen, rl.next) <= m0 + 1e-4 * rl.alpha * slope);
}

TEST_CASE("line search fails when the step floor is reached") {
  // A descent direction that overshoots at every α above the floor.
  const MethodContext pen = ctx_of(vec({0.0}), 0.0, 0.1);
  const Iterate w{vec({0.0}), vec({0.0})};
  const Matrix S = Matrix::Identity(1, 1);
  InnerOptions options;
  options.alpha_min = 0.4;
  options.soc = false;
  const IterateStep huge{vec({1e6}), vec({0.0})};
  CHECK(merit_directional_derivative(quad1(), pen, w, huge) < 0.0);
  CHECK_THROWS_AS(line_search(quad1(), pen, w, huge, options, S),
                  LineSearchFailure);
}

TEST_CASE("soc_step examples") {
  const MethodContext pen = ctx_of(vec({0.0}), 0.0, 0.1);
  const Matrix S = Matrix::Identity(1, 1);
  const double x = 10.0 / 11.0;
  const SocResult zero =
      soc_step(quad1(), pen, vec({0.0}), Iterate{vec({x}), vec({x})}, S);
  REQUIRE(zero.solved);
  CHECK(zero.increment.dx.norm() <= 1e-15);
  CHECK(zero.increment.dlambda.norm() <= 1e-15);

  const SocResult hand =
      soc_step(quad1(), pen, vec({0.0}), Iterate{vec({0.5}), vec({0.5})}, S);
  REQUIRE(hand.solved);
  CHECK(hand.increment.dx(0) == doctest::Approx(0.45 / 1.1));
  CHECK(hand.increment.dlambda(0) == doctest::Approx(0.45 / 1.1));

  const Problem lsq = builtin_problem("LSQ-OVER").problem;
  const MethodContext modified = ctx_of(vec({0.3, -0.2}), 0.01, 0.1);
  const SocResult over = soc_step(lsq, modified, vec({0.2}),
                                  Iterate{vec({3.0}), vec({0.5, 1.0})}, S);
  REQUIRE(over.solved);
  CHECK(over.backward_error <= 1e-10);
  const Matrix K = assemble(S, lsq.jacobian(vec({0.2})), 0.11).K;
  Vector z(3);
  z << over.increment.dx, -over.increment.dlambda;
  Vector rhs = Vector::Zero(3);
  rhs.tail(2) =
      -residual(lsq, modified, Iterate{vec({3.0}), vec({0.5, 1.0})}).tail(2);
  CHECK(oracle::kkt_residual(lsq, vec({3.0}), vec({0.0, 0.0}), 0.0) > 0.0);
  CHECK((K * z - rhs).lpNorm<Eigen::Infinity>() <=
        1e-10 * (K.cwiseAbs().rowwise().sum().maxCoeff() *
                     z.lpNorm<Eigen::Infinity>() +
                 rhs.lpNorm<Eigen::Infinity>()));
}

TEST_CASE("singular SOC systems are skipped") {
  ProblemFunctions fns;
  fns.objective = [](const Vector& x) { return x(0) * x(0); };
  fns.constraints = [](const Vector& x) {
    return Vector::Constant(1, x(0) * x(0) - 1.0);
  };
  fns.objective_gradient = [](const Vector& x) {
    return Vector::Constant(1, 2.0 * x(0));
  };
  fns.constraint_jacobian = [](const Vector& x) {
    return Matrix::Constant(1, 1, 2.0 * x(0));
  };
  const Problem p("FLAT", 1, 1, fns);
  const SocResult r = soc_step(p, ctx_of(vec({0.0}), 0.0, 0.1), vec({0.0}),
                               Iterate{vec({0.5}), vec({0.0})},
                               Matrix::Zero(1, 1));
  CHECK_FALSE(r.solved);
  CHECK(r.increment.is_zero());
}

TEST_CASE("SOC scaling matrices are positive definite") {
  Matrix B(2, 2);
  B << -2.0, 0.5, 0.5, 1.0;
  CHECK(soc_scaling_matrix(SocScaling::identity, B) == Matrix::Identity(2, 2));
  const Matrix S = soc_scaling_matrix(SocScaling::regularized_hessian, B);
  CHECK(oracle::eigen_inertia(S) == Inertia{2, 0, 0});
  CHECK((S - B).isDiagonal());
}

TEST_CASE("solve_subproblem examples") {
  const MethodContext pen = ctx_of(vec({0.0}), 0.0, 0.1);
  const InnerResult a = solve_subproblem(
      quad1(), pen, Iterate{vec({0.0}), -quad1().constraints(vec({0.0})) / 0.1},
      1e-10, 200);
  CHECK(a.status == InnerStatus::converged);
  CHECK(a.iterations <= 3);
  CHECK(a.residual_norm <= 1e-10);
  CHECK(a.iterate.x(0) == doctest::Approx(10.0 / 11.0));
  CHECK(a.iterate.lambda_tilde(0) == doctest::Approx(10.0 / 11.0));
  CHECK(a.step_history.size() == static_cast<std::size_t>(a.iterations));

  const double x = 10.0 / 11.0;
  const InnerResult b =
      solve_subproblem(quad1(), pen, Iterate{vec({x}), vec({x})}, 1e-10, 200);
  CHECK(b.status == InnerStatus::converged);
  CHECK(b.iterations == 0);

  const Problem rosen = builtin_problem("ROSEN-CIRCLE").problem;
  const Vector x0 = vec({-1.2, 1.0});
  const InnerResult c = solve_subproblem(
      rosen, pen, Iterate{x0, -rosen.constraints(x0) / 0.1}, 1e-8, 200);
  CHECK(c.status == InnerStatus::converged);
  CHECK(c.residual_norm <= 1e-8);
  CHECK(c.iterations <= 200);

  const InnerResult d = solve_subproblem(
      rosen, pen, Iterate{x0, -rosen.constraints(x0) / 0.1}, 1e-8, 1);
  CHECK(d.status == InnerStatus::max_iterations);
  CHECK(d.iterations == 1);

  CHECK_THROWS_AS(solve_subproblem(quad1(), pen, b.iterate, 0.0, 10),
                  UsageError);
}

TEST_CASE("converged status implies the residual bound") {
  std::mt19937_64 rng(31);
  for (const ProblemCatalogEntry& entry : oracle::property_problems()) {
    const Problem& p = entry.problem;
    for (int sample = 0; sample < 5; ++sample) {
      const oracle::RandomState s = oracle::random_state(p, rng);
      const InnerResult r = solve_subproblem(p, s.ctx, s.w, 1e-9, 200);
      if (r.status == InnerStatus::converged) {
        CHECK(residual(p, s.ctx, r.iterate).norm() <= 1e-9);
        CHECK(r.residual_norm <= 1e-9);
      }
    }
  }
}

TEST_CASE("stationarity equivalence on QUAD1 closed forms") {
  // ALM: Ψ(x) = x²/2 − λₖ(x − 1) + (x − 1)²/(2ω̃) is stationary at
  // x = (λₖ + 1/ω̃)/(1 + 1/ω̃); the eliminated λ̃ is −c(x)/ω̃.
  for (double lambda_k : {0.0, 0.4, 1.0, 2.5}) {
    for (double wt : {1.0, 0.1, 1e-3}) {
      const double x = (lambda_k + 1.0 / wt) / (1.0 + 1.0 / wt);
      const Iterate w{vec({x}), vec({-(x - 1.0) / wt})};
      const Vector F = residual(quad1(), ctx_of(vec({lambda_k}), 0.0, wt), w);
      CHECK(F.norm() <= 1e-12);
      const Iterate off{vec({x + 1e-3}), vec({-(x + 1e-3 - 1.0) / wt})};
      CHECK(residual(quad1(), ctx_of(vec({lambda_k}), 0.0, wt), off).norm() >
            1e-4);
    }
  }
  // Merit problem: λₖ = (1 − x*)/ω makes λ̃ = 0 stationary at x* = 1/(1+ω).
  for (double omega : {1e-2, 1e-4, 1e-6}) {
    const double x = 1.0 / (1.0 + omega);
    const MethodContext ctx = ctx_of(vec({(1.0 - x) / omega}), omega, 0.1);
    CHECK(residual(quad1(), ctx, Iterate{vec({x}), vec({0.0})}).norm() <=
          1e-10);
    CHECK(oracle::merit_gradient_norm(quad1(), vec({x}), omega) <= 1e-8);
  }
}

TEST_CASE("lifted and eliminated subproblems agree") {
  std::mt19937_64 rng(12);
  for (const char* name : {"QUAD1", "LSQ-OVER"}) {
    const Problem p = builtin_problem(name).problem;
    for (int sample = 0; sample < 10; ++sample) {
      const oracle::RandomState s = oracle::random_state(p, rng);
      const double omega = s.ctx.omega;
      const Problem lifted = oracle::lifted_problem(p, omega);
      Vector y0(p.n() + p.m());
      y0 << s.w.x, s.ctx.lambda_k + s.w.lambda_tilde;
      const InnerResult ext = solve_subproblem(
          lifted, ctx_of(s.ctx.lambda_k, 0.0, s.ctx.omega_tilde, s.ctx.nu),
          Iterate{y0, s.w.lambda_tilde}, 1e-13, 200);
      const InnerResult red = solve_subproblem(p, s.ctx, s.w, 1e-13, 200);
      INFO(name << " sample " << sample << " omega " << omega);
      REQUIRE(ext.status == InnerStatus::converged);
      REQUIRE(red.status == InnerStatus::converged);
      CHECK((ext.iterate.x.head(p.n()) - red.iterate.x).norm() <= 1e-8);
      CHECK((ext.iterate.x.tail(p.m()) -
             (s.ctx.lambda_k + red.iterate.lambda_tilde))
                .norm() <= 1e-8);
    }
  }
}

TEST_CASE("merit grows without bound along a multiplier ray when omega > 0") {
  std::mt19937_64 rng(8);
  for (const ProblemCatalogEntry& entry : oracle::property_problems()) {
    const Problem& p = entry.problem;
    const oracle::RandomState s = oracle::random_state(p, rng);
    REQUIRE(s.ctx.omega > 0.0);
    const Vector d = oracle::random_vector(p.m(), rng);
    double previous = -std::numeric_limits<double>::infinity();
    int increasing = 0;
    for (int k = 0; k <= 60; ++k) {
      const double t = std::ldexp(1.0, k);
      const double value =
          merit(p, s.ctx, Iterate{s.w.x, s.w.lambda_tilde + t * d});
      if (k >= 30) {
        CHECK(value > previous);
        ++increasing;
      }
      previous = value;
    }
    CHECK(increasing == 31);
    CHECK(previous > 1e20);
  }
}
