#include "malm/drivers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>

#include <Eigen/SVD>

#include "malm/errors.hpp"

namespace malm {

namespace {

void require(bool condition, const std::string& field,
             const std::string& what) {
  if (!condition) throw UsageError(field + ": " + what);
}

struct RunContext {
  std::shared_ptr<EvaluationCounts> counts =
      std::make_shared<EvaluationCounts>();
  Problem counted;

  explicit RunContext(const Problem& problem)
      : counted(with_evaluation_counter(problem, counts)) {}
};

Vector starting_point(const Problem& problem, const SolverConfig& config) {
  if (!config.x0) return problem.initial_point();
  if (config.x0->size() != problem.n()) {
    throw UsageError("x0: size " + std::to_string(config.x0->size()) +
                     " does not match n = " + std::to_string(problem.n()));
  }
  return *config.x0;
}

void accumulate(RunTotals& totals, const InnerResult& inner) {
  totals.inner_iterations += inner.iterations;
  totals.soc_solves += static_cast<long>(inner.soc_backward_errors.size());
  for (double e : inner.soc_backward_errors) {
    totals.max_soc_backward_error = std::max(totals.max_soc_backward_error, e);
  }
}

OuterRecord make_record(const Problem& problem, int k, const Vector& lambda_k,
                        double omega_tilde, const InnerResult& inner,
                        double metric, const EvaluationCounts& counts) {
  OuterRecord record;
  record.k = k;
  record.lambda_k = lambda_k;
  record.omega_tilde = omega_tilde;
  record.inner_iterations = inner.iterations;
  record.inner_status = inner.status;
  record.norm_c = problem.constraints(inner.iterate.x).norm();
  record.acceptance_metric = metric;
  record.residual_norm = inner.residual_norm;
  record.f_value = problem.objective(inner.iterate.x);
  record.lambda_tilde_norm = inner.iterate.lambda_tilde.norm();
  record.cumulative_evaluations = counts.total();
  return record;
}

}  // namespace

std::string to_string(Method method) {
  switch (method) {
    case Method::penalty:
      return "penalty";
    case Method::alm:
      return "alm";
    case Method::malm:
      return "malm";
  }
  return "unknown";
}

Method parse_method(const std::string& name) {
  if (name == "penalty") return Method::penalty;
  if (name == "alm") return Method::alm;
  if (name == "malm") return Method::malm;
  throw UsageError("method: unknown value '" + name + "'");
}

std::string to_string(Branch branch) {
  switch (branch) {
    case Branch::accept:
      return "accept";
    case Branch::reject:
      return "reject";
    case Branch::terminal:
      return "terminal";
  }
  return "unknown";
}

std::string to_string(RunStatus status) {
  switch (status) {
    case RunStatus::solved:
      return "solved";
    case RunStatus::max_outer:
      return "max_outer";
    case RunStatus::inner_failure:
      return "inner_failure";
  }
  return "unknown";
}

double SolverConfig::effective_omega_tilde_min() const {
  return omega_tilde_min.value_or(std::max(omega, 1e-12));
}

double SolverConfig::effective_omega_tilde_cap() const {
  return omega_tilde_cap.value_or(omega_tilde_init);
}

void SolverConfig::validate() const {
  require(std::isfinite(omega) && omega >= 0.0, "omega", "must be >= 0");
  require(std::isfinite(omega_tilde_init) && omega_tilde_init > 0.0,
          "omega_tilde_init", "must be > 0");
  require(theta_omega > 0.0 && theta_omega < 1.0, "theta_omega",
          "must lie in (0, 1)");
  require(theta_lambda > 0.0 && theta_lambda < 1.0, "theta_lambda",
          "must lie in (0, 1)");
  require(tol > 0.0, "tol", "must be > 0");
  require(std::isfinite(nu) && nu > 0.0, "nu", "must be > 0");
  require(effective_inner_tol() > 0.0, "inner_tol", "must be > 0");
  require(max_outer >= 1, "max_outer", "must be >= 1");
  require(max_inner >= 0, "max_inner", "must be >= 0");
  require(inner.max_soc >= 0, "max_soc", "must be >= 0");
  switch (method) {
    case Method::penalty:
      require(omega > 0.0, "omega", "penalty method requires omega > 0");
      require(omega_tilde_init >= omega, "omega_tilde_init",
              "penalty method requires omega_tilde_init >= omega");
      break;
    case Method::alm:
      require(omega == 0.0, "omega", "alm requires omega = 0 (use malm)");
      break;
    case Method::malm:
      require(omega_tilde_init > omega, "omega_tilde_init",
              "malm requires omega_tilde_init > omega");
      break;
  }
  if (method != Method::penalty) {
    require(!omega_weighted_penalty_term, "omega_weighted_penalty_term",
            "applies to the penalty method only");
    require(effective_omega_tilde_min() > 0.0, "omega_tilde_min",
            "must be > 0");
    require(effective_omega_tilde_cap() >= omega_tilde_init,
            "omega_tilde_cap", "must be >= omega_tilde_init");
  }
}

double jacobian_norm(const Matrix& J) {
  if (J.size() == 0) return 0.0;
  return Eigen::JacobiSVD<Matrix>(J).singularValues()(0);
}

double acceptance_metric(const Problem& problem, const Vector& lambda_k,
                         const Iterate& w, double omega) {
  return (problem.constraints(w.x) + omega * lambda_k +
          omega * w.lambda_tilde)
      .norm();
}

bool acceptance_test(const OuterState& state, double metric,
                     const SolverConfig& config) {
  if (!std::isfinite(metric)) return false;
  if (state.k <= 1 || state.metric_history.empty()) return true;
  const double best = *std::min_element(state.metric_history.begin(),
                                        state.metric_history.end());
  return metric <= config.theta_lambda * best;
}

bool termination_test(const Problem& problem, const OuterState& state,
                      const Iterate& w_k, const SolverConfig& config,
                      InnerStatus inner_status) {
  if (inner_status != InnerStatus::converged) return false;
  if (config.method == Method::alm) {
    const int n = problem.n();
    const int m = problem.m();
    Vector kkt(n + m);
    kkt.head(n) =
        problem.gradient(w_k.x) - problem.jacobian(w_k.x) * state.lambda_k;
    kkt.tail(m) = problem.constraints(w_k.x);
    return kkt.norm() <= config.tol;
  }
  const double scale = std::max(config.omega + state.omega_tilde_k,
                                jacobian_norm(problem.jacobian(w_k.x)));
  return scale * w_k.lambda_tilde.norm() <= config.tol;
}

RunReport run_penalty(const Problem& problem, const SolverConfig& config) {
  config.validate();
  if (config.method != Method::penalty) {
    throw UsageError("run_penalty: method must be penalty");
  }
  RunContext run(problem);
  const Problem& p = run.counted;

  RunReport report;
  report.method = Method::penalty;
  const Vector zero = Vector::Zero(problem.m());
  Vector x = starting_point(problem, config);
  Vector lambda_tilde = zero;
  double omega_tilde = config.omega_tilde_init;

  for (int k = 1; k <= config.max_outer; ++k) {
    lambda_tilde = -p.constraints(x) / omega_tilde;
    MethodContext ctx{zero, 0.0, omega_tilde, config.nu,
                      config.omega_weighted_penalty_term};
    const InnerResult inner =
        solve_subproblem(p, ctx, Iterate{x, lambda_tilde},
                         config.effective_inner_tol(), config.max_inner,
                         config.inner);
    accumulate(report.totals, inner);
    x = inner.iterate.x;
    lambda_tilde = inner.iterate.lambda_tilde;

    const double metric = problem.constraints(x).norm();
    OuterRecord record = make_record(problem, k, zero, omega_tilde, inner,
                                     metric, *run.counts);
    report.omega_tilde_final = omega_tilde;
    if (inner.status != InnerStatus::converged) {
      record.branch = Branch::terminal;
      report.outer_trace.push_back(std::move(record));
      report.status = RunStatus::inner_failure;
      report.message = to_string(inner.status) + ": " + inner.message;
      break;
    }
    if (omega_tilde == config.omega) {
      record.branch = Branch::terminal;
      report.outer_trace.push_back(std::move(record));
      report.status = RunStatus::solved;
      break;
    }
    record.branch = Branch::reject;
    report.outer_trace.push_back(std::move(record));
    omega_tilde = std::max(config.theta_omega * omega_tilde, config.omega);
    // Repeated scaling by θ_ω can land a few ulps above ω.
    if (omega_tilde <= config.omega * (1.0 + 1e-12)) omega_tilde = config.omega;
  }

  report.x_final = x;
  report.lambda_tilde_final = lambda_tilde;
  report.lambda_final = lambda_tilde;
  report.totals.evaluations = *run.counts;
  return report;
}

RunReport run_malm(const Problem& problem, const SolverConfig& config) {
  config.validate();
  if (config.method == Method::penalty) {
    throw UsageError("run_malm: method must be alm or malm");
  }
  RunContext run(problem);
  const Problem& p = run.counted;

  RunReport report;
  report.method = config.method;
  OuterState state;
  state.lambda_k = Vector::Zero(problem.m());
  state.omega_tilde_k = config.omega_tilde_init;
  const Vector x0 = starting_point(problem, config);
  state.w = Iterate{x0, -p.constraints(x0) / config.omega_tilde_init};
  state.metric_history.push_back(
      acceptance_metric(p, state.lambda_k, state.w, config.omega));

  const double floor = config.effective_omega_tilde_min();
  const double cap = config.effective_omega_tilde_cap();
  for (state.k = 1; state.k <= config.max_outer; ++state.k) {
    MethodContext ctx{state.lambda_k, config.omega, state.omega_tilde_k,
                      config.nu, false};
    const InnerResult inner =
        solve_subproblem(p, ctx, state.w, config.effective_inner_tol(),
                         config.max_inner, config.inner);
    accumulate(report.totals, inner);
    state.w = inner.iterate;

    const double metric =
        acceptance_metric(p, state.lambda_k, state.w, config.omega);
    OuterRecord record =
        make_record(problem, state.k, state.lambda_k, state.omega_tilde_k,
                    inner, metric, *run.counts);
    report.omega_tilde_final = state.omega_tilde_k;

    if (inner.status != InnerStatus::converged) {
      record.branch = Branch::terminal;
      report.outer_trace.push_back(std::move(record));
      report.status = RunStatus::inner_failure;
      report.message = to_string(inner.status) + ": " + inner.message;
      break;
    }
    if (termination_test(p, state, state.w, config, inner.status)) {
      record.branch = Branch::terminal;
      record.cumulative_evaluations = run.counts->total();
      report.outer_trace.push_back(std::move(record));
      report.status = RunStatus::solved;
      break;
    }

    const bool accepted = acceptance_test(state, metric, config);
    state.metric_history.push_back(metric);
    if (accepted) {
      record.branch = Branch::accept;
      state.lambda_k += state.w.lambda_tilde;
      state.w.lambda_tilde.setZero();
      if (config.allow_omega_increase) {
        state.omega_tilde_k =
            std::min(state.omega_tilde_k / std::sqrt(config.theta_omega), cap);
      }
    } else {
      record.branch = Branch::reject;
      state.omega_tilde_k =
          std::max(config.theta_omega * state.omega_tilde_k, floor);
    }
    record.cumulative_evaluations = run.counts->total();
    report.outer_trace.push_back(std::move(record));
  }

  report.x_final = state.w.x;
  report.lambda_tilde_final = state.w.lambda_tilde;
  report.lambda_final = state.lambda_k + state.w.lambda_tilde;
  report.totals.evaluations = *run.counts;
  return report;
}

RunReport run_solver(const Problem& problem, const SolverConfig& config) {
  if (config.method == Method::penalty) return run_penalty(problem, config);
  return run_malm(problem, config);
}

}  // namespace malm
