#include "malm/bench.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <future>
#include <iomanip>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "malm/catalog.hpp"
#include "malm/errors.hpp"

namespace malm {

namespace {

std::string format_double(double value, int digits = 17) {
  char buffer[64];
  std::snprintf(buffer, sizeof(buffer), "%.*g", digits, value);
  return buffer;
}

std::string format_vector(const Vector& v, int digits = 17,
                          const char* separator = ", ") {
  std::string s;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (i > 0) s += separator;
    s += format_double(v(i), digits);
  }
  return s;
}

std::ofstream open_output(const std::string& path) {
  std::ofstream file(path);
  if (!file) throw UsageError("cannot open '" + path + "' for writing");
  return file;
}

}  // namespace

bool ComparisonTable::all_solved() const {
  return std::all_of(rows.begin(), rows.end(), [](const ComparisonRow& r) {
    return r.status == RunStatus::solved;
  });
}

double kkt_residual(const Problem& problem, const Vector& x,
                    const Vector& lambda, double omega) {
  const int n = problem.n();
  const int m = problem.m();
  Vector r(n + m);
  r.head(n) = problem.gradient(x) - problem.jacobian(x) * lambda;
  r.tail(m) = problem.constraints(x) + omega * lambda;
  return r.norm();
}

RunConfig parse_config(const std::vector<std::string>& args) {
  RunConfig config;
  SolverConfig& s = config.solver;
  std::string method = to_string(s.method);
  std::vector<std::string> compare;
  std::string soc_scaling = "identity";
  double inner_tol = 0.0;
  double omega_tilde_min = 0.0;
  double omega_tilde_cap = 0.0;
  std::vector<double> x0;
  bool no_omega_increase = false;
  bool no_soc = false;

  CLI::App app{"Penalty, augmented Lagrangian and modified augmented "
               "Lagrangian solvers",
               "malm"};
  app.set_config("--config", "", "Flat key = value file; flags override it");
  app.allow_config_extras(CLI::config_extras_mode::error);

  app.add_option("--method", method, "penalty | alm | malm")
      ->check(CLI::IsMember({"penalty", "alm", "malm"}));
  app.add_option("--problem", config.problem, "Catalog problem name")
      ->required();
  app.add_option("--omega", s.omega, "Merit parameter omega (0: constrained)");
  app.add_option("--omega-tilde-init", s.omega_tilde_init,
                 "Initial penalty parameter");
  app.add_option("--theta-omega", s.theta_omega, "Penalty decrease factor");
  app.add_option("--theta-lambda", s.theta_lambda,
                 "Required decrease of the acceptance metric");
  app.add_option("--nu", s.nu, "Merit weight nu");
  app.add_option("--tol", s.tol, "Outer tolerance");
  auto* inner_tol_opt =
      app.add_option("--inner-tol", inner_tol, "Subproblem tolerance");
  auto* min_opt = app.add_option("--omega-tilde-min", omega_tilde_min,
                                 "Floor for the penalty parameter");
  auto* cap_opt = app.add_option("--omega-tilde-cap", omega_tilde_cap,
                                 "Cap for the penalty parameter");
  app.add_option("--max-outer", s.max_outer, "Outer iteration limit");
  app.add_option("--max-inner", s.max_inner, "Newton iterations per subproblem");
  app.add_flag("--no-omega-increase", no_omega_increase,
               "Keep omega_tilde fixed on accepted multiplier updates");
  app.add_flag("--no-soc", no_soc, "Disable second-order corrections");
  app.add_option("--max-soc", s.inner.max_soc, "SOC steps per line search");
  app.add_option("--soc-scaling", soc_scaling, "identity | hessian")
      ->check(CLI::IsMember({"identity", "hessian"}));
  app.add_flag("--penalty-merit-omega-weight", s.omega_weighted_penalty_term,
               "Penalty method: weight the merit feasibility term by "
               "omega_tilde/2");
  auto* x0_opt = app.add_option("--x0", x0, "Starting point, comma separated")
                     ->delimiter(',');
  app.add_option("--trace", config.trace_path, "CSV trace output path");
  app.add_option("--table", config.table_path,
                 "CSV output path of the comparison table");
  app.add_option("--seed", config.seed, "Seed for randomized problems");
  app.add_flag("--verbose", config.verbose, "Print the trace to stdout");
  app.add_option("--compare", compare,
                 "Methods to compare (repeatable or comma separated)")
      ->delimiter(',')
      ->check(CLI::IsMember({"penalty", "alm", "malm"}));

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    config.show_help = true;
    config.help_text = app.help();
    return config;
  } catch (const CLI::ParseError& e) {
    throw UsageError(e.what());
  }

  s.method = parse_method(method);
  s.allow_omega_increase = !no_omega_increase;
  s.inner.soc = !no_soc;
  s.inner.soc_scaling = soc_scaling == "hessian"
                            ? SocScaling::regularized_hessian
                            : SocScaling::identity;
  if (inner_tol_opt->count() > 0) s.inner_tol = inner_tol;
  if (min_opt->count() > 0) s.omega_tilde_min = omega_tilde_min;
  if (cap_opt->count() > 0) s.omega_tilde_cap = omega_tilde_cap;
  if (x0_opt->count() > 0) {
    s.x0 = Eigen::Map<const Vector>(x0.data(),
                                    static_cast<Eigen::Index>(x0.size()));
  }
  for (const auto& name : compare) {
    config.compare_methods.push_back(parse_method(name));
  }
  if (config.compare_methods.size() == 1) {
    throw UsageError("compare: at least two methods are required");
  }

  if (config.compare_methods.empty()) {
    s.validate();
  } else {
    for (Method m : config.compare_methods) {
      SolverConfig member = s;
      member.method = m;
      member.validate();
    }
  }
  // Resolves the name early so typos surface as usage errors.
  builtin_problem(config.problem, config.seed);
  return config;
}

std::vector<TraceRow> trace_rows(const RunReport& report) {
  std::vector<TraceRow> rows;
  rows.reserve(report.outer_trace.size());
  for (const OuterRecord& r : report.outer_trace) {
    rows.push_back(TraceRow{r.k, to_string(report.method), r.omega_tilde,
                            r.inner_iterations, r.norm_c, r.acceptance_metric,
                            r.residual_norm, r.f_value, to_string(r.branch),
                            r.cumulative_evaluations});
  }
  return rows;
}

void write_trace(std::ostream& out, const RunReport& report) {
  out << kTraceHeader << '\n';
  for (const TraceRow& row : trace_rows(report)) {
    out << row.k << ',' << row.method << ',' << format_double(row.omega_tilde)
        << ',' << row.inner_iterations << ',' << format_double(row.norm_c)
        << ',' << format_double(row.acceptance_metric) << ','
        << format_double(row.residual_norm) << ','
        << format_double(row.f_value) << ',' << row.branch << ','
        << row.cumulative_evaluations << '\n';
  }
}

ComparisonTable compare(const std::vector<RunConfig>& configs) {
  if (configs.size() < 2) {
    throw UsageError("compare: at least two configurations are required");
  }
  for (const RunConfig& c : configs) {
    if (c.problem != configs.front().problem || c.seed != configs.front().seed) {
      throw UsageError("compare: all configurations must share one problem");
    }
    c.solver.validate();
  }

  std::vector<std::future<ComparisonRow>> pending;
  for (const RunConfig& c : configs) {
    pending.push_back(std::async(std::launch::async, [&c] {
      const ProblemCatalogEntry entry = builtin_problem(c.problem, c.seed);
      const RunReport report = run_solver(entry.problem, c.solver);
      ComparisonRow row;
      row.method = c.solver.method;
      row.status = report.status;
      row.outer_iterations = report.outer_iterations();
      row.inner_iterations = report.totals.inner_iterations;
      row.evaluations = report.totals.evaluations.total();
      row.norm_c = entry.problem.constraints(report.x_final).norm();
      row.kkt_residual = kkt_residual(entry.problem, report.x_final,
                                      report.lambda_final, c.solver.omega);
      row.x_final = report.x_final;
      return row;
    }));
  }
  ComparisonTable table;
  table.problem = configs.front().problem;
  for (auto& f : pending) table.rows.push_back(f.get());
  return table;
}

void write_comparison_csv(std::ostream& out, const ComparisonTable& table) {
  out << "problem,method,status,outer_iterations,inner_iterations,"
         "evaluations,norm_c,kkt_residual,x_final\n";
  for (const ComparisonRow& r : table.rows) {
    out << table.problem << ',' << to_string(r.method) << ','
        << (r.status == RunStatus::solved ? "solved" : "failed") << ','
        << r.outer_iterations << ',' << r.inner_iterations << ','
        << r.evaluations << ',' << format_double(r.norm_c) << ','
        << format_double(r.kkt_residual) << ','
        << format_vector(r.x_final, 17, ";") << '\n';
  }
}

void print_comparison(std::ostream& out, const ComparisonTable& table) {
  out << "problem " << table.problem << '\n';
  out << std::left << std::setw(9) << "method" << std::setw(14) << "status"
      << std::right << std::setw(7) << "outer" << std::setw(8) << "inner"
      << std::setw(8) << "evals" << std::setw(14) << "norm_c"
      << std::setw(14) << "kkt" << "  x_final\n";
  for (const ComparisonRow& r : table.rows) {
    out << std::left << std::setw(9) << to_string(r.method) << std::setw(14)
        << (r.status == RunStatus::solved ? "solved"
                                          : "failed:" + to_string(r.status))
        << std::right << std::setw(7) << r.outer_iterations << std::setw(8)
        << r.inner_iterations << std::setw(8) << r.evaluations
        << std::setw(14) << format_double(r.norm_c, 6) << std::setw(14)
        << format_double(r.kkt_residual, 6) << "  ["
        << format_vector(r.x_final, 10) << "]\n";
  }
}

int run(const RunConfig& config, std::ostream& out) {
  const ProblemCatalogEntry entry = builtin_problem(config.problem, config.seed);
  const RunReport report = run_solver(entry.problem, config.solver);

  if (!config.trace_path.empty()) {
    std::ofstream file = open_output(config.trace_path);
    write_trace(file, report);
  }
  if (config.verbose) write_trace(out, report);

  const Problem& p = entry.problem;
  out << "problem  " << p.name() << " (n=" << p.n() << ", m=" << p.m()
      << ")\n";
  out << "method   " << to_string(report.method) << '\n';
  out << "status   " << to_string(report.status);
  if (!report.message.empty()) out << " (" << report.message << ')';
  out << '\n';
  out << "outer    " << report.outer_iterations() << '\n';
  out << "inner    " << report.totals.inner_iterations << '\n';
  out << "evals    " << report.totals.evaluations.total() << '\n';
  out << "norm_c   " << format_double(p.constraints(report.x_final).norm(), 10)
      << '\n';
  out << "lambda   [" << format_vector(report.lambda_final, 10) << "]\n";
  out << "x_final  [" << format_vector(report.x_final, 10) << "]\n";
  return report.status == RunStatus::solved ? 0 : 1;
}

int cli_main(const std::vector<std::string>& args, std::ostream& out,
             std::ostream& err) {
  try {
    const RunConfig config = parse_config(args);
    if (config.show_help) {
      out << config.help_text;
      return 0;
    }
    if (config.compare_methods.empty()) return run(config, out);

    std::vector<RunConfig> members;
    for (Method m : config.compare_methods) {
      RunConfig member = config;
      member.solver.method = m;
      members.push_back(std::move(member));
    }
    const ComparisonTable table = compare(members);
    print_comparison(out, table);
    std::ofstream file = open_output(config.table_path);
    write_comparison_csv(file, table);
    return table.all_solved() ? 0 : 1;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "solver error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace malm
