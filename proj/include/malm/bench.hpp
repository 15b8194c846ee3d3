#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "malm/drivers.hpp"

namespace malm {

/// Everything a CLI invocation needs: solver settings plus I/O selections.
struct RunConfig {
  SolverConfig solver;
  std::string problem;
  std::string trace_path;
  std::string table_path = "comparison.csv";
  std::string config_path;
  bool verbose = false;
  std::uint64_t seed = 0;
  /// Non-empty selects comparison mode; one run per listed method.
  std::vector<Method> compare_methods;
  bool show_help = false;
  std::string help_text;
};

/// One trace line per outer iteration.
struct TraceRow {
  int k = 0;
  std::string method;
  double omega_tilde = 0.0;
  int inner_iterations = 0;
  double norm_c = 0.0;
  double acceptance_metric = 0.0;
  double residual_norm = 0.0;
  double f_value = 0.0;
  std::string branch;
  long cumulative_evaluations = 0;
};

inline constexpr const char* kTraceHeader =
    "k,method,omega_tilde,inner_iterations,norm_c,acceptance_metric,"
    "residual_norm,f_value,branch,cumulative_evaluations";

struct ComparisonRow {
  Method method = Method::malm;
  RunStatus status = RunStatus::max_outer;
  int outer_iterations = 0;
  long inner_iterations = 0;
  long evaluations = 0;
  double norm_c = 0.0;
  double kkt_residual = 0.0;
  Vector x_final;
};

struct ComparisonTable {
  std::string problem;
  std::vector<ComparisonRow> rows;

  bool all_solved() const;
};

/**
 * Parses CLI arguments (without the program name). Values from --config
 * PATH (flat `key = value` lines keyed by long flag names) are overridden by
 * flags. Throws UsageError on unknown flags, unparsable values or invalid
 * settings.
 */
RunConfig parse_config(const std::vector<std::string>& args);

std::vector<TraceRow> trace_rows(const RunReport& report);
void write_trace(std::ostream& out, const RunReport& report);

/// Runs every config on a shared problem; rows appear in input order.
ComparisonTable compare(const std::vector<RunConfig>& configs);
void write_comparison_csv(std::ostream& out, const ComparisonTable& table);
void print_comparison(std::ostream& out, const ComparisonTable& table);

/// Executes a single run: writes the trace (if requested) and a summary.
/// Returns 0 iff the run is solved.
int run(const RunConfig& config, std::ostream& out);

/// Full CLI: parse, then run or compare. Exit codes 0 solved, 1 solver
/// failure, 2 usage error.
int cli_main(const std::vector<std::string>& args, std::ostream& out,
             std::ostream& err);

/// ‖(∇f − ∇c·λ ; c + ω·λ)‖₂, the stationarity residual of the merit problem
/// in multiplier form (the constrained KKT residual for ω = 0).
double kkt_residual(const Problem& problem, const Vector& x,
                    const Vector& lambda, double omega);

}  // namespace malm
