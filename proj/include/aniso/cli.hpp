#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "aniso/common.hpp"
#include "aniso/resolvents.hpp"

namespace aniso {

enum class ExperimentKind { PpaRun, AlmRun, VerifyIdentities, RateStudy };

const char* to_string(ExperimentKind kind);

/// Experiment description read from an INI file:
///
///   [experiment]  kind, seed, output
///   [problem]     spec, x0, y0, paper_scale
///   [kernel]      spec, dual, grid (';'-separated)
///   [solver]      lambda, lambdas, max_outer, dual_norm_tol, step_tol,
///                 residual_tol, eps0, gap_tol, kkt_tol, tail
struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::PpaRun;
  /// Operator spec for PPA runs and rate studies, problem spec for ALM runs.
  std::string problem = "growth_linear";
  std::string kernel = "sep_power:p=2";
  std::string dual_kernel = "sep_power:p=2";
  std::vector<std::string> kernel_grid;
  std::vector<double> lambda_grid{1.0};
  std::optional<Vec> x0;
  std::optional<Vec> y0;
  bool paper_scale = false;
  double lambda = 1.0;
  int max_outer = 200;
  double dual_norm_tol = 1e-10;
  double step_tol = 0.0;
  double residual_tol = 1e-12;
  /// Initial inner tolerance; defaults to 0 for PPA runs and 1e-2 for ALM runs.
  std::optional<double> eps0;
  double gap_tol = 0.0;
  double kkt_tol = 0.0;
  int tail = 20;
  std::string output_dir = "out";
  std::optional<std::uint64_t> seed;
  /// Directory of the config file; relative paths in specs resolve against it.
  std::string base_dir;
};

/// Throws ParseError on unknown sections or keys, bad values or unparseable specs.
ExperimentConfig load_config(const std::string& path);
ExperimentConfig parse_config(std::istream& in, const std::string& base_dir = "");

struct RunOutcome {
  std::vector<std::string> files;
  int iterations = 0;
};

/// Runs the configured experiment and writes its CSV trace(s) and summary into
/// config.output_dir. Nothing is written unless the run succeeds.
RunOutcome run_experiment(const ExperimentConfig& config, std::ostream& log);

struct VerifyOptions {
  std::optional<double> tol;  ///< replaces every per-check tolerance
  std::uint64_t seed = 20240601;
  int points = 100;
  CheckMutation mutation;
};

struct CheckRow {
  std::string name;
  double worst = 0.0;
  double tol = 0.0;
  bool passed = false;
};

/// Moreau decomposition, relaxation absorption, duality and three-point
/// identities, D-firm nonexpansiveness and enlargement certificates.
std::vector<CheckRow> verify_identities(const VerifyOptions& options);
void print_check_table(std::ostream& out, const std::vector<CheckRow>& rows);

struct RateRow {
  std::string kernel;
  double lambda = 1.0;
  int iterations = 0;
  double order_p = 0.0;
  double rate_p = 0.0;
  double order_2 = 0.0;
  double rate_2 = 0.0;
  double q_factor_2 = 0.0;
  std::string status;  ///< "ok" or the reason the estimate is missing
};

/// PPA on `config.problem` for every (kernel, lambda) cell, cells spread over `threads` workers.
/// Per-cell traces are written when `write_traces` is set.
std::vector<RateRow> rate_study(const ExperimentConfig& config, int threads, bool write_traces = true);
void write_rate_table(std::ostream& out, const std::vector<RateRow>& rows);

/// Worker count from ANISO_PPA_THREADS, else the hardware concurrency.
int thread_budget();

/// Command-line overrides applied on top of a config file.
struct RunOverrides {
  std::optional<std::string> out_dir;
  std::optional<std::uint64_t> seed;
  /// Stopping tolerance: dual norm for PPA runs, primal-dual gap for ALM runs.
  std::optional<double> tol;
  bool paper_scale = false;
};

// Subcommand entry points: print diagnostics to `err` and return the exit code.
int cmd_run(const std::string& config_path, const RunOverrides& overrides, std::ostream& out, std::ostream& err);
int cmd_verify(const VerifyOptions& options, const std::optional<std::string>& out_dir, std::ostream& out,
               std::ostream& err);
int cmd_rate_study(const std::string& config_path, const std::optional<std::string>& out_dir,
                   const std::optional<std::uint64_t>& seed, std::ostream& out, std::ostream& err);

}  // namespace aniso
