#pragma once

// Command implementations behind the CLI. Each writes into an output
// directory and throws the typed errors of errors.hpp on failure.

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "udn/config.hpp"
#include "udn/mfg.hpp"
#include "udn/simulator.hpp"

namespace udn::app {

/// UDN_OUT if set, otherwise the configured output directory.
std::filesystem::path resolve_output_dir(const config::RunConfig& cfg);

/// Solver parameters with gains calibrated from reference deployments at
/// the configured ISD.
mfg::MfgParams calibrated_params(const config::RunConfig& cfg);

/// Calibrates and solves. On non-convergence the residual history is
/// written to `<out>/convergence.csv` before the error propagates.
mfg::MfgSolution cmd_solve(const config::RunConfig& cfg, const std::filesystem::path& out);

std::vector<std::uint64_t> episode_seeds(const config::RunConfig& cfg);

struct MethodResults {
  sim::Replications proposed;
  sim::Replications baseline;
};

MethodResults cmd_simulate(const config::RunConfig& cfg, const std::filesystem::path& solution,
                           const std::filesystem::path& out);

struct SweepPointSpec {
  std::string label;
  double isd = 0.0;
  int ues_per_sbs = 0;
  mfg::Boundary boundary = mfg::Boundary::exponential;
  double tradeoff_v = 0.0;
};

/// Cartesian product of the configured sweep axes; axes left empty take the
/// base value. Throws ConfigError if fewer than two points result.
std::vector<SweepPointSpec> sweep_points(const config::RunConfig& cfg);

/// Runs every point for both methods and writes episodes.csv,
/// solutions.csv and sweep_<metric>.{csv,dat}.
void cmd_sweep(const config::RunConfig& cfg, const std::filesystem::path& out);

/// Rebuilds report tables from an episodes.csv without simulating.
void cmd_report(const std::filesystem::path& episodes_csv, const std::filesystem::path& out);

struct ValidationReport {
  std::vector<std::string> passed;
  std::vector<std::string> failed;
  bool ok() const { return failed.empty(); }
};

ValidationReport validate_solution(const mfg::MfgSolution& sol);

/// Throws InvariantViolation listing every failed check.
ValidationReport cmd_validate(const std::filesystem::path& solution);

}  // namespace udn::app
