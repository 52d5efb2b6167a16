#pragma once

// Run configuration: an INI file with [section] key = value lines. Every
// key has a default; unknown sections or keys are rejected.

#include <cstdint>
#include <filesystem>
#include <istream>
#include <string>
#include <vector>

#include "udn/mfg.hpp"
#include "udn/simulator.hpp"

namespace udn::config {

struct SweepAxes {
  std::vector<double> isd;
  std::vector<int> ues_per_sbs;
  std::vector<mfg::Boundary> boundary;
  std::vector<double> tradeoff_v;
};

struct RunConfig {
  mfg::GridSpec grid{801, 101, 1.0};
  mfg::MfgParams solver;  // gains are filled in by calibration
  int calibration_draws = 8;
  sim::DeploymentSpec deployment;
  sim::SimConfig sim;
  int seeds = 20;
  std::uint64_t base_seed = 1;
  int threads = 0;  // 0: UDN_THREADS or hardware concurrency
  std::string output_dir = "out";
  SweepAxes sweep;

  /// Copies the shared physical constants from the solver block into the
  /// simulator block and checks every bound.
  void finalize();
};

RunConfig parse_config(std::istream& in, const std::string& source = "<stream>");
RunConfig load_config(const std::filesystem::path& path);

/// Applies one "section.key=value" override before finalize().
void apply_override(RunConfig& cfg, const std::string& assignment);

/// Every recognised "section.key".
std::vector<std::string> known_keys();

}  // namespace udn::config
