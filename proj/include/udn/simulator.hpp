#pragma once

// Finite-B ground truth: a deployment of SBSs and UEs on a square torus,
// driven slot by slot with true interference from every concurrent
// transmission. Scheduling happens once per period, power every slot.

#include <cstdint>
#include <string>
#include <vector>

#include "udn/baseline.hpp"
#include "udn/dpp.hpp"
#include "udn/mfg.hpp"
#include "udn/model.hpp"
#include "udn/types.hpp"

namespace udn::sim {

inline constexpr double kMetersPerIsdUnit = 20.0;

struct DeploymentSpec {
  double isd = 3.5;          // normalized units, 1 unit = 20 m
  double area_km2 = 0.5625;  // square region
  int ues_per_sbs = 5;       // k
  double jitter = 0.2;       // SBS offset as a fraction of the spacing
  bool wrap_around = true;   // distances on a torus
  model::PathlossModel pathloss;

  int sbs_per_side() const;
  void validate() const;
};

struct Deployment {
  double side_m = 0.0;
  double spacing_m = 0.0;
  Eigen::MatrixX2d sbs_pos;
  Eigen::MatrixX2d ue_pos;
  Eigen::VectorXi serving;                   // UE -> SBS
  std::vector<std::vector<int>> ues_of_sbs;  // SBS -> UEs
  Eigen::MatrixXd gain;                      // UE x SBS, linear

  int num_sbs() const { return static_cast<int>(sbs_pos.rows()); }
  int num_ues() const { return static_cast<int>(ue_pos.rows()); }
  double serving_gain(int ue) const { return gain(ue, serving(ue)); }
};

Deployment generate_deployment(const DeploymentSpec& spec, std::uint64_t seed);

struct GainStatistics {
  double mean_serving_gain = 0.0;
  double mean_cross_gain = 0.0;      // per interferer
  double mean_aggregate_cross = 0.0; // summed over interferers
  int interferers = 0;
};

GainStatistics gain_statistics(const Deployment& d);

/// Solver gains from the mean over `draws` reference deployments:
/// serving_gain = mean serving gain, sbs_density = B - 1 and
/// interference_gain = mean cross gain, so that the mean-field integral
/// reproduces the mean aggregate cross gain.
mfg::MfgParams calibrate(const DeploymentSpec& spec, mfg::MfgParams params, int draws,
                         std::uint64_t seed);

enum class Method { proposed, baseline };
std::string to_string(Method m);

struct SimConfig {
  model::PhyParams phy;
  model::QueueParams queue;
  int slots_per_period = 100;
  int periods = 60;
  int warmup_periods = 10;  // excluded from every metric
  double initial_mean = 0.5;      // of backlog / capacity
  double initial_variance = 0.1;
  dpp::DppParams dpp;
  baseline::BaselineParams baseline;
  bool record_traces = false;

  void validate() const;
};

struct TraceRow {
  int period = 0;
  int sbs = 0;
  int ue = 0;
  double backlog_bits = 0.0;
  double virtual_queue = 0.0;
  int scheduled = 0;
};

struct EpisodeMetrics {
  double delivered_bits = 0.0;
  double energy_j = 0.0;
  double ee = 0.0;  // delivered / energy
  double outage = 0.0;
  double arrived_bits = 0.0;
  double dropped_bits = 0.0;
  double drop_ratio = 0.0;
  double initial_backlog_bits = 0.0;
  double final_backlog_bits = 0.0;
  double mean_power_w = 0.0;
  double mean_interference_w = 0.0;  // at all UEs, over measured slots
  long qos_infeasible_slots = 0;
  long measured_slots = 0;
  std::vector<double> power_samples;  // per SBS per period mean power
  Vector ue_rate_bps;                 // per UE delivered bits / measured time
  std::vector<TraceRow> traces;
};

/// Runs one episode. The proposed method needs a solved policy; the
/// baseline ignores it.
EpisodeMetrics run_episode(const Deployment& d, Method method, const mfg::MfgSolution* solution,
                           const SimConfig& cfg, std::uint64_t seed);

struct MetricSummary {
  double mean = 0.0;
  double stddev = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  int n = 0;
};

/// Mean and two-sided 95% Student-t interval.
MetricSummary summarize(const std::vector<double>& samples);

/// Metric extractors used by summaries and reports.
double metric_value(const EpisodeMetrics& m, const std::string& name);
const std::vector<std::string>& metric_names();

struct Replications {
  std::vector<std::uint64_t> seeds;
  std::vector<EpisodeMetrics> episodes;

  MetricSummary summary(const std::string& metric) const;
  std::vector<double> values(const std::string& metric) const;
};

/// Episode seed i of a replication set.
std::uint64_t episode_seed(std::uint64_t base_seed, int index);

/// Each episode draws its own deployment from the episode seed, so two
/// calls with the same seeds and different methods are paired.
Replications run_replications(const DeploymentSpec& spec, Method method,
                              const mfg::MfgSolution* solution, const SimConfig& cfg,
                              const std::vector<std::uint64_t>& seeds, int threads = 0);

/// UDN_THREADS if set, otherwise the hardware concurrency.
int default_threads();

}  // namespace udn::sim
