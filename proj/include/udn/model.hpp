#pragma once

// Physical-layer and queueing primitives shared by the solver, the
// schedulers and the simulator. Power in Watts, rates in bits/s, queues in
// bits unless a name says otherwise.

#include <cstdint>
#include <functional>
#include <random>

namespace udn::model {

struct PhyParams {
  double bandwidth_hz = 1.0e6;
  double noise_power_w = 1.0e-10;  // -70 dBm
  double max_power_w = 1.0;
  double circuit_power_w = 1.0;
  // Number of interferers the mean-field integral is scaled by.
  double sbs_density = 1.0;
  // Channel diffusion; only zero is supported by the solver.
  double drift_scale = 0.0;

  /// Throws ConfigError naming the first violated bound.
  void validate() const;
};

struct QueueParams {
  double mean_arrival_bps = 200.0e3;
  double capacity_bits = 2.0e6;
  double slot_duration_s = 0.01;

  void validate() const;
};

struct LinkState {
  double gain = 0.0;             // |h|^2, linear
  double normalized_gain = 1.0;  // |h~|^2, unit population mean
};

// Deterministic channel drift G(t, h). The simulated channels are fixed
// within an episode, so only the zero drift is ever instantiated.
using ChannelDrift = std::function<double(double t, double gain)>;
inline double zero_channel_drift(double, double) { return 0.0; }

double dbm_to_watts(double dbm);
double watts_to_dbm(double watts);

/// omega * lambda * log2(1 + p g / (I + sigma^2)).
double instantaneous_rate(bool scheduled, double power_w, double gain,
                          double interference_w, const PhyParams& phy);

/// Bits per Joule including the circuit power.
double ee_utility(double sum_rate_bps, double power_w, const PhyParams& phy);

struct QueueStepResult {
  double next = 0.0;
  double dropped = 0.0;
  double delivered = 0.0;
};

/// One slot of q' = min(cap, max(0, q + a - s)); overflow is dropped.
QueueStepResult queue_step(double backlog, double arrivals, double served,
                           double capacity);

/// Seeded random stream. Each replication or SBS owns its own instance.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : engine_(seed) {}
  RngStream(std::uint64_t base_seed, std::uint64_t stream_id);

  std::mt19937_64& engine() noexcept { return engine_; }
  double uniform(double lo = 0.0, double hi = 1.0);
  double normal(double mean, double stddev);
  double exponential(double mean);

 private:
  std::mt19937_64 engine_;
};

/// Mixes a base seed and a stream index into an independent seed.
std::uint64_t derive_seed(std::uint64_t base_seed, std::uint64_t stream_id);

/// Poisson bit count with mean mean_bps * slot_s.
double sample_arrivals(RngStream& rng, double mean_bps, double slot_s);

enum class PathlossLaw {
  log_distance,  // PL(d) = intercept + slope * log10(d_km)
  los_nlos,      // per-link LOS draw between two log-distance laws
};

struct PathlossModel {
  PathlossLaw law = PathlossLaw::log_distance;
  double intercept_db = 140.7;
  double slope_db = 36.7;
  double los_intercept_db = 103.8;
  double los_slope_db = 20.9;
  double nlos_intercept_db = 145.4;
  double nlos_slope_db = 37.5;
  double shadowing_std_db = 8.0;
  double min_distance_m = 3.0;
  bool rayleigh_fading = false;
};

/// Probability that a link of this length is line of sight:
/// 0.5 - min(0.5, 5 exp(-0.156/d)) + min(0.5, 5 exp(-d/0.03)), d in km.
double los_probability(double distance_m);

/// Log-distance loss. Under los_nlos the `los` flag picks the branch.
double pathloss_db(double distance_m, const PathlossModel& model, bool los = false);

/// Linear gain 10^(-PL/10) times log-normal shadowing (and optional
/// exponential fading). Passing no rng disables all randomness; the
/// los_nlos law then uses the more likely branch.
double pathloss_gain(double distance_m, const PathlossModel& model,
                     RngStream* shadowing_rng);

/// argmax of ln(1 + beta p) / (p + p0) over [lo, hi]. The objective is
/// unimodal in p, so the constrained maximizer is the clamped stationary
/// point.
double ee_optimal_power(double beta, double lo, double hi, double circuit_power_w);

}  // namespace udn::model
