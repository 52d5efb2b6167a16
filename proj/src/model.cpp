#include "udn/model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "udn/errors.hpp"

namespace udn::model {

namespace {

void require(bool ok, const char* key, const char* bound) {
  if (!ok) throw ConfigError(std::string(key) + " must be " + bound);
}

}  // namespace

void PhyParams::validate() const {
  require(bandwidth_hz > 0.0, "bandwidth_hz", "> 0");
  require(noise_power_w > 0.0, "noise_power", "> 0");
  require(max_power_w > 0.0, "max_power_w", "> 0");
  require(circuit_power_w > 0.0, "circuit_power_w", "> 0");
  require(sbs_density >= 0.0, "sbs_density", ">= 0");
  require(drift_scale >= 0.0, "drift_scale", ">= 0");
}

void QueueParams::validate() const {
  require(mean_arrival_bps >= 0.0, "mean_arrival_bps", ">= 0");
  require(capacity_bits > 0.0, "queue_capacity_bits", "> 0");
  require(slot_duration_s > 0.0, "slot_duration_s", "> 0");
}

double dbm_to_watts(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }

double watts_to_dbm(double watts) { return 10.0 * std::log10(watts) + 30.0; }

double instantaneous_rate(bool scheduled, double power_w, double gain,
                          double interference_w, const PhyParams& phy) {
  if (!(power_w >= 0.0) || !(gain >= 0.0) || !(interference_w >= 0.0))
    throw std::domain_error("instantaneous_rate: negative or NaN input");
  if (!scheduled || power_w == 0.0) return 0.0;
  const double sinr = power_w * gain / (interference_w + phy.noise_power_w);
  return phy.bandwidth_hz * std::log2(1.0 + sinr);
}

double ee_utility(double sum_rate_bps, double power_w, const PhyParams& phy) {
  return sum_rate_bps / (power_w + phy.circuit_power_w);
}

QueueStepResult queue_step(double backlog, double arrivals, double served,
                           double capacity) {
  const double offered = backlog + arrivals;
  const double drained = std::max(0.0, offered - served);
  QueueStepResult out;
  out.next = std::min(capacity, drained);
  out.dropped = std::max(0.0, drained - capacity);
  out.delivered = offered - drained;
  return out;
}

std::uint64_t derive_seed(std::uint64_t base_seed, std::uint64_t stream_id) {
  // splitmix64 finalizer over the pair
  std::uint64_t z = base_seed + 0x9e3779b97f4a7c15ULL * (stream_id + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

RngStream::RngStream(std::uint64_t base_seed, std::uint64_t stream_id)
    : engine_(derive_seed(base_seed, stream_id)) {}

double RngStream::uniform(double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(engine_);
}

double RngStream::normal(double mean, double stddev) {
  return std::normal_distribution<double>(mean, stddev)(engine_);
}

double RngStream::exponential(double mean) {
  return std::exponential_distribution<double>(1.0 / mean)(engine_);
}

double sample_arrivals(RngStream& rng, double mean_bps, double slot_s) {
  const double mean = mean_bps * slot_s;
  if (mean <= 0.0) return 0.0;
  std::poisson_distribution<long long> dist(mean);
  return static_cast<double>(dist(rng.engine()));
}

double los_probability(double distance_m) {
  const double d_km = distance_m / 1000.0;
  if (!(d_km > 0.0)) return 1.0;
  const double p = 0.5 - std::min(0.5, 5.0 * std::exp(-0.156 / d_km)) +
                   std::min(0.5, 5.0 * std::exp(-d_km / 0.03));
  return std::clamp(p, 0.0, 1.0);
}

double pathloss_db(double distance_m, const PathlossModel& model, bool los) {
  if (!(distance_m > 0.0)) throw std::domain_error("pathloss: distance must be > 0");
  const double lg = std::log10(std::max(distance_m, model.min_distance_m) / 1000.0);
  if (model.law == PathlossLaw::log_distance) return model.intercept_db + model.slope_db * lg;
  return los ? model.los_intercept_db + model.los_slope_db * lg
             : model.nlos_intercept_db + model.nlos_slope_db * lg;
}

double pathloss_gain(double distance_m, const PathlossModel& model,
                     RngStream* shadowing_rng) {
  bool los = false;
  if (model.law == PathlossLaw::los_nlos) {
    const double p_los = los_probability(std::max(distance_m, model.min_distance_m));
    los = shadowing_rng != nullptr ? shadowing_rng->uniform() < p_los : p_los >= 0.5;
  }
  double loss_db = pathloss_db(distance_m, model, los);
  double fading = 1.0;
  if (shadowing_rng != nullptr) {
    if (model.shadowing_std_db > 0.0)
      loss_db += shadowing_rng->normal(0.0, model.shadowing_std_db);
    if (model.rayleigh_fading) fading = shadowing_rng->exponential(1.0);
  }
  return std::pow(10.0, -loss_db / 10.0) * fading;
}

double ee_optimal_power(double beta, double lo, double hi, double circuit_power_w) {
  if (hi <= lo) return hi;
  if (beta <= 0.0) return lo;
  // Sign of d/dp [ln(1+bp)/(p+p0)] is the sign of b(p+p0) - (1+bp)ln(1+bp),
  // which is strictly decreasing in p.
  auto slope = [&](double p) {
    return beta * (p + circuit_power_w) - (1.0 + beta * p) * std::log1p(beta * p);
  };
  if (slope(lo) <= 0.0) return lo;
  if (slope(hi) >= 0.0) return hi;
  double a = lo, b = hi;
  for (int it = 0; it < 200 && b - a > 1e-14 * (1.0 + hi); ++it) {
    const double m = 0.5 * (a + b);
    (slope(m) > 0.0 ? a : b) = m;
  }
  return 0.5 * (a + b);
}

}  // namespace udn::model
