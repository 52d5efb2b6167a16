#include "udn/baseline.hpp"

#include <cmath>
#include <stdexcept>

#include "udn/errors.hpp"

namespace udn::baseline {

void BaselineParams::validate() const {
  if (!(qos_min_rate_bps >= 0.0)) throw ConfigError("baseline.qos_min_rate must be >= 0");
  if (!(rate_floor > 0.0)) throw ConfigError("baseline.rate_floor must be > 0");
  if (!(smoothing > 0.0 && smoothing <= 1.0))
    throw ConfigError("baseline.smoothing must be in (0, 1]");
}

double running_average(double estimate, double sample, long n_previous, Averaging rule,
                       double smoothing) {
  if (n_previous <= 0) return sample;
  if (rule == Averaging::exponential) return (1.0 - smoothing) * estimate + smoothing * sample;
  const double n = static_cast<double>(n_previous);
  return estimate + (sample - estimate) / (n + 1.0);
}

Eigen::VectorXi pf_schedule(const Vector& rates, const Vector& average_rates, double floor) {
  if (rates.size() == 0 || rates.size() != average_rates.size())
    throw std::invalid_argument("pf_schedule: vectors must be non-empty and aligned");
  const Vector metric = rates.array() / average_rates.array().max(floor);
  Eigen::Index best = 0;
  for (Eigen::Index m = 1; m < metric.size(); ++m)
    if (metric(m) > metric(best)) best = m;
  Eigen::VectorXi out = Eigen::VectorXi::Zero(rates.size());
  out(best) = 1;
  return out;
}

MyopicPower myopic_power(double gain, double interference_estimate, const model::PhyParams& phy,
                         double qos_min_rate_bps) {
  if (gain < 0.0 || interference_estimate < 0.0)
    throw std::domain_error("myopic_power: negative gain or interference");
  MyopicPower out;
  const double beta = gain / (interference_estimate + phy.noise_power_w);
  if (beta <= 0.0) {
    out.power_w = phy.max_power_w;
    out.min_power_w = qos_min_rate_bps > 0.0 ? INFINITY : 0.0;
    out.qos_feasible = qos_min_rate_bps <= 0.0;
    return out;
  }
  out.min_power_w = std::expm1(qos_min_rate_bps / phy.bandwidth_hz * std::log(2.0)) / beta;
  if (out.min_power_w > phy.max_power_w) {
    out.power_w = phy.max_power_w;
    out.qos_feasible = false;
    return out;
  }
  out.power_w = model::ee_optimal_power(beta, out.min_power_w, phy.max_power_w,
                                        phy.circuit_power_w);
  return out;
}

double update_interference_estimate(double estimate, double measured, long n_previous,
                                    Averaging rule, double smoothing) {
  if (measured < 0.0) throw std::domain_error("interference measurement must be >= 0");
  return running_average(estimate, measured, n_previous, rule, smoothing);
}

void update_average_rates(BaselineState& state, const Vector& period_rates,
                          const BaselineParams& params) {
  for (Eigen::Index m = 0; m < state.average_rate.size(); ++m)
    state.average_rate(m) = running_average(state.average_rate(m), period_rates(m),
                                            state.rate_samples, params.averaging,
                                            params.smoothing);
  ++state.rate_samples;
}

}  // namespace udn::baseline
