#pragma once

// Queue-oblivious reference policy: proportional-fair scheduling and a
// myopic per-slot energy-efficient power under a minimum-rate constraint.
// Each SBS sees only its own link and a running estimate of interference.

#include "udn/model.hpp"
#include "udn/types.hpp"

namespace udn::baseline {

enum class Averaging { arithmetic, exponential };

struct BaselineParams {
  double qos_min_rate_bps = 200.0e3;
  double rate_floor = 1.0e-6;
  Averaging averaging = Averaging::arithmetic;
  double smoothing = 0.1;  // used only by the exponential rule

  void validate() const;
};

/// Running average of x_{n+1} onto an estimate built from n samples.
double running_average(double estimate, double sample, long n_previous,
                       Averaging rule, double smoothing);

struct BaselineState {
  Vector average_rate;  // per UE, bits/s
  long rate_samples = 0;
  double interference_estimate = 0.0;  // Watts
  long interference_samples = 0;

  BaselineState() = default;
  explicit BaselineState(Eigen::Index num_ues) : average_rate(Vector::Zero(num_ues)) {}
};

/// One-hot at argmax r_m / max(R_m, floor), lowest index on ties.
Eigen::VectorXi pf_schedule(const Vector& rates, const Vector& average_rates,
                            double floor = 1.0e-6);

struct MyopicPower {
  double power_w = 0.0;
  bool qos_feasible = true;
  double min_power_w = 0.0;  // power meeting the rate floor exactly
};

/// argmax ln(1 + beta p)/(p + p0) over [p_min, p_max] with
/// beta = g / (I_est + sigma^2) and p_min the QoS power. If the QoS power
/// exceeds p_max the SBS transmits at p_max and flags the slot.
MyopicPower myopic_power(double gain, double interference_estimate,
                         const model::PhyParams& phy, double qos_min_rate_bps);

double update_interference_estimate(double estimate, double measured, long n_previous,
                                    Averaging rule = Averaging::arithmetic,
                                    double smoothing = 0.1);

/// Folds one period's per-UE achieved rates into the averages.
void update_average_rates(BaselineState& state, const Vector& period_rates,
                          const BaselineParams& params);

}  // namespace udn::baseline
