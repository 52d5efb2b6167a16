#pragma once

// Per-SBS drift-plus-penalty user scheduling. Each SBS keeps one virtual
// queue per UE; an auxiliary one-hot vector picks the smallest virtual
// queue and the schedule maximizes
//   q_m r_m + Y_m - V df/dlambda_m
// over the UEs. V <= 0; a more negative V weights the utility gradient more.

#include <utility>

#include "udn/mfg.hpp"
#include "udn/model.hpp"
#include "udn/types.hpp"

namespace udn::dpp {

enum class UtilityGradient {
  // f = sum_m lambda_avg_m r_m / (p_m + p0): df/dlambda_m = r_m / (p_m + p0)
  ee_contribution,
  // f = sum_m log(lambda_avg_m r_m + eps): df/dlambda_m = r_m / (lambda_avg_m r_m + eps)
  log_rate,
};

struct DppParams {
  double tradeoff = -50.0;  // V
  UtilityGradient gradient = UtilityGradient::ee_contribution;

  void validate() const;
};

class SchedulerState {
 public:
  SchedulerState() = default;
  explicit SchedulerState(Eigen::Index num_ues);

  Eigen::Index size() const { return virtual_queue_.size(); }
  const Vector& virtual_queue() const { return virtual_queue_; }
  const Eigen::VectorXi& schedule_counts() const { return counts_; }
  long periods() const { return periods_; }
  /// Exact time average of the emitted one-hot vectors (zero before any).
  Vector lambda_avg() const;

  /// Applies one period's auxiliary and schedule decisions.
  void advance(const Eigen::VectorXi& auxiliary, const Eigen::VectorXi& schedule);

 private:
  Vector virtual_queue_;
  Eigen::VectorXi counts_;
  long periods_ = 0;
};

/// Expected rate of a UE if it were scheduled, with the mean-field policy
/// looked up at (t, q_norm) and the mean-field interference.
double expected_rate(const mfg::PowerPolicy* policy, double q_norm, double t_in_period,
                     double normalized_gain, double interference_w,
                     const model::PhyParams& phy);

double update_virtual_queue(double virtual_queue, int auxiliary, int scheduled);

/// One-hot at argmin of the virtual queues (lowest index on ties).
Eigen::VectorXi solve_auxiliary(const Vector& virtual_queue);

/// df/dlambda under the chosen utility model.
Vector utility_gradient(UtilityGradient model, const Vector& rates, const Vector& powers,
                        const Vector& lambda_avg, double circuit_power_w);

/// f(lambda_avg) under the chosen utility model.
double utility(UtilityGradient model, const Vector& rates, const Vector& powers,
               const Vector& lambda_avg, double circuit_power_w);

/// One-hot at argmax_m q_m r_m + Y_m - V g_m (lowest index on ties).
Eigen::VectorXi schedule(const Vector& backlog, const Vector& rates, const Vector& virtual_queue,
                         const Vector& gradient, const DppParams& params);

struct Observation {
  Vector backlog;   // q_m
  Vector rates;     // r~_m, each evaluated as if m were scheduled
  Vector powers;    // policy power the SBS would use for m
  double circuit_power_w = 1.0;
};

struct StepResult {
  Eigen::VectorXi schedule;
  Eigen::VectorXi auxiliary;
  int scheduled_ue = 0;
};

/// observe -> auxiliary -> schedule -> update virtual queues and averages.
std::pair<StepResult, SchedulerState> dpp_step(const SchedulerState& state,
                                               const Observation& obs,
                                               const DppParams& params);

}  // namespace udn::dpp
