#include "udn/dpp.hpp"

#include <stdexcept>

#include "udn/errors.hpp"

namespace udn::dpp {

namespace {

constexpr double kLogEps = 1.0e-9;

Eigen::VectorXi one_hot(Eigen::Index n, Eigen::Index at) {
  Eigen::VectorXi v = Eigen::VectorXi::Zero(n);
  v(at) = 1;
  return v;
}

}  // namespace

void DppParams::validate() const {
  if (!(tradeoff <= 0.0)) throw ConfigError("dpp.tradeoff_v must be <= 0");
}

SchedulerState::SchedulerState(Eigen::Index num_ues)
    : virtual_queue_(Vector::Zero(num_ues)), counts_(Eigen::VectorXi::Zero(num_ues)) {}

Vector SchedulerState::lambda_avg() const {
  if (periods_ == 0) return Vector::Zero(counts_.size());
  return counts_.cast<double>() / static_cast<double>(periods_);
}

void SchedulerState::advance(const Eigen::VectorXi& auxiliary, const Eigen::VectorXi& schedule) {
  for (Eigen::Index m = 0; m < size(); ++m)
    virtual_queue_(m) = update_virtual_queue(virtual_queue_(m), auxiliary(m), schedule(m));
  counts_ += schedule;
  ++periods_;
}

double expected_rate(const mfg::PowerPolicy* policy, double q_norm, double t_in_period,
                     double normalized_gain, double interference_w,
                     const model::PhyParams& phy) {
  if (policy == nullptr || policy->values.size() == 0)
    throw StateError("expected_rate: no mean-field solution loaded");
  const double p = policy->at(t_in_period, q_norm);
  return model::instantaneous_rate(true, p, normalized_gain, interference_w, phy);
}

double update_virtual_queue(double virtual_queue, int auxiliary, int scheduled) {
  return virtual_queue + auxiliary - scheduled;
}

Eigen::VectorXi solve_auxiliary(const Vector& virtual_queue) {
  if (virtual_queue.size() == 0) throw std::invalid_argument("solve_auxiliary: no UEs");
  Eigen::Index best = 0;
  for (Eigen::Index m = 1; m < virtual_queue.size(); ++m)
    if (virtual_queue(m) < virtual_queue(best)) best = m;
  return one_hot(virtual_queue.size(), best);
}

Vector utility_gradient(UtilityGradient model, const Vector& rates, const Vector& powers,
                        const Vector& lambda_avg, double circuit_power_w) {
  switch (model) {
    case UtilityGradient::ee_contribution:
      return rates.array() / (powers.array() + circuit_power_w);
    case UtilityGradient::log_rate:
      return rates.array() / (lambda_avg.array() * rates.array() + kLogEps);
  }
  return Vector::Zero(rates.size());
}

double utility(UtilityGradient model, const Vector& rates, const Vector& powers,
               const Vector& lambda_avg, double circuit_power_w) {
  switch (model) {
    case UtilityGradient::ee_contribution:
      return (lambda_avg.array() * rates.array() / (powers.array() + circuit_power_w)).sum();
    case UtilityGradient::log_rate:
      return (lambda_avg.array() * rates.array() + kLogEps).log().sum();
  }
  return 0.0;
}

Eigen::VectorXi schedule(const Vector& backlog, const Vector& rates, const Vector& virtual_queue,
                         const Vector& gradient, const DppParams& params) {
  const auto n = backlog.size();
  if (n == 0 || rates.size() != n || virtual_queue.size() != n || gradient.size() != n)
    throw std::invalid_argument("schedule: vectors must be non-empty and aligned");
  const Vector score = backlog.cwiseProduct(rates) + virtual_queue - params.tradeoff * gradient;
  Eigen::Index best = 0;
  for (Eigen::Index m = 1; m < n; ++m)
    if (score(m) > score(best)) best = m;
  return one_hot(n, best);
}

std::pair<StepResult, SchedulerState> dpp_step(const SchedulerState& state,
                                               const Observation& obs,
                                               const DppParams& params) {
  if (obs.backlog.size() != state.size())
    throw std::invalid_argument("dpp_step: observation size differs from scheduler state");
  StepResult out;
  out.auxiliary = solve_auxiliary(state.virtual_queue());
  const Vector grad = utility_gradient(params.gradient, obs.rates, obs.powers,
                                       state.lambda_avg(), obs.circuit_power_w);
  out.schedule = schedule(obs.backlog, obs.rates, state.virtual_queue(), grad, params);
  out.schedule.maxCoeff(&out.scheduled_ue);
  SchedulerState next = state;
  next.advance(out.auxiliary, out.schedule);
  return {std::move(out), std::move(next)};
}

}  // namespace udn::dpp
