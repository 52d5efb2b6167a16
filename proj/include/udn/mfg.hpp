#pragma once

// Mean-field equilibrium of the power-control game on a one-dimensional
// normalized-queue state space.
//
// The generic SBS state is q in [0,1] (backlog / capacity). Over one
// scheduling period t in [0,T] the value Gamma(t,q) solves the backward HJB
//
//   dGamma/dt + max_p [ D(t,q,p) dGamma/dq + f(p) ] = 0,
//   D = (A - r(p)) tau / Q_max,    f = ln(1 + beta p) / (p + p0),
//
// with beta(t) = g / (I(t) + sigma^2), and the density rho(t,q) of scheduled
// queues is transported forward by the same drift. The interference I(t) is
// the mean-field integral of the policy against rho; the pair is solved by a
// damped fixed point on I.
//
// f is measured in nats/s/Hz per Watt. The rate term in the drift carries
// the service scale c = omega tau / (Q_max ln 2), so the optimizer sees the
// value gradient as c * dGamma/dq.

#include <string>
#include <string_view>
#include <vector>

#include "udn/model.hpp"
#include "udn/types.hpp"

namespace udn::mfg {

struct GridSpec {
  int n_t = 101;
  int n_q = 101;
  double horizon = 1.0;

  double dt() const { return horizon / (n_t - 1); }
  double dq() const { return 1.0 / (n_q - 1); }
  double time(int i) const { return i * dt(); }
  double queue(int j) const { return j * dq(); }
  void validate() const;
};

enum class Boundary { exponential, uniform, linear };

Boundary parse_boundary(std::string_view name);
std::string to_string(Boundary b);

/// Terminal value Gamma(T, q).
double terminal_value(Boundary b, double q);

enum class InitialInterference { zero, half_power };

struct MfgParams {
  model::PhyParams phy;
  model::QueueParams queue;
  int slots_per_period = 100;
  // Representative serving-link gain of a scheduled UE.
  double serving_gain = 1.0e-9;
  // Mean cross-link gain per interferer; I = sbs_density * this * E[p].
  double interference_gain = 1.0e-11;
  Boundary boundary = Boundary::exponential;
  double initial_mean = 0.5;
  double initial_variance = 0.1;
  double damping = 0.5;
  double tolerance = 1.0e-4;
  int max_iters = 200;
  InitialInterference initial_interference = InitialInterference::zero;
  double existence_epsilon = 1.0e-12;

  double period_s() const { return slots_per_period * queue.slot_duration_s; }
  /// c: normalized queue drained per unit time per nat/s/Hz.
  double service_scale() const;
  /// Normalized arrival drift A tau / Q_max.
  double arrival_drift() const;
  double beta(double interference_w) const;
  /// D(p) for a given beta.
  double drift(double beta, double power_w) const;
  /// Smallest power whose drift is non-positive (rate equals arrivals).
  double balance_power(double beta) const;
  void validate() const;
};

struct ValueField {
  Field values;
};

struct DensityField {
  Field values;

  /// Trapezoid mass of time slice i.
  double mass(int i, double dq) const;
  /// Mass held by the dual cell of node j at time slice i.
  double node_mass(int i, int j, double dq) const;

  /// Finite-population empirical density: samples[i] holds the normalized
  /// queues of the B players at time slice i, binned to the nearest node.
  static DensityField empirical(const GridSpec& grid,
                                const std::vector<std::vector<double>>& samples);
};

struct PowerPolicy {
  Field values;
  double horizon = 1.0;

  /// Bilinear interpolation; t and q are clamped to the grid.
  double at(double t, double q) const;
};

struct MfgSolution {
  GridSpec grid;
  MfgParams params;
  ValueField value;
  DensityField density;
  PowerPolicy policy;
  Vector interference;  // I(t_i), Watts
  int iterations = 0;
  double residual = 0.0;
  std::vector<double> residual_history;
  long existence_violations = 0;
};

/// p-dependent part of the pointwise Hamiltonian,
/// ln(1 + beta p)/(p + p0) - dgamma_dq * ln(1 + beta p).
double pointwise_hamiltonian(double power_w, double beta, double dgamma_dq,
                             double circuit_power_w);

/// Maximizer over [0, p_max]. Stationary points solve
///   v (p + p0)^2 = beta (p + p0) - (1 + beta p) ln(1 + beta p), v = dgamma_dq * beta;
/// the best of those and the box endpoints is returned.
double optimal_power_pointwise(double beta, double dgamma_dq, const model::PhyParams& phy);

/// Same on a sub-interval [lo, hi] of [0, p_max].
double optimal_power_pointwise(double beta, double dgamma_dq, double lo, double hi,
                               double circuit_power_w);

/// |2v(p + p0) + beta ln(1 + beta p)| > epsilon.
bool existence_check(double v, double power_w, double beta, const model::PhyParams& phy,
                     double epsilon = 1.0e-12);

struct HjbResult {
  ValueField value;
  PowerPolicy policy;
  long existence_violations = 0;
};

/// Backward sweep from Gamma(T,.) under a given interference trajectory.
HjbResult hjb_backward(const GridSpec& grid, const Vector& interference,
                       const MfgParams& params);

/// Drift field D(t_i, q_j) induced by a policy.
Field drift_field(const PowerPolicy& policy, const Vector& interference,
                  const MfgParams& params);

/// Forward transport of rho0 under an explicit drift field.
DensityField fpk_forward(const GridSpec& grid, const Vector& initial_density,
                         const Field& drift);

DensityField fpk_forward(const GridSpec& grid, const Vector& initial_density,
                         const PowerPolicy& policy, const Vector& interference,
                         const MfgParams& params);

/// eta * E|h~|^2 * integral of p rho dq (trapezoid).
double mf_interference(const Eigen::Ref<const Vector>& density,
                       const Eigen::Ref<const Vector>& policy, double dq, double eta,
                       double mean_sq_gain);

/// Gaussian(mean, variance) restricted to [0,1] and renormalized.
Vector truncated_gaussian(const GridSpec& grid, double mean, double variance);

/// Largest |D| * dt / dq the solver could meet (interference-free bound).
double cfl_number(const GridSpec& grid, const MfgParams& params);

MfgSolution solve_mfg(const GridSpec& grid, const MfgParams& params);

}  // namespace udn::mfg
