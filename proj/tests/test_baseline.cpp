#include <gtest/gtest.h>

#include <cmath>

#include "udn/baseline.hpp"
#include "udn/errors.hpp"

using namespace udn;
using namespace udn::baseline;

namespace {

Vector vec(std::initializer_list<double> xs) {
  Vector v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index k = 0;
  for (double x : xs) v(k++) = x;
  return v;
}

}  // namespace

TEST(Pf, RatioArgmax) {
  const Eigen::VectorXi s = pf_schedule(vec({1, 1}), vec({2, 1}));
  EXPECT_EQ(s(0), 0);
  EXPECT_EQ(s(1), 1);
}

TEST(Pf, EqualAveragesPickMaxRate) {
  const Eigen::VectorXi s = pf_schedule(vec({3, 7, 5}), vec({4, 4, 4}));
  EXPECT_EQ(s(1), 1);
  EXPECT_EQ(s.sum(), 1);
}

TEST(Pf, ZeroAverageUsesFloor) {
  const Eigen::VectorXi s = pf_schedule(vec({1e-3, 100.0}), vec({0.0, 1.0}));
  EXPECT_EQ(s(0), 1);
}

TEST(Pf, MatchesRatioEnumeration) {
  model::RngStream rng(8);
  for (int trial = 0; trial < 200; ++trial) {
    Vector r(4), a(4);
    for (int m = 0; m < 4; ++m) {
      r(m) = rng.uniform(0, 5e6);
      a(m) = rng.uniform(1e3, 5e6);
    }
    int arg = 0;
    for (int m = 1; m < 4; ++m)
      if (r(m) / a(m) > r(arg) / a(arg)) arg = m;
    EXPECT_EQ(pf_schedule(r, a)(arg), 1);
  }
}

TEST(Myopic, NoGainIsInfeasibleAtFullPower) {
  model::PhyParams phy;
  const MyopicPower m = myopic_power(0.0, 1e-10, phy, 200e3);
  EXPECT_EQ(m.power_w, phy.max_power_w);
  EXPECT_FALSE(m.qos_feasible);
}

TEST(Myopic, InteriorMatchesGridScan) {
  model::PhyParams phy;
  // beta = 1000: the EE maximizer is well inside (0, 1).
  const double gain = 1000.0 * phy.noise_power_w;
  const MyopicPower m = myopic_power(gain, 0.0, phy, 0.0);
  const int n = 10000;
  double best_p = 0.0, best = -1.0;
  for (int k = 0; k <= n; ++k) {
    const double p = phy.max_power_w * k / n;
    const double v = std::log1p(1000.0 * p) / (p + 1.0);
    if (v > best) {
      best = v;
      best_p = p;
    }
  }
  EXPECT_GT(m.power_w, 0.0);
  EXPECT_LT(m.power_w, phy.max_power_w);
  EXPECT_NEAR(m.power_w, best_p, phy.max_power_w / n);
  EXPECT_TRUE(m.qos_feasible);
}

TEST(Myopic, QosFloorBinds) {
  model::PhyParams phy;
  const double beta = 1000.0;
  const double gain = beta * phy.noise_power_w;
  // Pick a rate floor above the unconstrained optimum's rate.
  const double qos = 9.0e6;
  const MyopicPower m = myopic_power(gain, 0.0, phy, qos);
  const double p_lo = (std::pow(2.0, qos / phy.bandwidth_hz) - 1.0) / beta;
  EXPECT_NEAR(m.min_power_w, p_lo, 1e-12);
  EXPECT_NEAR(m.power_w, p_lo, 1e-9);
  EXPECT_TRUE(m.qos_feasible);
}

TEST(Myopic, UnreachableQosFlagged) {
  model::PhyParams phy;
  const MyopicPower m = myopic_power(10.0 * phy.noise_power_w, 0.0, phy, 200e3 * 20);
  EXPECT_FALSE(m.qos_feasible);
  EXPECT_EQ(m.power_w, phy.max_power_w);
}

TEST(Myopic, PowerFallsAsInterferenceEstimateRises) {
  model::PhyParams phy;
  const double gain = 1e-7;
  double prev = -1.0;
  // Higher interference means a lower beta; the EE-optimal power rises
  // towards p_max as the link weakens.
  for (double i : {1e-10, 1e-9, 1e-8, 1e-7}) {
    const double p = myopic_power(gain, i, phy, 0.0).power_w;
    EXPECT_GE(p, prev);
    prev = p;
  }
}

TEST(Interference, ArithmeticMean) {
  double est = 0.0;
  est = update_interference_estimate(est, 0.0, 0);
  est = update_interference_estimate(est, 2.0, 1);
  EXPECT_DOUBLE_EQ(est, 1.0);
  EXPECT_THROW(update_interference_estimate(est, -1.0, 2), std::domain_error);
}

TEST(Interference, ExponentialRule) {
  double est = update_interference_estimate(0.0, 4.0, 0, Averaging::exponential, 0.25);
  EXPECT_DOUBLE_EQ(est, 4.0);
  est = update_interference_estimate(est, 0.0, 1, Averaging::exponential, 0.25);
  EXPECT_DOUBLE_EQ(est, 3.0);
}

TEST(Averages, RatesTrackArithmeticMean) {
  BaselineState s(2);
  BaselineParams p;
  update_average_rates(s, vec({2, 0}), p);
  update_average_rates(s, vec({4, 6}), p);
  update_average_rates(s, vec({0, 0}), p);
  EXPECT_DOUBLE_EQ(s.average_rate(0), 2.0);
  EXPECT_DOUBLE_EQ(s.average_rate(1), 2.0);
  EXPECT_EQ(s.rate_samples, 3);
}

TEST(Params, Bounds) {
  BaselineParams p;
  p.smoothing = 0.0;
  EXPECT_THROW(p.validate(), ConfigError);
  p = BaselineParams{};
  p.qos_min_rate_bps = -1.0;
  EXPECT_THROW(p.validate(), ConfigError);
}
