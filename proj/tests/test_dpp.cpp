#include <gtest/gtest.h>

#include <cmath>

#include "udn/dpp.hpp"
#include "udn/errors.hpp"

using namespace udn;
using namespace udn::dpp;

namespace {

Vector vec(std::initializer_list<double> xs) {
  Vector v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index k = 0;
  for (double x : xs) v(k++) = x;
  return v;
}

Eigen::VectorXi ivec(std::initializer_list<int> xs) {
  Eigen::VectorXi v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index k = 0;
  for (int x : xs) v(k++) = x;
  return v;
}

}  // namespace

TEST(ExpectedRate, ZeroGainOrPower) {
  model::PhyParams phy;
  mfg::PowerPolicy pol{Field::Constant(3, 3, 0.5), 1.0};
  EXPECT_EQ(expected_rate(&pol, 0.5, 0.5, 0.0, 0.0, phy), 0.0);
  mfg::PowerPolicy off{Field::Zero(3, 3), 1.0};
  EXPECT_EQ(expected_rate(&off, 0.5, 0.5, 1e-9, 0.0, phy), 0.0);
}

TEST(ExpectedRate, MidCellUsesBilinearPower) {
  model::PhyParams phy;
  mfg::PowerPolicy pol{Field(2, 2), 1.0};
  pol.values << 0.1, 0.3, 0.5, 0.9;
  const double p = 0.25 * (0.1 + 0.3 + 0.5 + 0.9);
  const double g = 2e-9, i = 1e-10;
  EXPECT_NEAR(expected_rate(&pol, 0.5, 0.5, g, i, phy),
              phy.bandwidth_hz * std::log2(1.0 + p * g / (i + phy.noise_power_w)), 1e-6);
}

TEST(ExpectedRate, MissingPolicyIsStateError) {
  model::PhyParams phy;
  EXPECT_THROW(expected_rate(nullptr, 0.5, 0.0, 1e-9, 0.0, phy), StateError);
  mfg::PowerPolicy empty;
  EXPECT_THROW(expected_rate(&empty, 0.5, 0.0, 1e-9, 0.0, phy), StateError);
}

TEST(VirtualQueue, AdditiveUpdate) {
  EXPECT_EQ(update_virtual_queue(0.0, 1, 0), 1.0);
  EXPECT_EQ(update_virtual_queue(0.0, 0, 1), -1.0);
  EXPECT_EQ(update_virtual_queue(3.0, 1, 1), 3.0);
}

TEST(Auxiliary, ArgminWithLowestIndexTies) {
  EXPECT_EQ(solve_auxiliary(vec({3, 1, 2})), ivec({0, 1, 0}));
  EXPECT_EQ(solve_auxiliary(vec({5})), ivec({1}));
  EXPECT_EQ(solve_auxiliary(vec({2, 2})), ivec({1, 0}));
  EXPECT_THROW(solve_auxiliary(Vector()), std::invalid_argument);
}

TEST(Schedule, Examples) {
  DppParams p;
  p.tradeoff = 0.0;
  const Vector zero = Vector::Zero(2);
  EXPECT_EQ(schedule(vec({2, 1}), vec({1, 1}), zero, zero, p), ivec({1, 0}));
  EXPECT_EQ(schedule(vec({0, 0}), vec({0, 0}), vec({0, 4}), zero, p), ivec({0, 1}));
}

TEST(Schedule, MatchesVertexEnumeration) {
  model::RngStream rng(17);
  for (int trial = 0; trial < 200; ++trial) {
    DppParams p;
    p.tradeoff = -rng.uniform(0, 100);
    Vector q(5), r(5), y(5), g(5);
    for (int m = 0; m < 5; ++m) {
      q(m) = rng.uniform(0, 2e6);
      r(m) = rng.uniform(0, 5e6);
      y(m) = rng.uniform(-10, 10);
      g(m) = rng.uniform(0, 1e6);
    }
    double best = -INFINITY;
    int arg = -1;
    for (int m = 0; m < 5; ++m) {
      Eigen::VectorXi lam = Eigen::VectorXi::Zero(5);
      lam(m) = 1;
      const Vector l = lam.cast<double>();
      const double obj = l.dot(q.cwiseProduct(r)) + l.dot(y) - p.tradeoff * l.dot(g);
      if (obj > best) {
        best = obj;
        arg = m;
      }
    }
    const Eigen::VectorXi got = schedule(q, r, y, g, p);
    EXPECT_EQ(got.sum(), 1);
    EXPECT_EQ(got(arg), 1);
  }
}

TEST(Gradient, EeContributionAndLog) {
  const Vector r = vec({2.0, 4.0}), pw = vec({1.0, 0.0}), lam = vec({0.5, 0.0});
  const Vector ee = utility_gradient(UtilityGradient::ee_contribution, r, pw, lam, 1.0);
  EXPECT_DOUBLE_EQ(ee(0), 1.0);
  EXPECT_DOUBLE_EQ(ee(1), 4.0);
  const Vector lg = utility_gradient(UtilityGradient::log_rate, r, pw, lam, 1.0);
  EXPECT_NEAR(lg(0), 2.0 / (1.0 + 1e-9), 1e-12);
  EXPECT_GT(lg(1), 1e9);
}

TEST(Params, TradeoffMustBeNonPositive) {
  DppParams p;
  p.tradeoff = 1.0;
  EXPECT_THROW(p.validate(), ConfigError);
}

TEST(Step, SingleUeAlwaysScheduled) {
  SchedulerState s(1);
  DppParams p;
  for (int k = 0; k < 20; ++k) {
    Observation obs{vec({1e5}), vec({1e6}), vec({0.3}), 1.0};
    auto [out, next] = dpp_step(s, obs, p);
    EXPECT_EQ(out.scheduled_ue, 0);
    EXPECT_EQ(next.virtual_queue()(0), 0.0);
    s = next;
  }
  EXPECT_EQ(s.lambda_avg()(0), 1.0);
}

TEST(Step, SymmetricPairAlternates) {
  // Hand simulation with the log-rate gradient: period 0 is a tie won by
  // UE 0; afterwards the UE with the smaller running share has the larger
  // gradient, so the picks go 0, 1, 0, 1, ...
  SchedulerState s(2);
  DppParams p;
  p.gradient = UtilityGradient::log_rate;
  for (int k = 0; k < 10; ++k) {
    Observation obs{vec({1e5, 1e5}), vec({1e6, 1e6}), vec({0.5, 0.5}), 1.0};
    auto [out, next] = dpp_step(s, obs, p);
    EXPECT_EQ(out.scheduled_ue, k % 2) << "period " << k;
    s = next;
  }
  EXPECT_EQ(s.schedule_counts(), ivec({5, 5}));
}

TEST(Step, SymmetricPairUnderEeGradientKeepsFirstUe) {
  // The EE-contribution gradient does not depend on the running share, so
  // auxiliary and schedule pick the same UE and the virtual queues never move.
  SchedulerState s(2);
  DppParams p;
  for (int k = 0; k < 10; ++k) {
    Observation obs{vec({1e5, 1e5}), vec({1e6, 1e6}), vec({0.5, 0.5}), 1.0};
    auto [out, next] = dpp_step(s, obs, p);
    EXPECT_EQ(out.scheduled_ue, 0);
    s = next;
  }
  EXPECT_EQ(s.virtual_queue().cwiseAbs().maxCoeff(), 0.0);
}

TEST(Step, LambdaAverageIsExactMean) {
  SchedulerState s(3);
  DppParams p;
  model::RngStream rng(2);
  Eigen::VectorXi counts = Eigen::VectorXi::Zero(3);
  for (int k = 0; k < 50; ++k) {
    Observation obs{Vector::NullaryExpr(3, [&](Eigen::Index) { return rng.uniform(0, 1); }),
                    Vector::NullaryExpr(3, [&](Eigen::Index) { return rng.uniform(0, 1); }),
                    Vector::Constant(3, 0.4), 1.0};
    auto [out, next] = dpp_step(s, obs, p);
    EXPECT_EQ(out.schedule.sum(), 1);
    EXPECT_EQ(out.auxiliary.sum(), 1);
    counts += out.schedule;
    s = next;
  }
  EXPECT_TRUE(s.lambda_avg().isApprox(counts.cast<double>() / 50.0));
}

TEST(Step, VirtualQueuesStayBoundedAndTelescope) {
  SchedulerState s(3);
  DppParams p;
  p.tradeoff = -1.0;
  model::RngStream rng(4);
  Eigen::VectorXi aux_sum = Eigen::VectorXi::Zero(3), sched_sum = Eigen::VectorXi::Zero(3);
  double worst = 0.0;
  for (int k = 0; k < 10000; ++k) {
    Observation obs{vec({rng.uniform(0, 1), rng.uniform(0, 1), rng.uniform(0, 1)}),
                    vec({1.0, 2.0, 3.0}), vec({0.3, 0.3, 0.3}), 1.0};
    auto [out, next] = dpp_step(s, obs, p);
    aux_sum += out.auxiliary;
    sched_sum += out.schedule;
    s = next;
    worst = std::max(worst, s.virtual_queue().cwiseAbs().maxCoeff());
  }
  EXPECT_TRUE(s.virtual_queue() == (aux_sum - sched_sum).cast<double>());
  EXPECT_LT(worst, 100.0);
}
