#include <gtest/gtest.h>

#include <cmath>

#include "udn/errors.hpp"
#include "udn/mfg.hpp"
#include "udn/model.hpp"

using namespace udn;
using namespace udn::mfg;

namespace {

double golden_max(const std::function<double(double)>& h, double a, double b) {
  const double g = (std::sqrt(5.0) - 1.0) / 2.0;
  for (int it = 0; it < 200; ++it) {
    const double c = b - g * (b - a), d = a + g * (b - a);
    if (h(c) > h(d)) b = d; else a = c;
  }
  return 0.5 * (a + b);
}

// Grid scan then golden-section around the best node.
double reference_argmax(double beta, double dgdq, double pmax, double p0) {
  auto h = [&](double p) { return std::log1p(beta * p) / (p + p0) - dgdq * std::log1p(beta * p); };
  const int n = 4000;
  int best = 0;
  for (int k = 1; k <= n; ++k)
    if (h(pmax * k / n) > h(pmax * best / n)) best = k;
  if (best == 0 || best == n) return pmax * best / n;
  return golden_max(h, pmax * (best - 1) / n, pmax * (best + 1) / n);
}

MfgParams small_params() {
  MfgParams p;
  p.serving_gain = 3.0e-8;
  p.interference_gain = 2.0e-10;
  p.phy.sbs_density = 20;
  return p;
}

}  // namespace

TEST(Pointwise, NoGainNoPower) {
  model::PhyParams phy;
  EXPECT_EQ(optimal_power_pointwise(0.0, 0.3, phy), 0.0);
}

TEST(Pointwise, InteriorRootMatchesBisection) {
  model::PhyParams phy;
  const double beta = 1.0, v = 0.05, p0 = 1.0;
  // v (p+1)^2 = (p+1) - (1+p) ln(1+p)  <=>  v (p+1) = 1 - ln(1+p)
  double a = 0.0, b = 1.0;
  for (int it = 0; it < 200; ++it) {
    const double m = 0.5 * (a + b);
    (v * (m + p0) - 1.0 + std::log1p(m) > 0 ? b : a) = m;
  }
  const double p = optimal_power_pointwise(beta, v / beta, phy);
  EXPECT_NEAR(p, 0.5 * (a + b), 1e-9);
  EXPECT_NEAR(p, reference_argmax(beta, v / beta, 1.0, p0), 1e-6);
}

TEST(Pointwise, SteepGradientSwitchesOff) {
  model::PhyParams phy;
  EXPECT_EQ(optimal_power_pointwise(50.0, 10.0, phy), 0.0);
}

TEST(Pointwise, NegativeGradientSaturates) {
  model::PhyParams phy;
  EXPECT_EQ(optimal_power_pointwise(50.0, -10.0, phy), phy.max_power_w);
}

TEST(Pointwise, MatchesReferenceOnRandomDraws) {
  model::PhyParams phy;
  model::RngStream rng(5);
  for (int k = 0; k < 500; ++k) {
    const double beta = std::pow(10.0, rng.uniform(-2, 4));
    const double v = rng.uniform(-2.0, 2.0);
    const double p = optimal_power_pointwise(beta, v / beta, phy);
    const double ref = reference_argmax(beta, v / beta, phy.max_power_w, phy.circuit_power_w);
    const double hp = pointwise_hamiltonian(p, beta, v / beta, 1.0);
    const double hr = pointwise_hamiltonian(ref, beta, v / beta, 1.0);
    EXPECT_GE(hp, hr - 1e-12 * std::max(1.0, std::abs(hr))) << "beta " << beta << " v " << v;
    EXPECT_NEAR(p, ref, 1e-4) << "beta " << beta << " v " << v;
  }
}

TEST(Pointwise, SubIntervalStaysInside) {
  const double p = optimal_power_pointwise(100.0, 0.0, 0.4, 0.6, 1.0);
  EXPECT_GE(p, 0.4);
  EXPECT_LE(p, 0.6);
}

TEST(Pointwise, RejectsNegativeBeta) {
  model::PhyParams phy;
  EXPECT_THROW(optimal_power_pointwise(-1.0, 0.0, phy), std::domain_error);
}

TEST(Existence, Examples) {
  model::PhyParams phy;
  EXPECT_TRUE(existence_check(0.1, 0.5, 2.0, phy));
  EXPECT_FALSE(existence_check(0.0, 0.0, 2.0, phy));
  // 2v(p + p0) = -beta ln(1 + beta p) exactly.
  const double beta = 1.0, p = std::exp(1.0) - 1.0;
  const double v = -beta * 1.0 / (2.0 * (p + 1.0));
  EXPECT_FALSE(existence_check(v, p, beta, phy, 1e-12));
}

TEST(Grid, Spacing) {
  GridSpec g{11, 21, 2.0};
  EXPECT_DOUBLE_EQ(g.dt(), 0.2);
  EXPECT_DOUBLE_EQ(g.dq(), 0.05);
  EXPECT_THROW((GridSpec{1, 10, 1.0}.validate()), ConfigError);
}

TEST(Boundary, ParseAndValues) {
  EXPECT_EQ(parse_boundary("linear"), Boundary::linear);
  EXPECT_THROW(parse_boundary("cubic"), ConfigError);
  EXPECT_DOUBLE_EQ(terminal_value(Boundary::exponential, 0.0), -4.0);
  EXPECT_DOUBLE_EQ(terminal_value(Boundary::uniform, 0.7), -4.0);
  // The linear boundary shares both endpoints with the exponential one.
  EXPECT_NEAR(terminal_value(Boundary::linear, 1.0), terminal_value(Boundary::exponential, 1.0),
              1e-12);
  EXPECT_NEAR(terminal_value(Boundary::linear, 0.0), -4.0, 1e-12);
}

TEST(Hjb, ConstantTerminalWithoutGainStaysConstant) {
  GridSpec g{201, 41, 1.0};
  MfgParams p = small_params();
  p.serving_gain = 0.0;
  p.boundary = Boundary::uniform;
  const HjbResult r = hjb_backward(g, Vector::Zero(g.n_t), p);
  EXPECT_LT((r.value.values.array() + 4.0).abs().maxCoeff(), 1e-12);
  EXPECT_EQ(r.policy.values.cwiseAbs().maxCoeff(), 0.0);
}

TEST(Hjb, TerminalSliceIsExact) {
  GridSpec g{801, 51, 1.0};
  MfgParams p = small_params();
  const HjbResult r = hjb_backward(g, Vector::Constant(g.n_t, 1e-9), p);
  for (int j = 0; j < g.n_q; ++j)
    EXPECT_EQ(r.value.values(g.n_t - 1, j), terminal_value(Boundary::exponential, g.queue(j)));
}

TEST(Hjb, FlatTerminalIntegratesRunningReward) {
  GridSpec g{801, 51, 1.0};
  MfgParams p = small_params();
  p.boundary = Boundary::uniform;
  const double interference = 2e-9;
  const HjbResult r = hjb_backward(g, Vector::Constant(g.n_t, interference), p);
  const double beta = p.beta(interference);
  // With no gradient the control is the unconstrained energy-efficient power.
  const double pe = model::ee_optimal_power(beta, 0.0, 1.0, 1.0);
  const double f = std::log1p(beta * pe) / (pe + 1.0);
  for (int i = 0; i < g.n_t; i += 100)
    for (int j = 0; j < g.n_q; j += 10) {
      EXPECT_NEAR(r.value.values(i, j), -4.0 + (1.0 - g.time(i)) * f, 1e-9);
      EXPECT_NEAR(r.policy.values(i, j), pe, 1e-8);
    }
}

TEST(Hjb, CflViolationIsReported) {
  GridSpec g{3, 101, 1.0};
  MfgParams p = small_params();
  try {
    hjb_backward(g, Vector::Zero(g.n_t), p);
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("n_t"), std::string::npos);
  }
}

TEST(Fpk, ZeroDriftPreservesDensity) {
  GridSpec g{101, 51, 1.0};
  const Vector rho0 = truncated_gaussian(g, 0.5, 0.1);
  const DensityField d = fpk_forward(g, rho0, Field::Zero(g.n_t, g.n_q));
  for (int i = 0; i < g.n_t; ++i)
    EXPECT_LT((d.values.row(i).transpose() - rho0).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Fpk, UniformDriftTranslatesMean) {
  GridSpec g{401, 201, 1.0};
  const Vector rho0 = truncated_gaussian(g, 0.8, 0.002);
  const double c = 0.5;
  const DensityField d = fpk_forward(g, rho0, Field::Constant(g.n_t, g.n_q, -c));
  for (int i = 0; i < g.n_t; i += 50) {
    const double t = g.time(i);
    Vector qv(g.n_q);
    for (int j = 0; j < g.n_q; ++j) qv(j) = g.queue(j);
    const double mean = trapezoid(d.values.row(i).transpose().cwiseProduct(qv), g.dq());
    EXPECT_NEAR(mean, 0.8 - c * t, 0.01) << "t " << t;
    EXPECT_NEAR(d.mass(i, g.dq()), 1.0, 1e-12);
  }
}

TEST(Fpk, MassPilesUpAtEmptyQueue) {
  GridSpec g{401, 101, 1.0};
  const Vector rho0 = truncated_gaussian(g, 0.3, 0.002);
  const DensityField d = fpk_forward(g, rho0, Field::Constant(g.n_t, g.n_q, -1.0));
  EXPECT_NEAR(d.node_mass(g.n_t - 1, 0, g.dq()), 1.0, 1e-6);
  EXPECT_GE(d.values.minCoeff(), 0.0);
}

TEST(Fpk, RejectsUnnormalizedInput) {
  GridSpec g{11, 11, 1.0};
  EXPECT_THROW(fpk_forward(g, Vector::Constant(11, 2.0), Field::Zero(11, 11)), std::domain_error);
}

TEST(MeanField, ConstantPolicy) {
  GridSpec g{2, 101, 1.0};
  const Vector rho = truncated_gaussian(g, 0.4, 0.05);
  const double i = mf_interference(rho, Vector::Constant(g.n_q, 0.3), g.dq(), 12.0, 1e-10);
  EXPECT_NEAR(i, 12.0 * 1e-10 * 0.3, 1e-20);
  EXPECT_EQ(mf_interference(rho, Vector::Zero(g.n_q), g.dq(), 12.0, 1e-10), 0.0);
}

TEST(MeanField, HandQuadrature) {
  Vector rho(3), p(3);
  rho << 0.0, 2.0, 0.0;
  p << 1.0, 0.5, 1.0;
  // trapezoid on dq = 0.5: 0.5 * (0 + 2*0.5*... ) = 0.5 * 1.0
  EXPECT_NEAR(mf_interference(rho, p, 0.5, 2.0, 3.0), 2.0 * 3.0 * 0.5, 1e-15);
}

TEST(MeanField, TruncatedGaussianIsNormalized) {
  GridSpec g{2, 101, 1.0};
  EXPECT_NEAR(trapezoid(truncated_gaussian(g, 0.9, 0.3), g.dq()), 1.0, 1e-12);
}

TEST(Policy, BilinearLookup) {
  PowerPolicy pol{Field(2, 2), 1.0};
  pol.values << 0.0, 1.0, 2.0, 3.0;
  EXPECT_DOUBLE_EQ(pol.at(0.0, 0.0), 0.0);
  EXPECT_DOUBLE_EQ(pol.at(0.5, 0.5), 1.5);
  EXPECT_DOUBLE_EQ(pol.at(2.0, -1.0), 2.0);
}

TEST(Empirical, BinsToNearestNode) {
  GridSpec g{2, 11, 1.0};
  const DensityField d = DensityField::empirical(g, {{0.0, 0.52, 0.49, 1.0}, {}});
  EXPECT_NEAR(d.mass(0, g.dq()), 1.0, 1e-12);
  EXPECT_NEAR(d.node_mass(0, 5, g.dq()), 0.5, 1e-12);
  EXPECT_EQ(d.mass(1, g.dq()), 0.0);
}

TEST(Solve, WithoutGainConvergesImmediately) {
  GridSpec g{201, 41, 1.0};
  MfgParams p = small_params();
  p.serving_gain = 0.0;
  const MfgSolution s = solve_mfg(g, p);
  EXPECT_EQ(s.iterations, 1);
  EXPECT_EQ(s.interference.cwiseAbs().maxCoeff(), 0.0);
}

TEST(Solve, ConvergesAndIsSelfConsistent) {
  GridSpec g{801, 51, 1.0};
  const MfgParams p = small_params();
  const MfgSolution s = solve_mfg(g, p);
  EXPECT_LE(s.residual, p.tolerance);
  EXPECT_LE(s.iterations, p.max_iters);
  for (int i = 0; i < g.n_t; ++i) EXPECT_NEAR(s.density.mass(i, g.dq()), 1.0, 1e-3);
  EXPECT_GE(s.density.values.minCoeff(), -1e-9);
  EXPECT_GE(s.policy.values.minCoeff(), 0.0);
  EXPECT_LE(s.policy.values.maxCoeff(), 1.0);
  const double scale = s.interference.maxCoeff();
  EXPECT_GT(scale, 0.0);
  for (int i = 0; i < g.n_t; i += 40) {
    const double again =
        mf_interference(s.density.values.row(i).transpose(), s.policy.values.row(i).transpose(),
                        g.dq(), p.phy.sbs_density, p.interference_gain);
    EXPECT_NEAR(again, s.interference(i), 2.0 * p.tolerance * scale);
  }
}

TEST(Solve, Deterministic) {
  GridSpec g{801, 51, 1.0};
  const MfgParams p = small_params();
  const MfgSolution a = solve_mfg(g, p), b = solve_mfg(g, p);
  EXPECT_EQ(a.iterations, b.iterations);
  EXPECT_TRUE(a.policy.values == b.policy.values);
  EXPECT_TRUE(a.interference == b.interference);
}

TEST(Solve, DampingDoesNotMoveTheFixedPoint) {
  GridSpec g{801, 51, 1.0};
  MfgParams p = small_params();
  const MfgSolution half = solve_mfg(g, p);
  p.damping = 1.0;
  p.max_iters = 400;
  MfgSolution full;
  try {
    full = solve_mfg(g, p);
  } catch (const ConvergenceError&) {
    GTEST_SKIP() << "undamped iteration oscillates on this instance";
  }
  const double scale = half.interference.maxCoeff();
  EXPECT_LT((half.interference - full.interference).cwiseAbs().maxCoeff(),
            10.0 * p.tolerance * scale);
}

TEST(Solve, GridRefinementIsStable) {
  MfgParams p = small_params();
  const MfgSolution coarse = solve_mfg(GridSpec{801, 51, 1.0}, p);
  const MfgSolution fine = solve_mfg(GridSpec{1601, 101, 1.0}, p);
  double worst = 0.0;
  for (int i = 0; i < 801; ++i)
    worst = std::max(worst, std::abs(coarse.interference(i) - fine.interference(2 * i)));
  EXPECT_LT(worst, 0.05 * fine.interference.maxCoeff());
}

TEST(Solve, ExhaustedBudgetCarriesResiduals) {
  GridSpec g{801, 51, 1.0};
  MfgParams p = small_params();
  p.max_iters = 1;
  p.tolerance = 1e-14;
  try {
    solve_mfg(g, p);
    FAIL();
  } catch (const ConvergenceError& e) {
    EXPECT_EQ(e.residuals().size(), 1u);
  }
}

TEST(Solve, RejectsChannelDiffusion) {
  MfgParams p = small_params();
  p.phy.drift_scale = 0.1;
  EXPECT_THROW(solve_mfg(GridSpec{}, p), ConfigError);
}
