#include "udn/mfg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include <boost/math/tools/toms748_solve.hpp>

#include "udn/errors.hpp"

namespace udn::mfg {

namespace {

constexpr double kLn2 = 0.69314718055994530942;

// Root of a continuous function with a sign change on [a, b].
template <typename F>
double bracketed_root(F&& fn, double a, double b, double fa, double fb) {
  if (fa == 0.0) return a;
  if (fb == 0.0) return b;
  boost::uintmax_t max_iter = 100;
  auto tol = [](double x, double y) { return std::abs(x - y) <= 1e-13 * (1.0 + std::abs(x)); };
  const auto r = boost::math::tools::toms748_solve(fn, a, b, fa, fb, tol, max_iter);
  return 0.5 * (r.first + r.second);
}

void check_finite(double x, const char* what) {
  if (!std::isfinite(x)) throw std::domain_error(std::string(what) + " must be finite");
}

}  // namespace

void GridSpec::validate() const {
  if (n_t < 2) throw ConfigError("grid.n_t must be >= 2");
  if (n_q < 2) throw ConfigError("grid.n_q must be >= 2");
  if (!(horizon > 0.0)) throw ConfigError("grid.horizon must be > 0");
}

Boundary parse_boundary(std::string_view name) {
  if (name == "exponential") return Boundary::exponential;
  if (name == "uniform") return Boundary::uniform;
  if (name == "linear") return Boundary::linear;
  throw ConfigError("solver.boundary must be one of exponential, uniform, linear (got '" +
                    std::string(name) + "')");
}

std::string to_string(Boundary b) {
  switch (b) {
    case Boundary::exponential: return "exponential";
    case Boundary::uniform: return "uniform";
    case Boundary::linear: return "linear";
  }
  return "unknown";
}

double terminal_value(Boundary b, double q) {
  switch (b) {
    case Boundary::exponential: return -4.0 * std::exp(q);
    case Boundary::uniform: return -4.0;
    case Boundary::linear: return -4.0 * (std::exp(1.0) - 1.0) * q - 4.0;
  }
  return 0.0;
}

double MfgParams::service_scale() const {
  return phy.bandwidth_hz * period_s() / (queue.capacity_bits * kLn2);
}

double MfgParams::arrival_drift() const {
  return queue.mean_arrival_bps * period_s() / queue.capacity_bits;
}

double MfgParams::beta(double interference_w) const {
  return serving_gain / (interference_w + phy.noise_power_w);
}

double MfgParams::drift(double beta, double power_w) const {
  return arrival_drift() - service_scale() * std::log1p(beta * power_w);
}

double MfgParams::balance_power(double beta) const {
  if (beta <= 0.0) return std::numeric_limits<double>::infinity();
  return std::expm1(arrival_drift() / service_scale()) / beta;
}

void MfgParams::validate() const {
  phy.validate();
  queue.validate();
  if (phy.drift_scale != 0.0)
    throw ConfigError("phy.drift_scale: only zero channel diffusion is supported");
  if (slots_per_period < 1) throw ConfigError("sim.slots_per_period must be >= 1");
  if (!(serving_gain >= 0.0)) throw ConfigError("solver.serving_gain must be >= 0");
  if (!(interference_gain >= 0.0)) throw ConfigError("solver.interference_gain must be >= 0");
  if (!(damping > 0.0 && damping <= 1.0)) throw ConfigError("solver.damping must be in (0,1]");
  if (!(tolerance > 0.0)) throw ConfigError("solver.tolerance must be > 0");
  if (max_iters < 1) throw ConfigError("solver.max_iters must be >= 1");
  if (!(initial_variance > 0.0)) throw ConfigError("solver.initial_variance must be > 0");
}

double DensityField::mass(int i, double dq) const {
  return trapezoid(values.row(i).transpose(), dq);
}

double DensityField::node_mass(int i, int j, double dq) const {
  const bool end = (j == 0 || j == values.cols() - 1);
  return values(i, j) * (end ? 0.5 * dq : dq);
}

DensityField DensityField::empirical(const GridSpec& grid,
                                     const std::vector<std::vector<double>>& samples) {
  grid.validate();
  if (static_cast<int>(samples.size()) != grid.n_t)
    throw std::invalid_argument("empirical density: need one sample set per time slice");
  const Vector w = trapezoid_weights<double>(grid.n_q, grid.dq());
  DensityField out{Field::Zero(grid.n_t, grid.n_q)};
  for (int i = 0; i < grid.n_t; ++i) {
    const auto& s = samples[i];
    if (s.empty()) continue;
    for (double q : s) {
      const int j = std::clamp(static_cast<int>(std::lround(std::clamp(q, 0.0, 1.0) / grid.dq())),
                               0, grid.n_q - 1);
      out.values(i, j) += 1.0 / (static_cast<double>(s.size()) * w(j));
    }
  }
  return out;
}

double PowerPolicy::at(double t, double q) const {
  const auto n_t = values.rows();
  const auto n_q = values.cols();
  const double ft = std::clamp(t / horizon, 0.0, 1.0) * static_cast<double>(n_t - 1);
  const double fq = std::clamp(q, 0.0, 1.0) * static_cast<double>(n_q - 1);
  const auto i0 = std::min<Eigen::Index>(static_cast<Eigen::Index>(ft), n_t - 2);
  const auto j0 = std::min<Eigen::Index>(static_cast<Eigen::Index>(fq), n_q - 2);
  const double a = ft - static_cast<double>(i0);
  const double b = fq - static_cast<double>(j0);
  return (1 - a) * (1 - b) * values(i0, j0) + (1 - a) * b * values(i0, j0 + 1) +
         a * (1 - b) * values(i0 + 1, j0) + a * b * values(i0 + 1, j0 + 1);
}

double pointwise_hamiltonian(double power_w, double beta, double dgamma_dq,
                             double circuit_power_w) {
  const double l = std::log1p(beta * power_w);
  return l / (power_w + circuit_power_w) - dgamma_dq * l;
}

double optimal_power_pointwise(double beta, double dgamma_dq, const model::PhyParams& phy) {
  return optimal_power_pointwise(beta, dgamma_dq, 0.0, phy.max_power_w, phy.circuit_power_w);
}

double optimal_power_pointwise(double beta, double dgamma_dq, double lo, double hi,
                               double p0) {
  check_finite(beta, "beta");
  check_finite(dgamma_dq, "dgamma_dq");
  if (beta < 0.0) throw std::domain_error("beta must be >= 0");
  if (beta == 0.0 || hi <= lo) return lo;

  const double v = dgamma_dq * beta;
  // H'(p) has the sign of -F(p).
  auto F = [&](double p) {
    return v * (p + p0) * (p + p0) - beta * (p + p0) + (1.0 + beta * p) * std::log1p(beta * p);
  };
  auto dF = [&](double p) { return 2.0 * v * (p + p0) + beta * std::log1p(beta * p); };
  auto H = [&](double p) { return pointwise_hamiltonian(p, beta, dgamma_dq, p0); };

  // F'' = 2v + beta^2/(1 + beta p) is decreasing, so F' is concave: it rises
  // up to p_c and falls after. That splits [lo, hi] into at most three
  // pieces on which F is monotone.
  double knots[4];
  int n_knots = 0;
  knots[n_knots++] = lo;
  double p_c = hi;
  if (v < 0.0) p_c = std::clamp((beta * beta / (-2.0 * v) - 1.0) / beta, lo, hi);
  const double d_lo = dF(lo), d_c = dF(p_c), d_hi = dF(hi);
  if ((d_lo < 0.0) != (d_c < 0.0) && p_c > lo)
    knots[n_knots++] = bracketed_root(dF, lo, p_c, d_lo, d_c);
  if ((d_c < 0.0) != (d_hi < 0.0) && hi > p_c)
    knots[n_knots++] = bracketed_root(dF, p_c, hi, d_c, d_hi);
  knots[n_knots++] = hi;

  double best_p = lo;
  double best_h = H(lo);
  const double h_hi = H(hi);
  if (h_hi > best_h) {
    best_p = hi;
    best_h = h_hi;
  }
  for (int k = 0; k + 1 < n_knots; ++k) {
    const double a = knots[k], b = knots[k + 1];
    if (b <= a) continue;
    const double fa = F(a), fb = F(b);
    // Local maxima of H are where F crosses from negative to positive.
    if (fa < 0.0 && fb > 0.0) {
      const double r = bracketed_root(F, a, b, fa, fb);
      const double h = H(r);
      if (h > best_h) {
        best_h = h;
        best_p = r;
      }
    }
  }
  return best_p;
}

bool existence_check(double v, double power_w, double beta, const model::PhyParams& phy,
                     double epsilon) {
  const double e =
      2.0 * v * (power_w + phy.circuit_power_w) + beta * std::log1p(beta * power_w);
  return std::abs(e) > epsilon;
}

namespace {

struct NodeChoice {
  double power;
  double hamiltonian;  // f + D * gradient
};

// Upwind Hamiltonian at a node: the draining branch (D <= 0) sees the
// backward difference, the filling branch (D >= 0) the forward one.
NodeChoice best_control(double beta, double grad_minus, double grad_plus,
                        const MfgParams& params) {
  const double p_max = params.phy.max_power_w;
  const double p0 = params.phy.circuit_power_w;
  const double c = params.service_scale();
  const double p_bal = std::min(params.balance_power(beta), p_max);

  auto value = [&](double p, double grad) {
    const double l = std::log1p(beta * p);
    return l / (p + p0) + params.drift(beta, p) * grad;
  };

  NodeChoice best{0.0, -std::numeric_limits<double>::infinity()};
  {
    const double p = optimal_power_pointwise(beta, c * grad_plus, 0.0, p_bal, p0);
    best = {p, value(p, grad_plus)};
  }
  if (p_bal < p_max) {
    const double p = optimal_power_pointwise(beta, c * grad_minus, p_bal, p_max, p0);
    const double h = value(p, grad_minus);
    if (h > best.hamiltonian) best = {p, h};
  }
  return best;
}

double max_drift(const Vector& interference, const MfgParams& params) {
  double m = params.arrival_drift();
  for (Eigen::Index i = 0; i < interference.size(); ++i) {
    const double d = params.drift(params.beta(interference(i)), params.phy.max_power_w);
    m = std::max(m, std::abs(d));
  }
  return m;
}

void check_cfl(double speed, const GridSpec& grid) {
  const double nu = speed * grid.dt() / grid.dq();
  if (nu > 1.0 + 1e-12) {
    std::ostringstream os;
    os << "CFL condition violated: max drift " << speed << " * dt " << grid.dt() << " / dq "
       << grid.dq() << " = " << nu << " > 1 (increase grid.n_t)";
    throw ConfigError(os.str());
  }
}

}  // namespace

double cfl_number(const GridSpec& grid, const MfgParams& params) {
  const Vector zero = Vector::Zero(1);
  return max_drift(zero, params) * grid.dt() / grid.dq();
}

HjbResult hjb_backward(const GridSpec& grid, const Vector& interference,
                       const MfgParams& params) {
  grid.validate();
  if (interference.size() != grid.n_t)
    throw std::invalid_argument("hjb_backward: interference trajectory length != n_t");
  if ((interference.array() < 0.0).any())
    throw std::domain_error("hjb_backward: interference must be >= 0");
  check_cfl(max_drift(interference, params), grid);

  const int nt = grid.n_t, nq = grid.n_q;
  const double dt = grid.dt(), dq = grid.dq();
  HjbResult out;
  out.value.values.resize(nt, nq);
  out.policy.values.resize(nt, nq);
  out.policy.horizon = grid.horizon;

  for (int j = 0; j < nq; ++j)
    out.value.values(nt - 1, j) = terminal_value(params.boundary, grid.queue(j));

  const double c = params.service_scale();
  auto sweep_row = [&](int src, int dst, double beta) {
    const auto g = out.value.values.row(src);
    for (int j = 0; j < nq; ++j) {
      // At q = 0 the queue cannot drain further, at q = 1 it cannot grow.
      const double gm = j > 0 ? (g(j) - g(j - 1)) / dq : 0.0;
      const double gp = j < nq - 1 ? (g(j + 1) - g(j)) / dq : 0.0;
      const NodeChoice ch = best_control(beta, gm, gp, params);
      out.policy.values(dst, j) = ch.power;
      if (dst != src) out.value.values(dst, j) = g(j) + dt * ch.hamiltonian;
      const double grad = params.drift(beta, ch.power) <= 0.0 ? gm : gp;
      if (!existence_check(c * grad * beta, ch.power, beta, params.phy,
                           params.existence_epsilon))
        ++out.existence_violations;
    }
  };

  sweep_row(nt - 1, nt - 1, params.beta(interference(nt - 1)));
  for (int i = nt - 2; i >= 0; --i) {
    sweep_row(i + 1, i, params.beta(interference(i)));
    if (!out.value.values.row(i).allFinite())
      throw SchemeError("hjb_backward: value diverged at t = " + std::to_string(grid.time(i)));
  }
  return out;
}

Field drift_field(const PowerPolicy& policy, const Vector& interference,
                  const MfgParams& params) {
  Field d(policy.values.rows(), policy.values.cols());
  for (Eigen::Index i = 0; i < d.rows(); ++i) {
    const double beta = params.beta(interference(i));
    for (Eigen::Index j = 0; j < d.cols(); ++j) d(i, j) = params.drift(beta, policy.values(i, j));
  }
  return d;
}

DensityField fpk_forward(const GridSpec& grid, const Vector& initial_density,
                         const Field& drift) {
  grid.validate();
  const int nt = grid.n_t, nq = grid.n_q;
  if (initial_density.size() != nq || drift.rows() != nt || drift.cols() != nq)
    throw std::invalid_argument("fpk_forward: field dimensions do not match the grid");
  const double dt = grid.dt(), dq = grid.dq();
  if ((initial_density.array() < 0.0).any())
    throw std::domain_error("fpk_forward: initial density must be >= 0");
  if (std::abs(trapezoid(initial_density, dq) - 1.0) > 1e-3)
    throw std::domain_error("fpk_forward: initial density must integrate to 1");
  check_cfl(drift.cwiseAbs().maxCoeff(), grid);

  const Vector w = trapezoid_weights<double>(nq, dq);
  DensityField out{Field(nt, nq)};
  out.values.row(0) = initial_density.transpose();
  Vector mass = initial_density.cwiseProduct(w);
  Vector next(nq);

  for (int i = 0; i + 1 < nt; ++i) {
    next = mass;
    for (int j = 0; j + 1 < nq; ++j) {
      // Donor-cell flux across the interface between nodes j and j+1.
      double right = dt * std::max(drift(i, j), 0.0) * mass(j) / w(j);
      double left = dt * std::max(-drift(i, j + 1), 0.0) * mass(j + 1) / w(j + 1);
      if (j == 0) right = std::min(right, mass(j));
      if (j + 1 == nq - 1) left = std::min(left, mass(j + 1));
      next(j) += left - right;
      next(j + 1) += right - left;
    }
    mass = next;
    if (mass.minCoeff() < -1e-9 * dq)
      throw SchemeError("fpk_forward: negative density at t = " + std::to_string(grid.time(i + 1)));
    const double total = mass.sum();
    if (std::abs(total - 1.0) > 1e-3)
      throw SchemeError("fpk_forward: mass drifted to " + std::to_string(total));
    out.values.row(i + 1) = mass.cwiseQuotient(w).transpose();
  }
  return out;
}

DensityField fpk_forward(const GridSpec& grid, const Vector& initial_density,
                         const PowerPolicy& policy, const Vector& interference,
                         const MfgParams& params) {
  return fpk_forward(grid, initial_density, drift_field(policy, interference, params));
}

double mf_interference(const Eigen::Ref<const Vector>& density,
                       const Eigen::Ref<const Vector>& policy, double dq, double eta,
                       double mean_sq_gain) {
  if (density.size() != policy.size())
    throw std::invalid_argument("mf_interference: density and policy slices differ in length");
  const Vector integrand = density.cwiseProduct(policy);
  return std::max(0.0, eta * mean_sq_gain * trapezoid(integrand, dq));
}

Vector truncated_gaussian(const GridSpec& grid, double mean, double variance) {
  Vector rho(grid.n_q);
  for (int j = 0; j < grid.n_q; ++j) {
    const double z = grid.queue(j) - mean;
    rho(j) = std::exp(-0.5 * z * z / variance);
  }
  return rho / trapezoid(rho, grid.dq());
}

MfgSolution solve_mfg(const GridSpec& grid, const MfgParams& params) {
  grid.validate();
  params.validate();

  MfgSolution sol;
  sol.grid = grid;
  sol.params = params;
  const Vector rho0 = truncated_gaussian(grid, params.initial_mean, params.initial_variance);
  const double eta = params.phy.sbs_density;
  const double dq = grid.dq();

  Vector interference = Vector::Zero(grid.n_t);
  if (params.initial_interference == InitialInterference::half_power)
    interference.setConstant(eta * params.interference_gain * 0.5 * params.phy.max_power_w);

  Vector updated(grid.n_t);
  for (int it = 1; it <= params.max_iters; ++it) {
    HjbResult hjb = hjb_backward(grid, interference, params);
    DensityField rho = fpk_forward(grid, rho0, hjb.policy, interference, params);
    for (int i = 0; i < grid.n_t; ++i)
      updated(i) = mf_interference(rho.values.row(i).transpose(),
                                   hjb.policy.values.row(i).transpose(), dq, eta,
                                   params.interference_gain);

    const double scale = std::max(updated.cwiseAbs().maxCoeff(), params.phy.noise_power_w);
    const double residual = (updated - interference).cwiseAbs().maxCoeff() / scale;
    sol.residual_history.push_back(residual);

    if (residual <= params.tolerance) {
      // The returned triple is self-consistent with the interference it was
      // computed from.
      sol.value = std::move(hjb.value);
      sol.policy = std::move(hjb.policy);
      sol.density = std::move(rho);
      sol.interference = interference;
      sol.iterations = it;
      sol.residual = residual;
      sol.existence_violations = hjb.existence_violations;
      return sol;
    }
    interference = (1.0 - params.damping) * interference + params.damping * updated;
  }
  std::ostringstream os;
  os << "mean-field fixed point did not converge in " << params.max_iters
     << " iterations (last residual " << sol.residual_history.back() << ")";
  throw ConvergenceError(os.str(), sol.residual_history);
}

}  // namespace udn::mfg
