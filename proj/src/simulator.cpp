#include "udn/simulator.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <stdexcept>
#include <thread>

#include <boost/math/distributions/students_t.hpp>

#include "udn/errors.hpp"

namespace udn::sim {

namespace {

// Stream ids inside an episode seed.
constexpr std::uint64_t kDeploymentStream = 0;
constexpr std::uint64_t kInitialQueueStream = 1;
constexpr std::uint64_t kArrivalStreamBase = 1u << 20;
constexpr std::uint64_t kSplitStreamBase = 1u << 21;

double torus_delta(double a, double b, double side, bool wrap) {
  double d = std::abs(a - b);
  if (wrap) d = std::min(d, side - d);
  return d;
}

double truncated_gaussian_sample(model::RngStream& rng, double mean, double variance) {
  const double sd = std::sqrt(variance);
  for (int i = 0; i < 10000; ++i) {
    const double x = rng.normal(mean, sd);
    if (x >= 0.0 && x <= 1.0) return x;
  }
  return std::clamp(mean, 0.0, 1.0);
}

}  // namespace

int DeploymentSpec::sbs_per_side() const {
  const double side = std::sqrt(area_km2) * 1000.0;
  return static_cast<int>(std::lround(side / (isd * kMetersPerIsdUnit)));
}

void DeploymentSpec::validate() const {
  if (!(isd > 0.0)) throw ConfigError("deployment.isd must be > 0");
  if (!(area_km2 > 0.0)) throw ConfigError("deployment.area_km2 must be > 0");
  if (ues_per_sbs < 1) throw ConfigError("deployment.ues_per_sbs must be >= 1");
  if (!(jitter >= 0.0 && jitter < 1.0)) throw ConfigError("deployment.jitter must be in [0, 1)");
  if (sbs_per_side() < 1)
    throw ConfigError("deployment.isd: area " + std::to_string(area_km2) +
                      " km^2 holds no SBS at this spacing");
}

Deployment generate_deployment(const DeploymentSpec& spec, std::uint64_t seed) {
  spec.validate();
  model::RngStream rng(seed, kDeploymentStream);
  const int n = spec.sbs_per_side();
  const int b_count = n * n;
  const int k = spec.ues_per_sbs;

  Deployment d;
  d.side_m = std::sqrt(spec.area_km2) * 1000.0;
  d.spacing_m = d.side_m / n;
  d.sbs_pos.resize(b_count, 2);
  d.ue_pos.resize(b_count * k, 2);
  d.serving.resize(b_count * k);
  d.ues_of_sbs.assign(b_count, {});

  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const int b = i * n + j;
      const double x0 = i * d.spacing_m;
      const double y0 = j * d.spacing_m;
      d.sbs_pos(b, 0) = x0 + d.spacing_m * (0.5 + spec.jitter * rng.uniform(-0.5, 0.5));
      d.sbs_pos(b, 1) = y0 + d.spacing_m * (0.5 + spec.jitter * rng.uniform(-0.5, 0.5));
      for (int m = 0; m < k; ++m) {
        const int u = b * k + m;
        d.ue_pos(u, 0) = x0 + rng.uniform(0.0, d.spacing_m);
        d.ue_pos(u, 1) = y0 + rng.uniform(0.0, d.spacing_m);
        d.serving(u) = b;
        d.ues_of_sbs[b].push_back(u);
      }
    }
  }

  d.gain.resize(b_count * k, b_count);
  for (int u = 0; u < d.num_ues(); ++u) {
    for (int b = 0; b < b_count; ++b) {
      const double dx = torus_delta(d.ue_pos(u, 0), d.sbs_pos(b, 0), d.side_m, spec.wrap_around);
      const double dy = torus_delta(d.ue_pos(u, 1), d.sbs_pos(b, 1), d.side_m, spec.wrap_around);
      const double dist = std::max(std::hypot(dx, dy), spec.pathloss.min_distance_m);
      d.gain(u, b) = model::pathloss_gain(dist, spec.pathloss, &rng);
    }
  }
  return d;
}

GainStatistics gain_statistics(const Deployment& d) {
  GainStatistics s;
  const int m_count = d.num_ues();
  const int b_count = d.num_sbs();
  s.interferers = b_count - 1;
  double serving = 0.0;
  double cross = 0.0;
  for (int u = 0; u < m_count; ++u) {
    serving += d.serving_gain(u);
    cross += d.gain.row(u).sum() - d.serving_gain(u);
  }
  s.mean_serving_gain = serving / m_count;
  s.mean_aggregate_cross = cross / m_count;
  s.mean_cross_gain = s.interferers > 0 ? s.mean_aggregate_cross / s.interferers : 0.0;
  return s;
}

mfg::MfgParams calibrate(const DeploymentSpec& spec, mfg::MfgParams params, int draws,
                         std::uint64_t seed) {
  if (draws < 1) throw ConfigError("calibration draws must be >= 1");
  double serving = 0.0;
  double cross = 0.0;
  int interferers = 0;
  for (int i = 0; i < draws; ++i) {
    const auto s = gain_statistics(generate_deployment(spec, model::derive_seed(seed, i)));
    serving += s.mean_serving_gain;
    cross += s.mean_cross_gain;
    interferers = s.interferers;
  }
  params.serving_gain = serving / draws;
  params.interference_gain = cross / draws;
  params.phy.sbs_density = std::max(interferers, 0);
  return params;
}

std::string to_string(Method m) { return m == Method::proposed ? "proposed" : "baseline"; }

void SimConfig::validate() const {
  phy.validate();
  queue.validate();
  dpp.validate();
  baseline.validate();
  if (slots_per_period < 1) throw ConfigError("sim.slots_per_period must be >= 1");
  if (periods < 1) throw ConfigError("sim.periods must be >= 1");
  if (warmup_periods < 0 || warmup_periods >= periods)
    throw ConfigError("sim.warmup_periods must be in [0, periods)");
  if (!(initial_mean >= 0.0 && initial_mean <= 1.0))
    throw ConfigError("sim.initial_mean must be in [0, 1]");
  if (!(initial_variance > 0.0)) throw ConfigError("sim.initial_variance must be > 0");
}

EpisodeMetrics run_episode(const Deployment& d, Method method, const mfg::MfgSolution* solution,
                           const SimConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  if (method == Method::proposed && (solution == nullptr || solution->policy.values.size() == 0))
    throw StateError("run_episode: the proposed method needs a solved policy");

  const int b_count = d.num_sbs();
  const int m_count = d.num_ues();
  const auto& phy = cfg.phy;
  const double cap = cfg.queue.capacity_bits;
  const double slot_s = cfg.queue.slot_duration_s;
  const int slots = cfg.slots_per_period;
  const double period_s = slots * slot_s;
  const double horizon = method == Method::proposed ? solution->grid.horizon : 1.0;
  const double mf_interference0 =
      method == Method::proposed ? solution->interference(0) : 0.0;

  model::RngStream init_rng(seed, kInitialQueueStream);
  Vector backlog(m_count);
  for (int u = 0; u < m_count; ++u)
    backlog(u) = cap * truncated_gaussian_sample(init_rng, cfg.initial_mean, cfg.initial_variance);

  std::vector<model::RngStream> arrival_rng;
  std::vector<model::RngStream> split_rng;
  arrival_rng.reserve(m_count);
  split_rng.reserve(m_count);
  for (int u = 0; u < m_count; ++u) {
    arrival_rng.emplace_back(seed, kArrivalStreamBase + u);
    split_rng.emplace_back(seed, kSplitStreamBase + u);
  }

  std::vector<dpp::SchedulerState> dpp_state;
  std::vector<baseline::BaselineState> base_state;
  for (int b = 0; b < b_count; ++b) {
    const auto k = static_cast<Eigen::Index>(d.ues_of_sbs[b].size());
    if (method == Method::proposed)
      dpp_state.emplace_back(k);
    else
      base_state.emplace_back(k);
  }

  EpisodeMetrics out;
  out.ue_rate_bps = Vector::Zero(m_count);
  std::vector<char> dropped_any(m_count, 0);
  double interference_sum = 0.0;
  double power_sum = 0.0;

  Eigen::VectorXi scheduled(b_count);
  Eigen::MatrixXd cross(b_count, b_count);
  Vector serving_gain(b_count);
  Vector power(b_count);
  Vector period_power(b_count);
  std::vector<long long> slot_arrivals(slots);
  Vector period_rate;

  for (int n = 0; n < cfg.periods; ++n) {
    const bool measured = n >= cfg.warmup_periods;
    if (n == cfg.warmup_periods) out.initial_backlog_bits = backlog.sum();

    // Scheduling at the period start.
    for (int b = 0; b < b_count; ++b) {
      const auto& ues = d.ues_of_sbs[b];
      const auto k = static_cast<Eigen::Index>(ues.size());
      Vector q(k), rates(k), powers(k);
      int pick = 0;
      if (method == Method::proposed) {
        for (Eigen::Index m = 0; m < k; ++m) {
          const int u = ues[m];
          q(m) = backlog(u);
          const double qn = std::min(1.0, backlog(u) / cap);
          powers(m) = solution->policy.at(0.0, qn);
          rates(m) = dpp::expected_rate(&solution->policy, qn, 0.0, d.serving_gain(u),
                                        mf_interference0, phy);
        }
        dpp::Observation obs{q, rates, powers, phy.circuit_power_w};
        auto [step, next] = dpp::dpp_step(dpp_state[b], obs, cfg.dpp);
        pick = step.scheduled_ue;
        if (cfg.record_traces) {
          for (Eigen::Index m = 0; m < k; ++m)
            out.traces.push_back({n, b, ues[m], q(m), dpp_state[b].virtual_queue()(m),
                                  step.schedule(m)});
        }
        dpp_state[b] = std::move(next);
      } else {
        auto& st = base_state[b];
        for (Eigen::Index m = 0; m < k; ++m) {
          const int u = ues[m];
          const double g = d.serving_gain(u);
          const auto mp = baseline::myopic_power(g, st.interference_estimate, phy,
                                                 cfg.baseline.qos_min_rate_bps);
          rates(m) = model::instantaneous_rate(true, mp.power_w, g, st.interference_estimate, phy);
        }
        const auto onehot = baseline::pf_schedule(rates, st.average_rate, cfg.baseline.rate_floor);
        onehot.maxCoeff(&pick);
        if (cfg.record_traces) {
          for (Eigen::Index m = 0; m < k; ++m)
            out.traces.push_back({n, b, ues[m], backlog(ues[m]), 0.0, onehot(m)});
        }
      }
      scheduled(b) = ues[pick];
    }

    for (int b = 0; b < b_count; ++b) {
      for (int c = 0; c < b_count; ++c) cross(b, c) = d.gain(scheduled(b), c);
      serving_gain(b) = cross(b, b);
      cross(b, b) = 0.0;
    }

    // Arrivals: one Poisson total per UE per period. Scheduled UEs spread
    // theirs over the slots; the others only accumulate.
    Vector arrivals(m_count);
    for (int u = 0; u < m_count; ++u)
      arrivals(u) = model::sample_arrivals(arrival_rng[u], cfg.queue.mean_arrival_bps, period_s);
    for (int u = 0; u < m_count; ++u) {
      if (measured) out.arrived_bits += arrivals(u);
    }

    period_power.setZero();
    period_rate = Vector::Zero(m_count);
    std::vector<std::vector<long long>> split(b_count);
    for (int b = 0; b < b_count; ++b) {
      const int u = scheduled(b);
      auto total = static_cast<long long>(arrivals(u));
      split[b].resize(slots);
      for (int s = 0; s < slots; ++s) {
        const int left = slots - s;
        long long a = total;
        if (left > 1 && total > 0) {
          std::binomial_distribution<long long> bin(total, 1.0 / left);
          a = bin(split_rng[u].engine());
        }
        split[b][s] = a;
        total -= a;
      }
    }

    for (int s = 0; s < slots; ++s) {
      const double t = horizon * static_cast<double>(s) / slots;
      for (int b = 0; b < b_count; ++b) {
        const int u = scheduled(b);
        if (backlog(u) + static_cast<double>(split[b][s]) <= 0.0) {
          // Nothing to send this slot.
          power(b) = 0.0;
        } else if (method == Method::proposed) {
          power(b) = solution->policy.at(t, std::min(1.0, backlog(u) / cap));
        } else {
          const auto mp = baseline::myopic_power(serving_gain(b), base_state[b].interference_estimate,
                                                 phy, cfg.baseline.qos_min_rate_bps);
          power(b) = mp.power_w;
          if (measured && !mp.qos_feasible) ++out.qos_infeasible_slots;
        }
      }
      // All powers for the slot are committed; now the true interference.
      const Vector interference = cross * power;
      for (int b = 0; b < b_count; ++b) {
        const int u = scheduled(b);
        const double rate =
            model::instantaneous_rate(true, power(b), serving_gain(b), interference(b), phy);
        const auto step = model::queue_step(backlog(u), static_cast<double>(split[b][s]),
                                            rate * slot_s, cap);
        backlog(u) = step.next;
        period_power(b) += power(b) / slots;
        period_rate(u) += rate / slots;
        if (measured) {
          out.delivered_bits += step.delivered;
          out.dropped_bits += step.dropped;
          out.energy_j += (power(b) + phy.circuit_power_w) * slot_s;
          out.ue_rate_bps(u) += step.delivered;
          if (step.dropped > 0.0) dropped_any[u] = 1;
          power_sum += power(b);
        }
        if (method == Method::baseline) {
          auto& st = base_state[b];
          st.interference_estimate = baseline::update_interference_estimate(
              st.interference_estimate, interference(b), st.interference_samples,
              cfg.baseline.averaging, cfg.baseline.smoothing);
          ++st.interference_samples;
        }
      }
      if (measured) ++out.measured_slots;
    }

    Eigen::VectorXi is_scheduled = Eigen::VectorXi::Zero(m_count);
    for (int b = 0; b < b_count; ++b) is_scheduled(scheduled(b)) = 1;
    for (int u = 0; u < m_count; ++u) {
      if (is_scheduled(u)) continue;
      const auto step = model::queue_step(backlog(u), arrivals(u), 0.0, cap);
      backlog(u) = step.next;
      if (measured) {
        out.dropped_bits += step.dropped;
        if (step.dropped > 0.0) dropped_any[u] = 1;
      }
    }

    if (method == Method::baseline) {
      for (int b = 0; b < b_count; ++b) {
        const auto& ues = d.ues_of_sbs[b];
        Vector r(static_cast<Eigen::Index>(ues.size()));
        for (std::size_t m = 0; m < ues.size(); ++m) r(m) = period_rate(ues[m]);
        baseline::update_average_rates(base_state[b], r, cfg.baseline);
      }
    }
    if (measured) {
      // Slot-averaged interference seen by every UE from the other cells;
      // linear in power, so the period-mean powers suffice.
      const Vector seen = d.gain * period_power;
      for (int u = 0; u < m_count; ++u)
        interference_sum += seen(u) - d.gain(u, d.serving(u)) * period_power(d.serving(u));
    }
    if (measured) out.power_samples.insert(out.power_samples.end(), period_power.data(),
                                           period_power.data() + b_count);
  }

  out.final_backlog_bits = backlog.sum();
  out.ee = out.energy_j > 0.0 ? out.delivered_bits / out.energy_j : 0.0;
  long outages = 0;
  for (char c : dropped_any) outages += c;
  out.outage = static_cast<double>(outages) / m_count;
  const double offered = out.initial_backlog_bits + out.arrived_bits;
  out.drop_ratio = offered > 0.0 ? out.dropped_bits / offered : 0.0;
  const double measured_s = out.measured_slots * slot_s;
  const double samples = static_cast<double>(out.measured_slots) * b_count;
  out.ue_rate_bps /= measured_s;
  out.mean_power_w = power_sum / samples;
  out.mean_interference_w =
      interference_sum / (static_cast<double>(cfg.periods - cfg.warmup_periods) * m_count);
  return out;
}

MetricSummary summarize(const std::vector<double>& samples) {
  MetricSummary s;
  s.n = static_cast<int>(samples.size());
  if (s.n == 0) throw std::domain_error("summarize: no samples");
  double sum = 0.0;
  for (double x : samples) sum += x;
  s.mean = sum / s.n;
  if (s.n == 1) {
    s.ci_low = s.ci_high = s.mean;
    return s;
  }
  double ss = 0.0;
  for (double x : samples) ss += (x - s.mean) * (x - s.mean);
  s.stddev = std::sqrt(ss / (s.n - 1));
  const boost::math::students_t dist(s.n - 1);
  const double half = boost::math::quantile(boost::math::complement(dist, 0.025)) * s.stddev /
                      std::sqrt(static_cast<double>(s.n));
  s.ci_low = s.mean - half;
  s.ci_high = s.mean + half;
  return s;
}

const std::vector<std::string>& metric_names() {
  static const std::vector<std::string> names = {
      "ee", "outage", "drop_ratio", "delivered_bits", "energy_j", "mean_power_w",
      "mean_interference_w"};
  return names;
}

double metric_value(const EpisodeMetrics& m, const std::string& name) {
  if (name == "ee") return m.ee;
  if (name == "outage") return m.outage;
  if (name == "drop_ratio") return m.drop_ratio;
  if (name == "delivered_bits") return m.delivered_bits;
  if (name == "energy_j") return m.energy_j;
  if (name == "mean_power_w") return m.mean_power_w;
  if (name == "mean_interference_w") return m.mean_interference_w;
  throw std::invalid_argument("unknown metric: " + name);
}

std::vector<double> Replications::values(const std::string& metric) const {
  std::vector<double> v;
  v.reserve(episodes.size());
  for (const auto& e : episodes) v.push_back(metric_value(e, metric));
  return v;
}

MetricSummary Replications::summary(const std::string& metric) const {
  return summarize(values(metric));
}

std::uint64_t episode_seed(std::uint64_t base_seed, int index) {
  return model::derive_seed(base_seed, 0x5eed0000ULL + static_cast<std::uint64_t>(index));
}

int default_threads() {
  if (const char* env = std::getenv("UDN_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

Replications run_replications(const DeploymentSpec& spec, Method method,
                              const mfg::MfgSolution* solution, const SimConfig& cfg,
                              const std::vector<std::uint64_t>& seeds, int threads) {
  if (seeds.empty()) throw std::invalid_argument("run_replications: no seeds");
  spec.validate();
  cfg.validate();
  Replications out;
  out.seeds = seeds;
  out.episodes.resize(seeds.size());
  if (threads <= 0) threads = default_threads();
  threads = std::min<int>(threads, static_cast<int>(seeds.size()));

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < seeds.size(); i = next++) {
      try {
        const auto d = generate_deployment(spec, seeds[i]);
        out.episodes[i] = run_episode(d, method, solution, cfg, seeds[i]);
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < threads; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

}  // namespace udn::sim
