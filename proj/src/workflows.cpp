#include "udn/workflows.hpp"

#include <cmath>
#include <cstdlib>
#include <sstream>

#include "udn/errors.hpp"
#include "udn/mfg_io.hpp"
#include "udn/reporting.hpp"

namespace udn::app {

namespace fs = std::filesystem;
using report::format_number;

namespace {

// Calibration draws use their own seed family so they never coincide with
// an episode's deployment.
constexpr std::uint64_t kCalibrationSalt = 0xca1b0000ULL;

const std::vector<std::string> kEpisodeMetrics = {
    "ee",       "outage",       "drop_ratio",          "delivered_bits",
    "energy_j", "mean_power_w", "mean_interference_w"};

const std::vector<std::string> kReportMetrics = {"ee", "outage", "drop_ratio", "mean_power_w"};

fs::path ensure_dir(const fs::path& p) {
  fs::create_directories(p);
  return p;
}

std::string join(const std::vector<std::string>& parts, const std::string& sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) out += (i ? sep : "") + parts[i];
  return out;
}

std::vector<std::string> episode_header() {
  std::vector<std::string> h{"point", "isd", "ues_per_sbs", "boundary", "tradeoff_v", "method",
                             "replication", "seed"};
  h.insert(h.end(), kEpisodeMetrics.begin(), kEpisodeMetrics.end());
  h.insert(h.end(), {"arrived_bits", "dropped_bits", "initial_backlog_bits",
                     "final_backlog_bits", "qos_infeasible_slots"});
  return h;
}

void write_episodes(report::CsvWriter& csv, const SweepPointSpec& p, const std::string& method,
                    const sim::Replications& reps) {
  for (std::size_t i = 0; i < reps.episodes.size(); ++i) {
    const auto& e = reps.episodes[i];
    std::vector<std::string> row{p.label, format_number(p.isd), std::to_string(p.ues_per_sbs),
                                 mfg::to_string(p.boundary), format_number(p.tradeoff_v), method,
                                 std::to_string(i), std::to_string(reps.seeds[i])};
    for (const auto& m : kEpisodeMetrics) row.push_back(format_number(sim::metric_value(e, m)));
    row.push_back(format_number(e.arrived_bits));
    row.push_back(format_number(e.dropped_bits));
    row.push_back(format_number(e.initial_backlog_bits));
    row.push_back(format_number(e.final_backlog_bits));
    row.push_back(std::to_string(e.qos_infeasible_slots));
    csv.row(row);
  }
}

void write_traces(const fs::path& path, const std::string& method, const sim::Replications& reps) {
  report::CsvWriter csv(path, {"replication", "method", "period", "sbs", "ue", "backlog_bits",
                               "virtual_queue", "scheduled"});
  for (std::size_t i = 0; i < reps.episodes.size(); ++i)
    for (const auto& r : reps.episodes[i].traces)
      csv.row({std::to_string(i), method, std::to_string(r.period), std::to_string(r.sbs),
               std::to_string(r.ue), format_number(r.backlog_bits), format_number(r.virtual_queue),
               std::to_string(r.scheduled)});
}

std::vector<double> pooled(const sim::Replications& reps, bool power) {
  std::vector<double> out;
  for (const auto& e : reps.episodes) {
    if (power)
      out.insert(out.end(), e.power_samples.begin(), e.power_samples.end());
    else
      out.insert(out.end(), e.ue_rate_bps.data(), e.ue_rate_bps.data() + e.ue_rate_bps.size());
  }
  return out;
}

// Groups episode rows by point (first-appearance order) and method.
std::vector<std::pair<std::string, std::map<std::string, std::map<std::string, std::vector<double>>>>>
group_episodes(const report::CsvTable& t) {
  std::vector<std::pair<std::string, std::map<std::string, std::map<std::string, std::vector<double>>>>>
      groups;
  const auto point_col = t.column("point");
  const auto method_col = t.column("method");
  std::map<std::string, std::size_t> index;
  for (const auto& row : t.rows) {
    const auto& label = row[point_col];
    auto it = index.find(label);
    if (it == index.end()) {
      it = index.emplace(label, groups.size()).first;
      groups.push_back({label, {}});
    }
    auto& by_metric = groups[it->second].second[row[method_col]];
    for (const auto& m : kReportMetrics) by_metric[m].push_back(std::stod(row[t.column(m)]));
  }
  return groups;
}

void write_reports(const fs::path& out, const std::string& prefix, const report::CsvTable& episodes) {
  const auto groups = group_episodes(episodes);
  if (groups.size() < 2) return;
  for (const auto& metric : kReportMetrics) {
    std::vector<report::SweepPoint> points;
    for (const auto& [label, methods] : groups) {
      report::SweepPoint p{label, {}};
      for (const auto& [method, metrics] : methods) p.by_method[method] = sim::summarize(metrics.at(metric));
      points.push_back(std::move(p));
    }
    report::write_sweep_table(out / (prefix + metric), report::sweep_report(points), "point");
  }
}

}  // namespace

fs::path resolve_output_dir(const config::RunConfig& cfg) {
  if (const char* env = std::getenv("UDN_OUT"); env != nullptr && *env != '\0') return env;
  return cfg.output_dir;
}

mfg::MfgParams calibrated_params(const config::RunConfig& cfg) {
  return sim::calibrate(cfg.deployment, cfg.solver, cfg.calibration_draws,
                        model::derive_seed(cfg.base_seed, kCalibrationSalt));
}

mfg::MfgSolution cmd_solve(const config::RunConfig& cfg, const fs::path& out) {
  ensure_dir(out);
  const auto params = calibrated_params(cfg);
  mfg::MfgSolution sol;
  try {
    sol = mfg::solve_mfg(cfg.grid, params);
  } catch (const ConvergenceError& e) {
    const auto log = out / "convergence.csv";
    mfg::write_convergence_csv(log, e.residuals());
    throw ConvergenceError(std::string(e.what()) + "; residual history in " + log.string(),
                           e.residuals());
  }
  mfg::save_solution(out / "solution.bin", sol);
  mfg::write_convergence_csv(out / "convergence.csv", sol.residual_history);
  mfg::write_field_csv(out / "policy.csv", sol.grid, sol.policy.values, "power_w");
  mfg::write_field_csv(out / "density.csv", sol.grid, sol.density.values, "density");
  mfg::write_field_csv(out / "value.csv", sol.grid, sol.value.values, "value");
  mfg::write_interference_csv(out / "interference.csv", sol.grid, sol.interference);
  return sol;
}

std::vector<std::uint64_t> episode_seeds(const config::RunConfig& cfg) {
  std::vector<std::uint64_t> seeds;
  for (int i = 0; i < cfg.seeds; ++i) seeds.push_back(sim::episode_seed(cfg.base_seed, i));
  return seeds;
}

MethodResults cmd_simulate(const config::RunConfig& cfg, const fs::path& solution,
                           const fs::path& out) {
  if (!fs::exists(solution))
    throw StateError("solution file not found: " + solution.string() + " (run `solve` first)");
  const auto sol = mfg::load_solution(solution);
  ensure_dir(out);
  const auto seeds = episode_seeds(cfg);
  const int threads = cfg.threads > 0 ? cfg.threads : sim::default_threads();
  MethodResults r{
      sim::run_replications(cfg.deployment, sim::Method::proposed, &sol, cfg.sim, seeds, threads),
      sim::run_replications(cfg.deployment, sim::Method::baseline, nullptr, cfg.sim, seeds, threads)};

  const SweepPointSpec point{"simulate", cfg.deployment.isd, cfg.deployment.ues_per_sbs,
                             sol.params.boundary, cfg.sim.dpp.tradeoff};
  {
    report::CsvWriter csv(out / "episodes.csv", episode_header());
    write_episodes(csv, point, "proposed", r.proposed);
    write_episodes(csv, point, "baseline", r.baseline);
  }
  {
    report::CsvWriter csv(out / "summary.csv", {"method", "metric", "mean", "ci_low", "ci_high", "n"});
    for (const auto* reps : {&r.proposed, &r.baseline}) {
      const std::string name = reps == &r.proposed ? "proposed" : "baseline";
      for (const auto& m : kEpisodeMetrics) {
        const auto s = reps->summary(m);
        csv.row({name, m, format_number(s.mean), format_number(s.ci_low), format_number(s.ci_high),
                 std::to_string(s.n)});
      }
    }
  }
  report::write_cdf_csv(out / "power_cdf.csv", {{"proposed", report::build_cdf(pooled(r.proposed, true))},
                                                {"baseline", report::build_cdf(pooled(r.baseline, true))}});
  report::write_cdf_csv(out / "rate_cdf.csv", {{"proposed", report::build_cdf(pooled(r.proposed, false))},
                                               {"baseline", report::build_cdf(pooled(r.baseline, false))}});
  if (cfg.sim.record_traces) {
    write_traces(out / "traces_proposed.csv", "proposed", r.proposed);
    write_traces(out / "traces_baseline.csv", "baseline", r.baseline);
  }
  return r;
}

std::vector<SweepPointSpec> sweep_points(const config::RunConfig& cfg) {
  auto isd = cfg.sweep.isd.empty() ? std::vector<double>{cfg.deployment.isd} : cfg.sweep.isd;
  auto ks = cfg.sweep.ues_per_sbs.empty() ? std::vector<int>{cfg.deployment.ues_per_sbs}
                                          : cfg.sweep.ues_per_sbs;
  auto bs = cfg.sweep.boundary.empty() ? std::vector<mfg::Boundary>{cfg.solver.boundary}
                                       : cfg.sweep.boundary;
  auto vs = cfg.sweep.tradeoff_v.empty() ? std::vector<double>{cfg.sim.dpp.tradeoff}
                                         : cfg.sweep.tradeoff_v;
  std::vector<SweepPointSpec> points;
  for (double i : isd)
    for (int k : ks)
      for (auto b : bs)
        for (double v : vs) {
          std::vector<std::string> parts;
          if (isd.size() > 1) parts.push_back("isd=" + format_number(i));
          if (ks.size() > 1) parts.push_back("k=" + std::to_string(k));
          if (bs.size() > 1) parts.push_back("boundary=" + mfg::to_string(b));
          if (vs.size() > 1) parts.push_back("v=" + format_number(v));
          points.push_back({join(parts, " "), i, k, b, v});
        }
  if (points.size() < 2) throw ConfigError("sweep: the [sweep] section must define at least two points");
  return points;
}

void cmd_sweep(const config::RunConfig& cfg, const fs::path& out) {
  ensure_dir(out);
  const auto points = sweep_points(cfg);
  const auto seeds = episode_seeds(cfg);
  const int threads = cfg.threads > 0 ? cfg.threads : sim::default_threads();

  std::map<std::pair<double, int>, mfg::MfgSolution> solutions;
  report::CsvWriter sol_csv(out / "solutions.csv",
                            {"isd", "boundary", "serving_gain", "interference_gain", "sbs_density",
                             "iterations", "residual", "mean_interference_w"});
  {
    report::CsvWriter csv(out / "episodes.csv", episode_header());
    for (const auto& p : points) {
      const std::pair<double, int> key{p.isd, static_cast<int>(p.boundary)};
      auto it = solutions.find(key);
      if (it == solutions.end()) {
        auto point_cfg = cfg;
        point_cfg.deployment.isd = p.isd;
        point_cfg.solver.boundary = p.boundary;
        auto sol = mfg::solve_mfg(point_cfg.grid, calibrated_params(point_cfg));
        sol_csv.row({format_number(p.isd), mfg::to_string(p.boundary),
                     format_number(sol.params.serving_gain), format_number(sol.params.interference_gain),
                     format_number(sol.params.phy.sbs_density), std::to_string(sol.iterations),
                     format_number(sol.residual), format_number(sol.interference.mean())});
        it = solutions.emplace(key, std::move(sol)).first;
      }
      auto spec = cfg.deployment;
      spec.isd = p.isd;
      spec.ues_per_sbs = p.ues_per_sbs;
      auto sim_cfg = cfg.sim;
      sim_cfg.dpp.tradeoff = p.tradeoff_v;
      const auto prop =
          sim::run_replications(spec, sim::Method::proposed, &it->second, sim_cfg, seeds, threads);
      const auto base =
          sim::run_replications(spec, sim::Method::baseline, nullptr, sim_cfg, seeds, threads);
      write_episodes(csv, p, "proposed", prop);
      write_episodes(csv, p, "baseline", base);
    }
  }
  write_reports(out, "sweep_", report::read_csv(out / "episodes.csv"));
}

void cmd_report(const fs::path& episodes_csv, const fs::path& out) {
  const auto table = report::read_csv(episodes_csv);
  ensure_dir(out);
  if (group_episodes(table).size() < 2)
    throw std::invalid_argument("report: " + episodes_csv.string() + " holds fewer than two sweep points");
  write_reports(out, "report_", table);
}

ValidationReport validate_solution(const mfg::MfgSolution& sol) {
  ValidationReport r;
  auto check = [&r](bool ok, const std::string& name, const std::string& detail = {}) {
    (ok ? r.passed : r.failed).push_back(ok || detail.empty() ? name : name + ": " + detail);
  };
  const auto& g = sol.grid;
  const auto& p = sol.params;
  const bool shapes = sol.value.values.rows() == g.n_t && sol.value.values.cols() == g.n_q &&
                      sol.density.values.rows() == g.n_t && sol.density.values.cols() == g.n_q &&
                      sol.policy.values.rows() == g.n_t && sol.policy.values.cols() == g.n_q &&
                      sol.interference.size() == g.n_t;
  check(shapes, "field shapes match the grid");
  if (!shapes) return r;
  const double dq = g.dq();
  const double p_max = p.phy.max_power_w;

  double worst_mass = 0.0;
  for (int i = 0; i < g.n_t; ++i) worst_mass = std::max(worst_mass, std::abs(sol.density.mass(i, dq) - 1.0));
  check(worst_mass <= 1e-3, "density mass within 1e-3 of 1", "max error " + format_number(worst_mass));

  const double min_rho = sol.density.values.minCoeff();
  check(min_rho >= -1e-9, "density nonnegative", "min " + format_number(min_rho));

  bool terminal = true;
  for (int j = 0; j < g.n_q; ++j)
    terminal = terminal && sol.value.values(g.n_t - 1, j) == mfg::terminal_value(p.boundary, g.queue(j));
  check(terminal, "terminal value equals the " + mfg::to_string(p.boundary) + " boundary");

  const bool in_box = sol.policy.values.minCoeff() >= 0.0 && sol.policy.values.maxCoeff() <= p_max;
  check(in_box, "policy within [0, p_max]");

  // A dip is tolerated only against the immediately preceding node.
  int bad_rows = 0;
  const double tol = 1e-9 * p_max;
  for (int i = 0; i < g.n_t; ++i) {
    double running = -INFINITY;
    for (int j = 2; j < g.n_q; ++j) {
      running = std::max(running, sol.policy.values(i, j - 2));
      if (sol.policy.values(i, j) < running - tol) {
        ++bad_rows;
        break;
      }
    }
  }
  check(bad_rows == 0, "policy nondecreasing in q (one-cell tolerance)",
        std::to_string(bad_rows) + " time slices violate");

  bool lowest = true;
  for (int i = 1; i < g.n_t; ++i)
    lowest = lowest && sol.density.node_mass(i, 0, dq) >= sol.density.node_mass(i - 1, 0, dq) - 1e-12;
  check(lowest, "mass at q = 0 nondecreasing in t");

  check(sol.iterations >= 1 && sol.iterations <= p.max_iters, "iteration count within budget");
  check(sol.residual <= p.tolerance, "fixed-point residual within tolerance",
        format_number(sol.residual) + " > " + format_number(p.tolerance));

  check((sol.interference.array() >= 0.0).all(), "interference nonnegative");
  Vector recomputed(g.n_t);
  for (int i = 0; i < g.n_t; ++i)
    recomputed(i) = mfg::mf_interference(sol.density.values.row(i).transpose(),
                                         sol.policy.values.row(i).transpose(), dq,
                                         p.phy.sbs_density, p.interference_gain);
  const double scale = std::max(recomputed.cwiseAbs().maxCoeff(), p.phy.noise_power_w);
  const double gap = (recomputed - sol.interference).cwiseAbs().maxCoeff() / scale;
  check(gap <= p.tolerance * (1.0 + 1e-9), "interference consistent with density and policy",
        "relative gap " + format_number(gap));
  return r;
}

ValidationReport cmd_validate(const fs::path& solution) {
  const auto r = validate_solution(mfg::load_solution(solution));
  if (!r.ok()) {
    std::ostringstream os;
    os << r.failed.size() << " invariant(s) violated:";
    for (const auto& f : r.failed) os << "\n  - " << f;
    throw InvariantViolation(os.str());
  }
  return r;
}

}  // namespace udn::app
