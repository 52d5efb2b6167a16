#include "udn/config.hpp"

#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include <boost/algorithm/string.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "udn/errors.hpp"

namespace udn::config {

namespace {

using Setter = std::function<void(RunConfig&, const std::string&)>;

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const double x = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw ConfigError(key + ": expected a number, got '" + v + "'");
  }
}

long to_long(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const long x = std::stol(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw ConfigError(key + ": expected an integer, got '" + v + "'");
  }
}

bool to_bool(const std::string& key, const std::string& v) {
  const auto s = boost::algorithm::to_lower_copy(v);
  if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
  if (s == "false" || s == "0" || s == "no" || s == "off") return false;
  throw ConfigError(key + ": expected a boolean, got '" + v + "'");
}

std::vector<std::string> to_list(const std::string& v) {
  std::vector<std::string> parts;
  boost::algorithm::split(parts, v, boost::is_any_of(","));
  std::vector<std::string> out;
  for (auto& p : parts) {
    boost::algorithm::trim(p);
    if (!p.empty()) out.push_back(p);
  }
  return out;
}

template <typename T, typename Fn>
std::vector<T> map_list(const std::string& v, Fn fn) {
  std::vector<T> out;
  for (const auto& s : to_list(v)) out.push_back(fn(s));
  return out;
}


const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = [] {
    std::map<std::string, Setter> t;
    auto num = [&t](const std::string& key, auto member) {
      t[key] = [key, member](RunConfig& c, const std::string& v) { member(c) = to_double(key, v); };
    };
    auto integer = [&t](const std::string& key, auto member) {
      t[key] = [key, member](RunConfig& c, const std::string& v) {
        member(c) = static_cast<std::remove_reference_t<decltype(member(c))>>(to_long(key, v));
      };
    };
    auto flag = [&t](const std::string& key, auto member) {
      t[key] = [key, member](RunConfig& c, const std::string& v) { member(c) = to_bool(key, v); };
    };

    num("phy.bandwidth_hz", [](RunConfig& c) -> double& { return c.solver.phy.bandwidth_hz; });
    t["phy.noise_dbm"] = [](RunConfig& c, const std::string& v) {
      c.solver.phy.noise_power_w = model::dbm_to_watts(to_double("phy.noise_dbm", v));
    };
    num("phy.max_power_w", [](RunConfig& c) -> double& { return c.solver.phy.max_power_w; });
    num("phy.circuit_power_w", [](RunConfig& c) -> double& { return c.solver.phy.circuit_power_w; });
    num("phy.drift_scale", [](RunConfig& c) -> double& { return c.solver.phy.drift_scale; });

    num("queue.mean_arrival_bps", [](RunConfig& c) -> double& { return c.solver.queue.mean_arrival_bps; });
    num("queue.capacity_bits", [](RunConfig& c) -> double& { return c.solver.queue.capacity_bits; });
    num("queue.slot_duration_s", [](RunConfig& c) -> double& { return c.solver.queue.slot_duration_s; });
    integer("queue.slots_per_period", [](RunConfig& c) -> int& { return c.solver.slots_per_period; });

    integer("grid.n_t", [](RunConfig& c) -> int& { return c.grid.n_t; });
    integer("grid.n_q", [](RunConfig& c) -> int& { return c.grid.n_q; });
    num("grid.horizon", [](RunConfig& c) -> double& { return c.grid.horizon; });

    t["solver.boundary"] = [](RunConfig& c, const std::string& v) {
      try {
        c.solver.boundary = mfg::parse_boundary(v);
      } catch (const std::exception&) {
        throw ConfigError("solver.boundary: unknown boundary '" + v + "'");
      }
    };
    num("solver.initial_mean", [](RunConfig& c) -> double& { return c.solver.initial_mean; });
    num("solver.initial_variance", [](RunConfig& c) -> double& { return c.solver.initial_variance; });
    num("solver.damping", [](RunConfig& c) -> double& { return c.solver.damping; });
    num("solver.tolerance", [](RunConfig& c) -> double& { return c.solver.tolerance; });
    integer("solver.max_iters", [](RunConfig& c) -> int& { return c.solver.max_iters; });
    num("solver.existence_epsilon", [](RunConfig& c) -> double& { return c.solver.existence_epsilon; });
    t["solver.initial_interference"] = [](RunConfig& c, const std::string& v) {
      if (v == "zero")
        c.solver.initial_interference = mfg::InitialInterference::zero;
      else if (v == "half_power")
        c.solver.initial_interference = mfg::InitialInterference::half_power;
      else
        throw ConfigError("solver.initial_interference: expected zero or half_power, got '" + v + "'");
    };
    integer("solver.calibration_draws", [](RunConfig& c) -> int& { return c.calibration_draws; });

    num("deployment.isd", [](RunConfig& c) -> double& { return c.deployment.isd; });
    num("deployment.area_km2", [](RunConfig& c) -> double& { return c.deployment.area_km2; });
    integer("deployment.ues_per_sbs", [](RunConfig& c) -> int& { return c.deployment.ues_per_sbs; });
    num("deployment.jitter", [](RunConfig& c) -> double& { return c.deployment.jitter; });
    flag("deployment.wrap_around", [](RunConfig& c) -> bool& { return c.deployment.wrap_around; });
    t["deployment.pathloss_law"] = [](RunConfig& c, const std::string& v) {
      if (v == "log_distance")
        c.deployment.pathloss.law = model::PathlossLaw::log_distance;
      else if (v == "los_nlos")
        c.deployment.pathloss.law = model::PathlossLaw::los_nlos;
      else
        throw ConfigError("deployment.pathloss_law: expected log_distance or los_nlos, got '" + v + "'");
    };
    num("deployment.intercept_db", [](RunConfig& c) -> double& { return c.deployment.pathloss.intercept_db; });
    num("deployment.slope_db", [](RunConfig& c) -> double& { return c.deployment.pathloss.slope_db; });
    num("deployment.shadowing_db", [](RunConfig& c) -> double& { return c.deployment.pathloss.shadowing_std_db; });
    num("deployment.min_distance_m", [](RunConfig& c) -> double& { return c.deployment.pathloss.min_distance_m; });
    flag("deployment.rayleigh_fading", [](RunConfig& c) -> bool& { return c.deployment.pathloss.rayleigh_fading; });

    integer("sim.periods", [](RunConfig& c) -> int& { return c.sim.periods; });
    integer("sim.warmup_periods", [](RunConfig& c) -> int& { return c.sim.warmup_periods; });
    flag("sim.record_traces", [](RunConfig& c) -> bool& { return c.sim.record_traces; });

    num("dpp.tradeoff_v", [](RunConfig& c) -> double& { return c.sim.dpp.tradeoff; });
    t["dpp.gradient"] = [](RunConfig& c, const std::string& v) {
      if (v == "ee_contribution")
        c.sim.dpp.gradient = dpp::UtilityGradient::ee_contribution;
      else if (v == "log_rate")
        c.sim.dpp.gradient = dpp::UtilityGradient::log_rate;
      else
        throw ConfigError("dpp.gradient: expected ee_contribution or log_rate, got '" + v + "'");
    };

    num("baseline.qos_min_rate_bps", [](RunConfig& c) -> double& { return c.sim.baseline.qos_min_rate_bps; });
    num("baseline.rate_floor", [](RunConfig& c) -> double& { return c.sim.baseline.rate_floor; });
    num("baseline.smoothing", [](RunConfig& c) -> double& { return c.sim.baseline.smoothing; });
    t["baseline.averaging"] = [](RunConfig& c, const std::string& v) {
      if (v == "arithmetic")
        c.sim.baseline.averaging = baseline::Averaging::arithmetic;
      else if (v == "exponential")
        c.sim.baseline.averaging = baseline::Averaging::exponential;
      else
        throw ConfigError("baseline.averaging: expected arithmetic or exponential, got '" + v + "'");
    };

    integer("run.seeds", [](RunConfig& c) -> int& { return c.seeds; });
    t["run.base_seed"] = [](RunConfig& c, const std::string& v) {
      const long s = to_long("run.base_seed", v);
      if (s < 0) throw ConfigError("run.base_seed must be >= 0");
      c.base_seed = static_cast<std::uint64_t>(s);
    };
    integer("run.threads", [](RunConfig& c) -> int& { return c.threads; });
    t["run.output_dir"] = [](RunConfig& c, const std::string& v) { c.output_dir = v; };

    t["sweep.isd"] = [](RunConfig& c, const std::string& v) {
      c.sweep.isd = map_list<double>(v, [](const std::string& s) { return to_double("sweep.isd", s); });
    };
    t["sweep.ues_per_sbs"] = [](RunConfig& c, const std::string& v) {
      c.sweep.ues_per_sbs = map_list<int>(
          v, [](const std::string& s) { return static_cast<int>(to_long("sweep.ues_per_sbs", s)); });
    };
    t["sweep.boundary"] = [](RunConfig& c, const std::string& v) {
      c.sweep.boundary = map_list<mfg::Boundary>(v, [](const std::string& s) {
        try {
          return mfg::parse_boundary(s);
        } catch (const std::exception&) {
          throw ConfigError("sweep.boundary: unknown boundary '" + s + "'");
        }
      });
    };
    t["sweep.tradeoff_v"] = [](RunConfig& c, const std::string& v) {
      c.sweep.tradeoff_v =
          map_list<double>(v, [](const std::string& s) { return to_double("sweep.tradeoff_v", s); });
    };
    return t;
  }();
  return table;
}

void set(RunConfig& cfg, const std::string& key, const std::string& value) {
  const auto& t = setters();
  const auto it = t.find(key);
  if (it == t.end()) throw ConfigError("unknown config key: " + key);
  it->second(cfg, boost::algorithm::trim_copy(value));
}

}  // namespace

void RunConfig::finalize() {
  sim.phy = solver.phy;
  sim.queue = solver.queue;
  sim.slots_per_period = solver.slots_per_period;
  sim.initial_mean = solver.initial_mean;
  sim.initial_variance = solver.initial_variance;
  grid.validate();
  solver.phy.validate();
  solver.queue.validate();
  deployment.validate();
  sim.validate();
  if (calibration_draws < 1) throw ConfigError("solver.calibration_draws must be >= 1");
  if (seeds < 1) throw ConfigError("run.seeds must be >= 1");
  if (threads < 0) throw ConfigError("run.threads must be >= 0");
  for (double v : sweep.tradeoff_v)
    if (v > 0.0) throw ConfigError("sweep.tradeoff_v entries must be <= 0");
  for (int k : sweep.ues_per_sbs)
    if (k < 1) throw ConfigError("sweep.ues_per_sbs entries must be >= 1");
  for (double isd : sweep.isd)
    if (!(isd > 0.0)) throw ConfigError("sweep.isd entries must be > 0");
}

RunConfig parse_config(std::istream& in, const std::string& source) {
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::ini_parser::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError(source + ": " + e.message() + " (line " + std::to_string(e.line()) + ")");
  }
  RunConfig cfg;
  for (const auto& [section, body] : tree) {
    if (body.empty() && !body.data().empty())
      throw ConfigError(source + ": key outside a section: " + section);
    for (const auto& [key, value] : body) set(cfg, section + "." + key, value.data());
  }
  cfg.finalize();
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  return parse_config(in, path.string());
}

void apply_override(RunConfig& cfg, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0)
    throw ConfigError("override must look like section.key=value: " + assignment);
  set(cfg, boost::algorithm::trim_copy(assignment.substr(0, eq)), assignment.substr(eq + 1));
}

std::vector<std::string> known_keys() {
  std::vector<std::string> keys;
  for (const auto& [k, s] : setters()) keys.push_back(k);
  return keys;
}

}  // namespace udn::config
