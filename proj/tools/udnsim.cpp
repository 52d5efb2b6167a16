// udnsim: solve, simulate, sweep, report, validate.

#include <chrono>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "udn/config.hpp"
#include "udn/errors.hpp"
#include "udn/workflows.hpp"

namespace {

enum ExitCode { kOk = 0, kFailure = 1, kConfig = 2, kConvergence = 3, kInvariant = 4 };

udn::config::RunConfig load(const std::string& path, const std::vector<std::string>& overrides) {
  auto cfg = path.empty() ? udn::config::RunConfig{} : udn::config::load_config(path);
  for (const auto& o : overrides) udn::config::apply_override(cfg, o);
  cfg.finalize();
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Mean-field power control and DPP scheduling simulator for dense small cells"};
  app.require_subcommand(1);

  std::string config_path;
  std::vector<std::string> overrides;
  std::string solution_path;
  std::string out_dir;
  std::string input_path;

  auto add_config = [&](CLI::App* cmd) {
    cmd->add_option("-c,--config", config_path, "INI run configuration")->check(CLI::ExistingFile);
    cmd->add_option("--set", overrides, "Override one key, e.g. --set deployment.isd=5.75");
    cmd->add_option("-o,--out", out_dir, "Output directory (default: UDN_OUT or run.output_dir)");
  };

  auto* solve = app.add_subcommand("solve", "Solve the mean-field equilibrium");
  add_config(solve);
  auto* simulate = app.add_subcommand("simulate", "Run both methods on one configuration");
  add_config(simulate);
  simulate->add_option("-s,--solution", solution_path, "Solution file written by solve")->required();
  auto* sweep = app.add_subcommand("sweep", "Run the [sweep] grid and write report tables");
  add_config(sweep);
  auto* report = app.add_subcommand("report", "Rebuild report tables from episodes.csv");
  report->add_option("-i,--input", input_path, "episodes.csv from simulate or sweep")
      ->required()
      ->check(CLI::ExistingFile);
  report->add_option("-o,--out", out_dir, "Output directory")->required();
  auto* validate = app.add_subcommand("validate", "Check solver invariants on a solution file");
  validate->add_option("-s,--solution", solution_path, "Solution file")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*report) {
      udn::app::cmd_report(input_path, out_dir);
      std::cout << "wrote report tables to " << out_dir << "\n";
      return kOk;
    }
    if (*validate) {
      const auto r = udn::app::cmd_validate(solution_path);
      for (const auto& p : r.passed) std::cout << "ok   " << p << "\n";
      return kOk;
    }

    const auto cfg = load(config_path, overrides);
    const std::filesystem::path out =
        out_dir.empty() ? udn::app::resolve_output_dir(cfg) : std::filesystem::path(out_dir);
    if (*solve) {
      const auto t0 = std::chrono::steady_clock::now();
      const auto sol = udn::app::cmd_solve(cfg, out);
      const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      std::cout << "converged in " << sol.iterations << " iterations (residual " << sol.residual
                << ", " << secs << " s); wrote " << (out / "solution.bin").string() << "\n";
    } else if (*simulate) {
      const auto r = udn::app::cmd_simulate(cfg, solution_path, out);
      for (const char* m : {"ee", "outage"}) {
        const auto a = r.proposed.summary(m), b = r.baseline.summary(m);
        std::cout << m << ": proposed " << a.mean << " [" << a.ci_low << ", " << a.ci_high
                  << "], baseline " << b.mean << " [" << b.ci_low << ", " << b.ci_high << "]\n";
      }
      std::cout << "wrote " << out.string() << "\n";
    } else if (*sweep) {
      udn::app::cmd_sweep(cfg, out);
      std::cout << "wrote sweep results to " << out.string() << "\n";
    }
    return kOk;
  } catch (const udn::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfig;
  } catch (const udn::ConvergenceError& e) {
    std::cerr << "not converged: " << e.what() << "\n";
    return kConvergence;
  } catch (const udn::InvariantViolation& e) {
    std::cerr << "invariant violation: " << e.what() << "\n";
    return kInvariant;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFailure;
  }
}
