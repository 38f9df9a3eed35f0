#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dmd/errors.hpp"
#include "dmd/experiment.hpp"

namespace {

struct CommonOpts {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> trials;
  std::string out_dir;
  std::vector<std::string> overrides;
  int jobs = 1;
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
  cmd->add_option("--config", opts.config_path, "Experiment config (JSON)")->required();
  cmd->add_option("--seed", opts.seed, "Master seed override");
  cmd->add_option("--trials", opts.trials, "Trial count override");
  cmd->add_option("--out", opts.out_dir, "Output directory override");
  cmd->add_option("--set", opts.overrides, "Config override KEY=VALUE (repeatable)");
  cmd->add_option("--jobs", opts.jobs, "Worker threads")->check(CLI::PositiveNumber);
}

dmd::Experiment build(const CommonOpts& opts) {
  std::ifstream in(opts.config_path);
  if (!in) throw dmd::ConfigError("/: cannot open config file '" + opts.config_path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  std::string text = buffer.str();
  if (!opts.overrides.empty()) text = dmd::apply_overrides(text, opts.overrides);

  dmd::ExperimentConfig cfg = dmd::parse_config(text);
  if (opts.seed) cfg.seed = *opts.seed;
  if (opts.trials) cfg.trials = *opts.trials;
  if (!opts.out_dir.empty()) {
    cfg.out_dir = opts.out_dir;
  } else if (const char* env = std::getenv("DMD_OUT_DIR"); env && *env) {
    cfg.out_dir = env;
  }
  dmd::Experiment ex = dmd::make_experiment(std::move(cfg));
  for (const std::string& w : ex.warnings) std::cerr << "warning: " << w << "\n";
  return ex;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw dmd::ConfigError("cannot write '" + path + "'");
  out << text;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Delayed mirror-descent traffic-assignment bench"};
  app.require_subcommand(1);

  CommonOpts run_opts, verify_opts, sweep_opts, wanes_opts;
  CLI::App* run = app.add_subcommand("run", "Run one trial and persist artifacts");
  add_common(run, run_opts);

  CLI::App* verify = app.add_subcommand("verify", "Per-round certificate suite");
  add_common(verify, verify_opts);

  CLI::App* sweep = app.add_subcommand("sweep", "Rate-law sweep over T or d");
  add_common(sweep, sweep_opts);
  std::string axis = "T";
  std::vector<int> grid;
  sweep->add_option("--axis", axis, "Sweep axis: T or d")
      ->check(CLI::IsMember({"T", "d"}));
  sweep->add_option("--grid", grid, "Axis grid values")->required()->delimiter(',');

  CLI::App* wanes = app.add_subcommand("wanes", "Resilience estimate");
  add_common(wanes, wanes_opts);
  std::optional<double> epsilon;
  wanes->add_option("--epsilon", epsilon, "Explicit target gap (default: rate bound)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (run->parsed()) {
      const dmd::Experiment ex = build(run_opts);
      const dmd::TrialResult res = dmd::run_trial(ex, 0);
      dmd::write_run_artifacts(ex, res, 0, ex.cfg.out_dir, run_opts.overrides);
      std::cout << "wrote trajectory.csv, schedule.csv, solution.json, manifest.json to "
                << ex.cfg.out_dir << "\n";
      return 0;
    }
    if (verify->parsed()) {
      const dmd::Experiment ex = build(verify_opts);
      const dmd::VerifyResult res = dmd::run_verify(ex, verify_opts.jobs);
      const std::string dir = ex.cfg.out_dir.empty() ? "." : ex.cfg.out_dir;
      std::filesystem::create_directories(dir);
      write_text(dir + "/verify.json", dmd::serialize_verify(res));
      if (!res.pass) {
        std::cerr << "verify failed: check=" << res.failing_check;
        if (res.failing_trial >= 0)
          std::cerr << " seed=" << dmd::derive_seed(ex.cfg.seed, res.failing_trial)
                    << " trial=" << res.failing_trial << " t=" << res.failing_round;
        std::cerr << "\n";
        return 1;
      }
      std::cout << "verify passed: " << res.trials << " trials, "
                << res.lemma_rounds << " telescoping rounds, "
                << res.chain_rounds << " chain-sum rounds, bound violation rate "
                << res.bound_violation_rate << "\n";
      return 0;
    }
    if (sweep->parsed()) {
      const dmd::Experiment ex = build(sweep_opts);
      const dmd::SweepResult res = dmd::run_sweep(ex, axis, grid, sweep_opts.jobs);
      const std::string dir = ex.cfg.out_dir.empty() ? "." : ex.cfg.out_dir;
      std::filesystem::create_directories(dir);
      write_text(dir + "/sweep.csv", dmd::sweep_csv(res));
      write_text(dir + "/sweep.json", dmd::serialize_sweep(res));
      if (res.has_fit)
        std::cout << "slope " << res.fit.slope << " (stderr " << res.fit.stderr_slope
                  << ")\n";
      else
        std::cout << "wrote " << res.cells.size() << " cells\n";
      return 0;
    }
    if (wanes->parsed()) {
      const dmd::Experiment ex = build(wanes_opts);
      const dmd::ResilienceEstimate est = dmd::run_wanes(ex, epsilon, wanes_opts.jobs);
      const std::string dir = ex.cfg.out_dir.empty() ? "." : ex.cfg.out_dir;
      std::filesystem::create_directories(dir);
      write_text(dir + "/wanes.json", dmd::serialize_resilience(est));
      std::cout << "p_hat " << est.p_hat << " ci [" << est.ci_low << ", " << est.ci_high
                << "] epsilon " << est.epsilon << (est.pass ? " PASS" : " FAIL") << "\n";
      return est.pass ? 0 : 1;
    }
  } catch (const dmd::ConfigError& err) {
    std::cerr << "config error: " << err.what() << "\n";
    return 2;
  } catch (const dmd::ValidationError& err) {
    std::cerr << "validation error: " << err.what() << "\n";
    return 2;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 1;
  }
  return 2;
}
