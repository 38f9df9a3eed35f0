#include "dmd/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "dmd/errors.hpp"

namespace dmd {

using json = nlohmann::ordered_json;

namespace {

void parallel_for(int n, int jobs, const std::function<void(int)>& fn) {
  jobs = std::max(1, std::min(jobs, n));
  if (jobs <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  for (int w = 0; w < jobs; ++w) {
    pool.emplace_back([&] {
      for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

double quantile(std::vector<double> v, double p) {
  std::sort(v.begin(), v.end());
  const double h = (static_cast<double>(v.size()) - 1.0) * p;
  const auto lo = static_cast<size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

double blind_radius(const Network& net, MapKind kind) {
  double total = 0.0;
  for (const auto& od : net.od_pairs) {
    if (kind == MapKind::Entropic)
      total += od.demand * std::log(static_cast<double>(od.paths.size()));
    else
      total += od.demand * od.demand;
  }
  return total;
}

std::string hex64(std::uint64_t value) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(value));
  return buf;
}

json vector_json(const Eigen::VectorXd& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

void write_file(const std::filesystem::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write '" + path.string() + "'");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

}  // namespace

std::string fmt17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

Experiment make_experiment(ExperimentConfig cfg) {
  Experiment ex;
  ex.cfg = std::move(cfg);
  const ExperimentConfig& c = ex.cfg;

  ex.incidence = build_incidence(c.network);
  ex.noise = make_noise_spec(c.noise_model, c.noise_scale, c.network, c.latency,
                             ex.incidence, c.sigma_override, c.L_override);
  ex.map = make_mirror_map(c.mirror_map, c.network);

  ex.equilibrium = solve_mwe_frank_wolfe(c.latency, c.network, ex.incidence, c.fw_tol,
                                         c.fw_max_iters);
  if (!ex.equilibrium.converged)
    throw ConfigError("equilibrium solve did not reach the gap tolerance");

  if (c.mu1) {
    ex.mu1 = Eigen::Map<const Eigen::VectorXd>(c.mu1->data(),
                                               static_cast<Eigen::Index>(c.mu1->size()));
    if (!validate_flow(c.network, ex.mu1).empty())
      throw ConfigError("/mu1: initial flow is infeasible");
  } else {
    ex.mu1 = uniform_flow(c.network);
  }

  switch (c.attack.kind) {
    case AttackKind::None: ex.d = 1; break;
    default: ex.d = std::max(1, c.attack.budget); break;
  }

  if (c.eta_mode == EtaMode::Blind)
    ex.d1 = blind_radius(c.network, c.mirror_map);
  else
    ex.d1 = bregman(ex.map, c.network, ex.mu1, ex.equilibrium.mu_star);

  if (c.eta_mode == EtaMode::Explicit) {
    ex.eta = c.eta_value;
  } else {
    if (ex.d1 <= 1e-12)
      throw ConfigError(
          "/eta/mode: the learning-rate rule needs a positive initial Bregman radius; "
          "start away from the equilibrium (mu1) or pass an explicit value");
    ex.eta = default_learning_rate(ex.d1, ex.noise.sigma, ex.map.strong_convexity, ex.d,
                                   c.horizon, c.delta);
  }

  if (static_cast<double>(ex.d) > std::cbrt(static_cast<double>(c.horizon)))
    ex.warnings.push_back("attack budget d=" + std::to_string(ex.d) +
                          " exceeds T^(1/3); the average-gap guarantee degrades to trivial");
  return ex;
}

DelaySchedule schedule_for_trial(const Experiment& ex, int trial) {
  Rng rng(derive_seed(ex.cfg.seed, trial));
  return make_schedule(ex.cfg.attack, ex.cfg.horizon, rng);
}

TrialResult run_trial(const Experiment& ex, int trial) {
  Rng rng(derive_seed(ex.cfg.seed, trial));
  TrialResult res;
  res.schedule = make_schedule(ex.cfg.attack, ex.cfg.horizon, rng);
  res.calendar = build_calendar(res.schedule);
  res.traj = run_dmd(ex.cfg.network, ex.incidence, ex.cfg.latency, ex.noise, res.calendar,
                     ex.map, ex.eta, ex.equilibrium.mu_star, ex.equilibrium.phi_star,
                     ex.mu1, rng);
  return res;
}

RunArtifacts write_run_artifacts(const Experiment& ex, const TrialResult& res, int trial,
                                 const std::string& out_dir,
                                 const std::vector<std::string>& overrides) {
  namespace fs = std::filesystem;
  const fs::path dir(out_dir);
  fs::create_directories(dir);
  const Network& net = ex.cfg.network;
  const int num_paths = net.num_paths();
  const int T = ex.cfg.horizon;

  std::ostringstream traj;
  traj << "t";
  for (int p = 0; p < num_paths; ++p) traj << ",mu_" << p;
  for (int p = 0; p < num_paths; ++p) traj << ",ell_" << p;
  traj << ",bundle_size,gap,bregman_to_star\n";
  for (int t = 0; t < T; ++t) {
    const RoundRecord& rec = res.traj.rounds[t];
    traj << (t + 1);
    for (int p = 0; p < num_paths; ++p) traj << ',' << fmt17(rec.mu[p]);
    for (int p = 0; p < num_paths; ++p) traj << ',' << fmt17(rec.ell[p]);
    traj << ',' << rec.delivered.size() << ',' << fmt17(rec.gap) << ','
         << fmt17(rec.bregman_to_star) << '\n';
  }
  traj << (T + 1);
  for (int p = 0; p < num_paths; ++p) traj << ',' << fmt17(res.traj.mu_final[p]);
  for (int p = 0; p < num_paths; ++p) traj << ",nan";
  traj << ",0," << fmt17(res.traj.gap_final) << ',' << fmt17(res.traj.bregman_final)
       << '\n';

  std::ostringstream sched;
  sched << "t,d_raw,d_eff,delivery_round\n";
  const std::vector<int> eff = res.schedule.effective();
  for (int t = 0; t < T; ++t)
    sched << (t + 1) << ',' << res.schedule.raw[t] << ',' << eff[t] << ','
          << (t + eff[t]) << '\n';

  json sol;
  sol["mu_star"] = vector_json(ex.equilibrium.mu_star);
  sol["phi_star"] = ex.equilibrium.phi_star;
  sol["duality_gap"] = ex.equilibrium.duality_gap;
  sol["eta"] = ex.eta;
  sol["sigma"] = ex.noise.sigma;
  sol["L"] = ex.noise.L;
  sol["kappa"] = ex.noise.kappa;
  sol["sigma_psi"] = ex.map.strong_convexity;
  sol["d"] = ex.d;
  sol["d1"] = ex.d1;
  sol["mu_final"] = vector_json(res.traj.mu_final);
  sol["mu_avg"] = vector_json(res.traj.mu_avg);
  sol["gap_final"] = res.traj.gap_final;
  sol["avg_gap"] = res.traj.avg_gap;
  sol["gap_avg_flow"] = res.traj.gap_avg_flow;
  sol["bregman_final"] = res.traj.bregman_final;
  sol["warnings"] = ex.warnings;

  write_file(dir / "trajectory.csv", traj.str());
  write_file(dir / "schedule.csv", sched.str());
  write_file(dir / "solution.json", sol.dump(2) + "\n");

  json manifest;
  manifest["code_version"] = kCodeVersion;
  manifest["config_hash"] = hex64(config_hash(ex.cfg));
  manifest["master_seed"] = ex.cfg.seed;
  manifest["trial"] = trial;
  manifest["trial_seeds"] = json::array({derive_seed(ex.cfg.seed, trial)});
  manifest["overrides"] = overrides;
  json files;
  for (const char* name : {"trajectory.csv", "schedule.csv", "solution.json"})
    files[name] = hex64(file_checksum((dir / name).string()));
  manifest["files"] = std::move(files);
  write_file(dir / "manifest.json", manifest.dump(2) + "\n");

  return RunArtifacts{{"trajectory.csv", "schedule.csv", "solution.json", "manifest.json"}};
}

VerifyResult run_verify(const Experiment& ex, int jobs) {
  const int N = ex.cfg.trials;
  VerifyResult out;
  out.trials = N;
  const double anchor_eta =
      ex.d1 > 0.0 ? default_learning_rate(ex.d1, ex.noise.sigma, ex.map.strong_convexity,
                                          ex.d, ex.cfg.horizon, ex.cfg.delta)
                  : ex.eta;
  out.weights = build_weights(ex.cfg.horizon, ex.d, ex.eta, ex.noise.sigma,
                              ex.map.strong_convexity, anchor_eta);
  if (!out.weights.recursion_ok || !out.weights.step_bound_ok || !out.weights.sandwich_ok) {
    out.failing_check = "weights";
    out.failing_round = out.weights.first_violation;
    return out;
  }

  struct TrialReport {
    long long lemma_rounds = 0;
    long long chain_rounds = 0;
    int first_bad_round = -1;  // 1-based
    std::string check;
    bool bound_violated = false;
  };
  std::vector<TrialReport> reports(N);
  const GapBounds bounds =
      theoretical_gap_bound(ex.d1, ex.noise.sigma, ex.map.strong_convexity, ex.noise.kappa,
                            ex.d, ex.cfg.horizon, ex.eta, ex.cfg.delta);

  parallel_for(N, jobs, [&](int i) {
    const TrialResult res = run_trial(ex, i);
    LemmaParams params;
    params.eta = ex.eta;
    params.sigma_psi = ex.map.strong_convexity;
    params.L = ex.noise.L;
    params.d = res.schedule.per_iterate_budget();
    TrialReport& rep = reports[i];

    if (ex.map.kind == MapKind::Entropic) {
      for (const auto& cert : check_lemma1(res.traj, res.calendar, params)) {
        ++rep.lemma_rounds;
        if (!cert.pass && rep.first_bad_round < 0) {
          rep.first_bad_round = cert.round + 1;
          rep.check = "lemma1";
        }
      }
    }
    for (const auto& cert : check_chainsum(res.traj, res.calendar, params)) {
      ++rep.chain_rounds;
      if (!cert.pass && rep.first_bad_round < 0) {
        rep.first_bad_round = cert.round + 1;
        rep.check = "chainsum";
      }
    }
    const double lhs =
        ex.eta * res.traj.avg_gap * ex.cfg.horizon + res.traj.bregman_final;
    rep.bound_violated = lhs > bounds.total_bound;
  });

  for (int i = 0; i < N; ++i) {
    const TrialReport& rep = reports[i];
    out.lemma_rounds += rep.lemma_rounds;
    out.chain_rounds += rep.chain_rounds;
    if (rep.bound_violated) ++out.bound_violations;
    if (rep.first_bad_round >= 0 && out.failing_trial < 0) {
      out.failing_trial = i;
      out.failing_round = rep.first_bad_round;
      out.failing_check = rep.check;
    }
  }
  out.bound_violation_rate = static_cast<double>(out.bound_violations) / N;

  const bool weights_ok =
      out.weights.recursion_ok && out.weights.step_bound_ok && out.weights.sandwich_ok;
  if (out.failing_trial < 0 && !weights_ok) out.failing_check = "weights";
  if (out.failing_trial < 0 && out.bound_violation_rate > ex.cfg.delta &&
      out.failing_check.empty())
    out.failing_check = "bound-violation-rate";
  out.pass = out.failing_trial < 0 && weights_ok &&
             out.bound_violation_rate <= ex.cfg.delta;
  return out;
}

SweepResult run_sweep(const Experiment& ex, const std::string& axis,
                      const std::vector<int>& grid, int jobs) {
  SweepResult out;
  out.axis = axis;
  if (axis != "T" && axis != "d") throw ConfigError("sweep axis must be 'T' or 'd'");
  if (axis == "T" && grid.size() < 4)
    throw ConfigError("T-axis sweep needs grid length >= 4");

  std::vector<double> medians;
  for (size_t cell = 0; cell < grid.size(); ++cell) {
    ExperimentConfig cfg = ex.cfg;
    if (axis == "T") {
      cfg.horizon = grid[cell];
    } else {
      cfg.attack.kind = AttackKind::Constant;
      cfg.attack.budget = grid[cell];
    }
    cfg.seed = derive_seed(ex.cfg.seed, static_cast<int>(grid[cell]));
    const Experiment cell_ex = make_experiment(std::move(cfg));

    std::vector<double> gaps(cell_ex.cfg.trials);
    parallel_for(cell_ex.cfg.trials, jobs,
                 [&](int i) { gaps[i] = run_trial(cell_ex, i).traj.avg_gap; });

    SweepCell c;
    c.axis_value = grid[cell];
    c.median_gap = quantile(gaps, 0.5);
    c.q25 = quantile(gaps, 0.25);
    c.q75 = quantile(gaps, 0.75);
    c.bound = theoretical_gap_bound(cell_ex.d1, cell_ex.noise.sigma,
                                    cell_ex.map.strong_convexity, cell_ex.noise.kappa,
                                    cell_ex.d, cell_ex.cfg.horizon, cell_ex.eta,
                                    cell_ex.cfg.delta)
                  .avg_gap_bound;
    medians.push_back(c.median_gap);
    out.cells.push_back(c);
  }

  if (axis == "T") {
    out.fit = fit_rate(grid, medians);
    out.has_fit = true;
  }
  return out;
}

ResilienceEstimate run_wanes(const Experiment& ex, std::optional<double> epsilon,
                             int jobs) {
  if (ex.cfg.trials < 100) throw ConfigError("/trials: resilience estimation needs N >= 100");
  const GapBounds bounds =
      theoretical_gap_bound(ex.d1, ex.noise.sigma, ex.map.strong_convexity, ex.noise.kappa,
                            ex.d, ex.cfg.horizon, ex.eta, ex.cfg.delta);
  const double eps = epsilon.value_or(bounds.rate_bound);
  return estimate_wanes([&](int i) { return run_trial(ex, i).traj; }, ex.cfg.trials, eps,
                        ex.cfg.delta, bounds.rate_bound, jobs);
}

std::string serialize_verify(const VerifyResult& res) {
  json j;
  j["pass"] = res.pass;
  j["trials"] = res.trials;
  j["lemma_rounds"] = res.lemma_rounds;
  j["chain_rounds"] = res.chain_rounds;
  j["bound_violations"] = res.bound_violations;
  j["bound_violation_rate"] = res.bound_violation_rate;
  j["weights"] = {{"A", res.weights.A},
                  {"recursion_ok", res.weights.recursion_ok},
                  {"step_bound_ok", res.weights.step_bound_ok},
                  {"sandwich_ok", res.weights.sandwich_ok},
                  {"first_violation", res.weights.first_violation}};
  if (!res.pass) {
    j["failing_trial"] = res.failing_trial;
    j["failing_round"] = res.failing_round;
    j["failing_check"] = res.failing_check;
  }
  return j.dump(2) + "\n";
}

std::string serialize_sweep(const SweepResult& res) {
  json j;
  j["axis"] = res.axis;
  json cells = json::array();
  for (const auto& c : res.cells)
    cells.push_back({{res.axis, c.axis_value},
                     {"median_gap", c.median_gap},
                     {"q25", c.q25},
                     {"q75", c.q75},
                     {"bound", c.bound}});
  j["cells"] = std::move(cells);
  if (res.has_fit) {
    j["slope"] = res.fit.slope;
    j["stderr_slope"] = res.fit.stderr_slope;
    j["intercept"] = res.fit.intercept;
  }
  return j.dump(2) + "\n";
}

std::string sweep_csv(const SweepResult& res) {
  std::ostringstream out;
  out << res.axis << ",median_gap,q25,q75,bound\n";
  for (const auto& c : res.cells)
    out << c.axis_value << ',' << fmt17(c.median_gap) << ',' << fmt17(c.q25) << ','
        << fmt17(c.q75) << ',' << fmt17(c.bound) << '\n';
  return out.str();
}

std::string serialize_resilience(const ResilienceEstimate& est) {
  json j;
  j["epsilon"] = est.epsilon;
  j["delta"] = est.delta;
  j["trials"] = est.trials;
  j["successes"] = est.successes;
  j["p_hat"] = est.p_hat;
  j["ci_low"] = est.ci_low;
  j["ci_high"] = est.ci_high;
  j["theoretical_epsilon"] = est.theoretical_epsilon;
  j["pass"] = est.pass;
  return j.dump(2) + "\n";
}

std::uint64_t file_checksum(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return fnv1a64(buffer.str());
}

}  // namespace dmd
