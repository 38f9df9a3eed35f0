#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dmd/analysis.hpp"
#include "dmd/config.hpp"
#include "dmd/delay.hpp"
#include "dmd/equilibrium.hpp"
#include "dmd/latency.hpp"
#include "dmd/mirror.hpp"
#include "dmd/network.hpp"
#include "dmd/solver.hpp"

namespace dmd {

inline constexpr const char* kCodeVersion = "0.1.0";

// Config resolved into runnable pieces: incidence, noise parameters,
// equilibrium reference, learning rate. Immutable after make_experiment; all
// trial runs borrow it read-only, so fan-out across threads is safe.
struct Experiment {
  ExperimentConfig cfg;
  Eigen::MatrixXd incidence;
  NoiseSpec noise;
  MirrorMap map;
  EquilibriumSolution equilibrium;
  Eigen::VectorXd mu1;
  double d1 = 0.0;   // Bregman radius used by the learning-rate rule
  double eta = 0.0;
  int d = 1;         // per-iterate attack budget ||d||_inf
  std::vector<std::string> warnings;
};

Experiment make_experiment(ExperimentConfig cfg);

struct TrialResult {
  DelaySchedule schedule;
  DeliveryCalendar calendar;
  Trajectory traj;
};

// Deterministic function of (experiment, trial index): the trial seed is
// derive_seed(master, trial) and feeds one stream for the schedule draw and
// the noise draws.
DelaySchedule schedule_for_trial(const Experiment& ex, int trial);
TrialResult run_trial(const Experiment& ex, int trial);

// 17-significant-digit decimal form; round-trips the exact double.
std::string fmt17(double x);

struct RunArtifacts {
  std::vector<std::string> files;  // relative names, manifest last
};

// Writes trajectory.csv, schedule.csv, solution.json and manifest.json under
// out_dir. Byte-identical across invocations with the same config and seed.
RunArtifacts write_run_artifacts(const Experiment& ex, const TrialResult& res, int trial,
                                 const std::string& out_dir,
                                 const std::vector<std::string>& overrides);

struct VerifyResult {
  int trials = 0;
  long long lemma_rounds = 0;
  long long chain_rounds = 0;
  int bound_violations = 0;
  double bound_violation_rate = 0.0;
  WeightSequence weights;
  bool pass = false;
  int failing_trial = -1;  // 0-based trial of the first failure
  int failing_round = -1;  // 1-based round, or -1 for trial-level checks
  std::string failing_check;
};

// Per-trial telescoping and chain-sum certificates, the weight-sequence
// conditions, and the high-probability bound violation rate (must be <=
// delta). Telescoping certificates require the entropic map; Euclidean runs
// check everything else.
VerifyResult run_verify(const Experiment& ex, int jobs = 1);

struct SweepCell {
  int axis_value = 0;
  double median_gap = 0.0;
  double q25 = 0.0;
  double q75 = 0.0;
  double bound = 0.0;  // theoretical average-gap bound for the cell
};

struct SweepResult {
  std::string axis;
  std::vector<SweepCell> cells;
  RateFit fit;       // T-axis only
  bool has_fit = false;
};

// axis "T": reruns the default-rule learning rate per horizon and fits the
// log-log slope of the median average gap (grid length >= 4). axis "d":
// constant-delay schedules at each budget, fixed horizon.
SweepResult run_sweep(const Experiment& ex, const std::string& axis,
                      const std::vector<int>& grid, int jobs = 1);

// epsilon defaults to the rate-bound reconstruction when not given.
ResilienceEstimate run_wanes(const Experiment& ex, std::optional<double> epsilon,
                             int jobs = 1);

std::string serialize_verify(const VerifyResult& res);
std::string serialize_sweep(const SweepResult& res);
std::string sweep_csv(const SweepResult& res);
std::string serialize_resilience(const ResilienceEstimate& est);

std::uint64_t file_checksum(const std::string& path);

}  // namespace dmd
