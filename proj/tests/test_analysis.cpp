#include <doctest.h>

#include <cmath>
#include <limits>

#include "dmd/analysis.hpp"
#include "dmd/errors.hpp"
#include "helpers.hpp"

using namespace dmd;
using namespace dmd::testing;

namespace {

struct Bench {
  Network net = diamond();
  Eigen::MatrixXd lambda = build_incidence(net);
  LatencySpec spec = diamond_asymmetric_latency();
  MirrorMap map = make_mirror_map(MapKind::Entropic, net);
  EquilibriumSolution sol = solve_mwe_frank_wolfe(spec, net, lambda);

  NoiseSpec noise(double c, std::optional<double> sigma = std::nullopt) const {
    return make_noise_spec(NoiseModel::BoundedUniform,
                           std::vector<double>(net.num_edges(), c), net, spec, lambda,
                           sigma);
  }

  Trajectory run(const DelaySchedule& sched, const NoiseSpec& ns, double eta,
                 std::uint64_t seed) const {
    Rng rng(seed);
    return run_dmd(net, lambda, spec, ns, build_calendar(sched), map, eta, sol.mu_star,
                   sol.phi_star, vec({0.75, 0.25}), rng);
  }
};

DelaySchedule constant_schedule(int T, int c) {
  DelaySchedule s;
  s.horizon = T;
  s.raw.assign(T, c);
  return s;
}

}  // namespace

TEST_CASE("telescoping certificates hold on zero-noise and noisy runs") {
  const Bench bench;
  LemmaParams params;
  params.sigma_psi = bench.map.strong_convexity;

  for (double c : {0.0, 0.1}) {
    const NoiseSpec ns = bench.noise(c, c == 0.0 ? std::optional<double>(0.3) : std::nullopt);
    params.L = ns.L;
    params.eta = 0.05;
    for (int budget : {1, 3}) {
      const DelaySchedule sched = constant_schedule(100, budget);
      params.d = sched.per_iterate_budget();
      for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const Trajectory traj = bench.run(sched, ns, params.eta, seed);
        const DeliveryCalendar cal = build_calendar(sched);
        for (const auto& cert : check_lemma1(traj, cal, params)) CHECK(cert.pass);
        for (const auto& cert : check_chainsum(traj, cal, params)) CHECK(cert.pass);
      }
    }
  }
}

TEST_CASE("chain-sum certificate is vacuous on empty rounds") {
  const Bench bench;
  DelaySchedule sched;
  sched.horizon = 4;
  sched.raw = {2, 1, 2, 1};
  const NoiseSpec ns = bench.noise(0.1);
  const Trajectory traj = bench.run(sched, ns, 0.05, 9);
  LemmaParams params{0.05, bench.map.strong_convexity, ns.L, 2};
  const auto certs = check_chainsum(traj, build_calendar(sched), params);
  REQUIRE(certs.size() == 4);
  CHECK(certs[0].pass);  // D_1 empty: 0 <= nonnegative RHS
  CHECK(certs[0].lhs == 0.0);
  for (const auto& cert : certs) CHECK(cert.pass);
}

TEST_CASE("weight sequence: default rate passes, inflated rate fails") {
  const double eta = default_learning_rate(1.0, 1.0, 1.0, 2, 100, 0.05);
  const WeightSequence ok = build_weights(100, 2, eta, 1.0, 1.0);
  CHECK(ok.recursion_ok);
  CHECK(ok.step_bound_ok);
  CHECK(ok.sandwich_ok);
  CHECK(ok.first_violation == -1);
  for (size_t t = 1; t < ok.w.size(); ++t) CHECK(ok.w[t] <= ok.w[t - 1]);
  CHECK(ok.w.back() == doctest::Approx(1.0 / (2.0 * ok.A)));
  CHECK(ok.w.front() <= 1.0 / ok.A);

  // Construction equality has zero slack at every index.
  const double growth = 648.0 * 8.0 * eta * eta;
  for (size_t t = 0; t + 1 < ok.w.size(); ++t)
    CHECK(ok.w[t] == ok.w[t + 1] + growth * ok.w[t + 1] * ok.w[t + 1]);

  // 100x the prescribed rate violates the step-size condition against the
  // prescribed sequence.
  const WeightSequence bad = build_weights(100, 2, 100.0 * eta, 1.0, 1.0, eta);
  CHECK(bad.recursion_ok);
  CHECK(!bad.step_bound_ok);
  CHECK(bad.first_violation >= 1);
}

TEST_CASE("self-anchored weight sequence is consistent for any rate") {
  for (double eta : {1e-3, 0.1, 10.0}) {
    const WeightSequence seq = build_weights(50, 4, eta, 0.7, 0.5);
    CHECK(seq.recursion_ok);
    CHECK(seq.step_bound_ok);
    CHECK(seq.sandwich_ok);
  }
}

TEST_CASE("gap bound scaling laws") {
  const double d1 = 1.0, sigma = 1.0, sp = 1.0, kappa = 1.0, delta = 0.05;
  const auto rate = [&](int d, int T) {
    const double eta = default_learning_rate(d1, sigma, sp, d, T, delta);
    return theoretical_gap_bound(d1, sigma, sp, kappa, d, T, eta, delta).rate_bound;
  };
  CHECK(rate(1, 4096) == doctest::Approx(rate(1, 1024) / 2.0).epsilon(1e-2));
  CHECK(rate(4, 1024) == doctest::Approx(rate(1, 1024) * 8.0).epsilon(1e-2));
}

TEST_CASE("gap bound plug-in arithmetic recomputed independently") {
  const double d1 = 1.0, sigma = 1.0, sp = 1.0, kappa = 1.0, delta = 0.05;
  const int d = 1, T = 10000;
  const double eta = default_learning_rate(d1, sigma, sp, d, T, delta);
  const GapBounds gb = theoretical_gap_bound(d1, sigma, sp, kappa, d, T, eta, delta);

  const double B = 2.0 * 1.0 * 1.0 + 324.0 * 1.0 * (8.0 + 1.0);  // 2918
  const double A = 648.0 * 1.0 * eta * eta * (T + 1);
  const double total = 2.0 * 1.0 + 2.0 * B * eta * eta * T + 2.0 * A * std::log(1.0 / delta);
  CHECK(gb.B == doctest::Approx(2918.0));
  CHECK(gb.A == doctest::Approx(A));
  CHECK(gb.total_bound == doctest::Approx(total).epsilon(1e-12));
  CHECK(gb.avg_gap_bound == doctest::Approx(total / (eta * T)).epsilon(1e-12));
  CHECK(gb.bregman_bound == doctest::Approx(total).epsilon(1e-12));
  CHECK(gb.rate_bound == doctest::Approx(gb.avg_gap_bound).epsilon(1e-12));
}

TEST_CASE("empirical trajectories respect the high-probability bound") {
  const Bench bench;
  const NoiseSpec ns = bench.noise(0.1);
  const int T = 500, trials = 50;
  const double delta = 0.05;
  const double d1 = bregman(bench.map, bench.net, vec({0.75, 0.25}), bench.sol.mu_star);
  const double eta = default_learning_rate(d1, ns.sigma, bench.map.strong_convexity, 1, T, delta);
  const GapBounds gb = theoretical_gap_bound(d1, ns.sigma, bench.map.strong_convexity,
                                             ns.kappa, 1, T, eta, delta);
  int violations = 0;
  for (int i = 0; i < trials; ++i) {
    const Trajectory traj = bench.run(constant_schedule(T, 1), ns, eta, 1000 + i);
    if (eta * traj.avg_gap * T + traj.bregman_final > gb.total_bound) ++violations;
  }
  CHECK(violations == 0);
}

TEST_CASE("clopper-pearson matches known intervals") {
  double lo = 0.0, hi = 0.0;
  clopper_pearson(100, 100, 0.95, &lo, &hi);
  CHECK(lo == doctest::Approx(std::pow(0.025, 0.01)).epsilon(1e-6));
  CHECK(hi == doctest::Approx(1.0));

  clopper_pearson(0, 100, 0.95, &lo, &hi);
  CHECK(lo == doctest::Approx(0.0));
  CHECK(hi == doctest::Approx(1.0 - std::pow(0.025, 0.01)).epsilon(1e-6));

  clopper_pearson(50, 100, 0.95, &lo, &hi);
  CHECK(lo == doctest::Approx(0.39832).epsilon(1e-4));
  CHECK(hi == doctest::Approx(0.60168).epsilon(1e-4));
}

TEST_CASE("resilience estimation: sentinel, monotonicity, tight target") {
  const auto synthetic = [](int i) {
    Trajectory t;
    t.gap_avg_flow = 0.01 * (i + 1);  // gaps 0.01 .. 1.00
    return t;
  };
  const ResilienceEstimate all =
      estimate_wanes(synthetic, 100, std::numeric_limits<double>::infinity(), 0.05, 1.0);
  CHECK(all.successes == 100);
  CHECK(all.p_hat == doctest::Approx(1.0));
  CHECK(all.pass);

  const ResilienceEstimate half = estimate_wanes(synthetic, 100, 0.5, 0.05, 1.0);
  CHECK(half.successes == 49);
  CHECK(!half.pass);

  int prev = 0;
  for (double eps : {0.1, 0.3, 0.7, 1.5}) {
    const ResilienceEstimate est = estimate_wanes(synthetic, 100, eps, 0.05, 1.0);
    CHECK(est.successes >= prev);
    prev = est.successes;
  }

  CHECK_THROWS_AS(estimate_wanes(synthetic, 100, 0.0, 0.05, 1.0), ConfigError);
}

TEST_CASE("parallel resilience estimation matches serial") {
  const Bench bench;
  const NoiseSpec ns = bench.noise(0.1);
  const auto trial = [&](int i) {
    return bench.run(constant_schedule(200, 2), ns, 0.05, 4000 + i);
  };
  const ResilienceEstimate serial = estimate_wanes(trial, 100, 0.01, 0.05, 1.0, 1);
  const ResilienceEstimate parallel = estimate_wanes(trial, 100, 0.01, 0.05, 1.0, 8);
  CHECK(serial.successes == parallel.successes);
  CHECK(serial.p_hat == parallel.p_hat);
}

TEST_CASE("rate fit recovers an exact power law") {
  const std::vector<int> grid = {256, 512, 1024, 2048, 4096};
  std::vector<double> medians;
  for (int T : grid) medians.push_back(3.7 / std::sqrt(static_cast<double>(T)));
  const RateFit fit = fit_rate(grid, medians);
  CHECK(fit.slope == doctest::Approx(-0.5).epsilon(1e-6));
  CHECK(fit.stderr_slope <= 1e-6);

  CHECK_THROWS_AS(fit_rate({256, 512, 1024}, {1.0, 0.7, 0.5}), ConfigError);
  CHECK_THROWS_AS(fit_rate({64, 128, 256, 512}, {1.0, 0.7, 0.5, 0.35}), ConfigError);
  CHECK_THROWS_AS(fit_rate(grid, {1.0, 0.7, 0.5, 0.0, 0.2}), ConfigError);
}

TEST_CASE("max-of-bundle MGF check") {
  const Bench bench;
  const NoiseSpec ns = bench.noise(0.1);
  Rng rng(83);

  const double limit1 = 1.0 / (std::sqrt(108.0) * ns.sigma);
  const MaxMgfReport r1 =
      check_max_mgf(ns, bench.lambda, 1, {0.0, 0.5 * limit1, limit1}, 20000, rng);
  CHECK(r1.pass);
  CHECK(r1.estimates[0] == doctest::Approx(1.0));

  const double limit8 = 1.0 / (std::sqrt(108.0 * 8.0) * ns.sigma);
  const MaxMgfReport r8 = check_max_mgf(ns, bench.lambda, 8, {0.5 * limit8}, 20000, rng);
  CHECK(r8.pass);

  CHECK_THROWS_AS(check_max_mgf(ns, bench.lambda, 1, {2.0 * limit1}, 20000, rng),
                  ConfigError);
}
