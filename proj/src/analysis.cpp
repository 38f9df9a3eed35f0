#include "dmd/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

#include "dmd/errors.hpp"

namespace dmd {

namespace {

double window_max_noise(const Trajectory& traj, const DeliveryCalendar& calendar, int t) {
  double z_max = 0.0;
  for (int r : calendar.window_union(t))
    z_max = std::max(z_max, traj.rounds[r].z.norm());
  return z_max;
}

double bregman_at(const Trajectory& traj, int t) {
  // D^{mu*}_{mu^t} for t = 0..T (T means the post-horizon iterate).
  return t < static_cast<int>(traj.rounds.size()) ? traj.rounds[t].bregman_to_star
                                                  : traj.bregman_final;
}

}  // namespace

std::vector<PerRoundCertificate> check_lemma1(const Trajectory& traj,
                                              const DeliveryCalendar& calendar,
                                              const LemmaParams& params) {
  const int T = calendar.horizon;
  const double eta = params.eta;
  const double slack_coeff = 2.0 * eta * eta * params.d / params.sigma_psi;
  std::vector<PerRoundCertificate> certs;
  for (int t = 0; t < T; ++t) {
    const auto& delivered = calendar.deliveries[t];
    if (delivered.empty()) continue;
    PerRoundCertificate cert;
    cert.round = t;
    cert.z_max_norm = window_max_noise(traj, calendar, t);

    double gap_term = 0.0;
    for (int tau : delivered) gap_term += eta * traj.rounds[tau].gap;
    cert.lhs = gap_term - slack_coeff * params.L * params.L + bregman_at(traj, t + 1) -
               bregman_at(traj, t);

    double xi_sum = 0.0;
    for (int tau : delivered) {
      const double xi =
          eta * traj.rounds[tau].z.dot(traj.mu_star - traj.rounds[tau].mu);
      cert.xi.push_back(xi);
      xi_sum += xi;
    }
    cert.rhs = xi_sum + slack_coeff * cert.z_max_norm * cert.z_max_norm;
    cert.pass = cert.lhs <= cert.rhs + 1e-9 * (1.0 + std::abs(cert.rhs));
    certs.push_back(std::move(cert));
  }
  return certs;
}

std::vector<PerRoundCertificate> check_chainsum(const Trajectory& traj,
                                                const DeliveryCalendar& calendar,
                                                const LemmaParams& params) {
  const int T = calendar.horizon;
  const double eta = params.eta;
  const double d2eta2 = static_cast<double>(params.d) * params.d * eta * eta;
  std::vector<PerRoundCertificate> certs;
  for (int t = 0; t < T; ++t) {
    PerRoundCertificate cert;
    cert.round = t;
    cert.z_max_norm = window_max_noise(traj, calendar, t);
    double lhs = 0.0;
    for (int tau : calendar.deliveries[t])
      lhs += eta * (traj.mu_star - traj.rounds[tau].mu).norm();
    cert.lhs = lhs;
    cert.rhs = std::sqrt(2.0 * d2eta2 / params.sigma_psi * bregman_at(traj, t)) +
               (2.0 * d2eta2 / params.sigma_psi) * (params.L + cert.z_max_norm);
    cert.pass = cert.lhs <= cert.rhs + 1e-9 * (1.0 + std::abs(cert.rhs));
    certs.push_back(std::move(cert));
  }
  return certs;
}

WeightSequence build_weights(int T, int d, double eta, double sigma, double sigma_psi,
                             double anchor_eta) {
  if (anchor_eta <= 0.0) anchor_eta = eta;
  if (T < 1 || d < 1 || eta <= 0.0 || sigma <= 0.0 || sigma_psi <= 0.0)
    throw ConfigError("build_weights needs positive inputs");
  const double d3 = static_cast<double>(d) * d * d;
  const double growth = 648.0 * d3 * anchor_eta * anchor_eta * sigma * sigma / sigma_psi;

  WeightSequence seq;
  seq.A = growth * (T + 1);
  seq.w.assign(T + 1, 0.0);
  seq.w[T] = sigma_psi / (1296.0 * d3 * sigma * sigma * anchor_eta * anchor_eta * (T + 1));
  for (int t = T - 1; t >= 0; --t) seq.w[t] = seq.w[t + 1] + growth * seq.w[t + 1] * seq.w[t + 1];

  seq.recursion_ok = true;
  seq.step_bound_ok = true;
  seq.sandwich_ok = true;
  const double step_cap = sigma_psi / (432.0 * d * sigma * sigma);
  const double lo = 1.0 / (2.0 * seq.A);
  const double hi = 1.0 / seq.A;
  for (int t = 0; t <= T; ++t) {
    const double w = seq.w[t];
    bool ok = true;
    if (t < T) {
      const double next = seq.w[t + 1];
      if (next + growth * next * next > w * (1.0 + 1e-12)) {
        seq.recursion_ok = false;
        ok = false;
      }
      if (next * eta * eta * d * d > step_cap * (1.0 + 1e-12)) {
        seq.step_bound_ok = false;
        ok = false;
      }
    }
    if (w < lo * (1.0 - 1e-12) || w > hi * (1.0 + 1e-12)) {
      seq.sandwich_ok = false;
      ok = false;
    }
    if (!ok && seq.first_violation < 0) seq.first_violation = t + 1;
  }
  return seq;
}

GapBounds theoretical_gap_bound(double d1, double sigma, double sigma_psi, double kappa,
                                int d, int T, double eta, double delta) {
  if (d1 <= 0.0 || sigma <= 0.0 || sigma_psi <= 0.0 || kappa < 0.0 || d < 1 || T < 1 ||
      eta <= 0.0)
    throw ConfigError("theoretical_gap_bound needs positive inputs");
  if (delta <= 0.0 || delta >= 1.0) throw ConfigError("delta must lie in (0,1)");
  const double d3 = static_cast<double>(d) * d * d;
  const double s2 = sigma * sigma;

  GapBounds bounds;
  bounds.B = 2.0 * d * kappa * kappa + 324.0 * d3 * (8.0 + kappa * kappa);
  bounds.A = 648.0 * d3 * s2 * eta * eta * (T + 1) / sigma_psi;
  bounds.total_bound = 2.0 * d1 + 2.0 * (s2 / sigma_psi) * bounds.B * eta * eta * T +
                       2.0 * bounds.A * std::log(1.0 / delta);
  bounds.avg_gap_bound = bounds.total_bound / (eta * T);
  bounds.bregman_bound = bounds.total_bound;

  const double eta_star = default_learning_rate(d1, sigma, sigma_psi, d, T, delta);
  const double a_star = 648.0 * d3 * s2 * eta_star * eta_star * (T + 1) / sigma_psi;
  bounds.rate_bound = (2.0 * d1 + 2.0 * (s2 / sigma_psi) * bounds.B * eta_star * eta_star * T +
                       2.0 * a_star * std::log(1.0 / delta)) /
                      (eta_star * T);
  return bounds;
}

namespace {

// log C(n,k) p^k (1-p)^(n-k)
double log_binom_pmf(int n, int k, double p) {
  if (p <= 0.0) return k == 0 ? 0.0 : -1e300;
  if (p >= 1.0) return k == n ? 0.0 : -1e300;
  return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0) +
         k * std::log(p) + (n - k) * std::log1p(-p);
}

double binom_cdf(int n, int k, double p) {
  double sum = 0.0;
  for (int i = 0; i <= k; ++i) sum += std::exp(log_binom_pmf(n, i, p));
  return std::min(sum, 1.0);
}

}  // namespace

void clopper_pearson(int successes, int trials, double confidence, double* low, double* high) {
  const double alpha = 1.0 - confidence;
  if (successes <= 0) {
    *low = 0.0;
  } else {
    // largest p with P(X >= k | p) <= alpha/2, i.e. P(X <= k-1 | p) >= 1 - alpha/2
    double lo = 0.0, hi = 1.0;
    for (int i = 0; i < 200; ++i) {
      const double mid = 0.5 * (lo + hi);
      (binom_cdf(trials, successes - 1, mid) >= 1.0 - alpha / 2.0 ? lo : hi) = mid;
    }
    *low = lo;
  }
  if (successes >= trials) {
    *high = 1.0;
  } else {
    double lo = 0.0, hi = 1.0;
    for (int i = 0; i < 200; ++i) {
      const double mid = 0.5 * (lo + hi);
      (binom_cdf(trials, successes, mid) >= alpha / 2.0 ? lo : hi) = mid;
    }
    *high = hi;
  }
}

ResilienceEstimate estimate_wanes(const std::function<Trajectory(int)>& run_trial, int trials,
                                  double epsilon, double delta, double theoretical_epsilon,
                                  int jobs) {
  if (trials < 100) throw ConfigError("estimate_wanes needs at least 100 trials");
  if (epsilon <= 0.0) throw ConfigError("epsilon must be positive");

  std::vector<char> success(trials, 0);
  auto worker = [&](int begin, int end) {
    for (int i = begin; i < end; ++i)
      success[i] = run_trial(i).gap_avg_flow < epsilon ? 1 : 0;
  };
  if (jobs <= 1) {
    worker(0, trials);
  } else {
    std::vector<std::thread> pool;
    const int chunk = (trials + jobs - 1) / jobs;
    for (int j = 0; j < jobs; ++j) {
      const int begin = j * chunk;
      const int end = std::min(trials, begin + chunk);
      if (begin < end) pool.emplace_back(worker, begin, end);
    }
    for (auto& th : pool) th.join();
  }

  ResilienceEstimate est;
  est.epsilon = epsilon;
  est.delta = delta;
  est.trials = trials;
  est.successes = static_cast<int>(std::count(success.begin(), success.end(), 1));
  est.p_hat = static_cast<double>(est.successes) / trials;
  est.theoretical_epsilon = theoretical_epsilon;
  clopper_pearson(est.successes, trials, 0.95, &est.ci_low, &est.ci_high);
  est.pass = est.ci_low >= 1.0 - delta;
  return est;
}

RateFit fit_rate(const std::vector<int>& t_grid, const std::vector<double>& median_gaps) {
  if (t_grid.size() < 4) throw ConfigError("fit_rate needs a grid of length >= 4");
  if (t_grid.size() != median_gaps.size())
    throw ConfigError("fit_rate: grid and medians disagree in length");
  const int n = static_cast<int>(t_grid.size());
  for (int i = 0; i < n; ++i) {
    if (t_grid[i] < 128) throw ConfigError("fit_rate needs T >= 128 at every grid point");
    if (median_gaps[i] <= 0.0)
      throw ConfigError(
          "degenerate zero gap at T=" + std::to_string(t_grid[i]) +
          "; add noise or shrink the horizon");
  }

  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = std::log(static_cast<double>(t_grid[i]));
    const double y = std::log(median_gaps[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double denom = n * sxx - sx * sx;
  RateFit fit;
  fit.medians = median_gaps;
  fit.slope = (n * sxy - sx * sy) / denom;
  fit.intercept = (sy - fit.slope * sx) / n;
  double ss_res = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = std::log(static_cast<double>(t_grid[i]));
    const double y = std::log(median_gaps[i]);
    const double r = y - (fit.intercept + fit.slope * x);
    ss_res += r * r;
  }
  const double var = n > 2 ? ss_res / (n - 2) : 0.0;
  fit.stderr_slope = std::sqrt(var * n / denom);
  return fit;
}

MaxMgfReport check_max_mgf(const NoiseSpec& noise, const Eigen::MatrixXd& incidence, int d,
                           const std::vector<double>& lambda_grid, int trials, Rng& rng) {
  if (trials < 10000) throw ConfigError("check_max_mgf needs at least 10^4 trials");
  const double lambda_cap = 1.0 / (std::sqrt(108.0 * d) * noise.sigma);
  for (double lambda : lambda_grid)
    if (std::abs(lambda) > lambda_cap)
      throw ConfigError("lambda " + std::to_string(lambda) +
                        " outside the admissible range |lambda| <= " +
                        std::to_string(lambda_cap));

  // One shared set of max-of-group draws evaluated at every lambda.
  std::vector<double> z_max(trials);
  for (int i = 0; i < trials; ++i) {
    double zm = 0.0;
    for (int g = 0; g < 2 * d; ++g)
      zm = std::max(zm, draw_path_noise(noise, incidence, rng).norm());
    z_max[i] = zm;
  }

  MaxMgfReport report;
  report.lambda_grid = lambda_grid;
  report.pass = true;
  for (double lambda : lambda_grid) {
    double sum = 0.0;
    for (double zm : z_max) sum += std::exp(lambda * lambda * zm * zm);
    const double estimate = sum / trials;
    const double bound =
        std::exp(216.0 * d * lambda * lambda * noise.sigma * noise.sigma) * 1.05;
    report.estimates.push_back(estimate);
    report.bounds.push_back(bound);
    if (estimate > bound) report.pass = false;
  }
  return report;
}

}  // namespace dmd
