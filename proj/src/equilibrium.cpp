#include "dmd/equilibrium.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

#include "dmd/errors.hpp"

namespace dmd {

namespace {

// FW duality gap <gradPhi(mu), mu - s> with s the all-or-nothing assignment.
double fw_gap(const LatencySpec& spec, const Network& net, const Eigen::MatrixXd& inc,
              const Eigen::VectorXd& mu) {
  const Eigen::VectorXd ell = mean_path_latency(spec, inc, mu);
  double gap = 0.0;
  const auto slices = net.od_slices();
  for (size_t w = 0; w < slices.size(); ++w) {
    const auto [offset, count] = slices[w];
    const double cheapest = ell.segment(offset, count).minCoeff();
    gap += ell.segment(offset, count).dot(mu.segment(offset, count)) -
           net.od_pairs[w].demand * cheapest;
  }
  return gap;
}

}  // namespace

EquilibriumSolution solve_mwe_frank_wolfe(const LatencySpec& spec, const Network& net,
                                          const Eigen::MatrixXd& inc, double tol,
                                          int max_iters) {
  if (tol <= 0.0) throw ConfigError("Frank-Wolfe tolerance must be positive");
  spec.validate(net);
  const auto slices = net.od_slices();
  Eigen::VectorXd mu = uniform_flow(net);

  EquilibriumSolution sol;
  sol.duality_gap = fw_gap(spec, net, inc, mu);
  for (int iter = 0; iter < max_iters && sol.duality_gap > tol; ++iter) {
    sol.iterations = iter + 1;
    for (size_t w = 0; w < slices.size(); ++w) {
      const auto [offset, count] = slices[w];
      if (count < 2) continue;
      const Eigen::VectorXd ell = mean_path_latency(spec, inc, mu);
      int best = offset, worst = -1;
      for (int p = offset; p < offset + count; ++p) {
        if (ell[p] < ell[best]) best = p;
        if (mu[p] > 0.0 && (worst < 0 || ell[p] > ell[worst])) worst = p;
      }
      if (worst < 0 || worst == best) continue;
      const double gamma_max = mu[worst];
      if (gamma_max <= 0.0 || ell[worst] - ell[best] <= 0.0) continue;

      // d/dgamma Phi(mu + gamma(e_best - e_worst)) = ell_best - ell_worst at
      // the shifted flow; bisect on its sign.
      auto deriv = [&](double gamma) {
        Eigen::VectorXd trial = mu;
        trial[best] += gamma;
        trial[worst] -= gamma;
        const Eigen::VectorXd l = mean_path_latency(spec, inc, trial);
        return l[best] - l[worst];
      };
      double lo = 0.0, hi = gamma_max;
      if (deriv(hi) <= 0.0) {
        lo = hi;
      } else {
        for (int b = 0; b < 64; ++b) {
          const double mid = 0.5 * (lo + hi);
          (deriv(mid) <= 0.0 ? lo : hi) = mid;
        }
      }
      mu[best] += lo;
      mu[worst] -= lo;
    }
    sol.duality_gap = fw_gap(spec, net, inc, mu);
  }

  sol.mu_star = mu;
  sol.phi_star = beckmann_potential(spec, inc, mu);
  sol.converged = sol.duality_gap <= tol;
  return sol;
}

EquilibriumSolution solve_mwe_grid(const LatencySpec& spec, const Network& net,
                                   const Eigen::MatrixXd& inc, double resolution) {
  spec.validate(net);
  if (net.num_paths() > 4)
    throw ConfigError("grid oracle limited to 4 paths, got " +
                      std::to_string(net.num_paths()));
  const auto slices = net.od_slices();

  EquilibriumSolution sol;
  sol.phi_star = std::numeric_limits<double>::infinity();
  Eigen::VectorXd mu(net.num_paths());

  // Enumerate compositions per OD slice at the given resolution.
  std::function<void(size_t)> enumerate = [&](size_t w) {
    if (w == slices.size()) {
      const double phi = beckmann_potential(spec, inc, mu);
      ++sol.iterations;
      if (phi < sol.phi_star) {
        sol.phi_star = phi;
        sol.mu_star = mu;
      }
      return;
    }
    const auto [offset, count] = slices[w];
    const double demand = net.od_pairs[w].demand;
    const int steps = std::max(1, static_cast<int>(std::llround(demand / resolution)));
    std::function<void(int, int)> fill = [&](int p, int remaining) {
      if (p == count - 1) {
        mu[offset + p] = demand * remaining / steps;
        enumerate(w + 1);
        return;
      }
      for (int k = 0; k <= remaining; ++k) {
        mu[offset + p] = demand * k / steps;
        fill(p + 1, remaining - k);
      }
    };
    fill(0, steps);
  };
  enumerate(0);

  sol.converged = true;
  sol.duality_gap = fw_gap(spec, net, inc, sol.mu_star);
  return sol;
}

double wardrop_residual(const LatencySpec& spec, const Network& net,
                        const Eigen::MatrixXd& inc, const Eigen::VectorXd& mu,
                        double activity_tol) {
  const Eigen::VectorXd ell = mean_path_latency(spec, inc, mu);
  double residual = 0.0;
  const auto slices = net.od_slices();
  for (size_t w = 0; w < slices.size(); ++w) {
    const auto [offset, count] = slices[w];
    const double cheapest = ell.segment(offset, count).minCoeff();
    for (int p = offset; p < offset + count; ++p)
      if (mu[p] > activity_tol) residual = std::max(residual, ell[p] - cheapest);
  }
  return residual;
}

}  // namespace dmd
