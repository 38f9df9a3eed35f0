#pragma once

#include <Eigen/Dense>

#include "dmd/latency.hpp"
#include "dmd/network.hpp"

namespace dmd {

struct EquilibriumSolution {
  Eigen::VectorXd mu_star;
  double phi_star = 0.0;
  double duality_gap = 0.0;
  int iterations = 0;
  bool converged = false;
};

// Frank-Wolfe minimization of the Beckmann potential over the product of OD
// simplices. The linear minimization oracle is the all-or-nothing assignment
// to the cheapest path per OD; the duality gap <gradPhi(mu), mu - s> is the
// termination certificate. Steps move mass pairwise from the costliest active
// path to the cheapest one with exact line search (bisection on the
// directional derivative), which converges fast enough to reach tight gap
// tolerances on desk networks.
EquilibriumSolution solve_mwe_frank_wolfe(const LatencySpec& spec, const Network& net,
                                          const Eigen::MatrixXd& incidence,
                                          double tol = 1e-8, int max_iters = 100000);

// Exhaustive grid search over the simplex product, the independent oracle.
// Only for desk instances with at most 4 paths in total.
EquilibriumSolution solve_mwe_grid(const LatencySpec& spec, const Network& net,
                                   const Eigen::MatrixXd& incidence, double resolution);

// max over OD pairs of max_{p active} (E ell_p - min_p' E ell_p'). Zero at an
// exact Mean Wardrop Equilibrium.
double wardrop_residual(const LatencySpec& spec, const Network& net,
                        const Eigen::MatrixXd& incidence, const Eigen::VectorXd& mu,
                        double activity_tol = 1e-6);

}  // namespace dmd
