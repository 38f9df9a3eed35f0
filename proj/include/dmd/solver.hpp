#pragma once

#include <vector>

#include <Eigen/Dense>

#include "dmd/delay.hpp"
#include "dmd/equilibrium.hpp"
#include "dmd/latency.hpp"
#include "dmd/mirror.hpp"
#include "dmd/network.hpp"

namespace dmd {

struct RoundRecord {
  Eigen::VectorXd mu;        // mu^t
  Eigen::VectorXd ell;       // latency sampled at mu^t
  Eigen::VectorXd z;         // ell - E[ell(mu^t)], analysis-only
  Eigen::VectorXd bundle;    // lbar^t = sum of delivered samples
  std::vector<int> delivered;  // D_t origins (0-based); verifier-only
  double gap = 0.0;            // Phi(mu^t) - Phi*
  double bregman_to_star = 0.0;
};

struct Trajectory {
  double eta = 0.0;
  double phi_star = 0.0;
  Eigen::VectorXd mu_star;
  std::vector<RoundRecord> rounds;  // one per t = 1..T
  Eigen::VectorXd mu_final;         // mu^{T+1}
  double gap_final = 0.0;           // Phi(mu^{T+1}) - Phi*
  double bregman_final = 0.0;       // D^{mu*}_{mu^{T+1}}
  Eigen::VectorXd mu_avg;           // time-average (1/T) sum mu^t
  double avg_gap = 0.0;             // (1/T) sum_t (Phi(mu^t) - Phi*)
  double gap_avg_flow = 0.0;        // Phi(mu_avg) - Phi*
};

// Algorithm loop: sample latency at mu^t, deliver bundles per the calendar,
// mirror-step on the summed bundle. The solver only ever sees the sum; the
// per-origin records exist for the offline verifier.
Trajectory run_dmd(const Network& net, const Eigen::MatrixXd& incidence,
                   const LatencySpec& spec, const NoiseSpec& noise,
                   const DeliveryCalendar& calendar, const MirrorMap& map, double eta,
                   const Eigen::VectorXd& mu_star, double phi_star,
                   const Eigen::VectorXd& mu1, Rng& rng);

}  // namespace dmd
