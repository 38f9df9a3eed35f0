#include "dmd/solver.hpp"

#include "dmd/errors.hpp"

namespace dmd {

Trajectory run_dmd(const Network& net, const Eigen::MatrixXd& incidence,
                   const LatencySpec& spec, const NoiseSpec& noise,
                   const DeliveryCalendar& calendar, const MirrorMap& map, double eta,
                   const Eigen::VectorXd& mu_star, double phi_star,
                   const Eigen::VectorXd& mu1, Rng& rng) {
  const int T = calendar.horizon;
  const int num_paths = net.num_paths();
  if (!validate_flow(net, mu1).empty())
    throw ValidationError("initial flow is infeasible");

  Trajectory traj;
  traj.eta = eta;
  traj.phi_star = phi_star;
  traj.mu_star = mu_star;
  traj.rounds.reserve(T);

  std::vector<Eigen::VectorXd> samples(T);  // ell^k, buffered until delivery
  MirrorState state = make_initial_state(map, net, mu1, eta);
  Eigen::VectorXd mu_sum = Eigen::VectorXd::Zero(num_paths);

  for (int t = 0; t < T; ++t) {
    RoundRecord rec;
    rec.mu = state.mu;
    rec.gap = beckmann_potential(spec, incidence, state.mu) - phi_star;
    rec.bregman_to_star = bregman(map, net, state.mu, mu_star);
    mu_sum += state.mu;

    LatencySample sample = sample_latency(spec, noise, incidence, state.mu, rng, t);
    samples[t] = sample.ell;
    rec.ell = sample.ell;
    rec.z = sample.z;

    rec.delivered = calendar.deliveries[t];
    rec.bundle = Eigen::VectorXd::Zero(num_paths);
    for (int k : rec.delivered) rec.bundle += samples[k];

    state = mirror_step(map, net, state, rec.bundle);
    traj.rounds.push_back(std::move(rec));
  }

  traj.mu_final = state.mu;
  traj.gap_final = beckmann_potential(spec, incidence, state.mu) - phi_star;
  traj.bregman_final = bregman(map, net, state.mu, mu_star);
  traj.mu_avg = mu_sum / T;
  double gap_sum = 0.0;
  for (const auto& rec : traj.rounds) gap_sum += rec.gap;
  traj.avg_gap = gap_sum / T;
  traj.gap_avg_flow = beckmann_potential(spec, incidence, traj.mu_avg) - phi_star;
  return traj;
}

}  // namespace dmd
