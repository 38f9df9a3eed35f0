#pragma once

#include <Eigen/Dense>

#include "dmd/network.hpp"

namespace dmd {

enum class MapKind { Entropic, Euclidean };

// Mirror map over the product of demand-scaled simplices. The strong
// convexity constant is declared w.r.t. the Euclidean norm: 1/max_w m_w for
// the entropic map (1-strong convexity in l1 on the unit simplex implies it
// in l2, and demand scaling divides it), 1 for the Euclidean map.
struct MirrorMap {
  MapKind kind = MapKind::Entropic;
  double strong_convexity = 1.0;  // sigma_Psi
};

MirrorMap make_mirror_map(MapKind kind, const Network& net);

double mirror_potential(const MirrorMap& map, const Network& net, const Eigen::VectorXd& mu);

Eigen::VectorXd mirror_gradient(const MirrorMap& map, const Network& net,
                                const Eigen::VectorXd& mu);

// Bregman divergence with the gradient anchored at `at` and the comparator as
// the second argument: Psi(to) - Psi(at) - <gradPsi(at), to - at>. The
// divergence to the equilibrium D^{mu*}_{mu^t} is bregman(map, net, mu_t,
// mu_star). For the entropic map `at` must be strictly positive.
double bregman(const MirrorMap& map, const Network& net, const Eigen::VectorXd& at,
               const Eigen::VectorXd& to);

struct MirrorState {
  int round = 0;            // 0-based
  Eigen::VectorXd mu;       // primal flow
  Eigen::VectorXd nu;       // dual point, gradPsi(mu^1) - eta * sum of bundles
  double eta = 0.0;
};

MirrorState make_initial_state(const MirrorMap& map, const Network& net,
                               const Eigen::VectorXd& mu1, double eta);

// One delayed-mirror-descent update with the summed bundle lbar:
//   mu^{t+1} = argmin_mu <mu, eta lbar> + D_Psi(mu, mu^t)
// Entropic: demand-scaled multiplicative weights in log space. Euclidean:
// per-OD projection of mu - eta lbar onto the scaled simplex. The dual point
// advances as nu - eta lbar either way. A zero bundle (empty D_t) is a no-op.
MirrorState mirror_step(const MirrorMap& map, const Network& net, const MirrorState& state,
                        const Eigen::VectorXd& bundle_sum);

// Prescribed rate: sqrt(D1 / ((sigma^2/sigma_psi) d^3 (1+ln(1/delta)) T)).
double default_learning_rate(double d1, double sigma, double sigma_psi, int d, int T,
                             double delta);

// Euclidean projection onto {x >= 0, sum x = total}, sort-based.
Eigen::VectorXd project_simplex(const Eigen::VectorXd& v, double total);

}  // namespace dmd
