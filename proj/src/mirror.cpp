#include "dmd/mirror.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "dmd/errors.hpp"

namespace dmd {

namespace {
constexpr double kFloor = 1e-300;  // probability floor before logs
}

MirrorMap make_mirror_map(MapKind kind, const Network& net) {
  MirrorMap map;
  map.kind = kind;
  if (kind == MapKind::Entropic) {
    double max_demand = 0.0;
    for (const auto& od : net.od_pairs) max_demand = std::max(max_demand, od.demand);
    map.strong_convexity = 1.0 / max_demand;
  } else {
    map.strong_convexity = 1.0;
  }
  return map;
}

double mirror_potential(const MirrorMap& map, const Network& net, const Eigen::VectorXd& mu) {
  if (map.kind == MapKind::Euclidean) return 0.5 * mu.squaredNorm();
  double psi = 0.0;
  const auto slices = net.od_slices();
  for (size_t w = 0; w < slices.size(); ++w) {
    const auto [offset, count] = slices[w];
    const double m_w = net.od_pairs[w].demand;
    for (int p = offset; p < offset + count; ++p) {
      if (mu[p] > 0.0) psi += mu[p] * std::log(mu[p] / m_w);
    }
  }
  return psi;
}

Eigen::VectorXd mirror_gradient(const MirrorMap& map, const Network& net,
                                const Eigen::VectorXd& mu) {
  if (map.kind == MapKind::Euclidean) return mu;
  Eigen::VectorXd g(mu.size());
  const auto slices = net.od_slices();
  for (size_t w = 0; w < slices.size(); ++w) {
    const auto [offset, count] = slices[w];
    const double m_w = net.od_pairs[w].demand;
    for (int p = offset; p < offset + count; ++p) {
      if (mu[p] <= 0.0)
        throw ValidationError("entropic gradient undefined at zero flow (path " +
                              std::to_string(p) + ")");
      g[p] = 1.0 + std::log(mu[p] / m_w);
    }
  }
  return g;
}

double bregman(const MirrorMap& map, const Network& net, const Eigen::VectorXd& at,
               const Eigen::VectorXd& to) {
  if (map.kind == MapKind::Euclidean) return 0.5 * (at - to).squaredNorm();
  // Entropic closed form: sum_p to_p ln(to_p / at_p) + (sum at - sum to);
  // the linear correction vanishes for equal per-OD masses but is kept so the
  // divergence is exact for slightly drifted iterates.
  double div = 0.0;
  for (int p = 0; p < at.size(); ++p) {
    if (at[p] <= 0.0)
      throw ValidationError("entropic Bregman divergence needs interior first argument");
    if (to[p] > 0.0) div += to[p] * std::log(to[p] / at[p]);
    div += at[p] - to[p];
  }
  (void)net;
  return div;
}

MirrorState make_initial_state(const MirrorMap& map, const Network& net,
                               const Eigen::VectorXd& mu1, double eta) {
  MirrorState state;
  state.round = 0;
  state.mu = mu1;
  state.nu = mirror_gradient(map, net, mu1);
  state.eta = eta;
  return state;
}

Eigen::VectorXd project_simplex(const Eigen::VectorXd& v, double total) {
  const int n = static_cast<int>(v.size());
  std::vector<double> u(v.data(), v.data() + n);
  std::sort(u.begin(), u.end(), std::greater<double>());
  double running = 0.0;
  double theta = 0.0;
  int rho = 0;
  for (int i = 0; i < n; ++i) {
    running += u[i];
    const double candidate = (running - total) / (i + 1);
    if (u[i] - candidate > 0.0) {
      rho = i + 1;
      theta = candidate;
    }
  }
  (void)rho;
  return (v.array() - theta).cwiseMax(0.0);
}

MirrorState mirror_step(const MirrorMap& map, const Network& net, const MirrorState& state,
                        const Eigen::VectorXd& bundle_sum) {
  if (bundle_sum.size() != state.mu.size())
    throw ValidationError("bundle dimension mismatch");
  if (!bundle_sum.allFinite()) throw ValidationError("non-finite bundle entries");

  MirrorState next;
  next.round = state.round + 1;
  next.eta = state.eta;
  next.nu = state.nu - state.eta * bundle_sum;
  next.mu.resize(state.mu.size());

  if (bundle_sum.isZero(0.0)) {  // empty bundle: exact no-op round
    next.mu = state.mu;
    return next;
  }

  const auto slices = net.od_slices();
  if (map.kind == MapKind::Entropic) {
    // log-space multiplicative weights with per-OD max subtraction
    for (size_t w = 0; w < slices.size(); ++w) {
      const auto [offset, count] = slices[w];
      const double m_w = net.od_pairs[w].demand;
      Eigen::VectorXd logits(count);
      for (int i = 0; i < count; ++i) {
        const double mu_p = std::max(state.mu[offset + i], kFloor);
        logits[i] = std::log(mu_p) - state.eta * bundle_sum[offset + i];
      }
      const double shift = logits.maxCoeff();
      double denom = 0.0;
      for (int i = 0; i < count; ++i) denom += std::exp(logits[i] - shift);
      for (int i = 0; i < count; ++i)
        next.mu[offset + i] = m_w * std::exp(logits[i] - shift) / denom;
    }
  } else {
    for (size_t w = 0; w < slices.size(); ++w) {
      const auto [offset, count] = slices[w];
      const Eigen::VectorXd target =
          state.mu.segment(offset, count) - state.eta * bundle_sum.segment(offset, count);
      next.mu.segment(offset, count) = project_simplex(target, net.od_pairs[w].demand);
    }
  }

  // Keep each OD slice exactly on its simplex when drift exceeds tolerance.
  const auto violations = validate_flow(net, next.mu);
  if (!violations.empty()) renormalize(net, next.mu);
  return next;
}

double default_learning_rate(double d1, double sigma, double sigma_psi, int d, int T,
                             double delta) {
  if (d1 <= 0.0 || sigma <= 0.0 || sigma_psi <= 0.0 || d < 1 || T < 1)
    throw ConfigError("default_learning_rate needs positive inputs");
  if (delta <= 0.0 || delta >= 1.0) throw ConfigError("delta must lie in (0,1)");
  const double d3 = static_cast<double>(d) * d * d;
  const double denom =
      (sigma * sigma / sigma_psi) * d3 * (1.0 + std::log(1.0 / delta)) * T;
  return std::sqrt(d1 / denom);
}

}  // namespace dmd
