#include "dmd/latency.hpp"

#include <algorithm>
#include <cmath>

#include "dmd/errors.hpp"

namespace dmd {

void LatencySpec::validate(const Network& net) const {
  if (static_cast<int>(edges.size()) != net.num_edges())
    throw ConfigError("latency spec covers " + std::to_string(edges.size()) +
                      " edges, network has " + std::to_string(net.num_edges()));
  for (size_t e = 0; e < edges.size(); ++e) {
    const auto& el = edges[e];
    if (el.a < 0.0 || el.b <= 0.0 || el.p < 1.0)
      throw ConfigError("latency coefficients for edge '" + net.edges[e].id +
                        "' violate a >= 0, b > 0, p >= 1");
  }
}

Eigen::VectorXd LatencySpec::mean_edge_latency(const Eigen::VectorXd& q) const {
  Eigen::VectorXd l(q.size());
  for (int e = 0; e < q.size(); ++e) {
    const auto& el = edges[e];
    l[e] = el.a + el.b * std::pow(std::max(q[e], 0.0), el.p);
  }
  return l;
}

double NoiseSpec::support_radius(int edge) const {
  const double c = scale[edge];
  return model == NoiseModel::BoundedUniform ? c : 2.0 * c;
}

NoiseSpec make_noise_spec(NoiseModel model, std::vector<double> scale, const Network& net,
                          const LatencySpec& spec, const Eigen::MatrixXd& incidence,
                          std::optional<double> sigma, std::optional<double> L) {
  if (static_cast<int>(scale.size()) != net.num_edges())
    throw ConfigError("noise scale covers " + std::to_string(scale.size()) +
                      " edges, network has " + std::to_string(net.num_edges()));
  for (double c : scale)
    if (c < 0.0) throw ConfigError("negative noise scale");

  NoiseSpec noise;
  noise.model = model;
  noise.scale = std::move(scale);

  const int num_paths = static_cast<int>(incidence.cols());
  // Per-path lifted radius/scale: sum of the edge values along the path.
  Eigen::VectorXd edge_scale(net.num_edges());
  for (int e = 0; e < net.num_edges(); ++e) edge_scale[e] = noise.scale[e];
  const Eigen::VectorXd lifted = incidence.transpose() * edge_scale;

  if (sigma) {
    noise.sigma = *sigma;
  } else if (model == NoiseModel::BoundedUniform) {
    // ||z|| <= sqrt(sum_p (sum_{e in p} c_e)^2) always, so the MGF bound
    // E[exp(||z||^2/sigma^2)] <= e holds with zero slack to spare.
    noise.sigma = lifted.norm();
  } else {
    noise.sigma = 2.0 * lifted.maxCoeff() * std::sqrt(static_cast<double>(num_paths));
  }

  if (L) {
    noise.L = *L;
  } else {
    // Worst case: every edge carries the full demand of every OD pair that
    // can route over it.
    Eigen::VectorXd q_max = Eigen::VectorXd::Zero(net.num_edges());
    for (const auto& od : net.od_pairs) {
      Eigen::VectorXd uses = Eigen::VectorXd::Zero(net.num_edges());
      for (const auto& path : od.paths)
        for (int e : path) uses[e] = 1.0;
      q_max += od.demand * uses;
    }
    const Eigen::VectorXd l_max = spec.mean_edge_latency(q_max);
    noise.L = (incidence.transpose() * l_max).norm();
  }

  if (noise.sigma > 0.0) {
    noise.kappa = noise.L / noise.sigma;
  } else {
    noise.kappa = 0.0;
  }
  return noise;
}

Eigen::VectorXd mean_path_latency(const LatencySpec& spec, const Eigen::MatrixXd& incidence,
                                  const Eigen::VectorXd& mu) {
  const Eigen::VectorXd q = edge_flow(incidence, mu);
  return incidence.transpose() * spec.mean_edge_latency(q);
}

double beckmann_potential(const LatencySpec& spec, const Eigen::MatrixXd& incidence,
                          const Eigen::VectorXd& mu) {
  const Eigen::VectorXd q = edge_flow(incidence, mu);
  double phi = 0.0;
  for (int e = 0; e < q.size(); ++e) {
    const auto& el = spec.edges[e];
    const double qe = std::max(q[e], 0.0);
    phi += el.a * qe + el.b * std::pow(qe, el.p + 1.0) / (el.p + 1.0);
  }
  return phi;
}

namespace {

Eigen::VectorXd draw_edge_noise(const NoiseSpec& noise, Rng& rng) {
  const int ne = static_cast<int>(noise.scale.size());
  Eigen::VectorXd z(ne);
  for (int e = 0; e < ne; ++e) {
    const double c = noise.scale[e];
    if (c == 0.0) {
      z[e] = 0.0;
    } else if (noise.model == NoiseModel::BoundedUniform) {
      z[e] = rng.uniform(-c, c);
    } else {
      z[e] = c * rng.truncated_normal(2.0);
    }
  }
  return z;
}

// Upper bound on E[(-m - z)^+] for a single edge's noise, the mean shift
// introduced by clipping at -m.
double clip_bias_bound(const NoiseSpec& noise, int edge, double m) {
  const double r = noise.support_radius(edge);
  if (m >= r || r == 0.0) return 0.0;
  if (noise.model == NoiseModel::BoundedUniform) {
    const double c = noise.scale[edge];
    const double d = c - m;
    return d * d / (4.0 * c);  // exact for U(-c, c)
  }
  const double c = noise.scale[edge];
  const double tail = 0.5 * std::erfc(m / (c * 1.4142135623730951)) / 0.9544997361036416;
  return (r - m) * std::min(1.0, tail);
}

}  // namespace

LatencySample sample_latency(const LatencySpec& spec, const NoiseSpec& noise,
                             const Eigen::MatrixXd& incidence, const Eigen::VectorXd& mu,
                             Rng& rng, int origin_round) {
  const Eigen::VectorXd q = edge_flow(incidence, mu);
  const Eigen::VectorXd l_mean = spec.mean_edge_latency(q);
  Eigen::VectorXd z_edge = draw_edge_noise(noise, rng);

  // Positivity: clip edge noise at -lbar_e/2 so latencies stay above lbar/2.
  bool clipping_possible = false;
  for (int e = 0; e < q.size(); ++e) {
    if (noise.support_radius(e) > 0.5 * l_mean[e]) {
      clipping_possible = true;
      break;
    }
  }
  if (clipping_possible) {
    Eigen::VectorXd bias(q.size());
    for (int e = 0; e < q.size(); ++e) bias[e] = clip_bias_bound(noise, e, 0.5 * l_mean[e]);
    const double lifted_bias = (incidence.transpose() * bias).norm();
    if (lifted_bias > 1e-6 * noise.L)
      throw ConfigError(
          "noise scale too large: positivity truncation would bias the mean latency by " +
          std::to_string(lifted_bias) + " (> 1e-6 * L)");
    for (int e = 0; e < q.size(); ++e) z_edge[e] = std::max(z_edge[e], -0.5 * l_mean[e]);
  }

  LatencySample sample;
  sample.origin_round = origin_round;
  sample.ell = incidence.transpose() * (l_mean + z_edge);
  sample.z = incidence.transpose() * z_edge;
  return sample;
}

Eigen::VectorXd draw_path_noise(const NoiseSpec& noise, const Eigen::MatrixXd& incidence,
                                Rng& rng) {
  return incidence.transpose() * draw_edge_noise(noise, rng);
}

Assumption2Report check_assumption2(const NoiseSpec& noise, const LatencySpec& spec,
                                    const Network& net, const Eigen::MatrixXd& incidence,
                                    int trials, Rng& rng) {
  if (trials < 10000) throw ConfigError("check_assumption2 needs at least 10^4 trials");
  const double s2 = noise.sigma * noise.sigma;
  double mgf_sum = 0.0;
  double norm2_sum = 0.0;
  double l_hat = 0.0;
  for (int i = 0; i < trials; ++i) {
    const Eigen::VectorXd z = draw_path_noise(noise, incidence, rng);
    const double n2 = z.squaredNorm();
    norm2_sum += n2;
    mgf_sum += s2 > 0.0 ? std::exp(n2 / s2) : 1.0;
    const Eigen::VectorXd mu = random_flow(net, rng);
    l_hat = std::max(l_hat, mean_path_latency(spec, incidence, mu).norm());
  }
  Assumption2Report report;
  report.sigma_hat = std::sqrt(norm2_sum / trials);
  report.mgf_estimate = s2 > 0.0 ? mgf_sum / trials : 1.0;
  report.L_hat = l_hat;
  report.pass = report.mgf_estimate <= std::exp(1.0) * 1.05 && l_hat <= noise.L;
  return report;
}

}  // namespace dmd
