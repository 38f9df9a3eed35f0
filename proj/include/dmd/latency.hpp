#pragma once

#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "dmd/network.hpp"
#include "dmd/rng.hpp"

namespace dmd {

// Mean edge latency a + b * q^p. Slope b > 0 and exponent p >= 1 keep the
// latency strictly increasing in flow for q > 0.
struct EdgeLatency {
  double a = 0.0;  // free-flow time, >= 0
  double b = 1.0;  // > 0
  double p = 1.0;  // >= 1
};

struct LatencySpec {
  std::vector<EdgeLatency> edges;

  void validate(const Network& net) const;
  Eigen::VectorXd mean_edge_latency(const Eigen::VectorXd& q) const;
};

enum class NoiseModel { BoundedUniform, TruncatedGaussian };

// Mean-zero additive edge noise, lifted to paths through the incidence matrix
// so that paths sharing edges get correlated noise. BoundedUniform draws
// U(-c, c); TruncatedGaussian draws N(0, c^2) truncated to [-2c, 2c].
struct NoiseSpec {
  NoiseModel model = NoiseModel::BoundedUniform;
  std::vector<double> scale;  // per edge, >= 0
  double sigma = 0.0;         // declared subgaussian parameter of ||z_path||
  double L = 0.0;             // declared bound on ||E ell(mu)|| over the simplex
  double kappa = 0.0;         // L / sigma

  double support_radius(int edge) const;  // per-edge noise support half-width
};

// Fills sigma/L/kappa defaults from the topology: sigma is the exact support
// radius of the lifted noise norm for bounded noise (2 * lifted scale *
// sqrt(|P|) for truncated Gaussian), L a worst-case mean-latency bound with
// every edge at full demand. Explicit values in the config win.
NoiseSpec make_noise_spec(NoiseModel model, std::vector<double> scale, const Network& net,
                          const LatencySpec& spec, const Eigen::MatrixXd& incidence,
                          std::optional<double> sigma = std::nullopt,
                          std::optional<double> L = std::nullopt);

// Lambda^T lbar(Lambda mu); equals the gradient of beckmann_potential.
Eigen::VectorXd mean_path_latency(const LatencySpec& spec, const Eigen::MatrixXd& incidence,
                                  const Eigen::VectorXd& mu);

// Phi(mu) = sum_e [a_e q_e + b_e q_e^{p_e+1}/(p_e+1)] at q = Lambda mu.
double beckmann_potential(const LatencySpec& spec, const Eigen::MatrixXd& incidence,
                          const Eigen::VectorXd& mu);

struct LatencySample {
  Eigen::VectorXd ell;  // realized path latencies
  Eigen::VectorXd z;    // ell - mean_path_latency(mu); analysis-only
  int origin_round = 0;
};

// Draws edge noise, clips it at -lbar_e/2 so edge latencies stay positive,
// and lifts to paths. Throws ConfigError when the clipping could bias the
// mean by more than 1e-6 * L.
LatencySample sample_latency(const LatencySpec& spec, const NoiseSpec& noise,
                             const Eigen::MatrixXd& incidence, const Eigen::VectorXd& mu,
                             Rng& rng, int origin_round = 0);

// Raw lifted noise draw, no positivity clipping. The noise law does not
// depend on mu, so concentration checks sample it directly.
Eigen::VectorXd draw_path_noise(const NoiseSpec& noise, const Eigen::MatrixXd& incidence,
                                Rng& rng);

struct Assumption2Report {
  double sigma_hat = 0.0;      // sqrt(mean ||z||^2) over the draws
  double mgf_estimate = 0.0;   // empirical E[exp(||z||^2 / sigma^2)]
  double L_hat = 0.0;          // max ||E ell(mu)|| over sampled feasible mu
  bool pass = false;           // mgf <= e * 1.05 and L_hat <= L
};

Assumption2Report check_assumption2(const NoiseSpec& noise, const LatencySpec& spec,
                                    const Network& net, const Eigen::MatrixXd& incidence,
                                    int trials, Rng& rng);

}  // namespace dmd
