#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dmd/delay.hpp"
#include "dmd/latency.hpp"
#include "dmd/mirror.hpp"
#include "dmd/network.hpp"

namespace dmd {

enum class EtaMode { DefaultRule, Explicit, Blind };

// Full experiment description. Everything except the network and the horizon
// has a default; the serialized form is canonical (fixed key order, 17
// significant digits) so parse -> serialize -> parse is a fixpoint.
struct ExperimentConfig {
  int version = 1;

  Network network;
  LatencySpec latency;

  NoiseModel noise_model = NoiseModel::BoundedUniform;
  std::vector<double> noise_scale;          // per edge; filled with default_scale if empty
  double default_noise_scale = 0.0;
  std::optional<double> sigma_override;
  std::optional<double> L_override;

  AttackSpec attack;

  MapKind mirror_map = MapKind::Entropic;
  EtaMode eta_mode = EtaMode::DefaultRule;
  double eta_value = 0.0;  // Explicit mode only

  int horizon = 0;     // T
  int trials = 100;    // N
  double delta = 0.05;
  std::uint64_t seed = 1;
  std::string out_dir = "out";

  std::optional<std::vector<double>> mu1;  // initial flow override

  double fw_tol = 1e-8;
  int fw_max_iters = 100000;
};

// Parse/serialize against the versioned schema. Schema errors carry a JSON
// pointer to the offending field ("/network", "/attack/d", ...).
ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::string& path);
std::string serialize_config(const ExperimentConfig& cfg);

// Apply repeatable KEY=VALUE overrides with dotted keys, e.g.
// "attack.strategy=constant" or "attack.d=3", on the JSON representation.
std::string apply_overrides(const std::string& json_text,
                            const std::vector<std::string>& overrides);

// FNV-1a 64 over the canonical serialization.
std::uint64_t config_hash(const ExperimentConfig& cfg);
std::uint64_t fnv1a64(const std::string& bytes);

}  // namespace dmd
