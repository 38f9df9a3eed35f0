#include "dmd/config.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "dmd/errors.hpp"

namespace dmd {

using json = nlohmann::ordered_json;

namespace {

[[noreturn]] void fail(const std::string& pointer, const std::string& message) {
  throw ConfigError(pointer + ": " + message);
}

const json& require(const json& obj, const std::string& key, const std::string& pointer) {
  if (!obj.contains(key)) fail(pointer + "/" + key, "missing required field");
  return obj.at(key);
}

double as_number(const json& value, const std::string& pointer) {
  if (!value.is_number()) fail(pointer, "expected a number");
  return value.get<double>();
}

int as_int(const json& value, const std::string& pointer) {
  if (!value.is_number_integer()) fail(pointer, "expected an integer");
  return value.get<int>();
}

std::string as_string(const json& value, const std::string& pointer) {
  if (!value.is_string()) fail(pointer, "expected a string");
  return value.get<std::string>();
}

Network parse_network(const json& j) {
  Network net;
  if (!j.is_object()) fail("/network", "expected an object");
  for (const auto& node : require(j, "nodes", "/network"))
    net.nodes.push_back(as_string(node, "/network/nodes"));
  int e = 0;
  for (const auto& edge : require(j, "edges", "/network")) {
    const std::string ptr = "/network/edges/" + std::to_string(e++);
    Network::Edge parsed;
    parsed.id = as_string(require(edge, "id", ptr), ptr + "/id");
    parsed.from = as_string(require(edge, "from", ptr), ptr + "/from");
    parsed.to = as_string(require(edge, "to", ptr), ptr + "/to");
    net.edges.push_back(std::move(parsed));
  }
  int w = 0;
  for (const auto& od : require(j, "od_pairs", "/network")) {
    const std::string ptr = "/network/od_pairs/" + std::to_string(w++);
    Network::OdPair parsed;
    parsed.origin = as_string(require(od, "origin", ptr), ptr + "/origin");
    parsed.destination = as_string(require(od, "destination", ptr), ptr + "/destination");
    parsed.demand = as_number(require(od, "demand", ptr), ptr + "/demand");
    for (const auto& path : require(od, "paths", ptr)) {
      std::vector<int> edges;
      for (const auto& id : path) {
        const int idx = net.edge_index(as_string(id, ptr + "/paths"));
        if (idx < 0) fail(ptr + "/paths", "unknown edge id '" + id.get<std::string>() + "'");
        edges.push_back(idx);
      }
      parsed.paths.push_back(std::move(edges));
    }
    net.od_pairs.push_back(std::move(parsed));
  }
  try {
    net.validate();
  } catch (const ValidationError& err) {
    fail("/network", err.what());
  }
  return net;
}

}  // namespace

ExperimentConfig parse_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& err) {
    throw ConfigError(std::string("/: invalid JSON: ") + err.what());
  }
  if (!j.is_object()) fail("/", "expected a JSON object");

  ExperimentConfig cfg;
  if (j.contains("version")) cfg.version = as_int(j["version"], "/version");
  if (cfg.version != 1) fail("/version", "unsupported schema version");

  if (!j.contains("network")) fail("/network", "missing required field");
  cfg.network = parse_network(j["network"]);
  const int num_edges = cfg.network.num_edges();

  cfg.latency.edges.assign(num_edges, EdgeLatency{});
  if (j.contains("latency")) {
    const json& lat = j["latency"];
    if (!lat.is_object()) fail("/latency", "expected an object keyed by edge id");
    for (const auto& [id, coeffs] : lat.items()) {
      const int e = cfg.network.edge_index(id);
      if (e < 0) fail("/latency/" + id, "unknown edge id");
      if (coeffs.contains("a")) cfg.latency.edges[e].a = as_number(coeffs["a"], "/latency/" + id + "/a");
      if (coeffs.contains("b")) cfg.latency.edges[e].b = as_number(coeffs["b"], "/latency/" + id + "/b");
      if (coeffs.contains("p")) cfg.latency.edges[e].p = as_number(coeffs["p"], "/latency/" + id + "/p");
    }
  }
  try {
    cfg.latency.validate(cfg.network);
  } catch (const ConfigError& err) {
    fail("/latency", err.what());
  }

  cfg.noise_scale.assign(num_edges, 0.0);
  if (j.contains("noise")) {
    const json& noise = j["noise"];
    if (noise.contains("model")) {
      const std::string model = as_string(noise["model"], "/noise/model");
      if (model == "bounded-uniform") {
        cfg.noise_model = NoiseModel::BoundedUniform;
      } else if (model == "truncated-gaussian") {
        cfg.noise_model = NoiseModel::TruncatedGaussian;
      } else {
        fail("/noise/model", "expected 'bounded-uniform' or 'truncated-gaussian'");
      }
    }
    if (noise.contains("scale")) {
      const json& scale = noise["scale"];
      if (scale.is_number()) {
        cfg.default_noise_scale = scale.get<double>();
        cfg.noise_scale.assign(num_edges, cfg.default_noise_scale);
      } else if (scale.is_object()) {
        for (const auto& [id, value] : scale.items()) {
          const int e = cfg.network.edge_index(id);
          if (e < 0) fail("/noise/scale/" + id, "unknown edge id");
          cfg.noise_scale[e] = as_number(value, "/noise/scale/" + id);
        }
      } else {
        fail("/noise/scale", "expected a number or an object keyed by edge id");
      }
    }
    if (noise.contains("sigma") && !noise["sigma"].is_null())
      cfg.sigma_override = as_number(noise["sigma"], "/noise/sigma");
    if (noise.contains("L") && !noise["L"].is_null())
      cfg.L_override = as_number(noise["L"], "/noise/L");
  }

  if (j.contains("attack")) {
    const json& attack = j["attack"];
    const std::string strategy =
        attack.contains("strategy") ? as_string(attack["strategy"], "/attack/strategy")
                                    : "none";
    if (strategy == "none") {
      cfg.attack.kind = AttackKind::None;
    } else if (strategy == "constant") {
      cfg.attack.kind = AttackKind::Constant;
    } else if (strategy == "uniform-random") {
      cfg.attack.kind = AttackKind::UniformRandom;
    } else if (strategy == "burst") {
      cfg.attack.kind = AttackKind::Burst;
    } else {
      fail("/attack/strategy", "unknown strategy '" + strategy + "'");
    }
    if (attack.contains("d")) cfg.attack.budget = as_int(attack["d"], "/attack/d");
    if (attack.contains("start")) cfg.attack.start = as_int(attack["start"], "/attack/start") - 1;
    if (attack.contains("len")) cfg.attack.length = as_int(attack["len"], "/attack/len");
  }

  if (j.contains("mirror_map")) {
    const std::string map = as_string(j["mirror_map"], "/mirror_map");
    if (map == "entropic") {
      cfg.mirror_map = MapKind::Entropic;
    } else if (map == "euclidean") {
      cfg.mirror_map = MapKind::Euclidean;
    } else {
      fail("/mirror_map", "expected 'entropic' or 'euclidean'");
    }
  }

  if (j.contains("eta")) {
    const json& eta = j["eta"];
    const std::string mode =
        eta.contains("mode") ? as_string(eta["mode"], "/eta/mode") : "default-rule";
    if (mode == "default-rule") {
      cfg.eta_mode = EtaMode::DefaultRule;
    } else if (mode == "explicit") {
      cfg.eta_mode = EtaMode::Explicit;
      cfg.eta_value = as_number(require(eta, "value", "/eta"), "/eta/value");
      if (cfg.eta_value <= 0.0) fail("/eta/value", "explicit learning rate must be positive");
    } else if (mode == "blind") {
      cfg.eta_mode = EtaMode::Blind;
    } else {
      fail("/eta/mode", "expected 'default-rule', 'explicit' or 'blind'");
    }
  }

  if (!j.contains("T")) fail("/T", "missing required field");
  cfg.horizon = as_int(j["T"], "/T");
  if (cfg.horizon < 1) fail("/T", "horizon must be >= 1");

  if (j.contains("trials")) cfg.trials = as_int(j["trials"], "/trials");
  if (cfg.trials < 1) fail("/trials", "trial count must be >= 1");
  if (j.contains("delta")) cfg.delta = as_number(j["delta"], "/delta");
  if (cfg.delta <= 0.0 || cfg.delta >= 1.0) fail("/delta", "delta must lie in (0,1)");
  if (j.contains("seed")) {
    if (!j["seed"].is_number_unsigned() && !j["seed"].is_number_integer())
      fail("/seed", "expected an unsigned integer");
    cfg.seed = j["seed"].get<std::uint64_t>();
  }
  if (j.contains("out_dir")) cfg.out_dir = as_string(j["out_dir"], "/out_dir");

  if (j.contains("mu1") && !j["mu1"].is_null()) {
    std::vector<double> mu1;
    for (const auto& v : j["mu1"]) mu1.push_back(as_number(v, "/mu1"));
    if (static_cast<int>(mu1.size()) != cfg.network.num_paths())
      fail("/mu1", "expected " + std::to_string(cfg.network.num_paths()) + " entries");
    cfg.mu1 = std::move(mu1);
  }

  if (j.contains("fw_tol")) cfg.fw_tol = as_number(j["fw_tol"], "/fw_tol");
  if (j.contains("fw_max_iters")) cfg.fw_max_iters = as_int(j["fw_max_iters"], "/fw_max_iters");
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("/: cannot open config file '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str());
}

std::string serialize_config(const ExperimentConfig& cfg) {
  json j;
  j["version"] = cfg.version;

  json net;
  net["nodes"] = cfg.network.nodes;
  net["edges"] = json::array();
  for (const auto& e : cfg.network.edges)
    net["edges"].push_back({{"id", e.id}, {"from", e.from}, {"to", e.to}});
  net["od_pairs"] = json::array();
  for (const auto& od : cfg.network.od_pairs) {
    json paths = json::array();
    for (const auto& path : od.paths) {
      json ids = json::array();
      for (int e : path) ids.push_back(cfg.network.edges[e].id);
      paths.push_back(std::move(ids));
    }
    net["od_pairs"].push_back({{"origin", od.origin},
                               {"destination", od.destination},
                               {"demand", od.demand},
                               {"paths", std::move(paths)}});
  }
  j["network"] = std::move(net);

  json lat;
  for (int e = 0; e < cfg.network.num_edges(); ++e) {
    const auto& el = cfg.latency.edges[e];
    lat[cfg.network.edges[e].id] = {{"a", el.a}, {"b", el.b}, {"p", el.p}};
  }
  j["latency"] = std::move(lat);

  json noise;
  noise["model"] = cfg.noise_model == NoiseModel::BoundedUniform ? "bounded-uniform"
                                                                 : "truncated-gaussian";
  json scale;
  for (int e = 0; e < cfg.network.num_edges(); ++e)
    scale[cfg.network.edges[e].id] = cfg.noise_scale[e];
  noise["scale"] = std::move(scale);
  if (cfg.sigma_override) noise["sigma"] = *cfg.sigma_override;
  if (cfg.L_override) noise["L"] = *cfg.L_override;
  j["noise"] = std::move(noise);

  json attack;
  switch (cfg.attack.kind) {
    case AttackKind::None: attack["strategy"] = "none"; break;
    case AttackKind::Constant: attack["strategy"] = "constant"; break;
    case AttackKind::UniformRandom: attack["strategy"] = "uniform-random"; break;
    case AttackKind::Burst: attack["strategy"] = "burst"; break;
  }
  attack["d"] = cfg.attack.budget;
  attack["start"] = cfg.attack.start + 1;
  attack["len"] = cfg.attack.length;
  j["attack"] = std::move(attack);

  j["mirror_map"] = cfg.mirror_map == MapKind::Entropic ? "entropic" : "euclidean";
  json eta;
  switch (cfg.eta_mode) {
    case EtaMode::DefaultRule: eta["mode"] = "default-rule"; break;
    case EtaMode::Explicit:
      eta["mode"] = "explicit";
      eta["value"] = cfg.eta_value;
      break;
    case EtaMode::Blind: eta["mode"] = "blind"; break;
  }
  j["eta"] = std::move(eta);

  j["T"] = cfg.horizon;
  j["trials"] = cfg.trials;
  j["delta"] = cfg.delta;
  j["seed"] = cfg.seed;
  j["out_dir"] = cfg.out_dir;
  if (cfg.mu1) j["mu1"] = *cfg.mu1;
  j["fw_tol"] = cfg.fw_tol;
  j["fw_max_iters"] = cfg.fw_max_iters;
  return j.dump(2) + "\n";
}

std::string apply_overrides(const std::string& json_text,
                            const std::vector<std::string>& overrides) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& err) {
    throw ConfigError(std::string("/: invalid JSON: ") + err.what());
  }
  for (const std::string& entry : overrides) {
    const auto eq = entry.find('=');
    if (eq == std::string::npos)
      throw ConfigError("override '" + entry + "' is not KEY=VALUE");
    const std::string key = entry.substr(0, eq);
    const std::string raw = entry.substr(eq + 1);

    json* node = &j;
    size_t begin = 0;
    while (true) {
      const size_t dot = key.find('.', begin);
      const std::string part = key.substr(begin, dot == std::string::npos
                                                     ? std::string::npos
                                                     : dot - begin);
      if (part.empty()) throw ConfigError("override key '" + key + "' has an empty segment");
      if (dot == std::string::npos) {
        json value = json::parse(raw, nullptr, false);
        (*node)[part] = value.is_discarded() ? json(raw) : value;
        break;
      }
      node = &(*node)[part];
      begin = dot + 1;
    }
  }
  return j.dump();
}

std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

std::uint64_t config_hash(const ExperimentConfig& cfg) {
  ExperimentConfig keyed = cfg;
  keyed.out_dir = "out";  // artifact location does not change the experiment
  return fnv1a64(serialize_config(keyed));
}

}  // namespace dmd
