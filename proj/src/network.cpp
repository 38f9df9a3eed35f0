#include "dmd/network.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

namespace dmd {

int Network::num_paths() const {
  int n = 0;
  for (const auto& od : od_pairs) n += static_cast<int>(od.paths.size());
  return n;
}

std::vector<std::pair<int, int>> Network::od_slices() const {
  std::vector<std::pair<int, int>> slices;
  int offset = 0;
  for (const auto& od : od_pairs) {
    const int count = static_cast<int>(od.paths.size());
    slices.emplace_back(offset, count);
    offset += count;
  }
  return slices;
}

int Network::edge_index(const std::string& id) const {
  for (int e = 0; e < num_edges(); ++e)
    if (edges[e].id == id) return e;
  return -1;
}

namespace {

std::string path_name(const Network::OdPair& od, const Network& net,
                      const std::vector<int>& path) {
  std::ostringstream os;
  os << od.origin << "->" << od.destination << " [";
  for (size_t i = 0; i < path.size(); ++i) {
    if (i) os << ",";
    os << net.edges[path[i]].id;
  }
  os << "]";
  return os.str();
}

}  // namespace

void Network::validate() const {
  std::set<std::string> node_set(nodes.begin(), nodes.end());
  for (const auto& e : edges) {
    if (e.from == e.to)
      throw ValidationError("self-loop edge '" + e.id + "' at node '" + e.from + "'");
    if (!node_set.count(e.from) || !node_set.count(e.to))
      throw ValidationError("edge '" + e.id + "' references unknown node");
  }
  std::set<std::string> edge_ids;
  for (const auto& e : edges)
    if (!edge_ids.insert(e.id).second)
      throw ValidationError("duplicate edge id '" + e.id + "'");

  for (const auto& od : od_pairs) {
    if (od.demand <= 0.0)
      throw ValidationError("nonpositive demand for OD pair " + od.origin + "->" +
                            od.destination);
    if (od.paths.empty())
      throw ValidationError("OD pair " + od.origin + "->" + od.destination +
                            " has no paths");
    std::set<std::vector<int>> seen;
    for (const auto& path : od.paths) {
      if (path.empty())
        throw ValidationError("empty path for OD pair " + od.origin + "->" +
                              od.destination);
      for (int e : path)
        if (e < 0 || e >= num_edges())
          throw ValidationError("path references edge index out of range");
      // Connected directed walk from origin to destination.
      std::string at = od.origin;
      for (int e : path) {
        if (edges[e].from != at)
          throw ValidationError("disconnected walk in path " + path_name(od, *this, path));
        at = edges[e].to;
      }
      if (at != od.destination)
        throw ValidationError("path does not end at destination: " +
                              path_name(od, *this, path));
      if (!seen.insert(path).second)
        throw ValidationError("duplicate path " + path_name(od, *this, path));
    }
  }
}

Eigen::MatrixXd build_incidence(const Network& net) {
  net.validate();
  Eigen::MatrixXd inc = Eigen::MatrixXd::Zero(net.num_edges(), net.num_paths());
  int col = 0;
  for (const auto& od : net.od_pairs) {
    for (const auto& path : od.paths) {
      for (int e : path) inc(e, col) = 1.0;
      ++col;
    }
  }
  return inc;
}

Eigen::VectorXd edge_flow(const Eigen::MatrixXd& incidence, const Eigen::VectorXd& mu) {
  if (incidence.cols() != mu.size())
    throw ValidationError("edge_flow: incidence has " + std::to_string(incidence.cols()) +
                          " columns but flow has " + std::to_string(mu.size()) +
                          " entries");
  return incidence * mu;
}

std::vector<FlowViolation> validate_flow(const Network& net, const Eigen::VectorXd& mu,
                                         double rel_tol) {
  std::vector<FlowViolation> report;
  if (mu.size() != net.num_paths()) {
    report.push_back({"dimension: |mu| != |P|",
                      std::abs(static_cast<double>(mu.size() - net.num_paths()))});
    return report;
  }
  for (int p = 0; p < mu.size(); ++p) {
    if (mu[p] < 0.0)
      report.push_back({"negativity at path " + std::to_string(p), -mu[p]});
  }
  const auto slices = net.od_slices();
  for (size_t w = 0; w < slices.size(); ++w) {
    const auto [offset, count] = slices[w];
    const double demand = net.od_pairs[w].demand;
    const double sum = mu.segment(offset, count).sum();
    if (std::abs(sum - demand) > rel_tol * std::max(1.0, std::abs(demand))) {
      report.push_back({"OD " + net.od_pairs[w].origin + "->" +
                            net.od_pairs[w].destination + " sum " + std::to_string(sum) +
                            " != demand " + std::to_string(demand),
                        std::abs(sum - demand)});
    }
  }
  return report;
}

Eigen::VectorXd uniform_flow(const Network& net) {
  Eigen::VectorXd mu(net.num_paths());
  const auto slices = net.od_slices();
  for (size_t w = 0; w < slices.size(); ++w) {
    const auto [offset, count] = slices[w];
    mu.segment(offset, count).setConstant(net.od_pairs[w].demand / count);
  }
  return mu;
}

Eigen::VectorXd random_flow(const Network& net, Rng& rng) {
  Eigen::VectorXd mu(net.num_paths());
  const auto slices = net.od_slices();
  for (size_t w = 0; w < slices.size(); ++w) {
    const auto [offset, count] = slices[w];
    double total = 0.0;
    for (int i = 0; i < count; ++i) {
      mu[offset + i] = rng.exponential();
      total += mu[offset + i];
    }
    mu.segment(offset, count) *= net.od_pairs[w].demand / total;
  }
  return mu;
}

void renormalize(const Network& net, Eigen::VectorXd& mu) {
  const auto slices = net.od_slices();
  for (size_t w = 0; w < slices.size(); ++w) {
    const auto [offset, count] = slices[w];
    for (int i = 0; i < count; ++i) mu[offset + i] = std::max(mu[offset + i], 0.0);
    const double sum = mu.segment(offset, count).sum();
    if (sum > 0.0) {
      mu.segment(offset, count) *= net.od_pairs[w].demand / sum;
    } else {
      mu.segment(offset, count).setConstant(net.od_pairs[w].demand / count);
    }
  }
}

}  // namespace dmd
