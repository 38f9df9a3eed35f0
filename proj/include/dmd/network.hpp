#pragma once

#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "dmd/errors.hpp"
#include "dmd/rng.hpp"

namespace dmd {

// Directed congestion-game topology. Paths are explicit ordered edge lists;
// there is no path generation. Immutable after construction, safe to share
// read-only across parallel trials.
struct Network {
  struct Edge {
    std::string id;
    std::string from;
    std::string to;
  };
  struct OdPair {
    std::string origin;
    std::string destination;
    double demand = 0.0;
    std::vector<std::vector<int>> paths;  // each path: ordered edge indices
  };

  std::vector<std::string> nodes;
  std::vector<Edge> edges;
  std::vector<OdPair> od_pairs;

  int num_edges() const { return static_cast<int>(edges.size()); }
  int num_paths() const;
  // (offset, count) of each OD pair's contiguous slice in path-flow vectors.
  // Column order is the concatenation of per-OD path lists.
  std::vector<std::pair<int, int>> od_slices() const;

  int edge_index(const std::string& id) const;  // -1 if absent

  // Throws ValidationError on self-loop edges, disconnected path walks,
  // duplicate paths, nonpositive demands, empty path sets.
  void validate() const;
};

// Lambda[e,p] = 1 iff edge e lies on path p. Shape |E| x |P|.
Eigen::MatrixXd build_incidence(const Network& net);

// q = Lambda * mu. Throws ValidationError on dimension mismatch.
Eigen::VectorXd edge_flow(const Eigen::MatrixXd& incidence, const Eigen::VectorXd& mu);

struct FlowViolation {
  std::string constraint;
  double magnitude = 0.0;
};

// Per-OD simplex constraints (relative tolerance) and nonnegativity.
// Empty report means the flow is feasible.
std::vector<FlowViolation> validate_flow(const Network& net, const Eigen::VectorXd& mu,
                                         double rel_tol = 1e-9);

// Uniform per-OD interior point, the default mirror-descent start.
Eigen::VectorXd uniform_flow(const Network& net);

// Dirichlet(1,...,1) per OD pair, scaled by demand.
Eigen::VectorXd random_flow(const Network& net, Rng& rng);

// Rescale each OD slice to its exact demand. Used after mirror steps when
// accumulated drift exceeds the feasibility tolerance.
void renormalize(const Network& net, Eigen::VectorXd& mu);

}  // namespace dmd
