#pragma once

#include <vector>

#include "dmd/latency.hpp"
#include "dmd/network.hpp"

namespace dmd::testing {

// Four-edge diamond: two disjoint 2-hop routes s->a->t and s->b->t, demand 1.
inline Network diamond() {
  Network net;
  net.nodes = {"s", "a", "b", "t"};
  net.edges = {{"sa", "s", "a"}, {"at", "a", "t"}, {"sb", "s", "b"}, {"bt", "b", "t"}};
  net.od_pairs = {{"s", "t", 1.0, {{0, 1}, {2, 3}}}};
  return net;
}

// Symmetric latencies: every edge a=0, b=1, p=1 (path latency 2q).
inline LatencySpec diamond_symmetric_latency() {
  LatencySpec spec;
  spec.edges.assign(4, EdgeLatency{0.0, 1.0, 1.0});
  return spec;
}

// Asymmetric: route 1 latency 2*mu1, route 2 latency 0.5 + mu2;
// equilibrium (0.5, 0.5) with common latency 1, Phi* = 0.625.
inline LatencySpec diamond_asymmetric_latency() {
  LatencySpec spec;
  spec.edges = {{0.0, 1.0, 1.0}, {0.0, 1.0, 1.0}, {0.25, 0.5, 1.0}, {0.25, 0.5, 1.0}};
  return spec;
}

// Five-edge Braess topology with a third route s->a->b->t.
inline Network braess() {
  Network net;
  net.nodes = {"s", "a", "b", "t"};
  net.edges = {{"sa", "s", "a"},
               {"sb", "s", "b"},
               {"at", "a", "t"},
               {"bt", "b", "t"},
               {"ab", "a", "b"}};
  net.od_pairs = {{"s", "t", 1.0, {{0, 2}, {1, 3}, {0, 4, 3}}}};
  return net;
}

inline LatencySpec braess_latency() {
  LatencySpec spec;
  spec.edges = {{0.0, 1.0, 1.0},
                {1.0, 0.5, 1.0},
                {1.0, 0.5, 1.0},
                {0.0, 1.0, 1.0},
                {0.1, 0.5, 1.0}};
  return spec;
}

inline Network single_edge() {
  Network net;
  net.nodes = {"s", "t"};
  net.edges = {{"st", "s", "t"}};
  net.od_pairs = {{"s", "t", 1.0, {{0}}}};
  return net;
}

inline Eigen::VectorXd vec(std::initializer_list<double> values) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(values.size()));
  Eigen::Index i = 0;
  for (double x : values) v[i++] = x;
  return v;
}

}  // namespace dmd::testing
