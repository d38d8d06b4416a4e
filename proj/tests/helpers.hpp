#pragma once

#include <utility>
#include <vector>

#include <Eigen/Core>

#include "fairge/graph.hpp"
#include "fairge/rng.hpp"

namespace testutil {

inline Eigen::MatrixXd dense_adjacency(const fairge::Graph& g) {
  const auto n = static_cast<Eigen::Index>(g.n());
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
  for (std::size_t u = 0; u < g.n(); ++u) {
    for (const fairge::NodeId v : g.neighbors(u)) a(static_cast<Eigen::Index>(u), v) = 1.0;
  }
  return a;
}

inline fairge::Graph random_graph(std::size_t n, double p, std::uint64_t seed) {
  fairge::Rng rng(seed);
  std::vector<std::pair<fairge::NodeId, fairge::NodeId>> edges;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (rng.bernoulli(p)) edges.emplace_back(static_cast<fairge::NodeId>(i), static_cast<fairge::NodeId>(j));
    }
  }
  return fairge::Graph::from_edges(n, edges);
}

inline fairge::Graph triangle() { return fairge::load_edge_list("0 1\n1 2\n2 0"); }
inline fairge::Graph two_triangles() { return fairge::load_edge_list("0 1\n1 2\n2 0\n3 4\n4 5\n5 3"); }
inline fairge::Graph four_cycle() { return fairge::load_edge_list("0 1\n1 2\n2 3\n3 0"); }

}  // namespace testutil
