#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "fairge/graph.hpp"

namespace fairge {

enum class GraphKind { erdos_renyi, sbm, disjoint_cliques, custom };
enum class LabelRule { sensitive_flip, merit };

// Seeded recipe for a graph plus node table. Nodes are grouped into blocks
// (SBM blocks, cliques, or i % blocks otherwise); the sensitive class is
// block % 2, flipped with probability 1 - rho_s.
struct SyntheticSpec {
  GraphKind kind = GraphKind::sbm;
  std::size_t n = 100;
  double p = 0.1;                               // erdos_renyi edge probability
  int blocks = 2;                               // sbm / grouping block count
  double p_in = 0.3;                            // sbm within-block probability
  double p_out = 0.02;                          // sbm across-block probability
  std::vector<std::vector<double>> block_probs; // optional full sbm matrix
  std::vector<int> clique_sizes;                // disjoint_cliques
  std::vector<std::pair<NodeId, NodeId>> edges; // custom
  double rho_s = 1.0;
  LabelRule label_rule = LabelRule::merit;
  double label_flip = 0.2;   // sensitive_flip: P(y != s)
  int merit_dim = 2;         // merit: z ~ N(0, I)
  double label_bias = 1.0;   // merit: weight on (2s - 1)
  double label_noise = 0.5;  // merit: weight on N(0, 1)
  int noise_dim = 2;
  bool one_hot_blocks = true;
  std::uint64_t seed = 0;

  void validate() const;
};

nlohmann::json to_json(const SyntheticSpec& spec);
SyntheticSpec synthetic_spec_from_json(const nlohmann::json& j, SyntheticSpec base = {});

struct SyntheticData {
  Graph graph;
  NodeTable table;
  std::vector<int> block;
};

SyntheticData gen_synthetic(const SyntheticSpec& spec);

}  // namespace fairge
