#include "fairge/synthetic.hpp"

#include <cmath>
#include <numeric>

#include "fairge/errors.hpp"
#include "fairge/rng.hpp"

namespace fairge {

NLOHMANN_JSON_SERIALIZE_ENUM(GraphKind, {{GraphKind::erdos_renyi, "erdos_renyi"},
                                         {GraphKind::sbm, "sbm"},
                                         {GraphKind::disjoint_cliques, "disjoint_cliques"},
                                         {GraphKind::custom, "custom"}})
NLOHMANN_JSON_SERIALIZE_ENUM(LabelRule, {{LabelRule::sensitive_flip, "sensitive_flip"}, {LabelRule::merit, "merit"}})

namespace {

bool is_probability(double p) { return p >= 0.0 && p <= 1.0; }

std::vector<int> assign_blocks(const SyntheticSpec& spec) {
  std::vector<int> block(spec.n);
  switch (spec.kind) {
    case GraphKind::sbm:
      for (std::size_t i = 0; i < spec.n; ++i) {
        block[i] = static_cast<int>(i * static_cast<std::size_t>(spec.blocks) / spec.n);
      }
      break;
    case GraphKind::disjoint_cliques: {
      std::size_t i = 0;
      for (std::size_t c = 0; c < spec.clique_sizes.size(); ++c) {
        for (int k = 0; k < spec.clique_sizes[c]; ++k) block[i++] = static_cast<int>(c);
      }
      break;
    }
    default:
      for (std::size_t i = 0; i < spec.n; ++i) block[i] = static_cast<int>(i % static_cast<std::size_t>(spec.blocks));
  }
  return block;
}

double block_probability(const SyntheticSpec& spec, int a, int b) {
  if (!spec.block_probs.empty()) return spec.block_probs[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)];
  return a == b ? spec.p_in : spec.p_out;
}

}  // namespace

void SyntheticSpec::validate() const {
  if (kind == GraphKind::disjoint_cliques) {
    if (clique_sizes.empty()) throw InputError("disjoint_cliques needs clique_sizes");
    std::size_t total = 0;
    for (const int s : clique_sizes) {
      if (s < 1) throw InputError("clique sizes must be positive");
      total += static_cast<std::size_t>(s);
    }
    if (n != 0 && n != total) throw InputError("n must equal the sum of clique_sizes (or be 0)");
  } else if (n == 0) {
    throw InputError("n must be positive");
  }
  if (blocks < 1) throw InputError("blocks must be >= 1");
  if (kind == GraphKind::sbm && static_cast<std::size_t>(blocks) > n) throw InputError("more blocks than nodes");
  if (!is_probability(p) || !is_probability(p_in) || !is_probability(p_out)) {
    throw InputError("edge probabilities must lie in [0, 1]");
  }
  if (!block_probs.empty()) {
    if (block_probs.size() != static_cast<std::size_t>(blocks)) throw InputError("block_probs must be blocks x blocks");
    for (std::size_t a = 0; a < block_probs.size(); ++a) {
      if (block_probs[a].size() != block_probs.size()) throw InputError("block_probs must be square");
      for (std::size_t b = 0; b < block_probs.size(); ++b) {
        if (!is_probability(block_probs[a][b])) throw InputError("block_probs entries must lie in [0, 1]");
        if (block_probs[a][b] != block_probs[b][a]) throw InputError("block_probs must be symmetric");
      }
    }
  }
  if (!is_probability(rho_s)) throw InputError("rho_s must lie in [0, 1]");
  if (!is_probability(label_flip)) throw InputError("label_flip must lie in [0, 1]");
  if (merit_dim < 0 || noise_dim < 0) throw InputError("feature widths must be nonnegative");
  if (label_rule == LabelRule::merit && merit_dim == 0 && label_bias == 0.0 && label_noise == 0.0) {
    throw InputError("merit labels need at least one nonzero term");
  }
}

nlohmann::json to_json(const SyntheticSpec& s) {
  nlohmann::json edges = nlohmann::json::array();
  for (const auto& [u, v] : s.edges) edges.push_back({u, v});
  return {{"kind", s.kind},
          {"n", s.n},
          {"p", s.p},
          {"blocks", s.blocks},
          {"p_in", s.p_in},
          {"p_out", s.p_out},
          {"block_probs", s.block_probs},
          {"clique_sizes", s.clique_sizes},
          {"edges", edges},
          {"rho_s", s.rho_s},
          {"label_rule", s.label_rule},
          {"label_flip", s.label_flip},
          {"merit_dim", s.merit_dim},
          {"label_bias", s.label_bias},
          {"label_noise", s.label_noise},
          {"noise_dim", s.noise_dim},
          {"one_hot_blocks", s.one_hot_blocks},
          {"seed", s.seed}};
}

SyntheticSpec synthetic_spec_from_json(const nlohmann::json& j, SyntheticSpec s) {
  if (!j.is_object()) throw InputError("synthetic spec must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    try {
      if (key == "kind") {
        s.kind = value.get<GraphKind>();
        if (value != nlohmann::json(s.kind)) throw InputError("unknown graph kind " + value.dump());
      } else if (key == "n") s.n = value.get<std::size_t>();
      else if (key == "p") s.p = value.get<double>();
      else if (key == "blocks") s.blocks = value.get<int>();
      else if (key == "p_in") s.p_in = value.get<double>();
      else if (key == "p_out") s.p_out = value.get<double>();
      else if (key == "block_probs") s.block_probs = value.get<std::vector<std::vector<double>>>();
      else if (key == "clique_sizes") s.clique_sizes = value.get<std::vector<int>>();
      else if (key == "edges") s.edges = value.get<std::vector<std::pair<NodeId, NodeId>>>();
      else if (key == "rho_s") s.rho_s = value.get<double>();
      else if (key == "label_rule") {
        s.label_rule = value.get<LabelRule>();
        if (value != nlohmann::json(s.label_rule)) throw InputError("unknown label rule " + value.dump());
      } else if (key == "label_flip") s.label_flip = value.get<double>();
      else if (key == "merit_dim") s.merit_dim = value.get<int>();
      else if (key == "label_bias") s.label_bias = value.get<double>();
      else if (key == "label_noise") s.label_noise = value.get<double>();
      else if (key == "noise_dim") s.noise_dim = value.get<int>();
      else if (key == "one_hot_blocks") s.one_hot_blocks = value.get<bool>();
      else if (key == "seed") s.seed = value.get<std::uint64_t>();
      else throw InputError("unknown synthetic spec key '" + key + "'");
    } catch (const nlohmann::json::exception& e) {
      throw InputError("synthetic spec key '" + key + "': " + e.what());
    }
  }
  return s;
}

SyntheticData gen_synthetic(const SyntheticSpec& input) {
  SyntheticSpec spec = input;
  if (spec.kind == GraphKind::disjoint_cliques) {
    spec.n = std::accumulate(spec.clique_sizes.begin(), spec.clique_sizes.end(), std::size_t{0},
                             [](std::size_t a, int b) { return a + static_cast<std::size_t>(b); });
    spec.blocks = static_cast<int>(spec.clique_sizes.size());
  }
  spec.validate();
  const std::size_t n = spec.n;

  SyntheticData out;
  out.block = assign_blocks(spec);

  // Separate streams so that, e.g., changing the label rule leaves the graph alone.
  Rng graph_rng(derive_seed(spec.seed, 0));
  Rng attr_rng(derive_seed(spec.seed, 1));

  std::vector<std::pair<NodeId, NodeId>> edges;
  switch (spec.kind) {
    case GraphKind::erdos_renyi:
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
          if (graph_rng.bernoulli(spec.p)) edges.emplace_back(static_cast<NodeId>(i), static_cast<NodeId>(j));
        }
      }
      break;
    case GraphKind::sbm:
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
          if (graph_rng.bernoulli(block_probability(spec, out.block[i], out.block[j]))) {
            edges.emplace_back(static_cast<NodeId>(i), static_cast<NodeId>(j));
          }
        }
      }
      break;
    case GraphKind::disjoint_cliques:
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n && out.block[j] == out.block[i]; ++j) {
          edges.emplace_back(static_cast<NodeId>(i), static_cast<NodeId>(j));
        }
      }
      break;
    case GraphKind::custom:
      edges = spec.edges;
      break;
  }
  out.graph = Graph::from_edges(n, edges);

  const int one_hot = spec.one_hot_blocks ? spec.blocks : 0;
  const int d = one_hot + spec.noise_dim + spec.merit_dim + 1;
  const int s_col = d - 1;
  AttributeMatrix& attrs = out.table.attributes;
  attrs.values = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), d);
  attrs.sensitive_col = s_col;
  for (int b = 0; b < one_hot; ++b) attrs.column_names.push_back("block_" + std::to_string(b));
  for (int k = 0; k < spec.noise_dim; ++k) attrs.column_names.push_back("noise_" + std::to_string(k));
  for (int k = 0; k < spec.merit_dim; ++k) attrs.column_names.push_back("merit_" + std::to_string(k));
  attrs.column_names.push_back("sensitive");

  SensitiveColumn& sens = out.table.sensitive;
  sens.values.resize(n);
  sens.present.assign(n, true);
  std::vector<int>& labels = out.table.labels.labels;
  labels.resize(n);
  const double merit_weight = spec.merit_dim > 0 ? 1.0 / std::sqrt(static_cast<double>(spec.merit_dim)) : 0.0;

  for (std::size_t i = 0; i < n; ++i) {
    const auto row = static_cast<Eigen::Index>(i);
    int s = out.block[i] % 2;
    if (attr_rng.bernoulli(1.0 - spec.rho_s)) s = 1 - s;
    sens.values[i] = s;
    if (one_hot > 0) attrs.values(row, out.block[i]) = 1.0;
    for (int k = 0; k < spec.noise_dim; ++k) attrs.values(row, one_hot + k) = attr_rng.normal();
    double score = 0.0;
    for (int k = 0; k < spec.merit_dim; ++k) {
      const double z = attr_rng.normal();
      attrs.values(row, one_hot + spec.noise_dim + k) = z;
      score += merit_weight * z;
    }
    attrs.values(row, s_col) = s;

    if (spec.label_rule == LabelRule::sensitive_flip) {
      labels[i] = attr_rng.bernoulli(spec.label_flip) ? 1 - s : s;
    } else {
      score += spec.label_bias * (2.0 * s - 1.0) + spec.label_noise * attr_rng.normal();
      labels[i] = score > 0.0 ? 1 : 0;
    }
  }
  return out;
}

}  // namespace fairge
