#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Core>

namespace fairge {

using NodeId = std::int32_t;

// Symmetric, unweighted, simple graph in compressed row form. Every
// undirected edge is stored twice; neighbor lists are sorted ascending.
class Graph {
 public:
  Graph() = default;

  // Builds from an undirected edge list. Self-loops are dropped and
  // duplicates (in either orientation) collapsed.
  static Graph from_edges(std::size_t n, std::span<const std::pair<NodeId, NodeId>> edges);

  std::size_t n() const noexcept { return n_; }
  std::size_t edge_count() const noexcept { return col_indices_.size() / 2; }

  std::span<const NodeId> neighbors(std::size_t i) const noexcept {
    return {col_indices_.data() + row_offsets_[i],
            static_cast<std::size_t>(row_offsets_[i + 1] - row_offsets_[i])};
  }
  std::size_t degree(std::size_t i) const noexcept {
    return static_cast<std::size_t>(row_offsets_[i + 1] - row_offsets_[i]);
  }
  bool has_edge(NodeId u, NodeId v) const;

  const std::vector<std::int64_t>& row_offsets() const noexcept { return row_offsets_; }
  const std::vector<NodeId>& col_indices() const noexcept { return col_indices_; }

  // Same node ids and identical neighbor lists.
  bool operator==(const Graph&) const = default;

 private:
  std::size_t n_ = 0;
  std::vector<std::int64_t> row_offsets_{0};
  std::vector<NodeId> col_indices_;
};

// Checks the structural invariants (symmetry, no self-loops, sorted unique
// rows, consistent offsets). Returns an empty string when valid.
std::string validate(const Graph& g);

// Edge list text: one "u v" pair per line, '#' comments, optional "# n=<N>".
Graph load_edge_list(std::string_view text);

// Writes "# n=<N>" followed by one "u v" line per edge with u < v.
std::string to_edge_list(const Graph& g);

std::size_t component_count(const Graph& g);
bool is_bipartite(const Graph& g);

// Node attribute matrix H (n x d). Column `sensitive_col` is H[:, s].
struct AttributeMatrix {
  Eigen::MatrixXd values;
  std::vector<std::string> column_names;
  int sensitive_col = 0;

  std::size_t n() const noexcept { return static_cast<std::size_t>(values.rows()); }
  std::size_t d() const noexcept { return static_cast<std::size_t>(values.cols()); }
};

// Per-node sensitive class ids plus the disclosure mask. `values` holds the
// ground truth for every node; `present[i] == false` means the model must
// not see node i's value.
struct SensitiveColumn {
  std::vector<int> values;
  std::vector<bool> present;

  std::size_t n() const noexcept { return values.size(); }
  std::size_t present_count() const noexcept;
  std::size_t missing_count() const noexcept { return n() - present_count(); }
};

struct LabelVector {
  std::vector<int> labels;
  std::size_t n() const noexcept { return labels.size(); }
};

struct NodeTable {
  AttributeMatrix attributes;
  SensitiveColumn sensitive;
  LabelVector labels;
};

// Attribute CSV with required columns id, sensitive, label. All other columns
// are real features. The sensitive column stays inside the attribute matrix
// at its header position; id and label do not. Labels > 1 merge into 1.
NodeTable load_attributes(std::string_view csv_text,
                          std::optional<std::size_t> expected_n = std::nullopt);

std::string to_attribute_csv(const NodeTable& table);

// Hides exactly floor(rate * n) uniformly chosen nodes. Values are kept.
SensitiveColumn apply_missing_mask(const SensitiveColumn& sensitive, double rate,
                                   std::uint64_t seed);

// Mask file: one missing node id per line.
std::vector<NodeId> load_mask_file(std::string_view text, std::size_t n);
std::string to_mask_file(const SensitiveColumn& sensitive);
SensitiveColumn with_missing(const SensitiveColumn& sensitive, std::span<const NodeId> missing);

struct Split {
  std::vector<NodeId> train;
  std::vector<NodeId> val;
  std::vector<NodeId> test;
};

// floor(n/4) nodes each for validation and test, `train_size` from the rest.
Split make_split(std::size_t n, std::size_t train_size, std::uint64_t seed);

// Largest train_size accepted by make_split for n nodes.
inline std::size_t max_train_size(std::size_t n) { return n - 2 * (n / 4); }

}  // namespace fairge
