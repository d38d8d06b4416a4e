#include "fairge/graph.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>
#include <sstream>
#include <unordered_map>

#include "fairge/errors.hpp"
#include "fairge/rng.hpp"

namespace fairge {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto end = text.find('\n', start);
    if (end == std::string_view::npos) {
      if (start < text.size()) lines.push_back(text.substr(start));
      break;
    }
    lines.push_back(text.substr(start, end - start));
    start = end + 1;
  }
  return lines;
}

std::vector<std::string_view> split_fields(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto end = line.find(sep, start);
    out.push_back(trim(line.substr(start, end == std::string_view::npos ? end : end - start)));
    if (end == std::string_view::npos) break;
    start = end + 1;
  }
  return out;
}

template <typename T>
bool parse_number(std::string_view s, T& out) {
  if (s.empty()) return false;
  if (s.front() == '+') s.remove_prefix(1);
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc{} && ptr == end;
}

}  // namespace

Graph Graph::from_edges(std::size_t n, std::span<const std::pair<NodeId, NodeId>> edges) {
  std::vector<std::pair<NodeId, NodeId>> directed;
  directed.reserve(edges.size() * 2);
  for (const auto& [u, v] : edges) {
    if (u < 0 || v < 0 || static_cast<std::size_t>(u) >= n || static_cast<std::size_t>(v) >= n) {
      throw InputError("edge (" + std::to_string(u) + ", " + std::to_string(v) +
                       ") out of range for n=" + std::to_string(n));
    }
    if (u == v) continue;
    directed.emplace_back(u, v);
    directed.emplace_back(v, u);
  }
  std::sort(directed.begin(), directed.end());
  directed.erase(std::unique(directed.begin(), directed.end()), directed.end());

  Graph g;
  g.n_ = n;
  g.row_offsets_.assign(n + 1, 0);
  g.col_indices_.reserve(directed.size());
  for (const auto& [u, v] : directed) {
    ++g.row_offsets_[static_cast<std::size_t>(u) + 1];
    g.col_indices_.push_back(v);
  }
  std::partial_sum(g.row_offsets_.begin(), g.row_offsets_.end(), g.row_offsets_.begin());
  return g;
}

bool Graph::has_edge(NodeId u, NodeId v) const {
  if (u < 0 || static_cast<std::size_t>(u) >= n_) return false;
  const auto row = neighbors(static_cast<std::size_t>(u));
  return std::binary_search(row.begin(), row.end(), v);
}

std::string validate(const Graph& g) {
  const auto& offsets = g.row_offsets();
  if (offsets.size() != g.n() + 1 || offsets.front() != 0) return "row_offsets has wrong length";
  if (static_cast<std::size_t>(offsets.back()) != g.col_indices().size()) {
    return "row_offsets[n] does not match stored entries";
  }
  if (g.col_indices().size() % 2 != 0) return "odd number of stored entries";
  for (std::size_t i = 0; i < g.n(); ++i) {
    if (offsets[i] > offsets[i + 1]) return "row_offsets decreasing at row " + std::to_string(i);
    const auto row = g.neighbors(i);
    for (std::size_t k = 0; k < row.size(); ++k) {
      const NodeId j = row[k];
      if (j < 0 || static_cast<std::size_t>(j) >= g.n()) return "column out of range";
      if (static_cast<std::size_t>(j) == i) return "self-loop at " + std::to_string(i);
      if (k > 0 && row[k - 1] >= j) return "row " + std::to_string(i) + " not sorted/unique";
      if (!g.has_edge(j, static_cast<NodeId>(i))) {
        return "asymmetric entry (" + std::to_string(i) + ", " + std::to_string(j) + ")";
      }
    }
  }
  return {};
}

Graph load_edge_list(std::string_view text) {
  std::vector<std::pair<NodeId, NodeId>> edges;
  std::optional<std::size_t> declared_n;
  std::int64_t max_id = -1;
  const auto lines = split_lines(text);
  for (std::size_t ln = 0; ln < lines.size(); ++ln) {
    const auto line = trim(lines[ln]);
    if (line.empty()) continue;
    if (line.front() == '#') {
      const auto body = trim(line.substr(1));
      if (body.starts_with("n=")) {
        std::size_t n = 0;
        if (!parse_number(trim(body.substr(2)), n)) throw ParseError(ln + 1, "bad '# n=' header");
        declared_n = n;
      }
      continue;
    }
    std::vector<std::string_view> tokens;
    std::size_t pos = 0;
    while (pos < line.size()) {
      const auto start = line.find_first_not_of(" \t", pos);
      if (start == std::string_view::npos) break;
      const auto end = line.find_first_of(" \t", start);
      tokens.push_back(line.substr(start, end == std::string_view::npos ? end : end - start));
      pos = end == std::string_view::npos ? line.size() : end;
    }
    NodeId u = 0;
    NodeId v = 0;
    if (tokens.size() != 2 || !parse_number(tokens[0], u) || !parse_number(tokens[1], v) || u < 0 ||
        v < 0) {
      throw ParseError(ln + 1, "expected two nonnegative integers, got '" + std::string(line) + "'");
    }
    max_id = std::max<std::int64_t>({max_id, u, v});
    edges.emplace_back(u, v);
  }
  if (edges.empty() && !declared_n) throw InputError("edge list is empty");
  const auto seen_n = static_cast<std::size_t>(max_id + 1);
  if (declared_n && *declared_n < seen_n) {
    throw InputError("header declares n=" + std::to_string(*declared_n) + " but node id " +
                     std::to_string(max_id) + " appears");
  }
  return Graph::from_edges(declared_n.value_or(seen_n), edges);
}

std::string to_edge_list(const Graph& g) {
  std::ostringstream out;
  out << "# n=" << g.n() << '\n';
  for (std::size_t i = 0; i < g.n(); ++i) {
    for (const NodeId j : g.neighbors(i)) {
      if (static_cast<std::size_t>(j) > i) out << i << ' ' << j << '\n';
    }
  }
  return out.str();
}

std::size_t SensitiveColumn::present_count() const noexcept {
  return static_cast<std::size_t>(std::count(present.begin(), present.end(), true));
}

NodeTable load_attributes(std::string_view csv_text, std::optional<std::size_t> expected_n) {
  const auto lines = split_lines(csv_text);
  std::size_t ln = 0;
  while (ln < lines.size() && trim(lines[ln]).empty()) ++ln;
  if (ln == lines.size()) throw InputError("attribute CSV is empty");
  const auto header = split_fields(lines[ln], ',');
  const std::size_t header_line = ln + 1;

  int id_col = -1;
  int sens_col = -1;
  int label_col = -1;
  std::vector<int> feature_cols;
  std::vector<std::string> names;
  for (std::size_t c = 0; c < header.size(); ++c) {
    const auto& h = header[c];
    if (h.empty()) throw ParseError(header_line, "empty column name");
    if (h == "id") {
      id_col = static_cast<int>(c);
    } else if (h == "label") {
      label_col = static_cast<int>(c);
    } else {
      if (h == "sensitive") sens_col = static_cast<int>(feature_cols.size());
      feature_cols.push_back(static_cast<int>(c));
      names.emplace_back(h);
    }
  }
  for (const auto& [col, name] : {std::pair{id_col, "id"}, {sens_col, "sensitive"}, {label_col, "label"}}) {
    if (col < 0) throw InputError(std::string("attribute CSV missing required column '") + name + "'");
  }

  struct Row {
    std::int64_t id;
    std::vector<double> features;
    int sensitive;
    int label;
  };
  std::vector<Row> rows;
  for (++ln; ln < lines.size(); ++ln) {
    if (trim(lines[ln]).empty()) continue;
    const auto fields = split_fields(lines[ln], ',');
    if (fields.size() != header.size()) {
      throw ParseError(ln + 1, "expected " + std::to_string(header.size()) + " fields, got " +
                                   std::to_string(fields.size()));
    }
    Row row{};
    if (!parse_number(fields[static_cast<std::size_t>(id_col)], row.id) || row.id < 0) {
      throw ParseError(ln + 1, "bad node id");
    }
    if (!parse_number(fields[static_cast<std::size_t>(label_col)], row.label) || row.label < 0) {
      throw ParseError(ln + 1, "label must be a nonnegative integer");
    }
    row.features.reserve(feature_cols.size());
    for (std::size_t f = 0; f < feature_cols.size(); ++f) {
      const auto cell = fields[static_cast<std::size_t>(feature_cols[f])];
      double value = 0.0;
      if (!parse_number(cell, value) || !std::isfinite(value)) {
        throw ParseError(ln + 1, "non-numeric value '" + std::string(cell) + "' in column '" +
                                     names[f] + "'");
      }
      if (static_cast<int>(f) == sens_col) {
        if (value < 0 || value != std::floor(value)) {
          throw ParseError(ln + 1, "sensitive value must be a nonnegative integer class id");
        }
        row.sensitive = static_cast<int>(value);
      }
      row.features.push_back(value);
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw InputError("attribute CSV has no data rows");

  std::sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) { return a.id < b.id; });
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].id != static_cast<std::int64_t>(i)) {
      throw InputError("node ids must be exactly 0..n-1 with one row each; problem at id " +
                       std::to_string(rows[i].id));
    }
  }
  if (expected_n && *expected_n != rows.size()) {
    throw DimensionError("attribute CSV has " + std::to_string(rows.size()) +
                         " rows but the graph has " + std::to_string(*expected_n) + " nodes");
  }

  NodeTable table;
  const auto n = rows.size();
  table.attributes.values.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(feature_cols.size()));
  table.attributes.column_names = std::move(names);
  table.attributes.sensitive_col = sens_col;
  table.sensitive.values.resize(n);
  table.sensitive.present.assign(n, true);
  table.labels.labels.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t f = 0; f < feature_cols.size(); ++f) {
      table.attributes.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(f)) = rows[i].features[f];
    }
    table.sensitive.values[i] = rows[i].sensitive;
    table.labels.labels[i] = std::min(rows[i].label, 1);
  }
  return table;
}

std::string to_attribute_csv(const NodeTable& table) {
  std::ostringstream out;
  out.precision(17);
  out << "id";
  for (const auto& name : table.attributes.column_names) out << ',' << name;
  out << ",label\n";
  const auto& values = table.attributes.values;
  for (Eigen::Index i = 0; i < values.rows(); ++i) {
    out << i;
    for (Eigen::Index j = 0; j < values.cols(); ++j) out << ',' << values(i, j);
    out << ',' << table.labels.labels[static_cast<std::size_t>(i)] << '\n';
  }
  return out.str();
}

SensitiveColumn apply_missing_mask(const SensitiveColumn& sensitive, double rate, std::uint64_t seed) {
  if (!(rate >= 0.0 && rate < 1.0)) throw InputError("missing rate must lie in [0, 1)");
  if (sensitive.present_count() != sensitive.n()) {
    throw InputError("apply_missing_mask expects a fully disclosed sensitive column");
  }
  const std::size_t n = sensitive.n();
  // The epsilon absorbs representation error, e.g. 0.6 * 1045 = 626.99999...
  const auto count = static_cast<std::size_t>(std::floor(rate * static_cast<double>(n) + 1e-9));
  std::vector<NodeId> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  rng.shuffle_prefix(order, count);

  SensitiveColumn out = sensitive;
  for (std::size_t i = 0; i < count; ++i) out.present[static_cast<std::size_t>(order[i])] = false;
  return out;
}

std::vector<NodeId> load_mask_file(std::string_view text, std::size_t n) {
  std::vector<NodeId> ids;
  const auto lines = split_lines(text);
  for (std::size_t ln = 0; ln < lines.size(); ++ln) {
    const auto line = trim(lines[ln]);
    if (line.empty() || line.front() == '#') continue;
    NodeId id = 0;
    if (!parse_number(line, id) || id < 0 || static_cast<std::size_t>(id) >= n) {
      throw ParseError(ln + 1, "expected a node id in [0, " + std::to_string(n) + ")");
    }
    ids.push_back(id);
  }
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  return ids;
}

std::string to_mask_file(const SensitiveColumn& sensitive) {
  std::ostringstream out;
  for (std::size_t i = 0; i < sensitive.n(); ++i) {
    if (!sensitive.present[i]) out << i << '\n';
  }
  return out.str();
}

SensitiveColumn with_missing(const SensitiveColumn& sensitive, std::span<const NodeId> missing) {
  SensitiveColumn out = sensitive;
  for (const NodeId id : missing) {
    if (id < 0 || static_cast<std::size_t>(id) >= out.n()) throw InputError("mask id out of range");
    out.present[static_cast<std::size_t>(id)] = false;
  }
  return out;
}

Split make_split(std::size_t n, std::size_t train_size, std::uint64_t seed) {
  if (train_size > max_train_size(n)) {
    throw InputError("train_size " + std::to_string(train_size) + " exceeds the " +
                     std::to_string(max_train_size(n)) + " nodes left after val/test");
  }
  const std::size_t quarter = n / 4;
  std::vector<NodeId> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  rng.shuffle(order);

  Split split;
  split.val.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(quarter));
  split.test.assign(order.begin() + static_cast<std::ptrdiff_t>(quarter),
                    order.begin() + static_cast<std::ptrdiff_t>(2 * quarter));
  split.train.assign(order.begin() + static_cast<std::ptrdiff_t>(2 * quarter),
                     order.begin() + static_cast<std::ptrdiff_t>(2 * quarter + train_size));
  std::sort(split.val.begin(), split.val.end());
  std::sort(split.test.begin(), split.test.end());
  std::sort(split.train.begin(), split.train.end());
  return split;
}

namespace {

// BFS 2-coloring; returns the number of components and whether every
// component was properly colored.
std::pair<std::size_t, bool> color_components(const Graph& g) {
  std::vector<int> color(g.n(), -1);
  std::vector<std::size_t> queue;
  std::size_t components = 0;
  bool bipartite = true;
  for (std::size_t root = 0; root < g.n(); ++root) {
    if (color[root] >= 0) continue;
    ++components;
    color[root] = 0;
    queue.assign(1, root);
    for (std::size_t head = 0; head < queue.size(); ++head) {
      const std::size_t u = queue[head];
      for (const NodeId v : g.neighbors(u)) {
        const auto vi = static_cast<std::size_t>(v);
        if (color[vi] < 0) {
          color[vi] = 1 - color[u];
          queue.push_back(vi);
        } else if (color[vi] == color[u]) {
          bipartite = false;
        }
      }
    }
  }
  return {components, bipartite};
}

}  // namespace

std::size_t component_count(const Graph& g) { return color_components(g).first; }

bool is_bipartite(const Graph& g) { return color_components(g).second; }

}  // namespace fairge
