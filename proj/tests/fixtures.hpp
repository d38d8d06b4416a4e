#pragma once

#include <cmath>
#include <vector>

#include "fairge/encoding.hpp"
#include "fairge/model.hpp"
#include "fairge/rng.hpp"
#include "fairge/spectral.hpp"

namespace testutil {

// Two triangles joined by one edge; three features plus the sensitive
// column; node 4's sensitive value hidden.
struct SixNode {
  fairge::Graph graph;
  fairge::NodeTable table;
  fairge::TrainConfig config;
  fairge::ModelInputs inputs;
  fairge::ModelParams params;
  std::vector<fairge::NodeId> train = {0, 1, 2, 3, 4, 5};
};

inline SixNode six_node_fixture() {
  SixNode f;
  f.graph = fairge::load_edge_list("0 1\n1 2\n2 0\n2 3\n3 4\n4 5\n5 3\n");
  auto& a = f.table.attributes;
  a.values.resize(6, 4);
  a.values << 0.3, -1.2, 0.5, 1,  //
      1.1, 0.4, -0.7, 0,          //
      -0.6, 0.9, 0.2, 1,          //
      0.8, -0.3, 1.4, 0,          //
      -1.0, 0.1, -0.4, 0,         //
      0.2, 1.3, 0.6, 1;
  a.column_names = {"a", "b", "c", "sensitive"};
  a.sensitive_col = 3;
  f.table.sensitive.values = {1, 0, 1, 0, 0, 1};
  f.table.sensitive.present = {true, true, true, true, false, true};
  f.table.labels.labels = {1, 0, 1, 0, 1, 1};

  f.config.m = 2;
  f.config.hidden = 8;
  f.config.d_m = 4;
  f.config.heads = 2;
  f.config.layers = 2;
  f.config.ffn_hidden = 6;

  const auto padded = fairge::zero_pad(a, f.table.sensitive);
  f.inputs = fairge::prepare_inputs(f.graph, padded, fairge::top_m_eigenpairs(f.graph, 2), f.config);
  f.params = fairge::init_params(fairge::dims_for(f.config, 4), 7);
  // Move LN parameters and biases off their initial constants so every
  // tensor gets a generic gradient.
  fairge::Rng rng(11);
  f.params.visit([&](const std::string& name, Eigen::MatrixXd& t) {
    if (name.starts_with("ln") || name.find("_b") != std::string::npos) {
      for (Eigen::Index i = 0; i < t.size(); ++i) t.data()[i] += 0.3 * rng.normal();
    }
  });
  return f;
}

struct GradCheck {
  double worst_relative = 0.0;
  std::string worst_tensor;
  std::size_t coordinates = 0;
  std::size_t tensors = 0;
};

// Central differences over every coordinate of every tensor.
inline GradCheck finite_difference_check(const fairge::ModelParams& params, const fairge::ModelInputs& inputs,
                                         const std::vector<int>& labels, const std::vector<fairge::NodeId>& idx,
                                         double h = 1e-5, double floor = 1e-5) {
  const auto analytic = fairge::loss_and_gradients(params, inputs, labels, idx).grads;
  std::vector<const Eigen::MatrixXd*> grads;
  analytic.visit([&](const std::string&, const Eigen::MatrixXd& t) { grads.push_back(&t); });

  GradCheck out;
  fairge::ModelParams probe = params;
  std::size_t k = 0;
  probe.visit([&](const std::string& name, Eigen::MatrixXd& t) {
    const Eigen::MatrixXd& g = *grads[k++];
    ++out.tensors;
    for (Eigen::Index i = 0; i < t.size(); ++i) {
      const double keep = t.data()[i];
      t.data()[i] = keep + h;
      const double up = fairge::loss_only(probe, inputs, labels, idx);
      t.data()[i] = keep - h;
      const double down = fairge::loss_only(probe, inputs, labels, idx);
      t.data()[i] = keep;
      const double fd = (up - down) / (2.0 * h);
      const double a = g.data()[i];
      const double rel = std::abs(a - fd) / std::max({std::abs(a), std::abs(fd), floor});
      ++out.coordinates;
      if (rel > out.worst_relative) {
        out.worst_relative = rel;
        out.worst_tensor = name + "[" + std::to_string(i) + "]";
      }
    }
  });
  return out;
}

}  // namespace testutil
