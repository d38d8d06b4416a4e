#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Core>

#include "fairge/graph.hpp"

namespace fairge {

// H'(0): the attribute matrix with the sensitive entries of undisclosed
// nodes replaced by zero. Nothing is imputed.
struct PaddedAttributes {
  Eigen::MatrixXd values;
  int sensitive_col = 0;
  std::vector<bool> padded;  // per node, true where H'(0)[i, s] was zeroed

  bool is_padded(Eigen::Index row, Eigen::Index col) const {
    return col == sensitive_col && padded[static_cast<std::size_t>(row)];
  }
};

PaddedAttributes zero_pad(const AttributeMatrix& attrs, const SensitiveColumn& sensitive);

// A^k X by repeated sparse products. With `normalize`, every column is
// rescaled to unit norm after each hop, which leaves cosines unchanged and
// keeps large k finite.
Eigen::MatrixXd propagate_k_hop(const Graph& g, const Eigen::MatrixXd& x, int k, bool normalize);

double cosine_alignment(const Eigen::Ref<const Eigen::VectorXd>& x, const Eigen::Ref<const Eigen::VectorXd>& y);

// Sinusoidal embedding of each eigenvalue: row i, channel 2j holds
// sin(lambda_i / 10000^(2j/d_m)) and channel 2j+1 the matching cosine.
Eigen::MatrixXd eigenvalue_position_encoding(const Eigen::VectorXd& eigenvalues, int d_m);

}  // namespace fairge
