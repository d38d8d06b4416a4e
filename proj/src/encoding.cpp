#include "fairge/encoding.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "fairge/errors.hpp"
#include "fairge/kernels.hpp"

namespace fairge {

PaddedAttributes zero_pad(const AttributeMatrix& attrs, const SensitiveColumn& sensitive) {
  if (attrs.n() != sensitive.n() || sensitive.present.size() != sensitive.n()) {
    throw DimensionError("zero_pad: attribute rows and sensitive column lengths differ");
  }
  if (attrs.sensitive_col < 0 || static_cast<std::size_t>(attrs.sensitive_col) >= attrs.d()) {
    throw DimensionError("zero_pad: sensitive column index out of range");
  }
  PaddedAttributes out{attrs.values, attrs.sensitive_col, std::vector<bool>(sensitive.n(), false)};
  for (std::size_t i = 0; i < sensitive.n(); ++i) {
    if (!sensitive.present[i]) {
      out.values(static_cast<Eigen::Index>(i), attrs.sensitive_col) = 0.0;
      out.padded[i] = true;
    }
  }
  return out;
}

Eigen::MatrixXd propagate_k_hop(const Graph& g, const Eigen::MatrixXd& x, int k, bool normalize) {
  if (k < 0) throw InputError("propagate_k_hop: k must be nonnegative");
  if (static_cast<std::size_t>(x.rows()) != g.n()) {
    throw DimensionError("propagate_k_hop: matrix has " + std::to_string(x.rows()) + " rows, graph has " +
                         std::to_string(g.n()) + " nodes");
  }
  Eigen::MatrixXd current = x;
  Eigen::MatrixXd next(x.rows(), x.cols());
  for (int hop = 0; hop < k; ++hop) {
    kernels::spmm(g, current, next);
    if (normalize) {
      for (Eigen::Index c = 0; c < next.cols(); ++c) {
        const double norm = next.col(c).norm();
        if (norm > 0.0) next.col(c) /= norm;
      }
    }
    std::swap(current, next);
  }
  return current;
}

double cosine_alignment(const Eigen::Ref<const Eigen::VectorXd>& x, const Eigen::Ref<const Eigen::VectorXd>& y) {
  if (x.size() != y.size()) throw DimensionError("cosine_alignment: length mismatch");
  const double nx = x.norm();
  const double ny = y.norm();
  if (nx == 0.0 || ny == 0.0) {
    throw DegenerateInputError("cosine_alignment: zero-norm input, cosine undefined");
  }
  return std::clamp(x.dot(y) / (nx * ny), -1.0, 1.0);
}

Eigen::MatrixXd eigenvalue_position_encoding(const Eigen::VectorXd& eigenvalues, int d_m) {
  if (d_m < 2 || d_m % 2 != 0) throw InputError("position encoding width must be even and >= 2");
  Eigen::MatrixXd pe(eigenvalues.size(), d_m);
  for (int j = 0; j < d_m / 2; ++j) {
    const double scale = std::pow(10000.0, 2.0 * j / d_m);
    for (Eigen::Index i = 0; i < eigenvalues.size(); ++i) {
      const double angle = eigenvalues[i] / scale;
      pe(i, 2 * j) = std::sin(angle);
      pe(i, 2 * j + 1) = std::cos(angle);
    }
  }
  return pe;
}

}  // namespace fairge
