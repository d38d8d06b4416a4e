#include "fairge/kernels.hpp"

namespace fairge::kernels::serial {

void spmv(const Graph& g, std::span<const double> x, std::span<double> y) {
  const auto& offsets = g.row_offsets();
  const auto& cols = g.col_indices();
  const auto n = static_cast<std::int64_t>(g.n());
  for (std::int64_t i = 0; i < n; ++i) {
    double acc = 0.0;
    for (auto k = offsets[i]; k < offsets[i + 1]; ++k) acc += x[static_cast<std::size_t>(cols[k])];
    y[static_cast<std::size_t>(i)] = acc;
  }
}

void spmm(const Graph& g, const Eigen::MatrixXd& x, Eigen::MatrixXd& y) {
  y.resize(x.rows(), x.cols());
  for (Eigen::Index c = 0; c < x.cols(); ++c) {
    spmv(g, {x.col(c).data(), static_cast<std::size_t>(x.rows())},
         {y.col(c).data(), static_cast<std::size_t>(y.rows())});
  }
}

}  // namespace fairge::kernels::serial
