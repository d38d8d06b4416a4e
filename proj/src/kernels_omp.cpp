#include <omp.h>

#include "fairge/kernels.hpp"

namespace fairge::kernels {

namespace omp {

void spmv(const Graph& g, std::span<const double> x, std::span<double> y) {
  const auto* offsets = g.row_offsets().data();
  const auto* cols = g.col_indices().data();
  const auto n = static_cast<std::int64_t>(g.n());
  const double* xs = x.data();
  double* ys = y.data();
#pragma omp parallel for schedule(static) if (n > 4096)
  for (std::int64_t i = 0; i < n; ++i) {
    double acc = 0.0;
    for (auto k = offsets[i]; k < offsets[i + 1]; ++k) acc += xs[cols[k]];
    ys[i] = acc;
  }
}

void spmm(const Graph& g, const Eigen::MatrixXd& x, Eigen::MatrixXd& y) {
  y.resize(x.rows(), x.cols());
  const auto* offsets = g.row_offsets().data();
  const auto* cols = g.col_indices().data();
  const auto n = static_cast<std::int64_t>(g.n());
  const Eigen::Index d = x.cols();
  const double* xs = x.data();
  double* ys = y.data();
  // Column-major storage: entry (r, c) lives at r + c * n. Columns outermost
  // so each pass streams one column of x.
#pragma omp parallel if (n * d > 4096)
  for (Eigen::Index c = 0; c < d; ++c) {
    const double* xc = xs + c * n;
    double* yc = ys + c * n;
#pragma omp for schedule(static)
    for (std::int64_t i = 0; i < n; ++i) {
      double acc = 0.0;
      for (auto k = offsets[i]; k < offsets[i + 1]; ++k) acc += xc[cols[k]];
      yc[i] = acc;
    }
  }
}

}  // namespace omp

int max_threads() { return omp_get_max_threads(); }

}  // namespace fairge::kernels
