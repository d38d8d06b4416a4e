#pragma once

#include <span>

#include <Eigen/Core>

#include "fairge/graph.hpp"

// Sparse adjacency products y = A x and Y = A X.
//
// `serial` is the reference implementation kept for testing; `omp` splits
// rows across threads. Each output entry is accumulated by exactly one
// thread in neighbor order, so both variants are bit-identical for any
// thread count.
namespace fairge::kernels {

namespace serial {
void spmv(const Graph& g, std::span<const double> x, std::span<double> y);
void spmm(const Graph& g, const Eigen::MatrixXd& x, Eigen::MatrixXd& y);
}  // namespace serial

namespace omp {
void spmv(const Graph& g, std::span<const double> x, std::span<double> y);
void spmm(const Graph& g, const Eigen::MatrixXd& x, Eigen::MatrixXd& y);
}  // namespace omp

// Dispatchers used by the rest of the library.
inline void spmv(const Graph& g, std::span<const double> x, std::span<double> y) {
  omp::spmv(g, x, y);
}
inline void spmm(const Graph& g, const Eigen::MatrixXd& x, Eigen::MatrixXd& y) {
  omp::spmm(g, x, y);
}

int max_threads();

}  // namespace fairge::kernels
