#include <doctest.h>

#include "fairge/kernels.hpp"
#include "helpers.hpp"

using namespace fairge;

TEST_CASE("serial and OpenMP kernels agree bit for bit") {
  // Large enough to cross the parallel threshold.
  const Graph g = testutil::random_graph(6000, 0.002, 3);
  Rng rng(1);
  std::vector<double> x(g.n());
  for (auto& v : x) v = rng.normal();
  std::vector<double> ys(g.n()), yp(g.n());
  kernels::serial::spmv(g, x, ys);
  kernels::omp::spmv(g, x, yp);
  CHECK(ys == yp);

  Eigen::MatrixXd xm(static_cast<Eigen::Index>(g.n()), 3);
  for (Eigen::Index i = 0; i < xm.size(); ++i) xm.data()[i] = rng.normal();
  Eigen::MatrixXd a, b;
  kernels::serial::spmm(g, xm, a);
  kernels::omp::spmm(g, xm, b);
  CHECK(a == b);
}

TEST_CASE("spmm matches a dense product") {
  const Graph g = testutil::random_graph(40, 0.2, 8);
  Rng rng(2);
  Eigen::MatrixXd x(40, 4);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.normal();
  Eigen::MatrixXd y;
  kernels::spmm(g, x, y);
  CHECK((y - testutil::dense_adjacency(g) * x).cwiseAbs().maxCoeff() < 1e-12);
}
