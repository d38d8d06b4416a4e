// Serial reference against the OpenMP kernels on random sparse graphs.
#include <benchmark/benchmark.h>

#include <utility>
#include <vector>

#include "fairge/kernels.hpp"
#include "fairge/rng.hpp"

using namespace fairge;

namespace {

// Erdos-Renyi style graph with about `avg_degree` neighbors per node.
Graph sparse_graph(std::size_t n, double avg_degree) {
  Rng rng(1);
  std::vector<std::pair<NodeId, NodeId>> edges;
  const auto m = static_cast<std::size_t>(avg_degree * static_cast<double>(n) / 2.0);
  edges.reserve(m);
  for (std::size_t e = 0; e < m; ++e) {
    edges.emplace_back(static_cast<NodeId>(rng.below(n)), static_cast<NodeId>(rng.below(n)));
  }
  return Graph::from_edges(n, edges);
}

template <bool Parallel>
void spmv(benchmark::State& state) {
  const Graph g = sparse_graph(static_cast<std::size_t>(state.range(0)), 16.0);
  std::vector<double> x(g.n(), 1.0), y(g.n());
  for (auto _ : state) {
    if constexpr (Parallel) kernels::omp::spmv(g, x, y);
    else kernels::serial::spmv(g, x, y);
    benchmark::DoNotOptimize(y.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(2 * g.edge_count()));
}

template <bool Parallel>
void spmm(benchmark::State& state) {
  const Graph g = sparse_graph(static_cast<std::size_t>(state.range(0)), 16.0);
  const Eigen::MatrixXd x = Eigen::MatrixXd::Ones(static_cast<Eigen::Index>(g.n()), 16);
  Eigen::MatrixXd y(x.rows(), x.cols());
  for (auto _ : state) {
    if constexpr (Parallel) kernels::omp::spmm(g, x, y);
    else kernels::serial::spmm(g, x, y);
    benchmark::DoNotOptimize(y.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(2 * g.edge_count() * 16));
}

}  // namespace

BENCHMARK(spmv<false>)->Name("spmv/serial")->RangeMultiplier(8)->Range(1 << 12, 1 << 18);
BENCHMARK(spmv<true>)->Name("spmv/omp")->RangeMultiplier(8)->Range(1 << 12, 1 << 18);
BENCHMARK(spmm<false>)->Name("spmm/serial")->RangeMultiplier(8)->Range(1 << 12, 1 << 18);
BENCHMARK(spmm<true>)->Name("spmm/omp")->RangeMultiplier(8)->Range(1 << 12, 1 << 18);

BENCHMARK_MAIN();
