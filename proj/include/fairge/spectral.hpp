#pragma once

#include <cstddef>
#include <cstdint>

#include <Eigen/Core>

#include "fairge/graph.hpp"

namespace fairge {

// The m largest-magnitude eigenpairs of the adjacency matrix.
//
// Ordering: descending |lambda|; ties put the positive eigenvalue first, then
// the vector whose largest-magnitude entry comes first. Inside a repeated
// eigenvalue the basis is canonicalized (pivoted Gram-Schmidt on the
// projected unit vectors), so e.g. disjoint components give per-component
// vectors. Each vector's largest-magnitude entry is positive.
struct SpectralTruncation {
  Eigen::VectorXd eigenvalues;
  Eigen::MatrixXd eigenvectors;  // n x m, column i pairs with eigenvalues[i]

  std::size_t m() const noexcept { return static_cast<std::size_t>(eigenvalues.size()); }
  std::size_t n() const noexcept { return static_cast<std::size_t>(eigenvectors.rows()); }
};

Eigen::VectorXd matvec(const Graph& g, const Eigen::VectorXd& x);

struct LanczosOptions {
  double tol = 1e-10;      // eigen-residual, relative to max(1, |lambda_1|)
  int max_iter = 1000;     // restart cycles
  std::uint64_t seed = 0;  // start-vector perturbation and breakdown vectors
};

// Thick-restart Lanczos with full reorthogonalization followed by a deflated
// completeness pass that recovers copies of repeated eigenvalues a single
// Krylov sequence cannot see.
SpectralTruncation top_m_eigenpairs(const Graph& g, std::size_t m, const LanczosOptions& options = {});

inline constexpr std::size_t kDenseOracleCap = 512;

// Full spectrum by a dense symmetric solver, same ordering and signs.
SpectralTruncation dense_eigendecomposition(const Graph& g, std::size_t cap = kDenseOracleCap);

// |lambda_2| / |lambda_1|.
double spectral_gap(const SpectralTruncation& trunc);

// Applies the ordering, repeated-eigenvalue basis and sign conventions in
// place. Exposed so that every solver can share them.
void canonicalize(SpectralTruncation& trunc, double tie_tol);

// Relative tolerance under which two eigenvalue magnitudes count as equal.
inline constexpr double kEigenTieTol = 1e-9;

}  // namespace fairge
