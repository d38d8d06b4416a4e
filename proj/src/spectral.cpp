#include "fairge/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include <Eigen/Eigenvalues>

#include "fairge/errors.hpp"
#include "fairge/kernels.hpp"
#include "fairge/rng.hpp"

namespace fairge {

Eigen::VectorXd matvec(const Graph& g, const Eigen::VectorXd& x) {
  if (static_cast<std::size_t>(x.size()) != g.n()) {
    throw DimensionError("matvec: vector length " + std::to_string(x.size()) +
                         " does not match n=" + std::to_string(g.n()));
  }
  Eigen::VectorXd y(x.size());
  kernels::spmv(g, {x.data(), g.n()}, {y.data(), g.n()});
  return y;
}

namespace {

// First index whose magnitude is within rounding of the maximum.
Eigen::Index leading_index(const Eigen::Ref<const Eigen::VectorXd>& v) {
  const double top = v.cwiseAbs().maxCoeff();
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (std::abs(v[i]) >= top * (1.0 - 1e-8)) return i;
  }
  return 0;
}

void fix_sign(Eigen::Ref<Eigen::VectorXd> v) {
  if (v.size() > 0 && v[leading_index(v)] < 0) v = -v;
}

// Replaces the columns of `basis` (orthonormal, spanning one repeated
// eigenvalue) by the Gram-Schmidt orthonormalization of the projections of
// e_0, e_1, ... onto their span. Done in the c-dimensional coordinates.
void canonical_basis(Eigen::MatrixXd& basis) {
  const Eigen::Index c = basis.cols();
  if (c < 2) return;
  const double max_row = basis.rowwise().norm().maxCoeff();
  Eigen::MatrixXd coords(c, c);
  Eigen::Index found = 0;
  for (Eigen::Index i = 0; i < basis.rows() && found < c; ++i) {
    Eigen::VectorXd w = basis.row(i).transpose();
    for (int pass = 0; pass < 2; ++pass) {
      for (Eigen::Index k = 0; k < found; ++k) w -= coords.col(k).dot(w) * coords.col(k);
    }
    const double norm = w.norm();
    if (norm > 1e-3 * max_row) coords.col(found++) = w / norm;
  }
  if (found == c) basis = basis * coords;
}

struct RitzResult {
  Eigen::VectorXd values;
  Eigen::MatrixXd vectors;
};

// Orthonormalizes w against the first `cols` columns of V and all of Q
// (classical Gram-Schmidt, applied twice). Returns the V coefficients.
Eigen::VectorXd orthogonalize(Eigen::VectorXd& w, const Eigen::MatrixXd& V, Eigen::Index cols,
                              const Eigen::MatrixXd& Q) {
  Eigen::VectorXd coeffs = Eigen::VectorXd::Zero(cols);
  for (int pass = 0; pass < 2; ++pass) {
    if (Q.cols() > 0) w -= Q * (Q.transpose() * w);
    if (cols > 0) {
      const Eigen::VectorXd h = V.leftCols(cols).transpose() * w;
      w -= V.leftCols(cols) * h;
      coeffs += h;
    }
  }
  return coeffs;
}

Eigen::VectorXd random_orthogonal(Rng& rng, const Eigen::MatrixXd& V, Eigen::Index cols,
                                  const Eigen::MatrixXd& Q) {
  const Eigen::Index n = V.rows();
  for (int attempt = 0; attempt < 16; ++attempt) {
    Eigen::VectorXd w(n);
    for (Eigen::Index i = 0; i < n; ++i) w[i] = rng.normal();
    orthogonalize(w, V, cols, Q);
    const double norm = w.norm();
    if (norm > 1e-8) return w / norm;
  }
  throw NumericalError("could not draw a vector orthogonal to the Krylov basis");
}

// Magnitude-descending order with positive-first ties. Exact comparison;
// only used to pick which Ritz values are wanted.
std::vector<Eigen::Index> magnitude_order(const Eigen::VectorXd& values) {
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(values.size()));
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](Eigen::Index a, Eigen::Index b) {
    const double ma = std::abs(values[a]);
    const double mb = std::abs(values[b]);
    if (ma != mb) return ma > mb;
    return values[a] > values[b];
  });
  return idx;
}

// Thick-restart Lanczos on A restricted to the orthogonal complement of the
// columns of `locked`. Returns the `wanted` largest-magnitude Ritz pairs.
RitzResult krylov_solve(const Graph& g, Eigen::Index wanted, Eigen::Index max_krylov,
                        const Eigen::MatrixXd& locked, const LanczosOptions& options, Rng& rng) {
  const auto n = static_cast<Eigen::Index>(g.n());
  const Eigen::Index dim = n - locked.cols();
  wanted = std::min(wanted, dim);
  const Eigen::Index kmax = std::min(dim, std::max(max_krylov, wanted + 1));
  if (wanted <= 0) return {};

  double max_degree = 0;
  for (std::size_t i = 0; i < g.n(); ++i) max_degree = std::max(max_degree, static_cast<double>(g.degree(i)));
  const double breakdown_tol = 1e-12 * std::max(1.0, max_degree);

  Eigen::MatrixXd V = Eigen::MatrixXd::Zero(n, kmax + 1);
  Eigen::MatrixXd H = Eigen::MatrixXd::Zero(kmax + 1, kmax + 1);

  // All-ones start, perturbed so that no eigenspace is missed by symmetry.
  Eigen::VectorXd start(n);
  for (Eigen::Index i = 0; i < n; ++i) start[i] = 1.0 + 0.1 * rng.normal();
  orthogonalize(start, V, 0, locked);
  if (start.norm() < 1e-8) {
    start = random_orthogonal(rng, V, 0, locked);
  }
  V.col(0) = start.normalized();

  Eigen::Index basis_size = 1;  // columns of V in use
  Eigen::Index next = 0;        // next column to multiply by A
  std::vector<double> residuals;
  Eigen::VectorXd w(n);

  for (int cycle = 0;; ++cycle) {
    bool exhausted = false;
    Eigen::Index k = kmax;
    for (Eigen::Index c = next; c < kmax; ++c) {
      kernels::spmv(g, {V.col(c).data(), g.n()}, {w.data(), g.n()});
      const Eigen::VectorXd h = orthogonalize(w, V, basis_size, locked);
      H.col(c).head(basis_size) = h;
      H.row(c).head(basis_size) = h.transpose();
      if (basis_size == dim) {
        exhausted = true;
        k = c + 1;
        break;
      }
      const double beta = w.norm();
      if (beta > breakdown_tol) {
        V.col(basis_size) = w / beta;
        H(basis_size, c) = H(c, basis_size) = beta;
      } else {
        V.col(basis_size) = random_orthogonal(rng, V, basis_size, locked);
        H(basis_size, c) = H(c, basis_size) = 0.0;
      }
      ++basis_size;
    }

    const Eigen::MatrixXd T = 0.5 * (H.topLeftCorner(k, k) + H.topLeftCorner(k, k).transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ritz(T);
    const Eigen::VectorXd& theta = ritz.eigenvalues();
    const Eigen::MatrixXd& Y = ritz.eigenvectors();
    const auto order = magnitude_order(theta);
    const double beta_k = exhausted ? 0.0 : H(k, k - 1);
    const double scale = std::max(1.0, std::abs(theta[order.front()]));

    residuals.assign(static_cast<std::size_t>(wanted), 0.0);
    bool converged = true;
    for (Eigen::Index i = 0; i < wanted; ++i) {
      residuals[static_cast<std::size_t>(i)] = std::abs(beta_k * Y(k - 1, order[static_cast<std::size_t>(i)]));
      if (residuals[static_cast<std::size_t>(i)] > options.tol * scale) converged = false;
    }

    if (converged || exhausted) {
      RitzResult out;
      out.values.resize(wanted);
      out.vectors.resize(n, wanted);
      for (Eigen::Index i = 0; i < wanted; ++i) {
        const Eigen::Index j = order[static_cast<std::size_t>(i)];
        out.values[i] = theta[j];
        out.vectors.col(i) = V.leftCols(k) * Y.col(j);
      }
      return out;
    }
    if (cycle + 1 >= options.max_iter) {
      throw ConvergenceError("Lanczos did not converge in " + std::to_string(options.max_iter) +
                                 " restarts",
                             residuals);
    }

    // Thick restart: keep the leading Ritz vectors plus the residual direction.
    const Eigen::Index keep = std::min(wanted + (kmax - wanted) / 2, kmax - 1);
    Eigen::MatrixXd kept(n, keep);
    for (Eigen::Index i = 0; i < keep; ++i) kept.col(i) = V.leftCols(k) * Y.col(order[static_cast<std::size_t>(i)]);
    const Eigen::VectorXd residual_dir = V.col(k);
    V.setZero();
    H.setZero();
    V.leftCols(keep) = kept;
    V.col(keep) = residual_dir;
    for (Eigen::Index i = 0; i < keep; ++i) {
      const Eigen::Index j = order[static_cast<std::size_t>(i)];
      H(i, i) = theta[j];
      H(keep, i) = H(i, keep) = beta_k * Y(k - 1, j);
    }
    basis_size = keep + 1;
    next = keep;
  }
}

// True when `a` should precede `b` in the truncation ordering.
bool precedes(double a, double b, double tie) {
  const double ma = std::abs(a);
  const double mb = std::abs(b);
  if (ma > mb + tie) return true;
  if (mb > ma + tie) return false;
  return a > 0 && b < 0 && std::abs(a - b) > tie;
}

}  // namespace

void canonicalize(SpectralTruncation& trunc, double tie_tol) {
  const Eigen::Index m = trunc.eigenvalues.size();
  if (m == 0) return;
  const double scale = std::max(1.0, trunc.eigenvalues.cwiseAbs().maxCoeff());
  const double tie = tie_tol * scale;

  std::vector<Eigen::Index> idx(static_cast<std::size_t>(m));
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](Eigen::Index a, Eigen::Index b) {
    return std::abs(trunc.eigenvalues[a]) > std::abs(trunc.eigenvalues[b]);
  });

  Eigen::VectorXd values(m);
  Eigen::MatrixXd vectors(trunc.eigenvectors.rows(), m);
  for (Eigen::Index i = 0; i < m; ++i) {
    values[i] = trunc.eigenvalues[idx[static_cast<std::size_t>(i)]];
    vectors.col(i) = trunc.eigenvectors.col(idx[static_cast<std::size_t>(i)]);
  }

  // Walk magnitude clusters; split each into the positive and negative
  // eigenvalue, canonicalize each repeated eigenvalue's basis.
  struct Entry {
    double value;
    Eigen::VectorXd vector;
    Eigen::Index lead;
  };
  std::vector<Entry> out;
  out.reserve(static_cast<std::size_t>(m));
  Eigen::Index start = 0;
  while (start < m) {
    Eigen::Index end = start + 1;
    while (end < m && std::abs(values[end - 1]) - std::abs(values[end]) <= tie) ++end;
    std::vector<Entry> positive;
    std::vector<Entry> negative;
    for (Eigen::Index i = start; i < end; ++i) {
      auto& bucket = values[i] > -tie ? positive : negative;
      bucket.push_back({values[i], vectors.col(i), 0});
    }
    for (auto* bucket : {&positive, &negative}) {
      if (bucket->empty()) continue;
      Eigen::MatrixXd basis(vectors.rows(), static_cast<Eigen::Index>(bucket->size()));
      for (std::size_t i = 0; i < bucket->size(); ++i) basis.col(static_cast<Eigen::Index>(i)) = (*bucket)[i].vector;
      canonical_basis(basis);
      for (std::size_t i = 0; i < bucket->size(); ++i) {
        auto& e = (*bucket)[i];
        e.vector = basis.col(static_cast<Eigen::Index>(i));
        fix_sign(e.vector);
        e.lead = leading_index(e.vector);
      }
      std::stable_sort(bucket->begin(), bucket->end(),
                       [](const Entry& a, const Entry& b) { return a.lead < b.lead; });
      for (auto& e : *bucket) out.push_back(std::move(e));
    }
    start = end;
  }

  for (Eigen::Index i = 0; i < m; ++i) {
    trunc.eigenvalues[i] = out[static_cast<std::size_t>(i)].value;
    trunc.eigenvectors.col(i) = out[static_cast<std::size_t>(i)].vector;
  }
}

SpectralTruncation top_m_eigenpairs(const Graph& g, std::size_t m, const LanczosOptions& options) {
  const std::size_t n = g.n();
  if (n == 0) throw InputError("top_m_eigenpairs: empty graph");
  if (m < 1 || m > n) {
    throw InputError("top_m_eigenpairs: m=" + std::to_string(m) + " must lie in [1, " + std::to_string(n) + "]");
  }
  Rng rng(options.seed);
  const auto wanted = static_cast<Eigen::Index>(m);
  const Eigen::Index max_krylov = std::min<Eigen::Index>(static_cast<Eigen::Index>(n), 4 * wanted + 20);

  RitzResult found = krylov_solve(g, wanted, max_krylov, Eigen::MatrixXd(static_cast<Eigen::Index>(n), 0), options, rng);
  const double scale = std::max(1.0, std::abs(found.values[0]));
  const double tie = kEigenTieTol * scale;

  // Completeness pass: the largest-magnitude eigenvalue of A on the
  // complement of the found vectors must not beat the m-th one.
  for (std::size_t pass = 0; pass <= m && m < n; ++pass) {
    RitzResult extra = krylov_solve(g, 1, 4 + 20, found.vectors, options, rng);
    if (extra.values.size() == 0) break;
    const double mu = extra.values[0];
    if (!precedes(mu, found.values[wanted - 1], tie)) break;
    found.values[wanted - 1] = mu;
    found.vectors.col(wanted - 1) = extra.vectors.col(0);
    const auto order = magnitude_order(found.values);
    RitzResult sorted{Eigen::VectorXd(wanted), Eigen::MatrixXd(found.vectors.rows(), wanted)};
    for (Eigen::Index i = 0; i < wanted; ++i) {
      sorted.values[i] = found.values[order[static_cast<std::size_t>(i)]];
      sorted.vectors.col(i) = found.vectors.col(order[static_cast<std::size_t>(i)]);
    }
    found = std::move(sorted);
  }

  SpectralTruncation trunc;
  trunc.eigenvalues.resize(wanted);
  trunc.eigenvectors.resize(static_cast<Eigen::Index>(n), wanted);
  std::vector<double> residuals(m);
  Eigen::VectorXd ap(static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < wanted; ++i) {
    Eigen::VectorXd p = found.vectors.col(i).normalized();
    kernels::spmv(g, {p.data(), n}, {ap.data(), n});
    const double rayleigh = p.dot(ap);
    residuals[static_cast<std::size_t>(i)] = (ap - rayleigh * p).norm();
    trunc.eigenvalues[i] = rayleigh;
    trunc.eigenvectors.col(i) = p;
  }
  const double worst = *std::max_element(residuals.begin(), residuals.end());
  if (worst > 100.0 * options.tol * scale) {
    throw ConvergenceError("Lanczos eigenpairs failed the residual check", residuals);
  }
  canonicalize(trunc, kEigenTieTol);
  return trunc;
}

SpectralTruncation dense_eigendecomposition(const Graph& g, std::size_t cap) {
  const std::size_t n = g.n();
  if (n > cap) {
    throw InputError("dense oracle limited to n <= " + std::to_string(cap) + ", got n=" + std::to_string(n));
  }
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    for (const NodeId j : g.neighbors(i)) a(static_cast<Eigen::Index>(i), j) = 1.0;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(a);
  if (solver.info() != Eigen::Success) throw NumericalError("dense eigensolver failed");
  SpectralTruncation trunc{solver.eigenvalues(), solver.eigenvectors()};
  canonicalize(trunc, kEigenTieTol);
  return trunc;
}

double spectral_gap(const SpectralTruncation& trunc) {
  if (trunc.m() < 2) throw InputError("spectral_gap needs at least two eigenvalues");
  const double top = std::abs(trunc.eigenvalues[0]);
  if (top == 0.0) throw DegenerateInputError("spectral_gap undefined for lambda_1 = 0");
  return std::abs(trunc.eigenvalues[1]) / top;
}

}  // namespace fairge
