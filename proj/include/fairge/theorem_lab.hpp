#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

#include "fairge/errors.hpp"
#include "fairge/graph.hpp"
#include "fairge/spectral.hpp"

namespace fairge {

// Which alignment sequence to follow under normalized propagation:
//   lemma1  cos(A^k H,  H)
//   thm1    cos(A^k H', H')
//   thm2    cos(A^k H,  H')
//   thm3    cos(A^k H'(0), H), alongside cos(A^k H, H)
// H is the complete sensitive column, H' the zero-padded one.
enum class Variant { lemma1, thm1, thm2, thm3 };

std::string_view to_string(Variant v);
Variant parse_variant(std::string_view name);
inline constexpr Variant kAllVariants[] = {Variant::lemma1, Variant::thm1, Variant::thm2, Variant::thm3};

// Two or more eigenvalues share the dominant magnitude with the same sign;
// no single limit exists. Use multiplicity_bound_check.
class RepeatedDominantError : public DegenerateInputError {
 public:
  using DegenerateInputError::DegenerateInputError;
};

struct LabInput {
  Eigen::VectorXd h;          // complete sensitive column
  std::vector<bool> present;  // disclosure mask; empty means all present

  Eigen::VectorXd padded() const;
  static LabInput from(const SensitiveColumn& s);
};

struct AlignmentSeries {
  Variant variant = Variant::thm1;
  std::vector<int> k;
  std::vector<double> cos_k;
  std::vector<double> reference;  // thm3 only: cos(A^k H, H)
  std::vector<double> residuals;  // |cos_k - limit|, NaN when degenerate
  double limit = 0.0;
  // Bipartite graphs: the series has separate limits on even and odd k.
  bool oscillating = false;
  double limit_even = 0.0;
  double limit_odd = 0.0;
  // Source has no component along p1, so the premise of the limit fails.
  bool degenerate = false;
  SpectralTruncation spectrum;  // leading eigenpairs used for the limit
  Eigen::VectorXd gamma;        // P^T H'
  Eigen::VectorXd alpha;        // P^T H

  double limit_at(int k) const { return oscillating && k % 2 != 0 ? limit_odd : limit; }
  // |lambda_conv| / |lambda_1|, where lambda_conv is the largest magnitude
  // that still decays (lambda_3 for bipartite inputs).
  double convergence_ratio() const;
  double tail_residual() const { return residuals.back(); }
  double tail_gap() const;  // thm3: |cos_k - reference| at k_max
};

struct LabOptions {
  LanczosOptions lanczos{1e-12, 1000, 0};
  double tie_tol = 1e-9;      // relative, for repeated dominant magnitude
  double zero_tol = 1e-12;    // relative, for gamma_1 == 0
};

AlignmentSeries limit_check(Variant variant, const Graph& g, const LabInput& input, int k_max,
                            const LabOptions& options = {});

struct DecayEstimate {
  bool estimable = false;
  double empirical = 0.0;  // geometric mean residual ratio
  double predicted = 0.0;  // signed lambda_2 / lambda_1
  std::size_t window_begin = 0;
  std::size_t window_length = 0;
  double decades = 0.0;    // log10(max / min) over the window
};

inline constexpr double kResidualFloor = 1e-12;

DecayEstimate estimate_decay_rate(const AlignmentSeries& series, const SpectralTruncation& trunc);
DecayEstimate estimate_decay_rate(const AlignmentSeries& series);

struct MultiplicityBound {
  int multiplicity = 0;
  double lambda1 = 0.0;
  double lhs = 0.0;  // cos(A^k H', H') at k_max
  double rhs = 0.0;  // (1/sqrt(j)) sum_i cos(H', p_i)
  bool holds = false;
  bool inconclusive = false;  // H' orthogonal to the dominant eigenspace
  Eigen::VectorXd gamma;
  Eigen::MatrixXd basis;  // canonical orthonormal basis of the dominant eigenspace
};

inline constexpr double kBoundSlack = 1e-8;

MultiplicityBound multiplicity_bound_check(const Graph& g, const Eigen::VectorXd& h_prime, int k_max);

// One graph plus sensitive column to verify.
struct LabCase {
  std::string id;
  Graph graph;
  LabInput input;
};

// Seeded connected, non-bipartite graphs with 20 <= n <= 200 and
// lambda_1 / |lambda_2| >= min_gap, each with a 0/1 sensitive column of
// which `missing_rate` is hidden. The standard suite uses dense two-block
// SBMs, whose second eigenvalue stands clear of the rest of the spectrum.
std::vector<LabCase> standard_suite(std::size_t count = 24, std::uint64_t seed = 0, double min_gap = 1.5,
                                    double missing_rate = 0.3);
// Sparse Erdos-Renyi and SBM graphs. Here lambda_2 sits at the edge of the
// bulk spectrum, so the limits still hold but a finite window of hops
// underestimates the asymptotic decay rate.
std::vector<LabCase> sparse_suite(std::size_t count = 24, std::uint64_t seed = 0, double min_gap = 1.5,
                                  double missing_rate = 0.3);

// Equal-sized disjoint cliques: j copies of K_a plus optional smaller ones.
std::vector<LabCase> clique_suite();

struct VerifyRow {
  std::string variant;
  std::string graph_id;
  std::size_t n = 0;
  int k = 0;
  double cos_k = 0.0;
  double limit = 0.0;
  double residual = 0.0;
};

struct CheckOutcome {
  std::string theorem;
  std::string graph_id;
  std::string status;  // pass | fail | skipped
  std::string detail;
  double value = 0.0;
  double bound = 0.0;
};

struct VerifyResult {
  std::vector<VerifyRow> rows;
  std::vector<CheckOutcome> checks;

  bool passed() const;
  nlohmann::json summary() const;
};

// A series passes when its residual at k_max is at most max(tol, 10 r^k_max)
// with r the convergence ratio.
double pass_bound(double ratio, int k_max, double tol = 1e-6);

VerifyResult run_verification(const std::vector<LabCase>& cases, const std::vector<Variant>& variants, int k_max,
                              double tol = 1e-6);

std::string to_csv(const std::vector<VerifyRow>& rows);

}  // namespace fairge
