#include "fairge/theorem_lab.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "fairge/encoding.hpp"
#include "fairge/kernels.hpp"
#include "fairge/rng.hpp"
#include "fairge/synthetic.hpp"

namespace fairge {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// cos(A^k x, target) for k = 0..k_max, rescaling to unit norm every hop.
std::vector<double> alignment_series(const Graph& g, const Eigen::VectorXd& x, const Eigen::VectorXd& target,
                                     int k_max) {
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(k_max) + 1);
  Eigen::VectorXd cur = x / x.norm();
  Eigen::VectorXd next(cur.size());
  for (int k = 0; k <= k_max; ++k) {
    out.push_back(cosine_alignment(cur, target));
    if (k == k_max) break;
    kernels::spmv(g, std::span<const double>(cur.data(), static_cast<std::size_t>(cur.size())),
                  std::span<double>(next.data(), static_cast<std::size_t>(next.size())));
    const double norm = next.norm();
    if (norm == 0.0) throw DegenerateInputError("propagated vector vanished at hop " + std::to_string(k + 1));
    cur = next / norm;
  }
  return out;
}

int sign_of(double x) { return x > 0.0 ? 1 : (x < 0.0 ? -1 : 0); }

std::string fmt(double x) {
  std::ostringstream os;
  os.precision(6);
  os << x;
  return os.str();
}

}  // namespace

std::string_view to_string(Variant v) {
  switch (v) {
    case Variant::lemma1: return "lemma1";
    case Variant::thm1: return "thm1";
    case Variant::thm2: return "thm2";
    case Variant::thm3: return "thm3";
  }
  return "?";
}

Variant parse_variant(std::string_view name) {
  for (const Variant v : kAllVariants) {
    if (to_string(v) == name) return v;
  }
  throw InputError("unknown variant '" + std::string(name) + "' (expected lemma1, thm1, thm2 or thm3)");
}

Eigen::VectorXd LabInput::padded() const {
  Eigen::VectorXd out = h;
  if (present.empty()) return out;
  if (present.size() != static_cast<std::size_t>(h.size())) throw DimensionError("presence mask length differs from n");
  for (Eigen::Index i = 0; i < h.size(); ++i) {
    if (!present[static_cast<std::size_t>(i)]) out[i] = 0.0;
  }
  return out;
}

LabInput LabInput::from(const SensitiveColumn& s) {
  LabInput in;
  in.h.resize(static_cast<Eigen::Index>(s.n()));
  for (std::size_t i = 0; i < s.n(); ++i) in.h[static_cast<Eigen::Index>(i)] = s.values[i];
  in.present = s.present;
  return in;
}

double AlignmentSeries::convergence_ratio() const {
  const auto& ev = spectrum.eigenvalues;
  const Eigen::Index next = oscillating ? 2 : 1;
  if (ev.size() <= next) return 0.0;
  return std::abs(ev[next]) / std::abs(ev[0]);
}

double AlignmentSeries::tail_gap() const {
  if (reference.empty()) return 0.0;
  return std::abs(cos_k.back() - reference.back());
}

AlignmentSeries limit_check(Variant variant, const Graph& g, const LabInput& input, int k_max,
                            const LabOptions& options) {
  if (k_max < 0) throw InputError("k_max must be nonnegative");
  if (g.n() < 2) throw InputError("limit_check needs at least two nodes");
  if (static_cast<std::size_t>(input.h.size()) != g.n()) throw DimensionError("sensitive vector length differs from n");

  const Eigen::VectorXd h = input.h;
  const Eigen::VectorXd hp = input.padded();
  Eigen::VectorXd source;
  Eigen::VectorXd target;
  switch (variant) {
    case Variant::lemma1: source = h; target = h; break;
    case Variant::thm1: source = hp; target = hp; break;
    case Variant::thm2: source = h; target = hp; break;
    case Variant::thm3: source = hp; target = h; break;
  }
  if (target.norm() == 0.0) throw DegenerateInputError("target vector is zero");
  if (source.norm() == 0.0) throw DegenerateInputError("source vector is zero");

  AlignmentSeries s;
  s.variant = variant;
  s.spectrum = top_m_eigenpairs(g, std::min<std::size_t>(g.n(), 3), options.lanczos);
  const Eigen::VectorXd& ev = s.spectrum.eigenvalues;
  const double mag1 = std::abs(ev[0]);
  if (mag1 == 0.0) throw DegenerateInputError("graph has no edges");
  const auto ties = [&](Eigen::Index i) { return i < ev.size() && std::abs(ev[i]) >= mag1 * (1.0 - options.tie_tol); };
  if (ties(1)) {
    if (ev[1] > 0.0 || ties(2)) {
      throw RepeatedDominantError("dominant eigenvalue magnitude " + fmt(mag1) +
                                  " is repeated; use multiplicity_bound_check");
    }
    s.oscillating = true;
  }

  s.gamma = s.spectrum.eigenvectors.transpose() * hp;
  s.alpha = s.spectrum.eigenvectors.transpose() * h;

  const int k_count = k_max + 1;
  for (int k = 0; k < k_count; ++k) s.k.push_back(k);
  s.cos_k = alignment_series(g, source, target, k_max);
  if (variant == Variant::thm3) s.reference = alignment_series(g, h, target, k_max);

  const Eigen::VectorXd p1 = s.spectrum.eigenvectors.col(0);
  const double c1 = p1.dot(source);
  const double scale = options.zero_tol * source.norm();
  if (!s.oscillating) {
    if (std::abs(c1) <= scale) {
      s.degenerate = true;
    } else {
      // A^k x / |A^k x| tends to sign(lambda_1^k c1) p1; lambda_1 > 0 here.
      const double direction = sign_of(c1) * (ev[0] > 0.0 ? 1.0 : -1.0);
      s.limit = cosine_alignment(direction * p1, target);
    }
  } else {
    const Eigen::VectorXd p2 = s.spectrum.eigenvectors.col(1);
    const Eigen::VectorXd plus = c1 * p1;
    const Eigen::VectorXd minus = p2.dot(source) * p2;
    if ((plus + minus).norm() <= scale || (plus - minus).norm() <= scale) {
      s.degenerate = true;
    } else {
      s.limit_even = cosine_alignment(plus + minus, target);
      s.limit_odd = cosine_alignment(plus - minus, target);
      s.limit = s.limit_even;
    }
  }
  if (s.degenerate) s.limit = s.limit_even = s.limit_odd = kNaN;

  s.residuals.resize(s.cos_k.size());
  for (std::size_t i = 0; i < s.cos_k.size(); ++i) {
    s.residuals[i] = s.degenerate ? kNaN : std::abs(s.cos_k[i] - s.limit_at(s.k[i]));
  }
  return s;
}

DecayEstimate estimate_decay_rate(const AlignmentSeries& series, const SpectralTruncation& trunc) {
  DecayEstimate est;
  if (trunc.m() >= 2 && trunc.eigenvalues[0] != 0.0) est.predicted = trunc.eigenvalues[1] / trunc.eigenvalues[0];
  if (series.degenerate) return est;

  // Largest run of consecutive residuals above the floor.
  std::size_t best_begin = 0, best_len = 0;
  for (std::size_t i = 0; i < series.residuals.size();) {
    if (!(series.residuals[i] > kResidualFloor)) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < series.residuals.size() && series.residuals[j] > kResidualFloor) ++j;
    if (j - i > best_len) {
      best_begin = i;
      best_len = j - i;
    }
    i = j;
  }
  est.window_begin = best_begin;
  est.window_length = best_len;
  if (best_len < 5) return est;

  // Geometric mean of successive ratios telescopes to the endpoint ratio.
  const double first = series.residuals[best_begin];
  const double last = series.residuals[best_begin + best_len - 1];
  est.empirical = std::pow(last / first, 1.0 / static_cast<double>(best_len - 1));
  const auto window = std::span(series.residuals).subspan(best_begin, best_len);
  const auto [lo, hi] = std::minmax_element(window.begin(), window.end());
  est.decades = std::log10(*hi / *lo);
  est.estimable = true;
  return est;
}

DecayEstimate estimate_decay_rate(const AlignmentSeries& series) {
  return estimate_decay_rate(series, series.spectrum);
}

MultiplicityBound multiplicity_bound_check(const Graph& g, const Eigen::VectorXd& h_prime, int k_max) {
  if (k_max < 0) throw InputError("k_max must be nonnegative");
  if (static_cast<std::size_t>(h_prime.size()) != g.n()) throw DimensionError("H' length differs from n");
  const double norm = h_prime.norm();
  if (norm == 0.0) throw DegenerateInputError("H' is zero");

  const SpectralTruncation dense = dense_eigendecomposition(g);
  MultiplicityBound out;
  out.lambda1 = dense.eigenvalues[0];
  const double mag1 = std::abs(out.lambda1);
  if (mag1 == 0.0) throw DegenerateInputError("graph has no edges");
  int j = 0;
  while (j < dense.eigenvalues.size() && std::abs(dense.eigenvalues[j]) >= mag1 * (1.0 - kEigenTieTol)) {
    if (dense.eigenvalues[j] < 0.0) {
      throw DegenerateInputError("dominant magnitude is attained with both signs (bipartite component)");
    }
    ++j;
  }
  if (j < 2) throw InputError("dominant eigenvalue is simple; use limit_check");
  out.multiplicity = j;
  out.basis = dense.eigenvectors.leftCols(j);
  out.gamma = out.basis.transpose() * h_prime;
  if (out.gamma.cwiseAbs().maxCoeff() <= 1e-12 * norm) {
    out.inconclusive = true;
    return out;
  }
  Eigen::VectorXd x = propagate_k_hop(g, h_prime, k_max, /*normalize=*/true);
  out.lhs = cosine_alignment(x, h_prime);
  out.rhs = out.gamma.sum() / norm / std::sqrt(static_cast<double>(j));
  out.holds = out.lhs >= out.rhs - kBoundSlack;
  return out;
}

namespace {

// Shared filter: connected, non-bipartite, lambda_1 >= min_gap |lambda_2|,
// and a nonzero padded sensitive column.
std::vector<LabCase> build_suite(std::size_t count, std::uint64_t seed, double min_gap, double missing_rate,
                                 bool planted) {
  std::vector<LabCase> cases;
  Rng rng(seed);
  for (std::uint64_t attempt = 0; cases.size() < count; ++attempt) {
    if (attempt > 100 * count) throw ConvergenceError("could not build the verification suite", {});
    SyntheticSpec spec;
    spec.n = 20 + static_cast<std::size_t>(rng.below(181));
    spec.seed = rng.next_u64();
    spec.rho_s = 0.8;
    spec.noise_dim = 0;
    spec.merit_dim = 1;
    std::string kind;
    if (planted) {
      spec.kind = GraphKind::sbm;
      spec.blocks = 2;
      spec.p_in = rng.uniform(0.5, 0.9);
      spec.p_out = spec.p_in * rng.uniform(0.15, 0.4);
      kind = "sbm";
    } else if (attempt % 2 == 0) {
      spec.kind = GraphKind::erdos_renyi;
      spec.p = std::min(1.0, rng.uniform(3.0, 12.0) / static_cast<double>(spec.n));
      kind = "er";
    } else {
      spec.kind = GraphKind::sbm;
      spec.blocks = 2 + static_cast<int>(rng.below(2));
      spec.p_in = std::min(1.0, rng.uniform(6.0, 16.0) / static_cast<double>(spec.n));
      spec.p_out = spec.p_in * rng.uniform(0.3, 0.7);
      kind = "sparse_sbm";
    }
    SyntheticData data = gen_synthetic(spec);
    if (component_count(data.graph) != 1 || is_bipartite(data.graph)) continue;
    const SpectralTruncation dense = dense_eigendecomposition(data.graph);
    if (dense.eigenvalues[0] < min_gap * std::abs(dense.eigenvalues[1])) continue;

    LabCase c;
    c.id = kind + "_" + std::to_string(cases.size()) + "_n" + std::to_string(spec.n);
    c.input = LabInput::from(apply_missing_mask(data.table.sensitive, missing_rate, derive_seed(spec.seed, 7)));
    if (c.input.h.norm() == 0.0 || c.input.padded().norm() == 0.0) continue;
    c.graph = std::move(data.graph);
    cases.push_back(std::move(c));
  }
  return cases;
}

}  // namespace

std::vector<LabCase> standard_suite(std::size_t count, std::uint64_t seed, double min_gap, double missing_rate) {
  return build_suite(count, seed, min_gap, missing_rate, /*planted=*/true);
}

std::vector<LabCase> sparse_suite(std::size_t count, std::uint64_t seed, double min_gap, double missing_rate) {
  return build_suite(count, seed, min_gap, missing_rate, /*planted=*/false);
}

std::vector<LabCase> clique_suite() {
  const std::vector<std::vector<int>> layouts = {
      {3, 3}, {4, 4}, {5, 5}, {3, 3, 3}, {4, 4, 2}, {5, 5, 3, 2}, {6, 6, 6}, {4, 4, 4, 4}, {7, 7, 5}, {3, 3, 3, 3, 1}};
  std::vector<LabCase> cases;
  for (std::size_t i = 0; i < layouts.size(); ++i) {
    SyntheticSpec spec;
    spec.kind = GraphKind::disjoint_cliques;
    spec.n = 0;
    spec.clique_sizes = layouts[i];
    spec.seed = i;
    SyntheticData data = gen_synthetic(spec);
    LabCase c;
    c.id = "cliques";
    for (const int size : layouts[i]) c.id += "_" + std::to_string(size);
    // Indicator of the first clique plus half of the second: unequal projections.
    c.input.h = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(data.graph.n()));
    const int a = layouts[i][0];
    for (int v = 0; v < a; ++v) c.input.h[v] = 1.0;
    for (int v = a; v < a + layouts[i][1]; v += 2) c.input.h[v] = 1.0;
    c.graph = std::move(data.graph);
    cases.push_back(std::move(c));
  }
  return cases;
}

double pass_bound(double ratio, int k_max, double tol) { return std::max(tol, 10.0 * std::pow(ratio, k_max)); }

bool VerifyResult::passed() const {
  return std::none_of(checks.begin(), checks.end(), [](const CheckOutcome& c) { return c.status == "fail"; });
}

nlohmann::json VerifyResult::summary() const {
  nlohmann::json theorems = nlohmann::json::object();
  for (const auto& c : checks) {
    auto& t = theorems[c.theorem];
    if (t.is_null()) t = {{"checked", 0}, {"passed", 0}, {"failed", 0}, {"skipped", 0}, {"failures", nlohmann::json::array()}};
    if (c.status == "skipped") {
      t["skipped"] = t["skipped"].get<int>() + 1;
      continue;
    }
    t["checked"] = t["checked"].get<int>() + 1;
    if (c.status == "pass") {
      t["passed"] = t["passed"].get<int>() + 1;
    } else {
      t["failed"] = t["failed"].get<int>() + 1;
      t["failures"].push_back({{"graph_id", c.graph_id}, {"detail", c.detail}, {"value", c.value}, {"bound", c.bound}});
    }
  }
  for (auto& [name, t] : theorems.items()) t["pass"] = t["failed"].get<int>() == 0;
  return {{"pass", passed()}, {"theorems", theorems}};
}

VerifyResult run_verification(const std::vector<LabCase>& cases, const std::vector<Variant>& variants, int k_max,
                              double tol) {
  std::vector<VerifyResult> per_case(cases.size());

#pragma omp parallel for schedule(dynamic)
  for (std::size_t ci = 0; ci < cases.size(); ++ci) {
    const LabCase& c = cases[ci];
    VerifyResult& out = per_case[ci];
    const auto add_rows = [&](const std::string& name, const std::vector<double>& cos, const AlignmentSeries& s,
                              bool reference) {
      for (std::size_t i = 0; i < cos.size(); ++i) {
        const double lim = s.limit_at(s.k[i]);
        out.rows.push_back({name, c.id, c.graph.n(), s.k[i], cos[i], lim, reference ? std::abs(cos[i] - lim) : s.residuals[i]});
      }
    };
    try {
      for (const Variant v : variants) {
        const std::string name(to_string(v));
        AlignmentSeries s;
        try {
          s = limit_check(v, c.graph, c.input, k_max);
        } catch (const RepeatedDominantError&) {
          if (v != Variant::thm1) continue;
          const MultiplicityBound mb = multiplicity_bound_check(c.graph, c.input.padded(), k_max);
          CheckOutcome oc{"thm1.1", c.id, "pass", "", mb.lhs, mb.rhs};
          if (mb.inconclusive) {
            oc.status = "skipped";
            oc.detail = "H' orthogonal to the dominant eigenspace";
          } else if (!mb.holds) {
            oc.status = "fail";
            oc.detail = "lhs " + fmt(mb.lhs) + " < rhs " + fmt(mb.rhs);
          }
          out.rows.push_back({"thm1.1", c.id, c.graph.n(), k_max, mb.lhs, mb.rhs, mb.lhs - mb.rhs});
          out.checks.push_back(oc);
          continue;
        }
        add_rows(name, s.cos_k, s, false);
        if (v == Variant::thm3) add_rows("thm3_complete", s.reference, s, true);

        const double bound = pass_bound(s.convergence_ratio(), k_max, tol);
        CheckOutcome oc{name, c.id, "pass", "", s.degenerate ? 0.0 : s.tail_residual(), bound};
        if (s.degenerate) {
          oc.status = "skipped";
          oc.detail = "source has no component along the principal eigenvector";
        } else if (!(s.tail_residual() <= bound)) {
          oc.status = "fail";
          oc.detail = "residual " + fmt(s.tail_residual()) + " at k=" + std::to_string(k_max);
        } else if (v == Variant::thm3 && !(s.tail_gap() <= bound)) {
          oc.status = "fail";
          oc.value = s.tail_gap();
          oc.detail = "thm3 series gap " + fmt(s.tail_gap()) + " at k=" + std::to_string(k_max);
        }
        out.checks.push_back(oc);

        if (v == Variant::thm1) {
          const DecayEstimate d = estimate_decay_rate(s);
          const double predicted = std::abs(d.predicted);
          CheckOutcome dc{"thm1.2", c.id, "skipped", "", d.empirical, predicted};
          if (s.oscillating) {
            dc.detail = "bipartite input";
          } else if (!d.estimable || d.decades < 4.0) {
            dc.detail = "residuals span fewer than 4 decades";
          } else if (std::abs(d.empirical - predicted) <= 0.1 * predicted) {
            dc.status = "pass";
          } else {
            dc.status = "fail";
            dc.detail = "empirical rate " + fmt(d.empirical) + " vs predicted " + fmt(predicted);
          }
          out.checks.push_back(dc);
        }
      }
    } catch (const std::exception& e) {
      out.checks.push_back({"error", c.id, "fail", e.what(), 0.0, 0.0});
    }
  }

  VerifyResult all;
  for (auto& r : per_case) {
    all.rows.insert(all.rows.end(), r.rows.begin(), r.rows.end());
    all.checks.insert(all.checks.end(), r.checks.begin(), r.checks.end());
  }
  return all;
}

std::string to_csv(const std::vector<VerifyRow>& rows) {
  std::ostringstream os;
  os.precision(17);
  os << "variant,graph_id,n,k,cos_k,limit,residual\n";
  for (const auto& r : rows) {
    os << r.variant << ',' << r.graph_id << ',' << r.n << ',' << r.k << ',' << r.cos_k << ',' << r.limit << ','
       << r.residual << '\n';
  }
  return os.str();
}

}  // namespace fairge
