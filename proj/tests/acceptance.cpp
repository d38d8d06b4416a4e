// Acceptance run: one PASS/FAIL line per criterion. Exit status reflects the
// hard criteria; the end-to-end trend check is reported but soft.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fairge/fairness.hpp"
#include "fairge/pipeline.hpp"
#include "fairge/spectral.hpp"
#include "fairge/synthetic.hpp"
#include "fairge/theorem_lab.hpp"
#include "fixtures.hpp"
#include "helpers.hpp"

using namespace fairge;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

bool report(int id, const char* name, const Outcome& o, bool soft = false) {
  std::printf("%s [%d] %s%s: %s\n", o.pass ? "PASS" : "FAIL", id, name, soft ? " (soft)" : "", o.detail.c_str());
  std::fflush(stdout);
  return o.pass || soft;
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// 1. Limits at k = 40 on the seeded suite.
Outcome theorem_convergence(const std::vector<LabCase>& suite, std::vector<AlignmentSeries>& thm1_series) {
  const auto t0 = Clock::now();
  double worst = 0.0, worst_gap = 0.0;
  bool shape_ok = suite.size() >= 20;
  for (const auto& c : suite) {
    const auto oracle = dense_eigendecomposition(c.graph);
    shape_ok = shape_ok && c.graph.n() >= 20 && c.graph.n() <= 200 && !is_bipartite(c.graph) &&
               oracle.eigenvalues[0] >= 1.5 * std::abs(oracle.eigenvalues[1]);
    for (const Variant v : kAllVariants) {
      const auto s = limit_check(v, c.graph, c.input, 40);
      if (v == Variant::thm3) {
        worst_gap = std::max(worst_gap, s.tail_gap());
      } else {
        worst = std::max(worst, std::isnan(s.tail_residual()) ? INFINITY : s.tail_residual());
      }
      if (v == Variant::thm1) thm1_series.push_back(s);
    }
  }
  const double t = seconds_since(t0);
  return {shape_ok && worst <= 1e-6 && worst_gap <= 1e-6 && t < 30.0,
          fmt("%zu graphs, max residual %.2e (<= 1e-6), max thm3 gap %.2e (<= 1e-6), %.2f s (< 30 s)", suite.size(),
              worst, worst_gap, t)};
}

// 2. Empirical decay rate against |lambda_2| / |lambda_1|.
Outcome decay_rate(const std::vector<LabCase>& suite, const std::vector<AlignmentSeries>& series) {
  std::size_t eligible = 0, within = 0;
  double worst = 0.0;
  for (std::size_t i = 0; i < suite.size(); ++i) {
    const auto d = estimate_decay_rate(series[i]);
    if (!d.estimable || d.decades < 4.0) continue;
    const auto oracle = dense_eigendecomposition(suite[i].graph);
    const double ratio = std::abs(oracle.eigenvalues[1]) / std::abs(oracle.eigenvalues[0]);
    const double rel = std::abs(d.empirical - ratio) / ratio;
    worst = std::max(worst, rel);
    ++eligible;
    if (rel <= 0.1) ++within;
  }
  const auto k3 = limit_check(Variant::thm1, testutil::triangle(), LabInput{Eigen::Vector3d(1, 0, 1), {}}, 40);
  const auto dk3 = estimate_decay_rate(k3);
  const bool anchor = dk3.estimable && std::abs(std::abs(dk3.predicted) - 0.5) < 1e-12 &&
                      std::abs(dk3.empirical - 0.5) <= 0.05;
  return {eligible > 0 && within == eligible && anchor,
          fmt("%zu/%zu graphs spanning >= 4 decades within 10%% (worst %.2f%%); K3 empirical %.6f vs 0.5", within,
              eligible, 100.0 * worst, dk3.empirical)};
}

// 3. Bound with repeated dominant eigenvalue.
Outcome multiplicity() {
  std::size_t holds = 0, total = 0;
  double min_margin = INFINITY;
  for (const auto& c : clique_suite()) {
    const auto b = multiplicity_bound_check(c.graph, c.input.padded(), 40);
    ++total;
    if (b.holds && !b.inconclusive) ++holds;
    min_margin = std::min(min_margin, b.lhs - b.rhs);
  }
  const Graph g = testutil::two_triangles();
  const auto probe = multiplicity_bound_check(g, Eigen::VectorXd::Ones(6), 5);
  const auto eq = multiplicity_bound_check(g, probe.basis.rowwise().sum(), 40);
  const double gap = std::abs(eq.lhs - eq.rhs);
  return {total == 10 && holds == total && gap <= 1e-8,
          fmt("%zu/%zu clique layouts hold (min lhs - rhs %.3e, slack 1e-8); equality case |lhs - rhs| = %.2e", holds,
              total, min_margin, gap)};
}

// 4. Lanczos against the dense oracle.
Outcome eigensolver() {
  const auto t0 = Clock::now();
  Rng rng(2024);
  double worst_eig = 0.0, worst_sub = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 20 + rng.below(181);
    const std::size_t m = 1 + rng.below(10);
    const double p = rng.uniform(3.0, 12.0) / static_cast<double>(n);
    const Graph g = testutil::random_graph(n, p, 500 + static_cast<std::uint64_t>(trial));
    const auto got = top_m_eigenpairs(g, m);
    const Eigen::MatrixXd a = testutil::dense_adjacency(g);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a);
    std::vector<Eigen::Index> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = static_cast<Eigen::Index>(i);
    std::stable_sort(order.begin(), order.end(), [&](Eigen::Index x, Eigen::Index y) {
      return std::abs(es.eigenvalues()[x]) > std::abs(es.eigenvalues()[y]);
    });
    Eigen::MatrixXd want(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(m));
    for (std::size_t i = 0; i < m; ++i) {
      const double ref = std::abs(es.eigenvalues()[order[i]]);
      worst_eig = std::max(worst_eig, std::abs(std::abs(got.eigenvalues[static_cast<Eigen::Index>(i)]) - ref) / ref);
      want.col(static_cast<Eigen::Index>(i)) = es.eigenvectors().col(order[i]);
    }
    const Eigen::MatrixXd& q = got.eigenvectors;
    worst_sub = std::max(worst_sub, (want - q * (q.transpose() * want)).norm());
    // Signs as well as magnitudes.
    for (std::size_t i = 0; i < m; ++i) {
      const double ref = es.eigenvalues()[order[i]];
      worst_eig = std::max(worst_eig, std::abs(got.eigenvalues[static_cast<Eigen::Index>(i)] - ref) / std::abs(ref));
    }
  }
  const double t = seconds_since(t0);
  return {worst_eig <= 1e-8 && worst_sub <= 1e-6 && t < 10.0,
          fmt("50 graphs, max relative eigenvalue error %.2e (<= 1e-8), max subspace residual %.2e (<= 1e-6), "
              "%.2f s (< 10 s)",
              worst_eig, worst_sub, t)};
}

// 5. Finite differences on the 6-node fixture.
Outcome gradients() {
  const auto t0 = Clock::now();
  const auto f = testutil::six_node_fixture();
  const auto check = testutil::finite_difference_check(f.params, f.inputs, f.table.labels.labels, f.train);
  const double t = seconds_since(t0);
  return {check.worst_relative <= 1e-4 && t < 5.0,
          fmt("%zu tensors, %zu coordinates, worst relative error %.2e at %s (<= 1e-4), %.2f s (< 5 s)",
              check.tensors, check.coordinates, check.worst_relative, check.worst_tensor.c_str(), t)};
}

// Exact rational a / b.
struct Frac {
  __int128 num = 0, den = 1;
};

Frac add(Frac a, Frac b) { return {a.num * b.den + b.num * a.den, a.den * b.den}; }
Frac mul(Frac a, Frac b) { return {a.num * b.num, a.den * b.den}; }
double to_double(Frac a) { return static_cast<double>(static_cast<long double>(a.num) / static_cast<long double>(a.den)); }

// Population variance of the fractions, exactly.
double exact_variance(const std::vector<Frac>& r) {
  const auto k = static_cast<__int128>(r.size());
  Frac sum, sq;
  for (const Frac& x : r) {
    sum = add(sum, x);
    sq = add(sq, mul(x, x));
  }
  // E[x^2] - E[x]^2 = (k sq - sum^2) / k^2
  const Frac a{k * sq.num, sq.den};
  const Frac b = mul(sum, sum);
  Frac diff{a.num * b.den - b.num * a.den, a.den * b.den};
  diff.den *= k * k;
  return to_double(diff);
}

// 6. Metrics against counting oracles.
Outcome fairness_oracle() {
  Rng rng(77);
  std::size_t checked = 0, mismatches = 0, undefined_agree = 0;
  double worst_var = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 2 + rng.below(49);
    const int groups = trial % 2 == 0 ? 2 : 3 + static_cast<int>(rng.below(3));
    std::vector<int> yhat(n), y(n), s(n);
    for (std::size_t i = 0; i < n; ++i) {
      yhat[i] = static_cast<int>(rng.below(2));
      y[i] = static_cast<int>(rng.below(2));
      s[i] = static_cast<int>(rng.below(static_cast<std::uint64_t>(groups)));
    }
    std::vector<NodeId> idx;
    for (std::size_t i = 0; i < n; ++i) {
      if (rng.bernoulli(0.8)) idx.push_back(static_cast<NodeId>(i));
    }
    // Oracle: count per group by scanning every node.
    std::vector<long> members(static_cast<std::size_t>(groups)), pp(members.size()), pos(members.size()),
        tp(members.size());
    for (const NodeId node : idx) {
      const auto i = static_cast<std::size_t>(node);
      const auto g = static_cast<std::size_t>(s[i]);
      members[g] += 1;
      pp[g] += yhat[i];
      pos[g] += y[i];
      tp[g] += yhat[i] & y[i];
    }
    if (groups == 2) {
      const bool sp_defined = members[0] > 0 && members[1] > 0;
      const bool eo_defined = pos[0] > 0 && pos[1] > 0;
      if (sp_defined) {
        const double want = to_double({std::abs(static_cast<__int128>(pp[0]) * members[1] -
                                                static_cast<__int128>(pp[1]) * members[0]),
                                       static_cast<__int128>(members[0]) * members[1]});
        if (statistical_parity(yhat, s, idx) != want) ++mismatches;
        ++checked;
      } else {
        try {
          statistical_parity(yhat, s, idx);
          ++mismatches;
        } catch (const UndefinedMetricError&) {
          ++undefined_agree;
        }
      }
      if (eo_defined) {
        const double want = to_double({std::abs(static_cast<__int128>(tp[0]) * pos[1] -
                                                static_cast<__int128>(tp[1]) * pos[0]),
                                       static_cast<__int128>(pos[0]) * pos[1]});
        if (equal_opportunity(yhat, y, s, idx) != want) ++mismatches;
        ++checked;
      } else {
        try {
          equal_opportunity(yhat, y, s, idx);
          ++mismatches;
        } catch (const UndefinedMetricError&) {
          ++undefined_agree;
        }
      }
    } else {
      std::vector<Frac> rates, tprs;
      for (std::size_t g = 0; g < members.size(); ++g) {
        if (members[g] == 0) continue;
        rates.push_back({pp[g], members[g]});
        if (pos[g] > 0) tprs.push_back({tp[g], pos[g]});
      }
      if (rates.size() >= 2 && tprs.size() >= 2) {
        const auto got = multiclass_variance_metrics(yhat, y, s, idx, groups);
        const double want_sp = exact_variance(rates), want_eo = exact_variance(tprs);
        worst_var = std::max({worst_var, std::abs(got.delta_sp - want_sp), std::abs(got.delta_eo - want_eo)});
        if (got.delta_sp != want_sp || got.delta_eo != want_eo) ++mismatches;
        checked += 2;
      } else {
        try {
          multiclass_variance_metrics(yhat, y, s, idx, groups);
          ++mismatches;
        } catch (const UndefinedMetricError&) {
          ++undefined_agree;
        }
      }
    }
  }
  return {mismatches == 0 && checked >= 1000,
          fmt("1000 assignments, %zu metric values compared, %zu mismatches (max variance deviation %.1e), "
              "%zu undefined cases rejected by both",
              checked, mismatches, worst_var, undefined_agree)};
}

SyntheticSpec biased_sbm(std::uint64_t seed) {
  SyntheticSpec spec;
  spec.kind = GraphKind::sbm;
  spec.n = 400;
  spec.p_in = 0.05;
  spec.p_out = 0.01;
  spec.rho_s = 0.9;
  spec.label_rule = LabelRule::merit;
  spec.label_bias = 1.0;
  spec.seed = seed;
  return spec;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t h = v.size() / 2;
  return v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

// 7. Spectral truncation against its ablation on a biased SBM.
Outcome trend() {
  std::vector<double> sp_full, sp_abl, acc_full, acc_abl;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto data = gen_synthetic(biased_sbm(seed));
    TrainConfig config;
    config.seed = seed;
    config.missing_rate = 0.3;
    const auto full = run_experiment(data.graph, data.table, config, "biased_sbm");
    config.spectral_truncation = false;
    const auto abl = run_experiment(data.graph, data.table, config, "biased_sbm");
    sp_full.push_back(full.report.delta_sp);
    sp_abl.push_back(abl.report.delta_sp);
    acc_full.push_back(100.0 * full.report.accuracy);
    acc_abl.push_back(100.0 * abl.report.accuracy);
  }
  const double f = median(sp_full), a = median(sp_abl);
  const double af = median(acc_full), aa = median(acc_abl);
  return {f < a && std::abs(af - aa) <= 3.0,
          fmt("median dSP %.2f%% with truncation vs %.2f%% without (needs strictly lower); median acc %.2f%% vs %.2f%% "
              "(within 3 points)",
              f, a, af, aa)};
}

// 8. Reports are byte-identical apart from runtime_s.
Outcome determinism() {
  const auto data = gen_synthetic(biased_sbm(11));
  TrainConfig config;
  config.seed = 3;
  config.missing_rate = 0.3;
  config.epochs = 100;
  auto text = [&] {
    auto j = to_json(run_experiment(data.graph, data.table, config, "biased_sbm").report);
    j.erase("runtime_s");
    return j.dump(2);
  };
  const std::string a = text(), b = text();
  return {a == b, fmt("two runs, %zu-byte reports, %s", a.size(), a == b ? "identical" : "different")};
}

}  // namespace

int main() {
  bool ok = true;
  const auto suite = standard_suite();
  std::vector<AlignmentSeries> thm1;
  ok &= report(1, "theorem convergence suite", theorem_convergence(suite, thm1));
  ok &= report(2, "decay rate", decay_rate(suite, thm1));
  ok &= report(3, "multiplicity bound", multiplicity());
  ok &= report(4, "eigensolver oracle equivalence", eigensolver());
  ok &= report(5, "gradient correctness", gradients());
  ok &= report(6, "fairness metric oracle", fairness_oracle());
  ok &= report(7, "bias-mitigation trend", trend(), true);
  ok &= report(8, "determinism", determinism());
  return ok ? 0 : 1;
}
