#include "fairge/fairness.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "fairge/errors.hpp"

namespace fairge {

namespace {

void check_lengths(std::size_t a, std::size_t b, std::span<const NodeId> eval_idx) {
  if (a != b) throw DimensionError("fairness metric: input lengths differ");
  for (const NodeId i : eval_idx) {
    if (i < 0 || static_cast<std::size_t>(i) >= a) throw DimensionError("fairness metric: eval index out of range");
  }
}

struct Counts {
  double members = 0;
  double predicted_positive = 0;
  double positives = 0;
  double true_positives = 0;
};

std::map<int, Counts> tally(std::span<const int> yhat, std::span<const int> y, std::span<const int> s,
                            std::span<const NodeId> eval_idx) {
  std::map<int, Counts> groups;
  for (const NodeId node : eval_idx) {
    const auto i = static_cast<std::size_t>(node);
    auto& c = groups[s[i]];
    c.members += 1;
    if (yhat[i] == 1) c.predicted_positive += 1;
    if (!y.empty() && y[i] == 1) {
      c.positives += 1;
      if (yhat[i] == 1) c.true_positives += 1;
    }
  }
  return groups;
}

// Exact fraction of 128-bit integers, kept reduced with a positive
// denominator. Metrics are computed exactly and rounded once at the end.
struct Ratio {
  __int128 num = 0;
  __int128 den = 1;
};

struct RatioOverflow {};

__int128 gcd128(__int128 a, __int128 b) {
  if (a < 0) a = -a;
  while (b != 0) {
    const __int128 t = a % b;
    a = b;
    b = t < 0 ? -t : t;
  }
  return a;
}

__int128 mul_checked(__int128 a, __int128 b) {
  __int128 out;
  if (__builtin_mul_overflow(a, b, &out)) throw RatioOverflow{};
  return out;
}

__int128 add_checked(__int128 a, __int128 b) {
  __int128 out;
  if (__builtin_add_overflow(a, b, &out)) throw RatioOverflow{};
  return out;
}

Ratio reduce(Ratio r) {
  const __int128 g = gcd128(r.num, r.den);
  if (g > 1) {
    r.num /= g;
    r.den /= g;
  }
  return r;
}

Ratio operator+(Ratio a, Ratio b) {
  const __int128 g = gcd128(a.den, b.den);
  const __int128 bd = b.den / g;
  return reduce({add_checked(mul_checked(a.num, bd), mul_checked(b.num, a.den / g)), mul_checked(a.den, bd)});
}

Ratio operator-(Ratio a, Ratio b) { return a + Ratio{-b.num, b.den}; }
Ratio operator*(Ratio a, Ratio b) { return reduce({mul_checked(a.num, b.num), mul_checked(a.den, b.den)}); }

Ratio ratio(double count, double total) {
  return reduce({static_cast<__int128>(count), static_cast<__int128>(total)});
}

double to_double(Ratio r) {
  return static_cast<double>(static_cast<long double>(r.num) / static_cast<long double>(r.den));
}

double abs_difference(Ratio a, Ratio b) {
  try {
    const Ratio d = a - b;
    return to_double({d.num < 0 ? -d.num : d.num, d.den});
  } catch (const RatioOverflow&) {
    return static_cast<double>(std::fabs(static_cast<long double>(a.num) / static_cast<long double>(a.den) -
                                         static_cast<long double>(b.num) / static_cast<long double>(b.den)));
  }
}

// Population variance, (k sum r^2 - (sum r)^2) / k^2.
double population_variance(const std::vector<Ratio>& v) {
  try {
    Ratio sum, sq;
    for (const Ratio& r : v) {
      sum = sum + r;
      sq = sq + r * r;
    }
    const Ratio k{static_cast<__int128>(v.size()), 1};
    return to_double((k * sq - sum * sum) * Ratio{1, mul_checked(k.num, k.num)});
  } catch (const RatioOverflow&) {
    long double mean = 0;
    for (const Ratio& r : v) mean += static_cast<long double>(r.num) / static_cast<long double>(r.den);
    mean /= static_cast<long double>(v.size());
    long double var = 0;
    for (const Ratio& r : v) {
      const long double d = static_cast<long double>(r.num) / static_cast<long double>(r.den) - mean;
      var += d * d;
    }
    return static_cast<double>(var / static_cast<long double>(v.size()));
  }
}

void require_binary_groups(std::span<const int> s, std::span<const NodeId> eval_idx) {
  for (const NodeId i : eval_idx) {
    const int g = s[static_cast<std::size_t>(i)];
    if (g != 0 && g != 1) throw InputError("binary fairness metric needs sensitive values in {0, 1}");
  }
}

}  // namespace

double statistical_parity(std::span<const int> yhat, std::span<const int> s_true, std::span<const NodeId> eval_idx) {
  check_lengths(yhat.size(), s_true.size(), eval_idx);
  require_binary_groups(s_true, eval_idx);
  auto groups = tally(yhat, {}, s_true, eval_idx);
  if (groups[0].members == 0 || groups[1].members == 0) {
    throw UndefinedMetricError("statistical parity undefined: a sensitive group is empty");
  }
  return abs_difference(ratio(groups[0].predicted_positive, groups[0].members),
                        ratio(groups[1].predicted_positive, groups[1].members));
}

double equal_opportunity(std::span<const int> yhat, std::span<const int> y, std::span<const int> s_true,
                         std::span<const NodeId> eval_idx) {
  check_lengths(yhat.size(), s_true.size(), eval_idx);
  check_lengths(y.size(), s_true.size(), eval_idx);
  require_binary_groups(s_true, eval_idx);
  auto groups = tally(yhat, y, s_true, eval_idx);
  if (groups[0].positives == 0 || groups[1].positives == 0) {
    throw UndefinedMetricError("equal opportunity undefined: a sensitive group has no positive labels");
  }
  return abs_difference(ratio(groups[0].true_positives, groups[0].positives),
                        ratio(groups[1].true_positives, groups[1].positives));
}

MulticlassFairness multiclass_variance_metrics(std::span<const int> yhat, std::span<const int> y,
                                               std::span<const int> s_true, std::span<const NodeId> eval_idx,
                                               int num_groups) {
  check_lengths(yhat.size(), s_true.size(), eval_idx);
  check_lengths(y.size(), s_true.size(), eval_idx);
  const auto groups = tally(yhat, y, s_true, eval_idx);
  if (num_groups < 0) num_groups = groups.empty() ? 0 : groups.rbegin()->first + 1;

  MulticlassFairness out;
  std::vector<Ratio> rates;
  std::vector<Ratio> tprs;
  for (int g = 0; g < num_groups; ++g) {
    const auto it = groups.find(g);
    if (it == groups.end() || it->second.members == 0) {
      out.warnings.push_back("sensitive group " + std::to_string(g) + " is empty; excluded");
      continue;
    }
    rates.push_back(ratio(it->second.predicted_positive, it->second.members));
    if (it->second.positives == 0) {
      out.warnings.push_back("sensitive group " + std::to_string(g) + " has no positives; excluded from EO");
    } else {
      tprs.push_back(ratio(it->second.true_positives, it->second.positives));
    }
  }
  if (rates.size() < 2 || tprs.size() < 2) {
    throw UndefinedMetricError("variance fairness metrics need at least two usable sensitive groups");
  }
  out.delta_sp = population_variance(rates);
  out.delta_eo = population_variance(tprs);
  return out;
}

double accuracy(std::span<const int> yhat, std::span<const int> y, std::span<const NodeId> eval_idx) {
  check_lengths(yhat.size(), y.size(), eval_idx);
  if (eval_idx.empty()) throw UndefinedMetricError("accuracy over an empty index set");
  std::size_t correct = 0;
  for (const NodeId i : eval_idx) {
    if (yhat[static_cast<std::size_t>(i)] == y[static_cast<std::size_t>(i)]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(eval_idx.size());
}

GroupRates group_rates(std::span<const int> yhat, std::span<const int> y, std::span<const int> s_true,
                       std::span<const NodeId> eval_idx) {
  check_lengths(yhat.size(), s_true.size(), eval_idx);
  GroupRates out;
  for (const auto& [g, c] : tally(yhat, y, s_true, eval_idx)) {
    out.count[g] = static_cast<int>(c.members);
    out.positive_rate[g] = c.members > 0 ? c.predicted_positive / c.members : 0.0;
    out.true_positive_rate[g] = c.positives > 0 ? c.true_positives / c.positives : 0.0;
  }
  return out;
}

FairnessReport evaluate(std::span<const int> yhat, std::span<const int> y, std::span<const int> s_true,
                        std::span<const NodeId> eval_idx) {
  FairnessReport report;
  report.accuracy = accuracy(yhat, y, eval_idx);
  report.groups = group_rates(yhat, y, s_true, eval_idx);
  report.n_eval = eval_idx.size();
  const bool binary = std::all_of(eval_idx.begin(), eval_idx.end(), [&](NodeId i) {
    const int g = s_true[static_cast<std::size_t>(i)];
    return g == 0 || g == 1;
  });
  if (binary) {
    report.delta_sp = 100.0 * statistical_parity(yhat, s_true, eval_idx);
    report.delta_eo = 100.0 * equal_opportunity(yhat, y, s_true, eval_idx);
  } else {
    auto multi = multiclass_variance_metrics(yhat, y, s_true, eval_idx);
    report.delta_sp = 100.0 * multi.delta_sp;
    report.delta_eo = 100.0 * multi.delta_eo;
    report.warnings = std::move(multi.warnings);
  }
  return report;
}

nlohmann::json to_json(const FairnessReport& report) {
  nlohmann::json rates = nlohmann::json::object();
  for (const auto& [g, rate] : report.groups.positive_rate) {
    const auto key = std::to_string(g);
    rates[key] = {{"count", report.groups.count.at(g)},
                  {"positive_rate", rate},
                  {"tpr", report.groups.true_positive_rate.at(g)}};
  }
  nlohmann::json config = report.config;
  config["n_eval"] = report.n_eval;
  if (!report.warnings.empty()) config["warnings"] = report.warnings;
  return {{"dataset", report.dataset},
          {"missing_rate", report.missing_rate},
          {"seed", report.seed},
          {"acc", report.accuracy},
          {"d_sp", report.delta_sp},
          {"d_eo", report.delta_eo},
          {"group_rates", rates},
          {"config", config},
          {"runtime_s", report.runtime_s}};
}

}  // namespace fairge
