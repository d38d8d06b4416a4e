#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "fairge/graph.hpp"

namespace fairge {

// All metrics condition on the ground-truth sensitive values, never on the
// mask; masking only changes what the model sees.

// |P(yhat=1 | s=0) - P(yhat=1 | s=1)| over eval_idx. Fraction, not percent.
double statistical_parity(std::span<const int> yhat, std::span<const int> s_true,
                          std::span<const NodeId> eval_idx);

// |TPR_0 - TPR_1| over eval_idx.
double equal_opportunity(std::span<const int> yhat, std::span<const int> y, std::span<const int> s_true,
                         std::span<const NodeId> eval_idx);

struct MulticlassFairness {
  double delta_sp = 0.0;  // population variance of per-group positive rates
  double delta_eo = 0.0;  // population variance of per-group TPRs
  std::vector<std::string> warnings;
};

// Groups are the sensitive class ids 0..num_groups-1 (num_groups < 0: one
// past the largest id seen). Empty groups are skipped with a warning.
MulticlassFairness multiclass_variance_metrics(std::span<const int> yhat, std::span<const int> y,
                                               std::span<const int> s_true, std::span<const NodeId> eval_idx,
                                               int num_groups = -1);

double accuracy(std::span<const int> yhat, std::span<const int> y, std::span<const NodeId> eval_idx);

struct GroupRates {
  std::map<int, double> positive_rate;
  std::map<int, double> true_positive_rate;
  std::map<int, int> count;
};

GroupRates group_rates(std::span<const int> yhat, std::span<const int> y, std::span<const int> s_true,
                       std::span<const NodeId> eval_idx);

struct FairnessReport {
  std::string dataset;
  double missing_rate = 0.0;
  std::uint64_t seed = 0;
  double accuracy = 0.0;  // fraction
  double delta_sp = 0.0;  // percent
  double delta_eo = 0.0;  // percent
  GroupRates groups;
  std::size_t n_eval = 0;
  nlohmann::json config = nlohmann::json::object();
  double runtime_s = 0.0;
  std::vector<std::string> warnings;
};

// Accuracy plus binary metrics for two groups, variance metrics otherwise.
FairnessReport evaluate(std::span<const int> yhat, std::span<const int> y, std::span<const int> s_true,
                        std::span<const NodeId> eval_idx);

// Exact keys: dataset, missing_rate, seed, acc, d_sp, d_eo, group_rates,
// config, runtime_s.
nlohmann::json to_json(const FairnessReport& report);

}  // namespace fairge
