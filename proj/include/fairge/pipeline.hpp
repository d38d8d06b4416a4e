#pragma once

#include <string>

#include "fairge/fairness.hpp"
#include "fairge/graph.hpp"
#include "fairge/model.hpp"

namespace fairge {

struct ExperimentResult {
  FairnessReport report;
  TrainResult training;
  Split split;
  SensitiveColumn masked;
};

// Mask, split, zero-pad, encode, train, and evaluate on the test split.
// Fairness is measured against the ground-truth sensitive values. If the
// table already has hidden entries, they are kept and no further mask is drawn.
ExperimentResult run_experiment(const Graph& g, const NodeTable& table, const TrainConfig& config,
                                const std::string& dataset);

// Stage seeds derived from the run seed.
enum SeedStream : std::uint64_t { kMaskStream = 11, kSplitStream = 12, kEigenStream = 13, kInitStream = 14 };

}  // namespace fairge
