#include "fairge/pipeline.hpp"

#include <chrono>

#include "fairge/encoding.hpp"
#include "fairge/errors.hpp"
#include "fairge/rng.hpp"
#include "fairge/spectral.hpp"

namespace fairge {

ExperimentResult run_experiment(const Graph& g, const NodeTable& table, const TrainConfig& config,
                                const std::string& dataset) {
  const auto start = std::chrono::steady_clock::now();
  config.validate();
  const std::size_t n = g.n();
  if (table.attributes.n() != n || table.sensitive.n() != n || table.labels.n() != n) {
    throw DimensionError("graph and node table disagree on n");
  }

  ExperimentResult out;
  out.masked = table.sensitive.missing_count() == 0
                   ? apply_missing_mask(table.sensitive, config.missing_rate, derive_seed(config.seed, kMaskStream))
                   : table.sensitive;
  if (out.masked.present_count() == 0) throw InputError("every sensitive value is hidden");

  const std::size_t train_size = config.train_size == 0 ? max_train_size(n) : config.train_size;
  out.split = make_split(n, train_size, derive_seed(config.seed, kSplitStream));

  const PaddedAttributes padded = zero_pad(table.attributes, out.masked);
  ModelInputs inputs;
  if (config.spectral_truncation) {
    LanczosOptions lanczos;
    lanczos.seed = derive_seed(config.seed, kEigenStream);
    const auto m = std::min<std::size_t>(static_cast<std::size_t>(config.m), n);
    inputs = prepare_inputs(g, padded, top_m_eigenpairs(g, m, lanczos), config);
  } else {
    inputs = prepare_multi_hop_inputs(g, padded, config);
  }

  const ModelDims dims = dims_for(config, static_cast<int>(inputs.features.cols()));
  out.training = train(inputs, table.labels.labels, out.split, config,
                       init_params(dims, derive_seed(config.seed, kInitStream)));

  const std::vector<int> yhat = predict(out.training.params, inputs);
  out.report = evaluate(yhat, table.labels.labels, table.sensitive.values, out.split.test);
  out.report.dataset = dataset;
  out.report.missing_rate = config.missing_rate;
  out.report.seed = config.seed;
  out.report.config = to_json(config);
  out.report.config["best_epoch"] = out.training.best_epoch;
  out.report.runtime_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

}  // namespace fairge
