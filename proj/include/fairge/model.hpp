#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

#include "fairge/encoding.hpp"
#include "fairge/graph.hpp"
#include "fairge/spectral.hpp"

namespace fairge {

struct TrainConfig {
  int m = 8;              // retained eigenpairs
  int k_hops = 2;         // hops for the multi-hop branch of the no-truncation ablation
  int layers = 1;         // stacked fusion layers
  int hidden = 64;
  int heads = 1;
  int d_m = 16;           // eigenvalue token width
  int ffn_hidden = 0;     // 0 means 2 * d_m
  double lr = 0.01;
  double weight_decay = 5e-4;
  int epochs = 300;
  std::uint64_t seed = 0;
  double missing_rate = 0.0;
  bool sensitive_in_features = true;
  bool spectral_truncation = true;  // false: A^k H'(0) replaces the spectral branch
  std::size_t train_size = 0;       // 0 means every node outside val/test

  void validate() const;
};

nlohmann::json to_json(const TrainConfig& config);
// Unknown keys are rejected; missing keys keep their defaults.
TrainConfig train_config_from_json(const nlohmann::json& j, TrainConfig base = {});

struct ModelDims {
  int d_in = 0;
  int d_m = 0;
  int heads = 1;
  int ffn_hidden = 0;
  int hidden = 0;
  int layers = 1;

  int d_k() const { return d_m / heads; }
  bool operator==(const ModelDims&) const = default;
};

ModelDims dims_for(const TrainConfig& config, int d_in);

// Every trainable tensor. Vectors are stored as 1 x k (or k x 1) matrices so
// that optimizers, checks and checkpoints can treat all tensors alike.
struct ModelParams {
  ModelDims dims;
  Eigen::MatrixXd ln1_gamma, ln1_beta;         // 1 x d_m
  std::vector<Eigen::MatrixXd> w_q, w_k, w_v;  // per head, d_m x d_k
  Eigen::MatrixXd ln2_gamma, ln2_beta;         // 1 x d_m
  Eigen::MatrixXd ffn_w1, ffn_b1;              // d_m x f, 1 x f
  Eigen::MatrixXd ffn_w2, ffn_b2;              // f x d_m, 1 x d_m
  std::vector<Eigen::MatrixXd> gate_w;         // per layer, d_m x 1
  std::vector<Eigen::MatrixXd> gate_b;         // per layer, 1 x 1
  std::vector<Eigen::MatrixXd> fuse_w;         // per layer, (width_prev + d_in) x hidden
  Eigen::MatrixXd cls_w, cls_b;                // hidden x 2, 1 x 2

  template <typename F>
  void visit(F&& f) {
    visit_impl(*this, f);
  }
  template <typename F>
  void visit(F&& f) const {
    visit_impl(*this, f);
  }

  std::size_t parameter_count() const;

 private:
  template <typename Self, typename F>
  static void visit_impl(Self& self, F& f) {
    f("ln1_gamma", self.ln1_gamma);
    f("ln1_beta", self.ln1_beta);
    for (std::size_t h = 0; h < self.w_q.size(); ++h) {
      f("w_q." + std::to_string(h), self.w_q[h]);
      f("w_k." + std::to_string(h), self.w_k[h]);
      f("w_v." + std::to_string(h), self.w_v[h]);
    }
    f("ln2_gamma", self.ln2_gamma);
    f("ln2_beta", self.ln2_beta);
    f("ffn_w1", self.ffn_w1);
    f("ffn_b1", self.ffn_b1);
    f("ffn_w2", self.ffn_w2);
    f("ffn_b2", self.ffn_b2);
    for (std::size_t l = 0; l < self.fuse_w.size(); ++l) {
      f("gate_w." + std::to_string(l), self.gate_w[l]);
      f("gate_b." + std::to_string(l), self.gate_b[l]);
      f("fuse_w." + std::to_string(l), self.fuse_w[l]);
    }
    f("cls_w", self.cls_w);
    f("cls_b", self.cls_b);
  }
};

// Correctly shaped, all zero.
ModelParams zero_params(const ModelDims& dims);
// Glorot-uniform weights, unit LN scales, zero biases.
ModelParams init_params(const ModelDims& dims, std::uint64_t seed);

// Everything the network reads that does not change during training.
struct ModelInputs {
  Eigen::MatrixXd features;         // H'(0), n x d_in
  Eigen::MatrixXd eigenvectors;     // P_ST, n x m
  Eigen::MatrixXd position_enc;     // e_PE, m x d_m
  Eigen::MatrixXd spectral_coeffs;  // P_ST^T H'(0), m x d_in
  Eigen::MatrixXd multi_hop;        // ablation branch, n x d_in
  bool spectral = true;

  Eigen::Index n() const { return features.rows(); }
};

ModelInputs prepare_inputs(const Graph& g, const PaddedAttributes& padded, const SpectralTruncation& trunc,
                           const TrainConfig& config);
// Ablation inputs: no eigendecomposition, multi-hop propagation instead.
ModelInputs prepare_multi_hop_inputs(const Graph& g, const PaddedAttributes& padded, const TrainConfig& config);

// Single attention head, Softmax(Q K^T / sqrt(d_k)) V.
Eigen::MatrixXd attention(const Eigen::MatrixXd& x, const Eigen::MatrixXd& w_q, const Eigen::MatrixXd& w_k,
                          const Eigen::MatrixXd& w_v, Eigen::MatrixXd* weights = nullptr);

Eigen::MatrixXd layer_norm(const Eigen::MatrixXd& x, const Eigen::MatrixXd& gamma, const Eigen::MatrixXd& beta);

// Pre-LN block: e_MHA = MHA(LN(e_PE)) + e_PE, e_GT = FFN(LN(e_MHA)) + e_MHA.
Eigen::MatrixXd transformer_block(const Eigen::MatrixXd& e_pe, const ModelParams& params);

// One gate per eigen-token: g = e_GT w + b.
Eigen::VectorXd gate_values(const Eigen::MatrixXd& e_gt, const Eigen::MatrixXd& gate_w, const Eigen::MatrixXd& gate_b);

// P diag(g) P^T H.
Eigen::MatrixXd spectral_filter(const Eigen::MatrixXd& p, const Eigen::VectorXd& g, const Eigen::MatrixXd& h);

// ReLU((H_prev || H_train) W).
Eigen::MatrixXd fuse_layer(const Eigen::MatrixXd& h_prev, const Eigen::MatrixXd& h_train, const Eigen::MatrixXd& w);

// n x 2 logits.
Eigen::MatrixXd forward(const ModelParams& params, const ModelInputs& inputs);

struct LossAndGradients {
  double loss = 0.0;
  ModelParams grads;
};

// loss_scale * mean cross-entropy over `train_idx`, with reverse-mode
// gradients for every tensor.
LossAndGradients loss_and_gradients(const ModelParams& params, const ModelInputs& inputs,
                                    std::span<const int> labels, std::span<const NodeId> train_idx,
                                    double loss_scale = 1.0);

double loss_only(const ModelParams& params, const ModelInputs& inputs, std::span<const int> labels,
                 std::span<const NodeId> train_idx);

// argmax per row; ties go to class 0.
std::vector<int> predict(const Eigen::MatrixXd& logits);
std::vector<int> predict(const ModelParams& params, const ModelInputs& inputs);

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;
  double val_accuracy = 0.0;
};

struct TrainResult {
  ModelParams params;  // parameters of the best-validation epoch
  std::vector<EpochRecord> history;
  int best_epoch = 0;
};

// Full-batch Adam with L2 weight decay added to the gradient.
TrainResult train(const ModelInputs& inputs, std::span<const int> labels, const Split& split,
                  const TrainConfig& config);
TrainResult train(const ModelInputs& inputs, std::span<const int> labels, const Split& split,
                  const TrainConfig& config, ModelParams initial);

// Versioned JSON checkpoint with per-tensor shape headers.
nlohmann::json checkpoint_to_json(const ModelParams& params);
ModelParams checkpoint_from_json(const nlohmann::json& j, const ModelDims& expected);

}  // namespace fairge
