#include "fairge/model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "fairge/errors.hpp"
#include "fairge/fairness.hpp"
#include "fairge/rng.hpp"

namespace fairge {

namespace {

using Mat = Eigen::MatrixXd;

constexpr double kLayerNormEps = 1e-5;

Mat row_broadcast(const Mat& row, Eigen::Index rows) { return row.replicate(rows, 1); }

// --- layer norm -----------------------------------------------------------

struct LayerNormCache {
  Mat xhat;
  Eigen::VectorXd inv_std;
};

Mat layer_norm_forward(const Mat& x, const Mat& gamma, const Mat& beta, LayerNormCache* cache) {
  const double d = static_cast<double>(x.cols());
  Mat xhat(x.rows(), x.cols());
  Eigen::VectorXd inv_std(x.rows());
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const double mean = x.row(r).sum() / d;
    const double var = (x.row(r).array() - mean).square().sum() / d;
    inv_std[r] = 1.0 / std::sqrt(var + kLayerNormEps);
    xhat.row(r) = (x.row(r).array() - mean) * inv_std[r];
  }
  Mat y = (xhat.array() * row_broadcast(gamma, x.rows()).array()).matrix() + row_broadcast(beta, x.rows());
  if (cache) *cache = {std::move(xhat), std::move(inv_std)};
  return y;
}

// Returns dx; accumulates dgamma, dbeta.
Mat layer_norm_backward(const Mat& dy, const Mat& gamma, const LayerNormCache& cache, Mat& dgamma, Mat& dbeta) {
  const double d = static_cast<double>(dy.cols());
  dgamma += (dy.array() * cache.xhat.array()).colwise().sum().matrix();
  dbeta += dy.colwise().sum();
  const Mat dxhat = (dy.array() * row_broadcast(gamma, dy.rows()).array()).matrix();
  Mat dx(dy.rows(), dy.cols());
  for (Eigen::Index r = 0; r < dy.rows(); ++r) {
    const double mean_dxhat = dxhat.row(r).sum() / d;
    const double mean_dxhat_xhat = dxhat.row(r).dot(cache.xhat.row(r)) / d;
    dx.row(r) = cache.inv_std[r] *
                (dxhat.row(r).array() - mean_dxhat - cache.xhat.row(r).array() * mean_dxhat_xhat).matrix();
  }
  return dx;
}

// --- attention ------------------------------------------------------------

struct HeadCache {
  Mat q, k, v, probs;
};

Mat softmax_rows(const Mat& s) {
  Mat p(s.rows(), s.cols());
  for (Eigen::Index r = 0; r < s.rows(); ++r) {
    const double top = s.row(r).maxCoeff();
    p.row(r) = (s.row(r).array() - top).exp().matrix();
    p.row(r) /= p.row(r).sum();
  }
  return p;
}

Mat head_forward(const Mat& x, const Mat& w_q, const Mat& w_k, const Mat& w_v, HeadCache* cache) {
  if (x.cols() != w_q.rows() || w_q.cols() != w_k.cols() || x.cols() != w_k.rows() || x.cols() != w_v.rows()) {
    throw DimensionError("attention: projection shapes do not match the input width");
  }
  Mat q = x * w_q;
  Mat k = x * w_k;
  Mat v = x * w_v;
  const double scale = 1.0 / std::sqrt(static_cast<double>(w_q.cols()));
  Mat probs = softmax_rows((q * k.transpose()) * scale);
  Mat out = probs * v;
  if (cache) *cache = {std::move(q), std::move(k), std::move(v), std::move(probs)};
  return out;
}

void head_backward(const Mat& dout, const Mat& x, const Mat& w_q, const Mat& w_k, const Mat& w_v,
                   const HeadCache& c, Mat& dx, Mat& dw_q, Mat& dw_k, Mat& dw_v) {
  const double scale = 1.0 / std::sqrt(static_cast<double>(w_q.cols()));
  const Mat dprobs = dout * c.v.transpose();
  const Mat dv = c.probs.transpose() * dout;
  const Eigen::VectorXd row_dot = (dprobs.array() * c.probs.array()).rowwise().sum();
  const Mat ds = (c.probs.array() * (dprobs.colwise() - row_dot).array()).matrix() * scale;
  const Mat dq = ds * c.k;
  const Mat dk = ds.transpose() * c.q;
  dw_q += x.transpose() * dq;
  dw_k += x.transpose() * dk;
  dw_v += x.transpose() * dv;
  dx += dq * w_q.transpose() + dk * w_k.transpose() + dv * w_v.transpose();
}

// --- GELU (erf form) ------------------------------------------------------

double gelu(double x) { return 0.5 * x * (1.0 + std::erf(x * std::numbers::sqrt2 / 2.0)); }

double gelu_grad(double x) {
  const double cdf = 0.5 * (1.0 + std::erf(x * std::numbers::sqrt2 / 2.0));
  const double pdf = std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
  return cdf + x * pdf;
}

// --- transformer block ----------------------------------------------------

struct BlockCache {
  LayerNormCache ln1, ln2;
  Mat z1, z2;
  std::vector<HeadCache> heads;
  Mat e_mha;
  Mat ffn_pre;  // before GELU
  Mat ffn_act;  // after GELU
};

Mat block_forward(const Mat& e_pe, const ModelParams& p, BlockCache* cache) {
  BlockCache local;
  BlockCache& c = cache ? *cache : local;
  const int heads = static_cast<int>(p.w_q.size());
  const int d_k = static_cast<int>(p.w_q.front().cols());
  if (e_pe.cols() != heads * d_k) throw DimensionError("transformer block: heads * d_k must equal d_m");

  c.z1 = layer_norm_forward(e_pe, p.ln1_gamma, p.ln1_beta, &c.ln1);
  Mat mha(e_pe.rows(), e_pe.cols());
  c.heads.resize(static_cast<std::size_t>(heads));
  for (int h = 0; h < heads; ++h) {
    const auto hs = static_cast<std::size_t>(h);
    mha.middleCols(h * d_k, d_k) = head_forward(c.z1, p.w_q[hs], p.w_k[hs], p.w_v[hs], &c.heads[hs]);
  }
  c.e_mha = mha + e_pe;
  c.z2 = layer_norm_forward(c.e_mha, p.ln2_gamma, p.ln2_beta, &c.ln2);
  c.ffn_pre = c.z2 * p.ffn_w1 + row_broadcast(p.ffn_b1, c.z2.rows());
  c.ffn_act = c.ffn_pre.unaryExpr(&gelu);
  return c.ffn_act * p.ffn_w2 + row_broadcast(p.ffn_b2, c.ffn_act.rows()) + c.e_mha;
}

// Accumulates parameter gradients for de_gt. e_PE carries no parameters.
void block_backward(const Mat& de_gt, const ModelParams& p, const BlockCache& c, ModelParams& g) {
  g.ffn_w2 += c.ffn_act.transpose() * de_gt;
  g.ffn_b2 += de_gt.colwise().sum();
  const Mat dact = de_gt * p.ffn_w2.transpose();
  const Mat dpre = (dact.array() * c.ffn_pre.unaryExpr(&gelu_grad).array()).matrix();
  g.ffn_w1 += c.z2.transpose() * dpre;
  g.ffn_b1 += dpre.colwise().sum();
  const Mat dz2 = dpre * p.ffn_w1.transpose();
  const Mat de_mha = de_gt + layer_norm_backward(dz2, p.ln2_gamma, c.ln2, g.ln2_gamma, g.ln2_beta);

  const int d_k = static_cast<int>(p.w_q.front().cols());
  Mat dz1 = Mat::Zero(c.z1.rows(), c.z1.cols());
  for (std::size_t h = 0; h < p.w_q.size(); ++h) {
    const Mat dout = de_mha.middleCols(static_cast<Eigen::Index>(h) * d_k, d_k);
    head_backward(dout, c.z1, p.w_q[h], p.w_k[h], p.w_v[h], c.heads[h], dz1, g.w_q[h], g.w_k[h], g.w_v[h]);
  }
  layer_norm_backward(dz1, p.ln1_gamma, c.ln1, g.ln1_gamma, g.ln1_beta);
}

// --- full network ---------------------------------------------------------

struct NetworkCache {
  BlockCache block;
  Mat e_gt;
  std::vector<Eigen::VectorXd> gates;
  std::vector<Mat> structural;  // H_train per layer
  std::vector<Mat> concat;      // (H_prev || H_train) per layer
  std::vector<Mat> pre;         // before ReLU
  std::vector<Mat> hidden;      // H^(l)
};

void check_inputs(const ModelParams& p, const ModelInputs& in) {
  if (in.features.cols() != p.dims.d_in) {
    throw DimensionError("model expects " + std::to_string(p.dims.d_in) + " input features, got " +
                         std::to_string(in.features.cols()));
  }
  if (in.spectral) {
    if (in.position_enc.cols() != p.dims.d_m) throw DimensionError("position encoding width differs from d_m");
    if (in.eigenvectors.rows() != in.n() || in.eigenvectors.cols() != in.position_enc.rows() ||
        in.spectral_coeffs.rows() != in.eigenvectors.cols() || in.spectral_coeffs.cols() != in.features.cols()) {
      throw DimensionError("spectral inputs have inconsistent shapes");
    }
  } else if (in.multi_hop.rows() != in.n() || in.multi_hop.cols() != in.features.cols()) {
    throw DimensionError("multi-hop inputs have inconsistent shapes");
  }
}

Mat network_forward(const ModelParams& p, const ModelInputs& in, NetworkCache& c) {
  check_inputs(p, in);
  const auto layers = p.fuse_w.size();
  if (in.spectral) c.e_gt = block_forward(in.position_enc, p, &c.block);
  c.gates.resize(layers);
  c.structural.resize(layers);
  c.concat.resize(layers);
  c.pre.resize(layers);
  c.hidden.resize(layers);
  const Mat* prev = &in.features;
  for (std::size_t l = 0; l < layers; ++l) {
    if (in.spectral) {
      c.gates[l] = gate_values(c.e_gt, p.gate_w[l], p.gate_b[l]);
      c.structural[l] = in.eigenvectors * (c.gates[l].asDiagonal() * in.spectral_coeffs);
    } else {
      c.structural[l] = in.multi_hop;
    }
    c.concat[l].resize(in.n(), prev->cols() + c.structural[l].cols());
    c.concat[l] << *prev, c.structural[l];
    c.pre[l] = c.concat[l] * p.fuse_w[l];
    c.hidden[l] = c.pre[l].cwiseMax(0.0);
    prev = &c.hidden[l];
  }
  return *prev * p.cls_w + row_broadcast(p.cls_b, in.n());
}

void check_labels(const ModelInputs& in, std::span<const int> labels, std::span<const NodeId> idx) {
  if (static_cast<Eigen::Index>(labels.size()) != in.n()) throw DimensionError("label vector length differs from n");
  if (idx.empty()) throw InputError("training index set is empty");
  for (const NodeId i : idx) {
    if (i < 0 || i >= in.n()) throw DimensionError("training index out of range");
    const int y = labels[static_cast<std::size_t>(i)];
    if (y != 0 && y != 1) throw InputError("labels must be binary");
  }
}

double cross_entropy(const Mat& logits, std::span<const int> labels, std::span<const NodeId> idx, Mat* dlogits,
                     double scale) {
  double loss = 0.0;
  if (dlogits) dlogits->setZero(logits.rows(), logits.cols());
  const double inv = scale / static_cast<double>(idx.size());
  for (const NodeId node : idx) {
    const Eigen::Index i = node;
    const double top = logits.row(i).maxCoeff();
    const Eigen::RowVectorXd e = (logits.row(i).array() - top).exp().matrix();
    const double z = e.sum();
    const int y = labels[static_cast<std::size_t>(node)];
    loss += -(logits(i, y) - top - std::log(z));
    if (dlogits) {
      dlogits->row(i) = e / z * inv;
      (*dlogits)(i, y) -= inv;
    }
  }
  return loss * inv;
}

Mat glorot(Rng& rng, Eigen::Index rows, Eigen::Index cols, int fan_in, int fan_out) {
  const double a = std::sqrt(6.0 / (fan_in + fan_out));
  Mat w(rows, cols);
  // Row-major fill so the draw order reads naturally.
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) w(r, c) = rng.uniform(-a, a);
  }
  return w;
}

}  // namespace

void TrainConfig::validate() const {
  if (m < 1) throw InputError("m must be >= 1");
  if (k_hops < 0) throw InputError("k_hops must be >= 0");
  if (layers < 1) throw InputError("layers must be >= 1");
  if (hidden < 1) throw InputError("hidden must be >= 1");
  if (heads < 1) throw InputError("heads must be >= 1");
  if (d_m < 2 || d_m % 2 != 0) throw InputError("d_m must be even and >= 2");
  if (d_m % heads != 0) throw InputError("d_m must be divisible by heads");
  if (ffn_hidden < 0) throw InputError("ffn_hidden must be >= 0");
  if (!(lr >= 0.0) || !std::isfinite(lr)) throw InputError("lr must be finite and >= 0");
  if (!(weight_decay >= 0.0)) throw InputError("weight_decay must be >= 0");
  if (epochs < 1) throw InputError("epochs must be >= 1");
  if (!(missing_rate >= 0.0 && missing_rate < 1.0)) throw InputError("missing_rate must lie in [0, 1)");
}

nlohmann::json to_json(const TrainConfig& c) {
  return {{"m", c.m},
          {"k_hops", c.k_hops},
          {"layers", c.layers},
          {"hidden", c.hidden},
          {"heads", c.heads},
          {"d_m", c.d_m},
          {"ffn_hidden", c.ffn_hidden},
          {"lr", c.lr},
          {"weight_decay", c.weight_decay},
          {"epochs", c.epochs},
          {"seed", c.seed},
          {"missing_rate", c.missing_rate},
          {"sensitive_in_features", c.sensitive_in_features},
          {"spectral_truncation", c.spectral_truncation},
          {"train_size", c.train_size}};
}

TrainConfig train_config_from_json(const nlohmann::json& j, TrainConfig c) {
  if (!j.is_object()) throw InputError("config must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    try {
      if (key == "m") c.m = value.get<int>();
      else if (key == "k_hops") c.k_hops = value.get<int>();
      else if (key == "layers") c.layers = value.get<int>();
      else if (key == "hidden") c.hidden = value.get<int>();
      else if (key == "heads") c.heads = value.get<int>();
      else if (key == "d_m") c.d_m = value.get<int>();
      else if (key == "ffn_hidden") c.ffn_hidden = value.get<int>();
      else if (key == "lr") c.lr = value.get<double>();
      else if (key == "weight_decay") c.weight_decay = value.get<double>();
      else if (key == "epochs") c.epochs = value.get<int>();
      else if (key == "seed") c.seed = value.get<std::uint64_t>();
      else if (key == "missing_rate") c.missing_rate = value.get<double>();
      else if (key == "sensitive_in_features") c.sensitive_in_features = value.get<bool>();
      else if (key == "spectral_truncation") c.spectral_truncation = value.get<bool>();
      else if (key == "train_size") c.train_size = value.get<std::size_t>();
      else throw InputError("unknown training config key '" + key + "'");
    } catch (const nlohmann::json::exception& e) {
      throw InputError("config key '" + key + "': " + e.what());
    }
  }
  return c;
}

ModelDims dims_for(const TrainConfig& config, int d_in) {
  config.validate();
  return {d_in, config.d_m, config.heads, config.ffn_hidden > 0 ? config.ffn_hidden : 2 * config.d_m,
          config.hidden, config.layers};
}

std::size_t ModelParams::parameter_count() const {
  std::size_t count = 0;
  visit([&](const std::string&, const Eigen::MatrixXd& t) { count += static_cast<std::size_t>(t.size()); });
  return count;
}

ModelParams zero_params(const ModelDims& d) {
  if (d.heads < 1 || d.d_m % d.heads != 0) throw InputError("d_m must be divisible by heads");
  ModelParams p;
  p.dims = d;
  p.ln1_gamma = p.ln1_beta = p.ln2_gamma = p.ln2_beta = Mat::Zero(1, d.d_m);
  p.w_q.assign(static_cast<std::size_t>(d.heads), Mat::Zero(d.d_m, d.d_k()));
  p.w_k = p.w_v = p.w_q;
  p.ffn_w1 = Mat::Zero(d.d_m, d.ffn_hidden);
  p.ffn_b1 = Mat::Zero(1, d.ffn_hidden);
  p.ffn_w2 = Mat::Zero(d.ffn_hidden, d.d_m);
  p.ffn_b2 = Mat::Zero(1, d.d_m);
  for (int l = 0; l < d.layers; ++l) {
    const int width_prev = l == 0 ? d.d_in : d.hidden;
    p.gate_w.push_back(Mat::Zero(d.d_m, 1));
    p.gate_b.push_back(Mat::Zero(1, 1));
    p.fuse_w.push_back(Mat::Zero(width_prev + d.d_in, d.hidden));
  }
  p.cls_w = Mat::Zero(d.hidden, 2);
  p.cls_b = Mat::Zero(1, 2);
  return p;
}

ModelParams init_params(const ModelDims& d, std::uint64_t seed) {
  ModelParams p = zero_params(d);
  Rng rng(seed);
  p.visit([&](const std::string& name, Mat& t) {
    if (name.starts_with("ln") && name.ends_with("gamma")) {
      t.setOnes();
    } else if (name.ends_with("beta") || name.starts_with("ffn_b") || name.starts_with("gate_b") || name == "cls_b") {
      t.setZero();
    } else {
      t = glorot(rng, t.rows(), t.cols(), static_cast<int>(t.rows()), static_cast<int>(t.cols()));
    }
  });
  return p;
}

namespace {

Mat feature_matrix(const PaddedAttributes& padded, const TrainConfig& config) {
  if (config.sensitive_in_features) return padded.values;
  const Eigen::Index s = padded.sensitive_col;
  const Eigen::Index d = padded.values.cols();
  Mat x(padded.values.rows(), d - 1);
  x << padded.values.leftCols(s), padded.values.rightCols(d - s - 1);
  return x;
}

}  // namespace

ModelInputs prepare_inputs(const Graph& g, const PaddedAttributes& padded, const SpectralTruncation& trunc,
                           const TrainConfig& config) {
  if (trunc.n() != g.n() || static_cast<std::size_t>(padded.values.rows()) != g.n()) {
    throw DimensionError("prepare_inputs: graph, attributes and eigenvectors disagree on n");
  }
  ModelInputs in;
  in.features = feature_matrix(padded, config);
  in.spectral = true;
  in.eigenvectors = trunc.eigenvectors;
  in.position_enc = eigenvalue_position_encoding(trunc.eigenvalues, config.d_m);
  in.spectral_coeffs = trunc.eigenvectors.transpose() * in.features;
  return in;
}

ModelInputs prepare_multi_hop_inputs(const Graph& g, const PaddedAttributes& padded, const TrainConfig& config) {
  if (static_cast<std::size_t>(padded.values.rows()) != g.n()) {
    throw DimensionError("prepare_multi_hop_inputs: graph and attributes disagree on n");
  }
  ModelInputs in;
  in.features = feature_matrix(padded, config);
  in.spectral = false;
  in.multi_hop = propagate_k_hop(g, in.features, config.k_hops, /*normalize=*/true);
  // Back to the input column scale; normalization only fixed the direction.
  for (Eigen::Index c = 0; c < in.features.cols(); ++c) {
    const double norm = in.multi_hop.col(c).norm();
    if (norm > 0.0) in.multi_hop.col(c) *= in.features.col(c).norm() / norm;
  }
  return in;
}

Eigen::MatrixXd attention(const Eigen::MatrixXd& x, const Eigen::MatrixXd& w_q, const Eigen::MatrixXd& w_k,
                          const Eigen::MatrixXd& w_v, Eigen::MatrixXd* weights) {
  HeadCache cache;
  Mat out = head_forward(x, w_q, w_k, w_v, &cache);
  if (weights) *weights = std::move(cache.probs);
  return out;
}

Eigen::MatrixXd layer_norm(const Eigen::MatrixXd& x, const Eigen::MatrixXd& gamma, const Eigen::MatrixXd& beta) {
  return layer_norm_forward(x, gamma, beta, nullptr);
}

Eigen::MatrixXd transformer_block(const Eigen::MatrixXd& e_pe, const ModelParams& params) {
  return block_forward(e_pe, params, nullptr);
}

Eigen::VectorXd gate_values(const Eigen::MatrixXd& e_gt, const Eigen::MatrixXd& gate_w, const Eigen::MatrixXd& gate_b) {
  if (gate_w.rows() != e_gt.cols() || gate_w.cols() != 1) throw DimensionError("gate weight must be d_m x 1");
  return (e_gt * gate_w).col(0).array() + gate_b(0, 0);
}

Eigen::MatrixXd spectral_filter(const Eigen::MatrixXd& p, const Eigen::VectorXd& g, const Eigen::MatrixXd& h) {
  if (p.cols() != g.size() || p.rows() != h.rows()) throw DimensionError("spectral_filter: shape mismatch");
  return p * (g.asDiagonal() * (p.transpose() * h));
}

Eigen::MatrixXd fuse_layer(const Eigen::MatrixXd& h_prev, const Eigen::MatrixXd& h_train, const Eigen::MatrixXd& w) {
  if (h_prev.rows() != h_train.rows() || w.rows() != h_prev.cols() + h_train.cols()) {
    throw DimensionError("fuse_layer: shape mismatch");
  }
  Mat concat(h_prev.rows(), h_prev.cols() + h_train.cols());
  concat << h_prev, h_train;
  return (concat * w).cwiseMax(0.0);
}

Eigen::MatrixXd forward(const ModelParams& params, const ModelInputs& inputs) {
  NetworkCache cache;
  return network_forward(params, inputs, cache);
}

LossAndGradients loss_and_gradients(const ModelParams& p, const ModelInputs& in, std::span<const int> labels,
                                    std::span<const NodeId> train_idx, double loss_scale) {
  check_labels(in, labels, train_idx);
  NetworkCache c;
  const Mat logits = network_forward(p, in, c);
  Mat dlogits;
  LossAndGradients out;
  out.loss = cross_entropy(logits, labels, train_idx, &dlogits, loss_scale);
  out.grads = zero_params(p.dims);
  ModelParams& g = out.grads;

  const auto layers = p.fuse_w.size();
  const Mat& last = c.hidden.back();
  g.cls_w = last.transpose() * dlogits;
  g.cls_b = dlogits.colwise().sum();
  Mat dh = dlogits * p.cls_w.transpose();

  Mat de_gt;
  if (in.spectral) de_gt = Mat::Zero(c.e_gt.rows(), c.e_gt.cols());
  for (std::size_t l = layers; l-- > 0;) {
    const Mat dpre = (dh.array() * (c.pre[l].array() > 0.0).cast<double>()).matrix();
    g.fuse_w[l] = c.concat[l].transpose() * dpre;
    const Mat dconcat = dpre * p.fuse_w[l].transpose();
    const Eigen::Index width_prev = c.concat[l].cols() - c.structural[l].cols();
    if (in.spectral) {
      const Mat dstructural = dconcat.rightCols(c.structural[l].cols());
      const Mat dfiltered = in.eigenvectors.transpose() * dstructural;
      const Eigen::VectorXd dgate = (dfiltered.array() * in.spectral_coeffs.array()).rowwise().sum();
      g.gate_w[l] = c.e_gt.transpose() * dgate;
      g.gate_b[l](0, 0) = dgate.sum();
      de_gt += dgate * p.gate_w[l].transpose();
    }
    dh = dconcat.leftCols(width_prev);  // gradient w.r.t. H^(l-1); unused for l = 0
  }
  if (in.spectral) block_backward(de_gt, p, c.block, g);
  return out;
}

double loss_only(const ModelParams& params, const ModelInputs& inputs, std::span<const int> labels,
                 std::span<const NodeId> train_idx) {
  check_labels(inputs, labels, train_idx);
  return cross_entropy(forward(params, inputs), labels, train_idx, nullptr, 1.0);
}

std::vector<int> predict(const Eigen::MatrixXd& logits) {
  std::vector<int> out(static_cast<std::size_t>(logits.rows()));
  for (Eigen::Index i = 0; i < logits.rows(); ++i) out[static_cast<std::size_t>(i)] = logits(i, 1) > logits(i, 0) ? 1 : 0;
  return out;
}

std::vector<int> predict(const ModelParams& params, const ModelInputs& inputs) {
  return predict(forward(params, inputs));
}

TrainResult train(const ModelInputs& inputs, std::span<const int> labels, const Split& split,
                  const TrainConfig& config) {
  return train(inputs, labels, split, config, init_params(dims_for(config, static_cast<int>(inputs.features.cols())), config.seed));
}

TrainResult train(const ModelInputs& inputs, std::span<const int> labels, const Split& split,
                  const TrainConfig& config, ModelParams params) {
  config.validate();
  constexpr double beta1 = 0.9;
  constexpr double beta2 = 0.999;
  constexpr double eps = 1e-8;

  ModelParams first = zero_params(params.dims);
  ModelParams second = zero_params(params.dims);
  const std::span<const NodeId> val = split.val.empty() ? std::span<const NodeId>(split.train) : split.val;

  TrainResult result;
  result.params = params;
  double best_val = -1.0;
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    LossAndGradients lg = loss_and_gradients(params, inputs, labels, split.train);
    if (!std::isfinite(lg.loss)) throw DivergenceError(epoch, "training loss is not finite");

    const double bias1 = 1.0 - std::pow(beta1, epoch);
    const double bias2 = 1.0 - std::pow(beta2, epoch);
    std::vector<Mat*> ps, gs, ms, vs;
    params.visit([&](const std::string&, Mat& t) { ps.push_back(&t); });
    lg.grads.visit([&](const std::string&, Mat& t) { gs.push_back(&t); });
    first.visit([&](const std::string&, Mat& t) { ms.push_back(&t); });
    second.visit([&](const std::string&, Mat& t) { vs.push_back(&t); });
    for (std::size_t i = 0; i < ps.size(); ++i) {
      const Mat grad = *gs[i] + config.weight_decay * *ps[i];
      *ms[i] = beta1 * *ms[i] + (1.0 - beta1) * grad;
      *vs[i] = beta2 * *vs[i] + (1.0 - beta2) * grad.cwiseProduct(grad);
      const Mat step = ((*ms[i] / bias1).array() / ((*vs[i] / bias2).array().sqrt() + eps)).matrix();
      *ps[i] -= config.lr * step;
    }

    const auto yhat = predict(params, inputs);
    const double val_acc = accuracy(yhat, labels, val);
    result.history.push_back({epoch, lg.loss, val_acc});
    if (val_acc > best_val) {
      best_val = val_acc;
      result.params = params;
      result.best_epoch = epoch;
    }
  }
  return result;
}

nlohmann::json checkpoint_to_json(const ModelParams& params) {
  nlohmann::json tensors = nlohmann::json::array();
  params.visit([&](const std::string& name, const Mat& t) {
    std::vector<double> data;
    data.reserve(static_cast<std::size_t>(t.size()));
    for (Eigen::Index r = 0; r < t.rows(); ++r) {
      for (Eigen::Index c = 0; c < t.cols(); ++c) data.push_back(t(r, c));
    }
    tensors.push_back({{"name", name}, {"rows", t.rows()}, {"cols", t.cols()}, {"data", data}});
  });
  const auto& d = params.dims;
  return {{"format", "fairge-checkpoint"},
          {"version", 1},
          {"dims",
           {{"d_in", d.d_in},
            {"d_m", d.d_m},
            {"heads", d.heads},
            {"ffn_hidden", d.ffn_hidden},
            {"hidden", d.hidden},
            {"layers", d.layers}}},
          {"tensors", tensors}};
}

ModelParams checkpoint_from_json(const nlohmann::json& j, const ModelDims& expected) {
  try {
    if (j.at("format") != "fairge-checkpoint") throw InputError("not a fairge checkpoint");
    if (j.at("version") != 1) throw InputError("unsupported checkpoint version");
    const auto& jd = j.at("dims");
    const ModelDims dims{jd.at("d_in").get<int>(),   jd.at("d_m").get<int>(),    jd.at("heads").get<int>(),
                         jd.at("ffn_hidden").get<int>(), jd.at("hidden").get<int>(), jd.at("layers").get<int>()};
    if (!(dims == expected)) throw DimensionError("checkpoint dimensions do not match the configuration");
    ModelParams p = zero_params(dims);
    const auto& tensors = j.at("tensors");
    std::size_t index = 0;
    p.visit([&](const std::string& name, Mat& t) {
      if (index >= tensors.size()) throw DimensionError("checkpoint is missing tensor " + name);
      const auto& jt = tensors[index++];
      if (jt.at("name") != name) throw DimensionError("checkpoint tensor order mismatch at " + name);
      if (jt.at("rows").get<Eigen::Index>() != t.rows() || jt.at("cols").get<Eigen::Index>() != t.cols()) {
        throw DimensionError("checkpoint tensor " + name + " has the wrong shape");
      }
      const auto data = jt.at("data").get<std::vector<double>>();
      if (static_cast<Eigen::Index>(data.size()) != t.size()) throw DimensionError("tensor " + name + " data size");
      for (Eigen::Index r = 0, k = 0; r < t.rows(); ++r) {
        for (Eigen::Index c = 0; c < t.cols(); ++c) t(r, c) = data[static_cast<std::size_t>(k++)];
      }
    });
    if (index != tensors.size()) throw DimensionError("checkpoint has extra tensors");
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("malformed checkpoint: ") + e.what());
  }
}

}  // namespace fairge
