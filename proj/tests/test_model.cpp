#include <doctest.h>

#include <cmath>

#include "fairge/errors.hpp"
#include "fairge/fairness.hpp"
#include "fairge/model.hpp"
#include "fixtures.hpp"
#include "helpers.hpp"

using namespace fairge;
using doctest::Approx;
using Eigen::MatrixXd;

namespace {

MatrixXd random_matrix(Eigen::Index r, Eigen::Index c, Rng& rng) {
  MatrixXd m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.normal();
  return m;
}

std::vector<NodeId> iota_ids(std::size_t n) {
  std::vector<NodeId> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = static_cast<NodeId>(i);
  return v;
}

}  // namespace

TEST_CASE("attention") {
  Rng rng(1);
  const MatrixXd x1 = random_matrix(1, 4, rng);
  const MatrixXd wq = random_matrix(4, 4, rng), wk = random_matrix(4, 4, rng), wv = random_matrix(4, 4, rng);
  CHECK((attention(x1, wq, wk, wv) - x1 * wv).cwiseAbs().maxCoeff() < 1e-14);

  const MatrixXd x = random_matrix(3, 4, rng);
  const MatrixXd zero = MatrixXd::Zero(4, 4);
  const MatrixXd uniform = attention(x, zero, zero, wv);
  const Eigen::RowVectorXd mean = (x * wv).colwise().mean();
  for (Eigen::Index r = 0; r < 3; ++r) CHECK((uniform.row(r) - mean).norm() < 1e-12);

  MatrixXd weights;
  attention(x, wq, wk, wv, &weights);
  for (Eigen::Index r = 0; r < 3; ++r) CHECK(std::abs(weights.row(r).sum() - 1.0) < 1e-12);
  CHECK(weights.minCoeff() >= 0.0);

  CHECK_THROWS_AS(attention(x, MatrixXd::Zero(5, 4), zero, wv), DimensionError);
}

TEST_CASE("transformer block with zero weights is the identity") {
  ModelDims dims{3, 8, 2, 16, 4, 1};
  ModelParams p = zero_params(dims);
  p.ln1_gamma.setOnes();
  p.ln2_gamma.setOnes();
  Rng rng(2);
  const MatrixXd e = random_matrix(4, 8, rng);
  const MatrixXd out = transformer_block(e, p);
  CHECK(out.rows() == 4);
  CHECK(out.cols() == 8);
  CHECK((out - e).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("shared-weight heads equal one wide head") {
  // Heads sharing W_Q = A and W_K = B behave like one head with
  // W_Q = [A A] / sqrt(2), W_K = [B B], W_V = [V1 V2].
  Rng rng(3);
  const int d_m = 8, d_k = 4;
  const MatrixXd a = random_matrix(d_m, d_k, rng), b = random_matrix(d_m, d_k, rng);
  const MatrixXd v1 = random_matrix(d_m, d_k, rng), v2 = random_matrix(d_m, d_k, rng);

  ModelParams multi = init_params({3, d_m, 2, 16, 4, 1}, 5);
  multi.w_q = {a, a};
  multi.w_k = {b, b};
  multi.w_v = {v1, v2};

  ModelParams single = init_params({3, d_m, 1, 16, 4, 1}, 5);
  single.ln1_gamma = multi.ln1_gamma;
  single.ln1_beta = multi.ln1_beta;
  single.ln2_gamma = multi.ln2_gamma;
  single.ln2_beta = multi.ln2_beta;
  single.ffn_w1 = multi.ffn_w1;
  single.ffn_b1 = multi.ffn_b1;
  single.ffn_w2 = multi.ffn_w2;
  single.ffn_b2 = multi.ffn_b2;
  MatrixXd wq(d_m, d_m), wk(d_m, d_m), wv(d_m, d_m);
  wq << a, a;
  wk << b, b;
  wv << v1, v2;
  single.w_q = {wq / std::sqrt(2.0)};
  single.w_k = {wk};
  single.w_v = {wv};

  const MatrixXd e = random_matrix(4, d_m, rng);
  CHECK((transformer_block(e, multi) - transformer_block(e, single)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("spectral filter and fusion") {
  const Graph k3 = testutil::triangle();
  const auto full = dense_eigendecomposition(k3);
  Rng rng(4);
  const MatrixXd h = random_matrix(3, 2, rng);
  CHECK((spectral_filter(full.eigenvectors, Eigen::VectorXd::Ones(3), h) - h).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(spectral_filter(full.eigenvectors, Eigen::VectorXd::Zero(3), h).isZero());

  const auto top1 = top_m_eigenpairs(k3, 1);
  const MatrixXd col = Eigen::Vector3d(1, 0, 1);
  const MatrixXd filtered = spectral_filter(top1.eigenvectors, Eigen::VectorXd::Ones(1), col);
  CHECK((filtered - MatrixXd::Constant(3, 1, 2.0 / 3.0)).cwiseAbs().maxCoeff() < 1e-12);

  // Zero gate: H^(l) depends only on H^(l-1).
  const MatrixXd w = random_matrix(3, 4, rng);
  const MatrixXd prev = random_matrix(3, 2, rng);
  const MatrixXd zero_train = MatrixXd::Zero(3, 1);
  const MatrixXd out = fuse_layer(prev, zero_train, w);
  CHECK((out - (prev * w.topRows(2)).cwiseMax(0.0)).cwiseAbs().maxCoeff() < 1e-14);
  CHECK(out.minCoeff() >= 0.0);
  CHECK_THROWS_AS(fuse_layer(prev, zero_train, random_matrix(4, 4, rng)), DimensionError);
}

TEST_CASE("forward: zero classifier and tie rule") {
  auto f = testutil::six_node_fixture();
  f.params.cls_w.setZero();
  f.params.cls_b.setZero();
  const MatrixXd logits = forward(f.params, f.inputs);
  CHECK(logits.rows() == 6);
  CHECK(logits.isZero());
  for (const int y : predict(logits)) CHECK(y == 0);
}

TEST_CASE("forward is equivariant to node permutation") {
  const auto f = testutil::six_node_fixture();
  const std::vector<int> perm = {3, 5, 0, 4, 2, 1};  // new row i holds old node perm[i]
  Eigen::PermutationMatrix<Eigen::Dynamic> p(6);
  for (int i = 0; i < 6; ++i) p.indices()[perm[static_cast<std::size_t>(i)]] = i;
  ModelInputs permuted = f.inputs;
  permuted.features = p * f.inputs.features;
  permuted.eigenvectors = p * f.inputs.eigenvectors;
  const MatrixXd a = p * forward(f.params, f.inputs);
  const MatrixXd b = forward(f.params, permuted);
  CHECK((a - b).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(a.allFinite());
}

TEST_CASE("analytic gradients match central differences") {
  const auto f = testutil::six_node_fixture();
  const auto check = testutil::finite_difference_check(f.params, f.inputs, f.table.labels.labels, f.train);
  INFO("worst coordinate ", check.worst_tensor);
  CHECK(check.worst_relative <= 1e-4);
  std::size_t count = 0;
  f.params.visit([&](const std::string&, const MatrixXd&) { ++count; });
  CHECK(check.tensors == count);
}

TEST_CASE("gradients of the multi-hop ablation") {
  auto f = testutil::six_node_fixture();
  f.config.spectral_truncation = false;
  const auto padded = zero_pad(f.table.attributes, f.table.sensitive);
  const ModelInputs in = prepare_multi_hop_inputs(f.graph, padded, f.config);
  const auto check = testutil::finite_difference_check(f.params, in, f.table.labels.labels, f.train);
  CHECK(check.worst_relative <= 1e-4);
  // The transformer and gates are unused, so their gradients are zero.
  const auto g = loss_and_gradients(f.params, in, f.table.labels.labels, f.train).grads;
  CHECK(g.ffn_w1.isZero());
  CHECK(g.gate_w[0].isZero());
}

TEST_CASE("saturated softmax gives vanishing gradients") {
  auto f = testutil::six_node_fixture();
  const std::vector<int> labels(6, 1);
  f.params.cls_w.setZero();
  f.params.cls_b << -40.0, 40.0;
  const auto lg = loss_and_gradients(f.params, f.inputs, labels, f.train);
  CHECK(lg.loss < 1e-30);
  double norm = 0.0;
  lg.grads.visit([&](const std::string&, const MatrixXd& t) { norm = std::max(norm, t.norm()); });
  CHECK(norm < 1e-6);
}

TEST_CASE("loss scale doubles every gradient") {
  const auto f = testutil::six_node_fixture();
  const auto one = loss_and_gradients(f.params, f.inputs, f.table.labels.labels, f.train, 1.0);
  const auto two = loss_and_gradients(f.params, f.inputs, f.table.labels.labels, f.train, 2.0);
  CHECK(two.loss == Approx(2.0 * one.loss));
  std::vector<MatrixXd> a;
  one.grads.visit([&](const std::string&, const MatrixXd& t) { a.push_back(t); });
  std::size_t k = 0;
  two.grads.visit([&](const std::string&, const MatrixXd& t) {
    CHECK((t - 2.0 * a[k++]).cwiseAbs().maxCoeff() <= 1e-12 * std::max(1.0, t.cwiseAbs().maxCoeff()));
  });
}

TEST_CASE("predict") {
  MatrixXd logits(3, 2);
  logits << 0.2, 0.9, 0.5, 0.5, 1.0, -1.0;
  CHECK(predict(logits) == std::vector<int>{1, 0, 0});
  CHECK(predict((logits.array() + 7.25).matrix()) == predict(logits));
}

TEST_CASE("training reaches full accuracy on a separable toy") {
  // Eight nodes, a ring; the label is the sign of the first feature.
  std::string edges;
  for (int i = 0; i < 8; ++i) edges += std::to_string(i) + " " + std::to_string((i + 1) % 8) + "\n";
  const Graph g = load_edge_list(edges);
  AttributeMatrix a;
  a.values.resize(8, 2);
  a.values << 1.0, 0, -1.2, 1, 0.8, 0, -0.5, 1, 1.5, 0, -0.9, 1, 0.4, 0, -1.1, 1;
  a.sensitive_col = 1;
  a.column_names = {"x", "sensitive"};
  SensitiveColumn s{{0, 1, 0, 1, 0, 1, 0, 1}, std::vector<bool>(8, true)};
  const std::vector<int> labels = {1, 0, 1, 0, 1, 0, 1, 0};

  TrainConfig cfg;
  cfg.m = 2;
  cfg.hidden = 16;
  cfg.d_m = 4;
  const ModelInputs in = prepare_inputs(g, zero_pad(a, s), top_m_eigenpairs(g, 2), cfg);
  Split split;
  split.train = iota_ids(8);
  const TrainResult r = train(in, labels, split, cfg);
  CHECK(r.history.size() == 300);
  CHECK(accuracy(predict(r.params, in), labels, split.train) == 1.0);
}

TEST_CASE("training is deterministic; lr = 0 leaves parameters alone") {
  const auto f = testutil::six_node_fixture();
  Split split;
  split.train = {0, 1, 2, 3};
  split.val = {4, 5};
  TrainConfig cfg = f.config;
  cfg.epochs = 40;
  const TrainResult a = train(f.inputs, f.table.labels.labels, split, cfg, f.params);
  const TrainResult b = train(f.inputs, f.table.labels.labels, split, cfg, f.params);
  CHECK(checkpoint_to_json(a.params) == checkpoint_to_json(b.params));
  CHECK(a.best_epoch == b.best_epoch);

  cfg.lr = 0.0;
  const TrainResult still = train(f.inputs, f.table.labels.labels, split, cfg, f.params);
  CHECK(checkpoint_to_json(still.params) == checkpoint_to_json(f.params));
  for (const auto& e : still.history) CHECK(e.train_loss == still.history.front().train_loss);
}

TEST_CASE("divergence aborts with the epoch") {
  const auto f = testutil::six_node_fixture();
  Split split;
  split.train = f.train;
  TrainConfig cfg = f.config;
  cfg.lr = 1e300;
  CHECK_THROWS_AS(train(f.inputs, f.table.labels.labels, split, cfg, f.params), DivergenceError);
}

TEST_CASE("checkpoint round trip and validation") {
  const auto f = testutil::six_node_fixture();
  const auto j = checkpoint_to_json(f.params);
  const ModelParams back = checkpoint_from_json(nlohmann::json::parse(j.dump()), f.params.dims);
  CHECK(checkpoint_to_json(back) == j);

  ModelDims other = f.params.dims;
  other.hidden = 16;
  CHECK_THROWS_AS(checkpoint_from_json(j, other), DimensionError);
  auto broken = j;
  broken["tensors"][0]["rows"] = 7;
  CHECK_THROWS_AS(checkpoint_from_json(broken, f.params.dims), DimensionError);
  CHECK_THROWS_AS(checkpoint_from_json(nlohmann::json::object(), f.params.dims), InputError);
}

TEST_CASE("train config JSON") {
  TrainConfig c;
  c.m = 5;
  c.lr = 0.02;
  c.sensitive_in_features = false;
  const TrainConfig back = train_config_from_json(to_json(c));
  CHECK(to_json(back) == to_json(c));
  CHECK_THROWS_AS(train_config_from_json({{"bogus", 1}}), InputError);
  CHECK_THROWS_AS(train_config_from_json({{"m", "eight"}}), InputError);
  TrainConfig bad;
  bad.d_m = 5;
  CHECK_THROWS_AS(bad.validate(), InputError);
  bad = TrainConfig{};
  bad.heads = 3;
  CHECK_THROWS_AS(bad.validate(), InputError);
}
