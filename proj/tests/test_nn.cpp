#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "krgnn/errors.hpp"
#include "krgnn/graph.hpp"
#include "krgnn/nn.hpp"
#include "krgnn/rng.hpp"
#include "testutil.hpp"

using namespace krgnn;
using testutil::fd_gradient;
using testutil::max_rel_err;
using testutil::random_mat;

namespace {

NodeGraph small_graph() {
  NodeGraph g;
  g.num_nodes = 6;
  g.neighbors.resize(6);
  g.add_edge(0, 1);
  g.add_edge(1, 2);
  g.add_edge(2, 3);
  g.add_edge(3, 4);
  g.add_edge(4, 5);
  g.add_edge(5, 0);
  g.add_edge(0, 3);
  return g;
}

}  // namespace

TEST_CASE("activation parsing round-trips and rejects junk") {
  CHECK(parse_activation("relu") == Activation::kRelu);
  CHECK(parse_activation("elu") == Activation::kElu);
  CHECK(parse_activation("none") == Activation::kNone);
  CHECK(to_string(Activation::kElu) == "elu");
  CHECK_THROWS_AS(parse_activation("tanh"), InvalidArgument);
}

TEST_CASE("layer init respects the uniform fan-in bound and zero bias") {
  Rng rng = make_rng(1);
  const LayerParams dense = init_layer(LayerKind::kDense, 9, 4, rng);
  CHECK(dense.weight.rows() == 9);
  CHECK(dense.weight.cols() == 4);
  CHECK(dense.in_dim() == 9);
  CHECK(dense.out_dim() == 4);
  const double bound = 1.0 / 3.0;  // 1/sqrt(9)
  CHECK(dense.weight.cwiseAbs().maxCoeff() <= bound);
  CHECK(dense.weight.cwiseAbs().maxCoeff() > 0.5 * bound);  // actually random
  CHECK(dense.bias.cwiseAbs().maxCoeff() == 0.0);

  // SAGE concatenates [H | A H], so the weight carries 2*in rows.
  const LayerParams sage = init_layer(LayerKind::kSage, 5, 3, rng);
  CHECK(sage.weight.rows() == 10);
  CHECK(sage.in_dim() == 5);
}

TEST_CASE("encoder init wires the requested dims") {
  Rng rng = make_rng(2);
  const EncoderState enc = init_encoder(LayerKind::kGcn, {7, 16, 16, 4},
                                        Activation::kElu, rng);
  CHECK(enc.depth() == 3);
  CHECK(enc.layers[0].in_dim() == 7);
  CHECK(enc.layers[2].out_dim() == 4);
  CHECK_THROWS_AS(init_encoder(LayerKind::kGcn, {7}, Activation::kElu, rng),
                  InvalidArgument);
}

TEST_CASE("taped and payload-only encoder forwards agree bitwise") {
  const NodeGraph g = small_graph();
  const Mat a_norm = normalized_adjacency(g);
  const Mat a_mean = mean_aggregator(g);
  Rng rng = make_rng(3);
  const Mat x = random_mat(6, 5, rng);

  for (LayerKind kind : {LayerKind::kGcn, LayerKind::kSage}) {
    Rng init = make_rng(4);
    const EncoderState enc =
        init_encoder(kind, {5, 8, 3}, Activation::kElu, init);
    Tape tape;
    TapedParams params = bind_params(tape, enc);
    const std::vector<DiffValue> taped =
        encoder_forward(tape, enc, params, tape.leaf(x), a_norm, a_mean, 0.0, nullptr);
    const std::vector<Mat> values = encoder_forward_values(enc, x, a_norm, a_mean);
    REQUIRE(taped.size() == values.size());
    for (std::size_t l = 0; l < values.size(); ++l)
      CHECK((tape.value(taped[l]) - values[l]).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("gcn layer output matches the closed form") {
  const NodeGraph g = small_graph();
  const Mat a_norm = normalized_adjacency(g);
  Rng rng = make_rng(5);
  const Mat x = random_mat(6, 4, rng);
  Rng init = make_rng(6);
  EncoderState enc = init_encoder(LayerKind::kGcn, {4, 3}, Activation::kNone, init);
  const std::vector<Mat> out = encoder_forward_values(enc, x, a_norm, Mat());
  const Mat expect = (a_norm * x) * enc.layers[0].weight +
                     Mat::Ones(6, 1) * enc.layers[0].bias;
  CHECK((out[1] - expect).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("sage layer concatenates self and averaged neighbors") {
  const NodeGraph g = small_graph();
  const Mat a_mean = mean_aggregator(g);
  Rng rng = make_rng(7);
  const Mat x = random_mat(6, 4, rng);
  Rng init = make_rng(8);
  EncoderState enc = init_encoder(LayerKind::kSage, {4, 3}, Activation::kNone, init);
  const std::vector<Mat> out = encoder_forward_values(enc, x, Mat(), a_mean);
  Mat cat(6, 8);
  cat << x, a_mean * x;
  const Mat expect = cat * enc.layers[0].weight + Mat::Ones(6, 1) * enc.layers[0].bias;
  CHECK((out[1] - expect).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("mlp applies no activation after the last layer") {
  Rng rng = make_rng(9);
  EncoderState mlp = init_mlp({3, 4, 2}, Activation::kRelu, rng);
  // Force a negative final output: zero the last weight, negative bias. If
  // the activation were (wrongly) applied after the last layer, ReLU would
  // clamp this to zero.
  mlp.layers[1].weight.setZero();
  mlp.layers[1].bias << -1.0, -2.0;
  const Mat x = random_mat(5, 3, rng);
  const Mat out = mlp_forward_values(mlp, x);
  CHECK(out.rows() == 5);
  CHECK(out.cols() == 2);
  CHECK(out.col(0).maxCoeff() == -1.0);
  CHECK(out.col(1).maxCoeff() == -2.0);

  Tape tape;
  TapedParams params = bind_params(tape, mlp);
  DiffValue taped = mlp_forward(tape, mlp, params, tape.leaf(x), 0.0, nullptr);
  CHECK((tape.value(taped) - out).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("encoder gradients match finite differences for both kinds") {
  const NodeGraph g = small_graph();
  const Mat a_norm = normalized_adjacency(g);
  const Mat a_mean = mean_aggregator(g);
  Rng rng = make_rng(10);
  const Mat x = random_mat(6, 4, rng);

  for (LayerKind kind : {LayerKind::kGcn, LayerKind::kSage}) {
    Rng init = make_rng(11);
    EncoderState enc = init_encoder(kind, {4, 5, 3}, Activation::kElu, init);

    for (int layer = 0; layer < 2; ++layer) {
      // Scalar loss: sum of the final hidden layer.
      const auto eval = [&](const Mat& w) {
        EncoderState probe = enc;
        probe.layers[static_cast<std::size_t>(layer)].weight = w;
        return encoder_forward_values(probe, x, a_norm, a_mean).back().sum();
      };
      Tape tape;
      TapedParams params = bind_params(tape, enc);
      std::vector<DiffValue> hidden =
          encoder_forward(tape, enc, params, tape.leaf(x), a_norm, a_mean, 0.0, nullptr);
      tape.backward(tape.sum(hidden.back()));
      const Mat analytic = tape.adjoint(params.weights[static_cast<std::size_t>(layer)]);
      const Mat numeric =
          fd_gradient(eval, enc.layers[static_cast<std::size_t>(layer)].weight);
      CHECK(max_rel_err(analytic, numeric) < 1e-5);
    }
  }
}

TEST_CASE("adam first step moves a parameter by -lr for unit gradient") {
  // Single 1x1 dense layer; force gradient 1 via loss = sum(w).
  Rng rng = make_rng(12);
  EncoderState enc;
  enc.layers.push_back(init_layer(LayerKind::kDense, 1, 1, rng));
  enc.layers[0].weight(0, 0) = 0.75;

  Tape tape;
  TapedParams params = bind_params(tape, enc);
  tape.backward(tape.sum(params.weights[0]));
  AdamState opt(0.1);
  opt.step(enc, tape, params);
  // mhat = 1, vhat = 1 -> step = lr * 1 / (1 + eps) ~ 0.1.
  CHECK(enc.layers[0].weight(0, 0) == doctest::Approx(0.75 - 0.1).epsilon(1e-6));
  CHECK(opt.steps_taken() == 1);
}

TEST_CASE("adam converges on a small quadratic") {
  Rng rng = make_rng(13);
  EncoderState enc;
  enc.layers.push_back(init_layer(LayerKind::kDense, 2, 2, rng));
  const Mat target = (Mat(2, 2) << 1.0, -2.0, 0.5, 3.0).finished();

  AdamState opt(0.05);
  for (int it = 0; it < 400; ++it) {
    Tape tape;
    TapedParams params = bind_params(tape, enc);
    DiffValue diff = tape.sub(params.weights[0], tape.leaf(target));
    // Column-norm objective: same minimizer as least squares.
    DiffValue loss = tape.column_norm_mean(diff);
    tape.backward(loss);
    opt.step(enc, tape, params);
  }
  CHECK((enc.layers[0].weight - target).cwiseAbs().maxCoeff() < 0.05);
}

TEST_CASE("weight decay pulls parameters toward zero") {
  EncoderState enc;
  Rng rng = make_rng(14);
  enc.layers.push_back(init_layer(LayerKind::kDense, 1, 1, rng));
  enc.layers[0].weight(0, 0) = 1.0;
  AdamState opt(0.01, 0.9, 0.999, 1e-8, 0.5);
  for (int it = 0; it < 200; ++it) {
    Tape tape;
    TapedParams params = bind_params(tape, enc);
    // Loss 0: gradient comes only from the decay term.
    tape.backward(tape.scale(tape.sum(params.weights[0]), 0.0));
    opt.step(enc, tape, params);
  }
  CHECK(std::abs(enc.layers[0].weight(0, 0)) < 0.2);
}

TEST_CASE("masked accuracy counts only masked labeled rows") {
  Mat logits(4, 3);
  logits << 5, 0, 0,  // -> 0
      0, 5, 0,        // -> 1
      0, 0, 5,        // -> 2
      5, 0, 0;        // -> 0
  const std::vector<int> labels = {0, 1, 0, -1};
  CHECK(masked_accuracy(logits, labels, Mask()) == doctest::Approx(2.0 / 3.0));
  Mask mask(4, 0);
  mask[0] = 1;
  mask[2] = 1;
  CHECK(masked_accuracy(logits, labels, mask) == doctest::Approx(0.5));
  CHECK_THROWS_AS(masked_accuracy(logits, {-1, -1, -1, -1}, Mask()), DegenerateInput);
}
