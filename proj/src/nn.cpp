#include "krgnn/nn.hpp"

#include <cmath>
#include <string>

#include "krgnn/errors.hpp"

namespace krgnn {

Activation parse_activation(const std::string& s) {
  if (s == "relu") return Activation::kRelu;
  if (s == "elu") return Activation::kElu;
  if (s == "none") return Activation::kNone;
  throw InvalidArgument("unknown activation '" + s + "' (expected relu, elu or none)");
}

std::string to_string(Activation a) {
  switch (a) {
    case Activation::kRelu: return "relu";
    case Activation::kElu: return "elu";
    case Activation::kNone: return "none";
  }
  return "?";
}

std::string to_string(LayerKind k) {
  switch (k) {
    case LayerKind::kGcn: return "gcn";
    case LayerKind::kSage: return "sage";
    case LayerKind::kDense: return "dense";
  }
  return "?";
}

int LayerParams::in_dim() const {
  const auto rows = static_cast<int>(weight.rows());
  return kind == LayerKind::kSage ? rows / 2 : rows;
}

LayerParams init_layer(LayerKind kind, int in_dim, int out_dim, Rng& rng) {
  if (in_dim < 1 || out_dim < 1)
    throw InvalidArgument("init_layer: dimensions must be positive");
  LayerParams layer;
  layer.kind = kind;
  const int rows = kind == LayerKind::kSage ? 2 * in_dim : in_dim;
  const double bound = 1.0 / std::sqrt(static_cast<double>(rows));
  std::uniform_real_distribution<double> u(-bound, bound);
  layer.weight.resize(rows, out_dim);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < out_dim; ++j) layer.weight(i, j) = u(rng);
  layer.bias = Mat::Zero(1, out_dim);
  return layer;
}

EncoderState init_encoder(LayerKind kind, const std::vector<int>& dims,
                          Activation act, Rng& rng) {
  if (dims.size() < 2) throw InvalidArgument("init_encoder: need input and output dims");
  EncoderState enc;
  enc.activation = act;
  for (std::size_t l = 0; l + 1 < dims.size(); ++l)
    enc.layers.push_back(init_layer(kind, dims[l], dims[l + 1], rng));
  return enc;
}

EncoderState init_mlp(const std::vector<int>& dims, Activation act, Rng& rng) {
  return init_encoder(LayerKind::kDense, dims, act, rng);
}

TapedParams bind_params(Tape& tape, const EncoderState& enc) {
  TapedParams p;
  for (const LayerParams& layer : enc.layers) {
    p.weights.push_back(tape.leaf(layer.weight));
    p.biases.push_back(tape.leaf(layer.bias));
  }
  return p;
}

namespace {

DiffValue apply_activation(Tape& tape, DiffValue v, Activation act) {
  switch (act) {
    case Activation::kRelu: return tape.relu(v);
    case Activation::kElu: return tape.elu(v);
    case Activation::kNone: return v;
  }
  throw InvalidArgument("apply_activation: bad enum value");
}

Mat apply_activation_values(const Mat& v, Activation act) {
  switch (act) {
    case Activation::kRelu: return v.cwiseMax(0.0);
    case Activation::kElu:
      return (v.array() > 0.0).select(v.array(), v.array().exp() - 1.0).matrix();
    case Activation::kNone: return v;
  }
  throw InvalidArgument("apply_activation_values: bad enum value");
}

}  // namespace

std::vector<DiffValue> encoder_forward(Tape& tape, const EncoderState& enc,
                                       const TapedParams& params, DiffValue input,
                                       const Mat& a_norm, const Mat& a_mean,
                                       double dropout, Rng* dropout_rng) {
  if (params.weights.size() != enc.layers.size())
    throw InvalidArgument("encoder_forward: parameter binding does not match encoder");
  if (dropout > 0.0 && dropout_rng == nullptr)
    throw InvalidArgument("encoder_forward: dropout requested without an RNG");

  DiffValue norm_leaf, mean_leaf;
  std::vector<DiffValue> hidden;
  hidden.push_back(input);
  DiffValue h = input;
  for (std::size_t l = 0; l < enc.layers.size(); ++l) {
    const LayerKind kind = enc.layers[l].kind;
    DiffValue pre;
    if (kind == LayerKind::kGcn) {
      if (!norm_leaf.valid()) norm_leaf = tape.leaf(a_norm);
      pre = tape.matmul(tape.matmul(norm_leaf, h), params.weights[l]);
    } else if (kind == LayerKind::kSage) {
      if (!mean_leaf.valid()) mean_leaf = tape.leaf(a_mean);
      DiffValue agg = tape.matmul(mean_leaf, h);
      pre = tape.matmul(tape.concat_cols(h, agg), params.weights[l]);
    } else {
      pre = tape.matmul(h, params.weights[l]);
    }
    pre = tape.add_row_vector(pre, params.biases[l]);
    h = apply_activation(tape, pre, enc.activation);
    if (dropout > 0.0) h = tape.dropout(h, dropout, *dropout_rng);
    hidden.push_back(h);
  }
  return hidden;
}

std::vector<Mat> encoder_forward_values(const EncoderState& enc, const Mat& input,
                                        const Mat& a_norm, const Mat& a_mean) {
  std::vector<Mat> hidden;
  hidden.push_back(input);
  Mat h = input;
  for (const LayerParams& layer : enc.layers) {
    Mat pre;
    if (layer.kind == LayerKind::kGcn) {
      pre = Mat(a_norm * h) * layer.weight;
    } else if (layer.kind == LayerKind::kSage) {
      const Mat agg = a_mean * h;
      Mat cat(h.rows(), h.cols() + agg.cols());
      cat << h, agg;
      pre = cat * layer.weight;
    } else {
      pre = h * layer.weight;
    }
    pre = pre.rowwise() + layer.bias.row(0);
    h = apply_activation_values(pre, enc.activation);
    hidden.push_back(h);
  }
  return hidden;
}

DiffValue mlp_forward(Tape& tape, const EncoderState& mlp, const TapedParams& params,
                      DiffValue input, double dropout, Rng* dropout_rng) {
  if (params.weights.size() != mlp.layers.size())
    throw InvalidArgument("mlp_forward: parameter binding does not match network");
  if (dropout > 0.0 && dropout_rng == nullptr)
    throw InvalidArgument("mlp_forward: dropout requested without an RNG");
  DiffValue h = input;
  for (std::size_t l = 0; l < mlp.layers.size(); ++l) {
    if (mlp.layers[l].kind != LayerKind::kDense)
      throw InvalidArgument("mlp_forward: all layers must be dense");
    h = tape.add_row_vector(tape.matmul(h, params.weights[l]), params.biases[l]);
    if (l + 1 < mlp.layers.size()) {
      h = apply_activation(tape, h, mlp.activation);
      if (dropout > 0.0) h = tape.dropout(h, dropout, *dropout_rng);
    }
  }
  return h;
}

Mat mlp_forward_values(const EncoderState& mlp, const Mat& input) {
  Mat h = input;
  for (std::size_t l = 0; l < mlp.layers.size(); ++l) {
    h = (h * mlp.layers[l].weight).rowwise() + mlp.layers[l].bias.row(0);
    if (l + 1 < mlp.layers.size()) h = apply_activation_values(h, mlp.activation);
  }
  return h;
}

AdamState::AdamState(double lr, double beta1, double beta2, double eps,
                     double weight_decay)
    : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps), weight_decay_(weight_decay) {
  if (!(lr > 0.0)) throw InvalidArgument("adam: learning rate must be positive");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0))
    throw InvalidArgument("adam: betas must lie in [0, 1)");
}

void AdamState::apply(Mat& param, const Mat& grad, Mat& m, Mat& v) {
  Mat g = grad;
  if (weight_decay_ > 0.0) g += weight_decay_ * param;
  m = beta1_ * m + (1.0 - beta1_) * g;
  v = beta2_ * v + (1.0 - beta2_) * g.cwiseProduct(g);
  const double bc1 = 1.0 - std::pow(beta1_, t_);
  const double bc2 = 1.0 - std::pow(beta2_, t_);
  param.array() -= lr_ * (m.array() / bc1) / ((v.array() / bc2).sqrt() + eps_);
}

void AdamState::step(EncoderState& enc, const Tape& tape, const TapedParams& params) {
  if (params.weights.size() != enc.layers.size())
    throw InvalidArgument("adam: parameter binding does not match encoder");
  if (m_.empty()) {
    for (const LayerParams& layer : enc.layers) {
      m_.push_back(Mat::Zero(layer.weight.rows(), layer.weight.cols()));
      v_.push_back(Mat::Zero(layer.weight.rows(), layer.weight.cols()));
      m_.push_back(Mat::Zero(layer.bias.rows(), layer.bias.cols()));
      v_.push_back(Mat::Zero(layer.bias.rows(), layer.bias.cols()));
    }
  }
  if (m_.size() != 2 * enc.layers.size())
    throw InvalidArgument("adam: optimizer state belongs to a different network");

  ++t_;
  for (std::size_t l = 0; l < enc.layers.size(); ++l) {
    apply(enc.layers[l].weight, tape.adjoint(params.weights[l]), m_[2 * l], v_[2 * l]);
    apply(enc.layers[l].bias, tape.adjoint(params.biases[l]), m_[2 * l + 1], v_[2 * l + 1]);
  }
}

double masked_accuracy(const Mat& logits, const std::vector<int>& labels,
                       const Mask& mask) {
  if (static_cast<Eigen::Index>(labels.size()) != logits.rows())
    throw InvalidArgument("masked_accuracy: one label per row required");
  if (!mask.empty() && mask.size() != labels.size())
    throw InvalidArgument("masked_accuracy: mask length must match rows");
  long hits = 0, total = 0;
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    if (!mask.empty() && !mask[static_cast<std::size_t>(i)]) continue;
    const int label = labels[static_cast<std::size_t>(i)];
    if (label < 0) continue;
    Eigen::Index best;
    logits.row(i).maxCoeff(&best);
    hits += (static_cast<int>(best) == label);
    ++total;
  }
  if (total == 0) throw DegenerateInput("masked_accuracy: no labeled rows selected");
  return static_cast<double>(hits) / static_cast<double>(total);
}

}  // namespace krgnn
