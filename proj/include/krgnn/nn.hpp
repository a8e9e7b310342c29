#pragma once

#include <string>
#include <vector>

#include "krgnn/graph.hpp"
#include "krgnn/rng.hpp"
#include "krgnn/tape.hpp"
#include "krgnn/types.hpp"

namespace krgnn {

enum class Activation { kRelu, kElu, kNone };
enum class LayerKind { kGcn, kSage, kDense };

Activation parse_activation(const std::string& s);  // "relu" / "elu" / "none"
std::string to_string(Activation a);
std::string to_string(LayerKind k);

// One trainable layer. For kGcn the update is act(A_norm H W + b); for kSage
// it is act([H | A_mean H] W + b) so weight has 2*in rows; kDense ignores the
// graph. Bias is 1 x out.
struct LayerParams {
  LayerKind kind = LayerKind::kDense;
  Mat weight;
  Mat bias;

  int in_dim() const;
  int out_dim() const { return static_cast<int>(weight.cols()); }
};

// A stack of layers sharing one activation (applied after every layer except,
// for decoders, the last one — see mlp_forward).
struct EncoderState {
  std::vector<LayerParams> layers;
  Activation activation = Activation::kRelu;

  int depth() const { return static_cast<int>(layers.size()); }
};

// Uniform fan-in init: entries ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in)); biases 0.
LayerParams init_layer(LayerKind kind, int in_dim, int out_dim, Rng& rng);

// Graph encoder of the given kind with dims[0] -> dims[1] -> ... -> dims.back().
EncoderState init_encoder(LayerKind kind, const std::vector<int>& dims,
                          Activation act, Rng& rng);

// Dense MLP with activation between layers and none after the last.
EncoderState init_mlp(const std::vector<int>& dims, Activation act, Rng& rng);

// Leaves for every weight/bias of `enc`, freshly recorded on `tape`,
// in layer order. Gradients are read back out of the same handles.
struct TapedParams {
  std::vector<DiffValue> weights;
  std::vector<DiffValue> biases;
};
TapedParams bind_params(Tape& tape, const EncoderState& enc);

// Taped forward pass through a graph encoder. Propagation matrices (A_norm /
// A_mean) are constant leaves. Returns the post-activation output of every
// layer: hidden[0] is the input leaf, hidden[l] the output of layer l.
// dropout > 0 inserts inverted dropout after each activation (training only).
std::vector<DiffValue> encoder_forward(Tape& tape, const EncoderState& enc,
                                       const TapedParams& params, DiffValue input,
                                       const Mat& a_norm, const Mat& a_mean,
                                       double dropout, Rng* dropout_rng);

// Payload-only forward (no tape). Must agree bitwise with encoder_forward at
// dropout = 0. Returns the same per-layer list.
std::vector<Mat> encoder_forward_values(const EncoderState& enc, const Mat& input,
                                        const Mat& a_norm, const Mat& a_mean);

// Taped dense-MLP forward (activation between layers, none after the last).
DiffValue mlp_forward(Tape& tape, const EncoderState& mlp, const TapedParams& params,
                      DiffValue input, double dropout, Rng* dropout_rng);
Mat mlp_forward_values(const EncoderState& mlp, const Mat& input);

// Adam with bias correction; one (m, v) slot per parameter matrix.
class AdamState {
 public:
  AdamState(double lr = 1e-3, double beta1 = 0.9, double beta2 = 0.999,
            double eps = 1e-8, double weight_decay = 0.0);

  // Applies one update to every weight/bias of `enc` from the adjoints of the
  // corresponding taped handles. Call after tape.backward().
  void step(EncoderState& enc, const Tape& tape, const TapedParams& params);

  int steps_taken() const { return t_; }

 private:
  void apply(Mat& param, const Mat& grad, Mat& m, Mat& v);

  double lr_, beta1_, beta2_, eps_, weight_decay_;
  int t_ = 0;
  std::vector<Mat> m_, v_;  // one pair per parameter, in bind order
};

// Accuracy of argmax(logits) vs labels over masked rows; mask may be empty
// (= all rows). Rows with label -1 are skipped.
double masked_accuracy(const Mat& logits, const std::vector<int>& labels,
                       const Mask& mask);

}  // namespace krgnn
