#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "krgnn/graph.hpp"
#include "krgnn/nn.hpp"
#include "krgnn/types.hpp"

namespace krgnn {

// Shared knobs for both training modes. sigma_mode "median" recomputes the
// bandwidth from the current conditioning samples at every loss evaluation;
// "val" pins it to sigma_value.
struct TrainConfig {
  LayerKind encoder = LayerKind::kSage;
  Activation activation = Activation::kRelu;
  int depth = 2;
  int hidden_dim = 16;
  int epochs = 150;
  double lr = 0.01;
  double dropout = 0.0;
  double lambda = 1.0;          // weight of the regression-residual terms
  double ridge = 1e-4;          // per-sample ridge; the solve adds n*ridge*I
  std::string sigma_mode = "median";
  double sigma_value = 1.0;
  bool detach_targets = false;  // stop gradients through the target side
  int kr_subsample = 0;         // 0 = use all rows; otherwise >= 2
  double weight_decay = 0.0;    // baseline knob, only valid with lambda = 0
  bool standardize = true;      // per-feature standardization before encoding
  std::uint64_t seed = 0;

  void validate() const;  // throws InvalidArgument
};

// Without-replacement row subsample, returned sorted. target <= 0 or
// target >= |candidates| returns the candidates unchanged (and draws no
// randomness). Trainers apply one draw to every matrix of a loss term so the
// rows stay aligned.
std::vector<int> subsample_rows(const std::vector<int>& candidates, int target,
                                Rng& rng);

// One row of a metrics CSV.
struct MetricRecord {
  int epoch;
  std::string split;   // "train" / "val" / "test" / "all"
  std::string metric;  // e.g. "loss", "accuracy"
  double value;
};

struct GirlResult {
  EncoderState encoder;
  // Per epoch: "all/loss" total plus one "all/layer<l>_loss" row per layer.
  std::vector<MetricRecord> metrics;
  std::vector<Mat> final_hidden;  // payload forward at the end, per layer
};

// Self-supervised training. Each epoch records one tape over all layers:
// for layer l with input H^{l-1} and output H^l, the loss adds the residual
// of predicting H^{l-1} from H^l and of predicting Z^{l-1} from H^l, where
// Z^{l-1} gathers one uniformly sampled neighbor row per node (one sample
// per layer per epoch). A single optimizer step follows.
GirlResult train_girl(const NodeGraph& g, const TrainConfig& cfg);

struct SupervisedResult {
  EncoderState encoder;  // graph layers + final dense decoder stack
  EncoderState decoder;
  std::vector<MetricRecord> metrics;  // per-epoch train/val loss + accuracy
  double final_train_loss = 0.0;
  double best_val_accuracy = 0.0;
  double test_accuracy_at_best_val = 0.0;
};

// Supervised node classification: cross-entropy over train-mask rows plus
// lambda * sum over layers of the residual loss of predicting the one-hot
// label matrix from that layer's train-mask rows. lambda = 0 must consume
// no randomness beyond the lambda > 0 path's shared setup, so runs differing
// only in lambda start from identical parameters.
SupervisedResult train_supervised(const NodeGraph& g, const SplitMasks& masks,
                                  const TrainConfig& cfg);

struct DownstreamResult {
  double train_accuracy = 0.0;
  double val_accuracy = 0.0;
  double test_accuracy = 0.0;   // at the best-val epoch
};

// Frozen-feature evaluation: trains a 2-layer ELU MLP classifier on
// `features` rows under the train mask, reports accuracy at the best
// validation epoch.
DownstreamResult downstream_eval(const Mat& features, const std::vector<int>& labels,
                                 const SplitMasks& masks, int num_classes,
                                 int hidden_dim, int epochs, double lr,
                                 std::uint64_t seed);

// Final-layer representation of every node under a frozen encoder: features
// standardized over all nodes (unless standardize is off), then a clean
// forward pass. Matches the last entry of GirlResult::final_hidden for the
// encoder train_girl returned under the same standardize setting.
Mat girl_embeddings(const NodeGraph& g, const EncoderState& encoder,
                    bool standardize = true);

// One-hot encoding of labels (label -1 -> all-zero row).
Mat one_hot(const std::vector<int>& labels, int num_classes);

int count_classes(const std::vector<int>& labels);  // max label + 1

// Column-wise standardization fitted on masked rows (mean 0 / sd 1; constant
// columns are left centered only), applied to all rows.
Mat standardize_features(const Mat& features, const Mask& fit_mask);

}  // namespace krgnn
