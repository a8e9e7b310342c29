#include "krgnn/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "krgnn/errors.hpp"
#include "krgnn/kernel.hpp"
#include "krgnn/loss.hpp"
#include "krgnn/rng.hpp"

namespace krgnn {

void TrainConfig::validate() const {
  if (depth < 1) throw InvalidArgument("train: depth must be at least 1");
  if (hidden_dim < 1) throw InvalidArgument("train: hidden_dim must be positive");
  if (epochs < 1) throw InvalidArgument("train: epochs must be positive");
  if (!(lr > 0.0) || !std::isfinite(lr))
    throw InvalidArgument("train: learning rate must be positive");
  if (!(dropout >= 0.0) || !(dropout < 1.0))
    throw InvalidArgument("train: dropout must lie in [0, 1)");
  if (!(lambda >= 0.0) || !std::isfinite(lambda))
    throw InvalidArgument("train: lambda must be nonnegative");
  if (!(ridge > 0.0) || !std::isfinite(ridge))
    throw InvalidArgument("train: ridge must be positive");
  if (sigma_mode != "median" && sigma_mode != "val")
    throw InvalidArgument("train: sigma mode must be 'median' or 'val'");
  if (sigma_mode == "val" && !(sigma_value > 0.0))
    throw InvalidArgument("train: fixed bandwidth must be positive");
  if (kr_subsample != 0 && kr_subsample < 2)
    throw InvalidArgument("train: kr_subsample must be 0 (off) or at least 2");
  if (!(weight_decay >= 0.0) || !std::isfinite(weight_decay))
    throw InvalidArgument("train: weight decay must be nonnegative");
  if (weight_decay > 0.0 && lambda > 0.0)
    throw InvalidArgument("train: weight decay is a baseline for the lambda = 0 path only");
  if (encoder == LayerKind::kDense)
    throw InvalidArgument("train: graph trainers need a gcn or sage encoder");
}

Mat one_hot(const std::vector<int>& labels, int num_classes) {
  if (num_classes < 1) throw InvalidArgument("one_hot: need at least one class");
  Mat oh = Mat::Zero(static_cast<Eigen::Index>(labels.size()), num_classes);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const int label = labels[i];
    if (label >= num_classes)
      throw InvalidArgument("one_hot: label " + std::to_string(label) + " outside [0, " +
                            std::to_string(num_classes) + ")");
    if (label >= 0) oh(static_cast<Eigen::Index>(i), label) = 1.0;
  }
  return oh;
}

int count_classes(const std::vector<int>& labels) {
  int mx = -1;
  for (int v : labels) mx = std::max(mx, v);
  if (mx < 0) throw DegenerateInput("count_classes: no labeled entries");
  return mx + 1;
}

Mat standardize_features(const Mat& features, const Mask& fit_mask) {
  if (!fit_mask.empty() &&
      static_cast<Eigen::Index>(fit_mask.size()) != features.rows())
    throw InvalidArgument("standardize_features: mask length must match rows");
  std::vector<Eigen::Index> fit;
  for (Eigen::Index i = 0; i < features.rows(); ++i)
    if (fit_mask.empty() || fit_mask[static_cast<std::size_t>(i)]) fit.push_back(i);
  if (fit.empty()) throw DegenerateInput("standardize_features: mask selects no rows");

  Mat out = features;
  for (Eigen::Index j = 0; j < features.cols(); ++j) {
    double mean = 0.0;
    for (Eigen::Index i : fit) mean += features(i, j);
    mean /= static_cast<double>(fit.size());
    double var = 0.0;
    for (Eigen::Index i : fit) {
      const double d = features(i, j) - mean;
      var += d * d;
    }
    var /= static_cast<double>(fit.size());
    const double sd = std::sqrt(var);
    out.col(j).array() -= mean;
    if (sd > 1e-12) out.col(j) /= sd;  // constant columns stay centered only
  }
  return out;
}

namespace {

// Median-heuristic bandwidth that stays usable mid-training: a collapsed
// representation (zero median distance) falls back to 1 instead of aborting
// the run.
double safe_bandwidth(const Mat& x) {
  try {
    return median_bandwidth(x);
  } catch (const DegenerateInput&) {
    return 1.0;
  }
}

double pick_sigma(const TrainConfig& cfg, const Mat& conditioning) {
  return cfg.sigma_mode == "median" ? safe_bandwidth(conditioning) : cfg.sigma_value;
}

std::vector<int> mask_indices(const Mask& mask) {
  std::vector<int> idx;
  for (std::size_t i = 0; i < mask.size(); ++i)
    if (mask[i]) idx.push_back(static_cast<int>(i));
  return idx;
}

std::vector<int> encoder_dims(int input_dim, const TrainConfig& cfg) {
  std::vector<int> dims(static_cast<std::size_t>(cfg.depth) + 1, cfg.hidden_dim);
  dims[0] = input_dim;
  return dims;
}

}  // namespace

std::vector<int> subsample_rows(const std::vector<int>& candidates, int target,
                                Rng& rng) {
  if (target <= 0 || static_cast<int>(candidates.size()) <= target) return candidates;
  std::vector<int> pool = candidates;
  std::shuffle(pool.begin(), pool.end(), rng);
  pool.resize(static_cast<std::size_t>(target));
  std::sort(pool.begin(), pool.end());
  return pool;
}

GirlResult train_girl(const NodeGraph& g, const TrainConfig& cfg) {
  cfg.validate();
  g.validate();
  if (!g.has_features()) throw InvalidArgument("train_girl: graph has no features");

  const Mask everyone(static_cast<std::size_t>(g.num_nodes), 1);
  const Mat feat =
      cfg.standardize ? standardize_features(g.features, everyone) : g.features;
  const Mat a_norm =
      cfg.encoder == LayerKind::kGcn ? normalized_adjacency(g) : Mat();
  const Mat a_mean =
      cfg.encoder == LayerKind::kSage ? mean_aggregator(g) : Mat();

  Rng init_rng = make_rng(derive_seed(cfg.seed, 0));
  Rng neighbor_rng = make_rng(derive_seed(cfg.seed, 1));
  Rng dropout_rng = make_rng(derive_seed(cfg.seed, 2));
  Rng subsample_rng = make_rng(derive_seed(cfg.seed, 3));

  GirlResult result;
  result.encoder = init_encoder(cfg.encoder, encoder_dims(static_cast<int>(feat.cols()), cfg),
                                cfg.activation, init_rng);
  AdamState opt(cfg.lr);

  std::vector<int> all_rows(static_cast<std::size_t>(g.num_nodes));
  std::iota(all_rows.begin(), all_rows.end(), 0);

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    Tape tape;
    TapedParams params = bind_params(tape, result.encoder);
    DiffValue input = tape.leaf(feat);
    std::vector<DiffValue> hidden = encoder_forward(
        tape, result.encoder, params, input, a_norm, a_mean, cfg.dropout, &dropout_rng);

    DiffValue total;
    std::vector<double> layer_losses;
    for (int l = 1; l <= cfg.depth; ++l) {
      DiffValue out = hidden[static_cast<std::size_t>(l)];
      DiffValue prev = hidden[static_cast<std::size_t>(l - 1)];
      // One uniformly drawn neighbor per node, resampled every epoch and layer.
      DiffValue neigh = tape.gather_rows(prev, sample_one_neighbor(g, neighbor_rng));

      std::vector<int> rows = subsample_rows(all_rows, cfg.kr_subsample, subsample_rng);
      if (static_cast<int>(rows.size()) < g.num_nodes) {
        out = tape.gather_rows(out, rows);
        prev = tape.gather_rows(prev, rows);
        neigh = tape.gather_rows(neigh, rows);
      }
      if (cfg.detach_targets) {
        prev = tape.leaf(tape.value(prev));
        neigh = tape.leaf(tape.value(neigh));
      }

      const double sigma = pick_sigma(cfg, tape.value(out));
      DiffValue term = tape.add(kr_loss_ridge(tape, out, prev, sigma, cfg.ridge),
                                kr_loss_ridge(tape, out, neigh, sigma, cfg.ridge));
      layer_losses.push_back(tape.value(term)(0, 0));
      total = total.valid() ? tape.add(total, term) : term;
    }

    tape.backward(total);
    opt.step(result.encoder, tape, params);
    result.metrics.push_back({epoch, "all", "loss", tape.value(total)(0, 0)});
    for (int l = 1; l <= cfg.depth; ++l)
      result.metrics.push_back({epoch, "all", "layer" + std::to_string(l) + "_loss",
                                layer_losses[static_cast<std::size_t>(l - 1)]});
  }

  result.final_hidden = encoder_forward_values(result.encoder, feat, a_norm, a_mean);
  return result;
}

Mat girl_embeddings(const NodeGraph& g, const EncoderState& encoder,
                    bool standardize) {
  g.validate();
  if (!g.has_features()) throw InvalidArgument("girl_embeddings: graph has no features");
  if (encoder.layers.empty()) throw InvalidArgument("girl_embeddings: empty encoder");
  bool has_gcn = false, has_sage = false;
  for (const LayerParams& layer : encoder.layers) {
    has_gcn = has_gcn || layer.kind == LayerKind::kGcn;
    has_sage = has_sage || layer.kind == LayerKind::kSage;
  }
  const Mask everyone(static_cast<std::size_t>(g.num_nodes), 1);
  const Mat feat =
      standardize ? standardize_features(g.features, everyone) : g.features;
  const Mat a_norm = has_gcn ? normalized_adjacency(g) : Mat();
  const Mat a_mean = has_sage ? mean_aggregator(g) : Mat();
  return encoder_forward_values(encoder, feat, a_norm, a_mean).back();
}

SupervisedResult train_supervised(const NodeGraph& g, const SplitMasks& masks,
                                  const TrainConfig& cfg) {
  cfg.validate();
  g.validate();
  if (!g.has_features()) throw InvalidArgument("train_supervised: graph has no features");
  if (!g.has_labels()) throw InvalidArgument("train_supervised: graph has no labels");
  if (static_cast<int>(masks.train.size()) != g.num_nodes ||
      static_cast<int>(masks.val.size()) != g.num_nodes ||
      static_cast<int>(masks.test.size()) != g.num_nodes)
    throw InvalidArgument("train_supervised: mask lengths must match node count");

  const int num_classes = count_classes(g.labels);
  const Mat feat =
      cfg.standardize ? standardize_features(g.features, masks.train) : g.features;
  const Mat a_norm =
      cfg.encoder == LayerKind::kGcn ? normalized_adjacency(g) : Mat();
  const Mat a_mean =
      cfg.encoder == LayerKind::kSage ? mean_aggregator(g) : Mat();
  const std::vector<int> train_idx = mask_indices(masks.train);
  if (train_idx.empty()) throw DegenerateInput("train_supervised: empty train mask");

  // One-hot targets of the training rows, fixed across epochs.
  const Mat oh_full = one_hot(g.labels, num_classes);
  Mat oh_train(static_cast<Eigen::Index>(train_idx.size()), num_classes);
  for (std::size_t i = 0; i < train_idx.size(); ++i)
    oh_train.row(static_cast<Eigen::Index>(i)) = oh_full.row(train_idx[i]);

  Rng init_rng = make_rng(derive_seed(cfg.seed, 0));
  Rng dropout_rng = make_rng(derive_seed(cfg.seed, 2));
  Rng subsample_rng = make_rng(derive_seed(cfg.seed, 3));

  SupervisedResult result;
  result.encoder = init_encoder(cfg.encoder, encoder_dims(static_cast<int>(feat.cols()), cfg),
                                cfg.activation, init_rng);
  result.decoder = init_mlp({cfg.hidden_dim, cfg.hidden_dim, cfg.hidden_dim, num_classes},
                            cfg.activation, init_rng);
  AdamState enc_opt(cfg.lr, 0.9, 0.999, 1e-8, cfg.weight_decay);
  AdamState dec_opt(cfg.lr, 0.9, 0.999, 1e-8, cfg.weight_decay);

  double best_val = -1.0;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    Tape tape;
    TapedParams enc_params = bind_params(tape, result.encoder);
    TapedParams dec_params = bind_params(tape, result.decoder);
    DiffValue input = tape.leaf(feat);
    std::vector<DiffValue> hidden = encoder_forward(
        tape, result.encoder, enc_params, input, a_norm, a_mean, cfg.dropout, &dropout_rng);
    DiffValue logits =
        mlp_forward(tape, result.decoder, dec_params, hidden.back(), 0.0, nullptr);

    DiffValue loss = tape.softmax_cross_entropy(logits, g.labels, masks.train);
    if (cfg.lambda > 0.0) {
      // Residual penalty of predicting the one-hot labels from each hidden
      // layer, evaluated on training rows only. The lambda = 0 path above
      // records an identical tape prefix and draws identical randomness.
      DiffValue reg;
      for (int l = 1; l <= cfg.depth; ++l) {
        std::vector<int> rows = subsample_rows(train_idx, cfg.kr_subsample, subsample_rng);
        DiffValue x = tape.gather_rows(hidden[static_cast<std::size_t>(l)], rows);
        DiffValue y;
        if (static_cast<int>(rows.size()) == static_cast<int>(train_idx.size())) {
          y = tape.leaf(oh_train);
        } else {
          Mat oh_rows(static_cast<Eigen::Index>(rows.size()), num_classes);
          for (std::size_t i = 0; i < rows.size(); ++i)
            oh_rows.row(static_cast<Eigen::Index>(i)) = oh_full.row(rows[i]);
          y = tape.leaf(oh_rows);
        }
        const double sigma = pick_sigma(cfg, tape.value(x));
        DiffValue term = kr_loss_ridge(tape, x, y, sigma, cfg.ridge);
        reg = reg.valid() ? tape.add(reg, term) : term;
      }
      loss = tape.add(loss, tape.scale(reg, cfg.lambda));
    }

    tape.backward(loss);
    enc_opt.step(result.encoder, tape, enc_params);
    dec_opt.step(result.decoder, tape, dec_params);

    const double train_loss = tape.value(loss)(0, 0);
    const std::vector<Mat> hv = encoder_forward_values(result.encoder, feat, a_norm, a_mean);
    const Mat logits_v = mlp_forward_values(result.decoder, hv.back());
    const double train_acc = masked_accuracy(logits_v, g.labels, masks.train);
    const double val_acc = masked_accuracy(logits_v, g.labels, masks.val);
    result.metrics.push_back({epoch, "train", "loss", train_loss});
    result.metrics.push_back({epoch, "train", "accuracy", train_acc});
    result.metrics.push_back({epoch, "val", "accuracy", val_acc});
    result.final_train_loss = train_loss;
    if (val_acc > best_val) {
      best_val = val_acc;
      result.best_val_accuracy = val_acc;
      result.test_accuracy_at_best_val = masked_accuracy(logits_v, g.labels, masks.test);
    }
  }
  return result;
}

DownstreamResult downstream_eval(const Mat& features, const std::vector<int>& labels,
                                 const SplitMasks& masks, int num_classes,
                                 int hidden_dim, int epochs, double lr,
                                 std::uint64_t seed) {
  if (static_cast<Eigen::Index>(labels.size()) != features.rows())
    throw InvalidArgument("downstream_eval: one label per feature row required");
  if (epochs < 1 || hidden_dim < 1 || !(lr > 0.0))
    throw InvalidArgument("downstream_eval: bad classifier settings");

  const Mat feat = standardize_features(features, masks.train);
  Rng init_rng = make_rng(derive_seed(seed, 0));
  EncoderState mlp = init_mlp({static_cast<int>(feat.cols()), hidden_dim, num_classes},
                              Activation::kElu, init_rng);
  AdamState opt(lr);

  DownstreamResult best;
  double best_val = -1.0;
  for (int epoch = 0; epoch < epochs; ++epoch) {
    Tape tape;
    TapedParams params = bind_params(tape, mlp);
    DiffValue logits = mlp_forward(tape, mlp, params, tape.leaf(feat), 0.0, nullptr);
    DiffValue loss = tape.softmax_cross_entropy(logits, labels, masks.train);
    tape.backward(loss);
    opt.step(mlp, tape, params);

    const Mat logits_v = mlp_forward_values(mlp, feat);
    const double val_acc = masked_accuracy(logits_v, labels, masks.val);
    if (val_acc > best_val) {
      best_val = val_acc;
      best.train_accuracy = masked_accuracy(logits_v, labels, masks.train);
      best.val_accuracy = val_acc;
      best.test_accuracy = masked_accuracy(logits_v, labels, masks.test);
    }
  }
  return best;
}

}  // namespace krgnn
