#include "krgnn/cli.hpp"

#include <cstdint>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "krgnn/errors.hpp"
#include "krgnn/graph.hpp"
#include "krgnn/io.hpp"
#include "krgnn/kernel.hpp"
#include "krgnn/rng.hpp"
#include "krgnn/synthetic.hpp"
#include "krgnn/train.hpp"
#include "krgnn/version.hpp"

namespace krgnn {

namespace {

// Independent RNG stream ids hung off the run seed.
constexpr std::uint64_t kSplitStream = 100;
constexpr std::uint64_t kDownstreamStream = 101;
constexpr std::uint64_t kGenStream = 200;

struct Settings {
  std::uint64_t seed = 0;
  std::string out = "runs";
  std::string config_path;

  // estimator
  std::string sigma = "median";  // "median" or a positive value
  double p = 2.0;
  double eps_rank = 1e-3;
  double ridge = 1e-4;

  // sweeps
  int n = 1000;
  int repeats = 10;
  std::string alphas;  // comma-separated; empty = per-experiment default

  // model / training
  std::string encoder = "sage";
  std::string activation;  // empty = per-subcommand default
  int depth = 2;
  int hidden = 16;
  int epochs = 150;
  double lr = 0.01;
  double dropout = 0.0;
  double lambda = 1.0;
  bool detach_targets = false;
  bool raw_features = false;
  int kr_subsample = 0;
  double weight_decay = 0.0;
  double train_frac = 0.6;
  double val_frac = 0.2;
  int downstream_epochs = 300;
  int downstream_hidden = 16;
  double downstream_lr = 0.01;

  // datasets
  std::string edges, features, labels, checkpoint;
  int blocks = 4;
  int block_size = 60;
  double p_in = 0.1;
  double p_out = 0.01;
  bool chain = false;
  double p_adjacent = 0.05;
  int feat_dim = 8;
  double shift = 1.0;
};

double to_double(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const double v = std::stod(value, &used);
    if (used != value.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    throw InvalidArgument("config key '" + key + "': expected a real number, got '" +
                          value + "'");
  }
}

long to_long(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const long v = std::stol(value, &used);
    if (used != value.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    throw InvalidArgument("config key '" + key + "': expected an integer, got '" +
                          value + "'");
  }
}

std::uint64_t to_u64(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const std::uint64_t v = std::stoull(value, &used);
    if (used != value.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    throw InvalidArgument("config key '" + key + "': expected a nonnegative integer, got '" +
                          value + "'");
  }
}

bool to_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  throw InvalidArgument("config key '" + key + "': expected a boolean, got '" + value + "'");
}

// One settable knob: how to assign a config-file string, plus every CLI
// option bound to the same field (at most one can have been parsed).
struct Binding {
  std::function<void(const std::string&)> set;
  std::vector<CLI::Option*> options;
};
using Bindings = std::map<std::string, Binding>;

void apply_config(Settings& s, Bindings& bindings) {
  if (s.config_path.empty()) return;
  const auto kv = read_config_file(s.config_path);
  for (const auto& [key, value] : kv) {
    auto it = bindings.find(key);
    if (it == bindings.end()) {
      std::string valid;
      for (const auto& [k, unused] : bindings) {
        if (!valid.empty()) valid += ", ";
        valid += k;
      }
      throw InvalidArgument("config key '" + key + "' is not recognized; valid keys: " +
                            valid);
    }
    bool overridden = false;
    for (const CLI::Option* opt : it->second.options)
      overridden = overridden || (opt != nullptr && opt->count() > 0);
    if (!overridden) it->second.set(value);
  }
}

std::vector<double> parse_alphas(const std::string& csv) {
  std::vector<double> out;
  std::stringstream ss(csv);
  std::string cell;
  while (std::getline(ss, cell, ','))
    out.push_back(to_double("alphas", cell));
  if (out.empty()) throw InvalidArgument("alphas: empty list");
  return out;
}

KernelConfig make_kernel_config(const Settings& s) {
  KernelConfig kc;
  if (s.sigma == "median") {
    kc.sigma_median = true;
  } else {
    kc.sigma_median = false;
    kc.sigma = to_double("sigma", s.sigma);
  }
  kc.p = s.p;
  kc.eps_rank = s.eps_rank;
  kc.lambda_ridge = s.ridge;
  kc.validate();
  return kc;
}

TrainConfig make_train_config(const Settings& s, const std::string& subcommand) {
  TrainConfig tc;
  if (s.encoder == "gcn")
    tc.encoder = LayerKind::kGcn;
  else if (s.encoder == "sage")
    tc.encoder = LayerKind::kSage;
  else
    throw InvalidArgument("encoder must be 'gcn' or 'sage', got '" + s.encoder + "'");
  std::string act = s.activation;
  if (act.empty()) act = subcommand == "supervised" ? "relu" : "elu";
  tc.activation = parse_activation(act);
  tc.depth = s.depth;
  tc.hidden_dim = s.hidden;
  tc.epochs = s.epochs;
  tc.lr = s.lr;
  tc.dropout = s.dropout;
  tc.lambda = subcommand == "supervised" ? s.lambda : 0.0;
  tc.ridge = s.ridge;
  if (s.sigma == "median") {
    tc.sigma_mode = "median";
  } else {
    tc.sigma_mode = "val";
    tc.sigma_value = to_double("sigma", s.sigma);
  }
  tc.detach_targets = s.detach_targets;
  tc.standardize = !s.raw_features;
  tc.kr_subsample = s.kr_subsample;
  tc.weight_decay = subcommand == "supervised" ? s.weight_decay : 0.0;
  tc.seed = s.seed;
  tc.validate();
  return tc;
}

std::map<std::string, std::string> echo_settings(const Settings& s) {
  std::map<std::string, std::string> m;
  m["seed"] = std::to_string(s.seed);
  m["out"] = s.out;
  m["sigma"] = s.sigma;
  m["p"] = format_double(s.p);
  m["eps_rank"] = format_double(s.eps_rank);
  m["ridge"] = format_double(s.ridge);
  m["n"] = std::to_string(s.n);
  m["repeats"] = std::to_string(s.repeats);
  m["alphas"] = s.alphas;
  m["encoder"] = s.encoder;
  m["activation"] = s.activation;
  m["depth"] = std::to_string(s.depth);
  m["hidden"] = std::to_string(s.hidden);
  m["epochs"] = std::to_string(s.epochs);
  m["lr"] = format_double(s.lr);
  m["dropout"] = format_double(s.dropout);
  m["lambda"] = format_double(s.lambda);
  m["detach_targets"] = s.detach_targets ? "true" : "false";
  m["raw_features"] = s.raw_features ? "true" : "false";
  m["kr_subsample"] = std::to_string(s.kr_subsample);
  m["weight_decay"] = format_double(s.weight_decay);
  m["train_frac"] = format_double(s.train_frac);
  m["val_frac"] = format_double(s.val_frac);
  m["downstream_epochs"] = std::to_string(s.downstream_epochs);
  m["downstream_hidden"] = std::to_string(s.downstream_hidden);
  m["downstream_lr"] = format_double(s.downstream_lr);
  m["edges"] = s.edges;
  m["features"] = s.features;
  m["labels"] = s.labels;
  m["checkpoint"] = s.checkpoint;
  m["blocks"] = std::to_string(s.blocks);
  m["block_size"] = std::to_string(s.block_size);
  m["p_in"] = format_double(s.p_in);
  m["p_out"] = format_double(s.p_out);
  m["chain"] = s.chain ? "true" : "false";
  m["p_adjacent"] = format_double(s.p_adjacent);
  m["feat_dim"] = std::to_string(s.feat_dim);
  m["shift"] = format_double(s.shift);
  return m;
}

std::string run_dir(const Settings& s, const std::string& canonical) {
  return s.out + "/" + canonical + "-" + std::to_string(s.seed);
}

NodeGraph make_block_graph(const Settings& s) {
  Rng rng = make_rng(derive_seed(s.seed, kGenStream));
  if (s.chain)
    return generate_chain_sbm(s.blocks, s.block_size, s.p_in, s.p_adjacent, s.feat_dim,
                              s.shift, rng);
  return generate_sbm(s.blocks, s.block_size, s.p_in, s.p_out, s.feat_dim, s.shift, rng);
}

// Loads the dataset named on the command line, or generates a block-model
// graph when no paths are given. Generated datasets are saved into `dir` so
// the run is inspectable and re-evaluable; the written filenames are appended
// to `outputs`.
NodeGraph obtain_graph(const Settings& s, const std::string& dir,
                       std::vector<std::string>* outputs) {
  if (!s.edges.empty() || !s.features.empty()) {
    if (s.edges.empty() || s.features.empty())
      throw InvalidArgument("dataset paths: need both --edges and --features");
    return load_graph(s.edges, s.features, s.labels);
  }
  NodeGraph g = make_block_graph(s);
  if (outputs) {
    save_edge_list(g, dir + "/edges.txt");
    save_features_csv(g, dir + "/features.csv");
    save_labels(g, dir + "/labels.txt");
    outputs->push_back("edges.txt");
    outputs->push_back("features.csv");
    outputs->push_back("labels.txt");
  }
  return g;
}

RunManifest start_manifest(const Settings& s, const std::string& canonical) {
  RunManifest m;
  m.subcommand = canonical;
  m.seed = s.seed;
  m.config = echo_settings(s);
  m.started_at = iso_utc_now();
  m.tool_version = kVersion;
  return m;
}

void finish_manifest(RunManifest& m, const std::string& dir) {
  m.finished_at = iso_utc_now();
  write_manifest(m, dir + "/manifest.json");
}

int run_synthetic(const Settings& s, const std::string& which) {
  const std::string canonical = "synthetic-" + which;
  const std::string dir = run_dir(s, canonical);
  ensure_dir(dir);
  RunManifest manifest = start_manifest(s, canonical);

  const KernelConfig kc = make_kernel_config(s);
  std::vector<SweepPoint> points;
  if (which == "1d") {
    points = exp_1d(s.n, s.repeats, s.seed, kc);
  } else {
    const std::string grid =
        !s.alphas.empty() ? s.alphas : (which == "100d" ? "0,0.25,0.5,1,2" : "0,0.3,0.6,0.9");
    const std::vector<double> alphas = parse_alphas(grid);
    points = which == "100d" ? exp_100d(alphas, s.n, s.repeats, s.seed, kc)
                             : exp_mi(alphas, s.n, s.repeats, s.seed, kc);
  }
  write_sweep_csv(points, dir + "/sweep.csv");
  manifest.outputs.push_back("sweep.csv");

  double mean_sigma = 0.0;
  for (const SweepPoint& pt : points) mean_sigma += pt.mean_sigma;
  manifest.config["mean_sigma_used"] = format_double(mean_sigma / points.size());
  finish_manifest(manifest, dir);
  std::cout << dir << "/sweep.csv\n";
  return 0;
}

void append_downstream_rows(std::vector<MetricRecord>& metrics, int epoch,
                            const DownstreamResult& ds) {
  metrics.push_back({epoch, "train", "downstream_accuracy", ds.train_accuracy});
  metrics.push_back({epoch, "val", "downstream_accuracy", ds.val_accuracy});
  metrics.push_back({epoch, "test", "downstream_accuracy", ds.test_accuracy});
}

int run_girl(const Settings& s) {
  const std::string dir = run_dir(s, "girl");
  ensure_dir(dir);
  RunManifest manifest = start_manifest(s, "girl");

  NodeGraph g = obtain_graph(s, dir, &manifest.outputs);
  const TrainConfig tc = make_train_config(s, "girl");
  GirlResult result = train_girl(g, tc);

  std::vector<MetricRecord> metrics = result.metrics;
  if (g.has_labels()) {
    Rng split_rng = make_rng(derive_seed(s.seed, kSplitStream));
    const SplitMasks masks = split_nodes(g.num_nodes, s.train_frac, s.val_frac, split_rng);
    const DownstreamResult ds = downstream_eval(
        girl_embeddings(g, result.encoder), g.labels, masks, count_classes(g.labels),
        s.downstream_hidden, s.downstream_epochs, s.downstream_lr,
        derive_seed(s.seed, kDownstreamStream));
    append_downstream_rows(metrics, tc.epochs - 1, ds);
  }

  write_metrics_csv(metrics, dir + "/metrics.csv");
  save_checkpoint(result.encoder, dir + "/checkpoint.json");
  manifest.outputs.push_back("metrics.csv");
  manifest.outputs.push_back("checkpoint.json");
  finish_manifest(manifest, dir);
  std::cout << dir << "/metrics.csv\n";
  return 0;
}

int run_supervised(const Settings& s) {
  const std::string dir = run_dir(s, "supervised");
  ensure_dir(dir);
  RunManifest manifest = start_manifest(s, "supervised");

  NodeGraph g = obtain_graph(s, dir, &manifest.outputs);
  if (!g.has_labels())
    throw InvalidArgument("supervised: dataset has no labels");
  Rng split_rng = make_rng(derive_seed(s.seed, kSplitStream));
  const SplitMasks masks = split_nodes(g.num_nodes, s.train_frac, s.val_frac, split_rng);
  const TrainConfig tc = make_train_config(s, "supervised");
  SupervisedResult result = train_supervised(g, masks, tc);

  std::vector<MetricRecord> metrics = result.metrics;
  metrics.push_back({tc.epochs - 1, "val", "best_accuracy", result.best_val_accuracy});
  metrics.push_back(
      {tc.epochs - 1, "test", "accuracy_at_best_val", result.test_accuracy_at_best_val});

  write_metrics_csv(metrics, dir + "/metrics.csv");
  save_checkpoint(result.encoder, dir + "/checkpoint.json");
  save_checkpoint(result.decoder, dir + "/decoder.json");
  manifest.outputs.push_back("metrics.csv");
  manifest.outputs.push_back("checkpoint.json");
  manifest.outputs.push_back("decoder.json");
  finish_manifest(manifest, dir);
  std::cout << dir << "/metrics.csv\n";
  return 0;
}

int run_eval(const Settings& s) {
  const std::string dir = run_dir(s, "eval");
  ensure_dir(dir);
  RunManifest manifest = start_manifest(s, "eval");

  const EncoderState encoder = load_checkpoint(s.checkpoint);
  const NodeGraph g = load_graph(s.edges, s.features, s.labels);
  if (!g.has_labels()) throw InvalidArgument("eval: dataset has no labels");

  const Mat embeddings = girl_embeddings(g, encoder, !s.raw_features);
  Rng split_rng = make_rng(derive_seed(s.seed, kSplitStream));
  const SplitMasks masks = split_nodes(g.num_nodes, s.train_frac, s.val_frac, split_rng);
  const DownstreamResult ds = downstream_eval(
      embeddings, g.labels, masks, count_classes(g.labels), s.downstream_hidden,
      s.downstream_epochs, s.downstream_lr, derive_seed(s.seed, kDownstreamStream));

  std::vector<MetricRecord> metrics;
  append_downstream_rows(metrics, 0, ds);
  write_metrics_csv(metrics, dir + "/metrics.csv");
  manifest.outputs.push_back("metrics.csv");
  finish_manifest(manifest, dir);
  std::cout << dir << "/metrics.csv\n";
  return 0;
}

int run_gen_sbm(const Settings& s) {
  const std::string dir = run_dir(s, "gen-sbm");
  ensure_dir(dir);
  RunManifest manifest = start_manifest(s, "gen-sbm");

  const NodeGraph g = make_block_graph(s);
  save_edge_list(g, dir + "/edges.txt");
  save_features_csv(g, dir + "/features.csv");
  save_labels(g, dir + "/labels.txt");
  manifest.outputs = {"edges.txt", "features.csv", "labels.txt"};
  finish_manifest(manifest, dir);
  std::cout << dir << "\n";
  return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args) {
  Settings s;
  Bindings bindings;

  CLI::App app{"Kernel-regression loss toolkit: closed-form validation sweeps and "
               "graph encoder training"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  const auto bind = [&bindings](const std::string& key, CLI::Option* opt, auto setter) {
    Binding& b = bindings[key];
    if (!b.set) b.set = setter;
    if (opt) b.options.push_back(opt);
  };

  const auto add_common = [&](CLI::App* cmd) {
    bind("seed", cmd->add_option("--seed", s.seed, "Run seed"),
         [&s](const std::string& v) { s.seed = to_u64("seed", v); });
    cmd->add_option("--out", s.out, "Output root directory");
    cmd->add_option("--config", s.config_path, "Key = value configuration file");
  };
  const auto add_kernel = [&](CLI::App* cmd) {
    bind("sigma", cmd->add_option("--sigma", s.sigma, "'median' or a fixed bandwidth"),
         [&s](const std::string& v) { s.sigma = v; });
    bind("p", cmd->add_option("--p", s.p, "Residual norm order (exact estimator)"),
         [&s](const std::string& v) { s.p = to_double("p", v); });
    bind("eps_rank", cmd->add_option("--eps-rank", s.eps_rank, "Relative rank threshold"),
         [&s](const std::string& v) { s.eps_rank = to_double("eps_rank", v); });
    bind("ridge", cmd->add_option("--ridge", s.ridge, "Ridge coefficient"),
         [&s](const std::string& v) { s.ridge = to_double("ridge", v); });
  };
  const auto add_sweep = [&](CLI::App* cmd, bool with_alphas) {
    bind("n", cmd->add_option("--n", s.n, "Samples per evaluation"),
         [&s](const std::string& v) { s.n = static_cast<int>(to_long("n", v)); });
    bind("repeats", cmd->add_option("--repeats", s.repeats, "Repeats per sweep point"),
         [&s](const std::string& v) { s.repeats = static_cast<int>(to_long("repeats", v)); });
    if (with_alphas)
      bind("alphas", cmd->add_option("--alphas", s.alphas, "Comma-separated grid"),
           [&s](const std::string& v) { s.alphas = v; });
  };
  const auto add_dataset = [&](CLI::App* cmd, bool required) {
    auto* e = cmd->add_option("--edges", s.edges, "Edge list file");
    auto* f = cmd->add_option("--features", s.features, "Feature CSV file");
    auto* l = cmd->add_option("--labels", s.labels, "Label file (one per node)");
    if (required) {
      e->required();
      f->required();
      l->required();
    }
  };
  const auto add_generator = [&](CLI::App* cmd) {
    bind("blocks", cmd->add_option("--blocks", s.blocks, "Number of blocks"),
         [&s](const std::string& v) { s.blocks = static_cast<int>(to_long("blocks", v)); });
    bind("block_size", cmd->add_option("--block-size", s.block_size, "Nodes per block"),
         [&s](const std::string& v) {
           s.block_size = static_cast<int>(to_long("block_size", v));
         });
    bind("p_in", cmd->add_option("--p-in", s.p_in, "Within-block edge probability"),
         [&s](const std::string& v) { s.p_in = to_double("p_in", v); });
    bind("p_out", cmd->add_option("--p-out", s.p_out, "Cross-block edge probability"),
         [&s](const std::string& v) { s.p_out = to_double("p_out", v); });
    bind("chain", cmd->add_flag("--chain", s.chain, "Arrange blocks in a path"),
         [&s](const std::string& v) { s.chain = to_bool("chain", v); });
    bind("p_adjacent",
         cmd->add_option("--p-adjacent", s.p_adjacent,
                         "Consecutive-block edge probability (chain only)"),
         [&s](const std::string& v) { s.p_adjacent = to_double("p_adjacent", v); });
    bind("feat_dim", cmd->add_option("--feat-dim", s.feat_dim, "Feature dimension"),
         [&s](const std::string& v) { s.feat_dim = static_cast<int>(to_long("feat_dim", v)); });
    bind("shift", cmd->add_option("--shift", s.shift, "Class-mean feature shift"),
         [&s](const std::string& v) { s.shift = to_double("shift", v); });
  };
  const auto add_model = [&](CLI::App* cmd) {
    bind("encoder", cmd->add_option("--encoder", s.encoder, "gcn or sage"),
         [&s](const std::string& v) { s.encoder = v; });
    bind("activation", cmd->add_option("--activation", s.activation, "relu, elu or none"),
         [&s](const std::string& v) { s.activation = v; });
    bind("depth", cmd->add_option("--depth", s.depth, "Encoder layer count"),
         [&s](const std::string& v) { s.depth = static_cast<int>(to_long("depth", v)); });
    bind("hidden", cmd->add_option("--hidden", s.hidden, "Hidden width"),
         [&s](const std::string& v) { s.hidden = static_cast<int>(to_long("hidden", v)); });
    bind("epochs", cmd->add_option("--epochs", s.epochs, "Training epochs"),
         [&s](const std::string& v) { s.epochs = static_cast<int>(to_long("epochs", v)); });
    bind("lr", cmd->add_option("--lr", s.lr, "Learning rate"),
         [&s](const std::string& v) { s.lr = to_double("lr", v); });
    bind("dropout", cmd->add_option("--dropout", s.dropout, "Post-activation drop probability"),
         [&s](const std::string& v) { s.dropout = to_double("dropout", v); });
    bind("kr_subsample",
         cmd->add_option("--kr-subsample", s.kr_subsample,
                         "Max rows per residual-loss evaluation (0 = all)"),
         [&s](const std::string& v) {
           s.kr_subsample = static_cast<int>(to_long("kr_subsample", v));
         });
    bind("raw_features",
         cmd->add_flag("--raw-features", s.raw_features,
                       "Skip per-feature standardization"),
         [&s](const std::string& v) { s.raw_features = to_bool("raw_features", v); });
  };
  const auto add_split = [&](CLI::App* cmd) {
    bind("train_frac", cmd->add_option("--train-frac", s.train_frac, "Training fraction"),
         [&s](const std::string& v) { s.train_frac = to_double("train_frac", v); });
    bind("val_frac", cmd->add_option("--val-frac", s.val_frac, "Validation fraction"),
         [&s](const std::string& v) { s.val_frac = to_double("val_frac", v); });
  };
  const auto add_downstream = [&](CLI::App* cmd) {
    bind("downstream_epochs",
         cmd->add_option("--downstream-epochs", s.downstream_epochs, "Probe epochs"),
         [&s](const std::string& v) {
           s.downstream_epochs = static_cast<int>(to_long("downstream_epochs", v));
         });
    bind("downstream_hidden",
         cmd->add_option("--downstream-hidden", s.downstream_hidden, "Probe hidden width"),
         [&s](const std::string& v) {
           s.downstream_hidden = static_cast<int>(to_long("downstream_hidden", v));
         });
    bind("downstream_lr",
         cmd->add_option("--downstream-lr", s.downstream_lr, "Probe learning rate"),
         [&s](const std::string& v) { s.downstream_lr = to_double("downstream_lr", v); });
  };

  CLI::App* synthetic = app.add_subcommand("synthetic", "Closed-form validation sweeps");
  synthetic->require_subcommand(1);
  CLI::App* syn_1d =
      synthetic->add_subcommand("1d", "Invertible vs non-invertible scalar maps");
  CLI::App* syn_100d =
      synthetic->add_subcommand("100d", "Additive-noise scaling in 100 dimensions");
  CLI::App* syn_mi = synthetic->add_subcommand("mi", "Correlated Gaussian pair");
  for (CLI::App* cmd : {syn_1d, syn_100d, syn_mi}) {
    add_common(cmd);
    add_kernel(cmd);
    add_sweep(cmd, cmd != syn_1d);
  }

  CLI::App* girl = app.add_subcommand("girl", "Self-supervised encoder training");
  add_common(girl);
  add_kernel(girl);
  add_dataset(girl, false);
  add_generator(girl);
  add_model(girl);
  add_split(girl);
  add_downstream(girl);
  bind("detach_targets",
       girl->add_flag("--detach-targets", s.detach_targets,
                      "Stop gradients through the target representations"),
       [&s](const std::string& v) { s.detach_targets = to_bool("detach_targets", v); });

  CLI::App* supervised =
      app.add_subcommand("supervised", "Cross-entropy training with residual regularizer");
  add_common(supervised);
  add_kernel(supervised);
  add_dataset(supervised, false);
  add_generator(supervised);
  add_model(supervised);
  add_split(supervised);
  bind("lambda", supervised->add_option("--lambda", s.lambda, "Regularizer weight"),
       [&s](const std::string& v) { s.lambda = to_double("lambda", v); });
  bind("weight_decay",
       supervised->add_option("--weight-decay", s.weight_decay,
                              "L2 baseline knob (lambda = 0 runs only)"),
       [&s](const std::string& v) { s.weight_decay = to_double("weight_decay", v); });

  CLI::App* eval = app.add_subcommand("eval", "Downstream probe of a saved encoder");
  add_common(eval);
  eval->add_option("--checkpoint", s.checkpoint, "Encoder checkpoint file")->required();
  add_dataset(eval, true);
  add_split(eval);
  add_downstream(eval);
  eval->add_flag("--raw-features", s.raw_features, "Skip per-feature standardization");

  CLI::App* gen = app.add_subcommand("gen-sbm", "Write a synthetic block-model dataset");
  add_common(gen);
  add_generator(gen);

  std::vector<const char*> argv;
  argv.reserve(args.size() + 1);
  argv.push_back("krgnn");
  for (const std::string& a : args) argv.push_back(a.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    apply_config(s, bindings);
    if (syn_1d->parsed()) return run_synthetic(s, "1d");
    if (syn_100d->parsed()) return run_synthetic(s, "100d");
    if (syn_mi->parsed()) return run_synthetic(s, "mi");
    if (girl->parsed()) return run_girl(s);
    if (supervised->parsed()) return run_supervised(s);
    if (eval->parsed()) return run_eval(s);
    if (gen->parsed()) return run_gen_sbm(s);
    std::cerr << "error: no subcommand selected\n";
    return 2;
  } catch (const InvalidArgument& e) {
    std::cerr << "invalid-argument: " << e.what() << "\n";
  } catch (const ParseError& e) {
    std::cerr << "parse-error: " << e.what() << "\n";
  } catch (const DegenerateInput& e) {
    std::cerr << "degenerate-input: " << e.what() << "\n";
  } catch (const SingularSystem& e) {
    std::cerr << "singular-system: " << e.what() << "\n";
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
  }
  return 1;
}

}  // namespace krgnn
