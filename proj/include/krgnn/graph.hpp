#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "krgnn/rng.hpp"
#include "krgnn/types.hpp"

namespace krgnn {

// Undirected simple graph with optional node features and labels.
// Adjacency is kept as sorted per-node neighbor lists; no self-loops and no
// parallel edges are stored.
struct NodeGraph {
  int num_nodes = 0;
  std::vector<std::vector<int>> neighbors;  // sorted, symmetric
  Mat features;                             // num_nodes x d, may be 0x0
  std::vector<int> labels;                  // empty or size num_nodes, -1 = unknown

  int num_edges() const;  // undirected edge count
  bool has_features() const { return features.rows() == num_nodes && features.cols() > 0; }
  bool has_labels() const { return !labels.empty(); }
  void add_edge(int u, int v);  // idempotent; rejects self-loops and bad ids
  void validate() const;        // symmetry/size checks, throws InvalidArgument
};

// Symmetric normalization with self-loops, as a dense matrix:
//   A_hat = D~^{-1/2} (A + I) D~^{-1/2},  D~ = degree(A + I).
Mat normalized_adjacency(const NodeGraph& g);

// Row-normalized neighbor averaging without self-loops. Rows of isolated
// nodes fall back to the identity row so the operator stays well-defined.
Mat mean_aggregator(const NodeGraph& g);

// One uniformly chosen neighbor per node; isolated nodes pick themselves.
std::vector<int> sample_one_neighbor(const NodeGraph& g, Rng& rng);

// Stochastic block model over `blocks` equal groups of `block_size` nodes.
// Within-block edges appear with prob p_in, cross-block with p_out. Labels
// are block ids. Features: feat_dim-dimensional standard Gaussians plus a
// per-block mean shift of magnitude `shift` along a block-specific axis
// (axis = block index mod feat_dim).
NodeGraph generate_sbm(int blocks, int block_size, double p_in, double p_out,
                       int feat_dim, double shift, Rng& rng);

// Chain-of-blocks variant: blocks are arranged in a path; only consecutive
// blocks are linked (with prob p_adjacent), all other cross-block pairs stay
// disconnected. Binary labels split the chain in half (block < blocks/2 -> 0).
// Features carry a mean shift of +/- `shift` in coordinate 0 only at the two
// chain endpoints; interior blocks draw pure noise, so labels there are only
// reachable through message passing.
NodeGraph generate_chain_sbm(int blocks, int block_size, double p_in,
                             double p_adjacent, int feat_dim, double shift,
                             Rng& rng);

// Disjoint train/val/test node masks: floor(frac * n) nodes for train and
// val, the remainder for test, assigned by a seeded shuffle. train_frac must
// be positive, val_frac nonnegative, and their sum at most 1.
struct SplitMasks {
  Mask train, val, test;
};
SplitMasks split_nodes(int num_nodes, double train_frac, double val_frac, Rng& rng);

// Edge list I/O: one "u v" pair per line, '#' starts a comment, blank lines
// ignored. Node ids are nonnegative integers. Without a count the graph gets
// max id + 1 nodes; with one, ids must stay below it (parse error otherwise).
NodeGraph load_edge_list(const std::string& path, int num_nodes = -1);

// Feature CSV: one row per node, comma-separated doubles, '#' comments.
// Row count must match g.num_nodes.
void load_features_csv(NodeGraph& g, const std::string& path);

// Label file: one integer per line (line i labels node i, -1 = unlabeled),
// '#' comments; exactly g.num_nodes label lines required.
void load_labels(NodeGraph& g, const std::string& path);

// Composed loader: features fix the node count, edges must stay in range,
// labels are optional (empty path = none).
NodeGraph load_graph(const std::string& edge_path, const std::string& feature_path,
                     const std::string& label_path = "");

void save_edge_list(const NodeGraph& g, const std::string& path);
void save_features_csv(const NodeGraph& g, const std::string& path);
void save_labels(const NodeGraph& g, const std::string& path);

}  // namespace krgnn
