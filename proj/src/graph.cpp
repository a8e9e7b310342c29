#include "krgnn/graph.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <string>
#include <utility>

#include "krgnn/errors.hpp"
#include "krgnn/io.hpp"

namespace krgnn {

namespace {

// Strips a trailing '#' comment and surrounding whitespace.
std::string clean_line(const std::string& raw) {
  std::string s = raw;
  if (auto pos = s.find('#'); pos != std::string::npos) s.erase(pos);
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::ifstream open_or_throw(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path, 0, "cannot open file");
  return in;
}

}  // namespace

int NodeGraph::num_edges() const {
  long total = 0;
  for (const auto& adj : neighbors) total += static_cast<long>(adj.size());
  return static_cast<int>(total / 2);
}

void NodeGraph::add_edge(int u, int v) {
  if (u < 0 || v < 0 || u >= num_nodes || v >= num_nodes)
    throw InvalidArgument("add_edge: node id out of range: " + std::to_string(u) + "," +
                          std::to_string(v));
  if (u == v) throw InvalidArgument("add_edge: self-loops are not stored");
  auto insert = [](std::vector<int>& adj, int w) {
    auto it = std::lower_bound(adj.begin(), adj.end(), w);
    if (it == adj.end() || *it != w) adj.insert(it, w);
  };
  insert(neighbors[static_cast<std::size_t>(u)], v);
  insert(neighbors[static_cast<std::size_t>(v)], u);
}

void NodeGraph::validate() const {
  if (num_nodes < 0) throw InvalidArgument("graph: negative node count");
  if (static_cast<int>(neighbors.size()) != num_nodes)
    throw InvalidArgument("graph: adjacency size does not match node count");
  for (int u = 0; u < num_nodes; ++u) {
    const auto& adj = neighbors[static_cast<std::size_t>(u)];
    if (!std::is_sorted(adj.begin(), adj.end()))
      throw InvalidArgument("graph: neighbor list of node " + std::to_string(u) +
                            " is not sorted");
    for (int v : adj) {
      if (v < 0 || v >= num_nodes)
        throw InvalidArgument("graph: neighbor id out of range");
      if (v == u) throw InvalidArgument("graph: self-loop stored at node " + std::to_string(u));
      const auto& back = neighbors[static_cast<std::size_t>(v)];
      if (!std::binary_search(back.begin(), back.end(), u))
        throw InvalidArgument("graph: edge " + std::to_string(u) + "-" + std::to_string(v) +
                              " is not symmetric");
    }
  }
  if (features.size() > 0 && features.rows() != num_nodes)
    throw InvalidArgument("graph: feature rows do not match node count");
  if (!labels.empty() && static_cast<int>(labels.size()) != num_nodes)
    throw InvalidArgument("graph: label count does not match node count");
}

Mat normalized_adjacency(const NodeGraph& g) {
  const int n = g.num_nodes;
  if (n == 0) throw InvalidArgument("normalized_adjacency: empty graph");
  Mat a = Mat::Identity(n, n);  // self-loops
  for (int u = 0; u < n; ++u)
    for (int v : g.neighbors[static_cast<std::size_t>(u)]) a(u, v) = 1.0;
  Vec deg = a.rowwise().sum();
  Vec inv_sqrt = deg.array().inverse().sqrt();
  return inv_sqrt.asDiagonal() * a * inv_sqrt.asDiagonal();
}

Mat mean_aggregator(const NodeGraph& g) {
  const int n = g.num_nodes;
  if (n == 0) throw InvalidArgument("mean_aggregator: empty graph");
  Mat a = Mat::Zero(n, n);
  for (int u = 0; u < n; ++u) {
    const auto& adj = g.neighbors[static_cast<std::size_t>(u)];
    if (adj.empty()) {
      a(u, u) = 1.0;  // isolated node: pass its own row through
      continue;
    }
    const double w = 1.0 / static_cast<double>(adj.size());
    for (int v : adj) a(u, v) = w;
  }
  return a;
}

std::vector<int> sample_one_neighbor(const NodeGraph& g, Rng& rng) {
  std::vector<int> pick(static_cast<std::size_t>(g.num_nodes));
  for (int u = 0; u < g.num_nodes; ++u) {
    const auto& adj = g.neighbors[static_cast<std::size_t>(u)];
    if (adj.empty()) {
      pick[static_cast<std::size_t>(u)] = u;
    } else {
      std::uniform_int_distribution<std::size_t> d(0, adj.size() - 1);
      pick[static_cast<std::size_t>(u)] = adj[d(rng)];
    }
  }
  return pick;
}

namespace {

void add_block_features(NodeGraph& g, int feat_dim, double shift,
                        const std::vector<int>& shift_axis, Rng& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  g.features.resize(g.num_nodes, feat_dim);
  for (int i = 0; i < g.num_nodes; ++i)
    for (int j = 0; j < feat_dim; ++j) g.features(i, j) = gauss(rng);
  for (int i = 0; i < g.num_nodes; ++i) {
    const int axis = shift_axis[static_cast<std::size_t>(i)];
    if (axis >= 0) g.features(i, axis % feat_dim) += shift;
  }
}

}  // namespace

NodeGraph generate_sbm(int blocks, int block_size, double p_in, double p_out,
                       int feat_dim, double shift, Rng& rng) {
  if (blocks < 1 || block_size < 1)
    throw InvalidArgument("generate_sbm: blocks and block_size must be positive");
  if (!(p_in >= 0.0 && p_in <= 1.0) || !(p_out >= 0.0 && p_out <= 1.0))
    throw InvalidArgument("generate_sbm: edge probabilities must lie in [0, 1]");
  if (p_out >= p_in)
    throw InvalidArgument("generate_sbm: cross-block probability must be below p_in");
  if (feat_dim < 1) throw InvalidArgument("generate_sbm: feat_dim must be positive");

  NodeGraph g;
  g.num_nodes = blocks * block_size;
  g.neighbors.assign(static_cast<std::size_t>(g.num_nodes), {});
  g.labels.resize(static_cast<std::size_t>(g.num_nodes));
  for (int i = 0; i < g.num_nodes; ++i)
    g.labels[static_cast<std::size_t>(i)] = i / block_size;

  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int u = 0; u < g.num_nodes; ++u) {
    for (int v = u + 1; v < g.num_nodes; ++v) {
      const double p = (u / block_size == v / block_size) ? p_in : p_out;
      if (unit(rng) < p) g.add_edge(u, v);
    }
  }

  std::vector<int> axis(static_cast<std::size_t>(g.num_nodes));
  for (int i = 0; i < g.num_nodes; ++i) axis[static_cast<std::size_t>(i)] = i / block_size;
  add_block_features(g, feat_dim, shift, axis, rng);
  return g;
}

NodeGraph generate_chain_sbm(int blocks, int block_size, double p_in,
                             double p_adjacent, int feat_dim, double shift,
                             Rng& rng) {
  if (blocks < 2) throw InvalidArgument("generate_chain_sbm: need at least 2 blocks");
  if (block_size < 1) throw InvalidArgument("generate_chain_sbm: block_size must be positive");
  if (!(p_in >= 0.0 && p_in <= 1.0) || !(p_adjacent >= 0.0 && p_adjacent <= 1.0))
    throw InvalidArgument("generate_chain_sbm: edge probabilities must lie in [0, 1]");
  if (feat_dim < 1) throw InvalidArgument("generate_chain_sbm: feat_dim must be positive");

  NodeGraph g;
  g.num_nodes = blocks * block_size;
  g.neighbors.assign(static_cast<std::size_t>(g.num_nodes), {});
  g.labels.resize(static_cast<std::size_t>(g.num_nodes));
  for (int i = 0; i < g.num_nodes; ++i)
    g.labels[static_cast<std::size_t>(i)] = (i / block_size < blocks / 2) ? 0 : 1;

  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int u = 0; u < g.num_nodes; ++u) {
    for (int v = u + 1; v < g.num_nodes; ++v) {
      const int bu = u / block_size, bv = v / block_size;
      double p = 0.0;
      if (bu == bv)
        p = p_in;
      else if (bv - bu == 1)
        p = p_adjacent;
      if (p > 0.0 && unit(rng) < p) g.add_edge(u, v);
    }
  }

  // Class-revealing feature shift only at the two chain ends: -shift on the
  // first block, +shift on the last, both in coordinate 0. Interior blocks
  // see pure noise, so their label is only visible through the graph.
  std::normal_distribution<double> gauss(0.0, 1.0);
  g.features.resize(g.num_nodes, feat_dim);
  for (int i = 0; i < g.num_nodes; ++i)
    for (int j = 0; j < feat_dim; ++j) g.features(i, j) = gauss(rng);
  for (int i = 0; i < g.num_nodes; ++i) {
    const int b = i / block_size;
    if (b == 0) g.features(i, 0) -= shift;
    if (b == blocks - 1) g.features(i, 0) += shift;
  }
  return g;
}

SplitMasks split_nodes(int num_nodes, double train_frac, double val_frac, Rng& rng) {
  if (num_nodes < 1) throw InvalidArgument("split_nodes: need at least 1 node");
  if (!(train_frac > 0.0) || !(val_frac >= 0.0) || train_frac + val_frac > 1.0 + 1e-9)
    throw InvalidArgument(
        "split_nodes: need train_frac > 0, val_frac >= 0, sum at most 1");

  std::vector<int> order(static_cast<std::size_t>(num_nodes));
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);

  // Tiny slack so exact fractions like 0.6 * 10 are not floored to 5.
  const int n_train =
      std::min(num_nodes, static_cast<int>(std::floor(train_frac * num_nodes + 1e-9)));
  const int n_val = std::min(num_nodes - n_train,
                             static_cast<int>(std::floor(val_frac * num_nodes + 1e-9)));

  SplitMasks m;
  m.train.assign(static_cast<std::size_t>(num_nodes), 0);
  m.val.assign(static_cast<std::size_t>(num_nodes), 0);
  m.test.assign(static_cast<std::size_t>(num_nodes), 0);
  for (int i = 0; i < num_nodes; ++i) {
    const auto node = static_cast<std::size_t>(order[static_cast<std::size_t>(i)]);
    if (i < n_train)
      m.train[node] = 1;
    else if (i < n_train + n_val)
      m.val[node] = 1;
    else
      m.test[node] = 1;
  }
  return m;
}

NodeGraph load_edge_list(const std::string& path, int num_nodes) {
  std::ifstream in = open_or_throw(path);
  std::string raw;
  long line_no = 0;
  std::vector<std::pair<int, int>> edges;
  int max_id = -1;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string s = clean_line(raw);
    if (s.empty()) continue;
    std::istringstream ss(s);
    long u, v;
    if (!(ss >> u >> v)) throw ParseError(path, line_no, "expected 'u v' node pair");
    std::string extra;
    if (ss >> extra) throw ParseError(path, line_no, "trailing tokens after node pair");
    if (u < 0 || v < 0) throw ParseError(path, line_no, "node ids must be nonnegative");
    if (u == v) throw ParseError(path, line_no, "self-loop");
    if (num_nodes >= 0 && (u >= num_nodes || v >= num_nodes))
      throw ParseError(path, line_no,
                       "node id out of range, graph has " + std::to_string(num_nodes) +
                           " nodes");
    edges.emplace_back(static_cast<int>(u), static_cast<int>(v));
    max_id = std::max(max_id, static_cast<int>(std::max(u, v)));
  }
  NodeGraph g;
  g.num_nodes = num_nodes >= 0 ? num_nodes : max_id + 1;
  if (g.num_nodes == 0) throw ParseError(path, line_no, "no edges and no node count");
  g.neighbors.assign(static_cast<std::size_t>(g.num_nodes), {});
  for (auto [u, v] : edges) g.add_edge(u, v);
  return g;
}

void load_features_csv(NodeGraph& g, const std::string& path) {
  std::ifstream in = open_or_throw(path);
  std::string raw;
  long line_no = 0;
  std::vector<std::vector<double>> rows;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string s = clean_line(raw);
    if (s.empty()) continue;
    std::vector<double> row;
    std::istringstream ss(s);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        std::size_t used = 0;
        row.push_back(std::stod(cell, &used));
        while (used < cell.size() && std::isspace(static_cast<unsigned char>(cell[used])))
          ++used;
        if (used != cell.size()) throw std::invalid_argument("trailing");
      } catch (const std::exception&) {
        throw ParseError(path, line_no, "bad numeric cell '" + cell + "'");
      }
    }
    if (row.empty()) throw ParseError(path, line_no, "empty feature row");
    if (!rows.empty() && rows.front().size() != row.size())
      throw ParseError(path, line_no, "inconsistent column count");
    rows.push_back(std::move(row));
  }
  if (static_cast<int>(rows.size()) != g.num_nodes)
    throw ParseError(path, line_no,
                     "expected " + std::to_string(g.num_nodes) + " feature rows, got " +
                         std::to_string(rows.size()));
  g.features.resize(g.num_nodes, static_cast<Eigen::Index>(rows.front().size()));
  for (int i = 0; i < g.num_nodes; ++i)
    for (std::size_t j = 0; j < rows.front().size(); ++j)
      g.features(i, static_cast<Eigen::Index>(j)) = rows[static_cast<std::size_t>(i)][j];
}

void load_labels(NodeGraph& g, const std::string& path) {
  std::ifstream in = open_or_throw(path);
  std::vector<int> labels;
  std::string raw;
  long line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string s = clean_line(raw);
    if (s.empty()) continue;
    std::istringstream ss(s);
    long label;
    if (!(ss >> label)) throw ParseError(path, line_no, "expected one integer label");
    std::string extra;
    if (ss >> extra) throw ParseError(path, line_no, "trailing tokens after label");
    if (label < -1) throw ParseError(path, line_no, "labels must be >= -1 (-1 = unlabeled)");
    labels.push_back(static_cast<int>(label));
  }
  if (static_cast<int>(labels.size()) != g.num_nodes)
    throw ParseError(path, line_no,
                     "expected " + std::to_string(g.num_nodes) + " label lines, got " +
                         std::to_string(labels.size()));
  g.labels = std::move(labels);
}

NodeGraph load_graph(const std::string& edge_path, const std::string& feature_path,
                     const std::string& label_path) {
  // Features fix the node count so out-of-range edge endpoints are caught.
  NodeGraph probe;
  probe.num_nodes = -1;
  {
    std::ifstream in = open_or_throw(feature_path);
    long rows = 0;
    std::string raw;
    while (std::getline(in, raw))
      if (!clean_line(raw).empty()) ++rows;
    probe.num_nodes = static_cast<int>(rows);
  }
  NodeGraph g = load_edge_list(edge_path, probe.num_nodes);
  load_features_csv(g, feature_path);
  if (!label_path.empty()) load_labels(g, label_path);
  g.validate();
  return g;
}

void save_edge_list(const NodeGraph& g, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ParseError(path, 0, "cannot open file for writing");
  out << "# undirected edge list, one 'u v' pair per line\n";
  out << "# nodes: " << g.num_nodes << "\n";
  for (int u = 0; u < g.num_nodes; ++u)
    for (int v : g.neighbors[static_cast<std::size_t>(u)])
      if (u < v) out << u << " " << v << "\n";
}

void save_features_csv(const NodeGraph& g, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ParseError(path, 0, "cannot open file for writing");
  for (Eigen::Index i = 0; i < g.features.rows(); ++i) {
    for (Eigen::Index j = 0; j < g.features.cols(); ++j) {
      if (j) out << ",";
      out << format_double(g.features(i, j));
    }
    out << "\n";
  }
}

void save_labels(const NodeGraph& g, const std::string& path) {
  if (!g.has_labels()) throw InvalidArgument("save_labels: graph has no labels");
  std::ofstream out(path);
  if (!out) throw ParseError(path, 0, "cannot open file for writing");
  out << "# one label per node, line i = node i, -1 = unlabeled\n";
  for (int i = 0; i < g.num_nodes; ++i)
    out << g.labels[static_cast<std::size_t>(i)] << "\n";
}

}  // namespace krgnn
