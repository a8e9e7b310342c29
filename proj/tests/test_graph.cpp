#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <unistd.h>

#include <filesystem>
#include <fstream>

#include "krgnn/errors.hpp"
#include "krgnn/graph.hpp"
#include "krgnn/rng.hpp"
#include "testutil.hpp"

using namespace krgnn;

namespace {

namespace fs = std::filesystem;

// Fresh scratch directory per test case, removed on destruction.
struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag) {
    path = fs::temp_directory_path() / ("krgnn_graph_" + tag + "_" +
                                        std::to_string(::getpid()));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  out << text;
}

}  // namespace

TEST_CASE("add_edge is idempotent, symmetric and rejects self-loops") {
  NodeGraph g;
  g.num_nodes = 3;
  g.neighbors.resize(3);
  g.add_edge(0, 1);
  g.add_edge(1, 0);
  g.add_edge(0, 1);
  CHECK(g.num_edges() == 1);
  CHECK(g.neighbors[0] == std::vector<int>{1});
  CHECK(g.neighbors[1] == std::vector<int>{0});
  CHECK_THROWS_AS(g.add_edge(1, 1), InvalidArgument);
  CHECK_THROWS_AS(g.add_edge(0, 3), InvalidArgument);
  g.validate();
}

TEST_CASE("normalized adjacency of a 2-node path is the averaging matrix") {
  NodeGraph g;
  g.num_nodes = 2;
  g.neighbors.resize(2);
  g.add_edge(0, 1);
  const Mat a = normalized_adjacency(g);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) CHECK(a(i, j) == doctest::Approx(0.5));
}

TEST_CASE("normalized adjacency has spectrum inside [-1, 1]") {
  Rng rng = make_rng(5);
  const NodeGraph g = generate_sbm(3, 8, 0.4, 0.1, 4, 1.0, rng);
  const Mat a = normalized_adjacency(g);
  CHECK((a - a.transpose()).cwiseAbs().maxCoeff() < 1e-12);
  Eigen::SelfAdjointEigenSolver<Mat> eig(a);
  CHECK(eig.eigenvalues().minCoeff() >= -1.0 - 1e-10);
  CHECK(eig.eigenvalues().maxCoeff() <= 1.0 + 1e-10);
}

TEST_CASE("mean aggregator rows average true neighbors; isolated rows are identity") {
  NodeGraph g;
  g.num_nodes = 4;
  g.neighbors.resize(4);
  g.add_edge(0, 1);
  g.add_edge(0, 2);
  const Mat m = mean_aggregator(g);
  CHECK(m(0, 1) == doctest::Approx(0.5));
  CHECK(m(0, 2) == doctest::Approx(0.5));
  CHECK(m(0, 0) == 0.0);  // no self-weight for connected nodes
  CHECK(m(3, 3) == 1.0);  // isolated node falls back to itself
  for (int i = 0; i < 4; ++i) CHECK(m.row(i).sum() == doctest::Approx(1.0));
}

TEST_CASE("sample_one_neighbor only returns actual neighbors") {
  NodeGraph g;
  g.num_nodes = 5;
  g.neighbors.resize(5);
  g.add_edge(0, 1);
  g.add_edge(0, 2);
  g.add_edge(3, 1);
  Rng rng = make_rng(3);
  for (int rep = 0; rep < 50; ++rep) {
    const std::vector<int> pick = sample_one_neighbor(g, rng);
    REQUIRE(pick.size() == 5);
    CHECK((pick[0] == 1 || pick[0] == 2));
    CHECK(pick[3] == 1);
    CHECK(pick[4] == 4);  // isolated -> itself
  }
}

TEST_CASE("generate_sbm block structure, labels and features") {
  Rng rng = make_rng(11);
  const NodeGraph g = generate_sbm(4, 25, 0.5, 0.01, 6, 2.0, rng);
  CHECK(g.num_nodes == 100);
  REQUIRE(g.has_labels());
  REQUIRE(g.has_features());
  CHECK(g.features.cols() == 6);
  for (int i = 0; i < 100; ++i) CHECK(g.labels[i] == i / 25);

  // Count within- vs cross-block edge densities.
  int within = 0, cross = 0;
  for (int u = 0; u < 100; ++u)
    for (int v : g.neighbors[u])
      if (v > u) (g.labels[u] == g.labels[v] ? within : cross)++;
  const double within_rate = within / (4 * 25.0 * 24.0 / 2.0);
  const double cross_rate = cross / (100.0 * 100.0 / 2.0 - 4 * 25.0 * 25.0 / 2.0);
  CHECK(within_rate > 5 * cross_rate);

  // Block means separate along their shifted axes.
  Mat mean = Mat::Zero(4, 6);
  for (int i = 0; i < 100; ++i) mean.row(g.labels[i]) += g.features.row(i) / 25.0;
  for (int b = 0; b < 4; ++b) CHECK(mean(b, b % 6) > 1.0);

  CHECK_THROWS_AS(generate_sbm(4, 25, 0.01, 0.5, 6, 1.0, rng), InvalidArgument);
  CHECK_THROWS_AS(generate_sbm(0, 25, 0.5, 0.01, 6, 1.0, rng), InvalidArgument);
}

TEST_CASE("generate_chain_sbm links only consecutive blocks and shifts only endpoints") {
  Rng rng = make_rng(13);
  const int blocks = 6, bs = 15;
  const NodeGraph g = generate_chain_sbm(blocks, bs, 0.5, 0.3, 4, 3.0, rng);
  CHECK(g.num_nodes == blocks * bs);
  for (int u = 0; u < g.num_nodes; ++u) {
    for (int v : g.neighbors[u]) {
      const int bu = u / bs, bv = v / bs;
      CHECK(std::abs(bu - bv) <= 1);  // path topology between blocks
    }
  }
  // Binary labels split the chain at the midpoint.
  for (int i = 0; i < g.num_nodes; ++i)
    CHECK(g.labels[i] == (i / bs < blocks / 2 ? 0 : 1));

  // Coordinate-0 means: strongly negative at block 0, strongly positive at
  // the last block, near zero inside.
  auto block_mean0 = [&](int b) {
    double s = 0.0;
    for (int i = b * bs; i < (b + 1) * bs; ++i) s += g.features(i, 0);
    return s / bs;
  };
  CHECK(block_mean0(0) < -1.5);
  CHECK(block_mean0(blocks - 1) > 1.5);
  for (int b = 1; b < blocks - 1; ++b) CHECK(std::abs(block_mean0(b)) < 1.4);
}

TEST_CASE("split_nodes obeys the documented floor rule") {
  Rng rng = make_rng(17);
  const SplitMasks m = split_nodes(10, 0.6, 0.2, rng);
  int tr = 0, va = 0, te = 0;
  for (int i = 0; i < 10; ++i) {
    tr += m.train[i];
    va += m.val[i];
    te += m.test[i];
    CHECK(m.train[i] + m.val[i] + m.test[i] == 1);  // disjoint cover
  }
  CHECK(tr == 6);
  CHECK(va == 2);
  CHECK(te == 2);

  const SplitMasks all = split_nodes(7, 1.0, 0.0, rng);
  for (int i = 0; i < 7; ++i) {
    CHECK(all.train[i] == 1);
    CHECK(all.val[i] == 0);
    CHECK(all.test[i] == 0);
  }

  CHECK_THROWS_AS(split_nodes(10, 0.0, 0.5, rng), InvalidArgument);
  CHECK_THROWS_AS(split_nodes(10, 0.8, 0.3, rng), InvalidArgument);
  CHECK_THROWS_AS(split_nodes(0, 0.6, 0.2, rng), InvalidArgument);
}

TEST_CASE("split_nodes differs across seeds but not within one seed") {
  Rng a1 = make_rng(1), a2 = make_rng(1), b = make_rng(2);
  const SplitMasks m1 = split_nodes(50, 0.6, 0.2, a1);
  const SplitMasks m2 = split_nodes(50, 0.6, 0.2, a2);
  const SplitMasks m3 = split_nodes(50, 0.6, 0.2, b);
  CHECK(m1.train == m2.train);
  CHECK(m1.train != m3.train);
}

TEST_CASE("karate club fixture loads with the expected shape") {
  const NodeGraph g = load_edge_list(std::string(TEST_DATA_DIR) + "/karate.edges");
  CHECK(g.num_nodes == 34);
  CHECK(g.num_edges() == 78);
  CHECK(g.neighbors[33].size() == 17);  // the instructor-side hub
  CHECK(g.neighbors[0].size() == 16);
  g.validate();
}

TEST_CASE("edge list round-trips through save and load") {
  Rng rng = make_rng(23);
  const NodeGraph g = generate_sbm(3, 10, 0.4, 0.05, 3, 1.0, rng);
  TempDir tmp("roundtrip");
  save_edge_list(g, tmp.file("e.txt"));
  save_features_csv(g, tmp.file("f.csv"));
  save_labels(g, tmp.file("l.txt"));
  const NodeGraph back = load_graph(tmp.file("e.txt"), tmp.file("f.csv"), tmp.file("l.txt"));
  CHECK(back.num_nodes == g.num_nodes);
  CHECK(back.num_edges() == g.num_edges());
  CHECK(back.neighbors == g.neighbors);
  CHECK(back.labels == g.labels);
  CHECK((back.features - g.features).cwiseAbs().maxCoeff() == 0.0);  // lossless text
}

TEST_CASE("load_edge_list with an explicit count rejects out-of-range ids") {
  TempDir tmp("outofrange");
  write_file(tmp.file("e.txt"), "0 1\n1 5\n");
  CHECK(load_edge_list(tmp.file("e.txt")).num_nodes == 6);  // inferred
  CHECK_THROWS_AS(load_edge_list(tmp.file("e.txt"), 3), ParseError);
}

TEST_CASE("malformed inputs raise parse errors naming the line") {
  TempDir tmp("malformed");
  write_file(tmp.file("e.txt"), "0 1\nnot numbers\n");
  try {
    load_edge_list(tmp.file("e.txt"));
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
  }

  write_file(tmp.file("f.csv"), "1.0,2.0\n3.0\n");
  NodeGraph g;
  g.num_nodes = 2;
  g.neighbors.resize(2);
  CHECK_THROWS_AS(load_features_csv(g, tmp.file("f.csv")), ParseError);

  write_file(tmp.file("l.txt"), "0\n1\n");  // wrong count for 3 nodes
  NodeGraph g3;
  g3.num_nodes = 3;
  g3.neighbors.resize(3);
  CHECK_THROWS_AS(load_labels(g3, tmp.file("l.txt")), ParseError);

  CHECK_THROWS_AS(load_edge_list(tmp.file("missing.txt")), ParseError);
}

TEST_CASE("comments and blank lines are ignored by every loader") {
  TempDir tmp("comments");
  write_file(tmp.file("e.txt"), "# header\n\n0 1\n# tail\n1 2\n");
  write_file(tmp.file("f.csv"), "# features\n0.5,1.5\n\n2.5,3.5\n1.0,0.0\n");
  write_file(tmp.file("l.txt"), "# labels\n0\n1\n-1\n");
  const NodeGraph g = load_graph(tmp.file("e.txt"), tmp.file("f.csv"), tmp.file("l.txt"));
  CHECK(g.num_nodes == 3);
  CHECK(g.num_edges() == 2);
  CHECK(g.features(0, 1) == 1.5);
  CHECK(g.labels[2] == -1);
}

TEST_CASE("load_graph fixes the node count from the feature file") {
  TempDir tmp("count");
  write_file(tmp.file("e.txt"), "0 1\n");
  write_file(tmp.file("f.csv"), "1.0\n2.0\n3.0\n4.0\n");  // 4 nodes, 1 isolated pair
  const NodeGraph g = load_graph(tmp.file("e.txt"), tmp.file("f.csv"));
  CHECK(g.num_nodes == 4);
  CHECK_FALSE(g.has_labels());

  write_file(tmp.file("e2.txt"), "0 9\n");
  CHECK_THROWS_AS(load_graph(tmp.file("e2.txt"), tmp.file("f.csv")), ParseError);
}
