#include "krgnn/tape.hpp"

#include <cmath>
#include <string>
#include <utility>

#include "krgnn/errors.hpp"
#include "krgnn/kernel.hpp"

namespace krgnn {

namespace {

std::string shape_of(const Mat& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

}  // namespace

int Tape::push(Node n) {
  nodes_.push_back(std::move(n));
  return static_cast<int>(nodes_.size()) - 1;
}

const Tape::Node& Tape::at(DiffValue v) const {
  if (v.id < 0 || v.id >= static_cast<int>(nodes_.size()))
    throw InvalidArgument("tape: value handle " + std::to_string(v.id) +
                          " does not belong to this tape");
  return nodes_[static_cast<std::size_t>(v.id)];
}

void Tape::check_same_shape(const Mat& a, const Mat& b, const char* op) const {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw InvalidArgument(std::string(op) + ": shape mismatch, " + shape_of(a) +
                          " vs " + shape_of(b));
}

const Mat& Tape::value(DiffValue v) const { return at(v).value; }

const Mat& Tape::adjoint(DiffValue v) const {
  const Node& n = at(v);
  if (n.adjoint.rows() != n.value.rows() || n.adjoint.cols() != n.value.cols())
    throw InvalidArgument("tape: adjoint read before backward()");
  return n.adjoint;
}

DiffValue Tape::leaf(Mat value) {
  if (!all_finite(value)) throw InvalidArgument("leaf: non-finite entries");
  Node n;
  n.op = Op::kLeaf;
  n.value = std::move(value);
  return {push(std::move(n))};
}

DiffValue Tape::matmul(DiffValue a, DiffValue b) {
  const Mat& av = at(a).value;
  const Mat& bv = at(b).value;
  if (av.cols() != bv.rows())
    throw InvalidArgument("matmul: inner dimensions differ, " + shape_of(av) + " * " +
                          shape_of(bv));
  Node n;
  n.op = Op::kMatMul;
  n.arg0 = a.id;
  n.arg1 = b.id;
  n.value = av * bv;
  return {push(std::move(n))};
}

DiffValue Tape::add(DiffValue a, DiffValue b) {
  const Mat& av = at(a).value;
  const Mat& bv = at(b).value;
  check_same_shape(av, bv, "add");
  Node n;
  n.op = Op::kAdd;
  n.arg0 = a.id;
  n.arg1 = b.id;
  n.value = av + bv;
  return {push(std::move(n))};
}

DiffValue Tape::sub(DiffValue a, DiffValue b) {
  const Mat& av = at(a).value;
  const Mat& bv = at(b).value;
  check_same_shape(av, bv, "sub");
  Node n;
  n.op = Op::kSub;
  n.arg0 = a.id;
  n.arg1 = b.id;
  n.value = av - bv;
  return {push(std::move(n))};
}

DiffValue Tape::add_row_vector(DiffValue a, DiffValue row) {
  const Mat& av = at(a).value;
  const Mat& rv = at(row).value;
  if (rv.rows() != 1 || rv.cols() != av.cols())
    throw InvalidArgument("add_row_vector: expected 1x" + std::to_string(av.cols()) +
                          " row, got " + shape_of(rv));
  Node n;
  n.op = Op::kAddRowVector;
  n.arg0 = a.id;
  n.arg1 = row.id;
  n.value = av.rowwise() + rv.row(0);
  return {push(std::move(n))};
}

DiffValue Tape::scale(DiffValue a, double c) {
  if (!std::isfinite(c)) throw InvalidArgument("scale: non-finite factor");
  Node n;
  n.op = Op::kScale;
  n.arg0 = a.id;
  n.scalar = c;
  n.value = c * at(a).value;
  return {push(std::move(n))};
}

DiffValue Tape::concat_cols(DiffValue a, DiffValue b) {
  const Mat& av = at(a).value;
  const Mat& bv = at(b).value;
  if (av.rows() != bv.rows())
    throw InvalidArgument("concat_cols: row counts differ, " + shape_of(av) + " vs " +
                          shape_of(bv));
  Node n;
  n.op = Op::kConcatCols;
  n.arg0 = a.id;
  n.arg1 = b.id;
  n.value.resize(av.rows(), av.cols() + bv.cols());
  n.value << av, bv;
  return {push(std::move(n))};
}

DiffValue Tape::relu(DiffValue a) {
  Node n;
  n.op = Op::kRelu;
  n.arg0 = a.id;
  n.value = at(a).value.cwiseMax(0.0);
  return {push(std::move(n))};
}

DiffValue Tape::elu(DiffValue a) {
  const Mat& av = at(a).value;
  Node n;
  n.op = Op::kElu;
  n.arg0 = a.id;
  n.value = (av.array() > 0.0).select(av.array(), av.array().exp() - 1.0).matrix();
  return {push(std::move(n))};
}

DiffValue Tape::gather_rows(DiffValue a, std::vector<int> rows) {
  const Mat& av = at(a).value;
  for (int r : rows)
    if (r < 0 || r >= av.rows())
      throw InvalidArgument("gather_rows: index " + std::to_string(r) +
                            " out of range for " + std::to_string(av.rows()) + " rows");
  Node n;
  n.op = Op::kGatherRows;
  n.arg0 = a.id;
  n.value.resize(static_cast<Eigen::Index>(rows.size()), av.cols());
  for (std::size_t i = 0; i < rows.size(); ++i)
    n.value.row(static_cast<Eigen::Index>(i)) = av.row(rows[i]);
  n.indices = std::move(rows);
  return {push(std::move(n))};
}

DiffValue Tape::sum(DiffValue a) {
  Node n;
  n.op = Op::kSum;
  n.arg0 = a.id;
  n.value = Mat::Constant(1, 1, at(a).value.sum());
  return {push(std::move(n))};
}

DiffValue Tape::dropout(DiffValue a, double drop_prob, Rng& rng) {
  if (!(drop_prob >= 0.0) || !(drop_prob < 1.0))
    throw InvalidArgument("dropout: drop probability must lie in [0, 1)");
  const Mat& av = at(a).value;
  Node n;
  n.op = Op::kDropout;
  n.arg0 = a.id;
  if (drop_prob == 0.0) {
    n.cache = Mat::Ones(av.rows(), av.cols());
  } else {
    const double keep = 1.0 - drop_prob;
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    n.cache.resize(av.rows(), av.cols());
    for (Eigen::Index i = 0; i < av.rows(); ++i)
      for (Eigen::Index j = 0; j < av.cols(); ++j)
        n.cache(i, j) = unit(rng) < keep ? 1.0 / keep : 0.0;
  }
  n.value = av.cwiseProduct(n.cache);
  return {push(std::move(n))};
}

DiffValue Tape::softmax_cross_entropy(DiffValue logits, const std::vector<int>& labels,
                                      const Mask& mask) {
  const Mat& lv = at(logits).value;
  const Eigen::Index rows = lv.rows();
  const Eigen::Index classes = lv.cols();
  if (static_cast<Eigen::Index>(labels.size()) != rows)
    throw InvalidArgument("softmax_cross_entropy: one label per logit row required");
  Mask m = mask;
  if (m.empty()) m.assign(static_cast<std::size_t>(rows), 1);
  if (static_cast<Eigen::Index>(m.size()) != rows)
    throw InvalidArgument("softmax_cross_entropy: mask length must match logit rows");

  Node n;
  n.op = Op::kSoftmaxCrossEntropy;
  n.arg0 = logits.id;
  n.cache.resize(rows, classes);  // softmax probabilities
  double total = 0.0;
  long count = 0;
  for (Eigen::Index i = 0; i < rows; ++i) {
    const double mx = lv.row(i).maxCoeff();
    const Eigen::ArrayXd e = (lv.row(i).array() - mx).exp();
    const double z = e.sum();
    n.cache.row(i) = (e / z).matrix();
    if (!m[static_cast<std::size_t>(i)]) continue;
    const int label = labels[static_cast<std::size_t>(i)];
    if (label < 0 || label >= classes)
      throw InvalidArgument("softmax_cross_entropy: label " + std::to_string(label) +
                            " outside [0, " + std::to_string(classes) + ") on a masked row");
    total += std::log(z) - (lv(i, label) - mx);
    ++count;
  }
  if (count == 0) throw DegenerateInput("softmax_cross_entropy: mask selects no rows");

  n.indices = labels;
  n.mask = std::move(m);
  n.scalar = static_cast<double>(count);
  n.value = Mat::Constant(1, 1, total / static_cast<double>(count));
  return {push(std::move(n))};
}

DiffValue Tape::rbf_gram(DiffValue x, double sigma) {
  Node n;
  n.op = Op::kRbfGram;
  n.arg0 = x.id;
  n.scalar = sigma;
  n.value = krgnn::rbf_gram(at(x).value, sigma);
  return {push(std::move(n))};
}

DiffValue Tape::ridge_solve(DiffValue k, DiffValue y, double ridge) {
  const Mat& kv = at(k).value;
  const Mat& yv = at(y).value;
  if (kv.rows() != kv.cols())
    throw InvalidArgument("ridge_solve: system matrix must be square, got " + shape_of(kv));
  if (yv.rows() != kv.rows())
    throw InvalidArgument("ridge_solve: right-hand side rows must match system size");
  if (!(ridge >= 0.0) || !std::isfinite(ridge))
    throw InvalidArgument("ridge_solve: ridge must be nonnegative and finite");

  Mat m = kv;
  m.diagonal().array() += ridge;
  auto llt = std::make_shared<Eigen::LLT<Mat>>(m);
  if (llt->info() != Eigen::Success)
    throw SingularSystem("ridge_solve: regularized system is not positive definite");

  Node n;
  n.op = Op::kRidgeSolve;
  n.arg0 = k.id;
  n.arg1 = y.id;
  n.scalar = ridge;
  n.llt = std::move(llt);
  n.value = n.llt->solve(yv);
  return {push(std::move(n))};
}

DiffValue Tape::column_norm_mean(DiffValue r) {
  const Mat& rv = at(r).value;
  if (rv.rows() == 0 || rv.cols() == 0)
    throw InvalidArgument("column_norm_mean: empty input");
  Node n;
  n.op = Op::kColumnNormMean;
  n.arg0 = r.id;
  n.scalar = 1.0 / (static_cast<double>(rv.cols()) *
                    std::sqrt(static_cast<double>(rv.rows())));
  n.cache.resize(1, rv.cols());  // per-column norms, reused in the adjoint
  double total = 0.0;
  for (Eigen::Index j = 0; j < rv.cols(); ++j) {
    n.cache(0, j) = rv.col(j).norm();
    total += n.cache(0, j);
  }
  n.value = Mat::Constant(1, 1, n.scalar * total);
  return {push(std::move(n))};
}

void Tape::backward(DiffValue root) {
  const Node& r = at(root);
  if (r.value.rows() != 1 || r.value.cols() != 1)
    throw InvalidArgument("backward: root must be 1x1, got " + shape_of(r.value));

  for (Node& n : nodes_) n.adjoint = Mat::Zero(n.value.rows(), n.value.cols());
  nodes_[static_cast<std::size_t>(root.id)].adjoint(0, 0) = 1.0;

  for (int id = root.id; id >= 0; --id) {
    Node& n = nodes_[static_cast<std::size_t>(id)];
    const Mat& g = n.adjoint;
    if (g.isZero(0.0)) continue;
    switch (n.op) {
      case Op::kLeaf:
        break;
      case Op::kMatMul: {
        Node& a = nodes_[static_cast<std::size_t>(n.arg0)];
        Node& b = nodes_[static_cast<std::size_t>(n.arg1)];
        a.adjoint.noalias() += g * b.value.transpose();
        b.adjoint.noalias() += a.value.transpose() * g;
        break;
      }
      case Op::kAdd:
        nodes_[static_cast<std::size_t>(n.arg0)].adjoint += g;
        nodes_[static_cast<std::size_t>(n.arg1)].adjoint += g;
        break;
      case Op::kSub:
        nodes_[static_cast<std::size_t>(n.arg0)].adjoint += g;
        nodes_[static_cast<std::size_t>(n.arg1)].adjoint -= g;
        break;
      case Op::kAddRowVector:
        nodes_[static_cast<std::size_t>(n.arg0)].adjoint += g;
        nodes_[static_cast<std::size_t>(n.arg1)].adjoint += g.colwise().sum();
        break;
      case Op::kScale:
        nodes_[static_cast<std::size_t>(n.arg0)].adjoint += n.scalar * g;
        break;
      case Op::kConcatCols: {
        Node& a = nodes_[static_cast<std::size_t>(n.arg0)];
        Node& b = nodes_[static_cast<std::size_t>(n.arg1)];
        a.adjoint += g.leftCols(a.value.cols());
        b.adjoint += g.rightCols(b.value.cols());
        break;
      }
      case Op::kRelu: {
        Node& a = nodes_[static_cast<std::size_t>(n.arg0)];
        a.adjoint.array() += g.array() * (a.value.array() > 0.0).cast<double>();
        break;
      }
      case Op::kElu: {
        Node& a = nodes_[static_cast<std::size_t>(n.arg0)];
        // d/dx elu = 1 for x > 0, exp(x) = elu(x) + 1 otherwise.
        a.adjoint.array() +=
            g.array() * (a.value.array() > 0.0).select(1.0, n.value.array() + 1.0);
        break;
      }
      case Op::kGatherRows: {
        Node& a = nodes_[static_cast<std::size_t>(n.arg0)];
        for (std::size_t i = 0; i < n.indices.size(); ++i)
          a.adjoint.row(n.indices[i]) += g.row(static_cast<Eigen::Index>(i));
        break;
      }
      case Op::kSum:
        nodes_[static_cast<std::size_t>(n.arg0)].adjoint.array() += g(0, 0);
        break;
      case Op::kDropout:
        nodes_[static_cast<std::size_t>(n.arg0)].adjoint += g.cwiseProduct(n.cache);
        break;
      case Op::kSoftmaxCrossEntropy: {
        Node& a = nodes_[static_cast<std::size_t>(n.arg0)];
        const double w = g(0, 0) / n.scalar;
        for (Eigen::Index i = 0; i < a.value.rows(); ++i) {
          if (!n.mask[static_cast<std::size_t>(i)]) continue;
          a.adjoint.row(i) += w * n.cache.row(i);
          a.adjoint(i, n.indices[static_cast<std::size_t>(i)]) -= w;
        }
        break;
      }
      case Op::kRbfGram: {
        Node& x = nodes_[static_cast<std::size_t>(n.arg0)];
        const double inv_s2 = 1.0 / (n.scalar * n.scalar);
        const Mat s = (g + g.transpose()).cwiseProduct(n.value);
        const Vec row_sums = s.rowwise().sum();
        x.adjoint.noalias() += inv_s2 * (s * x.value);
        x.adjoint -= inv_s2 * (row_sums.asDiagonal() * x.value);
        break;
      }
      case Op::kRidgeSolve: {
        Node& k = nodes_[static_cast<std::size_t>(n.arg0)];
        Node& y = nodes_[static_cast<std::size_t>(n.arg1)];
        // alpha = M^-1 y with M = K + ridge I symmetric: the adjoint solve
        // reuses the forward factorization instead of differentiating it.
        const Mat s = n.llt->solve(g);
        y.adjoint += s;
        k.adjoint.noalias() -= s * n.value.transpose();
        break;
      }
      case Op::kColumnNormMean: {
        Node& a = nodes_[static_cast<std::size_t>(n.arg0)];
        const double w = g(0, 0) * n.scalar;
        for (Eigen::Index j = 0; j < a.value.cols(); ++j) {
          const double norm = n.cache(0, j);
          if (norm > 0.0) a.adjoint.col(j) += (w / norm) * a.value.col(j);
        }
        break;
      }
    }
  }
}

}  // namespace krgnn
