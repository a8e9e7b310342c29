#pragma once

#include <Eigen/Cholesky>
#include <memory>
#include <vector>

#include "krgnn/rng.hpp"
#include "krgnn/types.hpp"

namespace krgnn {

// Handle into a Tape's node list. The payload matrix and the accumulated
// adjoint live in the tape; the handle is cheap to copy.
struct DiffValue {
  int id = -1;
  bool valid() const { return id >= 0; }
};

// Reverse-mode tape over dense matrices. Values are computed eagerly as ops
// are recorded; backward() runs the adjoint sweep in reverse recording order,
// visiting each node exactly once. A tape is single-threaded; independent
// tapes may run concurrently.
class Tape {
 public:
  // Leaf holding an input or parameter payload.
  DiffValue leaf(Mat value);

  DiffValue matmul(DiffValue a, DiffValue b);
  DiffValue add(DiffValue a, DiffValue b);
  DiffValue sub(DiffValue a, DiffValue b);
  // a + row broadcast over every row of a; row is 1 x cols(a).
  DiffValue add_row_vector(DiffValue a, DiffValue row);
  DiffValue scale(DiffValue a, double c);
  DiffValue concat_cols(DiffValue a, DiffValue b);
  DiffValue relu(DiffValue a);
  DiffValue elu(DiffValue a);
  // Row gather; duplicate indices accumulate adjoints into the same source row.
  DiffValue gather_rows(DiffValue a, std::vector<int> rows);
  // Sum of all entries, as a 1x1 value.
  DiffValue sum(DiffValue a);
  // Inverted-dropout mask drawn from `rng` at recording time.
  DiffValue dropout(DiffValue a, double drop_prob, Rng& rng);
  // Mean over masked rows of -log softmax(logits)[label]. Throws
  // DegenerateInput when the mask selects no rows.
  DiffValue softmax_cross_entropy(DiffValue logits, const std::vector<int>& labels,
                                  const Mask& mask);
  // RBF Gram matrix of the rows of x; differentiable w.r.t. x, sigma fixed.
  DiffValue rbf_gram(DiffValue x, double sigma);
  // alpha = (K + ridge I)^-1 y via Cholesky; the factorization is kept for
  // the adjoint solve. Throws SingularSystem when K + ridge I is not
  // positive definite.
  DiffValue ridge_solve(DiffValue k, DiffValue y, double ridge);
  // (1/(m sqrt(n))) sum over columns of |col|_2, as a 1x1 value.
  DiffValue column_norm_mean(DiffValue r);

  // Adjoint sweep from a 1x1 root. Zeroes all adjoints first, seeds the root
  // with 1 and processes nodes in reverse id order, so nodes with no path to
  // the root keep a zero adjoint.
  void backward(DiffValue root);

  const Mat& value(DiffValue v) const;
  const Mat& adjoint(DiffValue v) const;
  int size() const { return static_cast<int>(nodes_.size()); }

 private:
  enum class Op {
    kLeaf,
    kMatMul,
    kAdd,
    kSub,
    kAddRowVector,
    kScale,
    kConcatCols,
    kRelu,
    kElu,
    kGatherRows,
    kSum,
    kDropout,
    kSoftmaxCrossEntropy,
    kRbfGram,
    kRidgeSolve,
    kColumnNormMean,
  };

  struct Node {
    Op op = Op::kLeaf;
    Mat value;
    Mat adjoint;
    int arg0 = -1;
    int arg1 = -1;
    double scalar = 0.0;             // scale factor / sigma / ridge / coeff
    std::vector<int> indices;        // gather rows / labels
    Mask mask;                       // CE mask / dropout keep mask (flattened)
    Mat cache;                       // op-specific forward cache
    std::shared_ptr<Eigen::LLT<Mat>> llt;
  };

  int push(Node n);
  const Node& at(DiffValue v) const;
  void check_same_shape(const Mat& a, const Mat& b, const char* op) const;

  std::vector<Node> nodes_;
};

}  // namespace krgnn
