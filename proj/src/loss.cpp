#include "krgnn/loss.hpp"

#include <Eigen/Cholesky>
#include <cmath>

#include "krgnn/errors.hpp"
#include "krgnn/kernel.hpp"

namespace krgnn {

DiffValue kr_loss_ridge(Tape& tape, DiffValue x, DiffValue y, double sigma,
                        double ridge) {
  const Eigen::Index n = tape.value(x).rows();
  if (tape.value(y).rows() != n)
    throw InvalidArgument("kr_loss_ridge: x and y must have aligned sample rows");
  DiffValue k = tape.rbf_gram(x, sigma);
  DiffValue alpha = tape.ridge_solve(k, y, static_cast<double>(n) * ridge);
  DiffValue fit = tape.matmul(k, alpha);
  DiffValue resid = tape.sub(y, fit);
  return tape.column_norm_mean(resid);
}

double kr_loss_ridge_value(const Mat& x, const Mat& y, double sigma, double ridge) {
  const Eigen::Index n = x.rows();
  if (y.rows() != n)
    throw InvalidArgument("kr_loss_ridge_value: x and y must have aligned sample rows");
  // Mirrors the taped computation step for step so both paths agree bitwise.
  const Mat k = rbf_gram(x, sigma);
  Mat m = k;
  m.diagonal().array() += static_cast<double>(n) * ridge;
  Eigen::LLT<Mat> llt(m);
  if (llt.info() != Eigen::Success)
    throw SingularSystem("kr_loss_ridge_value: regularized system is not positive definite");
  const Mat alpha = llt.solve(y);
  const Mat fit = k * alpha;
  const Mat resid = y - fit;
  const double coeff = 1.0 / (static_cast<double>(resid.cols()) *
                              std::sqrt(static_cast<double>(resid.rows())));
  double total = 0.0;
  for (Eigen::Index j = 0; j < resid.cols(); ++j) total += resid.col(j).norm();
  return coeff * total;
}

}  // namespace krgnn
