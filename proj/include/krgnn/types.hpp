#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

namespace krgnn {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;
using Mask = std::vector<std::uint8_t>;

// Rows are i.i.d. samples, columns are components of the sampled vector.
using SampleMatrix = Mat;

// Settings of the kernel-regression estimator. `sigma` is the RBF bandwidth
// (used when `sigma_median` is false; otherwise the median heuristic is
// recomputed from each conditioning sample set), `p` the norm order of the
// residual, `eps_rank` the relative eigenvalue threshold deciding the
// numerical rank of the Gram matrix, and `lambda_ridge` the ridge coefficient
// of the differentiable variant.
struct KernelConfig {
  double sigma = 1.0;
  bool sigma_median = true;
  double p = 2.0;
  double eps_rank = 1e-3;
  double lambda_ridge = 1e-4;

  void validate() const;  // throws InvalidArgument
};

bool all_finite(const Mat& m);

}  // namespace krgnn
