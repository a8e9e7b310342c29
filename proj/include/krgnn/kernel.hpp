#pragma once

#include "krgnn/types.hpp"

namespace krgnn {

// Gram matrix of the RBF kernel, K_ij = exp(-|x_i - x_j|^2 / (2 sigma^2)).
// Symmetric with unit diagonal; entries in (0, 1].
Mat rbf_gram(const SampleMatrix& x, double sigma);

// Median of all n(n-1)/2 pairwise Euclidean distances (even count: mean of
// the two middle values). Throws DegenerateInput for n < 2 or when the
// median is not strictly positive.
double median_bandwidth(const SampleMatrix& x);

// Orthogonal projector onto the numerical image of a PSD matrix, stored as
// its orthonormal basis. `eigenvalues` holds the full spectrum, descending.
struct SpectralProjector {
  Mat basis;        // n x k, orthonormal columns
  Vec eigenvalues;  // length n, descending

  Eigen::Index rank() const { return basis.cols(); }
  Mat matrix() const { return basis * basis.transpose(); }
  // (I - Pi) y, column-wise.
  Mat residual(const Mat& y) const { return y - basis * (basis.transpose() * y); }
};

// Eigendecomposes a symmetric PSD matrix and keeps the eigenvectors whose
// eigenvalue exceeds eps_rank * lambda_max. Throws InvalidArgument if the
// input is asymmetric beyond tolerance.
SpectralProjector spectral_projector(const Mat& k_matrix, double eps_rank);

// (1/m) sum_i n^(-1/p) |(I - Pi) y_col_i|_p for a prebuilt projector.
double kr_loss_from_projector(const SpectralProjector& proj, const Mat& y, double p);

// Exact estimator of the distance from Y to the continuous transforms of X,
// evaluated on aligned sample rows of x and y.
double kr_loss_exact(const SampleMatrix& x, const SampleMatrix& y, const KernelConfig& cfg);

}  // namespace krgnn
