#include "krgnn/kernel.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "krgnn/errors.hpp"

namespace krgnn {

void KernelConfig::validate() const {
  if (!(sigma > 0.0) || !std::isfinite(sigma))
    throw InvalidArgument("kernel bandwidth must be positive and finite, got " +
                          std::to_string(sigma));
  if (!(p >= 1.0) || !std::isfinite(p))
    throw InvalidArgument("norm order must be >= 1 and finite, got " + std::to_string(p));
  if (!(eps_rank >= 0.0) || !(eps_rank < 1.0))
    throw InvalidArgument("rank threshold must lie in [0, 1), got " +
                          std::to_string(eps_rank));
  if (!(lambda_ridge >= 0.0) || !std::isfinite(lambda_ridge))
    throw InvalidArgument("ridge coefficient must be nonnegative and finite, got " +
                          std::to_string(lambda_ridge));
}

bool all_finite(const Mat& m) { return m.allFinite(); }

Mat rbf_gram(const SampleMatrix& x, double sigma) {
  if (x.rows() == 0) throw InvalidArgument("rbf_gram: empty sample matrix");
  if (!all_finite(x)) throw InvalidArgument("rbf_gram: non-finite sample entries");
  if (!(sigma > 0.0) || !std::isfinite(sigma))
    throw InvalidArgument("rbf_gram: bandwidth must be positive, got " + std::to_string(sigma));

  const Vec sq = x.rowwise().squaredNorm();
  Mat d2 = sq.replicate(1, x.rows());
  d2 += sq.transpose().replicate(x.rows(), 1);
  d2.noalias() -= 2.0 * (x * x.transpose());
  // Rounding can push tiny squared distances below zero.
  d2 = d2.cwiseMax(0.0);

  Mat k = (-d2 / (2.0 * sigma * sigma)).array().exp().matrix();
  // Force exact symmetry so downstream symmetric solvers see a clean input.
  k = 0.5 * (k + k.transpose()).eval();
  k.diagonal().setOnes();
  return k;
}

double median_bandwidth(const SampleMatrix& x) {
  const Eigen::Index n = x.rows();
  if (n < 2) throw DegenerateInput("median_bandwidth: need at least 2 samples");
  if (!all_finite(x)) throw InvalidArgument("median_bandwidth: non-finite sample entries");

  std::vector<double> dist;
  dist.reserve(static_cast<std::size_t>(n) * (n - 1) / 2);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j)
      dist.push_back((x.row(i) - x.row(j)).norm());

  const std::size_t half = dist.size() / 2;
  std::nth_element(dist.begin(), dist.begin() + half, dist.end());
  double med = dist[half];
  if (dist.size() % 2 == 0) {
    // Even count: average with the largest value of the lower half.
    double lower = *std::max_element(dist.begin(), dist.begin() + half);
    med = 0.5 * (med + lower);
  }
  if (!(med > 0.0))
    throw DegenerateInput("median_bandwidth: median pairwise distance is zero");
  return med;
}

SpectralProjector spectral_projector(const Mat& k_matrix, double eps_rank) {
  if (k_matrix.rows() != k_matrix.cols())
    throw InvalidArgument("spectral_projector: matrix must be square");
  if (!(eps_rank >= 0.0) || !(eps_rank < 1.0))
    throw InvalidArgument("spectral_projector: rank threshold must lie in [0, 1)");
  if (!all_finite(k_matrix))
    throw InvalidArgument("spectral_projector: non-finite matrix entries");
  const double scale = std::max(1.0, k_matrix.cwiseAbs().maxCoeff());
  if ((k_matrix - k_matrix.transpose()).cwiseAbs().maxCoeff() > 1e-8 * scale)
    throw InvalidArgument("spectral_projector: matrix is not symmetric");

  Eigen::SelfAdjointEigenSolver<Mat> es(k_matrix);
  if (es.info() != Eigen::Success)
    throw SingularSystem("spectral_projector: eigendecomposition did not converge");

  const Eigen::Index n = k_matrix.rows();
  SpectralProjector proj;
  proj.eigenvalues = es.eigenvalues().reverse();  // solver returns ascending
  const double lambda_max = std::max(proj.eigenvalues(0), 0.0);
  const double cutoff = eps_rank * lambda_max;

  Eigen::Index rank = 0;
  while (rank < n && proj.eigenvalues(rank) > cutoff) ++rank;
  proj.basis = es.eigenvectors().rowwise().reverse().leftCols(rank);
  return proj;
}

double kr_loss_from_projector(const SpectralProjector& proj, const Mat& y, double p) {
  if (y.rows() != proj.basis.rows())
    throw InvalidArgument("kr_loss_from_projector: sample-count mismatch");
  if (y.cols() == 0) throw InvalidArgument("kr_loss_from_projector: target has no columns");
  if (!(p >= 1.0) || !std::isfinite(p))
    throw InvalidArgument("kr_loss_from_projector: norm order must be >= 1");
  if (!all_finite(y)) throw InvalidArgument("kr_loss_from_projector: non-finite targets");

  const Mat r = proj.residual(y);
  const double n_scale = std::pow(static_cast<double>(y.rows()), -1.0 / p);
  double total = 0.0;
  for (Eigen::Index j = 0; j < r.cols(); ++j) {
    if (p == 2.0) {
      total += r.col(j).norm();
    } else {
      total += std::pow(r.col(j).array().abs().pow(p).sum(), 1.0 / p);
    }
  }
  return n_scale * total / static_cast<double>(y.cols());
}

double kr_loss_exact(const SampleMatrix& x, const SampleMatrix& y, const KernelConfig& cfg) {
  cfg.validate();
  if (x.rows() != y.rows())
    throw InvalidArgument("kr_loss_exact: x and y must have aligned sample rows");
  double sigma = cfg.sigma;
  if (cfg.sigma_median) {
    try {
      sigma = median_bandwidth(x);
    } catch (const DegenerateInput&) {
      // n = 1 or coincident samples: any bandwidth yields the same Gram.
    }
  }
  const Mat k = rbf_gram(x, sigma);
  const SpectralProjector proj = spectral_projector(k, cfg.eps_rank);
  return kr_loss_from_projector(proj, y, cfg.p);
}

}  // namespace krgnn
