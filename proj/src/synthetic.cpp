#include "krgnn/synthetic.hpp"

#include <cmath>
#include <string>

#include "krgnn/errors.hpp"
#include "krgnn/io.hpp"
#include "krgnn/rng.hpp"

namespace krgnn {

namespace {

Mat draw_normal(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Mat m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = gauss(rng);
  return m;
}

double resolve_sigma(const Mat& conditioning, const KernelConfig& cfg) {
  return cfg.sigma_median ? median_bandwidth(conditioning) : cfg.sigma;
}

void finalize(SweepPoint& pt) {
  const auto reps = static_cast<double>(pt.estimates.size());
  double mean = 0.0;
  for (double e : pt.estimates) mean += e;
  mean /= reps;
  pt.estimate = mean;
  if (pt.estimates.size() > 1) {
    double ss = 0.0;
    for (double e : pt.estimates) ss += (e - mean) * (e - mean);
    // Standard error of the mean, so the spread column tightens with repeats.
    pt.std_error = std::sqrt(ss / (reps - 1.0)) / std::sqrt(reps);
  }
  pt.mean_sigma /= reps;
}

void check_counts(int n, int repeats, const char* who) {
  if (n < 100) throw InvalidArgument(std::string(who) + ": need n >= 100");
  if (repeats < 1) throw InvalidArgument(std::string(who) + ": need at least 1 repeat");
}

}  // namespace

std::vector<SweepPoint> exp_1d(int n, int repeats, std::uint64_t seed,
                               const KernelConfig& cfg) {
  check_counts(n, repeats, "exp_1d");
  cfg.validate();

  std::vector<SweepPoint> table(4);
  table[0].parameter = "X|Z";
  table[0].theory_rho = 0.0;  // Z = sign(X) X^2 is invertible
  table[1].parameter = "X|W";
  table[1].theory_rho = 1.0;  // W = X^2 loses the sign; E[X|W] = 0
  table[2].parameter = "Z|X";
  table[2].theory_rho = 0.0;
  table[3].parameter = "W|X";
  table[3].theory_rho = 0.0;

  for (int rep = 0; rep < repeats; ++rep) {
    Rng rng = make_rng(derive_seed(seed, static_cast<std::uint64_t>(rep)));
    const Mat x = draw_normal(n, 1, rng);
    const Mat z = (x.array().sign() * x.array().square()).matrix();
    const Mat w = x.array().square().matrix();

    const double sigma_z = resolve_sigma(z, cfg);
    const SpectralProjector proj_z = spectral_projector(rbf_gram(z, sigma_z), cfg.eps_rank);
    table[0].estimates.push_back(kr_loss_from_projector(proj_z, x, cfg.p));
    table[0].mean_sigma += sigma_z;

    const double sigma_w = resolve_sigma(w, cfg);
    const SpectralProjector proj_w = spectral_projector(rbf_gram(w, sigma_w), cfg.eps_rank);
    table[1].estimates.push_back(kr_loss_from_projector(proj_w, x, cfg.p));
    table[1].mean_sigma += sigma_w;

    // Both conditioned-on-X rows share one projector.
    const double sigma_x = resolve_sigma(x, cfg);
    const SpectralProjector proj_x = spectral_projector(rbf_gram(x, sigma_x), cfg.eps_rank);
    table[2].estimates.push_back(kr_loss_from_projector(proj_x, z, cfg.p));
    table[2].mean_sigma += sigma_x;
    table[3].estimates.push_back(kr_loss_from_projector(proj_x, w, cfg.p));
    table[3].mean_sigma += sigma_x;
  }
  for (SweepPoint& pt : table) finalize(pt);
  return table;
}

std::vector<SweepPoint> exp_100d(const std::vector<double>& alphas, int n,
                                 int repeats, std::uint64_t seed,
                                 const KernelConfig& cfg) {
  check_counts(n, repeats, "exp_100d");
  cfg.validate();
  if (alphas.empty()) throw InvalidArgument("exp_100d: empty parameter grid");
  constexpr int kDim = 100;

  std::vector<SweepPoint> curve(alphas.size());
  for (std::size_t i = 0; i < alphas.size(); ++i) {
    const double alpha = alphas[i];
    if (!std::isfinite(alpha)) throw InvalidArgument("exp_100d: non-finite alpha");
    SweepPoint& pt = curve[i];
    pt.parameter = format_double(alpha);
    pt.theory_rho = std::abs(alpha) * std::sqrt(static_cast<double>(kDim));

    const std::uint64_t point_seed = derive_seed(seed, static_cast<std::uint64_t>(i));
    for (int rep = 0; rep < repeats; ++rep) {
      Rng rng = make_rng(derive_seed(point_seed, static_cast<std::uint64_t>(rep)));
      const Mat x = draw_normal(n, kDim, rng);
      const Mat noise = draw_normal(n, kDim, rng);
      const Mat y = (x + alpha * noise).rowwise().sum();

      const double sigma = resolve_sigma(x, cfg);
      const SpectralProjector proj = spectral_projector(rbf_gram(x, sigma), cfg.eps_rank);
      pt.estimates.push_back(kr_loss_from_projector(proj, y, cfg.p));
      pt.mean_sigma += sigma;
    }
    finalize(pt);
  }
  return curve;
}

std::vector<SweepPoint> exp_mi(const std::vector<double>& alphas, int n,
                               int repeats, std::uint64_t seed,
                               const KernelConfig& cfg) {
  check_counts(n, repeats, "exp_mi");
  cfg.validate();
  if (alphas.empty()) throw InvalidArgument("exp_mi: empty parameter grid");

  std::vector<SweepPoint> curve(alphas.size());
  for (std::size_t i = 0; i < alphas.size(); ++i) {
    const double alpha = alphas[i];
    if (!(std::abs(alpha) < 1.0))
      throw InvalidArgument("exp_mi: correlation must satisfy |alpha| < 1, got " +
                            std::to_string(alpha));
    SweepPoint& pt = curve[i];
    pt.parameter = format_double(alpha);
    pt.theory_rho = std::sqrt(1.0 - alpha * alpha);
    // + 0.0 normalizes the -0 that -0.5 * log(1) would otherwise produce.
    pt.theory_mi = -0.5 * std::log(1.0 - alpha * alpha) + 0.0;

    const std::uint64_t point_seed = derive_seed(seed, static_cast<std::uint64_t>(i));
    for (int rep = 0; rep < repeats; ++rep) {
      Rng rng = make_rng(derive_seed(point_seed, static_cast<std::uint64_t>(rep)));
      // Exact covariance by construction: X2 = a X1 + sqrt(1 - a^2) eps.
      const Mat x1 = draw_normal(n, 1, rng);
      const Mat eps = draw_normal(n, 1, rng);
      const Mat x2 = alpha * x1 + std::sqrt(1.0 - alpha * alpha) * eps;

      const double sigma = resolve_sigma(x2, cfg);
      const SpectralProjector proj = spectral_projector(rbf_gram(x2, sigma), cfg.eps_rank);
      pt.estimates.push_back(kr_loss_from_projector(proj, x1, cfg.p));
      pt.mean_sigma += sigma;
    }
    finalize(pt);
  }
  return curve;
}

}  // namespace krgnn
