#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "krgnn/kernel.hpp"
#include "krgnn/types.hpp"

namespace krgnn {

// One swept setting of a synthetic experiment: `estimates` holds the
// per-repeat loss values, `estimate` their mean and `std_error` the standard
// error of that mean. theory_rho is the closed-form target; theory_mi is only
// set for the mutual-information sweep. mean_sigma records the average
// median-heuristic bandwidth actually used (for the run manifest).
struct SweepPoint {
  std::string parameter;
  std::vector<double> estimates;
  double estimate = 0.0;
  double std_error = 0.0;
  double theory_rho = 0.0;
  std::optional<double> theory_mi;
  double mean_sigma = 0.0;
};

// Scalar dependence table. Draws X ~ N(0,1) and the transforms
// Z = sign(X) X^2 (invertible) and W = X^2 (sign-erasing), then evaluates
// the estimator in four directions: X|Z, X|W, Z|X, W|X with closed-form
// targets (0, 1, 0, 0). One sample set per repeat is shared across the four
// rows. Rows are labeled by direction.
std::vector<SweepPoint> exp_1d(int n, int repeats, std::uint64_t seed,
                               const KernelConfig& cfg);

// Additive-noise scaling in 100 dimensions: X standard normal in R^100,
// Y = sum_i (X_i + alpha N_i) with N standard normal, so the closed form is
// rho = |alpha| * 10. One point per alpha, labeled by alpha.
std::vector<SweepPoint> exp_100d(const std::vector<double>& alphas, int n,
                                 int repeats, std::uint64_t seed,
                                 const KernelConfig& cfg);

// Bivariate Gaussian with correlation alpha: the estimator targets
// rho = sqrt(1 - alpha^2), reported next to the mutual information
// -0.5 log(1 - alpha^2). Labeled by alpha.
std::vector<SweepPoint> exp_mi(const std::vector<double>& alphas, int n,
                               int repeats, std::uint64_t seed,
                               const KernelConfig& cfg);

}  // namespace krgnn
