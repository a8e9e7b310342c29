#pragma once

#include "krgnn/tape.hpp"
#include "krgnn/types.hpp"

namespace krgnn {

// Differentiable regression-residual loss, recorded on `tape`:
//
//   K     = rbf_gram(x, sigma)
//   alpha = (K + n * ridge * I)^-1 y
//   R     = y - K alpha
//   loss  = (1 / (m sqrt(n))) sum_j |R_.j|_2
//
// where n = rows(x) and m = cols(y). Gradients flow into both x and y.
// sigma is treated as a constant. The ridge term is scaled by n so the
// regularization strength is comparable across sample counts.
DiffValue kr_loss_ridge(Tape& tape, DiffValue x, DiffValue y, double sigma,
                        double ridge);

// Payload-only evaluation of the same quantity (no tape, no gradients).
double kr_loss_ridge_value(const Mat& x, const Mat& y, double sigma,
                           double ridge);

}  // namespace krgnn
