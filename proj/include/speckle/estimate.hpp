#pragma once

// Moment estimators for the per-pixel measurement power and the inter-look
// correlation coefficient.

#include <span>

#include "speckle/core.hpp"

namespace speckle {

struct CorrelationEstimate {
  double gamma_hat = 0.0;
  double alpha_raw = 0.0;  // before clamping
  double alpha_hat = 0.0;  // clamped to [0, 1]
  int looks_used = 0;
};

/// (1 / nL) sum_l sum_i |y_{l,i}|^2. The noise floor is deliberately not
/// subtracted, so this estimates tr(A X A^H)/n + sigma_z^2.
double estimate_gamma(std::span<const ComplexField> looks);

/// Re{(1 / n(L-1)) sum_{l>=2} sum_i y_{l-1,i} conj(y_{l,i})} / gamma_hat.
/// Requires L >= 2; throws DegenerateInput when gamma_hat is zero.
CorrelationEstimate estimate_alpha(std::span<const ComplexField> looks);

}  // namespace speckle
