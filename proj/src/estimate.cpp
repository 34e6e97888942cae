#include "speckle/estimate.hpp"

#include <algorithm>

#include "speckle/kernels.hpp"

namespace speckle {

double estimate_gamma(std::span<const ComplexField> looks) {
  if (looks.empty()) throw InvalidArgument("estimate_gamma: empty measurement set");
  const Shape shape = looks.front().shape();
  double total = 0.0;
  for (const auto& y : looks) {
    require_same_shape(y.shape(), shape, "estimate_gamma");
    total += kernels::parallel::norm_sq(y.span());
  }
  return total / (static_cast<double>(shape.size()) * static_cast<double>(looks.size()));
}

CorrelationEstimate estimate_alpha(std::span<const ComplexField> looks) {
  if (looks.size() < 2) throw InvalidArgument("estimate_alpha: at least two looks are required");
  CorrelationEstimate out;
  out.looks_used = static_cast<int>(looks.size());
  out.gamma_hat = estimate_gamma(looks);
  if (!(out.gamma_hat > 0.0)) throw DegenerateInput("estimate_alpha: measurements are all zero");

  // sum_i y_{l-1,i} conj(y_{l,i}) = conj(<y_{l-1}, y_l>); only the real part is used.
  double cross = 0.0;
  for (std::size_t l = 1; l < looks.size(); ++l)
    cross += kernels::parallel::dot(looks[l - 1].span(), looks[l].span()).real();
  const double n = static_cast<double>(looks.front().size());
  cross /= n * static_cast<double>(looks.size() - 1);

  out.alpha_raw = cross / out.gamma_hat;
  out.alpha_hat = std::clamp(out.alpha_raw, 0.0, 1.0);
  return out;
}

}  // namespace speckle
