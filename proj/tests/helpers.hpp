#pragma once

#include <cmath>
#include <memory>

#include "speckle/core.hpp"
#include "speckle/kernels.hpp"
#include "speckle/optics.hpp"

namespace speckle::test {

inline ComplexField random_field(Shape shape, RngStream& rng) {
  ComplexField f(shape);
  for (auto& v : f) v = {rng.normal(), rng.normal()};
  return f;
}

/// Reflectivity drawn uniformly from [lo, hi].
inline ReflectivityImage random_x(Shape shape, RngStream& rng, double lo = 0.05, double hi = 0.95) {
  RealGrid g(shape);
  for (auto& v : g) v = lo + (hi - lo) * rng.uniform();
  return ReflectivityImage(std::move(g));
}

inline double norm(const ComplexField& f) { return std::sqrt(kernels::serial::norm_sq(f.span())); }

inline double rel_diff(const ComplexField& a, const ComplexField& b) {
  double num = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) num += std::norm(a[i] - b[i]);
  return std::sqrt(num) / norm(b);
}

inline cplx inner(const ComplexField& a, const ComplexField& b) {
  return kernels::serial::dot(a.span(), b.span());
}

inline std::shared_ptr<const ApertureMask> aperture(const std::string& spec, Shape shape) {
  return std::make_shared<const ApertureMask>(parse_aperture(spec, shape));
}

}  // namespace speckle::test
