#pragma once

// Correlated multi-look measurement synthesis:
//
//   g_1 ~ CN(0, X),  g_l = alpha g_{l-1} + sqrt(1 - alpha^2) u_l,  u_l ~ CN(0, X)
//   y_l = A g_l + z_l,  z_l ~ CN(0, sigma_z^2 I)

#include <memory>
#include <optional>
#include <vector>

#include "speckle/core.hpp"
#include "speckle/optics.hpp"

namespace speckle {

/// L looks in acquisition order plus the metadata they were produced with.
struct MeasurementSet {
  std::vector<ComplexField> looks;
  AcquisitionParams params;
  std::shared_ptr<const ApertureMask> aperture;  // may be null for data read from disk
  std::optional<ReflectivityImage> truth;

  Shape shape() const { return looks.front().shape(); }
  int size() const { return static_cast<int>(looks.size()); }
  /// Checks that all looks share one shape and that L matches params.looks.
  void validate() const;
};

std::vector<ComplexField> simulate_speckle(const ReflectivityImage& x,
                                           const AcquisitionParams& params, const RngStream& rng);

MeasurementSet simulate_measurements(const ReflectivityImage& x,
                                     std::shared_ptr<const ApertureMask> aperture,
                                     const AcquisitionParams& params, const RngStream& rng);

/// Uses the stream (params.seed, "simulate").
MeasurementSet simulate_measurements(const ReflectivityImage& x,
                                     std::shared_ptr<const ApertureMask> aperture,
                                     const AcquisitionParams& params);

}  // namespace speckle
