#include "speckle/sim.hpp"

#include <cmath>

#include "speckle/kernels.hpp"

namespace speckle {

void MeasurementSet::validate() const {
  if (looks.empty()) throw InvalidArgument("measurement set has no looks");
  for (const auto& y : looks) require_same_shape(y.shape(), looks.front().shape(), "measurement set");
  if (params.looks != size())
    throw InvalidArgument("measurement set holds " + std::to_string(size()) +
                          " looks but params.looks = " + std::to_string(params.looks));
  if (aperture) require_same_shape(aperture->shape(), shape(), "measurement aperture");
  if (truth) require_same_shape(truth->shape(), shape(), "measurement truth");
}

std::vector<ComplexField> simulate_speckle(const ReflectivityImage& x,
                                           const AcquisitionParams& params, const RngStream& rng) {
  params.validate();
  const double a = params.alpha;
  const double b = std::sqrt(std::max(0.0, 1.0 - a * a));
  std::vector<ComplexField> g;
  g.reserve(static_cast<std::size_t>(params.looks));
  for (int l = 0; l < params.looks; ++l) {
    auto stream = rng.split("speckle", static_cast<std::uint64_t>(l));
    if (l == 0) {
      g.push_back(complex_gaussian(x.shape(), x.span(), stream));
      continue;
    }
    ComplexField next = g.back();
    if (b > 0.0) {
      const ComplexField u = complex_gaussian(x.shape(), x.span(), stream);
      for (std::size_t i = 0; i < next.size(); ++i) next[i] = a * next[i] + b * u[i];
    }
    g.push_back(std::move(next));
  }
  return g;
}

MeasurementSet simulate_measurements(const ReflectivityImage& x,
                                     std::shared_ptr<const ApertureMask> aperture,
                                     const AcquisitionParams& params, const RngStream& rng) {
  params.validate();
  if (!aperture) throw InvalidArgument("simulate_measurements: missing aperture");
  // Fixed planning so that a seed reproduces the same bytes in every process.
  const OperatorBundle ops(x, aperture, params.sigma_z, params.alpha, nullptr,
                           FftPlanning::estimate);
  const std::vector<double> noise_var(x.size(), params.sigma_z * params.sigma_z);

  MeasurementSet out;
  out.params = params;
  out.aperture = aperture;
  out.truth = x;
  auto speckle = simulate_speckle(x, params, rng);
  out.looks.reserve(speckle.size());
  for (std::size_t l = 0; l < speckle.size(); ++l) {
    auto noise_stream = rng.split("noise", l);
    ComplexField y = ops.apply_A(speckle[l]);
    const ComplexField z = complex_gaussian(x.shape(), noise_var, noise_stream);
    kernels::parallel::axpy(1.0, z.span(), y.span());
    out.looks.push_back(std::move(y));
  }
  return out;
}

MeasurementSet simulate_measurements(const ReflectivityImage& x,
                                     std::shared_ptr<const ApertureMask> aperture,
                                     const AcquisitionParams& params) {
  return simulate_measurements(x, std::move(aperture), params, RngStream(params.seed, "simulate"));
}

}  // namespace speckle
