#pragma once

#include <memory>

#include "speckle/core.hpp"

namespace speckle {

/// estimate: plan chosen without timing runs; the same shape always gets the
///   same plan, so results are bit-identical across processes.
/// measure: plan chosen by timing candidates (about 3x faster at 256x256);
///   fixed for the life of the process but may differ between processes.
enum class FftPlanning { estimate, measure };

/// Process default: SPECKLE_FFT_PLANNING=estimate|measure, else measure.
FftPlanning default_fft_planning();

/// In-place 2D FFT pair for one shape. Both directions are unnormalized (FFTW
/// convention); callers fold the 1/n factor into their pointwise step.
/// Plans are shared and execution is thread-safe.
class Fft2 {
 public:
  static std::shared_ptr<const Fft2> get(Shape shape, FftPlanning planning = default_fft_planning());

  ~Fft2();
  Fft2(const Fft2&) = delete;
  Fft2& operator=(const Fft2&) = delete;

  Shape shape() const noexcept { return shape_; }
  FftPlanning planning() const noexcept { return planning_; }
  void forward(ComplexField& f) const;
  void inverse(ComplexField& f) const;

  Fft2(Shape shape, FftPlanning planning);

 private:
  Shape shape_;
  FftPlanning planning_;
  fftw_plan forward_ = nullptr;
  fftw_plan inverse_ = nullptr;
};

}  // namespace speckle
