#include "speckle/fft.hpp"

#include <cstdlib>
#include <map>
#include <string_view>
#include <tuple>
#include <mutex>

namespace speckle {

namespace {

// FFTW's planner is not thread-safe.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

fftw_complex* as_fftw(ComplexField& f) { return reinterpret_cast<fftw_complex*>(f.data()); }

}  // namespace

FftPlanning default_fft_planning() {
  static const FftPlanning mode = [] {
    const char* env = std::getenv("SPECKLE_FFT_PLANNING");
    if (env == nullptr || std::string_view(env).empty()) return FftPlanning::measure;
    if (std::string_view(env) == "estimate") return FftPlanning::estimate;
    if (std::string_view(env) == "measure") return FftPlanning::measure;
    throw InvalidArgument("SPECKLE_FFT_PLANNING must be 'estimate' or 'measure'");
  }();
  return mode;
}

Fft2::Fft2(Shape shape, FftPlanning planning) : shape_(shape), planning_(planning) {
  ComplexField scratch(shape);
  const int r = static_cast<int>(shape.rows);
  const int c = static_cast<int>(shape.cols);
  const unsigned flags = planning == FftPlanning::estimate ? FFTW_ESTIMATE : FFTW_MEASURE;
  std::lock_guard lock(planner_mutex());
  forward_ = fftw_plan_dft_2d(r, c, as_fftw(scratch), as_fftw(scratch), FFTW_FORWARD, flags);
  inverse_ = fftw_plan_dft_2d(r, c, as_fftw(scratch), as_fftw(scratch), FFTW_BACKWARD, flags);
  if (forward_ == nullptr || inverse_ == nullptr) throw std::runtime_error("FFTW planning failed");
}

Fft2::~Fft2() {
  std::lock_guard lock(planner_mutex());
  if (forward_) fftw_destroy_plan(forward_);
  if (inverse_) fftw_destroy_plan(inverse_);
}

std::shared_ptr<const Fft2> Fft2::get(Shape shape, FftPlanning planning) {
  static std::mutex cache_mutex;
  static std::map<std::tuple<std::size_t, std::size_t, FftPlanning>, std::shared_ptr<const Fft2>>
      cache;
  std::lock_guard lock(cache_mutex);
  auto& slot = cache[{shape.rows, shape.cols, planning}];
  if (!slot) slot = std::make_shared<const Fft2>(shape, planning);
  return slot;
}

void Fft2::forward(ComplexField& f) const {
  require_same_shape(f.shape(), shape_, "Fft2::forward");
  fftw_execute_dft(forward_, as_fftw(f), as_fftw(f));
}

void Fft2::inverse(ComplexField& f) const {
  require_same_shape(f.shape(), shape_, "Fft2::inverse");
  fftw_execute_dft(inverse_, as_fftw(f), as_fftw(f));
}

}  // namespace speckle
