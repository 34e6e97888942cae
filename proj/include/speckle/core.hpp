#pragma once

// Domain types, validation and reproducible random streams shared by every
// other module. Reflectivity is stored on the normalized [0, 1] scale (an 8-bit
// pixel p maps to p / 255); noise levels quoted in 8-bit units are converted
// with sigma_from_8bit().

#include <complex>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <fftw3.h>

namespace speckle {

using cplx = std::complex<double>;

// ---------------------------------------------------------------------------
// Errors

struct InvalidArgument : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct CapabilityError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DegenerateInput : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

class SolverFailure : public std::runtime_error {
 public:
  SolverFailure(const std::string& what, double residual, int iterations)
      : std::runtime_error(what), residual_(residual), iterations_(iterations) {}
  double residual() const noexcept { return residual_; }
  int iterations() const noexcept { return iterations_; }

 private:
  double residual_;
  int iterations_;
};

// ---------------------------------------------------------------------------
// Storage

/// Allocator backed by fftw_malloc so every field has the alignment the FFT
/// plans were created with.
template <class T>
struct FftwAllocator {
  using value_type = T;
  FftwAllocator() noexcept = default;
  template <class U>
  FftwAllocator(const FftwAllocator<U>&) noexcept {}

  T* allocate(std::size_t n) {
    void* p = fftw_malloc(n * sizeof(T));
    if (p == nullptr && n != 0) throw std::bad_alloc();
    return static_cast<T*>(p);
  }
  void deallocate(T* p, std::size_t) noexcept { fftw_free(p); }

  template <class U>
  bool operator==(const FftwAllocator<U>&) const noexcept {
    return true;
  }
};

struct Shape {
  std::size_t rows = 0;
  std::size_t cols = 0;

  std::size_t size() const noexcept { return rows * cols; }
  bool operator==(const Shape&) const = default;
};

std::string to_string(Shape s);

/// Row-major 2D array.
template <class T, class Alloc = std::allocator<T>>
class Grid {
 public:
  using value_type = T;

  Grid() = default;
  explicit Grid(Shape shape, T fill = T{}) : shape_(shape), data_(shape.size(), fill) {
    if (shape.rows == 0 || shape.cols == 0)
      throw InvalidArgument("grid dimensions must be positive, got " + to_string(shape));
  }

  Shape shape() const noexcept { return shape_; }
  std::size_t rows() const noexcept { return shape_.rows; }
  std::size_t cols() const noexcept { return shape_.cols; }
  std::size_t size() const noexcept { return data_.size(); }

  T& operator()(std::size_t r, std::size_t c) { return data_[r * shape_.cols + c]; }
  const T& operator()(std::size_t r, std::size_t c) const { return data_[r * shape_.cols + c]; }
  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }

  T* data() noexcept { return data_.data(); }
  const T* data() const noexcept { return data_.data(); }
  std::span<T> span() noexcept { return {data_.data(), data_.size()}; }
  std::span<const T> span() const noexcept { return {data_.data(), data_.size()}; }

  auto begin() noexcept { return data_.begin(); }
  auto end() noexcept { return data_.end(); }
  auto begin() const noexcept { return data_.begin(); }
  auto end() const noexcept { return data_.end(); }

  bool operator==(const Grid& o) const { return shape_ == o.shape_ && data_ == o.data_; }

 private:
  Shape shape_{};
  std::vector<T, Alloc> data_;
};

using RealGrid = Grid<double>;

/// H x W complex field (speckle, noise, measurements, residuals, CG iterates).
using ComplexField = Grid<cplx, FftwAllocator<cplx>>;

bool all_finite(const ComplexField& f);
void require_same_shape(Shape a, Shape b, std::string_view what);

/// Nonnegative speckle-free reflectivity on the normalized [0, 1] scale.
class ReflectivityImage {
 public:
  ReflectivityImage() = default;
  explicit ReflectivityImage(RealGrid values);
  ReflectivityImage(Shape shape, double fill);

  Shape shape() const noexcept { return values_.shape(); }
  std::size_t size() const noexcept { return values_.size(); }
  const RealGrid& values() const noexcept { return values_; }
  std::span<const double> span() const noexcept { return values_.span(); }
  double operator[](std::size_t i) const { return values_[i]; }

 private:
  RealGrid values_;
};

// ---------------------------------------------------------------------------
// Parameters

/// Converts a noise standard deviation quoted in 8-bit intensity units (as in
/// sigma_z = 15 or 25) to the normalized reflectivity scale.
constexpr double sigma_from_8bit(double sigma) { return sigma / 255.0; }
constexpr double sigma_to_8bit(double sigma) { return sigma * 255.0; }

struct AcquisitionParams {
  int looks = 1;
  double alpha = 0.0;
  double sigma_z = 0.0;  // normalized scale
  std::uint64_t seed = 0;

  void validate() const;
};

enum class ProbeLaw { gaussian, rademacher };

ProbeLaw parse_probe_law(std::string_view s);
std::string_view to_string(ProbeLaw law);

/// How M^-1 is applied.
///   nested: CG on M, each M application running an inner CG on S.
///   split:  M^-1 = ((S - alpha B)^-1 + (S + alpha B)^-1) / 2, two plain CG solves.
enum class MInverse { nested, split };

MInverse parse_m_inverse(std::string_view s);
std::string_view to_string(MInverse m);

struct SolverConfig {
  int max_pgd_iters = 100;
  /// First trial step of the line search; unset means a scale-aware automatic
  /// choice (5% relative change of the iterate).
  std::optional<double> step_init;
  double armijo_c = 1e-4;
  double armijo_shrink = 0.5;
  double cg_tol = 1e-6;
  /// 0 selects n, the problem dimension.
  int cg_max_iters = 0;
  double nested_cg_tol = 1e-8;
  int mc_probes = 50;
  ProbeLaw probe_law = ProbeLaw::gaussian;
  MInverse m_inverse = MInverse::split;

  void validate() const;
  int max_iters_for(std::size_t n) const {
    return cg_max_iters > 0 ? cg_max_iters : static_cast<int>(n);
  }
};

// ---------------------------------------------------------------------------
// Random streams

/// Reproducible random stream. (seed, label, index) fully determines every
/// draw; child streams are derived with split() and never overlap the parent.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::string_view label, std::uint64_t index = 0);

  RngStream split(std::string_view label, std::uint64_t index = 0) const;

  double normal() { return normal_(engine_); }
  double uniform() { return uniform_(engine_); }
  double rademacher() { return (engine_() >> 63) != 0 ? 1.0 : -1.0; }

  std::uint64_t key() const noexcept { return key_; }

 private:
  explicit RngStream(std::uint64_t key);

  std::uint64_t key_;
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

/// Circular complex Gaussian field: entry i has independent real and imaginary
/// parts of variance variance_map[i] / 2, so E|g_i|^2 = variance_map[i].
ComplexField complex_gaussian(Shape shape, std::span<const double> variance_map, RngStream& rng);

std::vector<cplx> vectorize(const ComplexField& field);
ComplexField devectorize(std::span<const cplx> values, std::size_t rows, std::size_t cols);

}  // namespace speckle
