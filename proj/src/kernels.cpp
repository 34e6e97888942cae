#include "speckle/kernels.hpp"

#include <algorithm>
#include <cstddef>
#include <exception>
#include <mutex>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace speckle::kernels {

namespace {

// Below this size the fork/join overhead dominates.
constexpr std::ptrdiff_t kParallelMin = 1 << 14;
// Reduction block; fixed so the summation order is independent of threads.
constexpr std::ptrdiff_t kBlock = 2048;

}  // namespace

namespace serial {

void multiply(std::span<cplx> a, std::span<const double> w) {
  for (std::size_t i = 0; i < a.size(); ++i) a[i] *= w[i];
}

void multiply(std::span<cplx> a, std::span<const double> w, double s) {
  for (std::size_t i = 0; i < a.size(); ++i) a[i] *= s * w[i];
}

void scale(std::span<cplx> a, double s) {
  for (auto& v : a) v *= s;
}

void axpy(cplx alpha, std::span<const cplx> x, std::span<cplx> y) {
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += alpha * x[i];
}

void xpby(std::span<const cplx> x, cplx beta, std::span<cplx> y) {
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = x[i] + beta * y[i];
}

void sub(std::span<const cplx> a, std::span<const cplx> b, std::span<cplx> out) {
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] - b[i];
}

cplx dot(std::span<const cplx> a, std::span<const cplx> b) {
  cplx s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::conj(a[i]) * b[i];
  return s;
}

double norm_sq(std::span<const cplx> a) {
  double s = 0.0;
  for (const auto& v : a) s += std::norm(v);
  return s;
}

}  // namespace serial

namespace parallel {

void multiply(std::span<cplx> a, std::span<const double> w) {
  const auto n = static_cast<std::ptrdiff_t>(a.size());
#pragma omp parallel for schedule(static) if (n >= kParallelMin)
  for (std::ptrdiff_t i = 0; i < n; ++i) a[i] *= w[i];
}

void multiply(std::span<cplx> a, std::span<const double> w, double s) {
  const auto n = static_cast<std::ptrdiff_t>(a.size());
#pragma omp parallel for schedule(static) if (n >= kParallelMin)
  for (std::ptrdiff_t i = 0; i < n; ++i) a[i] *= s * w[i];
}

void scale(std::span<cplx> a, double s) {
  const auto n = static_cast<std::ptrdiff_t>(a.size());
#pragma omp parallel for schedule(static) if (n >= kParallelMin)
  for (std::ptrdiff_t i = 0; i < n; ++i) a[i] *= s;
}

void axpy(cplx alpha, std::span<const cplx> x, std::span<cplx> y) {
  const auto n = static_cast<std::ptrdiff_t>(y.size());
#pragma omp parallel for schedule(static) if (n >= kParallelMin)
  for (std::ptrdiff_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void xpby(std::span<const cplx> x, cplx beta, std::span<cplx> y) {
  const auto n = static_cast<std::ptrdiff_t>(y.size());
#pragma omp parallel for schedule(static) if (n >= kParallelMin)
  for (std::ptrdiff_t i = 0; i < n; ++i) y[i] = x[i] + beta * y[i];
}

void sub(std::span<const cplx> a, std::span<const cplx> b, std::span<cplx> out) {
  const auto n = static_cast<std::ptrdiff_t>(out.size());
#pragma omp parallel for schedule(static) if (n >= kParallelMin)
  for (std::ptrdiff_t i = 0; i < n; ++i) out[i] = a[i] - b[i];
}

cplx dot(std::span<const cplx> a, std::span<const cplx> b) {
  const auto n = static_cast<std::ptrdiff_t>(a.size());
  const std::ptrdiff_t blocks = (n + kBlock - 1) / kBlock;
  std::vector<cplx> partial(static_cast<std::size_t>(blocks));
#pragma omp parallel for schedule(static) if (n >= kParallelMin)
  for (std::ptrdiff_t b0 = 0; b0 < blocks; ++b0) {
    cplx s = 0.0;
    const std::ptrdiff_t end = std::min(n, (b0 + 1) * kBlock);
    for (std::ptrdiff_t i = b0 * kBlock; i < end; ++i) s += std::conj(a[i]) * b[i];
    partial[static_cast<std::size_t>(b0)] = s;
  }
  cplx s = 0.0;
  for (const auto& p : partial) s += p;
  return s;
}

double norm_sq(std::span<const cplx> a) {
  const auto n = static_cast<std::ptrdiff_t>(a.size());
  const std::ptrdiff_t blocks = (n + kBlock - 1) / kBlock;
  std::vector<double> partial(static_cast<std::size_t>(blocks));
#pragma omp parallel for schedule(static) if (n >= kParallelMin)
  for (std::ptrdiff_t b0 = 0; b0 < blocks; ++b0) {
    double s = 0.0;
    const std::ptrdiff_t end = std::min(n, (b0 + 1) * kBlock);
    for (std::ptrdiff_t i = b0 * kBlock; i < end; ++i) s += std::norm(a[i]);
    partial[static_cast<std::size_t>(b0)] = s;
  }
  double s = 0.0;
  for (double p : partial) s += p;
  return s;
}

}  // namespace parallel

int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

void set_threads(int n) {
#ifdef _OPENMP
  if (n > 0) omp_set_num_threads(n);
#else
  (void)n;
#endif
}

void run_jobs(std::size_t count, const std::function<void(std::size_t)>& job) {
  std::exception_ptr error;
  std::mutex error_mutex;
  const auto n = static_cast<std::ptrdiff_t>(count);
#pragma omp parallel for schedule(dynamic, 1) if (n > 1)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    try {
      job(static_cast<std::size_t>(i));
    } catch (...) {
      std::lock_guard lock(error_mutex);
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);
}

}  // namespace speckle::kernels
