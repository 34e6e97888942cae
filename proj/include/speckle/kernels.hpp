#pragma once

// Elementwise and reduction kernels used by every operator application.
//
// `parallel` is what the library calls; `serial` is the plain-loop reference
// kept for testing and benchmarking. Parallel reductions sum fixed-size
// blocks in index order, so their result does not depend on the thread count.

#include <complex>
#include <cstddef>
#include <functional>
#include <span>

namespace speckle::kernels {

using cplx = std::complex<double>;

namespace serial {

void multiply(std::span<cplx> a, std::span<const double> w);           // a *= w
void multiply(std::span<cplx> a, std::span<const double> w, double s);  // a *= s * w
void scale(std::span<cplx> a, double s);
void axpy(cplx alpha, std::span<const cplx> x, std::span<cplx> y);  // y += alpha x
void xpby(std::span<const cplx> x, cplx beta, std::span<cplx> y);   // y = x + beta y
void sub(std::span<const cplx> a, std::span<const cplx> b, std::span<cplx> out);
cplx dot(std::span<const cplx> a, std::span<const cplx> b);  // sum conj(a) b
double norm_sq(std::span<const cplx> a);

}  // namespace serial

namespace parallel {

void multiply(std::span<cplx> a, std::span<const double> w);
void multiply(std::span<cplx> a, std::span<const double> w, double s);
void scale(std::span<cplx> a, double s);
void axpy(cplx alpha, std::span<const cplx> x, std::span<cplx> y);
void xpby(std::span<const cplx> x, cplx beta, std::span<cplx> y);
void sub(std::span<const cplx> a, std::span<const cplx> b, std::span<cplx> out);
cplx dot(std::span<const cplx> a, std::span<const cplx> b);
double norm_sq(std::span<const cplx> a);

}  // namespace parallel

/// Worker count OpenMP will use for the next parallel region (1 without OpenMP).
int max_threads();
void set_threads(int n);

/// Runs job(0) .. job(count - 1) on the worker pool. The first exception
/// thrown by any job is rethrown after all jobs finish.
void run_jobs(std::size_t count, const std::function<void(std::size_t)>& job);

}  // namespace speckle::kernels
