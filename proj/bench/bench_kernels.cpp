// Serial reference vs OpenMP kernels, plus a full S application.
//
//   bench_kernels --benchmark_filter=dot
//   OMP_NUM_THREADS=4 bench_kernels

#include <benchmark/benchmark.h>

#include <memory>

#include "speckle/core.hpp"
#include "speckle/kernels.hpp"
#include "speckle/optics.hpp"

namespace {

using namespace speckle;
namespace k = speckle::kernels;

std::vector<cplx> random_vec(std::size_t n, std::uint64_t seed) {
  RngStream rng(seed, "bench");
  std::vector<cplx> v(n);
  for (auto& z : v) z = {rng.normal(), rng.normal()};
  return v;
}

// Close to 1 so repeated in-place products never reach subnormals.
std::vector<double> random_weights(std::size_t n) {
  RngStream rng(9, "weights");
  std::vector<double> w(n);
  for (auto& v : w) v = 1.0 + 1e-9 * (rng.uniform() - 0.5);
  return w;
}

template <bool Parallel>
void BM_multiply(benchmark::State& state) {
  const auto n = std::size_t(state.range(0));
  auto a = random_vec(n, 1);
  const auto w = random_weights(n);
  for (auto _ : state) {
    if constexpr (Parallel)
      k::parallel::multiply(a, w);
    else
      k::serial::multiply(a, w);
    benchmark::DoNotOptimize(a.data());
  }
  state.SetBytesProcessed(state.iterations() * std::int64_t(n) * 24);
}

template <bool Parallel>
void BM_axpy(benchmark::State& state) {
  const auto n = std::size_t(state.range(0));
  const auto x = random_vec(n, 1);
  auto y = random_vec(n, 2);
  for (auto _ : state) {
    if constexpr (Parallel)
      k::parallel::axpy({1e-9, 0.0}, x, y);
    else
      k::serial::axpy({1e-9, 0.0}, x, y);
    benchmark::DoNotOptimize(y.data());
  }
  state.SetBytesProcessed(state.iterations() * std::int64_t(n) * 32);
}

template <bool Parallel>
void BM_dot(benchmark::State& state) {
  const auto n = std::size_t(state.range(0));
  const auto a = random_vec(n, 1), b = random_vec(n, 2);
  for (auto _ : state) {
    cplx d = Parallel ? k::parallel::dot(a, b) : k::serial::dot(a, b);
    benchmark::DoNotOptimize(d);
  }
  state.SetBytesProcessed(state.iterations() * std::int64_t(n) * 32);
}

template <bool Parallel>
void BM_norm_sq(benchmark::State& state) {
  const auto n = std::size_t(state.range(0));
  const auto a = random_vec(n, 1);
  for (auto _ : state) {
    double d = Parallel ? k::parallel::norm_sq(a) : k::serial::norm_sq(a);
    benchmark::DoNotOptimize(d);
  }
  state.SetBytesProcessed(state.iterations() * std::int64_t(n) * 16);
}

void BM_apply_S(benchmark::State& state) {
  const auto side = std::size_t(state.range(0));
  const Shape s{side, side};
  RngStream rng(3, "x");
  RealGrid g(s);
  for (auto& v : g) v = 0.05 + 0.9 * rng.uniform();
  auto ap = std::make_shared<const ApertureMask>(parse_aperture("circular:0.8", s));
  const OperatorBundle ops(ReflectivityImage(std::move(g)), ap, 0.06, 0.5);
  ComplexField in(s), out(s);
  const auto v = random_vec(s.size(), 4);
  std::copy(v.begin(), v.end(), in.begin());
  for (auto _ : state) {
    ops.apply_S(in, out);
    benchmark::DoNotOptimize(out.data());
  }
  state.counters["threads"] = k::max_threads();
}

#define SIZES ->RangeMultiplier(8)->Range(1 << 10, 1 << 20)

BENCHMARK(BM_multiply<false>) SIZES;
BENCHMARK(BM_multiply<true>) SIZES;
BENCHMARK(BM_axpy<false>) SIZES;
BENCHMARK(BM_axpy<true>) SIZES;
BENCHMARK(BM_dot<false>) SIZES;
BENCHMARK(BM_dot<true>) SIZES;
BENCHMARK(BM_norm_sq<false>) SIZES;
BENCHMARK(BM_norm_sq<true>) SIZES;
BENCHMARK(BM_apply_S)->Arg(64)->Arg(256)->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
