#include "speckle/core.hpp"

#include <algorithm>
#include <cmath>

namespace speckle {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t derive(std::uint64_t parent, std::string_view label, std::uint64_t index) {
  return splitmix64(splitmix64(parent ^ fnv1a(label)) + splitmix64(index + 0x632be59bd9b4e019ULL));
}

}  // namespace

std::string to_string(Shape s) {
  return std::to_string(s.rows) + "x" + std::to_string(s.cols);
}

bool all_finite(const ComplexField& f) {
  return std::all_of(f.begin(), f.end(),
                     [](const cplx& v) { return std::isfinite(v.real()) && std::isfinite(v.imag()); });
}

void require_same_shape(Shape a, Shape b, std::string_view what) {
  if (!(a == b))
    throw InvalidArgument(std::string(what) + ": dimension mismatch " + to_string(a) + " vs " +
                          to_string(b));
}

ReflectivityImage::ReflectivityImage(RealGrid values) : values_(std::move(values)) {
  for (double v : values_) {
    if (!std::isfinite(v) || v < 0.0)
      throw InvalidArgument("reflectivity entries must be finite and nonnegative");
  }
}

ReflectivityImage::ReflectivityImage(Shape shape, double fill)
    : ReflectivityImage(RealGrid(shape, fill)) {}

void AcquisitionParams::validate() const {
  if (looks < 1) throw InvalidArgument("looks must be >= 1");
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw InvalidArgument("alpha must lie in [0, 1]");
  if (!(sigma_z > 0.0) || !std::isfinite(sigma_z)) throw InvalidArgument("sigma_z must be > 0");
}

ProbeLaw parse_probe_law(std::string_view s) {
  if (s == "gaussian") return ProbeLaw::gaussian;
  if (s == "rademacher") return ProbeLaw::rademacher;
  throw InvalidArgument("unknown probe law '" + std::string(s) + "'");
}

std::string_view to_string(ProbeLaw law) {
  return law == ProbeLaw::gaussian ? "gaussian" : "rademacher";
}

MInverse parse_m_inverse(std::string_view s) {
  if (s == "nested") return MInverse::nested;
  if (s == "split") return MInverse::split;
  throw InvalidArgument("unknown M-inverse method '" + std::string(s) + "'");
}

std::string_view to_string(MInverse m) { return m == MInverse::nested ? "nested" : "split"; }

void SolverConfig::validate() const {
  if (max_pgd_iters < 0) throw InvalidArgument("max_pgd_iters must be >= 0");
  if (step_init && !(*step_init > 0.0)) throw InvalidArgument("step_init must be > 0");
  if (!(armijo_c > 0.0 && armijo_c < 1.0)) throw InvalidArgument("armijo_c must lie in (0, 1)");
  if (!(armijo_shrink > 0.0 && armijo_shrink < 1.0))
    throw InvalidArgument("armijo_shrink must lie in (0, 1)");
  if (!(cg_tol > 0.0)) throw InvalidArgument("cg_tol must be > 0");
  if (!(nested_cg_tol > 0.0)) throw InvalidArgument("nested_cg_tol must be > 0");
  if (nested_cg_tol > cg_tol) throw InvalidArgument("nested_cg_tol must not exceed cg_tol");
  if (cg_max_iters < 0) throw InvalidArgument("cg_max_iters must be >= 0");
  if (mc_probes < 1) throw InvalidArgument("mc_probes must be >= 1");
}

RngStream::RngStream(std::uint64_t key) : key_(key), engine_(key) {}

RngStream::RngStream(std::uint64_t seed, std::string_view label, std::uint64_t index)
    : RngStream(derive(splitmix64(seed), label, index)) {}

RngStream RngStream::split(std::string_view label, std::uint64_t index) const {
  return RngStream(derive(key_, label, index));
}

ComplexField complex_gaussian(Shape shape, std::span<const double> variance_map, RngStream& rng) {
  if (variance_map.size() != shape.size())
    throw InvalidArgument("complex_gaussian: variance map size does not match shape");
  ComplexField out(shape);
  for (std::size_t i = 0; i < variance_map.size(); ++i) {
    const double v = variance_map[i];
    if (!(v >= 0.0)) throw InvalidArgument("complex_gaussian: negative variance entry");
    const double s = std::sqrt(0.5 * v);
    const double re = rng.normal();
    const double im = rng.normal();
    out[i] = {s * re, s * im};
  }
  return out;
}

std::vector<cplx> vectorize(const ComplexField& field) {
  return {field.begin(), field.end()};
}

ComplexField devectorize(std::span<const cplx> values, std::size_t rows, std::size_t cols) {
  if (values.size() != rows * cols)
    throw InvalidArgument("devectorize: length " + std::to_string(values.size()) +
                          " does not match " + std::to_string(rows) + "x" + std::to_string(cols));
  ComplexField out(Shape{rows, cols});
  std::copy(values.begin(), values.end(), out.begin());
  return out;
}

}  // namespace speckle
