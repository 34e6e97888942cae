#include "speckle/optics.hpp"

#include <charconv>
#include <cmath>
#include <sstream>

#include "speckle/kernels.hpp"
#include "speckle/linsolve.hpp"

namespace speckle {

namespace {

namespace k = kernels::parallel;

std::vector<std::uint8_t> disk_pattern(Shape shape, double inner_r, double outer_r) {
  std::vector<std::uint8_t> out(shape.size(), 0);
  const double h0 = static_cast<double>(shape.rows / 2);
  const double w0 = static_cast<double>(shape.cols / 2);
  for (std::size_t h = 0; h < shape.rows; ++h) {
    for (std::size_t w = 0; w < shape.cols; ++w) {
      const double dh = static_cast<double>(h) - h0;
      const double dw = static_cast<double>(w) - w0;
      const double d = std::sqrt(dh * dh + dw * dw);
      out[h * shape.cols + w] = (d <= outer_r && d >= inner_r) ? 1 : 0;
    }
  }
  return out;
}

std::size_t count_open(const std::vector<std::uint8_t>& p) {
  std::size_t n = 0;
  for (auto v : p) n += v;
  return n;
}

double parse_number(std::string_view s, std::string_view spec) {
  double v = 0.0;
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || ptr != end || s.empty())
    throw InvalidArgument("bad aperture spec '" + std::string(spec) + "'");
  return v;
}

void check_fraction(double f, std::string_view what) {
  if (!(f > 0.0 && f <= 1.0))
    throw InvalidArgument(std::string(what) + " radius fraction must lie in (0, 1]");
}

}  // namespace

ApertureMask::ApertureMask(ApertureKind kind, Shape shape, std::vector<std::uint8_t> centered,
                           double outer, double inner)
    : kind_(kind), shape_(shape), centered_(std::move(centered)), outer_(outer), inner_(inner) {
  if (shape.rows == 0 || shape.cols == 0) throw InvalidArgument("aperture shape must be positive");
  if (centered_.size() != shape.size())
    throw InvalidArgument("aperture pattern size does not match shape");
  for (auto v : centered_)
    if (v > 1) throw InvalidArgument("aperture entries must be 0 or 1");
  open_ = count_open(centered_);
  if (open_ == 0) throw InvalidArgument("aperture is fully opaque");

  // ifftshift: centered index h maps to (h - rows/2) mod rows.
  fft_order_.assign(shape.size(), 0.0);
  const std::size_t r0 = shape.rows / 2;
  const std::size_t c0 = shape.cols / 2;
  for (std::size_t h = 0; h < shape.rows; ++h) {
    const std::size_t fh = (h + shape.rows - r0) % shape.rows;
    for (std::size_t w = 0; w < shape.cols; ++w) {
      const std::size_t fw = (w + shape.cols - c0) % shape.cols;
      fft_order_[fh * shape.cols + fw] = centered_[h * shape.cols + w];
    }
  }
}

ApertureMask ApertureMask::circular(Shape shape, double fraction) {
  check_fraction(fraction, "circular");
  const double r = fraction * static_cast<double>(shape.rows) / 2.0;
  return {ApertureKind::circular, shape, disk_pattern(shape, 0.0, r), fraction, 0.0};
}

ApertureMask ApertureMask::annular(Shape shape, double outer, std::optional<double> inner) {
  check_fraction(outer, "annular outer");
  const double half_h = static_cast<double>(shape.rows) / 2.0;
  const double outer_r = outer * half_h;
  double inner_f = 0.0;
  if (inner) {
    inner_f = *inner;
    if (!(inner_f > 0.0)) throw InvalidArgument("annular inner radius fraction must be > 0");
    if (inner_f >= outer) throw InvalidArgument("annular inner radius must be below the outer");
  } else {
    // Transparency is non-increasing in the inner radius; bisect for the target
    // and keep whichever side of the jump lands closer.
    auto ratio = [&](double f) {
      return static_cast<double>(count_open(disk_pattern(shape, f * half_h, outer_r))) /
             static_cast<double>(shape.size());
    };
    if (ratio(0.0) < kAnnularDefaultTransparency)
      throw InvalidArgument("annular outer radius too small to reach the default transparency");
    double lo = 0.0, hi = outer;
    for (int it = 0; it < 60; ++it) {
      const double mid = 0.5 * (lo + hi);
      (ratio(mid) >= kAnnularDefaultTransparency ? lo : hi) = mid;
    }
    inner_f = std::abs(ratio(lo) - kAnnularDefaultTransparency) <=
                      std::abs(ratio(hi) - kAnnularDefaultTransparency)
                  ? lo
                  : hi;
    if (!(inner_f > 0.0)) inner_f = hi;
  }
  return {ApertureKind::annular, shape, disk_pattern(shape, inner_f * half_h, outer_r), outer,
          inner_f};
}

ApertureMask ApertureMask::full(Shape shape) {
  return {ApertureKind::full, shape, std::vector<std::uint8_t>(shape.size(), 1), 1.0, 0.0};
}

ApertureMask ApertureMask::custom(Shape shape, std::vector<std::uint8_t> centered) {
  return {ApertureKind::custom, shape, std::move(centered), 0.0, 0.0};
}

std::string ApertureMask::describe() const {
  std::ostringstream os;
  os.precision(17);
  switch (kind_) {
    case ApertureKind::circular: os << "circular:" << outer_; break;
    case ApertureKind::annular: os << "annular:" << outer_ << ":" << inner_; break;
    case ApertureKind::full: os << "full"; break;
    case ApertureKind::custom: os << "custom"; break;
  }
  return os.str();
}

ApertureMask parse_aperture(std::string_view spec, Shape shape) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  while (true) {
    const auto pos = spec.find(':', start);
    parts.push_back(spec.substr(start, pos == std::string_view::npos ? pos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  const auto kind = parts.front();
  if (kind == "full" && parts.size() == 1) return ApertureMask::full(shape);
  if (kind == "circular" && parts.size() == 2)
    return ApertureMask::circular(shape, parse_number(parts[1], spec));
  if (kind == "annular" && parts.size() <= 3) {
    const double outer = parts.size() >= 2 ? parse_number(parts[1], spec) : 1.0;
    std::optional<double> inner;
    if (parts.size() == 3) inner = parse_number(parts[2], spec);
    return ApertureMask::annular(shape, outer, inner);
  }
  throw InvalidArgument("bad aperture spec '" + std::string(spec) +
                        "' (expected circular:<f>, annular:<outer>:<inner>, or full)");
}

// ---------------------------------------------------------------------------

OperatorBundle::OperatorBundle(ReflectivityImage x, std::shared_ptr<const ApertureMask> aperture,
                               double sigma_z, double alpha, OpStats* stats,
                               FftPlanning planning)
    : x_(std::move(x)), aperture_(std::move(aperture)), sigma_z_(sigma_z), alpha_(alpha),
      stats_(stats) {
  if (!aperture_) throw InvalidArgument("OperatorBundle: missing aperture");
  require_same_shape(x_.shape(), aperture_->shape(), "OperatorBundle");
  if (!(sigma_z_ > 0.0) || !std::isfinite(sigma_z_))
    throw InvalidArgument("OperatorBundle: sigma_z must be > 0");
  if (!(alpha_ >= 0.0 && alpha_ <= 1.0)) throw InvalidArgument("OperatorBundle: alpha in [0, 1]");
  fft_ = Fft2::get(x_.shape(), planning);
  auto mask = std::make_shared<std::vector<double>>(aperture_->fft_order().begin(),
                                                    aperture_->fft_order().end());
  const double inv_n = 1.0 / static_cast<double>(x_.size());
  for (auto& v : *mask) v *= inv_n;
  scaled_mask_ = std::move(mask);
}

OperatorBundle OperatorBundle::with_x(ReflectivityImage x) const {
  OperatorBundle out = *this;
  require_same_shape(x.shape(), shape(), "OperatorBundle::with_x");
  out.x_ = std::move(x);
  return out;
}

OperatorBundle OperatorBundle::with_alpha(double alpha) const {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw InvalidArgument("OperatorBundle: alpha in [0, 1]");
  OperatorBundle out = *this;
  out.alpha_ = alpha;
  return out;
}

OperatorBundle OperatorBundle::with_stats(OpStats* stats) const {
  OperatorBundle out = *this;
  out.stats_ = stats;
  return out;
}

void OperatorBundle::apply_A(const ComplexField& in, ComplexField& out) const {
  require_same_shape(in.shape(), shape(), "apply_A");
  count(&OpStats::a_apps);
  if (&out != &in) out = in;
  fft_->forward(out);
  k::multiply(out.span(), *scaled_mask_);
  fft_->inverse(out);
}

void OperatorBundle::apply_B(const ComplexField& in, ComplexField& out) const {
  count(&OpStats::b_apps);
  apply_A(in, out);
  k::multiply(out.span(), x_.span());
  apply_A(out, out);
}

void OperatorBundle::apply_S(const ComplexField& in, ComplexField& out) const {
  apply_shifted(in, out, 1.0);
}

void OperatorBundle::apply_shifted(const ComplexField& in, ComplexField& out, double c) const {
  require_same_shape(in.shape(), shape(), "apply_S");
  count(&OpStats::s_apps);
  if (&out == &in) {
    ComplexField copy = in;
    apply_shifted(copy, out, c);
    return;
  }
  out = in;
  fft_->forward(out);
  k::multiply(out.span(), *scaled_mask_);
  fft_->inverse(out);
  k::multiply(out.span(), x_.span());
  fft_->forward(out);
  k::multiply(out.span(), *scaled_mask_);
  fft_->inverse(out);
  if (c != 1.0) k::scale(out.span(), c);
  k::axpy(sigma2(), in.span(), out.span());
}

void OperatorBundle::apply_M(const ComplexField& in, ComplexField& out,
                             const SolverConfig& solver) const {
  require_same_shape(in.shape(), shape(), "apply_M");
  if (alpha_ == 0.0) {
    apply_S(in, out);
    return;
  }
  ComplexField bf(shape());
  apply_B(in, bf);
  auto s_op = [this](const ComplexField& f, ComplexField& o) { apply_S(f, o); };
  auto inner = cg_solve(s_op, bf, solver.nested_cg_tol, solver.max_iters_for(size()));
  if (stats_ != nullptr) {
    stats_->cg_iterations.fetch_add(inner.report.iterations, std::memory_order_relaxed);
    stats_->cg_solves.fetch_add(1, std::memory_order_relaxed);
  }
  if (!inner.report.converged)
    throw SolverFailure("apply_M: nested S-solve did not converge",
                        inner.report.final_residual_norm, inner.report.iterations);
  ComplexField bq(shape());
  apply_B(inner.solution, bq);
  apply_S(in, out);
  k::axpy(-alpha_ * alpha_, bq.span(), out.span());
}

ComplexField OperatorBundle::apply_A(const ComplexField& in) const {
  ComplexField out(in.shape());
  apply_A(in, out);
  return out;
}

ComplexField OperatorBundle::apply_B(const ComplexField& in) const {
  ComplexField out(in.shape());
  apply_B(in, out);
  return out;
}

ComplexField OperatorBundle::apply_S(const ComplexField& in) const {
  ComplexField out(in.shape());
  apply_S(in, out);
  return out;
}

ComplexField OperatorBundle::apply_M(const ComplexField& in, const SolverConfig& solver) const {
  ComplexField out(in.shape());
  apply_M(in, out, solver);
  return out;
}

}  // namespace speckle
