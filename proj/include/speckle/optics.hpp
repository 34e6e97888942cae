#pragma once

// Apertures and the matrix-free operators of the holographic forward model:
//
//   A = F^-1 P F          (F unitary 2D DFT, P binary frequency mask)
//   B = A X A^H           (X = diag(x))
//   S = B + sigma^2 I
//   M = S - alpha^2 B S^-1 B
//
// A is an orthogonal projector, so A^H = A and apply_A_adjoint == apply_A.

#include <atomic>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "speckle/core.hpp"
#include "speckle/fft.hpp"

namespace speckle {

enum class ApertureKind { circular, annular, full, custom };

/// Target transparency of the default annular aperture.
inline constexpr double kAnnularDefaultTransparency = 0.70;

class ApertureMask {
 public:
  static ApertureMask circular(Shape shape, double fraction);
  /// Annulus inner <= d <= outer. Without an inner fraction, the inner radius is
  /// solved so that the transparency is kAnnularDefaultTransparency.
  static ApertureMask annular(Shape shape, double outer, std::optional<double> inner = {});
  static ApertureMask full(Shape shape);
  /// `centered` uses DC-at-(rows/2, cols/2) coordinates; entries must be 0 or 1.
  static ApertureMask custom(Shape shape, std::vector<std::uint8_t> centered);

  ApertureKind kind() const noexcept { return kind_; }
  Shape shape() const noexcept { return shape_; }
  double outer_fraction() const noexcept { return outer_; }
  double inner_fraction() const noexcept { return inner_; }

  /// Pattern in centered frequency coordinates.
  std::uint8_t centered(std::size_t r, std::size_t c) const { return centered_[r * shape_.cols + c]; }
  /// Same pattern in FFT index order (DC at 0), as 0.0 / 1.0.
  std::span<const double> fft_order() const noexcept { return fft_order_; }

  std::size_t open_count() const noexcept { return open_; }
  double transparency() const noexcept {
    return static_cast<double>(open_) / static_cast<double>(shape_.size());
  }

  /// Spec string accepted by parse_aperture().
  std::string describe() const;

 private:
  ApertureMask(ApertureKind kind, Shape shape, std::vector<std::uint8_t> centered, double outer,
               double inner);

  ApertureKind kind_;
  Shape shape_;
  std::vector<std::uint8_t> centered_;
  std::vector<double> fft_order_;
  std::size_t open_ = 0;
  double outer_ = 1.0;
  double inner_ = 0.0;
};

/// "circular:<fraction>", "annular:<outer>:<inner>", "annular[:<outer>]",
/// or "full". Radii are fractions of the image height (radius = fraction*H/2).
ApertureMask parse_aperture(std::string_view spec, Shape shape);

/// Thread-safe operator application counters (diagnostics only).
struct OpStats {
  std::atomic<std::int64_t> a_apps{0};
  std::atomic<std::int64_t> b_apps{0};
  std::atomic<std::int64_t> s_apps{0};
  std::atomic<std::int64_t> cg_iterations{0};
  std::atomic<std::int64_t> cg_solves{0};

  struct Snapshot {
    std::int64_t a_apps, b_apps, s_apps, cg_iterations, cg_solves;
  };
  Snapshot snapshot() const {
    return {a_apps.load(), b_apps.load(), s_apps.load(), cg_iterations.load(), cg_solves.load()};
  }
  void reset() {
    a_apps = 0;
    b_apps = 0;
    s_apps = 0;
    cg_iterations = 0;
    cg_solves = 0;
  }
};

class OperatorBundle {
 public:
  OperatorBundle(ReflectivityImage x, std::shared_ptr<const ApertureMask> aperture, double sigma_z,
                 double alpha, OpStats* stats = nullptr,
                 FftPlanning planning = default_fft_planning());

  Shape shape() const noexcept { return x_.shape(); }
  std::size_t size() const noexcept { return x_.size(); }
  const ReflectivityImage& x() const noexcept { return x_; }
  const ApertureMask& aperture() const noexcept { return *aperture_; }
  std::shared_ptr<const ApertureMask> aperture_ptr() const noexcept { return aperture_; }
  double sigma_z() const noexcept { return sigma_z_; }
  double sigma2() const noexcept { return sigma_z_ * sigma_z_; }
  double alpha() const noexcept { return alpha_; }
  OpStats* stats() const noexcept { return stats_; }

  OperatorBundle with_x(ReflectivityImage x) const;
  OperatorBundle with_alpha(double alpha) const;
  OperatorBundle with_stats(OpStats* stats) const;

  void apply_A(const ComplexField& in, ComplexField& out) const;
  void apply_A_adjoint(const ComplexField& in, ComplexField& out) const { apply_A(in, out); }
  void apply_B(const ComplexField& in, ComplexField& out) const;
  void apply_S(const ComplexField& in, ComplexField& out) const;
  /// c B f + sigma^2 f. Counted as an S application (same cost).
  void apply_shifted(const ComplexField& in, ComplexField& out, double c) const;
  /// S f - alpha^2 B S^-1 B f, with the inner solve done by CG at
  /// solver.nested_cg_tol. Throws SolverFailure when the inner CG does not
  /// converge within solver.cg_max_iters.
  void apply_M(const ComplexField& in, ComplexField& out, const SolverConfig& solver) const;

  ComplexField apply_A(const ComplexField& in) const;
  ComplexField apply_B(const ComplexField& in) const;
  ComplexField apply_S(const ComplexField& in) const;
  ComplexField apply_M(const ComplexField& in, const SolverConfig& solver) const;

 private:
  void count(std::atomic<std::int64_t> OpStats::*field) const {
    if (stats_ != nullptr) (stats_->*field).fetch_add(1, std::memory_order_relaxed);
  }

  ReflectivityImage x_;
  std::shared_ptr<const ApertureMask> aperture_;
  std::shared_ptr<const Fft2> fft_;
  std::shared_ptr<const std::vector<double>> scaled_mask_;  // P / n in FFT order
  double sigma_z_;
  double alpha_;
  OpStats* stats_;
};

}  // namespace speckle
