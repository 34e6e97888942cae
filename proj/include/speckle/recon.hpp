#pragma once

// Projected gradient descent on the correlation-aware loss:
//   s_{t+1} = x_t - mu_t grad f(x_t),  x_{t+1} = Pi(s_{t+1})

#include <iosfwd>
#include <optional>
#include <string_view>
#include <vector>

#include "speckle/core.hpp"
#include "speckle/likelihood.hpp"
#include "speckle/optics.hpp"
#include "speckle/sim.hpp"

namespace speckle {

/// Reflectivity floor; keeps X strictly positive so M-solves stay well conditioned.
inline constexpr double kReconLo = 1e-3 / 255.0;
inline constexpr double kReconHi = 1.0;
inline constexpr int kTvIterations = 50;
inline constexpr double kTvStep = 0.248;
inline constexpr double kRelativeChangeTol = 1e-5;
inline constexpr int kMaxBacktracks = 40;

RealGrid project_clamp(const RealGrid& f, double lo, double hi);

/// Isotropic TV proximal map argmin_u 0.5 ||u - f||^2 + lambda TV(u) by dual
/// projection iterations. Not idempotent. lambda = 0 returns f.
RealGrid tv_prox(const RealGrid& f, double lambda, int iters = kTvIterations);

/// TV prox followed by clamping, i.e. project_clamp(tv_prox(f, lambda), lo, hi).
RealGrid project_tv(const RealGrid& f, double lambda, double lo, double hi,
                    int iters = kTvIterations);

struct Projector {
  enum class Kind { clamp, tv };
  Kind kind = Kind::clamp;
  double lo = kReconLo;
  double hi = kReconHi;
  double tv_lambda = 0.0;  // normalized intensity scale
  int tv_iters = kTvIterations;

  /// "clamp" or "tv:<lambda>".
  static Projector parse(std::string_view spec);
  void validate() const;
  ReflectivityImage apply(const RealGrid& f) const;
  std::string describe() const;
};

struct IterationRecord {
  int iteration = 0;
  double merit_start = 0.0;  // merit at x_t, before the step
  double merit = 0.0;        // line-search merit at the accepted trial point
  double grad_norm = 0.0;
  double step = 0.0;
  int backtracks = 0;
  std::optional<double> psnr;  // vs truth, 8-bit scale
  GradientDiagnostics diagnostics;
};

struct ReconReport {
  int iterations = 0;
  bool converged = false;  // stopped on the relative-change test
  double alpha_used = 0.0;
  std::optional<double> alpha_estimate;  // set when alpha was "auto"
  std::vector<IterationRecord> trace;
};

struct ReconResult {
  ReflectivityImage image;
  ReconReport report;
};

/// Nullopt alpha means "auto": estimated from the measurements.
ReconResult pgd_reconstruct(const MeasurementSet& meas,
                            std::shared_ptr<const ApertureMask> aperture, double sigma_z,
                            std::optional<double> alpha, const Projector& projector,
                            const SolverConfig& solver, const RngStream& rng);

/// (1/L) sum_l |A^H y_l|^2 clamped to [lo, hi].
ReflectivityImage initial_estimate(const OperatorBundle& ops, const MeasurementSet& meas,
                                   double lo, double hi);

/// iteration,merit,grad_norm,step,backtracks,s_apps,cg_iterations,seconds,psnr
void write_trace_csv(std::ostream& os, const ReconReport& report);

}  // namespace speckle
