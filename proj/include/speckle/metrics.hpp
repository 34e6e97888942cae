#pragma once

// Image quality against ground truth. Both metrics take images on the scale
// given by `peak` / `range` (255 for 8-bit intensities).

#include <limits>

#include "speckle/core.hpp"

namespace speckle {

struct QualityScore {
  double psnr_db = 0.0;
  double ssim = 0.0;
};

/// 10 log10(peak^2 / MSE); +infinity for identical images.
double psnr(const RealGrid& truth, const RealGrid& recon, double peak = 255.0);

struct SsimConfig {
  int window = 11;
  double sigma = 1.5;
  double k1 = 0.01;
  double k2 = 0.03;
  double range = 255.0;
};

/// Mean local SSIM over all fully contained Gaussian windows.
double ssim(const RealGrid& a, const RealGrid& b, const SsimConfig& cfg = {});

/// Scores images held on the normalized [0, 1] scale as 8-bit intensities.
QualityScore score_8bit(const RealGrid& truth01, const RealGrid& recon01);

RealGrid scale_grid(const RealGrid& g, double s);

}  // namespace speckle
