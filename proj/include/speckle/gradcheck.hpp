#pragma once

// Agreement checks between the matrix-free likelihood code and the dense
// oracle on one small random problem.

#include <string>
#include <vector>

#include "speckle/core.hpp"

namespace speckle {

struct GradCheckConfig {
  std::size_t size = 16;  // image is size x size
  int looks = 3;
  double alpha = 0.5;
  double sigma_z = sigma_from_8bit(15.0);
  std::uint64_t seed = 0;
  std::string aperture = "circular:0.8";
  int fd_coordinates = 20;
  double fd_step = 1e-4;
};

struct CheckLine {
  std::string name;
  double value = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

struct GradCheckReport {
  std::vector<CheckLine> checks;
  bool pass() const;
};

/// Tolerances:
///   dense gradient vs central differences        < 1e-4 relative
///   W/C assembly vs diagonal-plus-vector form     < 1e-10 relative
///   matrix-free (exact diagonals) vs dense        < 1e-6 relative
///   matrix-free objective vs dense                < 1e-8 relative
///   at alpha = 0: f = L f_indep (1e-10), grad = L grad_indep (1e-8)
/// Throws CapabilityError when size^2 exceeds the dense oracle cap.
GradCheckReport run_grad_check(const GradCheckConfig& cfg);

/// ||a - b|| / ||b||.
double relative_error(std::span<const double> a, std::span<const double> b);

}  // namespace speckle
