#include "speckle/scene.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace speckle {

namespace {

struct Blob {
  double cy, cx, ry, rx, level, theta;
};

constexpr std::array<Blob, 5> kBlobs{{
    {0.30, 0.35, 0.22, 0.16, 0.85, 0.3},
    {0.65, 0.30, 0.18, 0.25, 0.60, -0.5},
    {0.55, 0.70, 0.25, 0.20, 0.75, 0.9},
    {0.20, 0.75, 0.12, 0.15, 0.45, 0.2},
    {0.80, 0.80, 0.15, 0.12, 0.95, 0.0},
}};

}  // namespace

ReflectivityImage synthetic_scene(std::size_t rows, std::size_t cols) {
  RealGrid img(Shape{rows, cols});
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      const double y = static_cast<double>(r) / static_cast<double>(rows);
      const double x = static_cast<double>(c) / static_cast<double>(cols);
      double v = 0.25 + 0.1 * x;
      // Later blobs paint over earlier ones.
      for (const auto& b : kBlobs) {
        const double cs = std::cos(b.theta), sn = std::sin(b.theta);
        const double dy = y - b.cy, dx = x - b.cx;
        const double u = (cs * dx + sn * dy) / b.rx;
        const double w = (-sn * dx + cs * dy) / b.ry;
        const double d = u * u + w * w;
        if (d < 1.0) v = b.level * (1.0 - 0.35 * d) + 0.04 * std::sin(9.0 * u);
      }
      img(r, c) = std::clamp(v, 0.02, 0.98);
    }
  }
  return ReflectivityImage(std::move(img));
}

}  // namespace speckle
