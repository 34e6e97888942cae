#include "speckle/metrics.hpp"

#include <cmath>
#include <vector>

namespace speckle {

double psnr(const RealGrid& truth, const RealGrid& recon, double peak) {
  require_same_shape(truth.shape(), recon.shape(), "psnr");
  if (!(peak > 0.0)) throw InvalidArgument("psnr: peak must be > 0");
  double sse = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const double d = truth[i] - recon[i];
    sse += d * d;
  }
  if (sse == 0.0) return std::numeric_limits<double>::infinity();
  const double mse = sse / static_cast<double>(truth.size());
  return 10.0 * std::log10(peak * peak / mse);
}

namespace {

std::vector<double> gaussian_window(int size, double sigma) {
  std::vector<double> w(static_cast<std::size_t>(size));
  const double c = 0.5 * (size - 1);
  double total = 0.0;
  for (int i = 0; i < size; ++i) {
    const double d = i - c;
    w[static_cast<std::size_t>(i)] = std::exp(-d * d / (2.0 * sigma * sigma));
    total += w[static_cast<std::size_t>(i)];
  }
  for (auto& v : w) v /= total;
  return w;
}

// Separable "valid" filtering: output is (rows - k + 1) x (cols - k + 1).
std::vector<double> filter_valid(const std::vector<double>& img, std::size_t rows, std::size_t cols,
                                 const std::vector<double>& w) {
  const std::size_t k = w.size();
  const std::size_t oc = cols - k + 1, orows = rows - k + 1;
  std::vector<double> tmp(rows * oc, 0.0);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < oc; ++c) {
      double s = 0.0;
      for (std::size_t j = 0; j < k; ++j) s += w[j] * img[r * cols + c + j];
      tmp[r * oc + c] = s;
    }
  std::vector<double> out(orows * oc, 0.0);
  for (std::size_t r = 0; r < orows; ++r)
    for (std::size_t c = 0; c < oc; ++c) {
      double s = 0.0;
      for (std::size_t j = 0; j < k; ++j) s += w[j] * tmp[(r + j) * oc + c];
      out[r * oc + c] = s;
    }
  return out;
}

}  // namespace

double ssim(const RealGrid& a, const RealGrid& b, const SsimConfig& cfg) {
  require_same_shape(a.shape(), b.shape(), "ssim");
  if (cfg.window < 1 || !(cfg.sigma > 0.0)) throw InvalidArgument("ssim: bad window");
  const auto k = static_cast<std::size_t>(cfg.window);
  if (a.rows() < k || a.cols() < k)
    throw InvalidArgument("ssim: image " + to_string(a.shape()) + " is smaller than the " +
                          std::to_string(cfg.window) + "x" + std::to_string(cfg.window) +
                          " window");
  const auto w = gaussian_window(cfg.window, cfg.sigma);
  const std::size_t rows = a.rows(), cols = a.cols(), n = a.size();
  std::vector<double> x(a.begin(), a.end()), y(b.begin(), b.end()), xx(n), yy(n), xy(n);
  for (std::size_t i = 0; i < n; ++i) {
    xx[i] = x[i] * x[i];
    yy[i] = y[i] * y[i];
    xy[i] = x[i] * y[i];
  }
  const auto mx = filter_valid(x, rows, cols, w), my = filter_valid(y, rows, cols, w);
  const auto sxx = filter_valid(xx, rows, cols, w), syy = filter_valid(yy, rows, cols, w);
  const auto sxy = filter_valid(xy, rows, cols, w);
  const double c1 = (cfg.k1 * cfg.range) * (cfg.k1 * cfg.range);
  const double c2 = (cfg.k2 * cfg.range) * (cfg.k2 * cfg.range);
  double total = 0.0;
  for (std::size_t i = 0; i < mx.size(); ++i) {
    const double vx = sxx[i] - mx[i] * mx[i];
    const double vy = syy[i] - my[i] * my[i];
    const double cov = sxy[i] - mx[i] * my[i];
    total += ((2.0 * mx[i] * my[i] + c1) * (2.0 * cov + c2)) /
             ((mx[i] * mx[i] + my[i] * my[i] + c1) * (vx + vy + c2));
  }
  return total / static_cast<double>(mx.size());
}

RealGrid scale_grid(const RealGrid& g, double s) {
  RealGrid out = g;
  for (auto& v : out) v *= s;
  return out;
}

QualityScore score_8bit(const RealGrid& truth01, const RealGrid& recon01) {
  const RealGrid t = scale_grid(truth01, 255.0), r = scale_grid(recon01, 255.0);
  return {psnr(t, r, 255.0), ssim(t, r)};
}

}  // namespace speckle
