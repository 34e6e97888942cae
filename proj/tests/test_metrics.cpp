#include <numbers>

#include "doctest.h"
#include "helpers.hpp"
#include "speckle/metrics.hpp"

using namespace speckle;

namespace {

RealGrid random_image(Shape s, RngStream& rng) {
  RealGrid g(s);
  for (auto& v : g) v = 255.0 * rng.uniform();
  return g;
}

}  // namespace

TEST_CASE("psnr examples") {
  const Shape s{16, 16};
  RngStream rng(1, "psnr");
  const auto a = random_image(s, rng);
  CHECK(std::isinf(psnr(a, a)));
  CHECK(psnr(RealGrid(s, 0.0), RealGrid(s, 255.0)) == doctest::Approx(0.0).epsilon(1e-14));
  auto b = a;
  for (auto& v : b) v += 1.0;
  CHECK(psnr(a, b) == doctest::Approx(20.0 * std::log10(255.0)).epsilon(1e-12));
  CHECK(psnr(a, b) == doctest::Approx(48.13).epsilon(1e-4));
  CHECK_THROWS_AS(psnr(a, RealGrid({8, 8})), InvalidArgument);
}

TEST_CASE("psnr is invariant under a shared permutation") {
  const Shape s{1, 64};
  RngStream rng(2, "perm");
  const auto a = random_image(s, rng), b = random_image(s, rng);
  RealGrid pa(s), pb(s);
  for (std::size_t i = 0; i < 64; ++i) {
    pa[i] = a[(i * 37) % 64];
    pb[i] = b[(i * 37) % 64];
  }
  CHECK(psnr(pa, pb) == doctest::Approx(psnr(a, b)).epsilon(1e-13));
}

TEST_CASE("ssim examples") {
  const Shape s{32, 32};
  RngStream rng(3, "ssim");
  const auto a = random_image(s, rng);
  CHECK(ssim(a, a) == doctest::Approx(1.0).epsilon(1e-12));

  RealGrid checker(s), inverted(s);
  for (std::size_t r = 0; r < 32; ++r)
    for (std::size_t c = 0; c < 32; ++c) {
      checker(r, c) = ((r + c) % 2) ? 255.0 : 0.0;
      inverted(r, c) = 255.0 - checker(r, c);
    }
  CHECK(ssim(checker, inverted) < 0.2);

  for (int k = 0; k < 10; ++k) {
    const auto x = random_image(s, rng), y = random_image(s, rng);
    CHECK(std::abs(ssim(x, y)) < 0.1);
    CHECK(ssim(x, y) == doctest::Approx(ssim(y, x)).epsilon(1e-12));
  }
  CHECK_THROWS_AS(ssim(RealGrid({8, 8}), RealGrid({8, 8})), InvalidArgument);
  CHECK_THROWS_AS(ssim(a, RealGrid({32, 16})), InvalidArgument);
}

// Independent evaluation of one window with direct sums.
TEST_CASE("ssim matches a direct single-window evaluation") {
  const Shape s{11, 11};
  RngStream rng(4, "win");
  const auto a = random_image(s, rng), b = random_image(s, rng);
  double w[11][11], wsum = 0.0;
  for (int r = 0; r < 11; ++r)
    for (int c = 0; c < 11; ++c) {
      w[r][c] = std::exp(-((r - 5) * (r - 5) + (c - 5) * (c - 5)) / (2 * 1.5 * 1.5));
      wsum += w[r][c];
    }
  double ma = 0, mb = 0, saa = 0, sbb = 0, sab = 0;
  for (int r = 0; r < 11; ++r)
    for (int c = 0; c < 11; ++c) {
      const double k = w[r][c] / wsum;
      ma += k * a(r, c);
      mb += k * b(r, c);
      saa += k * a(r, c) * a(r, c);
      sbb += k * b(r, c) * b(r, c);
      sab += k * a(r, c) * b(r, c);
    }
  saa -= ma * ma;
  sbb -= mb * mb;
  sab -= ma * mb;
  const double c1 = std::pow(0.01 * 255, 2), c2 = std::pow(0.03 * 255, 2);
  const double want = ((2 * ma * mb + c1) * (2 * sab + c2)) / ((ma * ma + mb * mb + c1) * (saa + sbb + c2));
  CHECK(ssim(a, b) == doctest::Approx(want).epsilon(1e-12));
}

TEST_CASE("8-bit scoring of normalized images") {
  const Shape s{16, 16};
  RngStream rng(5, "norm");
  RealGrid t(s), r(s);
  for (std::size_t i = 0; i < t.size(); ++i) {
    t[i] = rng.uniform();
    r[i] = t[i] + 1.0 / 255.0;
  }
  const auto q = score_8bit(t, r);
  CHECK(q.psnr_db == doctest::Approx(20.0 * std::log10(255.0)).epsilon(1e-10));
  CHECK(q.ssim == doctest::Approx(ssim(scale_grid(t, 255.0), scale_grid(r, 255.0))).epsilon(1e-15));
}
