#include "doctest.h"
#include "helpers.hpp"
#include "speckle/sim.hpp"

using namespace speckle;

namespace {

/// Pooled correlation Re<a, b> / sqrt(|a|^2 |b|^2) over all pixels.
double correlation(const ComplexField& a, const ComplexField& b) {
  const cplx c = test::inner(a, b);
  return c.real() / std::sqrt(kernels::serial::norm_sq(a.span()) * kernels::serial::norm_sq(b.span()));
}

}  // namespace

TEST_CASE("alpha = 1 repeats the first speckle field") {
  const Shape s{16, 16};
  RngStream rng(1, "a1");
  const auto x = test::random_x(s, rng);
  const auto g = simulate_speckle(x, {4, 1.0, 0.1, 0}, rng);
  REQUIRE(g.size() == 4);
  for (int l = 1; l < 4; ++l) CHECK(g[l] == g[0]);
}

TEST_CASE("alpha = 0 looks are uncorrelated") {
  const Shape s{100, 100};
  const RngStream rng(2, "a0");
  const auto g = simulate_speckle(ReflectivityImage(s, 0.5), {2, 0.0, 0.1, 0}, rng);
  CHECK(std::abs(correlation(g[0], g[1])) < 0.02);
}

TEST_CASE("lag-2 correlation is alpha squared") {
  const Shape s{100, 100};
  const RngStream rng(3, "a5");
  const auto g = simulate_speckle(ReflectivityImage(s, 0.5), {3, 0.5, 0.1, 0}, rng);
  CHECK(correlation(g[0], g[1]) == doctest::Approx(0.5).epsilon(0.04));
  CHECK(std::abs(correlation(g[0], g[2]) - 0.25) < 0.02);
}

TEST_CASE("speckle is stationary across looks") {
  const Shape s{100, 100};
  const RngStream rng(4, "stat");
  const auto g = simulate_speckle(ReflectivityImage(s, 0.4), {5, 0.8, 0.1, 0}, rng);
  for (const auto& gl : g)
    CHECK(kernels::serial::norm_sq(gl.span()) / double(s.size()) == doctest::Approx(0.4).epsilon(0.05));
}

TEST_CASE("noiseless full aperture alpha = 1 gives identical looks") {
  const Shape s{16, 16};
  const auto ap = test::aperture("full", s);
  RngStream rng(5, "same");
  const auto m = simulate_measurements(test::random_x(s, rng), ap, {3, 1.0, 1e-12, 9});
  for (int l = 1; l < 3; ++l) {
    double worst = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i)
      worst = std::max(worst, std::abs(m.looks[l][i] - m.looks[0][i]));
    CHECK(worst < 1e-6);
  }
}

TEST_CASE("measurement moments match the covariance trace") {
  const Shape s{32, 32};
  RngStream xr(6, "x");
  const auto x = test::random_x(s, xr);
  const auto ap = test::aperture("circular:0.8", s);
  const double sigma = sigma_from_8bit(15), alpha = 0.6;
  // diag(A) = transparency, so tr(A X A^H) = transparency * sum(x).
  double sum_x = 0.0;
  for (double v : x.span()) sum_x += v;
  const double n = double(s.size());
  const double tr = ap->transparency() * sum_x;

  double power = 0.0, cross = 0.0;
  const int runs = 200;
  for (int k = 0; k < runs; ++k) {
    const auto m = simulate_measurements(x, ap, {2, alpha, sigma, std::uint64_t(k)});
    power += kernels::serial::norm_sq(m.looks[0].span()) / n;
    cross += test::inner(m.looks[0], m.looks[1]).real() / n;
  }
  CHECK(power / runs == doctest::Approx((tr + n * sigma * sigma) / n).epsilon(0.03));
  CHECK(cross / runs == doctest::Approx(alpha * tr / n).epsilon(0.05));
}

TEST_CASE("simulation is reproducible from the seed") {
  const Shape s{16, 16};
  const auto ap = test::aperture("annular", s);
  const ReflectivityImage x(s, 0.3);
  const AcquisitionParams p{3, 0.5, 0.05, 42};
  const auto a = simulate_measurements(x, ap, p);
  const auto b = simulate_measurements(x, ap, p);
  for (int l = 0; l < 3; ++l) CHECK(a.looks[l] == b.looks[l]);
  auto q = p;
  q.seed = 43;
  CHECK_FALSE(simulate_measurements(x, ap, q).looks[0] == a.looks[0]);
  CHECK(a.size() == 3);
  CHECK_NOTHROW(a.validate());
}

TEST_CASE("simulation rejects bad inputs") {
  const Shape s{8, 8};
  const ReflectivityImage x(s, 0.3);
  CHECK_THROWS_AS(simulate_measurements(x, test::aperture("full", s), {2, 1.5, 0.1, 0}),
                  InvalidArgument);
  CHECK_THROWS_AS(simulate_measurements(x, test::aperture("full", Shape{4, 4}), {2, 0.5, 0.1, 0}),
                  InvalidArgument);
  MeasurementSet m = simulate_measurements(x, test::aperture("full", s), {2, 0.5, 0.1, 0});
  m.looks.push_back(ComplexField(Shape{4, 4}));
  CHECK_THROWS_AS(m.validate(), InvalidArgument);
}
