#include <numbers>

#include "doctest.h"
#include "helpers.hpp"
#include "speckle/fft.hpp"
#include "speckle/oracle.hpp"

using namespace speckle;
using test::aperture;
using test::inner;
using test::random_field;
using test::random_x;
using test::rel_diff;

TEST_CASE("aperture transparency") {
  const Shape s{256, 256};
  const auto circ = ApertureMask::circular(s, 1.0);
  CHECK(circ.transparency() == doctest::Approx(std::numbers::pi / 4).epsilon(0.01));
  const auto full = ApertureMask::full(s);
  CHECK(full.open_count() == s.size());
  const auto ann = ApertureMask::annular(s, 1.0);
  CHECK(ann.transparency() >= 0.68);
  CHECK(ann.transparency() <= 0.72);
  CHECK(ann.inner_fraction() == doctest::Approx(0.33).epsilon(0.1));
}

TEST_CASE("aperture boundary ties are open and DC sits at index 0") {
  const Shape s{8, 8};
  const auto circ = ApertureMask::circular(s, 1.0);
  // radius 4 from the center (4, 4): (0, 4) is exactly on the boundary.
  CHECK(circ.centered(0, 4) == 1);
  CHECK(circ.centered(0, 0) == 0);
  CHECK(circ.fft_order()[0] == 1.0);
}

TEST_CASE("aperture spec parsing") {
  const Shape s{32, 32};
  CHECK(parse_aperture("full", s).kind() == ApertureKind::full);
  CHECK(parse_aperture("circular:0.8", s).outer_fraction() == 0.8);
  const auto a = parse_aperture("annular:1.0:0.5", s);
  CHECK(a.kind() == ApertureKind::annular);
  CHECK(a.inner_fraction() == 0.5);
  CHECK(parse_aperture(a.describe(), s).open_count() == a.open_count());
  for (const char* bad : {"", "circle:1", "circular", "circular:-1", "circular:x", "annular:0.5:0.8",
                          "full:1"}) {
    CAPTURE(bad);
    CHECK_THROWS_AS(parse_aperture(bad, s), InvalidArgument);
  }
}

TEST_CASE("unitary FFT preserves the norm") {
  RngStream rng(1, "fft");
  for (Shape s : {Shape{64, 64}, Shape{12, 20}}) {
    auto f = random_field(s, rng);
    const double before = test::norm(f);
    Fft2::get(s)->forward(f);
    CHECK(test::norm(f) / std::sqrt(double(s.size())) == doctest::Approx(before).epsilon(1e-12));
    Fft2::get(s)->inverse(f);
    CHECK(test::norm(f) / double(s.size()) == doctest::Approx(before).epsilon(1e-12));
  }
}

TEST_CASE("A is an orthogonal projector") {
  const Shape s{32, 32};
  RngStream rng(2, "proj");
  for (const char* spec : {"circular:0.8", "circular:1.0", "annular", "full"}) {
    CAPTURE(spec);
    const OperatorBundle ops(ReflectivityImage(s, 0.5), aperture(spec, s), 0.1, 0.5);
    for (int k = 0; k < 5; ++k) {
      const auto f = random_field(s, rng);
      const auto g = random_field(s, rng);
      const auto af = ops.apply_A(f);
      CHECK(rel_diff(ops.apply_A(af), af) < 1e-12);
      const cplx l = inner(af, g), r = inner(f, ops.apply_A(g));
      CHECK(std::abs(l - r) < 1e-12 * std::abs(l));
    }
  }
  const OperatorBundle full(ReflectivityImage(s, 0.5), aperture("full", s), 0.1, 0.5);
  const auto f = random_field(s, rng);
  CHECK(rel_diff(full.apply_A(f), f) < 1e-12);
}

TEST_CASE("B, S and M basics") {
  const Shape s{16, 16};
  RngStream rng(3, "bsm");
  const double sigma = 0.2;
  const auto ap = aperture("circular:0.8", s);

  const OperatorBundle zero(ReflectivityImage(s, 0.0), ap, sigma, 0.5);
  const auto f = random_field(s, rng);
  CHECK(test::norm(zero.apply_B(f)) == 0.0);
  ComplexField sig2f = f;
  kernels::serial::scale(sig2f.span(), sigma * sigma);
  CHECK(rel_diff(zero.apply_S(f), sig2f) < 1e-14);

  const OperatorBundle ops(random_x(s, rng), ap, sigma, 0.5);
  SolverConfig solver;
  for (int k = 0; k < 10; ++k) {
    const auto v = random_field(s, rng);
    const cplx qb = inner(v, ops.apply_B(v));
    CHECK(qb.real() >= 0.0);
    CHECK(std::abs(qb.imag()) < 1e-12 * (1.0 + std::abs(qb)));
    const cplx qs = inner(v, ops.apply_S(v));
    CHECK(qs.real() >= sigma * sigma * kernels::serial::norm_sq(v.span()) * (1 - 1e-12));
  }

  // alpha = 0: M == S
  const auto ops0 = ops.with_alpha(0.0);
  CHECK(rel_diff(ops0.apply_M(f, solver), ops0.apply_S(f)) < 1e-14);

  // alpha = 1 stays positive definite.
  const auto ops1 = ops.with_alpha(1.0);
  for (int k = 0; k < 5; ++k) {
    const auto v = random_field(s, rng);
    CHECK(inner(v, ops1.apply_M(v, solver)).real() > 0.0);
  }
}

TEST_CASE("self-adjointness of B, S and M") {
  const Shape s{16, 16};
  RngStream rng(4, "adj");
  const OperatorBundle ops(random_x(s, rng), aperture("annular", s), 0.1, 0.7);
  SolverConfig solver;
  for (int k = 0; k < 20; ++k) {
    const auto f = random_field(s, rng);
    const auto g = random_field(s, rng);
    auto check = [&](const ComplexField& tf, const ComplexField& tg, double tol) {
      const cplx l = inner(tf, g), r = inner(f, tg);
      CHECK(std::abs(l - r) <= tol * std::abs(l));
    };
    check(ops.apply_B(f), ops.apply_B(g), 1e-12);
    check(ops.apply_S(f), ops.apply_S(g), 1e-12);
    check(ops.apply_M(f, solver), ops.apply_M(g, solver), 1e-6);
  }
}

TEST_CASE("operators agree with the dense oracle at 8x8") {
  const Shape s{8, 8};
  RngStream rng(5, "dense");
  const auto ap = aperture("circular:0.8", s);
  const OperatorBundle ops(random_x(s, rng), ap, 0.15, 0.6);
  const auto sys = oracle::build_dense(ops);
  SolverConfig solver;
  solver.nested_cg_tol = 1e-12;
  for (int k = 0; k < 10; ++k) {
    const auto f = random_field(s, rng);
    const auto v = oracle::to_vec(f);
    auto max_err = [&](const ComplexField& got, const oracle::Vec& want) {
      return (oracle::to_vec(got) - want).cwiseAbs().maxCoeff();
    };
    CHECK(max_err(ops.apply_A(f), sys.A * v) < 1e-12);
    CHECK(max_err(ops.apply_B(f), sys.B * v) < 1e-12);
    CHECK(max_err(ops.apply_S(f), sys.S * v) < 1e-12);
    CHECK(max_err(ops.apply_M(f, solver), sys.M * v) < 1e-10);
  }
}

TEST_CASE("full aperture spectral identity for M") {
  const Shape s{8, 8};
  RngStream rng(6, "spec");
  const auto x = random_x(s, rng);
  const double sigma = 0.3, alpha = 0.8, s2 = sigma * sigma;
  const OperatorBundle ops(x, aperture("full", s), sigma, alpha);
  SolverConfig solver;
  solver.nested_cg_tol = 1e-13;
  solver.cg_tol = 1e-13;
  const auto f = random_field(s, rng);
  const auto mf = ops.apply_M(f, solver);
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double xi = x[i];
    const double lambda = (xi + s2) - alpha * alpha * xi * xi / (xi + s2);
    CHECK(std::abs(mf[i] - lambda * f[i]) < 1e-10 * std::abs(f[i]));
  }
}

TEST_CASE("operation counters") {
  const Shape s{8, 8};
  OpStats stats;
  const OperatorBundle ops(ReflectivityImage(s, 0.3), aperture("full", s), 0.1, 0.5, &stats);
  ComplexField f(s, cplx{1.0, 0.0}), out(s);
  ops.apply_S(f, out);
  ops.apply_shifted(f, out, 0.5);
  ops.apply_A(f, out);
  const auto snap = stats.snapshot();
  CHECK(snap.s_apps == 2);
  CHECK(snap.a_apps >= 1);
  stats.reset();
  CHECK(stats.snapshot().s_apps == 0);
}

TEST_CASE("apply_shifted is c B + sigma^2 I") {
  const Shape s{16, 16};
  RngStream rng(7, "shift");
  const OperatorBundle ops(random_x(s, rng), aperture("circular:0.8", s), 0.2, 0.5);
  const auto f = random_field(s, rng);
  ComplexField got(s);
  ops.apply_shifted(f, got, -0.4);
  auto want = ops.apply_B(f);
  kernels::serial::scale(want.span(), -0.4);
  kernels::serial::axpy(ops.sigma2(), f.span(), want.span());
  CHECK(rel_diff(got, want) < 1e-13);
}
