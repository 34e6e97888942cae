#include "doctest.h"
#include "helpers.hpp"
#include "speckle/linsolve.hpp"
#include "speckle/oracle.hpp"

using namespace speckle;
using test::random_field;

namespace {

auto s_op(const OperatorBundle& ops) {
  return [&ops](const ComplexField& in, ComplexField& out) { ops.apply_S(in, out); };
}

double residual(const OperatorBundle& ops, const ComplexField& h, const ComplexField& y) {
  auto r = ops.apply_S(h);
  kernels::serial::sub(y.span(), r.span(), r.span());
  return test::norm(r);
}

}  // namespace

TEST_CASE("zero right-hand side returns zero without iterating") {
  const Shape s{8, 8};
  const OperatorBundle ops(ReflectivityImage(s, 0.3), test::aperture("full", s), 0.1, 0.0);
  const auto res = cg_solve(s_op(ops), ComplexField(s), 1e-8, 64);
  CHECK(res.report.iterations == 0);
  CHECK(res.report.converged);
  CHECK(test::norm(res.solution) == 0.0);
}

TEST_CASE("scaled identity converges in one iteration") {
  const Shape s{8, 8};
  RngStream rng(1, "id");
  const double s2 = 0.04;
  const auto op = [s2](const ComplexField& in, ComplexField& out) {
    out = in;
    kernels::serial::scale(out.span(), s2);
  };
  const auto y = random_field(s, rng);
  const auto res = cg_solve(op, y, 1e-10, 64);
  CHECK(res.report.iterations == 1);
  for (std::size_t i = 0; i < y.size(); ++i) CHECK(std::abs(res.solution[i] - y[i] / s2) < 1e-10);
}

TEST_CASE("full aperture with constant x has two eigenvalues") {
  const Shape s{32, 32};
  RngStream rng(2, "two");
  const OperatorBundle ops(ReflectivityImage(s, 0.6), test::aperture("full", s), 0.1, 0.0);
  const auto y = random_field(s, rng);
  const auto res = cg_solve(s_op(ops), y, 1e-10, 1024);
  CHECK(res.report.converged);
  CHECK(res.report.iterations <= 2);

  // Masked aperture with constant x: spectrum {x + sigma^2, sigma^2}.
  const OperatorBundle masked(ReflectivityImage(s, 0.6), test::aperture("circular:0.8", s), 0.1, 0.0);
  const auto res2 = cg_solve(s_op(masked), y, 1e-10, 1024);
  CHECK(res2.report.iterations <= 2);
}

TEST_CASE("16x16 S-system matches a dense solve") {
  const Shape s{16, 16};
  RngStream rng(3, "dense");
  const OperatorBundle ops(test::random_x(s, rng), test::aperture("circular:0.8", s), 0.1, 0.0);
  const auto y = random_field(s, rng);
  const auto res = cg_solve(s_op(ops), y, 1e-8, 256);
  CHECK(res.report.converged);
  CHECK(residual(ops, res.solution, y) <= 1e-8);
  CHECK(res.report.final_residual_norm <= 1e-8);

  const auto sys = oracle::build_dense(ops);
  const oracle::Vec want = sys.S.llt().solve(oracle::to_vec(y));
  CHECK((oracle::to_vec(res.solution) - want).norm() / want.norm() < 1e-6);
}

TEST_CASE("S-weighted error norm never increases") {
  const Shape s{16, 16};
  RngStream rng(4, "energy");
  const OperatorBundle ops(test::random_x(s, rng), test::aperture("annular", s), 0.05, 0.0);
  const auto sys = oracle::build_dense(ops);
  const auto y = random_field(s, rng);
  const oracle::Vec exact = sys.S.llt().solve(oracle::to_vec(y));
  double prev = std::numeric_limits<double>::infinity();
  for (int j = 1; j <= 30; ++j) {
    // Truncated runs reproduce the j-th iterate exactly.
    const auto res = cg_solve(s_op(ops), y, 0.0, j);
    const oracle::Vec e = oracle::to_vec(res.solution) - exact;
    const double energy = std::sqrt((e.adjoint() * sys.S * e)(0, 0).real());
    CHECK(energy <= prev * (1 + 1e-10));
    prev = energy;
  }
}

TEST_CASE("iteration cap is respected") {
  const Shape s{16, 16};
  RngStream rng(5, "cap");
  const OperatorBundle ops(test::random_x(s, rng), test::aperture("annular", s), 0.01, 0.0);
  const auto y = random_field(s, rng);
  const auto res = cg_solve(s_op(ops), y, 1e-14, 3);
  CHECK(res.report.iterations == 3);
  CHECK_FALSE(res.report.converged);
}

TEST_CASE("indefinite operator is reported") {
  const Shape s{4, 4};
  RngStream rng(6, "neg");
  const auto op = [](const ComplexField& in, ComplexField& out) {
    out = in;
    kernels::serial::scale(out.span(), -1.0);
  };
  CHECK_THROWS_AS(cg_solve(op, random_field(s, rng), 1e-8, 16), SolverFailure);
}

TEST_CASE("random 64x64 systems meet the absolute residual") {
  const Shape s{64, 64};
  RngStream rng(7, "r64");
  for (int k = 0; k < 3; ++k) {
    const OperatorBundle ops(test::random_x(s, rng), test::aperture("circular:0.8", s),
                             sigma_from_8bit(15), 0.0);
    const auto y = random_field(s, rng);
    const auto res = cg_solve(s_op(ops), y, 1e-6, 4096);
    CHECK(res.report.converged);
    CHECK(residual(ops, res.solution, y) <= 1e-6);
  }
}
