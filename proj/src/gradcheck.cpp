#include "speckle/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "speckle/likelihood.hpp"
#include "speckle/oracle.hpp"
#include "speckle/sim.hpp"

namespace speckle {

bool GradCheckReport::pass() const {
  return !checks.empty() &&
         std::all_of(checks.begin(), checks.end(), [](const CheckLine& c) { return c.pass; });
}

double relative_error(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw InvalidArgument("relative_error: length mismatch");
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num += (a[i] - b[i]) * (a[i] - b[i]);
    den += b[i] * b[i];
  }
  if (den == 0.0) return num == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  return std::sqrt(num / den);
}

namespace {

CheckLine line(std::string name, double value, double tol) {
  return {std::move(name), value, tol, value < tol};
}

}  // namespace

GradCheckReport run_grad_check(const GradCheckConfig& cfg) {
  const Shape shape{cfg.size, cfg.size};
  if (shape.size() > oracle::kMaxDenseN)
    throw CapabilityError("grad-check: " + to_string(shape) + " exceeds the dense oracle cap of " +
                          std::to_string(oracle::kMaxDenseN) + " pixels");
  if (cfg.looks < 1) throw InvalidArgument("grad-check: looks must be >= 1");

  const RngStream root(cfg.seed, "grad-check");
  auto xs = root.split("x");
  RealGrid xv(shape);
  for (auto& v : xv) v = 0.05 + 0.9 * xs.uniform();
  const ReflectivityImage x(xv);
  auto aperture = std::make_shared<const ApertureMask>(parse_aperture(cfg.aperture, shape));
  const AcquisitionParams params{cfg.looks, cfg.alpha, cfg.sigma_z, cfg.seed};
  const MeasurementSet meas = simulate_measurements(x, aperture, params, root.split("meas"));

  const auto sys = oracle::build_dense(x, *aperture, cfg.sigma_z, cfg.alpha);
  const auto g_dense = oracle::dense_gradient(sys, meas);
  const auto g_wc = oracle::dense_gradient_wc(sys, meas);

  GradCheckReport report;

  // Central differences of the dense objective at random coordinates.
  std::vector<std::size_t> idx(shape.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  auto pick = root.split("coords");
  for (std::size_t i = idx.size(); i > 1; --i)
    std::swap(idx[i - 1], idx[static_cast<std::size_t>(pick.uniform() * double(i)) % i]);
  idx.resize(std::min<std::size_t>(idx.size(), static_cast<std::size_t>(cfg.fd_coordinates)));
  auto f = [&](const ReflectivityImage& xp) {
    return oracle::dense_negloglik(oracle::build_dense(xp, *aperture, cfg.sigma_z, cfg.alpha),
                                   meas);
  };
  const auto fd = oracle::finite_difference(f, x, idx, cfg.fd_step);
  std::vector<double> g_sub;
  for (auto i : idx) g_sub.push_back(g_dense[i]);
  report.checks.push_back(line("dense gradient vs finite differences", relative_error(g_sub, fd), 1e-4));

  report.checks.push_back(line("W/C form vs diagonal form", relative_error(g_wc, g_dense), 1e-10));

  // Matrix-free gradient with the four diagonals injected from the oracle.
  SolverConfig solver;
  solver.cg_tol = 1e-10;
  solver.nested_cg_tol = 1e-12;
  const OperatorBundle ops(x, aperture, cfg.sigma_z, cfg.alpha);
  const auto exact = oracle::dense_diagonals(sys);
  GradientOptions opts;
  opts.exact_diagonals = &exact;
  const auto g_free = gradient(ops, meas, solver, root.split("probes"), opts);
  report.checks.push_back(
      line("matrix-free gradient vs dense", relative_error(g_free.gradient, g_dense), 1e-6));

  const double f_dense = oracle::dense_negloglik(sys, meas);
  const auto f_free = neg_log_likelihood(ops, meas, solver, LogDetMode::exact);
  report.checks.push_back(line("matrix-free objective vs dense",
                               std::abs(f_free.value - f_dense) / std::abs(f_dense), 1e-8));

  if (cfg.alpha == 0.0) {
    const double L = cfg.looks;
    const double f_ind = oracle::dense_independent_negloglik(sys, meas);
    report.checks.push_back(
        line("alpha=0 objective = L x independent", std::abs(f_dense - L * f_ind) / std::abs(f_dense), 1e-10));
    auto g_ind = oracle::dense_independent_gradient(sys, meas);
    for (auto& v : g_ind) v *= L;
    report.checks.push_back(
        line("alpha=0 gradient = L x independent", relative_error(g_dense, g_ind), 1e-8));
  }
  return report;
}

}  // namespace speckle
