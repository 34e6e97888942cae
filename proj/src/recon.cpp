#include "speckle/recon.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <ostream>
#include <sstream>

#include "speckle/estimate.hpp"
#include "speckle/metrics.hpp"

namespace speckle {

RealGrid project_clamp(const RealGrid& f, double lo, double hi) {
  if (!(lo <= hi)) throw InvalidArgument("project_clamp: lo must not exceed hi");
  RealGrid out = f;
  for (auto& v : out) v = std::clamp(v, lo, hi);
  return out;
}

namespace {

// Forward differences with Neumann boundary, and the matching negative adjoint.
void gradient2d(const std::vector<double>& u, std::size_t rows, std::size_t cols,
                std::vector<double>& gx, std::vector<double>& gy) {
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) {
      const std::size_t i = r * cols + c;
      gx[i] = c + 1 < cols ? u[i + 1] - u[i] : 0.0;
      gy[i] = r + 1 < rows ? u[i + cols] - u[i] : 0.0;
    }
}

void divergence(const std::vector<double>& px, const std::vector<double>& py, std::size_t rows,
                std::size_t cols, std::vector<double>& out) {
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) {
      const std::size_t i = r * cols + c;
      double dx = c + 1 < cols ? px[i] : 0.0;
      if (c > 0) dx -= px[i - 1];
      double dy = r + 1 < rows ? py[i] : 0.0;
      if (r > 0) dy -= py[i - cols];
      out[i] = dx + dy;
    }
}

}  // namespace

RealGrid tv_prox(const RealGrid& f, double lambda, int iters) {
  if (lambda < 0.0) throw InvalidArgument("tv_prox: lambda must be >= 0");
  if (lambda == 0.0 || iters <= 0) return f;
  const std::size_t rows = f.rows(), cols = f.cols(), n = f.size();
  std::vector<double> px(n, 0.0), py(n, 0.0), div(n, 0.0), u(n), gx(n), gy(n);
  for (int it = 0; it < iters; ++it) {
    divergence(px, py, rows, cols, div);
    for (std::size_t i = 0; i < n; ++i) u[i] = div[i] - f[i] / lambda;
    gradient2d(u, rows, cols, gx, gy);
    for (std::size_t i = 0; i < n; ++i) {
      const double denom = 1.0 + kTvStep * std::hypot(gx[i], gy[i]);
      px[i] = (px[i] + kTvStep * gx[i]) / denom;
      py[i] = (py[i] + kTvStep * gy[i]) / denom;
    }
  }
  divergence(px, py, rows, cols, div);
  RealGrid out = f;
  for (std::size_t i = 0; i < n; ++i) out[i] = f[i] - lambda * div[i];
  return out;
}

RealGrid project_tv(const RealGrid& f, double lambda, double lo, double hi, int iters) {
  return project_clamp(tv_prox(f, lambda, iters), lo, hi);
}

Projector Projector::parse(std::string_view spec) {
  Projector p;
  if (spec == "clamp") return p;
  if (spec.starts_with("tv:")) {
    const auto num = spec.substr(3);
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(num.data(), num.data() + num.size(), v);
    if (ec != std::errc() || ptr != num.data() + num.size() || num.empty())
      throw InvalidArgument("bad projector spec '" + std::string(spec) + "'");
    p.kind = Kind::tv;
    p.tv_lambda = v;
    p.validate();
    return p;
  }
  throw InvalidArgument("bad projector spec '" + std::string(spec) +
                        "' (expected clamp or tv:<lambda>)");
}

void Projector::validate() const {
  if (!(lo >= 0.0 && lo < hi)) throw InvalidArgument("projector: need 0 <= lo < hi");
  if (!(tv_lambda >= 0.0)) throw InvalidArgument("projector: tv weight must be >= 0");
  if (tv_iters < 0) throw InvalidArgument("projector: tv iterations must be >= 0");
}

ReflectivityImage Projector::apply(const RealGrid& f) const {
  if (kind == Kind::clamp) return ReflectivityImage(project_clamp(f, lo, hi));
  return ReflectivityImage(project_tv(f, tv_lambda, lo, hi, tv_iters));
}

std::string Projector::describe() const {
  if (kind == Kind::clamp) return "clamp";
  std::ostringstream os;
  os << "tv:" << tv_lambda;
  return os.str();
}

ReflectivityImage initial_estimate(const OperatorBundle& ops, const MeasurementSet& meas,
                                   double lo, double hi) {
  RealGrid x(ops.shape(), 0.0);
  for (const auto& y : meas.looks) {
    const ComplexField ay = ops.apply_A(y);
    for (std::size_t i = 0; i < x.size(); ++i) x[i] += std::norm(ay[i]);
  }
  const double inv_l = 1.0 / static_cast<double>(meas.size());
  for (auto& v : x) v *= inv_l;
  return ReflectivityImage(project_clamp(x, lo, hi));
}

namespace {

double norm2(std::span<const double> v) {
  double s = 0.0;
  for (double e : v) s += e * e;
  return std::sqrt(s);
}

}  // namespace

ReconResult pgd_reconstruct(const MeasurementSet& meas,
                            std::shared_ptr<const ApertureMask> aperture, double sigma_z,
                            std::optional<double> alpha, const Projector& projector,
                            const SolverConfig& solver, const RngStream& rng) {
  meas.validate();
  solver.validate();
  projector.validate();
  if (!aperture) throw InvalidArgument("pgd_reconstruct: missing aperture");
  require_same_shape(aperture->shape(), meas.shape(), "pgd_reconstruct");
  if (!(sigma_z > 0.0)) throw InvalidArgument("pgd_reconstruct: sigma_z must be > 0");

  ReconReport report;
  if (alpha) {
    if (!(*alpha >= 0.0 && *alpha <= 1.0)) throw InvalidArgument("alpha must lie in [0, 1]");
    report.alpha_used = *alpha;
  } else {
    const auto est = estimate_alpha(meas.looks);
    report.alpha_estimate = est.alpha_hat;
    report.alpha_used = est.alpha_hat;
  }

  const std::size_t n = meas.shape().size();
  OperatorBundle ops(ReflectivityImage(meas.shape(), projector.hi), aperture, sigma_z,
                     report.alpha_used);
  ReflectivityImage x = initial_estimate(ops, meas, projector.lo, projector.hi);
  std::optional<double> mu = solver.step_init;
  bool grow = false;

  for (int t = 0; t < solver.max_pgd_iters; ++t) {
    ops = ops.with_x(x);
    const RngStream grad_stream = rng.split("gradient", static_cast<std::uint64_t>(t));
    const LookSolves here = solve_looks(ops, meas, solver);
    const double q_here = quadratic_objective(meas, here);
    GradientOptions opts;
    opts.look_solves = &here;
    const GradientResult g = gradient(ops, meas, solver, grad_stream, opts);

    IterationRecord rec;
    rec.iteration = t + 1;
    rec.grad_norm = norm2(g.gradient);
    rec.merit_start = q_here;
    rec.diagnostics = g.diagnostics;

    // Merit along the step: exact quadratic part plus the log-det part
    // linearized at x_t, m(s) = Q(s) + <d_t, s - x_t>.
    RealGrid trial(x.shape());
    bool accepted = false;
    double merit = q_here;
    if (rec.grad_norm > 0.0) {
      if (!mu) mu = 0.05 * norm2(x.span()) / rec.grad_norm;
      else if (grow) *mu *= 2.0;
      for (int b = 0; b <= kMaxBacktracks; ++b) {
        double decrease = 0.0, linear = 0.0;
        bool moved = false;
        for (std::size_t i = 0; i < n; ++i) {
          trial[i] = std::max(x[i] - *mu * g.gradient[i], projector.lo);
          const double d = trial[i] - x[i];
          moved = moved || d != 0.0;
          decrease += g.gradient[i] * d;
          linear += g.logdet_part[i] * d;
        }
        if (!moved) break;
        const double q_trial =
            quadratic_objective(ops.with_x(ReflectivityImage(trial)), meas, solver);
        const double m_trial = q_trial + linear;
        if (m_trial - q_here <= solver.armijo_c * decrease) {
          accepted = true;
          merit = m_trial;
          rec.backtracks = b;
          grow = b == 0;
          break;
        }
        *mu *= solver.armijo_shrink;
      }
    }
    rec.merit = merit;
    if (!accepted) {
      // No descent available along the projected gradient: x is stationary.
      rec.step = 0.0;
      if (meas.truth) rec.psnr = score_8bit(meas.truth->values(), x.values()).psnr_db;
      report.trace.push_back(rec);
      report.iterations = t + 1;
      report.converged = true;
      break;
    }
    rec.step = *mu;

    ReflectivityImage next = projector.apply(trial);
    double change = 0.0;
    for (std::size_t i = 0; i < n; ++i) change += (next[i] - x[i]) * (next[i] - x[i]);
    const double rel = std::sqrt(change) / std::max(norm2(x.span()), 1e-300);
    x = std::move(next);
    if (meas.truth) rec.psnr = score_8bit(meas.truth->values(), x.values()).psnr_db;
    report.trace.push_back(rec);
    report.iterations = t + 1;
    if (rel < kRelativeChangeTol) {
      report.converged = true;
      break;
    }
  }
  return {std::move(x), std::move(report)};
}

void write_trace_csv(std::ostream& os, const ReconReport& report) {
  os << "iteration,merit,grad_norm,step,backtracks,s_apps,cg_iterations,seconds,psnr\n";
  os.precision(10);
  for (const auto& r : report.trace) {
    os << r.iteration << ',' << r.merit << ',' << r.grad_norm << ',' << r.step << ','
       << r.backtracks << ',' << r.diagnostics.s_apps << ',' << r.diagnostics.cg_iterations << ','
       << r.diagnostics.seconds << ',';
    if (r.psnr) os << *r.psnr;
    os << '\n';
  }
}

}  // namespace speckle
