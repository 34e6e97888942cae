#include "speckle/likelihood.hpp"

#include <Eigen/Dense>
#include <chrono>
#include <cmath>

#include "speckle/kernels.hpp"
#include "speckle/linsolve.hpp"
#include "speckle/oracle.hpp"

namespace speckle {

namespace {

namespace k = kernels::parallel;

void record(const OperatorBundle& ops, const CgReport& report) {
  if (OpStats* stats = ops.stats()) {
    stats->cg_iterations.fetch_add(report.iterations, std::memory_order_relaxed);
    stats->cg_solves.fetch_add(1, std::memory_order_relaxed);
  }
}

template <class Op>
ComplexField checked_solve(const OperatorBundle& ops, const Op& op, const ComplexField& rhs,
                           double tol, int max_iters, const char* what) {
  auto res = cg_solve(op, rhs, tol, max_iters);
  record(ops, res.report);
  if (!res.report.converged)
    throw SolverFailure(std::string(what) + ": CG did not reach the tolerance",
                        res.report.final_residual_norm, res.report.iterations);
  return std::move(res.solution);
}

ComplexField real_field(Shape shape, std::span<const double> v) {
  ComplexField f(shape);
  for (std::size_t i = 0; i < f.size(); ++i) f[i] = v[i];
  return f;
}

// acc += field .* v
void accumulate_probe(std::vector<cplx>& acc, const ComplexField& field, std::span<const double> v) {
  for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += field[i] * v[i];
}

std::size_t probe_batch() { return 2 * static_cast<std::size_t>(kernels::max_threads()); }

}  // namespace

// ---------------------------------------------------------------------------

ComplexField InverseOps::solve_S(const ComplexField& rhs, double tol) const {
  auto op = [this](const ComplexField& f, ComplexField& o) { ops_.apply_S(f, o); };
  return checked_solve(ops_, op, rhs, tol, solver_.max_iters_for(ops_.size()), "S-solve");
}

ComplexField InverseOps::solve_M(const ComplexField& rhs) const {
  const double a = ops_.alpha();
  if (a == 0.0) return solve_S(rhs);
  const int max_iters = solver_.max_iters_for(ops_.size());
  if (solver_.m_inverse == MInverse::nested) {
    auto op = [this](const ComplexField& f, ComplexField& o) { ops_.apply_M(f, o, solver_); };
    return checked_solve(ops_, op, rhs, solver_.cg_tol, max_iters, "M-solve");
  }
  // M = (S - aB)(S + aB) S^-1, so M^-1 = ((S - aB)^-1 + (S + aB)^-1) / 2.
  auto minus = [this, a](const ComplexField& f, ComplexField& o) {
    ops_.apply_shifted(f, o, 1.0 - a);
  };
  auto plus = [this, a](const ComplexField& f, ComplexField& o) {
    ops_.apply_shifted(f, o, 1.0 + a);
  };
  const double tol = solver_.cg_tol;
  ComplexField out = checked_solve(ops_, minus, rhs, tol, max_iters, "M-solve (S - aB)");
  const ComplexField other = checked_solve(ops_, plus, rhs, tol, max_iters, "M-solve (S + aB)");
  k::axpy(1.0, other.span(), out.span());
  k::scale(out.span(), 0.5);
  return out;
}

// ---------------------------------------------------------------------------

LookSolves solve_looks(const OperatorBundle& ops, const MeasurementSet& meas,
                       const SolverConfig& solver) {
  meas.validate();
  require_same_shape(meas.shape(), ops.shape(), "solve_looks");
  const InverseOps inv(ops, solver);
  const std::size_t L = meas.looks.size();
  const double a = ops.alpha();

  LookSolves out;
  out.s_inv_y.resize(L);
  kernels::run_jobs(L, [&](std::size_t l) { out.s_inv_y[l] = inv.solve_S(meas.looks[l]); });
  if (L < 2) return out;

  out.residuals.resize(L - 1);
  out.m_inv_r.resize(L - 1);
  if (a == 0.0) {
    // M = S and r_l = y_l.
    for (std::size_t l = 1; l < L; ++l) {
      out.residuals[l - 1] = meas.looks[l];
      out.m_inv_r[l - 1] = out.s_inv_y[l];
    }
    return out;
  }
  kernels::run_jobs(L - 1, [&](std::size_t j) {
    ComplexField r = ops.apply_B(out.s_inv_y[j]);
    k::xpby(meas.looks[j + 1].span(), -a, r.span());  // r = y_l - a B S^-1 y_{l-1}
    out.m_inv_r[j] = inv.solve_M(r);
    out.residuals[j] = std::move(r);
  });
  return out;
}

std::vector<ComplexField> innovation_residuals(const OperatorBundle& ops,
                                               const MeasurementSet& meas,
                                               const SolverConfig& solver) {
  meas.validate();
  require_same_shape(meas.shape(), ops.shape(), "innovation_residuals");
  const InverseOps inv(ops, solver);
  const std::size_t L = meas.looks.size();
  std::vector<ComplexField> out(L > 0 ? L - 1 : 0);
  if (ops.alpha() == 0.0) {
    for (std::size_t l = 1; l < L; ++l) out[l - 1] = meas.looks[l];
    return out;
  }
  kernels::run_jobs(out.size(), [&](std::size_t j) {
    ComplexField r = ops.apply_B(inv.solve_S(meas.looks[j]));
    k::xpby(meas.looks[j + 1].span(), -ops.alpha(), r.span());
    out[j] = std::move(r);
  });
  return out;
}

double quadratic_objective(const MeasurementSet& meas, const LookSolves& solves) {
  double q = k::dot(meas.looks.front().span(), solves.s_inv_y.front().span()).real();
  for (std::size_t j = 0; j < solves.residuals.size(); ++j)
    q += k::dot(solves.residuals[j].span(), solves.m_inv_r[j].span()).real();
  return q;
}

double quadratic_objective(const OperatorBundle& ops, const MeasurementSet& meas,
                           const SolverConfig& solver) {
  return quadratic_objective(meas, solve_looks(ops, meas, solver));
}

// ---------------------------------------------------------------------------
// Log-determinants

namespace {

// Stochastic Lanczos quadrature of tr g(B) for g = log(lambda + s2) and
// g = log((lambda + s2) - a^2 lambda^2 / (lambda + s2)).
oracle::DenseLogDets slq_logdets(const OperatorBundle& ops, int probes, const RngStream& rng) {
  const std::size_t n = ops.size();
  const int m = std::min<int>(kLanczosSteps, static_cast<int>(n));
  std::vector<oracle::DenseLogDets> per(static_cast<std::size_t>(probes));
  kernels::run_jobs(per.size(), [&](std::size_t p) {
    auto stream = rng.split("slq", p);
    std::vector<ComplexField> basis;
    ComplexField q(ops.shape());
    for (std::size_t i = 0; i < n; ++i) q[i] = stream.rademacher() / std::sqrt(double(n));
    std::vector<double> diag, off;
    ComplexField w(ops.shape());
    for (int j = 0; j < m; ++j) {
      ops.apply_B(q, w);
      const double aj = k::dot(q.span(), w.span()).real();
      diag.push_back(aj);
      basis.push_back(q);
      // Full reorthogonalization against every stored vector.
      for (int pass = 0; pass < 2; ++pass)
        for (const auto& b : basis) k::axpy(-k::dot(b.span(), w.span()), b.span(), w.span());
      const double bj = std::sqrt(k::norm_sq(w.span()));
      if (j + 1 == m || bj <= 1e-12 * std::max(1.0, std::abs(aj))) break;
      off.push_back(bj);
      q = w;
      k::scale(q.span(), 1.0 / bj);
    }
    Eigen::VectorXd d = Eigen::Map<Eigen::VectorXd>(diag.data(), Eigen::Index(diag.size()));
    Eigen::VectorXd e = Eigen::Map<Eigen::VectorXd>(off.data(), Eigen::Index(off.size()));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig;
    eig.computeFromTridiagonal(d, e, Eigen::ComputeEigenvectors);
    const double s2 = ops.sigma2(), a2 = ops.alpha() * ops.alpha();
    oracle::DenseLogDets acc;
    for (Eigen::Index i = 0; i < d.size(); ++i) {
      const double lam = std::max(0.0, eig.eigenvalues()(i));
      const double tau2 = eig.eigenvectors()(0, i) * eig.eigenvectors()(0, i);
      const double s = lam + s2;
      acc.S += tau2 * std::log(s);
      acc.M += tau2 * std::log(s - a2 * lam * lam / s);
    }
    per[p] = acc;
  });
  oracle::DenseLogDets out;
  for (const auto& v : per) {
    out.S += v.S;
    out.M += v.M;
  }
  out.S *= double(n) / probes;
  out.M *= double(n) / probes;
  return out;
}

}  // namespace

NegLogLikelihood neg_log_likelihood(const OperatorBundle& ops, const MeasurementSet& meas,
                                    const SolverConfig& solver, LogDetMode mode,
                                    const RngStream& rng) {
  if (mode == LogDetMode::exact && ops.size() > kExactLogDetMaxN)
    throw CapabilityError("exact log-determinant needs n <= " + std::to_string(kExactLogDetMaxN));
  const bool stochastic =
      mode == LogDetMode::stochastic ||
      (mode == LogDetMode::automatic && ops.size() > kExactLogDetMaxN);

  NegLogLikelihood out;
  out.quadratic = quadratic_objective(ops, meas, solver);
  const auto ld = stochastic ? slq_logdets(ops, solver.mc_probes, rng) : oracle::dense_logdets(ops);
  out.logdet = ld.S + static_cast<double>(meas.size() - 1) * ld.M;
  out.value = out.quadratic + out.logdet;
  out.stochastic_logdet = stochastic;
  return out;
}

// ---------------------------------------------------------------------------
// Monte Carlo diagonals

std::vector<double> draw_probe(std::size_t n, ProbeLaw law, RngStream& rng) {
  std::vector<double> v(n);
  if (law == ProbeLaw::gaussian)
    for (auto& e : v) e = rng.normal();
  else
    for (auto& e : v) e = rng.rademacher();
  return v;
}

std::vector<double> mc_diagonal(const FieldMap& sandwich, Shape shape, int probes, ProbeLaw law,
                                const RngStream& rng) {
  if (probes < 1) throw InvalidArgument("mc_diagonal: probes must be >= 1");
  const std::size_t n = shape.size();
  std::vector<cplx> acc(n, cplx{});
  const std::size_t total = static_cast<std::size_t>(probes);
  const std::size_t batch = probe_batch();
  for (std::size_t start = 0; start < total; start += batch) {
    const std::size_t count = std::min(batch, total - start);
    std::vector<std::vector<double>> v(count);
    std::vector<ComplexField> dv(count);
    kernels::run_jobs(count, [&](std::size_t j) {
      auto stream = rng.split("probe", start + j);
      v[j] = draw_probe(n, law, stream);
      dv[j] = ComplexField(shape);
      sandwich(real_field(shape, v[j]), dv[j]);
    });
    for (std::size_t j = 0; j < count; ++j) accumulate_probe(acc, dv[j], v[j]);
  }
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = acc[i].real() / static_cast<double>(probes);
  return out;
}

SandwichDiagonals mc_sandwich_diagonals(const OperatorBundle& ops, const SolverConfig& solver,
                                        const RngStream& rng) {
  const Shape shape = ops.shape();
  const std::size_t n = ops.size();
  const bool correlated = ops.alpha() != 0.0;
  const InverseOps inv(ops, solver);

  SandwichDiagonals out;
  out.s_inv.assign(n, cplx{});
  out.m_inv.assign(n, cplx{});
  out.sbm.assign(n, cplx{});
  out.sbmbs.assign(n, cplx{});

  struct Probe {
    std::vector<double> v;
    ComplexField d[4];
  };
  const std::size_t total = static_cast<std::size_t>(solver.mc_probes);
  const std::size_t batch = probe_batch();
  for (std::size_t start = 0; start < total; start += batch) {
    const std::size_t count = std::min(batch, total - start);
    std::vector<Probe> pr(count);
    kernels::run_jobs(count, [&](std::size_t j) {
      auto stream = rng.split("probe", start + j);
      Probe& p = pr[j];
      p.v = draw_probe(n, solver.probe_law, stream);
      const ComplexField av = ops.apply_A(real_field(shape, p.v));
      const ComplexField c1 = inv.solve_S(av);
      p.d[0] = ops.apply_A(c1);
      if (!correlated) return;
      // S^-1, B and M^-1 are all functions of B and commute, so
      // S^-1 B M^-1 B S^-1 A v = S^-1 B (S^-1 B (M^-1 A v)).
      const ComplexField c2 = inv.solve_M(av);
      p.d[1] = ops.apply_A(c2);
      const ComplexField w3 = inv.solve_S(ops.apply_B(c2));
      p.d[2] = ops.apply_A(w3);
      const ComplexField w4 = inv.solve_S(ops.apply_B(w3));
      p.d[3] = ops.apply_A(w4);
    });
    for (const auto& p : pr) {
      accumulate_probe(out.s_inv, p.d[0], p.v);
      if (!correlated) continue;
      accumulate_probe(out.m_inv, p.d[1], p.v);
      accumulate_probe(out.sbm, p.d[2], p.v);
      accumulate_probe(out.sbmbs, p.d[3], p.v);
    }
  }
  const double inv_k = 1.0 / static_cast<double>(total);
  for (auto* d : {&out.s_inv, &out.m_inv, &out.sbm, &out.sbmbs})
    for (auto& e : *d) e *= inv_k;
  if (!correlated) out.m_inv = out.s_inv;  // M = S; the other two enter with alpha^2 = 0
  return out;
}

// ---------------------------------------------------------------------------
// Gradient

GradientResult gradient(const OperatorBundle& ops_in, const MeasurementSet& meas,
                        const SolverConfig& solver, const RngStream& rng,
                        const GradientOptions& options) {
  const auto t0 = std::chrono::steady_clock::now();
  solver.validate();
  OpStats local;
  const OperatorBundle ops = ops_in.with_stats(&local);
  const std::size_t n = ops.size();
  const std::size_t L = static_cast<std::size_t>(meas.size());
  const double a = ops.alpha();
  const InverseOps inv(ops, solver);

  LookSolves own;
  if (options.look_solves == nullptr) own = solve_looks(ops, meas, solver);
  const LookSolves& solves = options.look_solves ? *options.look_solves : own;

  SandwichDiagonals mc;
  const SandwichDiagonals* diag = options.exact_diagonals;
  if (diag != nullptr) {
    for (const auto* d : {&diag->s_inv, &diag->m_inv, &diag->sbm, &diag->sbmbs})
      if (d->size() != n) throw InvalidArgument("gradient: exact diagonal has the wrong length");
  } else {
    mc = mc_sandwich_diagonals(ops, solver, rng);
    diag = &mc;
  }

  GradientResult out;
  out.logdet_part.resize(n);
  out.quadratic_part.assign(n, 0.0);
  const double looks_after = static_cast<double>(L - 1);
  for (std::size_t i = 0; i < n; ++i) {
    const double bracket = 2.0 * diag->sbm[i].real() - diag->sbmbs[i].real();
    out.logdet_part[i] =
        diag->s_inv[i].real() + looks_after * (diag->m_inv[i].real() - a * a * bracket);
  }

  // Vector terms, one job per look, summed in look order.
  std::vector<std::vector<double>> per_look(L);
  kernels::run_jobs(L, [&](std::size_t l) {
    std::vector<double> q(n);
    if (l == 0) {
      const ComplexField as = ops.apply_A(solves.s_inv_y[0]);
      for (std::size_t i = 0; i < n; ++i) q[i] = -std::norm(as[i]);
      per_look[l] = std::move(q);
      return;
    }
    const ComplexField am = ops.apply_A(solves.m_inv_r[l - 1]);
    if (a == 0.0) {
      for (std::size_t i = 0; i < n; ++i) q[i] = -std::norm(am[i]);
      per_look[l] = std::move(q);
      return;
    }
    const ComplexField aw = ops.apply_A(inv.solve_S(ops.apply_B(solves.m_inv_r[l - 1])));
    const ComplexField asp = ops.apply_A(solves.s_inv_y[l - 1]);
    for (std::size_t i = 0; i < n; ++i) {
      const double cross = (aw[i] * std::conj(am[i])).real();
      q[i] = -std::norm(am[i]) - a * a * (std::norm(aw[i]) - 2.0 * cross) +
             2.0 * a * (asp[i] * std::conj(aw[i] - am[i])).real();
    }
    per_look[l] = std::move(q);
  });
  for (const auto& q : per_look)
    for (std::size_t i = 0; i < n; ++i) out.quadratic_part[i] += q[i];

  out.gradient.resize(n);
  double gnorm = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    out.gradient[i] = out.logdet_part[i] + out.quadratic_part[i];
    gnorm += out.gradient[i] * out.gradient[i];
  }
  gnorm = std::sqrt(gnorm);

  // Exact diagonals of Hermitian sandwiches are real; a residue means the
  // caller handed in something inconsistent. Monte Carlo estimates of the same
  // diagonals carry a zero-mean imaginary part that is simply dropped.
  if (options.exact_diagonals != nullptr) {
    double residue = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double im = diag->s_inv[i].imag() +
                        looks_after * (diag->m_inv[i].imag() + a * a * diag->sbmbs[i].imag());
      residue += im * im;
    }
    if (std::sqrt(residue) > 1e-6 * std::max(gnorm, 1e-300))
      throw NumericalError("gradient: imaginary residue of the assembled gradient is too large");
  }

  const auto snap = local.snapshot();
  out.diagnostics = {snap.a_apps,        snap.b_apps,
                     snap.s_apps,        snap.cg_iterations,
                     snap.cg_solves,     options.exact_diagonals ? 0 : solver.mc_probes,
                     std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count()};
  if (OpStats* outer = ops_in.stats()) {
    outer->a_apps += snap.a_apps;
    outer->b_apps += snap.b_apps;
    outer->s_apps += snap.s_apps;
    outer->cg_iterations += snap.cg_iterations;
    outer->cg_solves += snap.cg_solves;
  }
  return out;
}

}  // namespace speckle
