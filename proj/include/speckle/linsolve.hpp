#pragma once

// Conjugate gradient for Hermitian positive-definite operators given only as
// field -> field maps.

#include <cmath>
#include <concepts>
#include <string>

#include "speckle/core.hpp"
#include "speckle/kernels.hpp"

namespace speckle {

struct CgReport {
  int iterations = 0;
  double final_residual_norm = 0.0;
  bool converged = false;
};

struct CgResult {
  ComplexField solution;
  CgReport report;
};

/// Any callable writing op(in) into out.
template <class Op>
concept FieldOperator = requires(const Op& op, const ComplexField& in, ComplexField& out) {
  { op(in, out) };
};

/// Residual is recomputed from scratch every this many iterations.
inline constexpr int kCgResidualRefresh = 50;

/// Solves op(h) = rhs from h0 = 0 and stops once the absolute residual
/// ||rhs - op(h)||_2 <= tol, or after max_iters steps with converged = false.
/// Throws SolverFailure when the recurrence produces non-finite values or a
/// non-positive curvature p^H op(p), both signs of a non-HPD operator.
template <FieldOperator Op>
CgResult cg_solve(const Op& op, const ComplexField& rhs, double tol, int max_iters) {
  namespace k = kernels::parallel;
  CgResult out{ComplexField(rhs.shape()), {}};
  ComplexField& h = out.solution;
  ComplexField w = rhs;  // h0 = 0, so w0 = rhs
  ComplexField p = w;
  ComplexField sp(rhs.shape());

  double ww = k::norm_sq(w.span());
  if (!std::isfinite(ww)) throw SolverFailure("cg_solve: non-finite right-hand side", ww, 0);
  out.report.final_residual_norm = std::sqrt(ww);
  if (out.report.final_residual_norm <= tol) {
    out.report.converged = true;
    return out;
  }

  for (int j = 0; j < max_iters; ++j) {
    op(p, sp);
    const double curvature = k::dot(p.span(), sp.span()).real();
    if (!(curvature > 0.0) || !std::isfinite(curvature))
      throw SolverFailure("cg_solve: operator is not positive definite along a search direction",
                          std::sqrt(ww), j);
    const double step = ww / curvature;
    k::axpy(step, p.span(), h.span());
    if ((j + 1) % kCgResidualRefresh == 0) {
      op(h, sp);
      k::sub(rhs.span(), sp.span(), w.span());
    } else {
      k::axpy(-step, sp.span(), w.span());
    }
    const double ww_next = k::norm_sq(w.span());
    if (!std::isfinite(ww_next))
      throw SolverFailure("cg_solve: non-finite residual", ww_next, j + 1);
    out.report.iterations = j + 1;
    out.report.final_residual_norm = std::sqrt(ww_next);
    if (out.report.final_residual_norm <= tol) {
      out.report.converged = true;
      return out;
    }
    k::xpby(w.span(), ww_next / ww, p.span());
    ww = ww_next;
  }
  return out;
}

}  // namespace speckle
