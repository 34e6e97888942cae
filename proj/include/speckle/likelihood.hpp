#pragma once

// Negative log-likelihood of correlated multi-look measurements and its
// gradient with respect to the reflectivity x.
//
//   f(x) = logdet S + y_1^H S^-1 y_1 + sum_{l>=2} [logdet M + r_l^H M^-1 r_l]
//   r_l  = y_l - alpha B S^-1 y_{l-1}
//
// The gradient is split into a log-determinant part (four diagonals of
// sandwiched inverses, estimated by Monte Carlo probing) and a quadratic part
// (exact, from CG solves against the looks).

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "speckle/core.hpp"
#include "speckle/optics.hpp"
#include "speckle/sim.hpp"

namespace speckle {

/// CG-backed inverses. Every solve that fails to converge throws SolverFailure.
class InverseOps {
 public:
  InverseOps(const OperatorBundle& ops, const SolverConfig& solver) : ops_(ops), solver_(solver) {}

  ComplexField solve_S(const ComplexField& rhs, double tol) const;
  ComplexField solve_S(const ComplexField& rhs) const { return solve_S(rhs, solver_.cg_tol); }
  /// At alpha = 0, M = S and this is a plain S-solve.
  ComplexField solve_M(const ComplexField& rhs) const;

  const OperatorBundle& ops() const noexcept { return ops_; }
  const SolverConfig& solver() const noexcept { return solver_; }

 private:
  const OperatorBundle& ops_;
  const SolverConfig& solver_;
};

/// r_l = y_l - alpha B S^-1 y_{l-1} for l = 2..L (L-1 fields).
std::vector<ComplexField> innovation_residuals(const OperatorBundle& ops,
                                               const MeasurementSet& meas,
                                               const SolverConfig& solver);

/// Solves against the looks that both the gradient and the quadratic part of
/// the objective need.
struct LookSolves {
  std::vector<ComplexField> s_inv_y;    // S^-1 y_l, l = 1..L
  std::vector<ComplexField> residuals;  // r_l, l = 2..L
  std::vector<ComplexField> m_inv_r;    // M^-1 r_l, l = 2..L
};

LookSolves solve_looks(const OperatorBundle& ops, const MeasurementSet& meas,
                       const SolverConfig& solver);

/// y_1^H S^-1 y_1 + sum_l r_l^H M^-1 r_l.
double quadratic_objective(const MeasurementSet& meas, const LookSolves& solves);
double quadratic_objective(const OperatorBundle& ops, const MeasurementSet& meas,
                           const SolverConfig& solver);

enum class LogDetMode {
  automatic,   // exact for n <= kExactLogDetMaxN, stochastic above
  exact,       // dense eigendecomposition of B
  stochastic,  // stochastic Lanczos quadrature on B
};

inline constexpr std::size_t kExactLogDetMaxN = 4096;
inline constexpr int kLanczosSteps = 10;

struct NegLogLikelihood {
  double value = 0.0;
  double quadratic = 0.0;
  double logdet = 0.0;  // logdet S + (L-1) logdet M
  bool stochastic_logdet = false;
};

/// `rng` feeds the Lanczos probes and is only needed for stochastic mode.
NegLogLikelihood neg_log_likelihood(const OperatorBundle& ops, const MeasurementSet& meas,
                                    const SolverConfig& solver,
                                    LogDetMode mode = LogDetMode::automatic,
                                    const RngStream& rng = RngStream(0, "logdet"));

/// Real probe vector drawn from the given law.
std::vector<double> draw_probe(std::size_t n, ProbeLaw law, RngStream& rng);

/// Writes D applied to a field into `out`.
using FieldMap = std::function<void(const ComplexField&, ComplexField&)>;

/// Unbiased estimate of Re diag(D) from `probes` real probes v_k:
/// (1/K) sum_k Re{(D v_k) .* v_k}. Probe k uses rng.split("probe", k), so the
/// result does not depend on the thread count.
std::vector<double> mc_diagonal(const FieldMap& sandwich, Shape shape, int probes, ProbeLaw law,
                                const RngStream& rng);

/// The four diagonals the log-determinant part of the gradient needs,
/// all in complex form so exact (oracle) values can be checked for residue.
struct SandwichDiagonals {
  std::vector<cplx> s_inv;    // diag(A^H S^-1 A)
  std::vector<cplx> m_inv;    // diag(A^H M^-1 A)
  std::vector<cplx> sbm;      // diag(A^H S^-1 B M^-1 A)
  std::vector<cplx> sbmbs;    // diag(A^H S^-1 B M^-1 B S^-1 A)
};


struct GradientDiagnostics {
  std::int64_t a_apps = 0;
  std::int64_t b_apps = 0;
  std::int64_t s_apps = 0;
  std::int64_t cg_iterations = 0;
  std::int64_t cg_solves = 0;
  int probes = 0;
  double seconds = 0.0;
};

struct GradientResult {
  std::vector<double> gradient;
  std::vector<double> logdet_part;     // from the four diagonals
  std::vector<double> quadratic_part;  // from the looks
  GradientDiagnostics diagnostics;
};

struct GradientOptions {
  /// Replace the Monte Carlo diagonals with these (testing).
  const SandwichDiagonals* exact_diagonals = nullptr;
  /// Reuse solves already computed at the same x.
  const LookSolves* look_solves = nullptr;
};

/// Probe k of this call uses rng.split("probe", k).
SandwichDiagonals mc_sandwich_diagonals(const OperatorBundle& ops, const SolverConfig& solver,
                                        const RngStream& rng);

GradientResult gradient(const OperatorBundle& ops, const MeasurementSet& meas,
                        const SolverConfig& solver, const RngStream& rng,
                        const GradientOptions& options = {});

}  // namespace speckle
