#pragma once

// Dense reference implementation for small problems. Explicit matrices are
// built without FFTW (A is assembled from its circulant kernel by direct DFT
// sums), so agreement with the matrix-free operators is a genuine check.

#include <Eigen/Dense>
#include <functional>
#include <vector>

#include "speckle/core.hpp"
#include "speckle/likelihood.hpp"
#include "speckle/optics.hpp"
#include "speckle/sim.hpp"

namespace speckle::oracle {

inline constexpr std::size_t kMaxDenseN = 4096;

using Mat = Eigen::MatrixXcd;
using Vec = Eigen::VectorXcd;

struct DenseSystem {
  Mat A, B, S, S_inv, M, M_inv;
  double logdet_S = 0.0;
  double logdet_M = 0.0;
  double alpha = 0.0;
  double sigma2 = 0.0;
  Shape shape;
};

/// Dense A for an aperture: A_{jk} = (1/n) sum_u P(u) exp(2 pi i u.(j - k)).
Mat dense_A(const ApertureMask& aperture);

/// Throws CapabilityError above kMaxDenseN and NumericalError when S or M is
/// not positive definite.
DenseSystem build_dense(const ReflectivityImage& x, const ApertureMask& aperture, double sigma_z,
                        double alpha);
DenseSystem build_dense(const OperatorBundle& ops);

/// logdet S and logdet M from the eigenvalues of B only; cheaper in memory
/// than build_dense since no inverse is formed.
struct DenseLogDets {
  double S = 0.0;
  double M = 0.0;
};
DenseLogDets dense_logdets(const OperatorBundle& ops);

Vec to_vec(const ComplexField& f);
ComplexField from_vec(const Vec& v, Shape shape);

/// logdet S + y_1^H S^-1 y_1 + sum_{l>=2} [logdet M + r_l^H M^-1 r_l].
double dense_negloglik(const DenseSystem& sys, const MeasurementSet& meas);
/// Independence loss: (1/L) sum_l [logdet S + y_l^H S^-1 y_l].
double dense_independent_negloglik(const DenseSystem& sys, const MeasurementSet& meas);

/// Gradient assembled from the full matrix derivative
///   df/dB = W_1 + sum_l [W_l - alpha^2 (S^-1 B W_l + W_l B S^-1 - S^-1 B W_l B S^-1)
///                        + alpha (C_l + C_l^H)]
/// with W_l = M^-1 - m_l m_l^H, m_l = M^-1 r_l, C_l = S^-1 y_{l-1} m_l^H (B S^-1 - I),
/// then g_i = Re a_i^H (df/dB) a_i.
std::vector<double> dense_gradient_wc(const DenseSystem& sys, const MeasurementSet& meas);
/// The same gradient in diagonal-plus-vector form (what the matrix-free code evaluates).
std::vector<double> dense_gradient(const DenseSystem& sys, const MeasurementSet& meas);
/// Gradient of the independence loss.
std::vector<double> dense_independent_gradient(const DenseSystem& sys, const MeasurementSet& meas);

enum class Sandwich { s_inv, m_inv, sbm, sbmbs };

/// diag(A^H T A) for T = S^-1, M^-1, S^-1 B M^-1, S^-1 B M^-1 B S^-1.
std::vector<cplx> dense_diag_complex(const DenseSystem& sys, Sandwich which);
std::vector<double> dense_diag(const DenseSystem& sys, Sandwich which);
SandwichDiagonals dense_diagonals(const DenseSystem& sys);

/// Central differences (f(x + h e_i) - f(x - h e_i)) / 2h at the given indices.
std::vector<double> finite_difference(const std::function<double(const ReflectivityImage&)>& f,
                                      const ReflectivityImage& x, std::span<const std::size_t> indices,
                                      double h);

}  // namespace speckle::oracle
