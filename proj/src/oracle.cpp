#include "speckle/oracle.hpp"

#include <cmath>
#include <numbers>

namespace speckle::oracle {

namespace {

void check_cap(std::size_t n) {
  if (n > kMaxDenseN)
    throw CapabilityError("dense oracle is limited to n <= " + std::to_string(kMaxDenseN) +
                          " pixels, got " + std::to_string(n));
}

// Cholesky factor plus its log-determinant; throws when the matrix is not PD.
Eigen::LLT<Mat> factor(const Mat& m, const char* what, double& logdet) {
  Eigen::LLT<Mat> llt(m);
  if (llt.info() != Eigen::Success)
    throw NumericalError(std::string("dense oracle: ") + what + " is not positive definite");
  logdet = 0.0;
  const Mat& l = llt.matrixLLT();
  for (Eigen::Index i = 0; i < m.rows(); ++i) logdet += 2.0 * std::log(l(i, i).real());
  return llt;
}

Mat hermitian_part(const Mat& m) { return 0.5 * (m + m.adjoint()); }

Vec real_diag_sandwich(const Mat& a, const Mat& g) { return (a.adjoint() * g * a).diagonal(); }

std::vector<double> real_part(const Vec& v) {
  std::vector<double> out(static_cast<std::size_t>(v.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i) out[static_cast<std::size_t>(i)] = v(i).real();
  return out;
}

std::vector<double> abs_sq(const Vec& v) {
  std::vector<double> out(static_cast<std::size_t>(v.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i) out[static_cast<std::size_t>(i)] = std::norm(v(i));
  return out;
}

void require_meas(const DenseSystem& sys, const MeasurementSet& meas) {
  meas.validate();
  require_same_shape(meas.shape(), sys.shape, "dense oracle");
}

}  // namespace

Mat dense_A(const ApertureMask& aperture) {
  const Shape shape = aperture.shape();
  const std::size_t n = shape.size();
  check_cap(n);
  const std::size_t R = shape.rows, C = shape.cols;
  const auto mask = aperture.fft_order();

  // Circulant kernel a(dr, dc) = (1/n) sum_{u open} exp(2 pi i (ur dr / R + uc dc / C)),
  // with the phase reduced modulo 1 in integer arithmetic.
  std::vector<cplx> kernel(n, cplx{});
  for (std::size_t dr = 0; dr < R; ++dr) {
    for (std::size_t dc = 0; dc < C; ++dc) {
      cplx acc{};
      for (std::size_t ur = 0; ur < R; ++ur) {
        for (std::size_t uc = 0; uc < C; ++uc) {
          if (mask[ur * C + uc] == 0.0) continue;
          const double phase = static_cast<double>((ur * dr) % R) / static_cast<double>(R) +
                               static_cast<double>((uc * dc) % C) / static_cast<double>(C);
          acc += std::polar(1.0, 2.0 * std::numbers::pi * phase);
        }
      }
      kernel[dr * C + dc] = acc / static_cast<double>(n);
    }
  }

  Mat a(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t jr = 0; jr < R; ++jr)
    for (std::size_t jc = 0; jc < C; ++jc)
      for (std::size_t kr = 0; kr < R; ++kr)
        for (std::size_t kc = 0; kc < C; ++kc) {
          const std::size_t dr = (jr + R - kr) % R, dc = (jc + C - kc) % C;
          a(static_cast<Eigen::Index>(jr * C + jc), static_cast<Eigen::Index>(kr * C + kc)) =
              kernel[dr * C + dc];
        }
  return a;
}

DenseSystem build_dense(const ReflectivityImage& x, const ApertureMask& aperture, double sigma_z,
                        double alpha) {
  require_same_shape(x.shape(), aperture.shape(), "build_dense");
  const std::size_t n = x.size();
  check_cap(n);
  if (!(sigma_z > 0.0)) throw NumericalError("dense oracle: sigma_z must be > 0 for S to be PD");
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw InvalidArgument("dense oracle: alpha in [0, 1]");

  DenseSystem sys;
  sys.shape = x.shape();
  sys.alpha = alpha;
  sys.sigma2 = sigma_z * sigma_z;
  sys.A = dense_A(aperture);
  Eigen::VectorXd xd(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) xd(static_cast<Eigen::Index>(i)) = x[i];
  sys.B = hermitian_part(sys.A * xd.asDiagonal() * sys.A.adjoint());
  const Mat id = Mat::Identity(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  sys.S = sys.B + sys.sigma2 * id;
  auto llt_s = factor(sys.S, "S", sys.logdet_S);
  sys.S_inv = hermitian_part(llt_s.solve(id));
  sys.M = hermitian_part(sys.S - alpha * alpha * sys.B * sys.S_inv * sys.B);
  auto llt_m = factor(sys.M, "M", sys.logdet_M);
  sys.M_inv = hermitian_part(llt_m.solve(id));
  return sys;
}

DenseSystem build_dense(const OperatorBundle& ops) {
  return build_dense(ops.x(), ops.aperture(), ops.sigma_z(), ops.alpha());
}

DenseLogDets dense_logdets(const OperatorBundle& ops) {
  const std::size_t n = ops.size();
  check_cap(n);
  // B = A X A^H shares its spectrum with X^1/2 A^H A X^1/2 = X^1/2 A X^1/2.
  Mat k = dense_A(ops.aperture());
  Eigen::VectorXd root(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) root(static_cast<Eigen::Index>(i)) = std::sqrt(ops.x()[i]);
  k = root.asDiagonal() * k * root.asDiagonal();
  Eigen::SelfAdjointEigenSolver<Mat> eig(k, Eigen::EigenvaluesOnly);
  if (eig.info() != Eigen::Success) throw NumericalError("dense_logdets: eigensolver failed");
  const double s2 = ops.sigma2(), a2 = ops.alpha() * ops.alpha();
  DenseLogDets out;
  for (Eigen::Index i = 0; i < eig.eigenvalues().size(); ++i) {
    const double lam = std::max(0.0, eig.eigenvalues()(i));
    const double s = lam + s2;
    out.S += std::log(s);
    out.M += std::log(s - a2 * lam * lam / s);
  }
  return out;
}

Vec to_vec(const ComplexField& f) {
  Vec v(static_cast<Eigen::Index>(f.size()));
  for (std::size_t i = 0; i < f.size(); ++i) v(static_cast<Eigen::Index>(i)) = f[i];
  return v;
}

ComplexField from_vec(const Vec& v, Shape shape) {
  if (static_cast<std::size_t>(v.size()) != shape.size())
    throw InvalidArgument("from_vec: length does not match shape");
  ComplexField f(shape);
  for (std::size_t i = 0; i < f.size(); ++i) f[i] = v(static_cast<Eigen::Index>(i));
  return f;
}

double dense_negloglik(const DenseSystem& sys, const MeasurementSet& meas) {
  require_meas(sys, meas);
  const Vec y1 = to_vec(meas.looks.front());
  double f = sys.logdet_S + y1.dot(sys.S_inv * y1).real();
  for (std::size_t l = 1; l < meas.looks.size(); ++l) {
    const Vec prev = to_vec(meas.looks[l - 1]);
    const Vec r = to_vec(meas.looks[l]) - sys.alpha * (sys.B * (sys.S_inv * prev));
    f += sys.logdet_M + r.dot(sys.M_inv * r).real();
  }
  return f;
}

double dense_independent_negloglik(const DenseSystem& sys, const MeasurementSet& meas) {
  require_meas(sys, meas);
  double f = 0.0;
  for (const auto& look : meas.looks) {
    const Vec y = to_vec(look);
    f += sys.logdet_S + y.dot(sys.S_inv * y).real();
  }
  return f / static_cast<double>(meas.size());
}

std::vector<double> dense_gradient_wc(const DenseSystem& sys, const MeasurementSet& meas) {
  require_meas(sys, meas);
  const double a = sys.alpha;
  const Eigen::Index n = sys.A.rows();
  const Mat id = Mat::Identity(n, n);
  const Mat bs = sys.B * sys.S_inv;  // B S^-1
  const Mat sb = sys.S_inv * sys.B;  // S^-1 B

  const Vec s1 = sys.S_inv * to_vec(meas.looks.front());
  Mat g = sys.S_inv - s1 * s1.adjoint();
  for (std::size_t l = 1; l < meas.looks.size(); ++l) {
    const Vec sp = sys.S_inv * to_vec(meas.looks[l - 1]);
    const Vec r = to_vec(meas.looks[l]) - a * (sys.B * sp);
    const Vec m = sys.M_inv * r;
    const Mat w = sys.M_inv - m * m.adjoint();
    const Mat c = sp * m.adjoint() * (bs - id);
    g += w - a * a * (sb * w + w * bs - sb * w * bs) + a * (c + c.adjoint());
  }
  return real_part(real_diag_sandwich(sys.A, g));
}

std::vector<double> dense_gradient(const DenseSystem& sys, const MeasurementSet& meas) {
  require_meas(sys, meas);
  const double a = sys.alpha;
  const Mat ah = sys.A.adjoint();
  const std::size_t n = static_cast<std::size_t>(sys.A.rows());

  const auto d_s = dense_diag(sys, Sandwich::s_inv);
  const auto d_m = dense_diag(sys, Sandwich::m_inv);
  const auto d_sbm = dense_diag(sys, Sandwich::sbm);
  const auto d_sbmbs = dense_diag(sys, Sandwich::sbmbs);

  std::vector<double> g(n);
  const auto q1 = abs_sq(ah * (sys.S_inv * to_vec(meas.looks.front())));
  for (std::size_t i = 0; i < n; ++i) g[i] = d_s[i] - q1[i];

  for (std::size_t l = 1; l < meas.looks.size(); ++l) {
    const Vec sp = sys.S_inv * to_vec(meas.looks[l - 1]);
    const Vec r = to_vec(meas.looks[l]) - a * (sys.B * sp);
    const Vec m = sys.M_inv * r;
    const Vec am = ah * m;
    const Vec aw = ah * (sys.S_inv * (sys.B * m));
    const Vec asp = ah * sp;
    for (std::size_t i = 0; i < n; ++i) {
      const auto k = static_cast<Eigen::Index>(i);
      const double bracket = 2.0 * d_sbm[i] - 2.0 * (aw(k) * std::conj(am(k))).real() -
                             d_sbmbs[i] + std::norm(aw(k));
      g[i] += d_m[i] - std::norm(am(k)) - a * a * bracket +
              2.0 * a * (asp(k) * std::conj(aw(k) - am(k))).real();
    }
  }
  return g;
}

std::vector<double> dense_independent_gradient(const DenseSystem& sys,
                                               const MeasurementSet& meas) {
  require_meas(sys, meas);
  const Mat ah = sys.A.adjoint();
  auto g = dense_diag(sys, Sandwich::s_inv);
  const double inv_l = 1.0 / static_cast<double>(meas.size());
  for (const auto& look : meas.looks) {
    const auto q = abs_sq(ah * (sys.S_inv * to_vec(look)));
    for (std::size_t i = 0; i < g.size(); ++i) g[i] -= inv_l * q[i];
  }
  return g;
}

std::vector<cplx> dense_diag_complex(const DenseSystem& sys, Sandwich which) {
  Mat t;
  switch (which) {
    case Sandwich::s_inv: t = sys.S_inv; break;
    case Sandwich::m_inv: t = sys.M_inv; break;
    case Sandwich::sbm: t = sys.S_inv * sys.B * sys.M_inv; break;
    case Sandwich::sbmbs: t = sys.S_inv * sys.B * sys.M_inv * sys.B * sys.S_inv; break;
  }
  const Vec d = real_diag_sandwich(sys.A, t);
  return {d.data(), d.data() + d.size()};
}

std::vector<double> dense_diag(const DenseSystem& sys, Sandwich which) {
  const auto d = dense_diag_complex(sys, which);
  std::vector<double> out(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) out[i] = d[i].real();
  return out;
}

SandwichDiagonals dense_diagonals(const DenseSystem& sys) {
  return {dense_diag_complex(sys, Sandwich::s_inv), dense_diag_complex(sys, Sandwich::m_inv),
          dense_diag_complex(sys, Sandwich::sbm), dense_diag_complex(sys, Sandwich::sbmbs)};
}

std::vector<double> finite_difference(const std::function<double(const ReflectivityImage&)>& f,
                                      const ReflectivityImage& x,
                                      std::span<const std::size_t> indices, double h) {
  std::vector<double> out;
  out.reserve(indices.size());
  for (auto i : indices) {
    if (i >= x.size()) throw InvalidArgument("finite_difference: index out of range");
    RealGrid plus = x.values(), minus = x.values();
    plus[i] += h;
    minus[i] -= h;
    if (minus[i] < 0.0) throw InvalidArgument("finite_difference: step leaves the domain x >= 0");
    out.push_back((f(ReflectivityImage(plus)) - f(ReflectivityImage(minus))) / (2.0 * h));
  }
  return out;
}

}  // namespace speckle::oracle
