#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <functional>
#include <memory>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "qmi/errors.hpp"

namespace qmi {

using cplx = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;
using RealMatrix = Eigen::MatrixXd;

namespace tol {
inline constexpr double hermiticity = 1e-10;
inline constexpr double pd_floor = 1e-12;
inline constexpr double eig = 1e-10;
}  // namespace tol

inline bool all_finite(const Matrix& m) {
  for (Eigen::Index j = 0; j < m.cols(); ++j)
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      if (!std::isfinite(m(i, j).real()) || !std::isfinite(m(i, j).imag())) return false;
  return true;
}

/// Largest singular value.
inline double operator_norm(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  if (!all_finite(m)) throw InvalidInput("operator_norm: non-finite entry");
  if (m.rows() == m.cols() && (m - m.adjoint()).cwiseAbs().maxCoeff() == 0.0) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(m, Eigen::EigenvaluesOnly);
    return es.eigenvalues().cwiseAbs().maxCoeff();
  }
  Eigen::JacobiSVD<Matrix> svd(m);
  return svd.singularValues()(0);
}

inline Matrix hermitian_part(const Matrix& m) { return (m + m.adjoint()) * 0.5; }

/// Square complex matrix, Hermitian up to tol::hermiticity and stored symmetrized.
class HermitianMatrix {
 public:
  HermitianMatrix() = default;

  explicit HermitianMatrix(const Matrix& m, double hermiticity_tol = tol::hermiticity) {
    if (m.rows() != m.cols() || m.rows() == 0)
      throw InvalidInput("HermitianMatrix: matrix must be square and non-empty");
    if (!all_finite(m)) throw InvalidInput("HermitianMatrix: non-finite entry");
    const double skew = operator_norm(m - m.adjoint());
    if (skew > hermiticity_tol * (1.0 + operator_norm(m))) {
      std::ostringstream os;
      os << "HermitianMatrix: ||M - M*|| = " << skew << " exceeds tolerance";
      throw InvalidInput(os.str());
    }
    m_ = hermitian_part(m);
  }

  /// Symmetrizes without the tolerance check. For results that are Hermitian
  /// by construction.
  static HermitianMatrix trusted(const Matrix& m) {
    HermitianMatrix h;
    h.m_ = hermitian_part(m);
    return h;
  }

  static HermitianMatrix zero(Eigen::Index n) { return trusted(Matrix::Zero(n, n)); }
  static HermitianMatrix identity(Eigen::Index n) { return trusted(Matrix::Identity(n, n)); }

  Eigen::Index dim() const { return m_.rows(); }
  const Matrix& mat() const { return m_; }
  operator const Matrix&() const { return m_; }

  friend HermitianMatrix operator+(const HermitianMatrix& a, const HermitianMatrix& b) {
    return trusted(a.m_ + b.m_);
  }
  friend HermitianMatrix operator-(const HermitianMatrix& a, const HermitianMatrix& b) {
    return trusted(a.m_ - b.m_);
  }
  friend HermitianMatrix operator*(double s, const HermitianMatrix& a) { return trusted(s * a.m_); }

 private:
  Matrix m_;
};

/// Eigenvalues ascending, eigenvectors in the columns. Each eigenvector is
/// rotated so that its first component above 1e-12 in modulus is real positive.
struct SpectralDecomposition {
  RealVector values;
  Matrix vectors;

  Eigen::Index dim() const { return values.size(); }

  template <class F>
  Matrix apply(F&& f) const {
    const Eigen::Index n = dim();
    RealVector fv(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double y = f(values(i));
      if (!std::isfinite(y)) {
        std::ostringstream os;
        os << "matrix_function: f undefined at eigenvalue " << values(i);
        throw DomainError(os.str());
      }
      fv(i) = y;
    }
    return vectors * fv.asDiagonal() * vectors.adjoint();
  }

  Matrix reconstruct() const { return vectors * values.asDiagonal() * vectors.adjoint(); }
};

inline void fix_phases(Matrix& u) {
  for (Eigen::Index j = 0; j < u.cols(); ++j) {
    for (Eigen::Index i = 0; i < u.rows(); ++i) {
      const double a = std::abs(u(i, j));
      if (a > 1e-12) {
        u.col(j) *= std::conj(u(i, j)) / a;
        u(i, j) = cplx(u(i, j).real(), 0.0);
        break;
      }
    }
  }
}

inline SpectralDecomposition hermitian_eig(const Matrix& herm) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(herm);
  if (es.info() != Eigen::Success) throw NumericalFailure("hermitian_eig: solver did not converge");
  SpectralDecomposition sd{es.eigenvalues(), es.eigenvectors()};
  fix_phases(sd.vectors);
  const double scale = 1.0 + sd.values.cwiseAbs().maxCoeff();
  const double n = static_cast<double>(herm.rows());
  const double resid = (sd.reconstruct() - herm).cwiseAbs().maxCoeff() * n;
  if (!(resid <= tol::eig * scale)) {
    std::ostringstream os;
    os << "hermitian_eig: reconstruction residual " << resid;
    throw NumericalFailure(os.str());
  }
  return sd;
}

inline SpectralDecomposition hermitian_eig(const HermitianMatrix& m) { return hermitian_eig(m.mat()); }

/// Hermitian matrix whose smallest eigenvalue is at least pd_floor times the
/// largest. The eigendecomposition is computed once and shared between copies.
class PositiveDefiniteMatrix {
 public:
  PositiveDefiniteMatrix() = default;

  explicit PositiveDefiniteMatrix(const HermitianMatrix& h, double pd_floor = tol::pd_floor)
      : h_(h), eig_(std::make_shared<const SpectralDecomposition>(hermitian_eig(h))) {
    const double lmin = eig_->values(0);
    const double lmax = eig_->values(eig_->dim() - 1);
    if (!(lmin > 0.0) || lmin < pd_floor * lmax) {
      std::ostringstream os;
      os << "PositiveDefiniteMatrix: smallest eigenvalue " << lmin << " below floor";
      throw InvalidInput(os.str());
    }
  }

  explicit PositiveDefiniteMatrix(const Matrix& m, double pd_floor = tol::pd_floor)
      : PositiveDefiniteMatrix(HermitianMatrix(m), pd_floor) {}

  Eigen::Index dim() const { return h_.dim(); }
  const Matrix& mat() const { return h_.mat(); }
  const HermitianMatrix& herm() const { return h_; }
  operator const Matrix&() const { return h_.mat(); }
  const SpectralDecomposition& eig() const { return *eig_; }
  double min_eigenvalue() const { return eig_->values(0); }
  double max_eigenvalue() const { return eig_->values(eig_->dim() - 1); }

  /// Real power (any sign) through the cached eigendecomposition.
  Matrix pow(double q) const {
    if (q == 0.0) return Matrix::Identity(dim(), dim());
    if (q == 1.0) return mat();
    return eig_->apply([q](double x) { return std::pow(x, q); });
  }
  Matrix log2() const {
    return eig_->apply([](double x) { return std::log2(x); });
  }

 private:
  HermitianMatrix h_;
  std::shared_ptr<const SpectralDecomposition> eig_;
};

template <class F>
HermitianMatrix matrix_function(const HermitianMatrix& m, F&& f) {
  return HermitianMatrix::trusted(hermitian_eig(m).apply(std::forward<F>(f)));
}

template <class F>
HermitianMatrix matrix_function(const PositiveDefiniteMatrix& m, F&& f) {
  return HermitianMatrix::trusted(m.eig().apply(std::forward<F>(f)));
}

/// Row-major block convention: (i1*r2 + i2, j1*c2 + j2) -> a(i1,j1) b(i2,j2).
inline Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

/// Row-major vectorization, V_K[i*M + j] = K(i,j).
inline Vector vec_embed(const Matrix& k) {
  Vector v(k.size());
  for (Eigen::Index i = 0; i < k.rows(); ++i)
    for (Eigen::Index j = 0; j < k.cols(); ++j) v(i * k.cols() + j) = k(i, j);
  return v;
}

/// The tensor-space operator T with Tr(K* A K B) = <V_K, T V_K>.
/// Under row-major vec this is A ⊗ conj(B).
inline Matrix pairing_operator(const Matrix& a, const Matrix& b) { return kron(a, b.conjugate()); }

/// Second factor of a pairing operator as it must be stored for Tr(K* A K B).
inline Matrix pairing_factor(const Matrix& b) { return b.conjugate(); }

inline double pairing(const Vector& v, const Matrix& t) { return v.dot(t * v).real(); }

inline double pairing(const Matrix& k, const Matrix& a, const Matrix& b) {
  return pairing(vec_embed(k), pairing_operator(a, b));
}

/// Solves Y X + X Y = Omega in Y's eigenbasis. Works for any square Omega.
inline Matrix sylvester_solve(const SpectralDecomposition& y, const Matrix& omega) {
  const Matrix& u = y.vectors;
  Matrix t = u.adjoint() * omega * u;
  for (Eigen::Index l = 0; l < t.cols(); ++l)
    for (Eigen::Index k = 0; k < t.rows(); ++k) t(k, l) /= (y.values(k) + y.values(l));
  return u * t * u.adjoint();
}

inline HermitianMatrix sylvester_solve(const PositiveDefiniteMatrix& y, const HermitianMatrix& omega) {
  if (y.dim() != omega.dim()) throw InvalidInput("sylvester_solve: dimension mismatch");
  return HermitianMatrix::trusted(sylvester_solve(y.eig(), omega.mat()));
}

/// Traces out the listed factors of a matrix on d_1 ⊗ ... ⊗ d_m (first factor
/// most significant). Kept factors retain their order.
inline Matrix partial_trace(const Matrix& m, const std::vector<int>& dims, const std::vector<int>& traced) {
  const int nf = static_cast<int>(dims.size());
  long total = 1;
  for (int d : dims) {
    if (d < 1) throw InvalidInput("partial_trace: factor dimension must be positive");
    total *= d;
  }
  if (m.rows() != total || m.cols() != total) throw InvalidInput("partial_trace: dimension mismatch");
  std::vector<bool> is_traced(nf, false);
  for (int f : traced) {
    if (f < 0 || f >= nf) throw InvalidInput("partial_trace: factor index out of range");
    is_traced[f] = true;
  }
  long kept = 1;
  for (int f = 0; f < nf; ++f)
    if (!is_traced[f]) kept *= dims[f];

  // Split a full index into (kept index, traced index).
  auto split = [&](long idx, long& k, long& t) {
    std::vector<int> digits(nf);
    for (int f = nf - 1; f >= 0; --f) {
      digits[f] = static_cast<int>(idx % dims[f]);
      idx /= dims[f];
    }
    k = 0;
    t = 0;
    for (int f = 0; f < nf; ++f) {
      if (is_traced[f]) t = t * dims[f] + digits[f];
      else k = k * dims[f] + digits[f];
    }
  };
  std::vector<long> kidx(total), tidx(total);
  for (long i = 0; i < total; ++i) split(i, kidx[i], tidx[i]);

  Matrix out = Matrix::Zero(kept, kept);
  for (long i = 0; i < total; ++i)
    for (long j = 0; j < total; ++j)
      if (tidx[i] == tidx[j]) out(kidx[i], kidx[j]) += m(i, j);
  return out;
}

inline HermitianMatrix partial_trace(const HermitianMatrix& m, const std::vector<int>& dims,
                                     const std::vector<int>& traced) {
  return HermitianMatrix::trusted(partial_trace(m.mat(), dims, traced));
}

/// Tr(f(A)) summed over the spectrum, e.g. von Neumann entropy.
template <class F>
double spectral_sum(const PositiveDefiniteMatrix& a, F&& f) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < a.eig().dim(); ++i) s += f(a.eig().values(i));
  return s;
}

/// Pairwise tree sum over an ordered range.
template <class T>
T pairwise_sum(const std::vector<T>& xs, std::size_t lo, std::size_t hi) {
  if (hi - lo == 1) return xs[lo];
  const std::size_t mid = lo + (hi - lo) / 2;
  return pairwise_sum(xs, lo, mid) + pairwise_sum(xs, mid, hi);
}

template <class T>
T pairwise_sum(const std::vector<T>& xs) {
  if (xs.empty()) throw InternalError("pairwise_sum: empty range");
  return pairwise_sum(xs, 0, xs.size());
}

}  // namespace qmi
