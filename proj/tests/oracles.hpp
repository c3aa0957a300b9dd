#pragma once

// Reference computations used by the tests. Each one takes a different route
// from the library code it is compared against: Kronecker-form linear solves
// instead of eigenbasis division, recursions instead of divided differences,
// scalar calculus, and classical formulas on joint distributions.

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <vector>

namespace oracle {

using cplx = std::complex<double>;
using Mat = Eigen::MatrixXcd;

/// Y X + X Y = Omega as one dense solve (I ⊗ Y + Yᵀ ⊗ I) vec X = vec Omega.
inline Mat sylvester_kron(const Mat& y, const Mat& omega) {
  const Eigen::Index n = y.rows();
  const Mat id = Mat::Identity(n, n);
  Mat op(n * n, n * n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) {
      op.block(i * n, j * n, n, n) = id(i, j) * y + y.transpose()(i, j) * id;
    }
  const Eigen::VectorXcd rhs = Eigen::Map<const Eigen::VectorXcd>(omega.data(), n * n);
  const Eigen::VectorXcd sol = op.fullPivLu().solve(rhs);
  return Eigen::Map<const Mat>(sol.data(), n, n);
}

/// A^s for Hermitian positive A, straight from Eigen's solver.
inline Mat hpow(const Mat& a, double s) {
  Eigen::SelfAdjointEigenSolver<Mat> es(a);
  const Eigen::VectorXd v = es.eigenvalues().array().pow(s);
  return es.eigenvectors() * v.cast<cplx>().asDiagonal() * es.eigenvectors().adjoint();
}

/// V_{1/2^j} for j = 1..m: √L V + V √L = F, then L^{1/2^j} V_j + V_j L^{1/2^j} = V_{j-1}.
inline std::vector<Mat> dyadic_root_derivatives(const Mat& l, const Mat& f, int m) {
  std::vector<Mat> out;
  Mat prev = f;
  for (int j = 1; j <= m; ++j) {
    prev = sylvester_kron(hpow(l, std::ldexp(1.0, -j)), prev);
    out.push_back(prev);
  }
  return out;
}

/// d/dε (L + εF)^{k/2^m}: the product of k copies of L^{1/2^m} differentiated term by term.
inline Mat power_derivative_recursion(const Mat& l, const Mat& f, int k, int m) {
  const Mat v = dyadic_root_derivatives(l, f, m).back();
  const Mat root = hpow(l, std::ldexp(1.0, -m));
  const Eigen::Index n = l.rows();
  std::vector<Mat> pw{Mat::Identity(n, n)};
  for (int j = 1; j < k; ++j) pw.push_back(pw.back() * root);
  Mat acc = Mat::Zero(n, n);
  for (int j = 0; j < k; ++j) acc += pw[j] * v * pw[k - 1 - j];
  return acc;
}

/// f[x, y, z] for f(x) = x^q, by the contour-free formula on distinct points
/// and by nested limits when points coincide (to relative 1e-7).
inline double dd2_power(double x, double y, double z, double q) {
  auto f = [q](double t) { return std::pow(t, q); };
  auto d1 = [&](double a, double b) {
    if (std::abs(a - b) < 1e-7 * (a + b)) return q * std::pow(0.5 * (a + b), q - 1.0);
    return (f(a) - f(b)) / (a - b);
  };
  if (std::abs(x - z) < 1e-7 * (x + z)) {
    if (std::abs(x - y) < 1e-7 * (x + y)) return 0.5 * q * (q - 1.0) * std::pow((x + y + z) / 3.0, q - 2.0);
    return (d1(y, x) - q * std::pow(x, q - 1.0)) / (y - x);
  }
  return (d1(x, y) - d1(y, z)) / (x - z);
}

/// K with (L + εF)^q = L^q + εF_q − ε²K + O(ε³): K = −Σ_k f[d_i,d_k,d_j] F_ik F_kj in L's eigenbasis.
inline Mat power_second_order(const Mat& l, const Mat& f, double q) {
  Eigen::SelfAdjointEigenSolver<Mat> es(l);
  const Eigen::VectorXd d = es.eigenvalues();
  const Mat fh = es.eigenvectors().adjoint() * f * es.eigenvectors();
  const Eigen::Index n = l.rows();
  Mat k = Mat::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      for (Eigen::Index m = 0; m < n; ++m) k(i, j) -= dd2_power(d(i), d(m), d(j), q) * fh(i, m) * fh(m, j);
  return es.eigenvectors() * k * es.eigenvectors().adjoint();
}

/// Cross for scalars: −½ d²/dε² √((a + εx)(b + εz)) at 0.
inline double scalar_cross(double a, double b, double x, double z) {
  const double u = x * b - z * a;
  return u * u / (8.0 * std::pow(a * b, 1.5));
}

/// d²/dε² (ψ + εv)^q (φ + εw)^r at 0.
inline double scalar_lieb_second(double psi, double phi, double v, double w, double q, double r) {
  const double a = std::pow(psi, q), b = std::pow(phi, r);
  const double a1 = q * v / psi, b1 = r * w / phi;
  const double a2 = q * (q - 1.0) * v * v / (psi * psi), b2 = r * (r - 1.0) * w * w / (phi * phi);
  return a * b * (a2 + 2.0 * a1 * b1 + b2);
}

/// Directions with E2 + E1 Psi = 0: X = M A^{-1/2} g A^{-1/2} M and
/// Z = M A^{-1/2} g S A^{-1/2} M, where S = A^{-1/2} B A^{-1/2} and g is any
/// Hermitian matrix commuting with S (here a function of S given on its spectrum).
struct IffDirections {
  Mat x, z;
};

inline IffDirections iff_directions(const Mat& a, const Mat& b, const Eigen::VectorXd& g_on_spectrum) {
  const Mat m = 0.5 * (a + b);
  const Mat aih = hpow(a, -0.5);
  Mat s = aih * b * aih;
  s = 0.5 * (s + s.adjoint());
  Eigen::SelfAdjointEigenSolver<Mat> es(s);
  const Mat g = es.eigenvectors() * g_on_spectrum.cast<cplx>().asDiagonal() * es.eigenvectors().adjoint();
  IffDirections d;
  d.x = m * aih * g * aih * m;
  d.z = m * aih * g * s * aih * m;
  d.x = 0.5 * (d.x + d.x.adjoint());
  d.z = 0.5 * (d.z + d.z.adjoint());
  return d;
}

/// I(A:C|B) in bits for a joint distribution p[a][b][c].
inline double classical_cmi(const std::vector<std::vector<std::vector<double>>>& p) {
  const std::size_t na = p.size(), nb = p[0].size(), nc = p[0][0].size();
  std::vector<double> pb(nb, 0.0);
  std::vector<std::vector<double>> pab(na, std::vector<double>(nb, 0.0)), pbc(nb, std::vector<double>(nc, 0.0));
  for (std::size_t a = 0; a < na; ++a)
    for (std::size_t b = 0; b < nb; ++b)
      for (std::size_t c = 0; c < nc; ++c) {
        pb[b] += p[a][b][c];
        pab[a][b] += p[a][b][c];
        pbc[b][c] += p[a][b][c];
      }
  double s = 0.0;
  for (std::size_t a = 0; a < na; ++a)
    for (std::size_t b = 0; b < nb; ++b)
      for (std::size_t c = 0; c < nc; ++c)
        if (p[a][b][c] > 0.0) s += p[a][b][c] * std::log2(p[a][b][c] * pb[b] / (pab[a][b] * pbc[b][c]));
  return s;
}

/// ∫_0^∞ e^{-tY} Ω e^{-tY} dt by composite 8-point Gauss–Legendre on
/// [0, 40/λmin(Y)], in Y's eigenbasis.
inline Mat lyapunov_integral(const Mat& y, const Mat& omega, int panels = 400) {
  Eigen::SelfAdjointEigenSolver<Mat> es(y);
  const Eigen::VectorXd d = es.eigenvalues();
  const Mat oh = es.eigenvectors().adjoint() * omega * es.eigenvectors();
  static const double xg[4] = {0.1834346424956498, 0.5255324099163290, 0.7966664774136267, 0.9602898564975363};
  static const double wg[4] = {0.3626837833783620, 0.3137066458778873, 0.2223810344533745, 0.1012285362903763};
  const double len = 40.0 / d(0), h = len / panels;
  const Eigen::Index n = y.rows();
  Mat acc = Mat::Zero(n, n);
  for (int p = 0; p < panels; ++p) {
    const double mid = (p + 0.5) * h;
    for (int g = 0; g < 4; ++g)
      for (int sgn : {-1, 1}) {
        const double t = mid + sgn * 0.5 * h * xg[g];
        const Eigen::VectorXd e = (-t * d).array().exp();
        acc += (0.5 * h * wg[g]) * (e.cast<cplx>().asDiagonal() * oh * e.cast<cplx>().asDiagonal());
      }
  }
  return es.eigenvectors() * acc * es.eigenvectors().adjoint();
}

}  // namespace oracle
