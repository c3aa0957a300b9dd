#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>

#include "qmi/linalg.hpp"
#include "qmi/quadrature.hpp"
#include "qmi/report.hpp"

namespace qmi {

struct MeanPair {
  PositiveDefiniteMatrix A, B;
  MeanPair(PositiveDefiniteMatrix a, PositiveDefiniteMatrix b) : A(std::move(a)), B(std::move(b)) {
    if (A.dim() != B.dim()) throw InvalidInput("MeanPair: dimension mismatch");
  }
  Eigen::Index dim() const { return A.dim(); }
};

struct DirectionPair {
  HermitianMatrix X, Z;
  DirectionPair(HermitianMatrix x, HermitianMatrix z) : X(std::move(x)), Z(std::move(z)) {
    if (X.dim() != Z.dim()) throw InvalidInput("DirectionPair: dimension mismatch");
  }
};

/// Psi = M^{-1/2} (A-B)/2 M^{-1/2}, E2 = M^{-1/2} (X-Z)/2 M^{-1/2},
/// E1 = -M^{-1/2} (X+Z)/2 M^{-1/2}, with M = (A+B)/2.
struct CrossIngredients {
  HermitianMatrix Psi, E1, E2;

  /// (I - Psi²/(1+s))^{-1}.
  Matrix psi_tilde(double s) const {
    const Eigen::Index n = Psi.dim();
    const Matrix p2 = Psi.mat() * Psi.mat();
    return (Matrix::Identity(n, n) - p2 / (1.0 + s)).inverse();
  }
  /// Σ_{k≤kmax} (Psi²/(1+s))^k.
  Matrix psi_tilde_series(double s, int kmax) const {
    const Eigen::Index n = Psi.dim();
    const Matrix step = Psi.mat() * Psi.mat() / (1.0 + s);
    Matrix term = Matrix::Identity(n, n), sum = term;
    for (int k = 1; k <= kmax; ++k) {
      term = term * step;
      sum += term;
    }
    return sum;
  }
  /// E2 + E1 Psi. Cross vanishes exactly when this does.
  Matrix defect() const { return E2.mat() + E1.mat() * Psi.mat(); }
};

enum class CrossMethod { quadrature, closed_form };

inline std::string to_string(CrossMethod m) { return m == CrossMethod::quadrature ? "quadrature" : "closed_form"; }

inline CrossMethod parse_cross_method(const std::string& s) {
  if (s == "quadrature") return CrossMethod::quadrature;
  if (s == "closed_form") return CrossMethod::closed_form;
  throw InvalidInput("unknown cross method '" + s + "'");
}

struct CrossOptions {
  CrossMethod method = CrossMethod::quadrature;
  int nodes = 200;             // upper bound on θ-nodes
  bool adaptive_nodes = true;  // pick the count from the analyticity strip of the integrand
  double psd_slack = 1e-10;
};

namespace detail {

inline const QuadratureRule& cached_half_line_rule(int n) {
  static std::mutex mu;
  static std::map<int, QuadratureRule> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(n);
  if (it == cache.end()) it = cache.emplace(n, half_line_sqrt_rule(n)).first;
  return it->second;
}

/// θ-node count for target relative accuracy ~1e-17, given ‖Psi‖ = pmax. The
/// θ-integrand is analytic except at cos²θ = 1/pmax², i.e. θ = i·acosh(1/pmax).
inline int cross_node_count(double pmax, const CrossOptions& opt) {
  if (!opt.adaptive_nodes) return opt.nodes;
  const int floor_nodes = std::min(16, opt.nodes);
  if (pmax < 1e-12) return floor_nodes;
  const double beta = std::acosh(1.0 / pmax);
  const std::complex<double> x(-1.0, 4.0 / std::numbers::pi * beta);
  std::complex<double> w = x + std::sqrt(x * x - 1.0);
  double rho = std::abs(w);
  rho = std::max(rho, 1.0 / rho);
  if (!(rho > 1.0 + 1e-12)) return opt.nodes;
  const int need = static_cast<int>(std::ceil(std::log(1e17) / (2.0 * std::log(rho)))) + 8;
  return std::clamp(need, floor_nodes, opt.nodes);
}

struct CrossSetup {
  Eigen::Index n = 0;
  Matrix m_half;       // M^{1/2}
  RealVector p;        // eigenvalues of Psi
  Matrix v;            // eigenvectors of Psi
  Matrix g1;           // W* W in Psi's eigenbasis
  Matrix bm;           // (W* Psi + Psi W*) in Psi's eigenbasis
};

inline CrossSetup cross_setup(const Matrix& a, const Matrix& b, const Matrix& x, const Matrix& z) {
  const Eigen::Index n = a.rows();
  const SpectralDecomposition meig = hermitian_eig(hermitian_part((a + b) * 0.5));
  if (!(meig.values(0) > 0.0)) throw InvalidInput("cross: (A+B)/2 is not positive definite");
  CrossSetup cs;
  cs.n = n;
  cs.m_half = meig.apply([](double t) { return std::sqrt(t); });
  const Matrix mih = meig.apply([](double t) { return 1.0 / std::sqrt(t); });
  const Matrix psi = hermitian_part(mih * ((a - b) * 0.5) * mih);
  const Matrix e2 = mih * ((x - z) * 0.5) * mih;
  const Matrix e1 = -(mih * ((x + z) * 0.5) * mih);
  const Matrix w = e2 + e1 * psi;
  const SpectralDecomposition peig = hermitian_eig(psi);
  const double pmax = peig.values.cwiseAbs().maxCoeff();
  if (!(pmax < 1.0)) throw InternalError("cross: ||Psi|| >= 1, inputs were not positive definite");
  cs.p = peig.values;
  cs.v = peig.vectors;
  const Matrix wh = cs.v.adjoint() * w * cs.v;
  const Matrix ws = wh.adjoint();
  cs.g1 = ws * wh;
  cs.bm = ws;
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index k = 0; k < n; ++k) cs.bm(i, k) *= (cs.p(i) + cs.p(k));
  return cs;
}

inline Matrix cross_finish(const CrossSetup& cs, const Matrix& t) {
  return hermitian_part(cs.m_half * (cs.v * t * cs.v.adjoint()) * cs.m_half / std::numbers::pi);
}

inline void check_psd(const Matrix& c, double slack, const char* what) {
  const double scale = operator_norm(c);
  if (scale == 0.0) return;
  const double lmin = hermitian_eig(c).values(0);
  if (lmin < -slack * scale) {
    std::ostringstream os;
    os << what << ": smallest eigenvalue " << lmin << " below -slack*scale";
    throw NumericalFailure(os.str());
  }
}

/// Sufficient PSD test without an eigensolve: C + slack·‖C‖_F·I admits an LDLT
/// with nonnegative pivots.
inline void check_psd_cheap(const Matrix& c, double slack, const char* what) {
  const double scale = c.norm();
  if (scale == 0.0) return;
  Matrix shifted = c;
  shifted.diagonal().array() += slack * scale;
  Eigen::LDLT<Matrix> ldlt(shifted);
  if (ldlt.info() != Eigen::Success || (ldlt.vectorD().real().array() < 0.0).any())
    throw NumericalFailure(std::string(what) + ": result is not positive semidefinite within slack");
}

}  // namespace detail

inline PositiveDefiniteMatrix geometric_mean(const MeanPair& pair) {
  const SpectralDecomposition& be = pair.B.eig();
  const Matrix bh = be.apply([](double t) { return std::sqrt(t); });
  const Matrix bih = be.apply([](double t) { return 1.0 / std::sqrt(t); });
  const Matrix inner = hermitian_part(bih * pair.A.mat() * bih);
  const Matrix root = hermitian_eig(inner).apply([](double t) { return std::sqrt(std::max(t, 0.0)); });
  return PositiveDefiniteMatrix(HermitianMatrix::trusted(bh * root * bh));
}

inline CrossIngredients cross_ingredients(const MeanPair& pair, const DirectionPair& dirs) {
  if (dirs.X.dim() != pair.dim()) throw InvalidInput("cross_ingredients: dimension mismatch");
  const SpectralDecomposition meig = hermitian_eig(hermitian_part((pair.A.mat() + pair.B.mat()) * 0.5));
  const Matrix mih = meig.apply([](double t) { return 1.0 / std::sqrt(t); });
  CrossIngredients ci{
      HermitianMatrix::trusted(mih * ((pair.A.mat() - pair.B.mat()) * 0.5) * mih),
      HermitianMatrix::trusted(-(mih * ((dirs.X.mat() + dirs.Z.mat()) * 0.5) * mih)),
      HermitianMatrix::trusted(mih * ((dirs.X.mat() - dirs.Z.mat()) * 0.5) * mih)};
  if (!(operator_norm(ci.Psi) < 1.0)) throw InternalError("cross_ingredients: ||Psi|| >= 1");
  return ci;
}

/// Exact Cross: with β = 1 - Psi eigenvalues² and C_ij = 1/(√β_i + √β_j),
///   ∫ s^{1/2} / ((s+β_i)(s+β_j)) ds = π C_ij,
///   ∫ s^{1/2} / ((s+β_i)(s+β_k)(s+β_j)) ds = π C_ik C_kj C_ij,
/// so the bracket in Psi's eigenbasis is π · C∘(W*W + (Bm∘C)(Bm∘C)*).
namespace detail {

/// π C∘(G1 + (Bm∘C)(Bm∘C)*), C_ij = 1/(√(1−p_i²) + √(1−p_j²)).
inline Matrix closed_form_core(const RealVector& p, const Matrix& g1, const Matrix& bm) {
  const Eigen::Index n = p.size();
  RealVector sb(n);
  for (Eigen::Index i = 0; i < n; ++i) sb(i) = std::sqrt((1.0 - p(i)) * (1.0 + p(i)));
  Matrix c(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) c(i, j) = 1.0 / (sb(i) + sb(j));
  const Matrix bc = bm.cwiseProduct(c);
  return c.cwiseProduct(g1 + bc * bc.adjoint()) * std::numbers::pi;
}

}  // namespace detail

inline Matrix cross_closed_form_raw(const Matrix& a, const Matrix& b, const Matrix& x, const Matrix& z,
                                    double psd_slack = 1e-10) {
  const Eigen::Index n = a.rows();
  if (x.cwiseAbs().maxCoeff() == 0.0 && z.cwiseAbs().maxCoeff() == 0.0) return Matrix::Zero(n, n);
  const detail::CrossSetup cs = detail::cross_setup(a, b, x, z);
  Matrix out = detail::cross_finish(cs, detail::closed_form_core(cs.p, cs.g1, cs.bm));
  if (!all_finite(out)) throw NumericalFailure("cross: non-finite result");
  detail::check_psd(out, psd_slack, "cross");
  return out;
}

/// Closed-form Cross for commuting A = diag(a), B = diag(b), with X and Z
/// given in the same basis. Result in that basis; no PSD check.
inline Matrix cross_commuting_raw(const RealVector& a, const RealVector& b, const Matrix& x, const Matrix& z) {
  const Eigen::Index n = a.size();
  RealVector mh(n), mih(n), p(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double m = 0.5 * (a(i) + b(i));
    if (!(m > 0.0)) throw InvalidInput("cross: (A+B)/2 is not positive definite");
    mh(i) = std::sqrt(m);
    mih(i) = 1.0 / mh(i);
    p(i) = 0.5 * (a(i) - b(i)) / m;
  }
  if (!(p.cwiseAbs().maxCoeff() < 1.0)) throw InternalError("cross: ||Psi|| >= 1, inputs were not positive definite");
  // W = E2 + E1 Psi with E2 = M^{-1/2}(X−Z)/2 M^{-1/2}, E1 = −M^{-1/2}(X+Z)/2 M^{-1/2}.
  Matrix w(n, n);
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index i = 0; i < n; ++i)
      w(i, j) = mih(i) * mih(j) * 0.5 * ((x(i, j) - z(i, j)) - (x(i, j) + z(i, j)) * p(j));
  const Matrix ws = w.adjoint();
  Matrix bm = ws;
  for (Eigen::Index k = 0; k < n; ++k)
    for (Eigen::Index i = 0; i < n; ++i) bm(i, k) *= (p(i) + p(k));
  Matrix t = detail::closed_form_core(p, ws * w, bm);
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index i = 0; i < n; ++i) t(i, j) *= mh(i) * mh(j) / std::numbers::pi;
  if (!all_finite(t)) throw NumericalFailure("cross: non-finite result");
  return hermitian_part(t);
}

inline HermitianMatrix cross_closed_form(const MeanPair& pair, const DirectionPair& dirs, double psd_slack = 1e-10) {
  if (dirs.X.dim() != pair.dim()) throw InvalidInput("cross: dimension mismatch");
  return HermitianMatrix::trusted(
      cross_closed_form_raw(pair.A.mat(), pair.B.mat(), dirs.X.mat(), dirs.Z.mat(), psd_slack));
}

/// Cross on raw matrices. A, B must be positive definite and X, Z Hermitian;
/// only (A+B)/2 is checked. With c = 1/(1+s), R = (I - c Psi²)^{-1},
/// W = E2 + E1 Psi:
///   Cross = (1/π) M^{1/2} ∫_0^∞ s^{1/2} c [c R W*W R
///                 + c² R (W*Psi + Psi W*) R (Psi W + W Psi) R] ds M^{1/2}.
/// Evaluated in Psi's eigenbasis, θ-nodes accumulated in node order.
inline Matrix cross_raw(const Matrix& a, const Matrix& b, const Matrix& x, const Matrix& z,
                        const CrossOptions& opt = {}) {
  if (opt.method == CrossMethod::closed_form) return cross_closed_form_raw(a, b, x, z, opt.psd_slack);
  const Eigen::Index n = a.rows();
  if (x.cwiseAbs().maxCoeff() == 0.0 && z.cwiseAbs().maxCoeff() == 0.0) return Matrix::Zero(n, n);
  const detail::CrossSetup cs = detail::cross_setup(a, b, x, z);
  const int nodes = detail::cross_node_count(cs.p.cwiseAbs().maxCoeff(), opt);
  const QuadratureRule& rule = detail::cached_half_line_rule(nodes);

  RealMatrix acc1 = RealMatrix::Zero(n, n);
  Matrix acc2 = Matrix::Zero(n, n);
  RealVector r(n);
  Matrix cm(n, n), prod(n, n);
  const Matrix bm_adj = cs.bm.adjoint();
  for (std::size_t i = 0; i < rule.size(); ++i) {
    const double s = rule.nodes[i];
    const double c = 1.0 / (1.0 + s);
    const double f = rule.weights[i] * s * c;
    for (Eigen::Index j = 0; j < n; ++j) r(j) = 1.0 / (1.0 - c * cs.p(j) * cs.p(j));
    acc1.noalias() += (f * c) * (r * r.transpose());
    cm.noalias() = cs.bm * r.asDiagonal();
    prod.noalias() = cm * bm_adj;
    acc2.noalias() += (f * c * c) * (r.asDiagonal() * prod * r.asDiagonal());
  }
  Matrix t = cs.g1.cwiseProduct(acc1.cast<cplx>()) + acc2;
  Matrix out = detail::cross_finish(cs, t);
  if (!all_finite(out)) throw NumericalFailure("cross: non-finite result");
  detail::check_psd(out, opt.psd_slack, "cross");
  return out;
}

inline HermitianMatrix cross(const MeanPair& pair, const DirectionPair& dirs, const CrossOptions& opt = {}) {
  if (dirs.X.dim() != pair.dim()) throw InvalidInput("cross: dimension mismatch");
  return HermitianMatrix::trusted(cross_raw(pair.A.mat(), pair.B.mat(), dirs.X.mat(), dirs.Z.mat(), opt));
}

/// Closed-form Cross: with α = Psi eigenvalues squared, expand the resolvents
/// in powers of c and integrate term by term,
///   ∫ s^{1/2}(1+s)^{-(m+2)} ds = B(3/2, m+1/2),
/// summing complete homogeneous polynomials h_m(α_i, α_j) and h_m(α_i, α_k, α_j).
inline HermitianMatrix cross_beta_series(const MeanPair& pair, const DirectionPair& dirs,
                                         double rel_tol = 1e-17, long max_terms = 2000000) {
  const Eigen::Index n = pair.dim();
  const detail::CrossSetup cs = detail::cross_setup(pair.A.mat(), pair.B.mat(), dirs.X.mat(), dirs.Z.mat());
  RealVector al(n);
  for (Eigen::Index i = 0; i < n; ++i) al(i) = cs.p(i) * cs.p(i);

  // Σ_m h_m(xs) B(3/2, m + b_off), using B(3/2, y+1)/B(3/2, y) = y/(y + 3/2).
  auto sum_series = [&](std::vector<double> xs, double b0, double b_off) {
    std::vector<double> h(xs.size(), 1.0);  // h_m over prefixes
    double bm = b0, total = 0.0;
    for (long m = 0; m < max_terms; ++m) {
      if (m > 0) {
        double prev = 0.0;
        for (std::size_t q = 0; q < xs.size(); ++q) {
          // h_m(x_1..x_q) = h_m(x_1..x_{q-1}) + x_q h_{m-1}(x_1..x_q)
          h[q] = prev + xs[q] * h[q];
          prev = h[q];
        }
        bm *= (m - 1 + b_off) / (m - 1 + b_off + 1.5);
      }
      const double term = h.back() * bm;
      total += term;
      if (m > 8 && term < rel_tol * total) return total;
    }
    throw NumericalFailure("cross_beta_series: series did not converge");
  };

  Matrix t = Matrix::Zero(n, n);
  const double b1 = std::numbers::pi / 2;  // B(3/2, 1/2)
  const double b2 = std::numbers::pi / 8;  // B(3/2, 3/2)
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) {
      t(i, j) += cs.g1(i, j) * sum_series({al(i), al(j)}, b1, 0.5);
      for (Eigen::Index k = 0; k < n; ++k)
        t(i, j) += cs.bm(i, k) * std::conj(cs.bm(j, k)) * sum_series({al(i), al(k), al(j)}, b2, 1.5);
    }
  return HermitianMatrix::trusted(detail::cross_finish(cs, t));
}

/// Default step base · min(1, λmin(A), λmin(B)), shrunk further only when
/// ‖X‖ + ‖Z‖ > 100 so the perturbed matrices stay positive definite.
inline double default_fd_step(const MeanPair& pair, const DirectionPair& dirs, double base = 1e-3) {
  const double lam = std::min({1.0, pair.A.min_eigenvalue(), pair.B.min_eigenvalue()});
  const double dn = operator_norm(dirs.X) + operator_norm(dirs.Z);
  return base * lam / std::max(1.0, dn / 100.0);
}

/// Central second difference of the geometric mean along (A + hX, B + hZ).
inline HermitianMatrix mean_second_derivative_fd(const MeanPair& pair, const DirectionPair& dirs, double h) {
  auto at = [&](double e) {
    try {
      return geometric_mean(MeanPair(PositiveDefiniteMatrix(HermitianMatrix::trusted(pair.A.mat() + e * dirs.X.mat())),
                                     PositiveDefiniteMatrix(HermitianMatrix::trusted(pair.B.mat() + e * dirs.Z.mat()))))
          .mat();
    } catch (const InvalidInput&) {
      throw InvalidInput("mean_second_derivative_fd: perturbed matrix not positive definite, use a smaller step");
    }
  };
  const Matrix h0 = geometric_mean(pair).mat();
  return HermitianMatrix::trusted((at(h) - 2.0 * h0 + at(-h)) / (h * h));
}

/// Second derivative of t ↦ M₀(tA1+(1-t)A2, tB1+(1-t)B2) is -2 Cross along
/// (A1-A2, B1-B2). Checks its sign, agreement with finite differences, and
/// the midpoint inequality H(t) ≥ (H(t+ε)+H(t-ε))/2.
inline VerificationReport joint_concavity_check(const PositiveDefiniteMatrix& a1, const PositiveDefiniteMatrix& a2,
                                                const PositiveDefiniteMatrix& b1, const PositiveDefiniteMatrix& b2,
                                                double t, double tol = 1e-5) {
  if (!(t > 0.0 && t < 1.0)) throw InvalidInput("joint_concavity_check: t must lie in (0,1)");
  Stopwatch sw;
  const MeanPair pair(PositiveDefiniteMatrix(HermitianMatrix::trusted(t * a1.mat() + (1 - t) * a2.mat())),
                      PositiveDefiniteMatrix(HermitianMatrix::trusted(t * b1.mat() + (1 - t) * b2.mat())));
  const DirectionPair dirs(HermitianMatrix::trusted(a1.mat() - a2.mat()), HermitianMatrix::trusted(b1.mat() - b2.mat()));
  const Matrix hpp = -2.0 * cross(pair, dirs).mat();
  const double h = default_fd_step(pair, dirs);
  const Matrix fd = mean_second_derivative_fd(pair, dirs, h).mat();
  const double scale = 1.0 + operator_norm(hpp);
  const double fd_gap = operator_norm(fd - hpp) / scale;
  const double max_eig = hermitian_eig(hermitian_part(hpp)).values.maxCoeff();

  // Midpoint inequality with a step that keeps t ± ε inside the segment's PD region.
  const double eps = std::min({0.5 * t, 0.5 * (1 - t), 1e-2});
  auto h_at = [&](double s) {
    return geometric_mean(MeanPair(PositiveDefiniteMatrix(HermitianMatrix::trusted(s * a1.mat() + (1 - s) * a2.mat())),
                                   PositiveDefiniteMatrix(HermitianMatrix::trusted(s * b1.mat() + (1 - s) * b2.mat()))))
        .mat();
  };
  const Matrix mid = h_at(t) - 0.5 * (h_at(t + eps) + h_at(t - eps));
  const double mid_min = hermitian_eig(hermitian_part(mid)).values(0);

  VerificationReport rep;
  rep.check = "geometric_mean.joint_concavity";
  rep.property = "second derivative of the mean along a segment equals -2 Cross, is negative semidefinite, "
                 "and the midpoint inequality holds";
  rep.quantities["t"] = t;
  rep.quantities["fd_step"] = h;
  rep.quantities["fd_gap"] = fd_gap;
  rep.quantities["max_eig_second_derivative"] = max_eig;
  rep.quantities["min_eig_midpoint_gap"] = mid_min;
  rep.discrepancy = fd_gap;
  rep.tolerance = tol;
  rep.pass = fd_gap <= tol && max_eig <= 1e-10 * scale && mid_min >= -1e-12 * scale;
  rep.wall_seconds = sw.seconds();
  return rep;
}

}  // namespace qmi
