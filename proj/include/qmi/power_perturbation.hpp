#pragma once

#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <numbers>

#include "qmi/geometric_mean.hpp"
#include "qmi/linalg.hpp"
#include "qmi/quadrature.hpp"

namespace qmi {

/// (L + εF)^q = base_power + ε first_order - ε² second_order + O(ε³).
struct PowerExpansion {
  HermitianMatrix base_power;
  HermitianMatrix first_order;
  HermitianMatrix second_order;
};

struct LogDerivative {
  HermitianMatrix matrix;
};

namespace detail {

inline bool near_endpoint(double q) { return std::abs(q) < 1e-8 || std::abs(1.0 - q) < 1e-8; }

/// f[d_k, d_l] for f(x) = x^q, analytic limit f'((d_k+d_l)/2) when the two
/// eigenvalues are closer than 1e-8 relative.
inline RealMatrix divided_difference_power(const RealVector& d, double q) {
  const Eigen::Index n = d.size();
  RealMatrix m(n, n);
  for (Eigen::Index k = 0; k < n; ++k)
    for (Eigen::Index l = 0; l < n; ++l) {
      const double dk = d(k), dl = d(l);
      if (std::abs(dk - dl) < 1e-8 * (dk + dl)) {
        const double mid = 0.5 * (dk + dl);
        m(k, l) = q * std::pow(mid, q - 1.0);
      } else {
        m(k, l) = (std::pow(dk, q) - std::pow(dl, q)) / (dk - dl);
      }
    }
  return m;
}

inline RealMatrix divided_difference_log(const RealVector& d) {
  const Eigen::Index n = d.size();
  RealMatrix m(n, n);
  for (Eigen::Index k = 0; k < n; ++k)
    for (Eigen::Index l = 0; l < n; ++l) {
      const double dk = d(k), dl = d(l);
      if (std::abs(dk - dl) < 1e-8 * (dk + dl)) m(k, l) = 2.0 / (dk + dl);
      else m(k, l) = (std::log(dk) - std::log(dl)) / (dk - dl);
    }
  return m;
}

inline Matrix apply_in_basis(const SpectralDecomposition& e, const Matrix& f, const RealMatrix& dd) {
  const Matrix fh = e.vectors.adjoint() * f * e.vectors;
  return e.vectors * fh.cwiseProduct(dd.cast<cplx>()) * e.vectors.adjoint();
}

/// √(λmin λmax), centres the resolvent poles in the Löwner variable.
inline double loewner_scale(const SpectralDecomposition& e) {
  return std::sqrt(e.values(0) * e.values(e.dim() - 1));
}

inline constexpr int kMaxLoewnerNodes = 600;

/// Node count so that the poles of (τλ + d)^{-1} at τ = -d/λ, mapped to
/// u = τ/(1+τ) and then to [-1,1], leave an error near ρ^{-2n} ≈ 1e-17.
inline int loewner_node_count(const SpectralDecomposition& e, int min_nodes) {
  const double lam = loewner_scale(e);
  double rho = std::numeric_limits<double>::infinity();
  for (double d : {e.values(0), e.values(e.dim() - 1)}) {
    const double r = d / lam;
    if (std::abs(r - 1.0) < 1e-12) continue;
    const double u0 = -r / (1.0 - r);
    const double x0 = std::abs(2.0 * u0 - 1.0);
    rho = std::min(rho, x0 + std::sqrt(x0 * x0 - 1.0));
  }
  if (!std::isfinite(rho)) return min_nodes;
  const int need = static_cast<int>(std::ceil(std::log(1e17) / (2.0 * std::log(rho)))) + 8;
  if (need > kMaxLoewnerNodes) {
    std::ostringstream os;
    os << "Loewner quadrature: spectrum condition " << e.values(e.dim() - 1) / e.values(0)
       << " needs more than " << kMaxLoewnerNodes << " nodes";
    throw NumericalFailure(os.str());
  }
  return std::max(need, min_nodes);
}

inline const QuadratureRule& cached_loewner_rule(double q, int n) {
  static std::mutex mu;
  static std::map<std::pair<double, int>, QuadratureRule> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto key = std::make_pair(q, n);
  auto it = cache.find(key);
  if (it == cache.end()) it = cache.emplace(key, loewner_rule(q, n)).first;
  return it->second;
}

inline void check_dims(const PositiveDefiniteMatrix& l, const Matrix& f, const char* what) {
  if (l.dim() != f.rows() || f.rows() != f.cols()) throw InvalidInput(std::string(what) + ": dimension mismatch");
}

}  // namespace detail

/// d/dε (L + εF)^q at 0, by divided differences of x^q in L's eigenbasis.
inline Matrix first_order_raw(const PositiveDefiniteMatrix& l, const Matrix& f, double q) {
  detail::check_dims(l, f, "first_order");
  if (q == 0.0) return Matrix::Zero(f.rows(), f.cols());
  if (q == 1.0) return f;
  return detail::apply_in_basis(l.eig(), f, detail::divided_difference_power(l.eig().values, q));
}

inline HermitianMatrix first_order(const PositiveDefiniteMatrix& l, const HermitianMatrix& f, double q) {
  if (!(q >= 0.0 && q <= 1.0)) throw InvalidInput("first_order: q must lie in [0,1]");
  return HermitianMatrix::trusted(first_order_raw(l, f.mat(), q));
}

/// d/dε log(L + εF) at 0.
inline LogDerivative log_derivative(const PositiveDefiniteMatrix& l, const HermitianMatrix& f) {
  detail::check_dims(l, f.mat(), "log_derivative");
  return {HermitianMatrix::trusted(detail::apply_in_basis(l.eig(), f.mat(), detail::divided_difference_log(l.eig().values)))};
}

/// K = (sin πq/π) ∫_0^∞ t^q (t+L)^{-1} F (t+L)^{-1} F (t+L)^{-1} dt, by
/// Gauss-Jacobi quadrature in L's eigenbasis; `nodes` is a floor on the node count. Zero at the endpoints.
inline Matrix second_order_raw(const PositiveDefiniteMatrix& l, const Matrix& f, double q, int nodes = 100) {
  detail::check_dims(l, f, "second_order");
  const Eigen::Index n = l.dim();
  if (detail::near_endpoint(q)) return Matrix::Zero(n, n);
  const SpectralDecomposition& e = l.eig();
  const Matrix fh = e.vectors.adjoint() * f * e.vectors;
  const QuadratureRule& rule = detail::cached_loewner_rule(q, detail::loewner_node_count(e, nodes));
  Matrix tmp(n, n);
  const Matrix kh = integrate_loewner(
      q,
      [&](double t) {
        RealVector r(n);
        for (Eigen::Index i = 0; i < n; ++i) r(i) = 1.0 / (t + e.values(i));
        tmp.noalias() = r.asDiagonal() * fh * r.asDiagonal();
        return Matrix(tmp * fh * r.asDiagonal());
      },
      rule, detail::loewner_scale(e));
  return hermitian_part(e.vectors * kh * e.vectors.adjoint());
}

inline HermitianMatrix second_order(const PositiveDefiniteMatrix& l, const HermitianMatrix& f, double q,
                                    int nodes = 100, double psd_slack = 1e-10) {
  if (!(q >= 0.0 && q <= 1.0)) throw InvalidInput("second_order: q must lie in [0,1]");
  Matrix k = second_order_raw(l, f.mat(), q, nodes);
  detail::check_psd(k, psd_slack, "second_order");
  return HermitianMatrix::trusted(k);
}

/// L^q = (sin πq/π) ∫_0^∞ t^q (t^{-1} - (t+L)^{-1}) dt, with the integrand
/// written as L (t(t+L))^{-1} to avoid cancellation.
inline PositiveDefiniteMatrix loewner_power(const PositiveDefiniteMatrix& l, double q, int nodes = 100) {
  if (!(q > 0.0 && q < 1.0)) throw InvalidInput("loewner_power: q must lie in (0,1)");
  const SpectralDecomposition& e = l.eig();
  const Eigen::Index n = l.dim();
  const QuadratureRule& rule = detail::cached_loewner_rule(q, detail::loewner_node_count(e, nodes));
  RealVector diag(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double d = e.values(i);
    diag(i) = integrate_loewner(q, [d](double t) { return d / (t * (t + d)); }, rule, detail::loewner_scale(e));
  }
  return PositiveDefiniteMatrix(HermitianMatrix::trusted(e.vectors * diag.asDiagonal() * e.vectors.adjoint()));
}

inline PowerExpansion expansion(const PositiveDefiniteMatrix& l, const HermitianMatrix& f, double q, int nodes = 100) {
  return {HermitianMatrix::trusted(l.pow(q)), first_order(l, f, q), second_order(l, f, q, nodes)};
}

}  // namespace qmi
