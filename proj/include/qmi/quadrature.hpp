#pragma once

#include <Eigen/Eigenvalues>

#include <cmath>
#include <numbers>
#include <sstream>
#include <type_traits>
#include <vector>

#include "qmi/linalg.hpp"

namespace qmi {

enum class RuleKind { half_line_sqrt_singularity, half_line_power, unit_interval };

struct QuadratureRule {
  RuleKind kind = RuleKind::unit_interval;
  std::vector<double> nodes;
  std::vector<double> weights;
  std::size_t size() const { return nodes.size(); }
};

struct QuadratureConfig {
  int nodes_half_line = 200;
  int nodes_unit = 100;
  double tol = 1e-10;
};

/// Gauss-Jacobi rule on [-1,1] for weight (1-x)^alpha (1+x)^beta, built by
/// Golub-Welsch. Nodes ascending.
inline QuadratureRule gauss_jacobi(int n, double alpha, double beta) {
  if (n < 1) throw InvalidInput("gauss_jacobi: need at least one node");
  if (!(alpha > -1.0) || !(beta > -1.0)) throw InvalidInput("gauss_jacobi: alpha, beta must exceed -1");
  const double ab = alpha + beta;
  RealVector diag(n), sub(std::max(n - 1, 1));
  for (int k = 0; k < n; ++k) {
    if (k == 0) {
      diag(0) = (beta - alpha) / (ab + 2.0);
    } else {
      const double s = 2.0 * k + ab;
      diag(k) = (beta * beta - alpha * alpha) / (s * (s + 2.0));
    }
  }
  for (int k = 1; k < n; ++k) {
    double b;
    if (k == 1) {
      // (1 + alpha + beta) cancels analytically; keeps alpha + beta = -1 finite.
      b = 4.0 * (1.0 + alpha) * (1.0 + beta) / ((2.0 + ab) * (2.0 + ab) * (3.0 + ab));
    } else {
      const double s = 2.0 * k + ab;
      b = 4.0 * k * (k + alpha) * (k + beta) * (k + ab) / (s * s * (s + 1.0) * (s - 1.0));
    }
    sub(k - 1) = std::sqrt(b);
  }
  const double mu0 = std::exp((ab + 1.0) * std::log(2.0) + std::lgamma(alpha + 1.0) +
                              std::lgamma(beta + 1.0) - std::lgamma(ab + 2.0));
  QuadratureRule r;
  r.nodes.resize(n);
  r.weights.resize(n);
  if (n == 1) {
    r.nodes[0] = diag(0);
    r.weights[0] = mu0;
    return r;
  }
  Eigen::SelfAdjointEigenSolver<RealMatrix> es;
  es.computeFromTridiagonal(diag, sub.head(n - 1), Eigen::ComputeEigenvectors);
  if (es.info() != Eigen::Success) throw NumericalFailure("gauss_jacobi: eigen solver failed");
  for (int i = 0; i < n; ++i) {
    r.nodes[i] = es.eigenvalues()(i);
    const double v0 = es.eigenvectors()(0, i);
    r.weights[i] = mu0 * v0 * v0;
  }
  return r;
}

inline QuadratureRule gauss_legendre(int n) { return gauss_jacobi(n, 0.0, 0.0); }

/// Gauss-Legendre on (a,b).
inline QuadratureRule unit_interval_rule(int n, double a = 0.0, double b = 1.0) {
  QuadratureRule r = gauss_legendre(n);
  r.kind = RuleKind::unit_interval;
  const double h = 0.5 * (b - a);
  for (std::size_t i = 0; i < r.size(); ++i) {
    r.nodes[i] = a + h * (r.nodes[i] + 1.0);
    r.weights[i] *= h;
  }
  return r;
}

/// Rule for ∫_0^∞ s^{-1/2} g(s) ds ≈ Σ w_i g(s_i). Uses s = tan²θ, so the
/// weights carry 2 sec²θ and Gauss-Legendre runs on (0, π/2).
inline QuadratureRule half_line_sqrt_rule(int n) {
  QuadratureRule gl = unit_interval_rule(n, 0.0, std::numbers::pi / 2);
  QuadratureRule r;
  r.kind = RuleKind::half_line_sqrt_singularity;
  r.nodes.resize(n);
  r.weights.resize(n);
  for (int i = 0; i < n; ++i) {
    const double th = gl.nodes[i];
    const double c = std::cos(th);
    const double t = std::tan(th);
    r.nodes[i] = t * t;
    r.weights[i] = 2.0 * gl.weights[i] / (c * c);
  }
  return r;
}

/// Rule in u ∈ (0,1) for ∫_0^1 u^{q-1}(1-u)^{-q} h(u) du, i.e. Gauss-Jacobi with
/// alpha = -q, beta = q-1 after u = (1+x)/2 (the Jacobian cancels exactly).
/// Callers substitute t = u/(1-u).
inline QuadratureRule loewner_rule(double q, int n) {
  if (!(q > 0.0 && q < 1.0)) throw InvalidInput("loewner_rule: q must lie in (0,1)");
  QuadratureRule r = gauss_jacobi(n, -q, q - 1.0);
  r.kind = RuleKind::half_line_power;
  for (auto& x : r.nodes) x = 0.5 * (1.0 + x);
  return r;
}

namespace detail {

template <class T>
bool sample_finite(const T& v) {
  if constexpr (std::is_arithmetic_v<T>) {
    return std::isfinite(v);
  } else {
    return all_finite(Matrix(v));
  }
}

template <class T>
T finalize(T v) {
  if constexpr (std::is_arithmetic_v<T>) {
    return v;
  } else {
    return hermitian_part(v);
  }
}

}  // namespace detail

/// ∫_0^∞ s^{-1/2} smooth(s) ds. `smooth` may return double or Matrix; matrix
/// results are symmetrized. Node contributions are summed by a pairwise tree.
template <class F>
auto integrate_half_line_sqrt(F&& smooth, const QuadratureRule& rule) {
  using T = std::decay_t<decltype(smooth(1.0))>;
  using R = std::conditional_t<std::is_arithmetic_v<T>, double, Matrix>;
  if (rule.kind != RuleKind::half_line_sqrt_singularity)
    throw InvalidInput("integrate_half_line_sqrt: wrong rule kind");
  std::vector<R> terms;
  terms.reserve(rule.size());
  for (std::size_t i = 0; i < rule.size(); ++i) {
    R v = smooth(rule.nodes[i]);
    if (!detail::sample_finite(v)) {
      std::ostringstream os;
      os << "integrate_half_line_sqrt: non-finite sample at theta = " << std::atan(std::sqrt(rule.nodes[i]));
      throw NumericalFailure(os.str());
    }
    terms.push_back(rule.weights[i] * v);
  }
  return detail::finalize<R>(pairwise_sum(terms));
}

/// (sin πq / π) λ^{q+1} ∫_0^∞ τ^q g(λτ) dτ, which equals (sin πq/π)∫ t^q g(t) dt.
/// The scale λ moves the resolvent poles of g toward τ ≈ 1.
template <class F>
auto integrate_loewner(double q, F&& g, const QuadratureRule& rule, double scale = 1.0) {
  using T = std::decay_t<decltype(g(1.0))>;
  using R = std::conditional_t<std::is_arithmetic_v<T>, double, Matrix>;
  if (!(q > 0.0 && q < 1.0)) throw InvalidInput("integrate_loewner: q must lie in (0,1)");
  if (rule.kind != RuleKind::half_line_power) throw InvalidInput("integrate_loewner: wrong rule kind");
  if (!(scale > 0.0)) throw InvalidInput("integrate_loewner: scale must be positive");
  std::vector<R> terms;
  terms.reserve(rule.size());
  for (std::size_t i = 0; i < rule.size(); ++i) {
    const double u = rule.nodes[i];
    const double tau = u / (1.0 - u);
    // τ^q dτ = u^{q-1}(1-u)^{-q} · τ(1+τ) du; the first factor is the Jacobi weight.
    R v = g(scale * tau);
    if (!detail::sample_finite(v)) {
      std::ostringstream os;
      os << "integrate_loewner: non-finite sample at t = " << scale * tau;
      throw NumericalFailure(os.str());
    }
    terms.push_back((rule.weights[i] * tau * (1.0 + tau)) * v);
  }
  const double pref = std::sin(std::numbers::pi * q) / std::numbers::pi * std::pow(scale, q + 1.0);
  return detail::finalize<R>(R(pref * pairwise_sum(terms)));
}

/// Splits (0,1) at t and integrates g(σ) w_t(σ) with n Gauss-Legendre nodes on
/// each piece, where w_t(σ) = σ(1-t)/t below t and 1-σ above. Equals
/// ∫_0^1 ∫_{tλ}^{λ} g(σ) dσ dλ.
struct TriangularRule {
  double t;
  std::vector<double> nodes;
  std::vector<double> weights;  // include w_t
};

inline TriangularRule triangular_rule(double t, int n) {
  if (!(t > 0.0 && t < 1.0)) throw InvalidInput("triangular_weight: t must lie in (0,1)");
  TriangularRule r{t, {}, {}};
  const QuadratureRule lo = unit_interval_rule(n, 0.0, t);
  const QuadratureRule hi = unit_interval_rule(n, t, 1.0);
  for (std::size_t i = 0; i < lo.size(); ++i) {
    r.nodes.push_back(lo.nodes[i]);
    r.weights.push_back(lo.weights[i] * lo.nodes[i] * (1.0 - t) / t);
  }
  for (std::size_t i = 0; i < hi.size(); ++i) {
    r.nodes.push_back(hi.nodes[i]);
    r.weights.push_back(hi.weights[i] * (1.0 - hi.nodes[i]));
  }
  return r;
}

template <class F>
double triangular_weight(double t, F&& g, int n = 100) {
  const TriangularRule r = triangular_rule(t, n);
  std::vector<double> terms;
  terms.reserve(r.nodes.size());
  for (std::size_t i = 0; i < r.nodes.size(); ++i) {
    const double v = g(r.nodes[i]);
    if (!std::isfinite(v)) throw NumericalFailure("triangular_weight: non-finite sample");
    terms.push_back(r.weights[i] * v);
  }
  return pairwise_sum(terms);
}

}  // namespace qmi
