#pragma once

#include <cmath>
#include <numbers>
#include <vector>

#include "qmi/lieb.hpp"
#include "qmi/linalg.hpp"
#include "qmi/quadrature.hpp"
#include "qmi/report.hpp"

namespace qmi {

inline constexpr double kLog2e = std::numbers::log2e;

/// S(A|B) = Tr[A log₂A] − Tr[A log₂B], in bits.
inline double relent(const PositiveDefiniteMatrix& a, const PositiveDefiniteMatrix& b) {
  if (a.dim() != b.dim()) throw InvalidInput("relent: dimension mismatch");
  const double tr_alog = spectral_sum(a, [](double x) { return x * std::log2(x); });
  return tr_alog - (a.mat() * b.log2()).trace().real();
}

/// A log₂A ⊗ I − A ⊗ log₂B in pairing form, so that <V_I, F V_I> = S(A|B).
inline HermitianMatrix f_operator(const PositiveDefiniteMatrix& a, const PositiveDefiniteMatrix& b) {
  if (a.dim() != b.dim()) throw InvalidInput("f_operator: dimension mismatch");
  const Eigen::Index n = a.dim();
  const Matrix alog = a.eig().apply([](double x) { return x * std::log2(x); });
  const Matrix f = kron(alog, Matrix::Identity(n, n)) - pairing_operator(a.mat(), b.log2());
  const double s = relent(a, b);
  const double paired = pairing(vec_embed(Matrix::Identity(n, n)), f);
  if (std::abs(paired - s) > 1e-10 * (1.0 + std::abs(s)))
    throw InternalError("f_operator: pairing does not reproduce the relative entropy");
  return HermitianMatrix::trusted(f);
}

/// A^{1−δ_k} ⊗ B^{δ_k} with δ_k = 2^{-k}, second factor in pairing form.
inline PositiveDefiniteMatrix f_k_family(const PositiveDefiniteMatrix& a, const PositiveDefiniteMatrix& b, int k) {
  if (a.dim() != b.dim()) throw InvalidInput("f_k_family: dimension mismatch");
  if (k < 0) throw InvalidInput("f_k_family: k must be nonnegative");
  const double d = std::ldexp(1.0, -k);
  return PositiveDefiniteMatrix(HermitianMatrix::trusted(pairing_operator(a.pow(1.0 - d), b.pow(d))));
}

/// Endpoints of the segment t ↦ (tA1 + (1−t)A2, tB1 + (1−t)B2).
struct SegmentInstance {
  PositiveDefiniteMatrix A1, A2, B1, B2;
  double t0 = 0.5;

  SegmentInstance(PositiveDefiniteMatrix a1, PositiveDefiniteMatrix a2, PositiveDefiniteMatrix b1,
                  PositiveDefiniteMatrix b2, double t)
      : A1(std::move(a1)), A2(std::move(a2)), B1(std::move(b1)), B2(std::move(b2)), t0(t) {
    if (A1.dim() != A2.dim() || A1.dim() != B1.dim() || B1.dim() != B2.dim())
      throw InvalidInput("SegmentInstance: dimension mismatch");
    if (!(t0 >= 0.0 && t0 <= 1.0)) throw InvalidInput("SegmentInstance: t0 must lie in [0,1]");
  }

  PositiveDefiniteMatrix a_at(double t) const {
    return PositiveDefiniteMatrix(HermitianMatrix::trusted(t * A1.mat() + (1 - t) * A2.mat()));
  }
  PositiveDefiniteMatrix b_at(double t) const {
    return PositiveDefiniteMatrix(HermitianMatrix::trusted(t * B1.mat() + (1 - t) * B2.mat()));
  }
  double relent_at(double t) const { return relent(a_at(t), b_at(t)); }

  /// Psi = A(σ), Phi = B(σ), V = A1 − A2, W = B1 − B2, p = 1, with the
  /// B-side stored in pairing form.
  ConcavityInstance concavity_instance(double sigma) const {
    return ConcavityInstance(a_at(sigma), PositiveDefiniteMatrix(HermitianMatrix::trusted(pairing_factor(b_at(sigma).mat()))),
                             HermitianMatrix::trusted(A1.mat() - A2.mat()),
                             HermitianMatrix::trusted(pairing_factor(B1.mat() - B2.mat())), 1.0);
  }
};

struct RelentOptions {
  int k_max = 14;
  int nodes_unit = 100;
  bool richardson = true;
  CrossOptions cross;
};

/// Γ_1, ..., Γ_kmax with Γ_k = Source_k + D_{−2^{-k}}(Γ_{k−1}), Source_l the
/// source at exponent 1 − 2^{-l} (p = 1).
struct GammaSequence {
  std::vector<Matrix> gamma;      // Γ_k, index k−1
  std::vector<Matrix> rescaled;   // 2^k Γ_k
  std::vector<double> increments; // ‖2^kΓ_k − 2^{k−1}Γ_{k−1}‖, k ≥ 2
};

struct GammaLimit {
  Matrix raw;          // 2^{kmax} Γ_{kmax}
  Matrix extrapolated; // 2·2^kΓ_k − 2^{k−1}Γ_{k−1}
  std::vector<double> increments;
  double max_ratio = 0.0;  // largest increment ratio above the noise floor
};

inline Matrix source_l(LiebEngine& engine, int l) {
  return engine.source(DyadicExponent((std::uint64_t{1} << l) - 1, l));
}

namespace detail {

inline LiebOptions gamma_options(const ConcavityInstance& inst, int k_max, const CrossOptions& cross) {
  if (k_max < 1) throw InvalidInput("gamma_sequence: k_max must be at least 1");
  if (inst.p != 1.0) throw InvalidInput("gamma_sequence: instance must have p = 1");
  LiebOptions lo;
  lo.cross = cross;
  lo.max_level = std::max(lo.max_level, k_max);
  return lo;
}

/// The recursion run in the eigenbasis of the engine; rescaled only.
inline GammaSequence gamma_sequence_in_basis(LiebEngine& engine, int k_max) {
  GammaSequence gs;
  Matrix g;
  for (int k = 1; k <= k_max; ++k) {
    const Matrix src = engine.source_in_basis(DyadicExponent((std::uint64_t{1} << k) - 1, k));
    g = k == 1 ? src : Matrix(src + engine.d_delta_in_basis(-std::ldexp(1.0, -k), g));
    g = hermitian_part(g);
    gs.rescaled.push_back(std::ldexp(1.0, k) * g);
    if (k > 1) gs.increments.push_back(operator_norm(gs.rescaled[k - 1] - gs.rescaled[k - 2]));
  }
  return gs;
}

}  // namespace detail

inline GammaSequence gamma_sequence(const ConcavityInstance& inst, int k_max, const CrossOptions& cross = {}) {
  LiebEngine engine(inst, detail::gamma_options(inst, k_max, cross));
  GammaSequence gs = detail::gamma_sequence_in_basis(engine, k_max);
  for (int k = 1; k <= k_max; ++k) {
    gs.rescaled[k - 1] = hermitian_part(engine.from_basis(gs.rescaled[k - 1]));
    gs.gamma.push_back(std::ldexp(1.0, -k) * gs.rescaled[k - 1]);
  }
  return gs;
}

inline Matrix gamma_k(const SegmentInstance& seg, double sigma, int k, const CrossOptions& cross = {}) {
  return gamma_sequence(seg.concavity_instance(sigma), k, cross).gamma.back();
}

/// 2^kΓ_k at k = k_max and its Richardson extrapolation. Increments must
/// shrink over the second half of the sequence until they reach round-off;
/// near the segment ends the first step or two may still grow slightly.
inline GammaLimit gamma_limit(const ConcavityInstance& inst, int k_max, const CrossOptions& cross = {}) {
  if (k_max < 3) throw InvalidInput("gamma_limit: k_max must be at least 3");
  LiebEngine engine(inst, detail::gamma_options(inst, k_max, cross));
  const GammaSequence gs = detail::gamma_sequence_in_basis(engine, k_max);
  GammaLimit gl;
  gl.raw = hermitian_part(engine.from_basis(gs.rescaled.back()));
  gl.extrapolated = hermitian_part(engine.from_basis(2.0 * gs.rescaled[k_max - 1] - gs.rescaled[k_max - 2]));
  gl.increments = gs.increments;
  const double floor = 1e-12 * (1.0 + operator_norm(gl.raw));
  for (std::size_t i = 1; i < gs.increments.size(); ++i) {
    if (gs.increments[i] <= floor) continue;
    const double ratio = gs.increments[i] / gs.increments[i - 1];
    gl.max_ratio = std::max(gl.max_ratio, ratio);
    if (2 * i >= gs.increments.size() && !(ratio < 1.0))
      throw NumericalFailure("gamma_limit: rescaled increments are not decreasing");
  }
  return gl;
}

inline GammaLimit gamma_limit(const SegmentInstance& seg, double sigma, int k_max, const CrossOptions& cross = {}) {
  return gamma_limit(seg.concavity_instance(sigma), k_max, cross);
}

/// 2 log₂e <V_I, Γ(σ) V_I>, the second derivative of σ ↦ S(A(σ)|B(σ)).
inline double gamma_tilde(const SegmentInstance& seg, double sigma, const RelentOptions& opt = {}) {
  const GammaLimit gl = gamma_limit(seg, sigma, opt.k_max, opt.cross);
  const Eigen::Index n = seg.A1.dim();
  return 2.0 * kLog2e * pairing(vec_embed(Matrix::Identity(n, n)), opt.richardson ? gl.extrapolated : gl.raw);
}

/// Joint convexity of S along the segment: (i) 2log₂e<V_I,Γ(σ)V_I> against
/// finite differences of S on a σ-grid; (ii) the mixing identity at t0;
/// (iii) the double integral is nonnegative.
inline VerificationReport convexity_certificate(const SegmentInstance& seg, const std::vector<double>& sigma_grid,
                                                double tol = 1e-4, const RelentOptions& opt = {}) {
  Stopwatch sw;
  json rows = json::array();
  double worst_fd = 0.0;
  for (double s : sigma_grid) {
    if (!(s > 0.0 && s < 1.0)) throw InvalidInput("convexity_certificate: grid points must lie in (0,1)");
    const double g = gamma_tilde(seg, s, opt);
    const double e = 1e-3 * std::min({s, 1.0 - s, 0.1});
    const double fd = (seg.relent_at(s + e) - 2.0 * seg.relent_at(s) + seg.relent_at(s - e)) / (e * e);
    const double rel = std::abs(g - fd) / std::max(std::abs(fd), 1e-3);
    worst_fd = std::max(worst_fd, rel);
    rows.push_back({{"sigma", s}, {"gamma_tilde", g}, {"fd_second_derivative", fd}, {"relative_gap", rel}});
  }
  const double t = seg.t0;
  double mixing_gap = 0.0, integral = 0.0, lhs = seg.relent_at(t), rhs = lhs;
  const double s1 = relent(seg.A1, seg.B1), s2 = relent(seg.A2, seg.B2);
  if (t > 0.0 && t < 1.0) {
    integral = triangular_weight(t, [&](double s) { return gamma_tilde(seg, s, opt); }, opt.nodes_unit);
    rhs = t * s1 + (1 - t) * s2 - t * integral;
    mixing_gap = std::abs(lhs - rhs) / (1.0 + std::abs(lhs));
  }
  VerificationReport rep;
  rep.check = "relative_entropy.joint_convexity";
  rep.property = "second derivative of the relative entropy along a segment equals 2 log2(e) <V_I, Gamma V_I>, "
                 "and the mixing identity reconstructs the interpolated relative entropy";
  rep.quantities["t"] = t;
  rep.quantities["k_max"] = opt.k_max;
  rep.quantities["richardson"] = opt.richardson;
  rep.quantities["grid"] = rows;
  rep.quantities["relent_interpolated"] = lhs;
  rep.quantities["mixing_rhs"] = rhs;
  rep.quantities["double_integral"] = integral;
  rep.quantities["worst_fd_gap"] = worst_fd;
  rep.quantities["mixing_gap"] = mixing_gap;
  rep.discrepancy = std::max(worst_fd, mixing_gap);
  rep.tolerance = tol;
  rep.pass = worst_fd <= tol && mixing_gap <= tol && integral >= -1e-10;
  rep.wall_seconds = sw.seconds();
  return rep;
}

}  // namespace qmi
