#pragma once

#include <algorithm>
#include <cmath>
#include <compare>
#include <functional>
#include <limits>
#include <cstdint>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "qmi/geometric_mean.hpp"
#include "qmi/linalg.hpp"
#include "qmi/power_perturbation.hpp"
#include "qmi/quadrature.hpp"
#include "qmi/report.hpp"

namespace qmi {

/// l / 2^k in lowest terms (l odd for k ≥ 1), 0 ≤ l ≤ 2^k.
class DyadicExponent {
 public:
  static constexpr int kMaxLevel = 40;

  DyadicExponent() = default;
  DyadicExponent(std::uint64_t num, int level) : num_(num), level_(level) {
    if (level < 0 || level > kMaxLevel) throw InvalidInput("DyadicExponent: level out of range");
    if (num > (std::uint64_t{1} << level)) throw InvalidInput("DyadicExponent: value exceeds 1");
    while (level_ > 0 && num_ % 2 == 0) {
      num_ /= 2;
      --level_;
    }
  }

  /// floor(x · 2^n) / 2^n.
  static DyadicExponent truncate(double x, int n) {
    if (!(x >= 0.0 && x <= 1.0)) throw InvalidInput("DyadicExponent: value must lie in [0,1]");
    return DyadicExponent(static_cast<std::uint64_t>(std::floor(std::ldexp(x, n))), n);
  }

  /// The exact dyadic equal to x if it has level ≤ max_level.
  static std::optional<DyadicExponent> exact(double x, int max_level) {
    if (!(x >= 0.0 && x <= 1.0)) return std::nullopt;
    const double scaled = std::ldexp(x, max_level);
    if (scaled != std::floor(scaled)) return std::nullopt;
    return DyadicExponent(static_cast<std::uint64_t>(scaled), max_level);
  }

  std::uint64_t num() const { return num_; }
  int level() const { return level_; }
  double value() const { return std::ldexp(static_cast<double>(num_), -level_); }
  bool is_boundary() const { return level_ == 0; }

  /// Numerator at a finer level.
  std::uint64_t num_at(int level) const { return num_ << (level - level_); }

  /// The two grid neighbours (l ± 1)/2^k of an interior exponent.
  DyadicExponent neighbor(int sign) const {
    if (is_boundary()) throw InternalError("DyadicExponent: boundary exponent has no neighbours");
    return DyadicExponent(sign > 0 ? num_ + 1 : num_ - 1, level_);
  }

  friend bool operator==(const DyadicExponent& a, const DyadicExponent& b) {
    return a.num_ == b.num_ && a.level_ == b.level_;
  }
  friend std::strong_ordering operator<=>(const DyadicExponent& a, const DyadicExponent& b) {
    const int l = std::max(a.level_, b.level_);
    return a.num_at(l) <=> b.num_at(l);
  }

  std::string str() const {
    std::ostringstream os;
    os << num_ << "/" << (std::uint64_t{1} << level_);
    return os.str();
  }

 private:
  std::uint64_t num_ = 0;
  int level_ = 0;
};

/// G_{q,r}(ε) = (Psi + εV)^q ⊗ (Phi + εW)^r with q + r = p.
struct ConcavityInstance {
  PositiveDefiniteMatrix Psi, Phi;
  HermitianMatrix V, W;
  double p = 1.0;

  ConcavityInstance(PositiveDefiniteMatrix psi, PositiveDefiniteMatrix phi, HermitianMatrix v, HermitianMatrix w,
                    double p_)
      : Psi(std::move(psi)), Phi(std::move(phi)), V(std::move(v)), W(std::move(w)), p(p_) {
    if (Psi.dim() != V.dim() || Phi.dim() != W.dim()) throw InvalidInput("ConcavityInstance: dimension mismatch");
    if (!(p > 0.0 && p <= 1.0)) throw InvalidInput("ConcavityInstance: p must lie in (0,1]");
  }
  Eigen::Index n() const { return Psi.dim(); }
  Eigen::Index m() const { return Phi.dim(); }
  Eigen::Index tensor_dim() const { return n() * m(); }
};

enum class DeltaConvention { level_k, level_k_minus_1 };

inline std::string to_string(DeltaConvention c) {
  return c == DeltaConvention::level_k ? "level_k" : "level_k_minus_1";
}

inline DeltaConvention parse_delta_convention(const std::string& s) {
  if (s == "level_k") return DeltaConvention::level_k;
  if (s == "level_k_minus_1") return DeltaConvention::level_k_minus_1;
  throw InvalidInput("unknown delta convention '" + s + "'");
}

/// A step (level m, sign c) moves the exponent by c · 2^{-m}. Stored with
/// strictly increasing levels.
struct PathStep {
  int level;
  int sign;
  friend bool operator==(const PathStep&, const PathStep&) = default;
};

struct SignedPath {
  std::vector<PathStep> steps;
  friend bool operator==(const SignedPath&, const SignedPath&) = default;
};

struct QTensor {
  HermitianMatrix matrix;
  DyadicExponent exponent;
  bool psd = false;
};

struct LiebOptions {
  DeltaConvention convention = DeltaConvention::level_k;
  int max_level = 8;
  int truncation_level = 12;
  int nodes_unit = 100;
  CrossOptions cross;
  double psd_slack = 1e-10;
};

inline HermitianMatrix build_G(const ConcavityInstance& inst, double q, double r, double eps) {
  if (!(q >= 0.0 && r >= 0.0 && q + r <= 1.0 + 1e-15)) throw InvalidInput("build_G: need q, r ≥ 0 and q + r ≤ 1");
  auto pd = [](const Matrix& m) {
    try {
      return PositiveDefiniteMatrix(HermitianMatrix::trusted(m));
    } catch (const InvalidInput&) {
      throw InvalidInput("build_G: perturbed operand is not positive definite");
    }
  };
  const PositiveDefiniteMatrix a = pd(inst.Psi.mat() + eps * inst.V.mat());
  const PositiveDefiniteMatrix b = pd(inst.Phi.mat() + eps * inst.W.mat());
  return HermitianMatrix::trusted(kron(a.pow(q), b.pow(r)));
}

/// Evaluation context for one instance: tensor eigenbasis and a memo of
/// sources and Q values keyed by exact exponent.
class LiebEngine {
 public:
  explicit LiebEngine(ConcavityInstance inst, LiebOptions opt = {})
      : inst_(std::move(inst)), opt_(opt), u_(kron(inst_.Psi.eig().vectors, inst_.Phi.eig().vectors)) {}

  const ConcavityInstance& instance() const { return inst_; }
  const LiebOptions& options() const { return opt_; }

  double delta_for_level(int m) const {
    return opt_.convention == DeltaConvention::level_k ? inst_.p * std::ldexp(1.0, -m)
                                                       : inst_.p * std::ldexp(1.0, -(m - 1));
  }

  /// Eigenvalues ψ_a^δ φ_b^{-δ} of K_δ, index a·M + b.
  RealVector k_delta_values(double delta) const {
    const RealVector& ps = inst_.Psi.eig().values;
    const RealVector& ph = inst_.Phi.eig().values;
    RealVector k(ps.size() * ph.size());
    for (Eigen::Index a = 0; a < ps.size(); ++a)
      for (Eigen::Index b = 0; b < ph.size(); ++b)
        k(a * ph.size() + b) = std::pow(ps(a), delta) * std::pow(ph(b), -delta);
    return k;
  }

  /// Solution X of K_δ X + X K_δ = F.
  Matrix d_delta(double delta, const Matrix& f) const {
    if (f.rows() != inst_.tensor_dim()) throw InvalidInput("d_delta: F must act on the tensor space");
    if (delta == 0.0) return f * 0.5;
    return hermitian_part(from_basis(d_delta_in_basis(delta, to_basis(f))));
  }

  /// U_Psi ⊗ U_Phi, the common eigenbasis of every K_δ and G_{q,r}.
  const Matrix& basis() const { return u_; }
  Matrix to_basis(const Matrix& f) const { return u_.adjoint() * f * u_; }
  Matrix from_basis(const Matrix& t) const { return u_ * t * u_.adjoint(); }

  /// D_δ on a matrix already expressed in the eigenbasis: entrywise division.
  Matrix d_delta_in_basis(double delta, const Matrix& t) const {
    if (delta == 0.0) return t * 0.5;
    const RealVector k = k_delta_values(delta);
    Matrix out = t;
    for (Eigen::Index j = 0; j < out.cols(); ++j)
      for (Eigen::Index i = 0; i < out.rows(); ++i) out(i, j) /= (k(i) + k(j));
    return out;
  }

  /// Source in the eigenbasis; interior closed-form sources never leave it.
  Matrix source_in_basis(const DyadicExponent& x) {
    if (opt_.cross.method == CrossMethod::closed_form && !x.is_boundary()) return interior_closed_form(x);
    return to_basis(source(x));
  }

  /// Boundary: K_{p,Psi,V} ⊗ I at exponent 1 and I ⊗ K_{p,Phi,W} at 0.
  /// Interior l/2^k: Cross of G at the two neighbours with their first
  /// derivatives as directions.
  const Matrix& source(const DyadicExponent& x) {
    auto it = sources_.find(x);
    if (it != sources_.end()) return it->second;
    return sources_.emplace(x, compute_source(x)).first->second;
  }

  /// Q_x = Source_x + D_{+δ}(Q_{x+}) + D_{-δ}(Q_{x-}), δ from the level of x.
  const Matrix& q(const DyadicExponent& x) {
    if (x.level() > opt_.max_level && x.level() > opt_.truncation_level)
      throw InvalidInput("q_recursion: exponent level exceeds max_level");
    auto it = qs_.find(x);
    if (it != qs_.end()) return it->second;
    Matrix val = source(x);
    if (!x.is_boundary()) {
      const double d = delta_for_level(x.level());
      val += d_delta(d, q(x.neighbor(+1)));
      val += d_delta(-d, q(x.neighbor(-1)));
    }
    return qs_.emplace(x, hermitian_part(val)).first->second;
  }

  /// Nested D's along a path from x to x0; the step at the highest level is outermost.
  Matrix apply_path(const SignedPath& path, const Matrix& s) const {
    Matrix cur = s;
    for (const auto& st : path.steps) cur = d_delta(st.sign * delta_for_level(st.level), cur);
    return cur;
  }

 private:
  Matrix compute_source(const DyadicExponent& x) {
    const Eigen::Index n = inst_.n(), m = inst_.m();
    const double p = inst_.p;
    if (x.is_boundary()) {
      if (detail::near_endpoint(p)) return Matrix::Zero(n * m, n * m);
      if (x.num() == 1)
        return kron(second_order_raw(inst_.Psi, inst_.V.mat(), p, opt_.nodes_unit), Matrix::Identity(m, m));
      return kron(Matrix::Identity(n, n), second_order_raw(inst_.Phi, inst_.W.mat(), p, opt_.nodes_unit));
    }
    const DyadicExponent lo = x.neighbor(-1), hi = x.neighbor(+1);
    if (opt_.cross.method == CrossMethod::closed_form) return hermitian_part(from_basis(interior_closed_form(x)));
    auto ends = [&](const DyadicExponent& e, Matrix& g, Matrix& dg) {
      const double q = p * e.value();
      const double r = p - q;
      const Matrix pq = inst_.Psi.pow(q), fr = inst_.Phi.pow(r);
      g = kron(pq, fr);
      dg = kron(first_order_raw(inst_.Psi, inst_.V.mat(), q), fr) +
           kron(pq, first_order_raw(inst_.Phi, inst_.W.mat(), r));
    };
    Matrix a, b, xd, zd;
    ends(lo, a, xd);
    ends(hi, b, zd);
    return cross_raw(a, b, xd, zd, opt_.cross);
  }

  // Both neighbours of an interior exponent are diagonal in U_Psi ⊗ U_Phi,
  // so the closed-form Cross is evaluated there without an eigensolve.
  Matrix interior_closed_form(const DyadicExponent& x) const {
    const Eigen::Index n = inst_.n(), m = inst_.m();
    const double p = inst_.p;
    const DyadicExponent lo = x.neighbor(-1), hi = x.neighbor(+1);
    const SpectralDecomposition& ep = inst_.Psi.eig();
    const SpectralDecomposition& ef = inst_.Phi.eig();
    const Matrix vh = ep.vectors.adjoint() * inst_.V.mat() * ep.vectors;
    const Matrix wh = ef.vectors.adjoint() * inst_.W.mat() * ef.vectors;
    auto ends = [&](const DyadicExponent& e, RealVector& g, Matrix& dg) {
      const double q = p * e.value();
      const double r = p - q;
      const RealVector pq = ep.values.array().pow(q), fr = ef.values.array().pow(r);
      g.resize(n * m);
      for (Eigen::Index i = 0; i < n; ++i) g.segment(i * m, m) = pq(i) * fr;
      const Matrix d1 = vh.cwiseProduct(detail::divided_difference_power(ep.values, q).cast<cplx>());
      const Matrix d2 = wh.cwiseProduct(detail::divided_difference_power(ef.values, r).cast<cplx>());
      dg = kron(d1, fr.cast<cplx>().asDiagonal().toDenseMatrix()) +
           kron(pq.cast<cplx>().asDiagonal().toDenseMatrix(), d2);
    };
    RealVector a, b;
    Matrix xd, zd;
    ends(lo, a, xd);
    ends(hi, b, zd);
    const Matrix t = cross_commuting_raw(a, b, xd, zd);
    detail::check_psd_cheap(t, opt_.cross.psd_slack, "cross");
    return t;
  }

  ConcavityInstance inst_;
  LiebOptions opt_;
  Matrix u_;
  std::map<DyadicExponent, Matrix> sources_;
  std::map<DyadicExponent, Matrix> qs_;
};

inline PositiveDefiniteMatrix k_delta(const ConcavityInstance& inst, double delta) {
  return PositiveDefiniteMatrix(HermitianMatrix::trusted(kron(inst.Psi.pow(delta), inst.Phi.pow(-delta))));
}

inline HermitianMatrix d_delta(const ConcavityInstance& inst, double delta, const HermitianMatrix& f) {
  return HermitianMatrix::trusted(LiebEngine(inst).d_delta(delta, f.mat()));
}

inline HermitianMatrix source(const ConcavityInstance& inst, const DyadicExponent& x, const LiebOptions& opt = {}) {
  LiebEngine e(inst, opt);
  return HermitianMatrix::trusted(e.source(x));
}

inline QTensor q_recursion(const ConcavityInstance& inst, const DyadicExponent& x, const LiebOptions& opt = {}) {
  if (x.level() > opt.max_level) throw InvalidInput("q_recursion: exponent level exceeds max_level");
  LiebEngine e(inst, opt);
  const Matrix& qm = e.q(x);
  const double scale = operator_norm(qm);
  const bool psd = scale == 0.0 || hermitian_eig(qm).values(0) >= -opt.psd_slack * scale;
  return {HermitianMatrix::trusted(qm), x, psd};
}

namespace detail {

inline int level_of(std::uint64_t num, int k) { return DyadicExponent(num, k).level(); }

/// True when the steps, taken from x outward-in (highest level first), each
/// leave from a node of exactly that level and stay inside [0,1].
inline bool path_is_walkable(const SignedPath& path, const DyadicExponent& x, const DyadicExponent& x0) {
  const int k = x.level();
  std::int64_t pos = static_cast<std::int64_t>(x.num());
  const std::int64_t top = std::int64_t{1} << k;
  for (auto it = path.steps.rbegin(); it != path.steps.rend(); ++it) {
    if (level_of(static_cast<std::uint64_t>(pos), k) != it->level) return false;
    pos += it->sign * (std::int64_t{1} << (k - it->level));
    if (pos < 0 || pos > top) return false;
  }
  return static_cast<std::uint64_t>(pos) == x0.num_at(k);
}

}  // namespace detail

/// All signed subsets {(m_j, c_j)} with k0 < m_1 < ... ≤ k and Σ c_j 2^{-m_j} = x0 - x.
inline std::vector<SignedPath> enumerate_paths(const DyadicExponent& x0, const DyadicExponent& x) {
  const int k = x.level(), k0 = x0.level();
  std::vector<SignedPath> out;
  if (x0 == x) {
    out.push_back({});
    return out;
  }
  if (k0 >= k) return out;
  const std::int64_t target =
      static_cast<std::int64_t>(x0.num_at(k)) - static_cast<std::int64_t>(x.num());
  // Units of 2^{-k}. Levels considered from k0+1 up to k.
  std::vector<PathStep> cur;
  std::function<void(int, std::int64_t)> rec = [&](int m, std::int64_t rem) {
    if (m > k) {
      if (rem == 0) out.push_back({cur});
      return;
    }
    // Largest remaining reach from levels m..k.
    const std::int64_t reach = (std::int64_t{1} << (k - m + 1)) - 1;
    if (std::abs(rem) > reach) return;
    const std::int64_t unit = std::int64_t{1} << (k - m);
    rec(m + 1, rem);
    for (int c : {-1, +1}) {
      cur.push_back({m, c});
      rec(m + 1, rem - c * unit);
      cur.pop_back();
    }
  };
  rec(k0 + 1, target);
  for (const auto& p : out)
    if (!detail::path_is_walkable(p, x, x0)) throw InternalError("enumerate_paths: signed subset is not a walk");
  return out;
}

/// Exponents whose sources feed Q_x: x itself and, for each coarser level
/// k0 < k, the reduced l0/2^{k0} with |l0/2^{k0} - x| < 2^{-k0}.
inline std::vector<DyadicExponent> admissible_sources(const DyadicExponent& x) {
  std::vector<DyadicExponent> out{x};
  const int k = x.level();
  for (int k0 = 0; k0 < k; ++k0) {
    const std::uint64_t base = x.num() >> (k - k0);  // floor(x · 2^{k0})
    for (std::uint64_t l0 : {base, base + 1}) {
      if (l0 > (std::uint64_t{1} << k0)) continue;
      const DyadicExponent c(l0, k0);
      if (c.level() != k0) continue;
      const std::int64_t diff =
          static_cast<std::int64_t>(c.num_at(k)) - static_cast<std::int64_t>(x.num());
      if (std::abs(diff) < (std::int64_t{1} << (k - k0))) out.push_back(c);
    }
  }
  return out;
}

inline HermitianMatrix y_term(LiebEngine& engine, const DyadicExponent& x, const DyadicExponent& x0) {
  const Matrix& s = engine.source(x0);
  Matrix acc = Matrix::Zero(s.rows(), s.cols());
  for (const auto& path : enumerate_paths(x0, x)) acc += engine.apply_path(path, s);
  return HermitianMatrix::trusted(acc);
}

inline HermitianMatrix y_term(const ConcavityInstance& inst, const DyadicExponent& x, const DyadicExponent& x0,
                              const LiebOptions& opt = {}) {
  LiebEngine e(inst, opt);
  return y_term(e, x, x0);
}

struct SecondDerivative {
  HermitianMatrix value;        // G''_{q,r}(0)
  HermitianMatrix via_recursion;
  double agreement = 0.0;       // ‖Y-sum − recursion‖ / (1 + ‖recursion‖), dyadic case
  bool dyadic = true;
  int level = 0;
  double cauchy_increment = 0.0;  // ‖G'' at level n − G'' at level n−1‖, non-dyadic case
};

/// G''_{q,r}(0) = -2 Σ_{x0} Y_{x,x0} with x = q/p. Dyadic x: both the Y-sum and
/// the Q recursion are computed and compared. Otherwise x is truncated to
/// truncation_level binary digits.
inline SecondDerivative second_derivative(LiebEngine& engine, double q, double r) {
  const ConcavityInstance& inst = engine.instance();
  const LiebOptions& opt = engine.options();
  if (!(q >= 0.0 && r >= 0.0)) throw InvalidInput("second_derivative: q, r must be nonnegative");
  if (std::abs(q + r - inst.p) > 1e-12) throw InvalidInput("second_derivative: q + r must equal the instance p");
  const double x = std::clamp(q / inst.p, 0.0, 1.0);
  SecondDerivative out;
  if (auto ex = DyadicExponent::exact(x, opt.max_level)) {
    out.level = ex->level();
    Matrix ysum = Matrix::Zero(inst.tensor_dim(), inst.tensor_dim());
    for (const auto& x0 : admissible_sources(*ex)) ysum += y_term(engine, *ex, x0).mat();
    const Matrix& qm = engine.q(*ex);
    out.value = HermitianMatrix::trusted(-2.0 * ysum);
    out.via_recursion = HermitianMatrix::trusted(-2.0 * qm);
    out.agreement = operator_norm(ysum - qm) / (1.0 + operator_norm(qm));
    return out;
  }
  out.dyadic = false;
  out.level = opt.truncation_level;
  const DyadicExponent xn = DyadicExponent::truncate(x, opt.truncation_level);
  const DyadicExponent xp = DyadicExponent::truncate(x, opt.truncation_level - 1);
  const Matrix qn = engine.q(xn);
  out.value = HermitianMatrix::trusted(-2.0 * qn);
  out.via_recursion = out.value;
  out.cauchy_increment = 2.0 * operator_norm(qn - engine.q(xp));
  return out;
}

inline SecondDerivative second_derivative(const ConcavityInstance& inst, double q, double r,
                                          const LiebOptions& opt = {}) {
  LiebEngine e(inst, opt);
  return second_derivative(e, q, r);
}

/// Central second difference of build_G in ε.
inline HermitianMatrix second_derivative_fd(const ConcavityInstance& inst, double q, double r, double h) {
  const Matrix gp = build_G(inst, q, r, h).mat();
  const Matrix g0 = build_G(inst, q, r, 0.0).mat();
  const Matrix gm = build_G(inst, q, r, -h).mat();
  return HermitianMatrix::trusted((gp - 2.0 * g0 + gm) / (h * h));
}

/// Step for second_derivative_fd: 1e-3 · min(1, λmin) / max(1, ‖V‖ + ‖W‖).
inline double lieb_fd_step(const ConcavityInstance& inst) {
  const double lam = std::min({1.0, inst.Psi.min_eigenvalue(), inst.Phi.min_eigenvalue()});
  return 1e-3 * lam / std::max(1.0, operator_norm(inst.V) + operator_norm(inst.W));
}

/// h(t) = Tr(K* A_t^q K B_t^r) with A_t = tA1 + (1-t)A2, B_t likewise.
struct LiebInstance {
  PositiveDefiniteMatrix A1, A2, B1, B2;
  Matrix K;
  double q = 0.5, r = 0.5;

  LiebInstance(PositiveDefiniteMatrix a1, PositiveDefiniteMatrix a2, PositiveDefiniteMatrix b1,
               PositiveDefiniteMatrix b2, Matrix k, double q_, double r_)
      : A1(std::move(a1)), A2(std::move(a2)), B1(std::move(b1)), B2(std::move(b2)), K(std::move(k)), q(q_), r(r_) {
    if (A1.dim() != A2.dim() || B1.dim() != B2.dim()) throw InvalidInput("LiebInstance: dimension mismatch");
    if (K.rows() != A1.dim() || K.cols() != B1.dim()) throw InvalidInput("LiebInstance: K must be N x M");
    if (!(q >= 0.0 && r >= 0.0 && q + r <= 1.0)) throw InvalidInput("LiebInstance: need q, r ≥ 0, q + r ≤ 1");
  }

  PositiveDefiniteMatrix a_at(double t) const {
    return PositiveDefiniteMatrix(HermitianMatrix::trusted(t * A1.mat() + (1 - t) * A2.mat()));
  }
  PositiveDefiniteMatrix b_at(double t) const {
    return PositiveDefiniteMatrix(HermitianMatrix::trusted(t * B1.mat() + (1 - t) * B2.mat()));
  }
};

inline double lieb_h(const LiebInstance& li, double t) {
  if (!(t >= 0.0 && t <= 1.0)) throw InvalidInput("lieb_h: t must lie in [0,1]");
  return (li.K.adjoint() * li.a_at(t).pow(li.q) * li.K * li.b_at(t).pow(li.r)).trace().real();
}

/// h''(t) = <V_K, G''(0) V_K> for the instance centred at t, second factor
/// stored in pairing form.
inline double lieb_h_second(const LiebInstance& li, double t, const LiebOptions& opt = {}) {
  const double p = li.q + li.r;
  if (p == 0.0) return 0.0;
  const ConcavityInstance inst(li.a_at(t), PositiveDefiniteMatrix(HermitianMatrix::trusted(pairing_factor(li.b_at(t).mat()))),
                               HermitianMatrix::trusted(li.A1.mat() - li.A2.mat()),
                               HermitianMatrix::trusted(pairing_factor(li.B1.mat() - li.B2.mat())), p);
  const SecondDerivative sd = second_derivative(inst, li.q, li.r, opt);
  return pairing(vec_embed(li.K), sd.value.mat());
}

/// Concavity of h on a t-grid: h'' ≤ 0, h'' against finite differences of h,
/// the chord inequality, and h(t) = (1-t)h(0) + t h(1) - t ∫∫ h''.
inline VerificationReport lieb_certificate(const LiebInstance& li, const std::vector<double>& t_grid,
                                           double tol = 1e-6, const LiebOptions& opt = {}) {
  Stopwatch sw;
  const double h0 = lieb_h(li, 0.0), h1 = lieb_h(li, 1.0);
  const double scale = 1.0 + std::abs(h0) + std::abs(h1);
  double max_hpp = -std::numeric_limits<double>::infinity(), worst_fd = 0.0, worst_chord = 0.0, worst_recon = 0.0;
  json rows = json::array();
  for (double t : t_grid) {
    if (!(t > 0.0 && t < 1.0)) throw InvalidInput("lieb_certificate: grid points must lie in (0,1)");
    const double ht = lieb_h(li, t);
    const double hpp = lieb_h_second(li, t, opt);
    const double e = 1e-3 * std::min({t, 1.0 - t, 0.1});
    const double fd = (lieb_h(li, t + e) - 2.0 * ht + lieb_h(li, t - e)) / (e * e);
    const double chord = ht - ((1 - t) * h0 + t * h1);
    const double dbl = triangular_weight(t, [&](double s) { return lieb_h_second(li, s, opt); }, opt.nodes_unit);
    const double recon = std::abs(ht - (1 - t) * h0 - t * h1 + t * dbl);
    max_hpp = std::max(max_hpp, hpp);
    worst_fd = std::max(worst_fd, std::abs(fd - hpp) / (1.0 + std::abs(hpp)));
    worst_chord = std::min(worst_chord, chord);
    worst_recon = std::max(worst_recon, recon / scale);
    rows.push_back({{"t", t}, {"h", ht}, {"h_second", hpp}, {"h_second_fd", fd}, {"chord_gap", chord}, {"reconstruction_error", recon}});
  }
  VerificationReport rep;
  rep.check = "lieb.h_concavity";
  rep.property = "h is concave: h'' from the dyadic construction is nonpositive, matches finite differences, "
                 "and reproduces h through the double-integral identity";
  rep.quantities["q"] = li.q;
  rep.quantities["r"] = li.r;
  rep.quantities["delta_convention"] = to_string(opt.convention);
  rep.quantities["grid"] = rows;
  rep.quantities["max_h_second"] = max_hpp;
  rep.quantities["worst_fd_gap"] = worst_fd;
  rep.quantities["worst_chord_gap"] = worst_chord;
  rep.quantities["worst_reconstruction"] = worst_recon;
  rep.discrepancy = std::max(worst_fd, worst_recon);
  rep.tolerance = tol;
  rep.pass = max_hpp <= 1e-10 * scale && worst_chord >= -1e-10 && worst_fd <= 1e-4 && worst_recon <= tol;
  rep.wall_seconds = sw.seconds();
  return rep;
}

}  // namespace qmi
