#pragma once

#include <algorithm>
#include <array>
#include <atomic>
#include <exception>
#include <limits>
#include <cmath>
#include <numeric>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "qmi/linalg.hpp"
#include "qmi/quadrature.hpp"
#include "qmi/relative_entropy.hpp"
#include "qmi/report.hpp"

namespace qmi {

/// Full-rank density matrix on A ⊗ B ⊗ C.
struct TripartiteState {
  PositiveDefiniteMatrix rho;
  std::array<int, 3> dims{};

  TripartiteState(PositiveDefiniteMatrix r, std::array<int, 3> d) : rho(std::move(r)), dims(d) {
    for (int x : dims)
      if (x < 1) throw InvalidInput("TripartiteState: dimensions must be positive");
    if (rho.dim() != dims[0] * dims[1] * dims[2]) throw InvalidInput("TripartiteState: dimension mismatch");
    const double tr = rho.mat().trace().real();
    if (std::abs(tr - 1.0) > 1e-12) {
      std::ostringstream os;
      os << "TripartiteState: trace " << tr << " differs from 1";
      throw InvalidInput(os.str());
    }
  }

  int da() const { return dims[0]; }
  int dbc() const { return dims[1] * dims[2]; }
};

/// Sign-flip times permutation unitaries D_P K_T. Permutations in
/// lexicographic order (outer loop), sign patterns in binary order with bit i
/// flipping basis vector i (inner loop).
struct TwirlFamily {
  int n = 0;
  std::vector<Matrix> unitaries;
  static constexpr const char* ordering = "permutations lexicographic (outer), sign patterns binary (inner)";
  std::size_t size() const { return unitaries.size(); }
};

inline TwirlFamily twirl_family(int n) {
  if (n < 1 || n > 5) throw InvalidInput("twirl_family: N must lie in 1..5");
  TwirlFamily tf;
  tf.n = n;
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  do {
    Matrix d = Matrix::Zero(n, n);
    for (int i = 0; i < n; ++i) d(perm[i], i) = 1.0;
    for (int mask = 0; mask < (1 << n); ++mask) {
      Matrix k = Matrix::Zero(n, n);
      for (int i = 0; i < n; ++i) k(i, i) = (mask >> i & 1) ? -1.0 : 1.0;
      tf.unitaries.push_back(d * k);
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  return tf;
}

/// (1/J) Σ U M U*.
inline Matrix twirl_average(const TwirlFamily& tf, const Matrix& m) {
  Matrix acc = Matrix::Zero(m.rows(), m.cols());
  for (const auto& u : tf.unitaries) acc += u * m * u.adjoint();
  return acc / static_cast<double>(tf.size());
}

/// −Tr ρ log₂ρ over the spectrum; zero eigenvalues contribute nothing.
inline double von_neumann_entropy(const Matrix& rho) {
  const SpectralDecomposition e = hermitian_eig(hermitian_part(rho));
  double s = 0.0;
  for (Eigen::Index i = 0; i < e.dim(); ++i) {
    const double l = e.values(i);
    if (l > 0.0) s -= l * std::log2(l);
  }
  return s;
}

struct Entropies {
  double s_abc, s_ab, s_bc, s_b;
  double cmi() const { return s_ab + s_bc - s_abc - s_b; }
};

inline Entropies entropies(const TripartiteState& st) {
  const std::vector<int> d{st.dims[0], st.dims[1], st.dims[2]};
  const Matrix& r = st.rho.mat();
  return {von_neumann_entropy(r), von_neumann_entropy(partial_trace(r, d, {2})),
          von_neumann_entropy(partial_trace(r, d, {0})), von_neumann_entropy(partial_trace(r, d, {0, 2}))};
}

inline double cmi(const TripartiteState& st) { return entropies(st).cmi(); }

/// ρ_AB ⊗ ρ_C.
inline Matrix product_reference(const TripartiteState& st) {
  const std::vector<int> d{st.dims[0], st.dims[1], st.dims[2]};
  return kron(partial_trace(st.rho.mat(), d, {2}), partial_trace(st.rho.mat(), d, {0, 1}));
}

/// Interpolation chain ρ̄_K = (1/K) Σ_{k≤K} U_k ρ U_k* (U_k acting on A),
/// likewise for σ = ρ_AB ⊗ ρ_C.
class TwirlChain {
 public:
  explicit TwirlChain(const TripartiteState& st) : tf_(twirl_family(st.da())), sigma_(product_reference(st)) {
    const Matrix ibc = Matrix::Identity(st.dbc(), st.dbc());
    Matrix racc = Matrix::Zero(st.rho.dim(), st.rho.dim()), sacc = racc;
    for (std::size_t k = 0; k < tf_.size(); ++k) {
      const Matrix u = kron(tf_.unitaries[k], ibc);
      rho_k_.push_back(u * st.rho.mat() * u.adjoint());
      sigma_k_.push_back(u * sigma_ * u.adjoint());
      racc += rho_k_.back();
      sacc += sigma_k_.back();
      rho_bar_.push_back(hermitian_part(racc / static_cast<double>(k + 1)));
      sigma_bar_.push_back(hermitian_part(sacc / static_cast<double>(k + 1)));
    }
  }

  int J() const { return static_cast<int>(tf_.size()); }
  const TwirlFamily& family() const { return tf_; }
  const Matrix& sigma() const { return sigma_; }
  const Matrix& rho_bar(int k) const { return rho_bar_.at(k - 1); }
  const Matrix& sigma_bar(int k) const { return sigma_bar_.at(k - 1); }

  /// F_K = S(ρ̄_K | σ̄_K).
  double f(int k) const {
    if (k < 1 || k > J()) throw InvalidInput("f_chain: K out of range");
    return relent(pd(rho_bar(k)), pd(sigma_bar(k)));
  }

  /// Segment from (ρ̄_{K−1}, σ̄_{K−1}) at t = 0 to (U_KρU_K*, U_KσU_K*) at t = 1,
  /// evaluated at t0 = 1/K.
  SegmentInstance segment(int k) const {
    if (k < 2 || k > J()) throw InvalidInput("segment: K must lie in [2, J]");
    return SegmentInstance(pd(rho_k_[k - 1]), pd(rho_bar(k - 1)), pd(sigma_k_[k - 1]), pd(sigma_bar(k - 1)), 1.0 / k);
  }

 private:
  static PositiveDefiniteMatrix pd(const Matrix& m) { return PositiveDefiniteMatrix(HermitianMatrix::trusted(m)); }

  TwirlFamily tf_;
  Matrix sigma_;
  std::vector<Matrix> rho_k_, sigma_k_, rho_bar_, sigma_bar_;
};

inline double f_chain(const TripartiteState& st, int k) { return TwirlChain(st).f(k); }

/// How the per-K double integrals are weighted. `unrolled` telescopes
/// K F_K = S(ρ|σ) + (K−1) F_{K−1} − ∬Γ̃_K, giving 1/J on every term.
/// `displayed` uses 1/(K+1) on Δ_K and 1/J on the K = J term.
enum class Prefactor { unrolled, displayed };

inline std::string to_string(Prefactor p) { return p == Prefactor::unrolled ? "unrolled" : "displayed"; }

inline Prefactor parse_prefactor(const std::string& s) {
  if (s == "unrolled") return Prefactor::unrolled;
  if (s == "displayed") return Prefactor::displayed;
  throw InvalidInput("unknown prefactor '" + s + "'");
}

struct SsaOptions {
  int nodes = 40;  // σ-nodes per double integral, split evenly across the two pieces
  int k_max = 10;
  bool richardson = true;
  Prefactor prefactor = Prefactor::unrolled;
  CrossMethod cross_method = CrossMethod::closed_form;
  int threads = 1;
  double tol = 1e-3;  // reconstruction, relative to max(cmi, 0.01)
  double term_slack = 1e-8;
};

struct TermDiagnostics {
  int K = 0;
  double prefactor = 0.0;
  double integral = 0.0;  // ∫₀¹∫_{λ/K}^{λ} Γ̃_K
  double value = 0.0;     // prefactor · integral
  double min_gamma_tilde = 0.0;
  double max_increment_ratio = 0.0;
};

struct DecompositionReport {
  std::array<int, 3> dims{};
  double cmi_entropic = 0.0;
  double boundary_term = 0.0;
  std::vector<double> delta_terms;  // Δ_2, ..., Δ_{J−1}
  double reconstruction = 0.0;
  double reconstruction_gap = 0.0;
  double relative_gap = 0.0;
  double endpoint_gap = 0.0;  // |F_J − S(ρ_BC | ρ_B ⊗ ρ_C)|
  double twirl_gap = 0.0;     // averaging identity on ρ's A-block probe
  std::vector<TermDiagnostics> terms;
  SsaOptions options;
  bool pass = false;
  double wall_seconds = 0.0;
};

/// S(ρ_BC | ρ_B ⊗ ρ_C).
inline double endpoint_relent(const TripartiteState& st) {
  const std::vector<int> d{st.dims[0], st.dims[1], st.dims[2]};
  const Matrix rbc = partial_trace(st.rho.mat(), d, {0});
  const Matrix rb = partial_trace(st.rho.mat(), d, {0, 2});
  const Matrix rc = partial_trace(st.rho.mat(), d, {0, 1});
  return relent(PositiveDefiniteMatrix(HermitianMatrix::trusted(rbc)),
                PositiveDefiniteMatrix(HermitianMatrix::trusted(kron(rb, rc))));
}

/// Runs fn(i) for i in [0, n) on up to `threads` workers. Results must be
/// written to slot i so the outcome does not depend on scheduling.
template <class Fn>
void parallel_for(std::size_t n, int threads, Fn&& fn) {
  const int w = std::max(1, std::min<int>(threads, static_cast<int>(n)));
  if (w == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(n);
  std::vector<std::thread> pool;
  for (int t = 0; t < w; ++t)
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    });
  for (auto& th : pool) th.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

/// Every Δ_K and the boundary term, with the entropic CMI for comparison.
inline DecompositionReport delta_terms(const TripartiteState& st, const SsaOptions& opt = {}) {
  Stopwatch sw;
  if (st.da() > 3 || st.dbc() > 9) throw InvalidInput("delta_terms: need d_A ≤ 3 and d_B·d_C ≤ 9");
  if (opt.nodes < 2 || opt.nodes % 2 != 0) throw InvalidInput("delta_terms: nodes must be even and at least 2");
  const TwirlChain chain(st);
  const int J = chain.J();
  DecompositionReport rep;
  rep.dims = st.dims;
  rep.options = opt;
  rep.cmi_entropic = cmi(st);
  rep.endpoint_gap = std::abs(chain.f(J) - endpoint_relent(st));
  {
    const Matrix probe = partial_trace(st.rho.mat(), {st.dims[0], st.dims[1], st.dims[2]}, {1, 2});
    const double tr = probe.trace().real();
    rep.twirl_gap = operator_norm(twirl_average(chain.family(), probe) -
                                  Matrix::Identity(st.da(), st.da()) * (tr / st.da()));
  }

  RelentOptions ro;
  ro.k_max = opt.k_max;
  ro.richardson = opt.richardson;
  ro.cross.method = opt.cross_method;

  // One task per (K, σ-node); sums are formed afterwards in node order.
  const int per_piece = opt.nodes / 2;
  std::vector<SegmentInstance> segs;
  std::vector<TriangularRule> rules;
  for (int k = 2; k <= J; ++k) {
    segs.push_back(chain.segment(k));
    rules.push_back(triangular_rule(1.0 / k, per_piece));
  }
  const std::size_t per_term = rules.front().nodes.size();
  std::vector<double> vals(segs.size() * per_term), ratios(segs.size() * per_term);
  parallel_for(vals.size(), opt.threads, [&](std::size_t i) {
    const std::size_t term = i / per_term, node = i % per_term;
    const double s = rules[term].nodes[node];
    const GammaLimit gl = gamma_limit(segs[term], s, ro.k_max, ro.cross);
    const Eigen::Index n = st.rho.dim();
    vals[i] = 2.0 * kLog2e * pairing(vec_embed(Matrix::Identity(n, n)), ro.richardson ? gl.extrapolated : gl.raw);
    ratios[i] = gl.max_ratio;
  });

  for (std::size_t term = 0; term < segs.size(); ++term) {
    const int k = static_cast<int>(term) + 2;
    TermDiagnostics d;
    d.K = k;
    std::vector<double> contrib(per_term);
    d.min_gamma_tilde = std::numeric_limits<double>::infinity();
    for (std::size_t node = 0; node < per_term; ++node) {
      const double g = vals[term * per_term + node];
      contrib[node] = rules[term].weights[node] * g;
      d.min_gamma_tilde = std::min(d.min_gamma_tilde, g);
      d.max_increment_ratio = std::max(d.max_increment_ratio, ratios[term * per_term + node]);
    }
    d.integral = pairwise_sum(contrib);
    d.prefactor = (opt.prefactor == Prefactor::unrolled || k == J) ? 1.0 / J : 1.0 / (k + 1);
    d.value = d.prefactor * d.integral;
    if (d.value < -opt.term_slack) {
      std::ostringstream os;
      os << "delta_terms: term K = " << k << " is negative (" << d.value << ")";
      throw NumericalFailure(os.str());
    }
    if (k == J) rep.boundary_term = d.value;
    else rep.delta_terms.push_back(d.value);
    rep.terms.push_back(d);
  }
  rep.reconstruction = rep.boundary_term;
  for (double v : rep.delta_terms) rep.reconstruction += v;
  rep.reconstruction_gap = std::abs(rep.cmi_entropic - rep.reconstruction);
  rep.relative_gap = rep.reconstruction_gap / std::max(rep.cmi_entropic, 0.01);
  rep.pass = rep.relative_gap <= opt.tol && rep.endpoint_gap <= 1e-9 && rep.twirl_gap <= 1e-12;
  rep.wall_seconds = sw.seconds();
  return rep;
}

/// delta_terms, raising VerificationFailure when the reconstruction misses.
inline DecompositionReport decompose(const TripartiteState& st, const SsaOptions& opt = {}) {
  DecompositionReport rep = delta_terms(st, opt);
  if (!rep.pass) {
    std::ostringstream os;
    os << "decompose: reconstruction gap " << rep.reconstruction_gap << " (relative " << rep.relative_gap
       << "), cmi " << rep.cmi_entropic << ", sum " << rep.reconstruction;
    for (const auto& d : rep.terms) os << "; K=" << d.K << " term " << d.value;
    throw VerificationFailure(os.str());
  }
  return rep;
}

inline json to_json(const SsaOptions& o) {
  return {{"nodes", o.nodes},
          {"k_max", o.k_max},
          {"richardson", o.richardson},
          {"prefactor", to_string(o.prefactor)},
          {"cross_method", to_string(o.cross_method)},
          {"tol", o.tol},
          {"term_slack", o.term_slack}};
}

inline json to_json(const DecompositionReport& r) {
  json terms = json::array();
  for (const auto& d : r.terms)
    terms.push_back({{"K", d.K},
                     {"prefactor", d.prefactor},
                     {"integral", d.integral},
                     {"value", d.value},
                     {"min_gamma_tilde", d.min_gamma_tilde},
                     {"max_increment_ratio", d.max_increment_ratio}});
  return {{"dims", r.dims},
          {"cmi_entropic", r.cmi_entropic},
          {"boundary_term", r.boundary_term},
          {"delta_terms", r.delta_terms},
          {"reconstruction", r.reconstruction},
          {"reconstruction_gap", r.reconstruction_gap},
          {"relative_gap", r.relative_gap},
          {"endpoint_gap", r.endpoint_gap},
          {"twirl_gap", r.twirl_gap},
          {"twirl_ordering", TwirlFamily::ordering},
          {"terms", terms},
          {"pass", r.pass},
          {"wall_seconds", r.wall_seconds}};
}

}  // namespace qmi
