#pragma once

// Per-seed verification routines behind the verify-* subcommands.

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "qmi/geometric_mean.hpp"
#include "qmi/lieb.hpp"
#include "qmi/power_perturbation.hpp"
#include "qmi/random.hpp"
#include "qmi/relative_entropy.hpp"
#include "qmi/report.hpp"
#include "qmi/ssa.hpp"

namespace qmi {

/// Least-squares slope of log y against log x.
inline double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw InvalidInput("loglog_slope: need at least two points");
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += std::log(x[i]);
    my += std::log(y[i]);
  }
  mx /= x.size();
  my /= y.size();
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = std::log(x[i]) - mx;
    sxy += dx * (std::log(y[i]) - my);
    sxx += dx * dx;
  }
  return sxy / sxx;
}

struct CrossCheckConfig {
  int dim = 3;
  double tol = 1e-5;
  std::optional<double> step;  // default_fd_step when empty
  double spread = 1.0;
  CrossOptions cross;
};

/// Random (A, B, X, Z): FD Hessian of the mean along the ray against −2·Cross,
/// Cross PSD, and agreement of the two Cross evaluations.
inline VerificationReport verify_cross_seed(std::uint64_t seed, const CrossCheckConfig& cfg) {
  Stopwatch sw;
  InstanceGenerator g(seed);
  const MeanPair pair(g.positive_definite(cfg.dim, cfg.spread), g.positive_definite(cfg.dim, cfg.spread));
  const DirectionPair dirs(g.hermitian(cfg.dim), g.hermitian(cfg.dim));
  const Matrix c = cross(pair, dirs, cfg.cross).mat();
  CrossOptions other = cfg.cross;
  other.method = cfg.cross.method == CrossMethod::quadrature ? CrossMethod::closed_form : CrossMethod::quadrature;
  const Matrix c2 = cross(pair, dirs, other).mat();
  const double h = cfg.step.value_or(default_fd_step(pair, dirs));
  const Matrix fd = mean_second_derivative_fd(pair, dirs, h).mat();
  const double norm_c = operator_norm(c);
  const double fd_gap = operator_norm(fd + 2.0 * c) / (1.0 + norm_c);
  const double min_eig = hermitian_eig(c).values(0);
  const double method_gap = operator_norm(c - c2) / (1.0 + norm_c);

  VerificationReport rep;
  rep.check = "geometric_mean.cross";
  rep.property = "second derivative of the geometric mean along (X, Z) equals -2 Cross, and Cross is positive semidefinite";
  rep.seed = seed;
  rep.quantities["dim"] = cfg.dim;
  rep.quantities["fd_step"] = h;
  rep.quantities["cross_norm"] = norm_c;
  rep.quantities["cross_min_eig"] = min_eig;
  rep.quantities["fd_gap"] = fd_gap;
  rep.quantities["method"] = to_string(cfg.cross.method);
  rep.quantities["method_gap"] = method_gap;
  rep.discrepancy = fd_gap;
  rep.tolerance = cfg.tol;
  rep.pass = fd_gap <= cfg.tol && min_eig >= -1e-10 * std::max(norm_c, 1e-300) && method_gap <= 1e-9;
  rep.wall_seconds = sw.seconds();
  return rep;
}

struct PowerCheckConfig {
  int dim = 3;
  std::optional<double> q;  // drawn from {0.1, ..., 0.9} when empty
  double tol = 1e-9;
  int nodes_unit = 100;
  double min_slope = 2.7;
};

/// (L + εF)^q against its second-order expansion: fitted residual order,
/// Löwner power against the eigenbasis power, K PSD.
inline VerificationReport verify_power_seed(std::uint64_t seed, const PowerCheckConfig& cfg) {
  Stopwatch sw;
  InstanceGenerator g(seed);
  const PositiveDefiniteMatrix l = g.positive_definite(cfg.dim);
  const HermitianMatrix f = g.hermitian(cfg.dim);
  const double q = cfg.q.value_or(0.1 * (1 + static_cast<int>(g.uniform(0.0, 9.0))));
  if (!(q >= 0.0 && q <= 1.0)) throw InvalidInput("verify-power: q must lie in [0,1]");
  const PowerExpansion ex = expansion(l, f, q, cfg.nodes_unit);

  const std::vector<double> eps{1e-2, 5e-3, 2.5e-3};
  std::vector<double> res;
  for (double e : eps) {
    const PositiveDefiniteMatrix le(HermitianMatrix::trusted(l.mat() + e * f.mat()));
    const Matrix r = le.pow(q) - ex.base_power.mat() - e * ex.first_order.mat() + e * e * ex.second_order.mat();
    res.push_back(operator_norm(r));
  }
  // At q ∈ {0, 1} the expansion is exact and the residual is round-off.
  const bool exact = res.front() < 1e-13 * (1.0 + operator_norm(l.mat()));
  const double slope = exact ? 3.0 : loglog_slope(eps, res);

  double loewner_gap = 0.0;
  if (q > 0.0 && q < 1.0)
    loewner_gap = operator_norm(loewner_power(l, q, cfg.nodes_unit).mat() - ex.base_power.mat()) /
                  operator_norm(ex.base_power.mat());

  VerificationReport rep;
  rep.check = "power_perturbation.expansion";
  rep.property = "(L + eps F)^q = L^q + eps F_q - eps^2 K + O(eps^3) with K positive semidefinite";
  rep.seed = seed;
  rep.quantities["dim"] = cfg.dim;
  rep.quantities["q"] = q;
  rep.quantities["eps"] = eps;
  rep.quantities["residuals"] = res;
  rep.quantities["fitted_order"] = slope;
  rep.quantities["loewner_gap"] = loewner_gap;
  rep.discrepancy = loewner_gap;
  rep.tolerance = cfg.tol;
  rep.pass = slope >= cfg.min_slope && loewner_gap <= cfg.tol;
  rep.wall_seconds = sw.seconds();
  return rep;
}

struct LiebCheckConfig {
  int n = 2, m = 2;
  std::optional<double> q, r;
  int level = 3;  // exponent level drawn per seed when q, r are not given
  DeltaConvention convention = DeltaConvention::level_k;
  double tol = 1e-4;
  double agreement_tol = 1e-9;
  CrossOptions cross;
};

/// Random Lieb instance drawn by seed. Without explicit (q, r): p = 1 and
/// q an odd multiple of 2^{-level}.
inline ConcavityInstance lieb_instance_for_seed(std::uint64_t seed, const LiebCheckConfig& cfg, double& q, double& r) {
  InstanceGenerator g(seed);
  const PositiveDefiniteMatrix psi = g.positive_definite(cfg.n), phi = g.positive_definite(cfg.m);
  const HermitianMatrix v = g.hermitian(cfg.n), w = g.hermitian(cfg.m);
  if (cfg.q && cfg.r) {
    q = *cfg.q;
    r = *cfg.r;
  } else {
    if (cfg.level < 1 || cfg.level > 12) throw InvalidInput("verify-lieb: level must lie in 1..12");
    const std::uint64_t half = std::uint64_t{1} << (cfg.level - 1);
    const std::uint64_t l = 2 * std::min<std::uint64_t>(static_cast<std::uint64_t>(g.uniform(0.0, half)), half - 1) + 1;
    q = std::ldexp(static_cast<double>(l), -cfg.level);
    r = 1.0 - q;
  }
  const double p = q + r;
  if (!(q >= 0.0 && r >= 0.0 && p > 0.0 && p <= 1.0)) throw InvalidInput("verify-lieb: need q, r ≥ 0 and 0 < q + r ≤ 1");
  return ConcavityInstance(psi, phi, v, w, p);
}

/// G''_{q,r}(0) by the dyadic construction against a central difference of G.
inline VerificationReport verify_lieb_seed(std::uint64_t seed, const LiebCheckConfig& cfg) {
  Stopwatch sw;
  double q = 0, r = 0;
  const ConcavityInstance inst = lieb_instance_for_seed(seed, cfg, q, r);
  LiebOptions lo;
  lo.convention = cfg.convention;
  lo.cross = cfg.cross;
  lo.max_level = std::max(lo.max_level, cfg.level);
  const SecondDerivative sd = second_derivative(inst, q, r, lo);
  const double h = lieb_fd_step(inst);
  const Matrix fd = second_derivative_fd(inst, q, r, h).mat();
  const double norm_sd = operator_norm(sd.value.mat());
  const double fd_gap = operator_norm(fd - sd.value.mat()) / std::max(norm_sd, 1e-6);
  const double max_eig = hermitian_eig(sd.value).values.maxCoeff();

  VerificationReport rep;
  rep.check = "lieb.second_derivative";
  rep.property = "second derivative of (Psi + eps V)^q (x) (Phi + eps W)^r equals -2 times the sum of "
                 "propagated sources, and is negative semidefinite";
  rep.seed = seed;
  rep.quantities["dims"] = {cfg.n, cfg.m};
  rep.quantities["q"] = q;
  rep.quantities["r"] = r;
  rep.quantities["delta_convention"] = to_string(cfg.convention);
  rep.quantities["dyadic"] = sd.dyadic;
  rep.quantities["level"] = sd.level;
  rep.quantities["fd_step"] = h;
  rep.quantities["fd_gap"] = fd_gap;
  rep.quantities["y_vs_recursion"] = sd.agreement;
  rep.quantities["cauchy_increment"] = sd.cauchy_increment;
  rep.quantities["max_eig"] = max_eig;
  rep.discrepancy = fd_gap;
  rep.tolerance = cfg.tol;
  // A truncated exponent is only as good as its Cauchy increment.
  const double allowed = sd.dyadic ? cfg.tol : cfg.tol + sd.cauchy_increment / std::max(norm_sd, 1e-6);
  rep.quantities["allowed_fd_gap"] = allowed;
  rep.pass = fd_gap <= allowed && sd.agreement <= cfg.agreement_tol && max_eig <= 1e-10 * std::max(norm_sd, 1e-300);
  rep.wall_seconds = sw.seconds();
  return rep;
}

/// Geometric decay rate of a Cauchy-increment table: exp of the least-squares
/// slope of log(increment) against its index, over entries above `floor`.
inline double fitted_increment_ratio(const std::vector<double>& inc, double floor) {
  std::vector<double> x, y;
  for (std::size_t i = 0; i < inc.size(); ++i)
    if (inc[i] > floor) {
      x.push_back(std::exp(static_cast<double>(i)));
      y.push_back(inc[i]);
    }
  if (x.size() < 2) return 0.0;
  return std::exp(loglog_slope(x, y));
}

struct RelentCheckConfig {
  int dim = 2;
  int k_max = 14;
  double t = 0.3;
  double tol = 1e-4;
  double max_ratio = 0.6;
  std::vector<double> sigma_grid{0.25, 0.5, 0.75};
  RelentOptions relent;
};

/// Random density segment: convexity certificate plus increment decay.
inline VerificationReport verify_relent_seed(std::uint64_t seed, const RelentCheckConfig& cfg) {
  InstanceGenerator g(seed);
  const SegmentInstance seg(g.density(cfg.dim), g.density(cfg.dim), g.density(cfg.dim), g.density(cfg.dim), cfg.t);
  RelentOptions ro = cfg.relent;
  ro.k_max = cfg.k_max;
  VerificationReport rep = convexity_certificate(seg, cfg.sigma_grid, cfg.tol, ro);
  const GammaLimit gl = gamma_limit(seg, 0.5, cfg.k_max, ro.cross);
  rep.seed = seed;
  rep.quantities["dim"] = cfg.dim;
  rep.quantities["increments"] = gl.increments;
  const double fitted = fitted_increment_ratio(gl.increments, 1e-12 * (1.0 + operator_norm(gl.raw)));
  rep.quantities["max_increment_ratio"] = gl.max_ratio;
  rep.quantities["fitted_increment_ratio"] = fitted;
  rep.pass = rep.pass && fitted <= cfg.max_ratio;
  return rep;
}

/// Full-rank random state on d_A ⊗ d_B ⊗ d_C.
inline TripartiteState random_state(std::uint64_t seed, std::array<int, 3> dims, double spread = 1.0) {
  InstanceGenerator g(seed);
  return TripartiteState(g.density(dims[0] * dims[1] * dims[2], spread), dims);
}

}  // namespace qmi
