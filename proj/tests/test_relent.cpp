#include <gtest/gtest.h>

#include <numbers>

#include "qmi/random.hpp"
#include "qmi/relative_entropy.hpp"
#include "qmi/suites.hpp"

using namespace qmi;

namespace {

PositiveDefiniteMatrix pd_diag(std::initializer_list<double> v) {
  RealVector d(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) d(i++) = x;
  return PositiveDefiniteMatrix(HermitianMatrix(Matrix(d.cast<cplx>().asDiagonal())));
}

double maxabs(const Matrix& m) { return m.cwiseAbs().maxCoeff(); }

/// d²/dσ² of a log₂a − a log₂b along a(σ) = a2 + σ(a1 − a2), b likewise.
double scalar_relent_second(double a1, double a2, double b1, double b2, double s) {
  const double a = a2 + s * (a1 - a2), b = b2 + s * (b1 - b2), x = a1 - a2, z = b1 - b2;
  const double u = x * b - z * a;
  return u * u / (a * b * b) / std::numbers::ln2;
}

SegmentInstance random_segment(std::uint64_t seed, int n, double t) {
  InstanceGenerator g(seed);
  const PositiveDefiniteMatrix a1 = g.density(n), a2 = g.density(n), b1 = g.density(n), b2 = g.density(n);
  return SegmentInstance(a1, a2, b1, b2, t);
}

}  // namespace

TEST(Relent, EqualArgumentsVanish) {
  InstanceGenerator g(50);
  const PositiveDefiniteMatrix a = g.density(3);
  EXPECT_NEAR(relent(a, a), 0.0, 1e-14);
}

TEST(Relent, DiagonalValues) {
  EXPECT_NEAR(relent(pd_diag({0.9, 0.1}), pd_diag({0.5, 0.5})), 0.531004, 1e-6);
  EXPECT_NEAR(relent(pd_diag({0.5, 0.5}), pd_diag({0.9, 0.1})), 0.736966, 1e-6);
}

TEST(Relent, DimensionMismatch) { EXPECT_THROW(relent(pd_diag({1}), pd_diag({1, 1})), InvalidInput); }

TEST(FOperator, IdentityPairsToZero) {
  const PositiveDefiniteMatrix id(HermitianMatrix::identity(2));
  EXPECT_NEAR(pairing(vec_embed(Matrix::Identity(2, 2)), f_operator(id, id).mat()), 0.0, 1e-15);
}

TEST(FOperator, PairingIsRelent) {
  InstanceGenerator g(53);
  const PositiveDefiniteMatrix a = g.density(2), b = g.density(2);
  EXPECT_NEAR(pairing(vec_embed(Matrix::Identity(2, 2)), f_operator(a, b).mat()), relent(a, b), 1e-11);
  const PositiveDefiniteMatrix half(HermitianMatrix::trusted(Matrix::Identity(2, 2) * 0.5));
  EXPECT_NEAR(pairing(vec_embed(Matrix::Identity(2, 2)), f_operator(half, b).mat()), relent(half, b), 1e-11);
}

TEST(FkFamily, Scalars) {
  EXPECT_NEAR(f_k_family(pd_diag({4}), pd_diag({2}), 1).mat()(0, 0).real(), 2 * std::sqrt(2.0), 1e-14);
}

TEST(FkFamily, LargeKTendsToFirstFactor) {
  InstanceGenerator g(54);
  const PositiveDefiniteMatrix a = g.density(2), b = g.density(2);
  EXPECT_LE(maxabs(f_k_family(a, b, 40).mat() - kron(a.mat(), Matrix::Identity(2, 2))), 1e-11);
}

TEST(FkFamily, DifferenceQuotientTendsToF) {
  InstanceGenerator g(55);
  const PositiveDefiniteMatrix a = g.density(2), b = g.density(2);
  const Vector vi = vec_embed(Matrix::Identity(2, 2));
  const double target = pairing(vi, f_operator(a, b).mat());
  const Matrix lim = kron(a.mat(), Matrix::Identity(2, 2));
  std::vector<double> err;
  for (int k = 4; k <= 12; ++k) {
    const double d = std::ldexp(1.0, -k);
    err.push_back(std::abs(-kLog2e * pairing(vi, (f_k_family(a, b, k).mat() - lim) / d) - target));
  }
  for (std::size_t i = 1; i < err.size(); ++i) EXPECT_NEAR(err[i] / err[i - 1], 0.5, 0.05);
}

TEST(GammaSequence, ZeroDirections) {
  InstanceGenerator g(56);
  const PositiveDefiniteMatrix a = g.density(2), b = g.density(2);
  const SegmentInstance seg(a, a, b, b, 0.5);
  const GammaSequence gs = gamma_sequence(seg.concavity_instance(0.5), 6);
  for (const Matrix& m : gs.gamma) EXPECT_EQ(maxabs(m), 0.0);
  const GammaLimit gl = gamma_limit(seg, 0.5, 6);
  EXPECT_EQ(maxabs(gl.raw), 0.0);
  for (double inc : gl.increments) EXPECT_EQ(inc, 0.0);
}

TEST(GammaSequence, FirstTermIsSource) {
  const SegmentInstance seg = random_segment(57, 2, 0.5);
  const ConcavityInstance inst = seg.concavity_instance(0.4);
  const GammaSequence gs = gamma_sequence(inst, 3);
  EXPECT_LE(maxabs(gs.gamma[0] - source(inst, DyadicExponent(1, 1)).mat()), 1e-14);
}

TEST(GammaSequence, ScalarSegmentPsdAndSourceDecay) {
  InstanceGenerator g(59);
  auto pos = [&] { return pd_diag({g.uniform(0.2, 2.0)}); };
  const PositiveDefiniteMatrix a1 = pos(), a2 = pos(), b1 = pos(), b2 = pos();
  const SegmentInstance seg(a1, a2, b1, b2, 0.5);
  const ConcavityInstance inst = seg.concavity_instance(0.5);
  const GammaSequence gs = gamma_sequence(inst, 8);
  for (const Matrix& m : gs.gamma) EXPECT_GE(m(0, 0).real(), 0.0);
  LiebEngine e(inst, LiebOptions{});
  const double s1 = std::abs(source_l(e, 1)(0, 0));
  for (int l = 2; l <= 8; ++l) EXPECT_LE(std::abs(source_l(e, l)(0, 0)), 2.0 * s1 * std::ldexp(1.0, -2 * (l - 1)));
}

TEST(GammaLimit, ScalarCalculus) {
  const double a1 = 0.7, a2 = 1.6, b1 = 1.3, b2 = 0.4;
  const SegmentInstance seg(pd_diag({a1}), pd_diag({a2}), pd_diag({b1}), pd_diag({b2}), 0.5);
  for (double s : {0.2, 0.5, 0.9}) {
    const double want = scalar_relent_second(a1, a2, b1, b2, s);
    EXPECT_NEAR(gamma_tilde(seg, s), want, 1e-5 * want) << "sigma = " << s;
  }
}

TEST(GammaLimit, IncrementsHalve) {
  const SegmentInstance seg = random_segment(61, 2, 0.5);
  const GammaLimit gl = gamma_limit(seg, 0.5, 14);
  const double fitted = fitted_increment_ratio(gl.increments, 1e-12 * (1 + operator_norm(gl.raw)));
  EXPECT_LE(std::log2(fitted), -1.0 + 0.2);
  EXPECT_LT(gl.max_ratio, 1.0);
}

TEST(GammaLimit, MethodsAgree) {
  const SegmentInstance seg = random_segment(62, 2, 0.5);
  CrossOptions cf;
  cf.method = CrossMethod::closed_form;
  const GammaLimit a = gamma_limit(seg, 0.3, 10), b = gamma_limit(seg, 0.3, 10, cf);
  EXPECT_LE(operator_norm(a.extrapolated - b.extrapolated), 1e-12 * operator_norm(a.extrapolated));
}

TEST(GammaLimit, RejectsShortSequence) {
  const SegmentInstance seg = random_segment(63, 2, 0.5);
  EXPECT_THROW(gamma_limit(seg, 0.5, 2), InvalidInput);
}

TEST(Convexity, TrivialSegment) {
  InstanceGenerator g(64);
  const PositiveDefiniteMatrix a = g.density(2), b = g.density(2);
  const SegmentInstance seg(a, a, b, b, 0.4);
  RelentOptions ro;
  ro.nodes_unit = 10;
  const VerificationReport r = convexity_certificate(seg, {0.5}, 1e-4, ro);
  EXPECT_TRUE(r.pass);
  EXPECT_NEAR(r.quantities["double_integral"].get<double>(), 0.0, 1e-15);
}

TEST(Convexity, ClassicalMatchesKl) {
  const SegmentInstance seg(pd_diag({0.7, 0.3}), pd_diag({0.2, 0.8}), pd_diag({0.5, 0.5}), pd_diag({0.9, 0.1}), 0.3);
  for (double s : {0.25, 0.5, 0.75}) {
    const double want = scalar_relent_second(0.7, 0.2, 0.5, 0.9, s) + scalar_relent_second(0.3, 0.8, 0.5, 0.1, s);
    EXPECT_NEAR(gamma_tilde(seg, s), want, 1e-6 * want) << "sigma = " << s;
  }
  RelentOptions ro;
  ro.nodes_unit = 30;
  EXPECT_TRUE(convexity_certificate(seg, {0.5}, 1e-4, ro).pass);
}

TEST(Convexity, RandomInstancePasses) {
  RelentCheckConfig cfg;
  const VerificationReport r = verify_relent_seed(67, cfg);
  EXPECT_TRUE(r.pass) << to_json(r).dump();
}
