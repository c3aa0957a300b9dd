#include <gtest/gtest.h>

#include <numbers>

#include "qmi/quadrature.hpp"

using namespace qmi;

TEST(GaussJacobi, WeightsPositiveNodesIncreasing) {
  for (auto [a, b] : {std::pair{0.0, 0.0}, {-0.3, -0.7}, {0.5, 1.5}, {-0.9, -0.1}}) {
    const QuadratureRule r = gauss_jacobi(40, a, b);
    for (std::size_t i = 0; i < r.size(); ++i) {
      EXPECT_GT(r.weights[i], 0.0);
      if (i > 0) EXPECT_GT(r.nodes[i], r.nodes[i - 1]);
    }
  }
}

TEST(GaussLegendre, Monomials) {
  const QuadratureRule r = unit_interval_rule(20);
  for (int k = 0; k < 40; ++k) {
    double s = 0;
    for (std::size_t i = 0; i < r.size(); ++i) s += r.weights[i] * std::pow(r.nodes[i], k);
    EXPECT_NEAR(s, 1.0 / (k + 1), 1e-12 / (k + 1)) << "k = " << k;
  }
}

TEST(GaussJacobi, ReferenceMoments) {
  // ∫_{-1}^{1} (1-x)^α (1+x)^β dx = 2^{α+β+1} B(α+1, β+1).
  const double a = -0.4, b = 0.6;
  const QuadratureRule r = gauss_jacobi(30, a, b);
  double s = 0;
  for (std::size_t i = 0; i < r.size(); ++i) s += r.weights[i];
  const double beta = std::exp(std::lgamma(a + 1) + std::lgamma(b + 1) - std::lgamma(a + b + 2));
  EXPECT_NEAR(s, std::pow(2.0, a + b + 1) * beta, 1e-12);
}

TEST(HalfLineSqrt, BetaIntegrals) {
  const QuadratureRule r = half_line_sqrt_rule(200);
  const double pi = std::numbers::pi;
  EXPECT_NEAR(integrate_half_line_sqrt([](double s) { return 1.0 / (1.0 + s); }, r), pi, 1e-12);
  EXPECT_NEAR(integrate_half_line_sqrt([](double s) { return std::pow(1.0 + s, -2.0); }, r), pi / 2, 1e-12);
  EXPECT_NEAR(integrate_half_line_sqrt([](double s) { return std::pow(1.0 + s, -3.0); }, r), 3 * pi / 8, 1e-12);
}

TEST(HalfLineSqrt, WrongRuleKind) {
  EXPECT_THROW(integrate_half_line_sqrt([](double) { return 1.0; }, unit_interval_rule(4)), InvalidInput);
}

TEST(HalfLineSqrt, NonFiniteSample) {
  const QuadratureRule r = half_line_sqrt_rule(10);
  EXPECT_THROW(integrate_half_line_sqrt([](double) { return std::nan(""); }, r), NumericalFailure);
}

TEST(Loewner, MatrixSquareRoot) {
  // L^q = (sin πq/π) ∫ t^q (1/t − 1/(t + d)) dt on each eigenvalue.
  const QuadratureRule r = loewner_rule(0.5, 100);
  for (auto [d, want] : {std::pair{1.0, 1.0}, {4.0, 2.0}}) {
    const double got = integrate_loewner(0.5, [d](double t) { return d / (t * (t + d)); }, r, 2.0);
    EXPECT_NEAR(got, want, 1e-9);
  }
}

TEST(Loewner, ScalarPowers) {
  for (double q : {0.1, 0.3, 0.7}) {
    const QuadratureRule r = loewner_rule(q, 100);
    EXPECT_NEAR(integrate_loewner(q, [](double t) { return 1.0 / (t * (t + 1.0)); }, r), 1.0, 1e-9);
  }
  const QuadratureRule r = loewner_rule(0.3, 100);
  EXPECT_NEAR(integrate_loewner(0.3, [](double t) { return 2.0 / (t * (t + 2.0)); }, r, std::sqrt(2.0)),
              std::pow(2.0, 0.3), 1e-9);
  EXPECT_NEAR(std::pow(2.0, 0.3), 1.231144, 1e-6);
}

TEST(Loewner, RejectsEndpoints) {
  EXPECT_THROW(loewner_rule(0.0, 10), InvalidInput);
  EXPECT_THROW(loewner_rule(1.0, 10), InvalidInput);
}

TEST(TriangularWeight, Constant) {
  EXPECT_NEAR(triangular_weight(1.0 / 3, [](double) { return 1.0; }), 1.0 / 3, 1e-14);
  for (int i = 1; i <= 9; ++i) {
    const double t = 0.1 * i;
    EXPECT_NEAR(triangular_weight(t, [](double) { return 1.0; }), (1 - t) / 2, 1e-14) << "t = " << t;
  }
}

TEST(TriangularWeight, Linear) {
  EXPECT_NEAR(triangular_weight(0.5, [](double s) { return s; }), 1.0 / 8, 1e-14);
}

TEST(TriangularWeight, AgainstNestedIntegral) {
  // ∫_0^1 ∫_{tλ}^{λ} e^σ dσ dλ = (e − 1) − (e^t − 1)/t.
  const double t = 0.3;
  const double want = (std::exp(1.0) - 1.0) - (std::exp(t) - 1.0) / t;
  EXPECT_NEAR(triangular_weight(t, [](double s) { return std::exp(s); }), want, 1e-13);
}

TEST(TriangularWeight, RejectsBadT) {
  EXPECT_THROW(triangular_weight(0.0, [](double) { return 1.0; }), InvalidInput);
  EXPECT_THROW(triangular_weight(1.0, [](double) { return 1.0; }), InvalidInput);
}
