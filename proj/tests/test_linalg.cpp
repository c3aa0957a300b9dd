#include <gtest/gtest.h>

#include "oracles.hpp"
#include "qmi/linalg.hpp"
#include "qmi/random.hpp"

using namespace qmi;

namespace {

Matrix diag(std::initializer_list<double> v) {
  RealVector d(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) d(i++) = x;
  return d.cast<cplx>().asDiagonal();
}

double maxabs(const Matrix& m) { return m.cwiseAbs().maxCoeff(); }

}  // namespace

TEST(OperatorNorm, Identity) { EXPECT_NEAR(operator_norm(Matrix::Identity(3, 3)), 1.0, 1e-15); }

TEST(OperatorNorm, HermitianSpectralRadius) { EXPECT_NEAR(operator_norm(diag({-2, 1})), 2.0, 1e-15); }

TEST(OperatorNorm, NilpotentBlock) {
  Matrix m(2, 2);
  m << 0, 2, 0, 0;
  EXPECT_NEAR(operator_norm(m), 2.0, 1e-14);
}

TEST(OperatorNorm, NonFiniteIsInvalid) {
  Matrix m = Matrix::Identity(2, 2);
  m(0, 1) = std::nan("");
  EXPECT_THROW(operator_norm(m), InvalidInput);
}

TEST(HermitianMatrix, RejectsSkew) {
  Matrix m(2, 2);
  m << 1, 1, 0, 1;
  EXPECT_THROW(HermitianMatrix{m}, InvalidInput);
}

TEST(PositiveDefinite, RejectsSingular) {
  EXPECT_THROW(PositiveDefiniteMatrix(HermitianMatrix(diag({1, 0}))), InvalidInput);
  EXPECT_THROW(PositiveDefiniteMatrix(HermitianMatrix(diag({1, -1}))), InvalidInput);
}

TEST(HermitianEig, DiagonalAscending) {
  const SpectralDecomposition e = hermitian_eig(diag({3, 1}));
  EXPECT_NEAR(e.values(0), 1.0, 1e-15);
  EXPECT_NEAR(e.values(1), 3.0, 1e-15);
}

TEST(HermitianEig, PauliX) {
  Matrix m(2, 2);
  m << 0, 1, 1, 0;
  const SpectralDecomposition e = hermitian_eig(m);
  EXPECT_NEAR(e.values(0), -1.0, 1e-15);
  EXPECT_NEAR(e.values(1), 1.0, 1e-15);
}

TEST(HermitianEig, RandomReconstruction) {
  InstanceGenerator g(7);
  const HermitianMatrix h = g.hermitian(6);
  const SpectralDecomposition e = hermitian_eig(h);
  EXPECT_LE(maxabs(e.reconstruct() - h.mat()), 1e-12);
  EXPECT_LE(maxabs(e.vectors.adjoint() * e.vectors - Matrix::Identity(6, 6)), 1e-13);
  // Same input, same phases.
  EXPECT_EQ(hermitian_eig(h).vectors, e.vectors);
}

TEST(MatrixFunction, SqrtOfDiagonal) {
  const HermitianMatrix r = matrix_function(HermitianMatrix(diag({4, 9})), [](double x) { return std::sqrt(x); });
  EXPECT_LE(maxabs(r.mat() - diag({2, 3})), 1e-15);
}

TEST(MatrixFunction, LogOfIdentity) {
  const PositiveDefiniteMatrix id(HermitianMatrix::identity(3));
  EXPECT_LE(maxabs(id.log2()), 1e-15);
}

TEST(MatrixFunction, PowerComposition) {
  InstanceGenerator g(11);
  const PositiveDefiniteMatrix a = g.positive_definite(5);
  const PositiveDefiniteMatrix a03(HermitianMatrix::trusted(a.pow(0.3)));
  EXPECT_LE(maxabs(a03.pow(10.0 / 3.0) - a.mat()), 1e-10);
}

TEST(MatrixFunction, DomainErrorNamesEigenvalue) {
  try {
    matrix_function(HermitianMatrix(diag({-1, 2})), [](double x) { return std::log(x); });
    FAIL() << "expected DomainError";
  } catch (const DomainError& e) {
    EXPECT_NE(std::string(e.what()).find("-1"), std::string::npos);
  }
}

TEST(Kron, Identities) {
  EXPECT_EQ(kron(Matrix::Identity(2, 2), Matrix::Identity(2, 2)), Matrix(Matrix::Identity(4, 4)));
  EXPECT_LE(maxabs(kron(diag({1, 2}), diag({3, 4})) - diag({3, 4, 6, 8})), 0.0);
}

TEST(Kron, MixedProduct) {
  InstanceGenerator g(3);
  const Matrix a = g.complex_gaussian(2, 2), b = g.complex_gaussian(2, 2), c = g.complex_gaussian(2, 2),
               d = g.complex_gaussian(2, 2);
  EXPECT_LE(maxabs(kron(a, b) * kron(c, d) - kron(a * c, b * d)), 1e-13);
}

TEST(Pairing, IdentityCase) {
  const Matrix id = Matrix::Identity(2, 2);
  EXPECT_NEAR(pairing(id, id, id), 2.0, 1e-15);
  EXPECT_NEAR(pairing(vec_embed(id), Matrix(Matrix::Identity(4, 4))), 2.0, 1e-15);
}

TEST(Pairing, DiagonalTrace) {
  EXPECT_NEAR(pairing(Matrix::Identity(2, 2), diag({1, 2}), diag({3, 4})), 11.0, 1e-14);
}

TEST(Pairing, RandomRectangular) {
  InstanceGenerator g(5);
  const Matrix k = g.complex_gaussian(2, 3);
  const HermitianMatrix a = g.hermitian(2), b = g.hermitian(3);
  const double direct = (k.adjoint() * a.mat() * k * b.mat()).trace().real();
  EXPECT_NEAR(pairing(k, a, b), direct, 1e-12);
}

TEST(Sylvester, HilbertExampleEntries) {
  const PositiveDefiniteMatrix y(HermitianMatrix(diag({1, 2})));
  const HermitianMatrix ones(Matrix::Ones(2, 2));
  Matrix want(2, 2);
  want << 0.5, 1.0 / 3, 1.0 / 3, 0.25;
  EXPECT_LE(maxabs(sylvester_solve(y, ones).mat() - want), 1e-15);
}

TEST(Sylvester, Scalar) {
  const PositiveDefiniteMatrix y(HermitianMatrix(diag({3})));
  EXPECT_NEAR(sylvester_solve(y, HermitianMatrix(diag({6}))).mat()(0, 0).real(), 1.0, 1e-15);
}

TEST(Sylvester, RandomAgainstKroneckerSolveAndIntegral) {
  InstanceGenerator g(9);
  const PositiveDefiniteMatrix y = g.positive_definite(5);
  const Matrix c = g.complex_gaussian(5, 5);
  const HermitianMatrix omega = HermitianMatrix::trusted(c * c.adjoint());
  const Matrix x = sylvester_solve(y, omega).mat();
  EXPECT_GE(hermitian_eig(x).values(0), -1e-11);
  EXPECT_LE(maxabs(x - oracle::sylvester_kron(y.mat(), omega.mat())), 1e-11);
  EXPECT_LE(operator_norm(x - oracle::lyapunov_integral(y.mat(), omega.mat())) / operator_norm(x), 1e-8);
}

TEST(PartialTrace, ProductFactors) {
  InstanceGenerator g(1);
  const Matrix ra = g.density(2).mat(), rb = g.density(3).mat(), rc = g.density(2).mat();
  const Matrix full = kron(kron(ra, rb), rc);
  EXPECT_LE(maxabs(partial_trace(full, {2, 3, 2}, {2}) - kron(ra, rb)), 1e-15);
  EXPECT_LE(maxabs(partial_trace(full, {2, 3, 2}, {0, 2}) - rb), 1e-15);
  EXPECT_LE(maxabs(partial_trace(full, {2, 3, 2}, {1}) - kron(ra, rc)), 1e-15);
}

TEST(PartialTrace, MaximallyMixed) {
  const Matrix m = Matrix::Identity(8, 8) / 8.0;
  EXPECT_LE(maxabs(partial_trace(m, {2, 2, 2}, {0, 1}) - Matrix(Matrix::Identity(2, 2) / 2.0)), 1e-16);
}

TEST(PartialTrace, RandomTrace) {
  InstanceGenerator g(13);
  const Matrix r = g.density(8).mat();
  EXPECT_NEAR(partial_trace(r, {2, 2, 2}, {2}).trace().real(), 1.0, 1e-13);
}

TEST(PartialTrace, BadArguments) {
  EXPECT_THROW(partial_trace(Matrix::Identity(8, 8), {2, 2}, {0}), InvalidInput);
  EXPECT_THROW(partial_trace(Matrix::Identity(4, 4), {2, 2}, {2}), InvalidInput);
}

TEST(InstanceGenerator, Deterministic) {
  InstanceGenerator a(42), b(42);
  EXPECT_EQ(a.positive_definite(4).mat(), b.positive_definite(4).mat());
  EXPECT_NEAR(InstanceGenerator(3).density(3).mat().trace().real(), 1.0, 1e-15);
}
