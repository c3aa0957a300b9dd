#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "qmi/linalg.hpp"

namespace qmi {

/// Deterministic random instances. Positive matrices are exponentials of
/// Gaussian Hermitian matrices, so they are full rank by construction.
class InstanceGenerator {
 public:
  explicit InstanceGenerator(std::uint64_t seed) : rng_(seed) {}

  double normal() { return normal_(rng_); }
  double uniform(double a, double b) { return std::uniform_real_distribution<double>(a, b)(rng_); }

  /// Complex entries with independent standard-normal real and imaginary parts.
  Matrix complex_gaussian(Eigen::Index rows, Eigen::Index cols) {
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
      for (Eigen::Index j = 0; j < cols; ++j) {
        const double re = normal();
        const double im = normal();
        m(i, j) = cplx(re, im);
      }
    return m;
  }

  /// Hermitian G = (C + C*)/2 from a complex Gaussian C.
  HermitianMatrix hermitian(Eigen::Index n) { return HermitianMatrix::trusted(complex_gaussian(n, n)); }

  /// exp(spread · G/√n) scaled to unit mean eigenvalue.
  PositiveDefiniteMatrix positive_definite(Eigen::Index n, double spread = 1.0) {
    const Matrix e = exp_of(n, spread);
    const double tr = e.trace().real();
    return PositiveDefiniteMatrix(HermitianMatrix::trusted(e * (static_cast<double>(n) / tr)));
  }

  /// exp(spread · G/√n) scaled to unit trace.
  PositiveDefiniteMatrix density(Eigen::Index n, double spread = 1.0) {
    const Matrix e = exp_of(n, spread);
    return PositiveDefiniteMatrix(HermitianMatrix::trusted(e / e.trace().real()));
  }

 private:
  Matrix exp_of(Eigen::Index n, double spread) {
    const HermitianMatrix g = hermitian(n);
    const double sc = spread / std::sqrt(static_cast<double>(n));
    return hermitian_eig(g).apply([sc](double x) { return std::exp(sc * x); });
  }

  std::mt19937_64 rng_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace qmi
