#include "opmodel/random.hpp"

#include <Eigen/QR>

#include <cmath>

namespace opmodel {

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
  std::uint64_t z = base + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

Matrix ginibre(Index rows, Index cols, Rng& rng) {
  std::normal_distribution<double> n01(0.0, std::sqrt(0.5));
  Matrix m(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) {
      const double re = n01(rng);
      const double im = n01(rng);
      m(i, j) = Complex(re, im);
    }
  return m;
}

Vector random_vector(Index n, Rng& rng) { return ginibre(n, 1, rng).col(0); }

Matrix haar_unitary(Index n, Rng& rng) {
  if (n == 0) return Matrix(0, 0);
  const Matrix z = ginibre(n, n, rng);
  Eigen::HouseholderQR<Matrix> qr(z);
  Matrix q = qr.householderQ() * Matrix::Identity(n, n);
  const Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Index j = 0; j < n; ++j) {
    const double mag = std::abs(r(j, j));
    if (mag > 0.0) q.col(j) *= r(j, j) / mag;
  }
  return q;
}

Matrix random_hermitian(Index n, Rng& rng) {
  const Matrix g = ginibre(n, n, rng);
  return 0.5 * (g + g.adjoint());
}

}  // namespace opmodel
