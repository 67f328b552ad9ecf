#pragma once

#include <Eigen/Dense>

#include <complex>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace opmodel {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using Index = Eigen::Index;

/// Numerical thresholds shared by every operation in the library.
struct Tolerances {
  double rank_rel = 1e-9;  ///< relative singular-value cutoff for rank decisions
  double eq_abs = 1e-8;    ///< absolute comparison tolerance
  double psd_abs = 1e-8;   ///< eigenvalue negativity tolerance

  void validate() const;
};

class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when a result that is exact in theory misses its tolerance in
/// floating point.
class ToleranceBreach : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

void require_finite(const Matrix& m, const std::string& what);

/// A linear subspace of C^n held as a matrix with orthonormal columns.
/// The zero subspace keeps its ambient dimension and has no columns.
class Subspace {
 public:
  explicit Subspace(Index ambient_dim = 0);

  /// Wraps columns that are already orthonormal; throws if they are not.
  static Subspace from_orthonormal(Matrix basis, double tol = 1e-8);
  static Subspace full(Index ambient_dim);
  /// Wraps columns the caller guarantees to be orthonormal, without checking.
  static Subspace from_orthonormal_unchecked(Matrix basis);

  Index ambient_dim() const { return ambient_dim_; }
  Index dim() const { return basis_.cols(); }
  bool is_zero() const { return basis_.cols() == 0; }
  const Matrix& basis() const { return basis_; }

  Vector project(const Vector& v) const;
  Matrix projector() const;
  /// Distance from v to the subspace.
  double distance(const Vector& v) const;

  /// Sine of the largest principal angle from `other` into this subspace.
  double gap_from(const Subspace& other) const;
  bool contains(const Subspace& other, double tol) const;
  bool equals(const Subspace& other, double tol) const;

 private:
  Index ambient_dim_;
  Matrix basis_;
};

/// Orthonormal basis for the span of the given columns. Rank is decided by
/// sigma_k > rank_rel * max(sigma_1, 1).
Subspace orthonormalize(const Matrix& columns, const Tolerances& tol);
Subspace orthonormalize(std::span<const Vector> vectors, Index ambient_dim, const Tolerances& tol);

Vector project(const Subspace& s, const Vector& v);
Subspace subspace_sum(const Subspace& a, const Subspace& b, const Tolerances& tol);
Subspace orthogonal_complement(const Subspace& s, const Tolerances& tol);

struct HermitianEig {
  Eigen::VectorXd values;  ///< descending
  Matrix vectors;          ///< unitary, column j pairs with values[j]
};

HermitianEig hermitian_eig(const Matrix& m, const Tolerances& tol);

/// Hermitian eigendecomposition with ascending eigenvalues and no input check.
HermitianEig hermitian_eig_ascending(const Matrix& m);

/// Hermitian square root of a PSD matrix; negative eigenvalues are clamped.
Matrix psd_sqrt(const Matrix& m);

/// Orthonormal basis of the numerical null space of a Hermitian PSD matrix:
/// eigenvectors whose eigenvalue is at most cutoff * max(lambda_max, 1).
Matrix gram_null_space(const Matrix& gram, double cutoff);

/// Closest unitary in Frobenius norm (polar factor).
Matrix nearest_unitary(const Matrix& m);

double trace_norm(const Matrix& hermitian);

/// Applies (I - Q Q^H) twice for numerical stability.
Matrix orthogonalize_against(const Matrix& columns, const Matrix& q);

}  // namespace opmodel
