#include "opmodel/linalg.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>

namespace opmodel {

void Tolerances::validate() const {
  if (!(rank_rel > 0.0) || !(eq_abs > 0.0) || !(psd_abs > 0.0)) {
    throw std::invalid_argument("tolerances must be strictly positive");
  }
}

void require_finite(const Matrix& m, const std::string& what) {
  if (!m.allFinite()) throw std::invalid_argument(what + ": non-finite entry");
}

Subspace::Subspace(Index ambient_dim) : ambient_dim_(ambient_dim), basis_(ambient_dim, 0) {
  if (ambient_dim < 0) throw DimensionError("negative ambient dimension");
}

Subspace Subspace::from_orthonormal(Matrix basis, double tol) {
  Subspace s(basis.rows());
  if (basis.cols() > basis.rows()) throw DimensionError("more basis columns than ambient dimension");
  if (basis.cols() > 0) {
    const Matrix gram = basis.adjoint() * basis;
    const double defect = (gram - Matrix::Identity(basis.cols(), basis.cols())).cwiseAbs().maxCoeff();
    if (defect > tol) throw std::invalid_argument("subspace basis is not orthonormal");
  }
  s.basis_ = std::move(basis);
  return s;
}

Subspace Subspace::from_orthonormal_unchecked(Matrix basis) {
  Subspace s(basis.rows());
  s.basis_ = std::move(basis);
  return s;
}

Subspace Subspace::full(Index ambient_dim) {
  Subspace s(ambient_dim);
  s.basis_ = Matrix::Identity(ambient_dim, ambient_dim);
  return s;
}

Vector Subspace::project(const Vector& v) const {
  if (v.size() != ambient_dim_) throw DimensionError("project: vector length does not match subspace");
  if (basis_.cols() == 0) return Vector::Zero(ambient_dim_);
  return basis_ * (basis_.adjoint() * v);
}

Matrix Subspace::projector() const { return basis_ * basis_.adjoint(); }

double Subspace::distance(const Vector& v) const { return (v - project(v)).norm(); }

double Subspace::gap_from(const Subspace& other) const {
  if (other.ambient_dim_ != ambient_dim_) throw DimensionError("subspaces live in different spaces");
  if (other.dim() == 0) return 0.0;
  const Matrix residual = other.basis_ - basis_ * (basis_.adjoint() * other.basis_);
  Eigen::JacobiSVD<Matrix> svd(residual);
  return svd.singularValues().size() ? svd.singularValues()(0) : 0.0;
}

bool Subspace::contains(const Subspace& other, double tol) const { return gap_from(other) <= tol; }

bool Subspace::equals(const Subspace& other, double tol) const {
  return ambient_dim_ == other.ambient_dim_ && dim() == other.dim() && gap_from(other) <= tol;
}

namespace {

Matrix leading_left_vectors(const Matrix& columns, double rank_rel) {
  const Index n = columns.rows();
  if (columns.cols() == 0 || n == 0) return Matrix(n, 0);
  Eigen::BDCSVD<Matrix> svd(columns, Eigen::ComputeThinU);
  const auto& sv = svd.singularValues();
  const double cutoff = rank_rel * std::max(sv.size() ? sv(0) : 0.0, 1.0);
  Index rank = 0;
  while (rank < sv.size() && sv(rank) > cutoff) ++rank;
  return svd.matrixU().leftCols(rank);
}

}  // namespace

Subspace orthonormalize(const Matrix& columns, const Tolerances& tol) {
  require_finite(columns, "orthonormalize");
  Subspace s = Subspace::from_orthonormal(leading_left_vectors(columns, tol.rank_rel), 1e-6);
  return s;
}

Subspace orthonormalize(std::span<const Vector> vectors, Index ambient_dim, const Tolerances& tol) {
  Matrix stacked(ambient_dim, static_cast<Index>(vectors.size()));
  for (Index j = 0; j < stacked.cols(); ++j) {
    const Vector& v = vectors[static_cast<std::size_t>(j)];
    if (v.size() != ambient_dim) throw DimensionError("orthonormalize: vector length mismatch");
    stacked.col(j) = v;
  }
  return orthonormalize(stacked, tol);
}

Vector project(const Subspace& s, const Vector& v) { return s.project(v); }

Matrix orthogonalize_against(const Matrix& columns, const Matrix& q) {
  if (q.cols() == 0) return columns;
  Matrix r = columns - q * (q.adjoint() * columns);
  r -= q * (q.adjoint() * r);
  return r;
}

Subspace subspace_sum(const Subspace& a, const Subspace& b, const Tolerances& tol) {
  if (a.ambient_dim() != b.ambient_dim()) throw DimensionError("subspace_sum: ambient dimension mismatch");
  if (b.dim() == 0) return a;
  if (a.dim() == 0) return b;
  // b's columns have unit norm, so the cutoff is absolute in practice.
  const Matrix fresh = leading_left_vectors(orthogonalize_against(b.basis(), a.basis()), tol.rank_rel);
  Matrix joined(a.ambient_dim(), a.dim() + fresh.cols());
  joined << a.basis(), fresh;
  // One more pass keeps the joined columns orthonormal to working precision.
  if (fresh.cols() > 0) {
    joined.rightCols(fresh.cols()) = orthogonalize_against(fresh, a.basis());
    Eigen::HouseholderQR<Matrix> qr(joined.rightCols(fresh.cols()));
    joined.rightCols(fresh.cols()) = qr.householderQ() * Matrix::Identity(a.ambient_dim(), fresh.cols());
  }
  return Subspace::from_orthonormal(std::move(joined), 1e-6);
}

Subspace orthogonal_complement(const Subspace& s, const Tolerances& tol) {
  const Index n = s.ambient_dim();
  return orthonormalize(Matrix(Matrix::Identity(n, n) - s.projector()), tol);
}

HermitianEig hermitian_eig_ascending(const Matrix& m) {
  HermitianEig out;
  if (m.rows() == 0) {
    out.values = Eigen::VectorXd(0);
    out.vectors = Matrix(0, 0);
    return out;
  }
  const Matrix sym = 0.5 * (m + m.adjoint());
  Eigen::SelfAdjointEigenSolver<Matrix> es(sym);
  if (es.info() != Eigen::Success) throw ToleranceBreach("Hermitian eigensolver did not converge");
  out.values = es.eigenvalues();
  out.vectors = es.eigenvectors();
  return out;
}

HermitianEig hermitian_eig(const Matrix& m, const Tolerances& tol) {
  if (m.rows() != m.cols()) throw DimensionError("hermitian_eig: matrix is not square");
  require_finite(m, "hermitian_eig");
  const double scale = m.norm();
  if ((m - m.adjoint()).norm() > tol.eq_abs * std::max(scale, 1.0)) {
    throw std::invalid_argument("hermitian_eig: matrix is not Hermitian");
  }
  HermitianEig asc = hermitian_eig_ascending(m);
  HermitianEig out;
  out.values = asc.values.reverse();
  out.vectors = asc.vectors.rowwise().reverse();
  return out;
}

Matrix psd_sqrt(const Matrix& m) {
  if (m.rows() == 0) return m;
  HermitianEig e = hermitian_eig_ascending(m);
  Eigen::VectorXd roots = e.values.cwiseMax(0.0).cwiseSqrt();
  return e.vectors * roots.cast<Complex>().asDiagonal() * e.vectors.adjoint();
}

Matrix gram_null_space(const Matrix& gram, double cutoff) {
  if (gram.rows() == 0) return Matrix(0, 0);
  HermitianEig e = hermitian_eig_ascending(gram);
  const double top = std::max(e.values(e.values.size() - 1), 1.0);
  Index k = 0;
  while (k < e.values.size() && e.values(k) <= cutoff * top) ++k;
  return e.vectors.leftCols(k);
}

Matrix nearest_unitary(const Matrix& m) {
  Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  return svd.matrixU() * svd.matrixV().adjoint();
}

double trace_norm(const Matrix& hermitian) {
  if (hermitian.rows() == 0) return 0.0;
  return hermitian_eig_ascending(hermitian).values.cwiseAbs().sum();
}

}  // namespace opmodel
