#pragma once

#include "opmodel/linalg.hpp"

#include <cstdint>
#include <memory>
#include <span>
#include <stdexcept>
#include <vector>

namespace opmodel {

/// One simple summand M_k (x) I_m of a block decomposition.
struct Block {
  Index size = 0;          ///< k
  Index multiplicity = 0;  ///< m
  Index offset = 0;        ///< first column of the block in change_of_basis

  friend bool operator==(const Block&, const Block&) = default;
};

/// Simultaneous block diagonalization  U^H A U = (+)_i M_{k_i} (x) I_{m_i}.
/// Inside block i the coordinate a*m_i + j carries row a of copy j.
struct BlockDecomposition {
  std::vector<Block> blocks;
  Matrix change_of_basis;

  /// Sorted (k, m) pairs; independent of the seed used to find the basis.
  std::vector<std::pair<Index, Index>> signature() const;

  /// The k_i x k_i matrices X_i with U^H x U = (+) X_i (x) I_{m_i}, averaged
  /// over the m_i copies.
  std::vector<Matrix> components(const Matrix& x) const;

  /// Largest deviation of U^H x U from the block form built from components(x).
  double block_defect(const Matrix& x) const;

  /// Columns of change_of_basis spanning copy 0 of block i (an irreducible
  /// invariant subspace).
  Matrix representative(std::size_t block) const;
};

class DecompositionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Unital *-algebra of n x n matrices with a basis orthonormal under
/// <A, B> = Tr(B^H A) / n.
class StarAlgebra {
 public:
  StarAlgebra();

  /// Wraps a span that is already a unital *-algebra. The basis is
  /// re-orthonormalized; closure is not re-checked.
  static StarAlgebra from_span(std::span<const Matrix> elements, Index n, const Tolerances& tol,
                               std::vector<Matrix> generators = {});

  Index ambient_dim() const { return n_; }
  Index size() const { return static_cast<Index>(basis_.size()); }
  const std::vector<Matrix>& basis() const { return basis_; }
  const std::vector<Matrix>& generators() const { return generators_; }
  const Tolerances& tol() const { return tol_; }

  /// n^2 x size matrix whose columns vec(B_i)/sqrt(n) are Euclidean-orthonormal.
  const Matrix& vectorized() const { return vec_; }

  /// Coordinates <x, B_i> of x along the basis.
  Vector coefficients(const Matrix& x) const;
  Matrix element(const Vector& coefficients) const;
  /// Orthogonal projection of x onto the span under the trace pairing.
  Matrix project(const Matrix& x) const;
  /// Trace-pairing distance from x to the span, in Frobenius norm.
  double distance(const Matrix& x) const;
  bool contains(const Matrix& x) const;
  bool same_span(const StarAlgebra& other) const;

  /// Cached commutant; computed once, shared between copies.
  std::shared_ptr<const StarAlgebra> commutant_ptr() const;
  /// Cached decomposition with seed 0 (and its retries).
  const BlockDecomposition& decomposition() const;

 private:
  friend StarAlgebra generate_algebra(std::span<const Matrix>, Index, const Tolerances&);
  void set_basis_from_vectorized(Matrix vec);

  struct Cache;
  Index n_ = 0;
  Tolerances tol_;
  std::vector<Matrix> basis_;
  std::vector<Matrix> generators_;
  Matrix vec_;
  std::shared_ptr<Cache> cache_;
};

/// Smallest unital *-algebra containing the generators.
StarAlgebra generate_algebra(std::span<const Matrix> generators, Index n, const Tolerances& tol);

StarAlgebra commutant(const StarAlgebra& a);

/// Self-check that A'' = A.
bool double_commutant_check(const StarAlgebra& a);

BlockDecomposition wedderburn_decompose(const StarAlgebra& a, std::uint64_t seed);

/// Trace-pairing projection of m onto the algebra.
Matrix conditional_expectation(const Matrix& m, const StarAlgebra& a);

/// Solves U X1^H B X1 = X2^H B X2 U over the algebra basis for isometries X1,
/// X2 spanning invariant subspaces. Returns the unitary intertwiner when the
/// two restrictions are equivalent irreducibles, or an empty matrix.
Matrix irreducible_intertwiner(const StarAlgebra& a, const Matrix& x1, const Matrix& x2);

/// Irreducible classes of the subrepresentation on `subspace`: one
/// representative isometry per class together with its multiplicity.
struct IrreducibleClass {
  Matrix representative;  ///< n x k isometry onto one irreducible copy
  Index multiplicity = 0;
};
std::vector<IrreducibleClass> irreducible_profile(const StarAlgebra& a, const Subspace& subspace);

/// True when every class of `inner` appears in `outer` with at least the
/// same multiplicity.
bool profile_embeds(const StarAlgebra& a, const std::vector<IrreducibleClass>& inner,
                    const std::vector<IrreducibleClass>& outer);
/// True when no class of `x` is equivalent to a class of `y`.
bool profiles_disjoint(const StarAlgebra& a, const std::vector<IrreducibleClass>& x,
                       const std::vector<IrreducibleClass>& y);

}  // namespace opmodel
