#pragma once

#include "opmodel/linalg.hpp"
#include "opmodel/star_algebra.hpp"

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace opmodel {

/// Letter 2i is generator i, letter 2i+1 its adjoint. A word (l1, ..., lm)
/// denotes the product L1 * ... * Lm of letters scaled to unit operator norm.
using Word = std::vector<int>;

/// An invariant block of the representation: the generators restricted to a
/// coordinate range. Structures are direct sums of summands.
struct Summand {
  Index dim = 0;
  std::vector<Matrix> generators;
};

struct CyclicPiece;
class Structure;
CyclicPiece cyclic_substructure(const Structure& s, const Vector& v, std::optional<std::uint64_t> seed);

/// Finite-dimensional representation with a declared discrete subspace and
/// named vectors. Immutable once built.
class Structure {
 public:
  Structure();

  /// Validates sizes, finiteness and invariance of the discrete subspace.
  static Structure create(std::vector<Matrix> generators, Index n, std::optional<Subspace> discrete = {},
                          std::map<std::string, Vector> vectors = {}, Tolerances tol = {});
  static Structure from_summands(std::vector<Summand> summands, Index generator_count,
                                 std::optional<Subspace> discrete = {}, std::map<std::string, Vector> vectors = {},
                                 Tolerances tol = {});

  Index dim() const { return n_; }
  Index generator_count() const { return g_; }
  int letter_count() const { return static_cast<int>(2 * g_); }
  const std::vector<Summand>& summands() const { return summands_; }
  const Subspace& discrete() const { return discrete_; }
  const Tolerances& tol() const { return tol_; }
  const std::map<std::string, Vector>& vectors() const { return vectors_; }
  /// Throws std::invalid_argument for unknown names.
  const Vector& vector(const std::string& name) const;

  Matrix generator(Index i) const;
  std::vector<Matrix> generators() const;
  /// Operator norm of generator i (the scale used by letters).
  double generator_norm(Index i) const { return norms_.at(static_cast<std::size_t>(i)); }

  /// The generated algebra; built on first use and shared between copies.
  const StarAlgebra& algebra() const;
  std::shared_ptr<const StarAlgebra> algebra_ptr() const;

  Matrix apply_letter(int letter, const Matrix& x) const;
  Vector apply_letter(int letter, const Vector& x) const;
  Matrix apply_word(const Word& w, const Matrix& x) const;
  Vector apply_word(const Word& w, const Vector& x) const;
  Matrix word_matrix(const Word& w) const;

  /// Words whose matrices form a basis of the algebra, found breadth first
  /// from the empty word.
  const std::vector<Word>& canonical_words() const;

  /// Copy sharing everything except the vector table.
  Structure with_vectors(std::map<std::string, Vector> vectors) const;
  Structure with_tolerances(const Tolerances& tol) const;
  /// Copy whose canonical words are preset. Only valid when the words are a
  /// basis for this structure's algebra too (e.g. it is a sum of
  /// subrepresentations of the structure they came from).
  Structure with_canonical_words(std::vector<Word> words) const;

  const std::optional<Vector>& cyclic_vector() const { return cyclic_vector_; }
  bool degenerate() const { return degenerate_; }

 private:
  friend CyclicPiece cyclic_substructure(const Structure&, const Vector&, std::optional<std::uint64_t>);
  struct Lazy;
  void validate() const;
  void validate_discrete() const;
  void compute_norms();

  Index n_ = 0;
  Index g_ = 0;
  std::vector<Summand> summands_;
  std::vector<double> norms_;
  Subspace discrete_;
  std::map<std::string, Vector> vectors_;
  Tolerances tol_;
  std::optional<Vector> cyclic_vector_;
  bool degenerate_ = false;
  std::shared_ptr<Lazy> lazy_;
};

/// Span of pi(a) v over the algebra and v in E: the definable closure.
Subspace cyclic_subspace(const Structure& s, std::span<const Vector> e);
/// Cyclic subspace joined with the discrete part: the algebraic closure.
Subspace acl(const Structure& s, std::span<const Vector> e);

struct EssentialDiscrete {
  Vector essential;
  Vector discrete;
};
EssentialDiscrete essential_discrete_parts(const Structure& s, const Vector& v);

/// Block-diagonal join. Vectors are carried over as "s1.<name>" and
/// "s2.<name>"; zero-dimensional summands are dropped.
Structure direct_sum(const Structure& s1, const Structure& s2);

/// Column-padding helpers for embedding the first or second summand of a sum.
Vector embed_first(const Vector& v, Index total);
Vector embed_second(const Vector& v, Index total);

struct CyclicPiece {
  Structure structure;
  Matrix isometry;  ///< n x k, columns an orthonormal basis of H_v
};

/// Subrepresentation generated by v, written in an orthonormal basis of H_v
/// (randomly rotated when a seed is given). The discrete part is H_d ∩ H_v.
/// v = 0 yields a flagged zero-dimensional structure.
CyclicPiece cyclic_substructure(const Structure& s, const Vector& v, std::optional<std::uint64_t> seed = {});

}  // namespace opmodel
