#pragma once

#include "opmodel/structure.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace opmodel {

/// Type of a tuple over E: projections onto H_E plus the moments
/// <W v'_j, v'_k> of the residuals v'_j = v_j - P_{H_E} v_j over the
/// structure's canonical words W.
struct TypeDescriptor {
  std::vector<Vector> base_projections;
  std::vector<Word> words;
  std::vector<Matrix> moments;  ///< moments[w](j, k) = <W v'_j, v'_k>
};

TypeDescriptor type_of(const Structure& s, std::span<const Vector> tuple, std::span<const Vector> e);
/// Same, with H_E given directly.
TypeDescriptor type_of(const Structure& s, std::span<const Vector> tuple, const Subspace& h_e);

/// Largest entrywise difference; infinity when the shapes or words differ.
double descriptor_distance(const TypeDescriptor& a, const TypeDescriptor& b);
bool same_type(const TypeDescriptor& a, const TypeDescriptor& b, const Tolerances& tol);

/// Images W x for every word, computed incrementally along word suffixes.
std::vector<Matrix> word_images(const Structure& s, const std::vector<Word>& words, const Matrix& x);

struct IndependenceReport {
  bool verdict = true;
  double defect = 0.0;
  std::vector<Vector> base_projections;      ///< P_{acl(E)} v_j
  std::vector<Vector> extended_projections;  ///< P_{acl(E ∪ F)} v_j
};

IndependenceReport is_independent(const Structure& s, std::span<const Vector> tuple, std::span<const Vector> e,
                                  std::span<const Vector> f);

struct ExtensionOptions {
  std::optional<std::uint64_t> seed;  ///< random rotation of the fresh copy
  bool fresh_first = false;           ///< place the fresh summand before S
};

struct Extension {
  Structure structure;        ///< S ⊕ fresh copy
  std::vector<Vector> tuple;  ///< the extended tuple v'
  Index base_offset = 0;      ///< first coordinate of the copy of S
  Index fresh_offset = 0;     ///< first coordinate of the fresh summand
  Matrix fresh_basis;         ///< n x k basis of the copied cyclic subspace in S
  double defect = 0.0;        ///< largest deviation in the two certified conditions

  /// A vector of S written in the coordinates of the extension.
  Vector embed(const Vector& x) const;
};

/// Non-forking extension of tp(v / E) to E ∪ F. The residuals over acl(E)
/// are copied into a fresh, fully essential summand. Throws ToleranceBreach
/// when the certified conditions fail numerically.
Extension nonforking_extension(const Structure& s, std::span<const Vector> tuple, std::span<const Vector> e,
                               std::span<const Vector> f, const ExtensionOptions& options = {});
Extension nonforking_extension(const Structure& s, const Vector& v, std::span<const Vector> e,
                               std::span<const Vector> f, const ExtensionOptions& options = {});

/// Same, with acl(E) and acl(E ∪ F) given directly (acl_e ⊆ acl_f).
Extension nonforking_extension(const Structure& s, std::span<const Vector> tuple, const Subspace& acl_e,
                               const Subspace& acl_f, const ExtensionOptions& options = {});

/// (P_{H_E} v_1, ..., P_{H_E} v_n).
std::vector<Vector> canonical_base(const Structure& s, std::span<const Vector> tuple, std::span<const Vector> e);

struct MorleyReport {
  Vector average;           ///< mean of the k copies, in the final structure
  double residual_norm = 0.0;  ///< |v - P_{acl(E)} v|
  double distance_to_base = 0.0;  ///< |average - P_{acl(E)} v|
  double distance_to_cb = 0.0;    ///< |average - P_{H_E} v|
  double expected = 0.0;          ///< residual_norm / sqrt(k)
  Index final_dim = 0;
};

/// Builds k successive non-forking copies of v over E (each over E and the
/// earlier copies) and measures their average.
MorleyReport morley_average_check(const Structure& s, const Vector& v, std::span<const Vector> e, int k,
                                  std::uint64_t seed = 0);

struct FiniteBaseResult {
  std::vector<std::size_t> indices;  ///< positions in F, in selection order
  std::vector<Vector> tuple;         ///< v'
  std::vector<double> errors;        ///< |v_j - v'_j|
};

/// Greedy finite base: picks elements of F until every P_{acl(F)} v_j is
/// within eps of acl(F0), and sets v'_j = v_j - P_{acl(F)} v_j + P_{acl(F0)} P_{acl(F)} v_j.
FiniteBaseResult finite_base(const Structure& s, std::span<const Vector> tuple, std::span<const Vector> f,
                             double eps);

}  // namespace opmodel
