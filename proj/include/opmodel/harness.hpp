#pragma once

#include "opmodel/functionals.hpp"
#include "opmodel/random.hpp"
#include "opmodel/scenario.hpp"
#include "opmodel/structure.hpp"

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

namespace opmodel {

/// One simple summand M_k (x) I_m of a planted algebra.
struct BlockPlan {
  Index k = 1;
  Index m = 1;
  bool discrete = false;
};

/// Recipe for a random structure. An empty block plan asks the suites to
/// draw a fresh plan of dimension at most max_dim for every trial.
struct InstanceSpec {
  std::vector<BlockPlan> blocks;
  Index g = 2;
  std::uint64_t seed = 0;
  Index max_dim = 12;
  bool allow_discrete = true;  ///< for drawn plans

  Index dim() const;
  /// Throws std::invalid_argument unless n <= 16, every k, m >= 1 and g >= 1.
  void validate() const;
};

/// A random plan with n <= max_dim, between one and three blocks.
std::vector<BlockPlan> random_plan(Rng& rng, Index max_dim, bool allow_discrete);

/// Random structure together with its planted block layout: block i occupies
/// columns offsets[i] .. offsets[i] + k m of `unitary`, coordinate a*m + j
/// carrying row a of copy j.
struct Instance {
  InstanceSpec spec;
  Structure structure;
  Matrix unitary;
  std::vector<Index> offsets;

  Matrix block_columns(std::size_t i) const;
  /// U (+)_i (x_i (x) I_{m_i}) U^H.
  Matrix assemble(const std::vector<Matrix>& components) const;
  /// U (+)_i (I_{k_i} (x) y_i) U^H, an element of the commutant.
  Matrix assemble_commutant(const std::vector<Matrix>& components) const;
  /// Central projection onto the chosen blocks.
  Matrix central_projection(const std::vector<bool>& chosen) const;
};

/// Seeded and deterministic. Generators are random Hermitian elements of the
/// planted algebra (general elements when g = 1); draws are repeated until
/// they generate the whole algebra. Throws std::runtime_error after 20 tries.
Instance random_instance(const InstanceSpec& spec);
Structure random_structure(const InstanceSpec& spec);

/// exp(iY) with Y a random Hermitian element of the commutant. It fixes the
/// discrete part, which is a sum of whole blocks.
Matrix random_commutant_unitary(const Instance& inst, Rng& rng);
/// Random faithful state conditioned into the algebra, with trace one.
Functional random_state(const Instance& inst, Rng& rng);

struct FunctionalPair {
  Functional phi;
  Functional psi;
};
/// Supports split inside every block: orthogonal by construction.
FunctionalPair planted_orthogonal_pair(const Instance& inst, Rng& rng);
/// psi faithful and phi nonzero: never orthogonal.
FunctionalPair planted_overlapping_pair(const Instance& inst, Rng& rng);
/// rho_phi = rho_psi^{1/2} C rho_psi^{1/2} with psi of reduced support.
FunctionalPair planted_dominated_pair(const Instance& inst, Rng& rng);

struct PropertyTally {
  int passed = 0;
  int failed = 0;
  double max_defect = 0.0;
  std::vector<Json> exemplars;  ///< replayable scenarios of the first failures

  void record(bool ok, double defect, const std::function<Json()>& exemplar);
};

struct SuiteReport {
  std::string suite;
  std::uint64_t seed = 0;
  int trials = 0;
  std::map<std::string, PropertyTally> properties;

  bool all_passed() const;
  int failures() const;
  /// Order-independent merge of another report's tallies.
  void merge(const SuiteReport& other);
  Json to_json() const;
};

/// Freeness axioms of the independence relation on random instances:
/// symmetry, transitivity, monotonicity, invariance, existence,
/// stationarity, canonical base, local character.
SuiteReport run_freeness_suite(const InstanceSpec& spec, int trials);

/// Functional properties on random instances: GNS round trip, orthogonality
/// and domination agreements, monotone orthogonality, GNS versus type,
/// invariance of type orthogonality under extension.
SuiteReport run_functional_suite(const InstanceSpec& spec, int trials);

}  // namespace opmodel
