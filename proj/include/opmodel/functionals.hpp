#pragma once

#include "opmodel/star_algebra.hpp"
#include "opmodel/structure.hpp"

#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace opmodel {

/// Linear functional phi(a) = Tr(rho^H a) on an algebra, with rho in the
/// algebra.
class Functional {
 public:
  /// Projects rho onto the algebra first.
  Functional(std::shared_ptr<const StarAlgebra> algebra, const Matrix& rho);

  const StarAlgebra& algebra() const { return *algebra_; }
  const std::shared_ptr<const StarAlgebra>& algebra_ptr() const { return algebra_; }
  const Matrix& rho() const { return rho_; }

  Complex operator()(const Matrix& a) const;
  bool is_hermitian() const;
  bool is_positive() const;

  Functional operator-(const Functional& other) const;
  Functional operator*(double scale) const;

 private:
  std::shared_ptr<const StarAlgebra> algebra_;
  Matrix rho_;
};

/// phi_v(a) = <a v, v>.
Functional vector_state(const Structure& s, const Vector& v);

/// The state a -> <W v, v> of a vector of `s`, written on the algebra of
/// `reference`. `s` must carry the same abstract algebra, e.g. be a direct sum
/// of subrepresentations of `reference`.
Functional vector_state_on(const Structure& reference, const Structure& s, const Vector& v);

/// Dual norm: sum over blocks of multiplicity times trace norm.
double functional_norm(const Functional& phi);

struct OrthogonalityReport {
  bool verdict = false;
  double gap = 0.0;            ///< |phi| + |psi| - |phi - psi|
  double support_overlap = 0.0;  ///< phi(P_psi) + psi(P_phi)
  bool support_disjoint = false;
};
OrthogonalityReport orthogonality(const Functional& phi, const Functional& psi);
bool is_orthogonal(const Functional& phi, const Functional& psi);

struct WitnessResult {
  bool found = false;
  Matrix element;            ///< best projection tried
  double phi_gap = 0.0;      ///< phi(I - a)
  double psi_mass = 0.0;     ///< psi(a)
  double floor = 0.0;        ///< max of the two for the best candidate
};
/// Looks for a projection a in the algebra with phi(I - a) < eps and
/// psi(a) < eps among spectral projections of the representatives.
WitnessResult orthogonality_witness(const Functional& phi, const Functional& psi, double eps);

struct DominationReport {
  bool verdict = false;
  std::optional<double> gamma;   ///< least gamma with gamma psi - phi positive
  double outside_mass = 0.0;     ///< phi(I - P_psi)
  double certificate = 0.0;      ///< lambda_min(gamma rho_psi - rho_phi)
  double minimality = 0.0;       ///< lambda_min((1 - 1e-6) gamma rho_psi - rho_phi)
};
DominationReport is_dominated(const Functional& phi, const Functional& psi);

/// Cyclic representation of a positive functional.
struct GnsRep {
  Index dim = 0;
  std::shared_ptr<const StarAlgebra> algebra;
  std::vector<Matrix> action;  ///< per algebra basis element
  Vector cyclic;               ///< v_phi
  Matrix quotient;             ///< dim x |basis|: coefficients -> H_phi
  Matrix lift;                 ///< |basis| x dim right inverse of quotient

  /// pi_phi(a) for any a in the algebra.
  Matrix represent(const Matrix& a) const;
};
GnsRep gns(const Functional& phi);

struct GnsDefects {
  double state = 0.0;         ///< max |phi(b) - <pi(b) v, v>|
  double multiplicative = 0.0;  ///< max |pi(bc) - pi(b) pi(c)|
  double adjoint = 0.0;       ///< max |pi(b^H) - pi(b)^H|
  Index cyclic_rank = 0;
};
GnsDefects gns_defects(const GnsRep& rep, const Functional& phi);

struct IntertwinerReport {
  bool found = false;
  Matrix unitary;
  double defect = 0.0;
};
/// The map [a]_phi -> [a]_psi between two GNS spaces, with its largest
/// deviation from a unitary intertwiner carrying cyclic vector to cyclic vector.
IntertwinerReport gns_intertwiner(const GnsRep& a, const GnsRep& b, const Tolerances& tol);

struct EmbeddingReport {
  bool verdict = false;              ///< from domination of states
  bool intertwiner_verdict = false;  ///< a positive T in the commutant on H_w with phi_{Tw} = phi_v
  /// H_v unitarily equivalent to a subrepresentation of H_w, ignoring the
  /// cyclic vectors. Implied by `verdict`, strictly weaker in general.
  bool profile_verdict = false;
  std::optional<double> gamma;
};
/// Whether (H_v, v) embeds in (H_w, w), decided by domination of the vector
/// states and checked by an explicit intertwiner search.
EmbeddingReport embeds_as_subrepresentation(const Structure& s, const Vector& v, const Vector& w);

struct RadonNikodymResult {
  bool found = false;
  Matrix t;          ///< n x n, supported on H_w
  Vector v_prime;    ///< T w
  double residual = 0.0;  ///< least-squares residual of the moment system
  double defect = 0.0;    ///< max of state, commutation and positivity defects
  std::string reason;
};
/// Positive T commuting with the algebra on H_w with phi_{Tw} = phi_v.
/// Throws ToleranceBreach when the solved operator is not positive.
RadonNikodymResult radon_nikodym_operator(const Structure& s, const Vector& w, const Vector& v);

struct TypeRelationReport {
  bool verdict = false;
  bool cross_check = false;  ///< irreducible-profile answer
  Vector residual_v;
  Vector residual_w;
};
/// Essential part of v - P_{acl(E)} v.
Vector essential_residual(const Structure& s, const Vector& v, std::span<const Vector> e);
TypeRelationReport types_orthogonal(const Structure& s, const Vector& v, const Vector& w, std::span<const Vector> e);
/// Whether tp(v / G) dominates tp(w / G).
TypeRelationReport types_dominated(const Structure& s, const Vector& v, const Vector& w, std::span<const Vector> g);

}  // namespace opmodel
