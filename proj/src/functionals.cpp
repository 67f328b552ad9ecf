#include "opmodel/functionals.hpp"

#include "opmodel/independence.hpp"

#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <limits>

namespace opmodel {

namespace {

Matrix hermitize(const Matrix& m) { return 0.5 * (m + m.adjoint()); }

double max_abs(const Matrix& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }

/// Projection onto eigenvectors of a Hermitian matrix with eigenvalue > cutoff.
Matrix spectral_projection(const Matrix& h, double cutoff) {
  const HermitianEig e = hermitian_eig_ascending(hermitize(h));
  Matrix p = Matrix::Zero(h.rows(), h.cols());
  for (Index i = 0; i < e.values.size(); ++i)
    if (e.values(i) > cutoff) p += e.vectors.col(i) * e.vectors.col(i).adjoint();
  return p;
}

double min_eigenvalue(const Matrix& h) {
  if (h.rows() == 0) return 0.0;
  return hermitian_eig_ascending(hermitize(h)).values(0);
}

void require_same_algebra(const Functional& a, const Functional& b) {
  if (a.algebra_ptr() == b.algebra_ptr()) return;
  if (!a.algebra().same_span(b.algebra())) throw DimensionError("functionals live on different algebras");
}

/// Matrix of left multiplication by a in the algebra basis.
Matrix left_multiplication(const StarAlgebra& alg, const Matrix& a) {
  const Index d = alg.size();
  Matrix out(d, d);
  for (Index i = 0; i < d; ++i) out.col(i) = alg.coefficients(a * alg.basis()[static_cast<std::size_t>(i)]);
  return out;
}

std::vector<IrreducibleClass> profile_of(const Structure& s, const Vector& v) {
  const Vector one[] = {v};
  return irreducible_profile(s.algebra(), cyclic_subspace(s, one));
}

}  // namespace

Functional::Functional(std::shared_ptr<const StarAlgebra> algebra, const Matrix& rho) : algebra_(std::move(algebra)) {
  if (!algebra_) throw std::invalid_argument("functional needs an algebra");
  if (rho.rows() != algebra_->ambient_dim() || rho.cols() != algebra_->ambient_dim()) {
    throw DimensionError("functional representative has the wrong size");
  }
  require_finite(rho, "functional");
  rho_ = algebra_->project(rho);
}

Complex Functional::operator()(const Matrix& a) const {
  if (a.rows() != rho_.rows() || a.cols() != rho_.cols()) throw DimensionError("functional argument size mismatch");
  return (rho_.conjugate().cwiseProduct(a)).sum();
}

bool Functional::is_hermitian() const {
  return (rho_ - rho_.adjoint()).norm() <= algebra_->tol().eq_abs * std::max(1.0, rho_.norm());
}

bool Functional::is_positive() const {
  return is_hermitian() && min_eigenvalue(rho_) >= -algebra_->tol().psd_abs;
}

Functional Functional::operator-(const Functional& other) const {
  require_same_algebra(*this, other);
  return Functional(algebra_, rho_ - other.rho_);
}

Functional Functional::operator*(double scale) const { return Functional(algebra_, rho_ * scale); }

Functional vector_state(const Structure& s, const Vector& v) {
  if (v.size() != s.dim()) throw DimensionError("vector_state: vector length mismatch");
  return Functional(s.algebra_ptr(), v * v.adjoint());
}

Functional vector_state_on(const Structure& reference, const Structure& s, const Vector& v) {
  if (v.size() != s.dim()) throw DimensionError("vector_state_on: vector length mismatch");
  if (s.generator_count() != reference.generator_count()) throw DimensionError("vector_state_on: generator mismatch");
  const StarAlgebra& alg = reference.algebra();
  const std::vector<Word>& words = reference.canonical_words();
  const Index d = alg.size();
  if (static_cast<Index>(words.size()) != d) throw ToleranceBreach("canonical words do not match the algebra");
  // Values phi(W) = <W v, v> computed in s; solve Tr(rho^H W) = phi(W) in reference.
  const std::vector<Matrix> images = word_images(s, words, Matrix(v));
  Vector values(d);
  Matrix system(d, d);
  for (Index w = 0; w < d; ++w) {
    values(w) = v.dot(images[static_cast<std::size_t>(w)].col(0));
    const Matrix m = reference.word_matrix(words[static_cast<std::size_t>(w)]);
    for (Index i = 0; i < d; ++i) system(w, i) = (alg.basis()[static_cast<std::size_t>(i)].conjugate().cwiseProduct(m)).sum();
  }
  const Vector x = system.colPivHouseholderQr().solve(values);
  Matrix rho = Matrix::Zero(reference.dim(), reference.dim());
  for (Index i = 0; i < d; ++i) rho += std::conj(x(i)) * alg.basis()[static_cast<std::size_t>(i)];
  return Functional(reference.algebra_ptr(), rho);
}

double functional_norm(const Functional& phi) {
  if (!phi.is_hermitian()) throw std::invalid_argument("functional_norm: functional is not Hermitian");
  if (phi.algebra().ambient_dim() == 0) return 0.0;
  const BlockDecomposition& dec = phi.algebra().decomposition();
  const std::vector<Matrix> parts = dec.components(phi.rho());
  double total = 0.0;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    total += static_cast<double>(dec.blocks[i].multiplicity) * trace_norm(hermitize(parts[i]));
  }
  return total;
}

OrthogonalityReport orthogonality(const Functional& phi, const Functional& psi) {
  require_same_algebra(phi, psi);
  const Tolerances& tol = phi.algebra().tol();
  OrthogonalityReport out;
  const double n_phi = functional_norm(phi);
  const double n_psi = functional_norm(psi);
  out.gap = n_phi + n_psi - functional_norm(phi - psi);
  out.verdict = out.gap <= tol.eq_abs * std::max(1.0, n_phi + n_psi);
  const Matrix p_phi = spectral_projection(phi.rho(), tol.psd_abs);
  const Matrix p_psi = spectral_projection(psi.rho(), tol.psd_abs);
  out.support_overlap = phi(p_psi).real() + psi(p_phi).real();
  out.support_disjoint = out.support_overlap <= tol.eq_abs * std::max(1.0, n_phi + n_psi);
  return out;
}

bool is_orthogonal(const Functional& phi, const Functional& psi) { return orthogonality(phi, psi).verdict; }

WitnessResult orthogonality_witness(const Functional& phi, const Functional& psi, double eps) {
  if (!(eps > 0.0)) throw std::invalid_argument("orthogonality_witness: eps must be positive");
  require_same_algebra(phi, psi);
  const Tolerances& tol = phi.algebra().tol();
  const Index n = phi.rho().rows();
  const Matrix id = Matrix::Identity(n, n);
  const std::vector<Matrix> candidates{id - spectral_projection(psi.rho(), tol.psd_abs),
                                       spectral_projection(phi.rho() - psi.rho(), tol.psd_abs),
                                       spectral_projection(phi.rho(), tol.psd_abs)};
  WitnessResult out;
  out.floor = std::numeric_limits<double>::infinity();
  const double total = phi(id).real();
  for (const Matrix& a : candidates) {
    const double gap = total - phi(a).real();
    const double mass = psi(a).real();
    const double worst = std::max(gap, mass);
    if (worst < out.floor) {
      out.floor = worst;
      out.element = a;
      out.phi_gap = gap;
      out.psi_mass = mass;
    }
  }
  out.found = out.phi_gap < eps && out.psi_mass < eps;
  return out;
}

DominationReport is_dominated(const Functional& phi, const Functional& psi) {
  require_same_algebra(phi, psi);
  const Tolerances& tol = phi.algebra().tol();
  DominationReport out;
  const double mass = phi.rho().trace().real();
  if (phi.algebra().ambient_dim() == 0 || std::abs(mass) <= tol.eq_abs) {
    out.verdict = true;  // the zero functional sits below everything; no least gamma > 0
    return out;
  }
  const BlockDecomposition& dec = phi.algebra().decomposition();
  const std::vector<Matrix> sig_phi = dec.components(phi.rho());
  const std::vector<Matrix> sig_psi = dec.components(psi.rho());
  double gamma = 0.0;
  for (std::size_t i = 0; i < dec.blocks.size(); ++i) {
    const double m = static_cast<double>(dec.blocks[i].multiplicity);
    const HermitianEig e = hermitian_eig_ascending(hermitize(sig_psi[i]));
    std::vector<Index> support, kernel;
    for (Index j = 0; j < e.values.size(); ++j) (e.values(j) > tol.psd_abs ? support : kernel).push_back(j);
    const Matrix sp = hermitize(sig_phi[i]);
    for (Index j : kernel) out.outside_mass += m * e.vectors.col(j).dot(sp * e.vectors.col(j)).real();
    if (support.empty()) continue;
    Matrix whiten(sp.rows(), static_cast<Index>(support.size()));
    for (std::size_t c = 0; c < support.size(); ++c) {
      whiten.col(static_cast<Index>(c)) = e.vectors.col(support[c]) / std::sqrt(e.values(support[c]));
    }
    const Matrix reduced = hermitize(whiten.adjoint() * sp * whiten);
    gamma = std::max(gamma, hermitian_eig_ascending(reduced).values.maxCoeff());
  }
  if (out.outside_mass > tol.eq_abs * std::max(1.0, mass) || !(gamma > 0.0)) return out;
  out.gamma = gamma;
  out.certificate = min_eigenvalue(gamma * psi.rho() - phi.rho());
  out.minimality = min_eigenvalue((1.0 - 1e-6) * gamma * psi.rho() - phi.rho());
  if (out.certificate < -tol.psd_abs) {
    throw ToleranceBreach("is_dominated: gamma psi - phi failed its positivity certificate");
  }
  out.verdict = true;
  return out;
}

Matrix GnsRep::represent(const Matrix& a) const {
  return quotient * left_multiplication(*algebra, a) * lift;
}

GnsRep gns(const Functional& phi) {
  const StarAlgebra& alg = phi.algebra();
  const Tolerances& tol = alg.tol();
  const Index n = alg.ambient_dim();
  const Matrix id = Matrix::Identity(n, n);
  if (n == 0 || phi(id).real() <= tol.eq_abs) throw std::invalid_argument("gns: degenerate state, phi(I) <= eq_abs");
  if (!phi.is_positive()) throw std::invalid_argument("gns: functional is not positive");
  const Index d = alg.size();
  // M(j, i) = phi(B_j^H B_i) = <vec(B_j rho), vec(B_i)>.
  Matrix left(n * n, d), right(n * n, d);
  for (Index i = 0; i < d; ++i) {
    const Matrix& b = alg.basis()[static_cast<std::size_t>(i)];
    const Matrix br = b * phi.rho();
    left.col(i) = Eigen::Map<const Vector>(br.data(), n * n);
    right.col(i) = Eigen::Map<const Vector>(b.data(), n * n);
  }
  const Matrix gram = hermitize(left.adjoint() * right);
  const HermitianEig e = hermitian_eig_ascending(gram);
  const double top = std::max(e.values(d - 1), 1.0);
  std::vector<Index> keep;
  for (Index j = 0; j < d; ++j)
    if (e.values(j) > tol.rank_rel * top) keep.push_back(j);

  GnsRep rep;
  rep.algebra = phi.algebra_ptr();
  rep.dim = static_cast<Index>(keep.size());
  rep.quotient.resize(rep.dim, d);
  rep.lift.resize(d, rep.dim);
  for (Index c = 0; c < rep.dim; ++c) {
    const double lambda = e.values(keep[static_cast<std::size_t>(c)]);
    const Vector col = e.vectors.col(keep[static_cast<std::size_t>(c)]);
    rep.quotient.row(c) = std::sqrt(lambda) * col.adjoint();
    rep.lift.col(c) = col / std::sqrt(lambda);
  }
  for (const Matrix& b : alg.basis()) rep.action.push_back(rep.represent(b));
  rep.cyclic = rep.quotient * alg.coefficients(id);
  return rep;
}

GnsDefects gns_defects(const GnsRep& rep, const Functional& phi) {
  const StarAlgebra& alg = *rep.algebra;
  const auto& basis = alg.basis();
  const Index d = alg.size();
  GnsDefects out;
  Matrix orbit(rep.dim, d);
  for (Index i = 0; i < d; ++i) {
    const Matrix& r = rep.action[static_cast<std::size_t>(i)];
    out.state = std::max(out.state, std::abs(phi(basis[static_cast<std::size_t>(i)]) - rep.cyclic.dot(r * rep.cyclic)));
    orbit.col(i) = r * rep.cyclic;
  }
  auto combine = [&](const Vector& coeffs) {
    Matrix m = Matrix::Zero(rep.dim, rep.dim);
    for (Index k = 0; k < d; ++k) m += coeffs(k) * rep.action[static_cast<std::size_t>(k)];
    return m;
  };
  for (Index i = 0; i < d; ++i) {
    const Matrix& bi = basis[static_cast<std::size_t>(i)];
    const Matrix& ri = rep.action[static_cast<std::size_t>(i)];
    out.adjoint = std::max(out.adjoint, max_abs(combine(alg.coefficients(bi.adjoint())) - ri.adjoint()));
    for (Index j = 0; j < d; ++j) {
      const Matrix& rj = rep.action[static_cast<std::size_t>(j)];
      const Matrix product = combine(alg.coefficients(bi * basis[static_cast<std::size_t>(j)]));
      out.multiplicative = std::max(out.multiplicative, max_abs(product - ri * rj));
    }
  }
  out.cyclic_rank = orthonormalize(orbit, alg.tol()).dim();
  return out;
}

IntertwinerReport gns_intertwiner(const GnsRep& a, const GnsRep& b, const Tolerances& tol) {
  IntertwinerReport out;
  if (a.dim != b.dim || a.quotient.cols() != b.quotient.cols()) {
    out.defect = std::numeric_limits<double>::infinity();
    return out;
  }
  out.unitary = b.quotient * a.lift;
  const Matrix& u = out.unitary;
  out.defect = max_abs(u * a.quotient - b.quotient);
  out.defect = std::max(out.defect, max_abs(u.adjoint() * u - Matrix::Identity(a.dim, a.dim)));
  out.defect = std::max(out.defect, (u * a.cyclic - b.cyclic).norm());
  for (std::size_t k = 0; k < a.action.size(); ++k) {
    out.defect = std::max(out.defect, max_abs(u * a.action[k] - b.action[k] * u));
  }
  out.found = out.defect <= tol.eq_abs;
  return out;
}

EmbeddingReport embeds_as_subrepresentation(const Structure& s, const Vector& v, const Vector& w) {
  if (v.size() != s.dim() || w.size() != s.dim()) throw DimensionError("embeds_as_subrepresentation: length mismatch");
  EmbeddingReport out;
  const DominationReport dom = is_dominated(vector_state(s, v), vector_state(s, w));
  out.verdict = dom.verdict;
  out.gamma = dom.gamma;
  out.intertwiner_verdict = radon_nikodym_operator(s, w, v).found;
  out.profile_verdict = profile_embeds(s.algebra(), profile_of(s, v), profile_of(s, w));
  return out;
}

RadonNikodymResult radon_nikodym_operator(const Structure& s, const Vector& w, const Vector& v) {
  if (v.size() != s.dim() || w.size() != s.dim()) throw DimensionError("radon_nikodym_operator: length mismatch");
  const Tolerances& tol = s.tol();
  const StarAlgebra& alg = s.algebra();
  const Index n = s.dim();
  RadonNikodymResult out;
  out.t = Matrix::Zero(n, n);
  out.v_prime = Vector::Zero(n);
  const double scale = std::max(1.0, v.squaredNorm());
  const Vector one[] = {w};
  const Matrix q = cyclic_subspace(s, one).basis();
  const Index r = q.cols();
  if (r == 0) {
    out.found = v.norm() <= tol.eq_abs;
    if (!out.found) out.reason = "w is zero but v is not";
    return out;
  }
  std::vector<Matrix> compressed;
  for (const Matrix& b : alg.basis()) compressed.push_back(q.adjoint() * b * q);
  const StarAlgebra local = StarAlgebra::from_span(compressed, r, tol);
  const StarAlgebra comm = commutant(local);
  const Vector wt = q.adjoint() * w;

  // <H b w, w> = <b v, v> over the algebra basis, H in the compressed commutant.
  const Index d = alg.size();
  const Index p = comm.size();
  Matrix system(d, p);
  Vector rhs(d);
  for (Index i = 0; i < d; ++i) {
    const Vector cw = compressed[static_cast<std::size_t>(i)] * wt;
    for (Index j = 0; j < p; ++j) system(i, j) = wt.dot(comm.basis()[static_cast<std::size_t>(j)] * cw);
    rhs(i) = v.dot(alg.basis()[static_cast<std::size_t>(i)] * v);
  }
  const Vector c = system.completeOrthogonalDecomposition().solve(rhs);
  out.residual = (system * c - rhs).cwiseAbs().maxCoeff();
  if (out.residual > tol.eq_abs * scale) {
    out.reason = "phi_v is not dominated by phi_w";
    return out;
  }
  Matrix h = Matrix::Zero(r, r);
  for (Index j = 0; j < p; ++j) h += c(j) * comm.basis()[static_cast<std::size_t>(j)];
  h = hermitize(h);
  const double lowest = min_eigenvalue(h);
  if (lowest < -tol.psd_abs * std::max(1.0, h.norm())) {
    throw ToleranceBreach("radon_nikodym_operator: solved operator is not positive");
  }
  HermitianEig eig = hermitian_eig_ascending(h);
  const double floor = tol.rank_rel * std::max(1.0, eig.values(r - 1));
  for (Index j = 0; j < r; ++j) eig.values(j) = eig.values(j) > floor ? std::sqrt(eig.values(j)) : 0.0;
  const Matrix t_local = eig.vectors * eig.values.cast<Complex>().asDiagonal() * eig.vectors.adjoint();
  const Vector vp_local = t_local * wt;
  out.t = q * t_local * q.adjoint();
  out.v_prime = q * vp_local;
  double defect = 0.0;
  for (Index i = 0; i < d; ++i) {
    defect = std::max(defect, std::abs(out.v_prime.dot(alg.basis()[static_cast<std::size_t>(i)] * out.v_prime) - rhs(i)));
  }
  for (const Matrix& cb : local.basis()) defect = std::max(defect, max_abs(cb * t_local - t_local * cb));
  defect = std::max(defect, -std::min(0.0, min_eigenvalue(t_local)));
  out.defect = defect;
  out.found = defect <= tol.eq_abs * scale;
  if (!out.found) out.reason = "solved operator misses its certificate";
  return out;
}

Vector essential_residual(const Structure& s, const Vector& v, std::span<const Vector> e) {
  if (v.size() != s.dim()) throw DimensionError("essential_residual: vector length mismatch");
  const Vector r = v - acl(s, e).project(v);
  return essential_discrete_parts(s, r).essential;
}

TypeRelationReport types_orthogonal(const Structure& s, const Vector& v, const Vector& w, std::span<const Vector> e) {
  TypeRelationReport out;
  out.residual_v = essential_residual(s, v, e);
  out.residual_w = essential_residual(s, w, e);
  out.verdict = is_orthogonal(vector_state(s, out.residual_v), vector_state(s, out.residual_w));
  out.cross_check = profiles_disjoint(s.algebra(), profile_of(s, out.residual_v), profile_of(s, out.residual_w));
  return out;
}

TypeRelationReport types_dominated(const Structure& s, const Vector& v, const Vector& w, std::span<const Vector> g) {
  TypeRelationReport out;
  out.residual_v = essential_residual(s, v, g);
  out.residual_w = essential_residual(s, w, g);
  out.verdict = is_dominated(vector_state(s, out.residual_w), vector_state(s, out.residual_v)).verdict;
  out.cross_check = profile_embeds(s.algebra(), profile_of(s, out.residual_w), profile_of(s, out.residual_v));
  return out;
}

}  // namespace opmodel
