#include "opmodel/functionals.hpp"
#include "opmodel/independence.hpp"
#include "opmodel/random.hpp"

#include "fixtures.hpp"

#include <gtest/gtest.h>

using namespace opmodel;
using namespace opmodel::testing;

namespace {

using Vs = std::vector<Vector>;

Matrix diag2(Complex a, Complex b) {
  Matrix m = Matrix::Zero(2, 2);
  m(0, 0) = a;
  m(1, 1) = b;
  return m;
}

// U (M_2 ⊕ M_1 ⊗ I_2 ⊕ M_1) U^H on C^5.
Structure random_structure(Rng& rng) {
  const Index n = 5;
  const Matrix u = haar_unitary(n, rng);
  std::vector<Matrix> gens;
  for (int g = 0; g < 2; ++g) {
    Matrix x = Matrix::Zero(n, n);
    x.topLeftCorner(2, 2) = random_hermitian(2, rng);
    const Complex c = random_hermitian(1, rng)(0, 0);
    x(2, 2) = c;
    x(3, 3) = c;
    x(4, 4) = random_hermitian(1, rng)(0, 0);
    gens.push_back(u * x * u.adjoint());
  }
  return Structure::create(gens, n);
}

Matrix kron_identity(const Matrix& x, Index m) {
  Matrix out = Matrix::Zero(x.rows() * m, x.cols() * m);
  for (Index a = 0; a < x.rows(); ++a)
    for (Index b = 0; b < x.cols(); ++b)
      for (Index j = 0; j < m; ++j) out(a * m + j, b * m + j) = x(a, b);
  return out;
}

Functional random_state(const Structure& s, Rng& rng) {
  const Matrix g = ginibre(s.dim(), s.dim(), rng);
  return Functional(s.algebra_ptr(), conditional_expectation(g * g.adjoint(), s.algebra()));
}

}  // namespace

TEST(VectorState, Examples) {
  const Structure d = diagonal();
  EXPECT_LT(vector_state(d, Vector::Zero(2)).rho().norm(), 1e-14);
  const Functional phi = vector_state(d, e(2, 0));
  EXPECT_NEAR(std::abs(phi(diag2(3.0, 7.0)) - Complex(3.0)), 0.0, 1e-12);
  EXPECT_LT((phi.rho() - diag10()).norm(), 1e-12);

  const Structure m = full_m2();
  const Functional psi = vector_state(m, e(2, 0));
  EXPECT_LT((psi.rho() - diag10()).norm(), 1e-12);
  EXPECT_THROW(vector_state(d, Vector::Zero(3)), DimensionError);
}

TEST(VectorState, MatchesInnerProductOnBasis) {
  Rng rng(3);
  const Structure s = random_structure(rng);
  const Vector v = random_vector(s.dim(), rng);
  const Functional phi = vector_state(s, v);
  EXPECT_TRUE(phi.is_positive());
  for (const Matrix& b : s.algebra().basis()) EXPECT_LT(std::abs(phi(b) - v.dot(b * v)), 1e-10);
}

TEST(VectorState, PulledBackFromDirectSum) {
  Rng rng(5);
  const Structure s = random_structure(rng);
  const Structure big = direct_sum(s, s).with_canonical_words(s.canonical_words());
  const Vector v = random_vector(s.dim(), rng);
  const Vector w = random_vector(s.dim(), rng);
  Vector vw(2 * s.dim());
  vw << v, w;
  const Functional direct = vector_state(s, v);
  const Functional sum = Functional(s.algebra_ptr(), direct.rho() + vector_state(s, w).rho());
  EXPECT_LT((vector_state_on(s, big, vw).rho() - sum.rho()).norm(), 1e-9);
}

TEST(FunctionalNorm, Examples) {
  const Structure d = diagonal();
  const Functional p1 = vector_state(d, e(2, 0));
  const Functional p2 = vector_state(d, e(2, 1));
  EXPECT_NEAR(functional_norm(p1 - p2), 2.0, 1e-12);
  EXPECT_NEAR(functional_norm(p1 * 0.0), 0.0, 1e-14);
  Rng rng(7);
  const Structure s = random_structure(rng);
  const Functional phi = random_state(s, rng);
  EXPECT_NEAR(functional_norm(phi), phi(Matrix::Identity(5, 5)).real(), 1e-10);
  EXPECT_THROW(functional_norm(Functional(d.algebra_ptr(), Complex(0, 1) * diag10())), std::invalid_argument);
}

TEST(FunctionalNorm, BoundsRandomUnitBallElements) {
  Rng rng(11);
  for (int trial = 0; trial < 5; ++trial) {
    const Structure s = random_structure(rng);
    const Functional phi = random_state(s, rng) - random_state(s, rng);
    const double norm = functional_norm(phi);
    const BlockDecomposition& dec = s.algebra().decomposition();
    double best = 0.0;
    for (int k = 0; k < 200; ++k) {
      Matrix a = s.algebra().project(ginibre(5, 5, rng));
      const double op = Eigen::JacobiSVD<Matrix>(a).singularValues()(0);
      a /= op;
      const double value = std::abs(phi(a));
      EXPECT_LE(value, norm + 1e-10);
      best = std::max(best, value);
    }
    // The sign of each block's spectral decomposition attains the norm.
    Matrix attain = Matrix::Zero(5, 5);
    const std::vector<Matrix> parts = dec.components(phi.rho());
    for (std::size_t i = 0; i < parts.size(); ++i) {
      const HermitianEig eig = hermitian_eig_ascending(0.5 * (parts[i] + parts[i].adjoint()));
      Matrix sign = Matrix::Zero(parts[i].rows(), parts[i].cols());
      for (Index j = 0; j < eig.values.size(); ++j)
        sign += (eig.values(j) >= 0 ? 1.0 : -1.0) * eig.vectors.col(j) * eig.vectors.col(j).adjoint();
      const Block& b = dec.blocks[i];
      const Matrix block = kron_identity(sign, b.multiplicity);
      const Matrix cols = dec.change_of_basis.middleCols(b.offset, b.size * b.multiplicity);
      attain += cols * block * cols.adjoint();
    }
    EXPECT_NEAR(std::abs(phi(attain)), norm, 1e-9);
    EXPECT_LE(best, norm + 1e-10);
  }
}

TEST(Orthogonality, Examples) {
  const Structure d = diagonal();
  const Functional p1 = vector_state(d, e(2, 0));
  const Functional p2 = vector_state(d, e(2, 1));
  const Functional zero = p1 * 0.0;
  EXPECT_TRUE(is_orthogonal(p1, zero));
  const OrthogonalityReport r = orthogonality(p1, p2);
  EXPECT_TRUE(r.verdict);
  EXPECT_TRUE(r.support_disjoint);
  EXPECT_FALSE(is_orthogonal(p1, p1));
  EXPECT_FALSE(orthogonality(p1, p1).support_disjoint);
  EXPECT_THROW(is_orthogonal(p1, vector_state(full_m2(), e(2, 0))), DimensionError);
}

TEST(Orthogonality, WitnessExamples) {
  const Structure d = diagonal();
  const Functional p1 = vector_state(d, e(2, 0));
  const Functional p2 = vector_state(d, e(2, 1));
  const WitnessResult w = orthogonality_witness(p1, p2, 1e-3);
  ASSERT_TRUE(w.found);
  EXPECT_LT((w.element - diag10()).norm(), 1e-12);
  EXPECT_NEAR(w.phi_gap, 0.0, 1e-12);
  EXPECT_NEAR(w.psi_mass, 0.0, 1e-12);

  const WitnessResult z = orthogonality_witness(p1, p1 * 0.0, 1e-3);
  ASSERT_TRUE(z.found);
  EXPECT_LT((z.element - Matrix::Identity(2, 2)).norm(), 1e-12);

  const Functional u = vector_state(d, u_diag());
  const WitnessResult f = orthogonality_witness(u, u, 1e-3);
  EXPECT_FALSE(f.found);
  EXPECT_GE(f.floor, 0.5 - 1e-12);
  EXPECT_THROW(orthogonality_witness(p1, p2, 0.0), std::invalid_argument);
}

TEST(Orthogonality, MonotoneUnderDomination) {
  Rng rng(13);
  for (int trial = 0; trial < 10; ++trial) {
    const Structure s = random_structure(rng);
    const BlockDecomposition& dec = s.algebra().decomposition();
    // Central projections onto two disjoint sets of blocks.
    Matrix p = Matrix::Zero(5, 5), q = Matrix::Zero(5, 5);
    for (std::size_t i = 0; i < dec.blocks.size(); ++i) {
      const Block& b = dec.blocks[i];
      const Matrix cols = dec.change_of_basis.middleCols(b.offset, b.size * b.multiplicity);
      (i % 2 == 0 ? p : q) += cols * cols.adjoint();
    }
    const Functional base = random_state(s, rng);
    const Functional phi2(s.algebra_ptr(), p * base.rho() * p);
    const Functional psi2(s.algebra_ptr(), q * base.rho() * q);
    ASSERT_TRUE(is_orthogonal(phi2, psi2));
    const Matrix c = ginibre(5, 5, rng);
    const Matrix sq = psd_sqrt(phi2.rho());
    const Functional phi1(s.algebra_ptr(), sq * conditional_expectation(c * c.adjoint(), s.algebra()) * sq);
    const Functional psi1 = psi2 * 0.3;
    ASSERT_TRUE(is_dominated(phi1, phi2).verdict);
    EXPECT_TRUE(is_orthogonal(phi1, psi1));
  }
}

TEST(Domination, Examples) {
  const Structure d = diagonal();
  const Functional p1 = vector_state(d, e(2, 0));
  const Functional u = vector_state(d, u_diag());
  const DominationReport same = is_dominated(u, u);
  ASSERT_TRUE(same.verdict);
  EXPECT_NEAR(*same.gamma, 1.0, 1e-12);

  const DominationReport r = is_dominated(p1, u);
  ASSERT_TRUE(r.verdict);
  ASSERT_TRUE(r.gamma.has_value());
  EXPECT_NEAR(*r.gamma, 2.0, 1e-12);
  EXPECT_GE(r.certificate, -1e-8);
  EXPECT_LT(r.minimality, 0.0);

  const Structure m = full_m2();
  EXPECT_FALSE(is_dominated(vector_state(m, e(2, 0)), vector_state(m, e(2, 1))).verdict);

  const DominationReport zero = is_dominated(p1 * 0.0, u);
  EXPECT_TRUE(zero.verdict);
  EXPECT_FALSE(zero.gamma.has_value());
}

TEST(Domination, PlantedCompressionsCertify) {
  Rng rng(17);
  for (int trial = 0; trial < 10; ++trial) {
    const Structure s = random_structure(rng);
    const Functional psi = random_state(s, rng);
    const Matrix c = ginibre(5, 5, rng);
    const Matrix sq = psd_sqrt(psi.rho());
    const Functional phi(s.algebra_ptr(), sq * conditional_expectation(c * c.adjoint(), s.algebra()) * sq);
    const DominationReport r = is_dominated(phi, psi);
    ASSERT_TRUE(r.verdict);
    EXPECT_GE(r.certificate, -1e-8);
    EXPECT_LT(r.minimality, -1e-8);
  }
}

TEST(Gns, Examples) {
  const Structure d = diagonal();
  const Functional ones(d.algebra_ptr(), Matrix::Identity(2, 2));
  const GnsRep rep = gns(ones);
  EXPECT_EQ(rep.dim, 2);
  EXPECT_NEAR(rep.cyclic.norm(), std::sqrt(2.0), 1e-12);
  EXPECT_EQ(gns(vector_state(d, e(2, 0))).dim, 1);

  const Structure scalar = Structure::create({}, 3);
  const Functional trace(scalar.algebra_ptr(), Matrix::Identity(3, 3) / 3.0);
  const GnsRep one = gns(trace);
  EXPECT_EQ(one.dim, 1);
  EXPECT_LT((one.represent(Matrix::Identity(3, 3)) - Matrix::Identity(1, 1)).norm(), 1e-12);

  EXPECT_THROW(gns(ones * 0.0), std::invalid_argument);
}

TEST(Gns, RoundTripAndHomomorphism) {
  Rng rng(19);
  for (int trial = 0; trial < 5; ++trial) {
    const Structure s = random_structure(rng);
    const Functional phi = random_state(s, rng);
    const GnsRep rep = gns(phi);
    const GnsDefects def = gns_defects(rep, phi);
    EXPECT_LT(def.state, 1e-8);
    EXPECT_LT(def.multiplicative, 1e-8);
    EXPECT_LT(def.adjoint, 1e-8);
    EXPECT_EQ(def.cyclic_rank, rep.dim);
    // Faithful state: the GNS space is the whole algebra.
    EXPECT_EQ(rep.dim, s.algebra().size());
  }
}

TEST(Gns, IntertwinerTracksEqualityOfStates) {
  Rng rng(23);
  const Structure s = random_structure(rng);
  const Vector v = random_vector(5, rng);
  // A unitary in the commutant fixes phi_v.
  const StarAlgebra& comm = *s.algebra().commutant_ptr();
  Matrix h = Matrix::Zero(5, 5);
  for (const Matrix& b : comm.basis()) h += Complex(rng() % 7 / 7.0) * b;
  h = (0.5 * (h + h.adjoint())).eval();
  const HermitianEig eig = hermitian_eig_ascending(h);
  Matrix u = Matrix::Zero(5, 5);
  for (Index j = 0; j < 5; ++j) u += std::exp(Complex(0, eig.values(j))) * eig.vectors.col(j) * eig.vectors.col(j).adjoint();
  const Vector w = u * v;
  const Vs empty;
  ASSERT_TRUE(same_type(type_of(s, Vs{v}, empty), type_of(s, Vs{w}, empty), s.tol()));
  const GnsRep a = gns(vector_state(s, v));
  const GnsRep b = gns(vector_state(s, w));
  const IntertwinerReport good = gns_intertwiner(a, b, s.tol());
  EXPECT_TRUE(good.found);
  EXPECT_LT(good.defect, 1e-8);

  const Vector other = random_vector(5, rng);
  const IntertwinerReport bad = gns_intertwiner(a, gns(vector_state(s, other)), s.tol());
  EXPECT_FALSE(bad.found);
}

TEST(Embedding, Examples) {
  const Structure d = diagonal();
  const EmbeddingReport same = embeds_as_subrepresentation(d, u_diag(), u_diag());
  EXPECT_TRUE(same.verdict);
  EXPECT_TRUE(same.intertwiner_verdict);
  EXPECT_TRUE(same.profile_verdict);
  const EmbeddingReport r = embeds_as_subrepresentation(d, e(2, 0), u_diag());
  EXPECT_TRUE(r.verdict);
  EXPECT_TRUE(r.intertwiner_verdict);
  EXPECT_NEAR(*r.gamma, 2.0, 1e-12);
  EXPECT_TRUE(r.profile_verdict);
  const Structure m = full_m2();
  const EmbeddingReport f = embeds_as_subrepresentation(m, e(2, 0), e(2, 1));
  EXPECT_FALSE(f.verdict);
  EXPECT_FALSE(f.intertwiner_verdict);
  // Both cyclic spaces are the full irreducible C^2.
  EXPECT_TRUE(f.profile_verdict);
}

TEST(RadonNikodym, Examples) {
  const Structure d = diagonal();
  const RadonNikodymResult same = radon_nikodym_operator(d, u_diag(), u_diag());
  ASSERT_TRUE(same.found);
  EXPECT_LT((same.t - Matrix::Identity(2, 2)).norm(), 1e-10);

  const RadonNikodymResult r = radon_nikodym_operator(d, u_diag(), e(2, 0));
  ASSERT_TRUE(r.found);
  EXPECT_LT((r.t - std::sqrt(2.0) * diag10()).norm(), 1e-10);
  EXPECT_LT((r.v_prime - e(2, 0)).norm(), 1e-10);

  const RadonNikodymResult zero = radon_nikodym_operator(d, u_diag(), Vector::Zero(2));
  ASSERT_TRUE(zero.found);
  EXPECT_LT(zero.t.norm(), 1e-10);

  const Structure m = full_m2();
  EXPECT_FALSE(radon_nikodym_operator(m, e(2, 1), e(2, 0)).found);
}

TEST(RadonNikodym, AgreesWithDominationOnRandomPairs) {
  Rng rng(29);
  for (int trial = 0; trial < 10; ++trial) {
    const Structure s = random_structure(rng);
    const Vector w = random_vector(5, rng);
    const Vector v = trial % 2 == 0 ? Vector(s.algebra().basis()[1] * w) : random_vector(5, rng);
    const bool dominated = is_dominated(vector_state(s, v), vector_state(s, w)).verdict;
    const RadonNikodymResult r = radon_nikodym_operator(s, w, v);
    EXPECT_EQ(r.found, dominated);
    if (r.found) {
      const Functional moved = vector_state(s, r.v_prime);
      EXPECT_LT((moved.rho() - vector_state(s, v).rho()).norm(), 1e-8);
    }
  }
}

TEST(TypeRelations, Examples) {
  const Structure d = diagonal();
  const Vs empty;
  const Vs base{e(2, 1)};
  EXPECT_TRUE(types_orthogonal(d, e(2, 0), e(2, 1), base).verdict);
  const TypeRelationReport o = types_orthogonal(d, e(2, 0), e(2, 1), empty);
  EXPECT_TRUE(o.verdict);
  EXPECT_TRUE(o.cross_check);
  const TypeRelationReport same = types_orthogonal(d, u_diag(), u_diag(), empty);
  EXPECT_FALSE(same.verdict);
  EXPECT_FALSE(same.cross_check);

  EXPECT_TRUE(types_dominated(d, e(2, 0), e(2, 1), base).verdict);
  const TypeRelationReport dom = types_dominated(d, u_diag(), e(2, 0), empty);
  EXPECT_TRUE(dom.verdict);
  EXPECT_TRUE(dom.cross_check);
  EXPECT_FALSE(types_dominated(full_m2(), e(2, 0), e(2, 1), empty).verdict);
}

TEST(TypeRelations, DiscretePartIsIgnored) {
  const Structure d = diagonal(Subspace::from_orthonormal(Matrix(e(2, 1))));
  const Vs empty;
  // e2 is algebraic over nothing; only e1 components count.
  EXPECT_TRUE(types_orthogonal(d, e(2, 1), u_diag(), empty).verdict);
  EXPECT_FALSE(types_orthogonal(d, e(2, 0), u_diag(), empty).verdict);
  EXPECT_LT(essential_residual(d, e(2, 1), empty).norm(), 1e-12);
}
