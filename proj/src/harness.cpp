#include "opmodel/harness.hpp"

#include "opmodel/independence.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>

namespace opmodel {

namespace {

using Vs = std::vector<Vector>;

constexpr int kMaxExemplars = 3;
constexpr int kMaxRegenerations = 20;

Matrix kron_identity(const Matrix& x, Index m) {
  Matrix out = Matrix::Zero(x.rows() * m, x.cols() * m);
  for (Index a = 0; a < x.rows(); ++a)
    for (Index b = 0; b < x.cols(); ++b)
      for (Index j = 0; j < m; ++j) out(a * m + j, b * m + j) = x(a, b);
  return out;
}

Matrix identity_kron(Index k, const Matrix& y) {
  const Index m = y.rows();
  Matrix out = Matrix::Zero(k * m, k * m);
  for (Index a = 0; a < k; ++a) out.block(a * m, a * m, m, m) = y;
  return out;
}

Matrix unitary_exp(const Matrix& hermitian) {
  const HermitianEig e = hermitian_eig_ascending(hermitian);
  const Eigen::VectorXcd phases = (Complex(0, 1) * e.values.cast<Complex>()).array().exp();
  return e.vectors * phases.asDiagonal() * e.vectors.adjoint();
}

double uniform(Rng& rng) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); }
std::size_t pick(Rng& rng, std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng); }

std::vector<bool> random_subset(Rng& rng, std::size_t n) {
  std::vector<bool> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = uniform(rng) < 0.5;
  return out;
}

/// A vector supported on a random set of blocks.
Vector supported_vector(const Instance& inst, Rng& rng) {
  return inst.central_projection(random_subset(rng, inst.spec.blocks.size())) * random_vector(inst.structure.dim(), rng);
}

Matrix random_algebra_element(const Instance& inst, Rng& rng) {
  std::vector<Matrix> parts;
  for (const BlockPlan& b : inst.spec.blocks) parts.push_back(ginibre(b.k, b.k, rng));
  return inst.assemble(parts);
}

Matrix random_commutant_element(const Instance& inst, Rng& rng) {
  std::vector<Matrix> parts;
  for (const BlockPlan& b : inst.spec.blocks) parts.push_back(ginibre(b.m, b.m, rng));
  return inst.assemble_commutant(parts);
}

Functional normalized(const Functional& f) {
  const double t = f.rho().trace().real();
  return t > 0.0 ? f * (1.0 / t) : f;
}

Functional compression(const Functional& psi, const Matrix& c) {
  const Matrix root = psd_sqrt(psi.rho());
  return Functional(psi.algebra_ptr(), root * c * root);
}

}  // namespace

Index InstanceSpec::dim() const {
  Index n = 0;
  for (const BlockPlan& b : blocks) n += b.k * b.m;
  return n;
}

void InstanceSpec::validate() const {
  if (g < 1) throw std::invalid_argument("instance spec: need at least one generator");
  for (const BlockPlan& b : blocks) {
    if (b.k < 1 || b.m < 1) throw std::invalid_argument("instance spec: block sizes must be positive");
  }
  if (dim() > 16) throw std::invalid_argument("instance spec: dimension above 16");
  if (max_dim < 1 || max_dim > 16) throw std::invalid_argument("instance spec: max_dim must lie in 1..16");
}

std::vector<BlockPlan> random_plan(Rng& rng, Index max_dim, bool allow_discrete) {
  for (;;) {
    std::vector<BlockPlan> plan(1 + pick(rng, 3));
    Index n = 0;
    for (BlockPlan& b : plan) {
      b.k = 1 + static_cast<Index>(pick(rng, 3));
      b.m = 1 + static_cast<Index>(pick(rng, 3));
      b.discrete = allow_discrete && uniform(rng) < 0.3;
      n += b.k * b.m;
    }
    if (n <= max_dim) return plan;
  }
}

Matrix Instance::block_columns(std::size_t i) const {
  const BlockPlan& b = spec.blocks.at(i);
  return unitary.middleCols(offsets.at(i), b.k * b.m);
}

Matrix Instance::assemble(const std::vector<Matrix>& components) const {
  const Index n = spec.dim();
  Matrix out = Matrix::Zero(n, n);
  for (std::size_t i = 0; i < spec.blocks.size(); ++i) {
    const Matrix cols = block_columns(i);
    out += cols * kron_identity(components.at(i), spec.blocks[i].m) * cols.adjoint();
  }
  return out;
}

Matrix Instance::assemble_commutant(const std::vector<Matrix>& components) const {
  const Index n = spec.dim();
  Matrix out = Matrix::Zero(n, n);
  for (std::size_t i = 0; i < spec.blocks.size(); ++i) {
    const Matrix cols = block_columns(i);
    out += cols * identity_kron(spec.blocks[i].k, components.at(i)) * cols.adjoint();
  }
  return out;
}

Matrix Instance::central_projection(const std::vector<bool>& chosen) const {
  const Index n = spec.dim();
  Matrix out = Matrix::Zero(n, n);
  for (std::size_t i = 0; i < spec.blocks.size(); ++i) {
    if (!chosen.at(i)) continue;
    const Matrix cols = block_columns(i);
    out += cols * cols.adjoint();
  }
  return out;
}

Instance random_instance(const InstanceSpec& spec) {
  spec.validate();
  Instance inst;
  inst.spec = spec;
  const Index n = spec.dim();
  Index expected = 0;
  Index offset = 0;
  for (const BlockPlan& b : spec.blocks) {
    inst.offsets.push_back(offset);
    offset += b.k * b.m;
    expected += b.k * b.k;
  }
  if (n == 0) {
    inst.structure = Structure::create(std::vector<Matrix>(static_cast<std::size_t>(spec.g)), 0);
    return inst;
  }
  const bool hermitian = spec.g >= 2;
  Rng rng(spec.seed);
  for (int attempt = 0; attempt < kMaxRegenerations; ++attempt) {
    inst.unitary = haar_unitary(n, rng);
    std::vector<Matrix> gens;
    for (Index g = 0; g < spec.g; ++g) {
      std::vector<Matrix> parts;
      for (const BlockPlan& b : spec.blocks) parts.push_back(hermitian ? random_hermitian(b.k, rng) : ginibre(b.k, b.k, rng));
      gens.push_back(inst.assemble(parts));
    }
    std::optional<Subspace> discrete;
    Matrix hd(n, 0);
    for (std::size_t i = 0; i < spec.blocks.size(); ++i) {
      if (!spec.blocks[i].discrete) continue;
      hd.conservativeResize(n, hd.cols() + spec.blocks[i].k * spec.blocks[i].m);
      hd.rightCols(spec.blocks[i].k * spec.blocks[i].m) = inst.block_columns(i);
    }
    if (hd.cols() > 0) discrete = Subspace::from_orthonormal(hd);
    inst.structure = Structure::create(std::move(gens), n, discrete);
    if (inst.structure.algebra().size() == expected) return inst;
  }
  throw std::runtime_error("random_instance: generators keep missing the planted algebra");
}

Structure random_structure(const InstanceSpec& spec) { return random_instance(spec).structure; }

Matrix random_commutant_unitary(const Instance& inst, Rng& rng) {
  std::vector<Matrix> parts;
  for (const BlockPlan& b : inst.spec.blocks) parts.push_back(2.0 * random_hermitian(b.m, rng));
  return unitary_exp(inst.assemble_commutant(parts));
}

Functional random_state(const Instance& inst, Rng& rng) {
  std::vector<Matrix> parts;
  for (const BlockPlan& b : inst.spec.blocks) {
    const Matrix g = ginibre(b.k, b.k, rng);
    parts.push_back(g * g.adjoint());
  }
  return normalized(Functional(inst.structure.algebra_ptr(), inst.assemble(parts)));
}

FunctionalPair planted_orthogonal_pair(const Instance& inst, Rng& rng) {
  std::vector<Matrix> phi, psi;
  for (const BlockPlan& b : inst.spec.blocks) {
    const Matrix v = haar_unitary(b.k, rng);
    const Index split = static_cast<Index>(pick(rng, static_cast<std::size_t>(b.k) + 1));
    const Matrix g1 = ginibre(split, split, rng);
    const Matrix g2 = ginibre(b.k - split, b.k - split, rng);
    phi.push_back(v.leftCols(split) * g1 * g1.adjoint() * v.leftCols(split).adjoint());
    psi.push_back(v.rightCols(b.k - split) * g2 * g2.adjoint() * v.rightCols(b.k - split).adjoint());
  }
  const auto alg = inst.structure.algebra_ptr();
  return {normalized(Functional(alg, inst.assemble(phi))), normalized(Functional(alg, inst.assemble(psi)))};
}

FunctionalPair planted_overlapping_pair(const Instance& inst, Rng& rng) {
  const Functional psi = random_state(inst, rng);
  std::vector<Matrix> parts;
  for (const BlockPlan& b : inst.spec.blocks) {
    const Index r = 1 + static_cast<Index>(pick(rng, static_cast<std::size_t>(b.k)));
    const Matrix g = ginibre(b.k, r, rng);
    parts.push_back(uniform(rng) < 0.5 ? Matrix(g * g.adjoint()) : Matrix::Zero(b.k, b.k));
  }
  parts.front() += Matrix::Identity(inst.spec.blocks.front().k, inst.spec.blocks.front().k);
  return {normalized(Functional(inst.structure.algebra_ptr(), inst.assemble(parts))), psi};
}

FunctionalPair planted_dominated_pair(const Instance& inst, Rng& rng) {
  std::vector<Matrix> parts;
  for (const BlockPlan& b : inst.spec.blocks) {
    const Index r = static_cast<Index>(pick(rng, static_cast<std::size_t>(b.k) + 1));
    const Matrix g = ginibre(b.k, r, rng);
    parts.push_back(g * g.adjoint());
  }
  parts.front() += Matrix::Identity(inst.spec.blocks.front().k, inst.spec.blocks.front().k);
  const Functional psi = normalized(Functional(inst.structure.algebra_ptr(), inst.assemble(parts)));
  const Functional phi = normalized(compression(psi, random_state(inst, rng).rho()));
  return {phi, psi};
}

// -- reports -----------------------------------------------------------------

void PropertyTally::record(bool ok, double defect, const std::function<Json()>& exemplar) {
  if (std::isfinite(defect)) max_defect = std::max(max_defect, defect);
  if (ok) {
    ++passed;
    return;
  }
  ++failed;
  if (static_cast<int>(exemplars.size()) < kMaxExemplars && exemplar) exemplars.push_back(exemplar());
}

bool SuiteReport::all_passed() const { return failures() == 0; }

int SuiteReport::failures() const {
  int out = 0;
  for (const auto& [name, tally] : properties) out += tally.failed;
  return out;
}

void SuiteReport::merge(const SuiteReport& other) {
  trials += other.trials;
  for (const auto& [name, tally] : other.properties) {
    PropertyTally& mine = properties[name];
    mine.passed += tally.passed;
    mine.failed += tally.failed;
    mine.max_defect = std::max(mine.max_defect, tally.max_defect);
    for (const Json& ex : tally.exemplars) {
      if (static_cast<int>(mine.exemplars.size()) < kMaxExemplars) mine.exemplars.push_back(ex);
    }
  }
}

Json SuiteReport::to_json() const {
  Json props = Json::object();
  for (const auto& [name, tally] : properties) {
    props[name] = {{"passed", tally.passed},
                   {"failed", tally.failed},
                   {"max_defect", round12(tally.max_defect)},
                   {"exemplars", tally.exemplars}};
  }
  return {{"suite", suite}, {"seed", seed}, {"trials", trials}, {"all_passed", all_passed()}, {"properties", props}};
}

// -- suites ------------------------------------------------------------------

namespace {

struct Trial {
  std::uint64_t seed;
  Instance inst;
};

Trial make_trial(const InstanceSpec& spec, int t) {
  const std::uint64_t seed = derive_seed(spec.seed, static_cast<std::uint64_t>(t));
  Rng rng(seed);
  InstanceSpec local = spec;
  local.seed = derive_seed(seed, 0);
  if (local.blocks.empty()) local.blocks = random_plan(rng, spec.max_dim, spec.allow_discrete);
  return {seed, random_instance(local)};
}

/// Scenario of a trial with the named vectors, replayable through the CLI.
Json exemplar(const Trial& trial, const std::string& property, const std::map<std::string, Vector>& vectors,
              const std::map<std::string, std::vector<std::string>>& sets = {},
              const std::map<std::string, Matrix>& functionals = {}) {
  std::map<std::string, Json> fs;
  for (const auto& [name, rho] : functionals) fs.emplace(name, Json{{"rho", to_json(rho, true)}});
  Json out = scenario_json(trial.inst.structure.with_vectors(vectors), sets, fs);
  out["replay"] = {{"property", property}, {"trial_seed", trial.seed}};
  return out;
}

std::map<std::string, std::vector<std::string>> name_sets(const std::map<std::string, Vs>& sets,
                                                          std::map<std::string, Vector>& vectors) {
  std::map<std::string, std::vector<std::string>> out;
  for (const auto& [set, members] : sets) {
    auto& names = out[set];
    for (std::size_t i = 0; i < members.size(); ++i) {
      const std::string name = set + std::to_string(i);
      vectors[name] = members[i];
      names.push_back(name);
    }
  }
  return out;
}

Vs concat(const Vs& a, const Vs& b) {
  Vs out = a;
  out.insert(out.end(), b.begin(), b.end());
  return out;
}

Vs embed_all(const Extension& ext, const Vs& xs) {
  Vs out;
  for (const Vector& x : xs) out.push_back(ext.embed(x));
  return out;
}

/// Descriptor with base projections read back in the coordinates of S.
TypeDescriptor pulled_back(TypeDescriptor d, const Extension& ext, Index n, double& leak) {
  for (Vector& p : d.base_projections) {
    const Vector full = p;
    p = full.segment(ext.base_offset, n);
    leak = std::max(leak, std::sqrt(std::max(0.0, full.squaredNorm() - p.squaredNorm())));
  }
  return d;
}

void freeness_trial(const Trial& trial, SuiteReport& report) {
  const Instance& inst = trial.inst;
  const Structure& s = inst.structure;
  const Tolerances& tol = s.tol();
  const Index n = s.dim();
  Rng rng(derive_seed(trial.seed, 1));

  Vs e;
  for (std::size_t i = pick(rng, 3); i > 0; --i) e.push_back(supported_vector(inst, rng));
  // a and b split over complementary central projections (plus parts inside
  // the cyclic subspace of E) are independent over E.
  const std::vector<bool> side = random_subset(rng, inst.spec.blocks.size());
  std::vector<bool> other(side.size());
  for (std::size_t i = 0; i < side.size(); ++i) other[i] = !side[i];
  const bool planted = uniform(rng) < 0.5;
  Vector in_e = Vector::Zero(n);
  for (const Vector& x : e) in_e += random_hermitian(1, rng)(0, 0) * random_algebra_element(inst, rng) * x;
  const Vector a = (planted ? inst.central_projection(side) : Matrix::Identity(n, n)) * random_vector(n, rng) + in_e;
  const Vector b = planted ? Vector(inst.central_projection(other) * random_vector(n, rng) + in_e) : supported_vector(inst, rng);
  const Vs va{a}, vb{b};

  auto ex = [&](const std::string& prop, const std::map<std::string, Vs>& extra = {}) {
    return [&, prop, extra] {
      std::map<std::string, Vector> vectors{{"a", a}, {"b", b}};
      std::map<std::string, Vs> sets{{"E", e}};
      sets.insert(extra.begin(), extra.end());
      return exemplar(trial, prop, vectors, name_sets(sets, vectors));
    };
  };

  const IndependenceReport ab = is_independent(s, va, e, vb);
  const IndependenceReport ba = is_independent(s, vb, e, va);
  report.properties["symmetry"].record(ab.verdict == ba.verdict, 0.0, ex("symmetry"));
  if (planted) report.properties["planted_independence"].record(ab.verdict, ab.defect, ex("planted_independence"));

  const Vs f = concat(e, {b});
  const Vs g = concat(f, {planted ? Vector(inst.central_projection(other) * random_vector(n, rng)) : supported_vector(inst, rng)});
  const bool eg = is_independent(s, va, e, g).verdict;
  const bool ef = is_independent(s, va, e, f).verdict;
  const bool fg = is_independent(s, va, f, g).verdict;
  report.properties["transitivity"].record(eg == (ef && fg), 0.0, ex("transitivity", {{"F", f}, {"G", g}}));

  // Sublists of G keep independence; a dependent G shows a dependent step
  // along the chain E, E+g0, E+g0+g1, ...
  bool monotone = true;
  const std::size_t extra = g.size() - e.size();
  if (eg) {
    for (unsigned mask = 0; mask < (1u << g.size()); ++mask) {
      Vs sub;
      for (std::size_t i = 0; i < g.size(); ++i)
        if (mask & (1u << i)) sub.push_back(g[i]);
      monotone = monotone && is_independent(s, va, e, sub).verdict;
    }
  } else {
    bool dependent_step = false;
    Vs chain = e;
    for (std::size_t i = 0; i < extra; ++i) {
      Vs next = chain;
      next.push_back(g[e.size() + i]);
      dependent_step = dependent_step || !is_independent(s, va, chain, next).verdict;
      chain = std::move(next);
    }
    monotone = dependent_step;
  }
  report.properties["monotonicity"].record(monotone, 0.0, ex("monotonicity", {{"G", g}}));

  bool invariant = true;
  double drift = 0.0;
  for (int u = 0; u < 5; ++u) {
    const Matrix unitary = random_commutant_unitary(inst, rng);
    Vs ue;
    for (const Vector& x : e) ue.push_back(unitary * x);
    const IndependenceReport moved = is_independent(s, Vs{unitary * a}, ue, Vs{unitary * b});
    invariant = invariant && moved.verdict == ab.verdict;
    drift = std::max(drift, std::abs(moved.defect - ab.defect));
  }
  report.properties["invariance"].record(invariant && drift <= tol.eq_abs, drift, ex("invariance"));

  const Vs tuple = uniform(rng) < 0.5 ? va : Vs{a, supported_vector(inst, rng)};
  try {
    ExtensionOptions first;
    first.seed = derive_seed(trial.seed, 2);
    ExtensionOptions second;
    second.seed = derive_seed(trial.seed, 3);
    second.fresh_first = true;
    const Extension x1 = nonforking_extension(s, tuple, e, g, first);
    const Extension x2 = nonforking_extension(s, tuple, e, g, second);
    const IndependenceReport check = is_independent(x1.structure, x1.tuple, embed_all(x1, e), embed_all(x1, g));
    report.properties["existence"].record(check.verdict && x1.defect <= tol.eq_abs && x2.defect <= tol.eq_abs,
                                          std::max({check.defect, x1.defect, x2.defect}), ex("existence", {{"G", g}}));
    double leak = 0.0;
    const TypeDescriptor d1 = pulled_back(type_of(x1.structure, x1.tuple, embed_all(x1, g)), x1, n, leak);
    const TypeDescriptor d2 = pulled_back(type_of(x2.structure, x2.tuple, embed_all(x2, g)), x2, n, leak);
    const double dist = std::max(descriptor_distance(d1, d2), leak);
    report.properties["stationarity"].record(dist <= tol.eq_abs, dist, ex("stationarity", {{"G", g}}));
  } catch (const ToleranceBreach&) {
    report.properties["existence"].record(false, 0.0, ex("existence", {{"G", g}}));
    report.properties["stationarity"].record(false, 0.0, ex("stationarity", {{"G", g}}));
  }

  const MorleyReport morley = morley_average_check(s, a, e, 4, derive_seed(trial.seed, 4));
  const double morley_gap = std::abs(morley.distance_to_base - morley.expected);
  report.properties["canonical_base"].record(morley_gap <= tol.eq_abs, morley_gap, ex("canonical_base"));

  double empty_base = 0.0;
  for (const Vector& p : canonical_base(s, va, Vs{})) empty_base = std::max(empty_base, p.norm());
  report.properties["canonical_base_empty"].record(empty_base <= tol.eq_abs, empty_base, ex("canonical_base_empty"));

  const FiniteBaseResult fb = finite_base(s, va, g, 1e-3);
  double worst = 0.0;
  for (double err : fb.errors) worst = std::max(worst, err);
  Vs f0;
  for (std::size_t i : fb.indices) f0.push_back(g[i]);
  const bool local = static_cast<Index>(fb.indices.size()) <= std::max<Index>(n, 1) && worst < 1e-3 &&
                     is_independent(s, fb.tuple, f0, g).verdict;
  report.properties["local_character"].record(local, worst, ex("local_character", {{"G", g}}));
}

void functional_trial(const Trial& trial, SuiteReport& report) {
  const Instance& inst = trial.inst;
  const Structure& s = inst.structure;
  const Tolerances& tol = s.tol();
  const Index n = s.dim();
  Rng rng(derive_seed(trial.seed, 1));

  auto fex = [&](const std::string& prop, const std::map<std::string, Matrix>& fs,
                 const std::map<std::string, Vector>& vectors = {}) {
    return [&, prop, fs, vectors] { return exemplar(trial, prop, vectors, {}, fs); };
  };

  // GNS round trip on a faithful or a reduced state.
  {
    const Functional phi = uniform(rng) < 0.5 ? random_state(inst, rng) : planted_dominated_pair(inst, rng).phi;
    const GnsRep rep = gns(phi);
    const GnsDefects d = gns_defects(rep, phi);
    const double worst = std::max({d.state, d.multiplicative, d.adjoint});
    report.properties["gns_round_trip"].record(worst <= tol.eq_abs && d.cyclic_rank == rep.dim, worst,
                                               fex("gns_round_trip", {{"phi", phi.rho()}}));
  }

  // Orthogonality: norm criterion, support criterion and witness agree.
  {
    const int kind = static_cast<int>(pick(rng, 3));
    const FunctionalPair pair = kind == 0   ? planted_orthogonal_pair(inst, rng)
                                : kind == 1 ? planted_overlapping_pair(inst, rng)
                                            : FunctionalPair{vector_state(s, supported_vector(inst, rng)),
                                                             vector_state(s, supported_vector(inst, rng))};
    const OrthogonalityReport o = orthogonality(pair.phi, pair.psi);
    const WitnessResult w = orthogonality_witness(pair.phi, pair.psi, 1e-6);
    const auto ex = fex("orthogonality_agreement", {{"phi", pair.phi.rho()}, {"psi", pair.psi.rho()}});
    const double gap = o.verdict ? std::abs(o.gap) : 0.0;
    report.properties["orthogonality_agreement"].record(o.verdict == o.support_disjoint && o.verdict == w.found, gap, ex);
    if (kind < 2) report.properties["orthogonality_planted"].record(o.verdict == (kind == 0), gap, ex);
  }

  // Smaller functionals under orthogonal ones stay orthogonal.
  {
    const FunctionalPair big = planted_orthogonal_pair(inst, rng);
    const Functional phi1 = compression(big.phi, random_state(inst, rng).rho());
    const Functional psi1 = compression(big.psi, random_state(inst, rng).rho());
    const bool ok = is_dominated(phi1, big.phi).verdict && is_dominated(psi1, big.psi).verdict &&
                    is_orthogonal(phi1, psi1);
    report.properties["monotone_orthogonality"].record(
        ok, 0.0, fex("monotone_orthogonality", {{"phi1", phi1.rho()}, {"psi1", psi1.rho()}, {"phi2", big.phi.rho()}, {"psi2", big.psi.rho()}}));
  }

  // Domination: states, irreducible profiles and Radon-Nikodym agree.
  {
    const int kind = static_cast<int>(pick(rng, 3));
    Vector w = kind == 1 ? supported_vector(inst, rng) : random_vector(n, rng);
    Vector v;
    if (kind == 0) {
      v = random_commutant_element(inst, rng) * w;
    } else if (kind == 1) {
      v = random_vector(n, rng);  // full support
      std::vector<bool> keep = random_subset(rng, inst.spec.blocks.size());
      keep[pick(rng, keep.size())] = false;
      w = inst.central_projection(keep) * w;
    } else {
      v = supported_vector(inst, rng);
      w = supported_vector(inst, rng);
    }
    const auto ex = fex("domination_agreement", {}, {{"v", v}, {"w", w}});
    const DominationReport dom = is_dominated(vector_state(s, v), vector_state(s, w));
    const EmbeddingReport emb = embeds_as_subrepresentation(s, v, w);
    bool rn_found = false;
    double rn_defect = 0.0;
    try {
      const RadonNikodymResult rn = radon_nikodym_operator(s, w, v);
      rn_found = rn.found;
      rn_defect = rn.found ? rn.defect : 0.0;
    } catch (const ToleranceBreach&) {
      rn_found = false;
    }
    const bool agree = dom.verdict == emb.verdict && dom.verdict == emb.intertwiner_verdict && dom.verdict == rn_found;
    report.properties["domination_agreement"].record(agree, rn_defect, ex);
    report.properties["domination_implies_embedding"].record(!dom.verdict || emb.profile_verdict, 0.0, ex);
    if (kind < 2) report.properties["domination_planted"].record(dom.verdict == (kind == 0), 0.0, ex);
    if (dom.gamma) {
      report.properties["domination_certificate"].record(dom.certificate >= -tol.psd_abs, -std::min(dom.certificate, 0.0), ex);
      report.properties["domination_minimality"].record(dom.minimality < -tol.psd_abs, std::abs(dom.minimality), ex);
    }
  }

  // Equal types have isomorphic GNS spaces; perturbed ones do not.
  {
    const Vector v = random_vector(n, rng);
    const Vector w = random_commutant_unitary(inst, rng) * v;
    const Vs empty;
    const TypeDescriptor dv = type_of(s, Vs{v}, empty);
    const GnsRep gv = gns(vector_state(s, v));
    const IntertwinerReport same = gns_intertwiner(gv, gns(vector_state(s, w)), tol);
    const bool equal_type = descriptor_distance(dv, type_of(s, Vs{w}, empty)) <= tol.eq_abs;
    report.properties["gns_type_equal"].record(equal_type && same.found, same.defect,
                                               fex("gns_type_equal", {}, {{"v", v}, {"w", w}}));
    const Vector z = random_vector(n, rng);
    Vector p = w;
    double dist = 0.0;
    for (double delta = 0.05; dist < 1e-3 && delta < 10.0; delta *= 4.0) {
      p = w + delta * z;
      dist = descriptor_distance(dv, type_of(s, Vs{p}, empty));
    }
    const IntertwinerReport differ = gns_intertwiner(gv, gns(vector_state(s, p)), tol);
    report.properties["gns_type_perturbed"].record(dist >= 1e-3 && !differ.found, 0.0,
                                                   fex("gns_type_perturbed", {}, {{"v", v}, {"w", p}}));
  }

  // Orthogonality of types survives non-forking extension to a larger base.
  {
    Vs e;
    for (std::size_t i = pick(rng, 2); i > 0; --i) e.push_back(supported_vector(inst, rng));
    const Vector v = supported_vector(inst, rng);
    const Vector w = supported_vector(inst, rng);
    const Vs f = concat(e, {supported_vector(inst, rng)});
    const TypeRelationReport before = types_orthogonal(s, v, w, e);
    bool ok = before.verdict == before.cross_check;
    try {
      const Extension x = nonforking_extension(s, Vs{v, w}, e, f);
      const TypeRelationReport after = types_orthogonal(x.structure, x.tuple[0], x.tuple[1], embed_all(x, f));
      ok = ok && after.verdict == before.verdict && after.cross_check == after.verdict;
    } catch (const ToleranceBreach&) {
      ok = false;
    }
    report.properties["type_orthogonality_extension"].record(ok, 0.0, [&, v, w, e, f] {
      std::map<std::string, Vector> vectors{{"v", v}, {"w", w}};
      return exemplar(trial, "type_orthogonality_extension", vectors, name_sets({{"E", e}, {"F", f}}, vectors));
    });
  }
}

SuiteReport run_suite(const std::string& name, const InstanceSpec& spec, int trials,
                      void (*body)(const Trial&, SuiteReport&)) {
  if (trials < 1) throw std::invalid_argument("suite: trials must be at least 1");
  spec.validate();
  SuiteReport report;
  report.suite = name;
  report.seed = spec.seed;
  report.trials = trials;
  for (int t = 0; t < trials; ++t) {
    const Trial trial = make_trial(spec, t);
    if (trial.inst.structure.dim() == 0) continue;
    body(trial, report);
  }
  return report;
}

}  // namespace

SuiteReport run_freeness_suite(const InstanceSpec& spec, int trials) {
  return run_suite("freeness", spec, trials, freeness_trial);
}

SuiteReport run_functional_suite(const InstanceSpec& spec, int trials) {
  return run_suite("functionals", spec, trials, functional_trial);
}

}  // namespace opmodel
