#include "opmodel/cli.hpp"
#include "opmodel/functionals.hpp"
#include "opmodel/harness.hpp"
#include "opmodel/independence.hpp"
#include "opmodel/scenario.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

using namespace opmodel;

namespace {

namespace fs = std::filesystem;
using Vs = std::vector<Vector>;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

Instance draw(Rng& rng, bool allow_discrete = true) {
  InstanceSpec spec;
  spec.blocks = random_plan(rng, 12, allow_discrete);
  spec.seed = rng();
  return random_instance(spec);
}

/// A random nonempty subset of the blocks, as a central projection.
Matrix random_central_projection(const Instance& inst, Rng& rng) {
  std::vector<bool> chosen(inst.spec.blocks.size());
  std::bernoulli_distribution coin(0.5);
  bool any = false;
  for (std::size_t i = 0; i < chosen.size(); ++i) any |= (chosen[i] = coin(rng));
  if (!any) chosen[std::uniform_int_distribution<std::size_t>(0, chosen.size() - 1)(rng)] = true;
  return inst.central_projection(chosen);
}

/// Positive invertible element of the commutant.
Matrix random_commutant_positive(const Instance& inst, Rng& rng) {
  std::vector<Matrix> ys;
  for (const BlockPlan& b : inst.spec.blocks) {
    const Matrix g = ginibre(b.m, b.m, rng);
    ys.push_back(g * g.adjoint() + 0.1 * Matrix::Identity(b.m, b.m));
  }
  return inst.assemble_commutant(ys);
}

Outcome gns_round_trip() {
  const auto start = std::chrono::steady_clock::now();
  Rng rng(101);
  double worst_state = 0.0, worst_hom = 0.0;
  int pairs = 0;
  Index max_n = 0;
  for (int t = 0; t < 200; ++t) {
    const Instance inst = draw(rng);
    const Structure& s = inst.structure;
    max_n = std::max(max_n, s.dim());
    Functional phi = random_state(inst, rng);
    if (t % 2 == 1) {
      const Vector v = random_central_projection(inst, rng) * random_vector(s.dim(), rng);
      phi = vector_state(s, v.normalized());
    }
    const GnsDefects d = gns_defects(gns(phi), phi);
    worst_state = std::max(worst_state, d.state);
    worst_hom = std::max({worst_hom, d.multiplicative, d.adjoint});
    ++pairs;
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return {pairs >= 200 && max_n <= 12 && worst_state <= 1e-8 && worst_hom <= 1e-8 && secs <= 30.0,
          fmt("%d pairs, n <= %d, state defect %.2e, *-hom defect %.2e, %.1f s", pairs, int(max_n), worst_state, worst_hom,
              secs)};
}

Outcome freeness_suite() {
  InstanceSpec spec;
  spec.seed = 202;
  const SuiteReport r = run_freeness_suite(spec, 100);
  bool ok = true;
  std::string detail;
  for (const char* name : {"symmetry", "transitivity", "invariance", "monotonicity", "existence", "stationarity"}) {
    const PropertyTally& p = r.properties.at(name);
    ok = ok && p.passed == 100 && p.failed == 0;
    detail += fmt("%s %d/%d, ", name, p.passed, p.passed + p.failed);
  }
  detail += fmt("max stationarity drift %.2e", r.properties.at("stationarity").max_defect);
  return {ok, detail};
}

Outcome orthogonality_agreement() {
  Rng rng(303);
  int agree = 0, truth = 0, orthogonal = 0;
  for (int t = 0; t < 100; ++t) {
    const Instance inst = draw(rng, false);
    const Structure& s = inst.structure;
    std::optional<bool> expected;
    FunctionalPair pair{random_state(inst, rng), random_state(inst, rng)};
    if (t < 25) {
      pair = planted_orthogonal_pair(inst, rng);
      expected = true;
    } else if (t < 50) {
      pair = planted_overlapping_pair(inst, rng);
      expected = false;
    } else if (t < 75) {
      expected = false;
    } else {
      const Matrix p = random_central_projection(inst, rng), q = random_central_projection(inst, rng);
      pair = {vector_state(s, p * random_vector(s.dim(), rng)), vector_state(s, q * random_vector(s.dim(), rng))};
      expected = (p * q).norm() < 1e-9;
    }
    const Functional& phi = pair.phi;
    const Functional& psi = pair.psi;
    const bool by_norm = std::abs(functional_norm(phi - psi) - functional_norm(phi) - functional_norm(psi)) <= 1e-8;
    const bool by_support = orthogonality(phi, psi).support_disjoint;
    const bool by_witness = orthogonality_witness(phi, psi, 1e-6).found;
    if (by_norm == by_support && by_support == by_witness) ++agree;
    if (by_norm == *expected) ++truth;
    if (by_norm) ++orthogonal;
  }
  return {agree == 100 && truth == 100,
          fmt("agreement %d/100, ground truth %d/100 (%d orthogonal, 25 planted each way)", agree, truth, orthogonal)};
}

Outcome domination_agreement() {
  Rng rng(404);
  int agree = 0, planted = 0, dominated = 0, certified = 0, minimal = 0, with_gamma = 0;
  double worst_certificate = 0.0;
  for (int t = 0; t < 100; ++t) {
    const Instance inst = draw(rng);
    const Structure& s = inst.structure;
    const Index n = s.dim();
    Vector w = random_vector(n, rng), v = random_vector(n, rng);
    if (t < 25) {
      v = random_commutant_positive(inst, rng) * w;
    } else if (t < 50) {
      w = random_central_projection(inst, rng) * w;
    } else if (t < 75) {
      v = random_central_projection(inst, rng) * v;
    }
    const DominationReport dom = is_dominated(vector_state(s, v), vector_state(s, w));
    const EmbeddingReport emb = embeds_as_subrepresentation(s, v, w);
    const RadonNikodymResult rn = radon_nikodym_operator(s, w, v);
    if (dom.verdict == emb.verdict && emb.verdict == emb.intertwiner_verdict && dom.verdict == rn.found) ++agree;
    if (t < 25 && dom.verdict) ++planted;
    if (dom.verdict) ++dominated;
    if (dom.gamma) {
      ++with_gamma;
      worst_certificate = std::min(worst_certificate, dom.certificate);
      if (dom.certificate >= -1e-8) ++certified;
      if (dom.minimality < -1e-8) ++minimal;
    }
  }
  return {agree == 100 && planted == 25 && certified == with_gamma && minimal == with_gamma,
          fmt("agreement %d/100, planted %d/25, %d dominated, certificate %d/%d (worst %.2e), minimality %d/%d", agree,
              planted, dominated, certified, with_gamma, worst_certificate, minimal, with_gamma)};
}

Outcome morley_averages() {
  Rng rng(505);
  double worst = 0.0;
  int checks = 0, zero_bases = 0, zero_trials = 0;
  for (int t = 0; t < 50; ++t) {
    const Instance inst = draw(rng);
    const Structure& s = inst.structure;
    const Vector v = random_vector(s.dim(), rng).normalized();
    Vs e;
    if (t % 2 == 0) e.push_back(random_central_projection(inst, rng) * random_vector(s.dim(), rng));
    const double residual = (v - acl(s, e).project(v)).norm();
    for (int k : {1, 4, 16, 64}) {
      const MorleyReport r = morley_average_check(s, v, e, k, rng());
      worst = std::max(worst, std::abs(r.distance_to_base - residual / std::sqrt(double(k))));
      ++checks;
    }
    if (s.discrete().is_zero()) {
      ++zero_trials;
      const Vs tuple{v};
      const Vs cb = canonical_base(s, tuple, Vs{});
      if (cb.size() == 1 && cb[0].norm() <= 1e-12) ++zero_bases;
    }
  }
  return {checks == 200 && worst <= 1e-8 && zero_trials > 0 && zero_bases == zero_trials,
          fmt("%d averages over k in {1,4,16,64}, max |distance - residual/sqrt(k)| %.2e, cb over {} zero %d/%d", checks,
              worst, zero_bases, zero_trials)};
}

Outcome finite_bases() {
  Rng rng(606);
  const double eps = 1e-3;
  int ok = 0;
  double worst = 0.0;
  std::size_t largest = 0;
  for (int t = 0; t < 50; ++t) {
    const Instance inst = draw(rng);
    const Structure& s = inst.structure;
    const Index n = s.dim();
    Vs f;
    std::vector<Matrix> projections;
    for (int i = 0; i < 8; ++i) {
      projections.push_back(random_central_projection(inst, rng));
      f.push_back(projections.back() * random_vector(n, rng));
    }
    Vs tuple;
    for (int j = 0; j < 1 + t % 3; ++j) {
      Vector v = random_vector(n, rng);
      if (t % 2 == 1) v = projections.front() * v + 1e-5 * random_vector(n, rng);
      tuple.push_back(v);
    }
    const FiniteBaseResult r = finite_base(s, tuple, f, eps);
    Vs f0;
    for (std::size_t i : r.indices) f0.push_back(f.at(i));
    bool close = r.tuple.size() == tuple.size();
    for (std::size_t j = 0; close && j < tuple.size(); ++j) {
      const double err = (tuple[j] - r.tuple[j]).norm();
      worst = std::max(worst, err);
      close = err < eps;
    }
    largest = std::max(largest, f0.size());
    const bool independent = is_independent(s, r.tuple, f0, f).verdict;
    if (close && independent && Index(f0.size()) <= n) ++ok;
  }
  return {ok == 50, fmt("%d/50 bases valid, largest |F0| %zu, max |v - v'| %.2e", ok, largest, worst)};
}

Outcome type_soundness() {
  Rng rng(707);
  int equal_found = 0, perturbed_rejected = 0;
  double worst_defect = 0.0, least_distance = 1e300;
  for (int t = 0; t < 50; ++t) {
    const Instance inst = draw(rng);
    const Structure& s = inst.structure;
    const Vector v = random_vector(s.dim(), rng).normalized();
    const Vector w = random_commutant_unitary(inst, rng) * v;
    const Vs tv{v}, tw{w};
    const bool same = same_type(type_of(s, tv, Vs{}), type_of(s, tw, Vs{}), s.tol());
    const IntertwinerReport r = gns_intertwiner(gns(vector_state(s, v)), gns(vector_state(s, w)), s.tol());
    worst_defect = std::max(worst_defect, r.defect);
    if (same && r.found && r.defect <= 1e-8) ++equal_found;

    Vector x = v;
    double distance = 0.0;
    for (double delta = 0.01; distance < 1e-3 && delta < 1e3; delta *= 2) {
      x = v + delta * random_vector(s.dim(), rng);
      const Vs tx{x};
      distance = descriptor_distance(type_of(s, tv, Vs{}), type_of(s, tx, Vs{}));
    }
    least_distance = std::min(least_distance, distance);
    if (distance >= 1e-3 && !gns_intertwiner(gns(vector_state(s, v)), gns(vector_state(s, x)), s.tol()).found) {
      ++perturbed_rejected;
    }
  }
  return {equal_found == 50 && perturbed_rejected == 50,
          fmt("equal pairs %d/50 (worst defect %.2e), perturbed pairs rejected %d/50 (least distance %.2e)", equal_found,
              worst_defect, perturbed_rejected, least_distance)};
}

/// Structural equality with numbers compared within `tol`.
bool close(const Json& a, const Json& b, double tol) {
  if (a.is_number() && b.is_number()) return std::abs(a.get<double>() - b.get<double>()) <= tol;
  if (a.is_array() && b.is_array()) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (!close(a[i], b[i], tol)) return false;
    }
    return true;
  }
  if (a.is_object() && b.is_object()) {
    if (a.size() != b.size()) return false;
    for (const auto& [key, value] : a.items()) {
      if (!b.contains(key) || !close(value, b[key], tol)) return false;
    }
    return true;
  }
  return a == b;
}

Json cvec(std::vector<double> xs) {
  Json out = Json::array();
  for (double x : xs) out.push_back({x, 0.0});
  return out;
}

Json cmat(std::vector<std::vector<double>> rows) {
  Json out = Json::array();
  for (const auto& r : rows) out.push_back(cvec(r));
  return out;
}

struct HandValue {
  std::string golden;
  std::string pointer;
  Json expected;
};

std::vector<HandValue> hand_values() {
  const double r = 1.0 / std::sqrt(2.0);
  const Json e11 = cmat({{1, 0}, {0, 0}});
  return {
      {"decompose_diagonal", "/algebra_dimension", 2},
      {"decompose_diagonal", "/commutant_dimension", 2},
      {"decompose_diagonal", "/double_commutant", true},
      {"decompose_diagonal", "/signature", {{1, 1}, {1, 1}}},
      {"decompose_m2", "/algebra_dimension", 4},
      {"dcl_e1", "/projector", e11},
      {"dcl_m2_e1", "/dimension", 2},
      {"dcl_axes", "/dimension", 2},
      {"dcl_empty", "/dimension", 0},
      {"acl_e1_discrete", "/dimension", 2},
      {"parts_u_discrete", "/essential", cvec({r, 0})},
      {"parts_u_discrete", "/discrete", cvec({0, r})},
      {"substructure_e1", "/signature", {{1, 1}}},
      {"substructure_m2_e1", "/signature", {{2, 1}}},
      {"state_e1", "/rho", e11},
      {"state_m2_e1", "/rho", e11},
      {"state_u", "/rho", cmat({{0.5, 0}, {0, 0.5}})},
      {"state_offdiag", "/rho", cmat({{0, 0}, {0, 0}})},
      {"type_e1", "/moments", {cmat({{1}}), cmat({{1}})}},
      {"typeq_e1_e2", "/equal", false},
      {"indep_e1_e2", "/verdict", true},
      {"indep_e1_e2", "/defect", 0.0},
      {"indep_u_e1", "/verdict", false},
      {"indep_u_e1", "/defect", r},
      {"extend_e1", "/dimension", 3},
      {"extend_e1", "/tuple/0", cvec({0, 0, 1})},
      {"extend_e1", "/independent", true},
      {"cbase_u_e1", "/canonical_base/0", cvec({r, 0})},
      {"cbase_u_empty", "/canonical_base/0", cvec({0, 0})},
      {"morley_e2_e1", "/residual_norm", 1.0},
      {"morley_e2_e1", "/distance_to_base", 0.5},
      {"fbase_e1_axes", "/indices", {0}},
      {"fbase_e1_axes", "/tuple/0", cvec({1, 0})},
      {"norm_e1_e2", "/norm", 2.0},
      {"norm_pair", "/norm", 2.0},
      {"orth_e1_e2", "/verdict", true},
      {"witness_e1_e2", "/found", true},
      {"witness_e1_e2", "/element", e11},
      {"witness_e1_e2", "/phi_gap", 0.0},
      {"witness_e1_e2", "/psi_mass", 0.0},
      {"witness_u_u", "/found", false},
      {"dom_e1_u", "/verdict", true},
      {"dom_e1_u", "/gamma", 2.0},
      {"dom_m2_e1_e2", "/verdict", false},
      {"gns_ones", "/dimension", 2},
      {"gns_ones", "/cyclic_norm", std::sqrt(2.0)},
      {"gns_e1", "/dimension", 1},
      {"embed_e1_u", "/verdict", true},
      {"embed_m2_e1_e2", "/verdict", false},
      {"rn_u_e1", "/found", true},
      {"rn_u_e1", "/t", cmat({{std::sqrt(2.0), 0}, {0, 0}})},
      {"rn_u_e1", "/v_prime", cvec({1, 0})},
  };
}

/// Linear algebra values that the command line does not print.
std::vector<std::string> library_oracle_failures(const Structure& diag) {
  std::vector<std::string> bad;
  const Tolerances tol;
  const double r = 1.0 / std::sqrt(2.0);
  Vector e1(2), u(2);
  e1 << 1, 0;
  u << r, r;
  const Vs one{e1}, other{u};
  const Subspace s1 = orthonormalize(one, 2, tol), su = orthonormalize(other, 2, tol);
  if ((project(s1, u) - Vector(e1 * r)).norm() > 1e-10) bad.push_back("project");
  if (subspace_sum(s1, su, tol).dim() != 2) bad.push_back("subspace_sum");

  Matrix x(2, 2);
  x << 0, 1, 1, 0;
  const HermitianEig eig = hermitian_eig(x, tol);
  Vector plus(2), minus(2);
  plus << r, r;
  minus << r, -r;
  if (std::abs(eig.values[0] - 1) > 1e-10 || std::abs(eig.values[1] + 1) > 1e-10 ||
      std::abs(std::abs(eig.vectors.col(0).dot(plus)) - 1) > 1e-10 ||
      std::abs(std::abs(eig.vectors.col(1).dot(minus)) - 1) > 1e-10) {
    bad.push_back("hermitian_eig");
  }

  Matrix e12 = Matrix::Zero(2, 2);
  e12(0, 1) = 1;
  if (conditional_expectation(e12, diag.algebra()).norm() > 1e-10) bad.push_back("conditional_expectation(E12)");
  if ((conditional_expectation(u * u.adjoint(), diag.algebra()) - 0.5 * Matrix::Identity(2, 2)).norm() > 1e-10) {
    bad.push_back("conditional_expectation(uu*)");
  }
  const StarAlgebra c = commutant(diag.algebra());
  bool diagonal = c.size() == 2;
  for (const Matrix& b : c.basis()) diagonal = diagonal && std::abs(b(0, 1)) + std::abs(b(1, 0)) <= 1e-10;
  if (!diagonal) bad.push_back("commutant");

  const Structure sum = direct_sum(diag, diag);
  if (sum.dim() != 4 || sum.algebra().size() != 2) bad.push_back("direct_sum");

  InstanceSpec spec;
  spec.blocks = {{1, 1}, {2, 1}};
  const Structure planted = random_structure(spec);
  if (planted.dim() != 3 || planted.algebra().size() != 5) bad.push_back("random_structure dimension");
  return bad;
}

Outcome golden_scenarios() {
  const fs::path dir = OPMODEL_GOLDEN_DIR;
  std::ifstream in(dir / "cases.json");
  const Json cases = Json::parse(in);
  std::map<std::string, Json> outputs;
  int matched = 0;
  std::vector<std::string> bad;
  for (const Json& c : cases) {
    const std::string name = c["name"].get<std::string>();
    std::vector<std::string> args{"--json"};
    for (const Json& a : c["args"]) {
      const std::string s = a.get<std::string>();
      args.push_back(s.ends_with(".json") ? (dir / s).string() : s);
    }
    std::ostringstream out, err;
    const int code = run_cli(args, out, err);
    std::ifstream expected_file(dir / "expected" / (name + ".json"));
    const Json expected = Json::parse(expected_file, nullptr, false);
    const Json got = Json::parse(out.str(), nullptr, false);
    outputs[name] = got;
    if (code == 0 && !expected.is_discarded() && close(got, expected, 1e-10)) {
      ++matched;
    } else {
      bad.push_back(name);
    }
  }
  int hand_ok = 0;
  const std::vector<HandValue> hand = hand_values();
  for (const HandValue& h : hand) {
    const auto it = outputs.find(h.golden);
    const Json::json_pointer ptr(h.pointer);
    if (it != outputs.end() && it->second.contains(ptr) && close(it->second[ptr], h.expected, 1e-10)) {
      ++hand_ok;
    } else {
      bad.push_back(h.golden + h.pointer);
    }
  }
  const auto floor = outputs["witness_u_u"].value("floor", 0.0);
  if (floor < 0.5) bad.push_back("witness_u_u/floor");

  const std::vector<std::string> lib = library_oracle_failures(load_scenario((dir / "diagonal.json").string()).structure);
  bad.insert(bad.end(), lib.begin(), lib.end());
  std::string detail = fmt("goldens %d/%zu, hand values %d/%zu, library oracles %zu failed", matched, cases.size(), hand_ok,
                           hand.size(), lib.size());
  for (const std::string& b : bad) detail += " [" + b + "]";
  return {bad.empty(), detail};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"1 gns round trip", gns_round_trip},
      {"2 freeness suite", freeness_suite},
      {"3 orthogonality agreement", orthogonality_agreement},
      {"4 domination agreement", domination_agreement},
      {"5 morley averages", morley_averages},
      {"6 finite bases", finite_bases},
      {"7 type equality soundness", type_soundness},
      {"8 golden scenarios", golden_scenarios},
  };
  const auto start = std::chrono::steady_clock::now();
  int failed = 0;
  for (const auto& [name, check] : criteria) {
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failed;
    std::printf("%s  %s: %s\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str());
    std::fflush(stdout);
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::printf("%d/%zu criteria passed in %.1f s\n", int(criteria.size()) - failed, criteria.size(), secs);
  return failed == 0 ? 0 : 1;
}
