#include "opmodel/cli.hpp"

#include "opmodel/functionals.hpp"
#include "opmodel/harness.hpp"
#include "opmodel/independence.hpp"
#include "opmodel/scenario.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <functional>
#include <iostream>
#include <optional>

namespace opmodel {

namespace {

using Vs = std::vector<Vector>;

struct Options {
  std::optional<double> tol;
  std::optional<std::uint64_t> seed;
  bool json = false;
  bool quiet = false;
  bool strict = false;
};

/// What a command hands back: the report and, for boolean queries, the verdict.
struct Outcome {
  Json report;
  std::optional<bool> verdict;
};

Json num(double x) { return round_report(x); }

Json vectors_json(const Vs& vs) {
  Json out = Json::array();
  for (const Vector& v : vs) out.push_back(to_json(v));
  return out;
}

Json words_json(const std::vector<Word>& words) {
  Json out = Json::array();
  for (const Word& w : words) out.push_back(w);
  return out;
}

Json optional_num(const std::optional<double>& x) { return x ? num(*x) : Json(nullptr); }

Scenario load(const std::string& path, const Options& opt) {
  Scenario sc = load_scenario(path);
  if (opt.tol) {
    Tolerances t = sc.structure.tol();
    t.eq_abs = *opt.tol;
    t.validate();
    sc.structure = sc.structure.with_tolerances(t);
  }
  return sc;
}

double parse_positive(const std::string& text, const std::string& what) {
  std::size_t used = 0;
  double value = 0.0;
  try {
    value = std::stod(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != text.size() || !(value > 0.0)) throw std::invalid_argument(what + ": expected a positive number, got '" + text + "'");
  return value;
}

Json subspace_json(const Subspace& sub) {
  return {{"dimension", sub.dim()}, {"projector", to_json(sub.projector())}};
}

Json signature_json(const BlockDecomposition& dec) {
  Json out = Json::array();
  for (const auto& [k, m] : dec.signature()) out.push_back({k, m});
  return out;
}

void emit(const std::string& command, Json report, const Options& opt, std::ostream& out) {
  report["schema"] = 1;
  report["command"] = command;
  if (opt.quiet) return;
  if (opt.json) {
    out << report.dump(2) << "\n";
    return;
  }
  for (const auto& [key, value] : report.items()) out << key << ": " << value.dump() << "\n";
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Finite-dimensional representations of C*-algebras: closures, independence, types and functionals"};
  app.name("opmodel");
  app.require_subcommand(1);
  app.fallthrough();
  Options opt;
  app.add_option("--tol", opt.tol, "override eq_abs");
  app.add_option("--seed", opt.seed, "seed for randomized steps");
  app.add_flag("--json", opt.json, "print the report as JSON");
  app.add_flag("--quiet", opt.quiet, "print nothing; report through the exit code");
  app.add_flag("--strict", opt.strict, "exit with 1 when a boolean query answers false");

  std::function<Outcome()> action;
  std::string command;
  std::string scenario, a1, a2, a3, a4;

  // Adds a subcommand taking the scenario plus the named positionals.
  auto sub = [&](const std::string& name, const std::string& help, std::vector<std::pair<std::string, std::string*>> pos,
                 std::function<Outcome(const Scenario&)> body, std::size_t optional_tail = 0) {
    CLI::App* c = app.add_subcommand(name, help);
    c->add_option("scenario", scenario, "scenario file")->required();
    for (std::size_t i = 0; i < pos.size(); ++i) {
      CLI::Option* o = c->add_option(pos[i].first, *pos[i].second);
      if (i + optional_tail < pos.size()) o->required();
    }
    c->callback([&, name, body] {
      command = name;
      action = [&, body] { return body(load(scenario, opt)); };
    });
  };

  sub("dcl", "definable closure: the cyclic subspace of SET", {{"set", &a1}},
      [&](const Scenario& sc) { return Outcome{subspace_json(cyclic_subspace(sc.structure, sc.resolve_set(a1))), {}}; });
  sub("acl", "algebraic closure: cyclic subspace of SET joined with the discrete part", {{"set", &a1}},
      [&](const Scenario& sc) { return Outcome{subspace_json(acl(sc.structure, sc.resolve_set(a1))), {}}; });
  sub("indep", "is TUPLE independent from EXT over BASE", {{"tuple", &a1}, {"base", &a2}, {"ext", &a3}},
      [&](const Scenario& sc) {
        const IndependenceReport r = is_independent(sc.structure, sc.resolve_set(a1), sc.resolve_set(a2), sc.resolve_set(a3));
        return Outcome{{{"verdict", r.verdict},
                        {"defect", num(r.defect)},
                        {"base_projections", vectors_json(r.base_projections)},
                        {"extended_projections", vectors_json(r.extended_projections)}},
                       r.verdict};
      });
  sub("cbase", "canonical base of TUPLE over BASE", {{"tuple", &a1}, {"base", &a2}}, [&](const Scenario& sc) {
    return Outcome{{{"canonical_base", vectors_json(canonical_base(sc.structure, sc.resolve_set(a1), sc.resolve_set(a2)))}}, {}};
  });
  sub("type", "type descriptor of TUPLE over BASE", {{"tuple", &a1}, {"base", &a2}}, [&](const Scenario& sc) {
    const TypeDescriptor d = type_of(sc.structure, sc.resolve_set(a1), sc.resolve_set(a2));
    Json moments = Json::array();
    for (const Matrix& m : d.moments) moments.push_back(to_json(m));
    return Outcome{{{"words", words_json(d.words)}, {"base_projections", vectors_json(d.base_projections)}, {"moments", moments}}, {}};
  });
  sub("typeq", "do TUPLE1 and TUPLE2 have the same type over BASE", {{"tuple1", &a1}, {"tuple2", &a2}, {"base", &a3}},
      [&](const Scenario& sc) {
        const Vs base = sc.resolve_set(a3);
        const TypeDescriptor d1 = type_of(sc.structure, sc.resolve_set(a1), base);
        const TypeDescriptor d2 = type_of(sc.structure, sc.resolve_set(a2), base);
        const bool equal = same_type(d1, d2, sc.structure.tol());
        return Outcome{{{"equal", equal}, {"distance", num(descriptor_distance(d1, d2))}}, equal};
      });
  sub("extend", "non-forking extension of the type of TUPLE over BASE to EXT", {{"tuple", &a1}, {"base", &a2}, {"ext", &a3}},
      [&](const Scenario& sc) {
        ExtensionOptions options;
        options.seed = opt.seed;
        const Vs e = sc.resolve_set(a2), f = sc.resolve_set(a3);
        const Extension x = nonforking_extension(sc.structure, sc.resolve_set(a1), e, f, options);
        Vs ex, fx;
        for (const Vector& v : e) ex.push_back(x.embed(v));
        for (const Vector& v : f) fx.push_back(x.embed(v));
        const IndependenceReport check = is_independent(x.structure, x.tuple, ex, fx);
        return Outcome{{{"dimension", x.structure.dim()},
                        {"base_offset", x.base_offset},
                        {"fresh_offset", x.fresh_offset},
                        {"defect", num(x.defect)},
                        {"tuple", vectors_json(x.tuple)},
                        {"independent", check.verdict}},
                       {}};
      });
  sub("fbase", "finite base: a sublist of EXT carrying the type of TUPLE within EPS", {{"tuple", &a1}, {"ext", &a2}, {"eps", &a3}},
      [&](const Scenario& sc) {
        const FiniteBaseResult r = finite_base(sc.structure, sc.resolve_set(a1), sc.resolve_set(a2), parse_positive(a3, "eps"));
        Json errors = Json::array();
        for (double x : r.errors) errors.push_back(num(x));
        return Outcome{{{"indices", r.indices}, {"tuple", vectors_json(r.tuple)}, {"errors", errors}}, {}};
      });
  sub("morley", "average of K non-forking copies of VEC over BASE", {{"vec", &a1}, {"base", &a2}, {"k", &a3}},
      [&](const Scenario& sc) {
        const double k = parse_positive(a3, "k");
        if (k != std::floor(k) || k > 4096) throw std::invalid_argument("k: expected an integer in 1..4096");
        const MorleyReport r = morley_average_check(sc.structure, sc.resolve_vector(a1), sc.resolve_set(a2), static_cast<int>(k),
                                                    opt.seed.value_or(0));
        return Outcome{{{"distance_to_base", num(r.distance_to_base)},
                        {"distance_to_cb", num(r.distance_to_cb)},
                        {"expected", num(r.expected)},
                        {"residual_norm", num(r.residual_norm)},
                        {"final_dimension", r.final_dim}},
                       {}};
      });
  sub("parts", "essential and discrete parts of VEC", {{"vec", &a1}}, [&](const Scenario& sc) {
    const EssentialDiscrete p = essential_discrete_parts(sc.structure, sc.resolve_vector(a1));
    return Outcome{{{"essential", to_json(p.essential)}, {"discrete", to_json(p.discrete)}}, {}};
  });
  sub("substructure", "the cyclic substructure generated by VEC", {{"vec", &a1}}, [&](const Scenario& sc) {
    const CyclicPiece p = cyclic_substructure(sc.structure, sc.resolve_vector(a1));
    Json sig = Json::array();
    if (p.structure.dim() > 0) sig = signature_json(p.structure.algebra().decomposition());
    return Outcome{{{"dimension", p.structure.dim()},
                    {"algebra_dimension", p.structure.dim() > 0 ? p.structure.algebra().size() : 0},
                    {"signature", sig},
                    {"degenerate", p.structure.degenerate()}},
                   {}};
  });
  sub("state", "representative of a functional or vector state F", {{"f", &a1}}, [&](const Scenario& sc) {
    const Functional phi = sc.resolve_functional(a1);
    Json r{{"rho", to_json(phi.rho())}, {"hermitian", phi.is_hermitian()}, {"positive", phi.is_positive()}};
    r["norm"] = phi.is_hermitian() ? num(functional_norm(phi)) : Json(nullptr);
    return Outcome{r, {}};
  });
  sub("norm", "norm of F, or of F - G", {{"f", &a1}, {"g", &a2}},
      [&](const Scenario& sc) {
        Functional phi = sc.resolve_functional(a1);
        if (!a2.empty()) phi = phi - sc.resolve_functional(a2);
        return Outcome{{{"norm", num(functional_norm(phi))}}, {}};
      },
      1);
  sub("witness", "projection a with F(I - a) < EPS and G(a) < EPS", {{"f", &a1}, {"g", &a2}, {"eps", &a3}},
      [&](const Scenario& sc) {
        const WitnessResult w =
            orthogonality_witness(sc.resolve_functional(a1), sc.resolve_functional(a2), parse_positive(a3, "eps"));
        return Outcome{{{"found", w.found},
                        {"element", to_json(w.element)},
                        {"phi_gap", num(w.phi_gap)},
                        {"psi_mass", num(w.psi_mass)},
                        {"floor", num(w.floor)}},
                       w.found};
      });
  sub("gns", "GNS representation of a functional or vector state F", {{"f", &a1}}, [&](const Scenario& sc) {
    const Functional phi = sc.resolve_functional(a1);
    const GnsRep rep = gns(phi);
    const GnsDefects d = gns_defects(rep, phi);
    return Outcome{{{"dimension", rep.dim},
                    {"cyclic_norm", num(rep.cyclic.norm())},
                    {"state_defect", num(d.state)},
                    {"multiplicative_defect", num(d.multiplicative)},
                    {"adjoint_defect", num(d.adjoint)},
                    {"cyclic_rank", d.cyclic_rank}},
                   {}};
  });
  sub("orth", "are the types of V and W over BASE orthogonal", {{"v", &a1}, {"w", &a2}, {"base", &a3}},
      [&](const Scenario& sc) {
        const TypeRelationReport r = types_orthogonal(sc.structure, sc.resolve_vector(a1), sc.resolve_vector(a2), sc.resolve_set(a3));
        const OrthogonalityReport o = orthogonality(vector_state(sc.structure, r.residual_v), vector_state(sc.structure, r.residual_w));
        return Outcome{{{"verdict", r.verdict},
                        {"cross_check", r.cross_check},
                        {"gap", num(o.gap)},
                        {"support_disjoint", o.support_disjoint},
                        {"residual_v", to_json(r.residual_v)},
                        {"residual_w", to_json(r.residual_w)}},
                       r.verdict};
      });
  sub("dom", "is the residual state of V over BASE dominated by that of W", {{"v", &a1}, {"w", &a2}, {"base", &a3}},
      [&](const Scenario& sc) {
        const TypeRelationReport r = types_dominated(sc.structure, sc.resolve_vector(a2), sc.resolve_vector(a1), sc.resolve_set(a3));
        const DominationReport d = is_dominated(vector_state(sc.structure, r.residual_w), vector_state(sc.structure, r.residual_v));
        return Outcome{{{"verdict", r.verdict},
                        {"cross_check", r.cross_check},
                        {"gamma", optional_num(d.gamma)},
                        {"outside_mass", num(d.outside_mass)}},
                       r.verdict};
      });
  sub("embed", "does (H_V, V) embed in (H_W, W)", {{"v", &a1}, {"w", &a2}}, [&](const Scenario& sc) {
    const EmbeddingReport r = embeds_as_subrepresentation(sc.structure, sc.resolve_vector(a1), sc.resolve_vector(a2));
    return Outcome{{{"verdict", r.verdict},
                    {"intertwiner_verdict", r.intertwiner_verdict},
                    {"profile_verdict", r.profile_verdict},
                    {"gamma", optional_num(r.gamma)}},
                   r.verdict};
  });
  sub("rn", "positive commutant operator T on H_W with the state of T W equal to that of V", {{"w", &a1}, {"v", &a2}},
      [&](const Scenario& sc) {
        const RadonNikodymResult r = radon_nikodym_operator(sc.structure, sc.resolve_vector(a1), sc.resolve_vector(a2));
        return Outcome{{{"found", r.found},
                        {"t", to_json(r.t)},
                        {"v_prime", to_json(r.v_prime)},
                        {"residual", num(r.residual)},
                        {"defect", num(r.defect)},
                        {"reason", r.reason}},
                       r.found};
      });
  sub("decompose", "block decomposition of the generated algebra", {}, [&](const Scenario& sc) {
    const Structure& s = sc.structure;
    if (s.dim() == 0) return Outcome{{{"algebra_dimension", 0}, {"signature", Json::array()}}, {}};
    const StarAlgebra& alg = s.algebra();
    const BlockDecomposition& dec = alg.decomposition();
    double defect = 0.0;
    for (const Matrix& g : s.generators()) defect = std::max(defect, dec.block_defect(g));
    return Outcome{{{"algebra_dimension", alg.size()},
                    {"commutant_dimension", alg.commutant_ptr()->size()},
                    {"double_commutant", double_commutant_check(alg)},
                    {"signature", signature_json(dec)},
                    {"block_defect", num(defect)},
                    {"canonical_words", words_json(s.canonical_words())}},
                   {}};
  });

  int trials = 100;
  CLI::App* axioms = app.add_subcommand("axioms", "run the randomized freeness and functional suites");
  axioms->add_option("--trials", trials, "trials per suite")->check(CLI::Range(1, 100000));
  axioms->callback([&] {
    command = "axioms";
    action = [&] {
      InstanceSpec spec;
      spec.seed = opt.seed.value_or(0);
      const SuiteReport free = run_freeness_suite(spec, trials);
      const SuiteReport fun = run_functional_suite(spec, trials);
      const bool ok = free.all_passed() && fun.all_passed();
      return Outcome{{{"freeness", free.to_json()}, {"functionals", fun.to_json()}, {"all_passed", ok}}, ok};
    };
  });

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitInputError;
  }

  try {
    const Outcome outcome = action();
    emit(command, outcome.report, opt, out);
    if (opt.strict && outcome.verdict && !*outcome.verdict) return kExitVerdictFalse;
    return kExitOk;
  } catch (const ToleranceBreach& e) {
    err << "tolerance breach: " << e.what() << "\n";
    return kExitToleranceBreach;
  } catch (const DecompositionError& e) {
    err << "tolerance breach: " << e.what() << "\n";
    return kExitToleranceBreach;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n";
    return kExitInputError;
  } catch (const std::exception& e) {
    err << "failure: " << e.what() << "\n";
    return kExitToleranceBreach;
  }
}

}  // namespace opmodel
