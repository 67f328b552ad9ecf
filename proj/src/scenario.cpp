#include "opmodel/scenario.hpp"

#include <Eigen/QR>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace opmodel {

namespace {

const Json& field(const Json& obj, const char* key, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end()) throw ScenarioError(where + ": missing field '" + key + "'");
  return *it;
}

std::vector<std::string> split_names(const std::string& spec) {
  std::vector<std::string> out;
  std::stringstream in(spec);
  std::string item;
  while (std::getline(in, item, ',')) {
    const auto first = item.find_first_not_of(" \t");
    const auto last = item.find_last_not_of(" \t");
    if (first == std::string::npos) continue;
    out.push_back(item.substr(first, last - first + 1));
  }
  return out;
}

Functional functional_from_word_values(const Structure& s, const Json& values, const std::string& where) {
  const std::vector<Word>& words = s.canonical_words();
  if (!values.is_array() || values.size() != words.size()) {
    throw ScenarioError(where + ": expected " + std::to_string(words.size()) + " values, one per canonical word");
  }
  const StarAlgebra& alg = s.algebra();
  const Index d = alg.size();
  Matrix system(d, d);
  Vector rhs(d);
  for (Index w = 0; w < d; ++w) {
    rhs(w) = complex_from_json(values[static_cast<std::size_t>(w)], where + "[" + std::to_string(w) + "]");
    const Matrix m = s.word_matrix(words[static_cast<std::size_t>(w)]);
    for (Index i = 0; i < d; ++i) system(w, i) = (alg.basis()[static_cast<std::size_t>(i)].conjugate().cwiseProduct(m)).sum();
  }
  const Vector x = system.colPivHouseholderQr().solve(rhs);
  Matrix rho = Matrix::Zero(s.dim(), s.dim());
  for (Index i = 0; i < d; ++i) rho += std::conj(x(i)) * alg.basis()[static_cast<std::size_t>(i)];
  return Functional(s.algebra_ptr(), rho);
}

}  // namespace

double round12(double x) {
  if (!std::isfinite(x)) return x;
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  const double r = std::strtod(buf, nullptr);
  return r == 0.0 ? 0.0 : r;
}

double round_report(double x) { return std::abs(x) < 1e-13 ? 0.0 : round12(x); }

Json to_json(Complex z, bool exact) {
  if (exact) return Json::array({z.real(), z.imag()});
  return Json::array({round_report(z.real()), round_report(z.imag())});
}

Json to_json(const Vector& v, bool exact) {
  Json out = Json::array();
  for (Index i = 0; i < v.size(); ++i) out.push_back(to_json(v(i), exact));
  return out;
}

Json to_json(const Matrix& m, bool exact) {
  Json out = Json::array();
  for (Index r = 0; r < m.rows(); ++r) {
    Json row = Json::array();
    for (Index c = 0; c < m.cols(); ++c) row.push_back(to_json(m(r, c), exact));
    out.push_back(std::move(row));
  }
  return out;
}

Complex complex_from_json(const Json& j, const std::string& where) {
  if (j.is_number()) return Complex(j.get<double>(), 0.0);
  if (j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number()) {
    return Complex(j[0].get<double>(), j[1].get<double>());
  }
  throw ScenarioError(where + ": expected a number or an [re, im] pair");
}

Vector vector_from_json(const Json& j, Index n, const std::string& where) {
  if (!j.is_array()) throw ScenarioError(where + ": expected a list of " + std::to_string(n) + " entries");
  if (static_cast<Index>(j.size()) != n) {
    throw ScenarioError(where + ": has " + std::to_string(j.size()) + " entries, expected " + std::to_string(n));
  }
  Vector v(n);
  for (Index i = 0; i < n; ++i) v(i) = complex_from_json(j[static_cast<std::size_t>(i)], where + "[" + std::to_string(i) + "]");
  return v;
}

Matrix matrix_from_json(const Json& j, Index n, const std::string& where) {
  if (!j.is_array() || static_cast<Index>(j.size()) != n) {
    throw ScenarioError(where + ": expected " + std::to_string(n) + " rows");
  }
  Matrix m(n, n);
  for (Index r = 0; r < n; ++r) {
    m.row(r) = vector_from_json(j[static_cast<std::size_t>(r)], n, where + "[" + std::to_string(r) + "]").transpose();
  }
  return m;
}

Scenario parse_scenario(const Json& doc, std::optional<Tolerances> override_tol) {
  if (!doc.is_object()) throw ScenarioError("scenario: top level must be an object");
  const Json& dim = field(doc, "dimension", "scenario");
  if (!dim.is_number_integer() || dim.get<long long>() < 0) throw ScenarioError("dimension: expected a nonnegative integer");
  const Index n = dim.get<Index>();

  Tolerances tol;
  if (auto it = doc.find("tolerances"); it != doc.end()) {
    if (!it->is_object()) throw ScenarioError("tolerances: expected an object");
    for (auto& [key, value] : it->items()) {
      if (!value.is_number()) throw ScenarioError("tolerances." + key + ": expected a number");
      if (key == "rank_rel") tol.rank_rel = value.get<double>();
      else if (key == "eq_abs") tol.eq_abs = value.get<double>();
      else if (key == "psd_abs") tol.psd_abs = value.get<double>();
      else throw ScenarioError("tolerances." + key + ": unknown tolerance");
    }
  }
  if (override_tol) tol = *override_tol;
  try {
    tol.validate();
  } catch (const std::invalid_argument& e) {
    throw ScenarioError(std::string("tolerances: ") + e.what());
  }

  std::vector<Matrix> gens;
  const Json& g = field(doc, "generators", "scenario");
  if (!g.is_array()) throw ScenarioError("generators: expected a list of matrices");
  for (std::size_t i = 0; i < g.size(); ++i) gens.push_back(matrix_from_json(g[i], n, "generators[" + std::to_string(i) + "]"));

  std::optional<Subspace> discrete;
  if (auto it = doc.find("discrete_subspace"); it != doc.end() && !it->is_null()) {
    if (!it->is_array()) throw ScenarioError("discrete_subspace: expected a list of vectors");
    std::vector<Vector> span;
    for (std::size_t i = 0; i < it->size(); ++i) {
      span.push_back(vector_from_json((*it)[i], n, "discrete_subspace[" + std::to_string(i) + "]"));
    }
    discrete = orthonormalize(span, n, tol);
  }

  std::map<std::string, Vector> vectors;
  if (auto it = doc.find("vectors"); it != doc.end()) {
    if (!it->is_object()) throw ScenarioError("vectors: expected an object of named vectors");
    for (auto& [name, value] : it->items()) {
      if (name.empty() || name.find(',') != std::string::npos) throw ScenarioError("vectors: invalid name '" + name + "'");
      vectors.emplace(name, vector_from_json(value, n, "vectors." + name));
    }
  }

  Scenario out;
  try {
    out.structure = Structure::create(std::move(gens), n, discrete, std::move(vectors), tol);
  } catch (const DimensionError& e) {
    throw ScenarioError(std::string("structure: ") + e.what());
  }

  if (auto it = doc.find("sets"); it != doc.end()) {
    if (!it->is_object()) throw ScenarioError("sets: expected an object of name lists");
    for (auto& [name, value] : it->items()) {
      if (!value.is_array()) throw ScenarioError("sets." + name + ": expected a list of vector names");
      std::vector<std::string> members;
      for (std::size_t i = 0; i < value.size(); ++i) {
        const std::string where = "sets." + name + "[" + std::to_string(i) + "]";
        if (!value[i].is_string()) throw ScenarioError(where + ": expected a vector name");
        const std::string member = value[i].get<std::string>();
        if (!out.structure.vectors().count(member)) throw ScenarioError(where + ": unknown vector '" + member + "'");
        members.push_back(member);
      }
      out.sets.emplace(name, std::move(members));
    }
  }
  if (auto it = doc.find("functionals"); it != doc.end()) {
    if (!it->is_object()) throw ScenarioError("functionals: expected an object");
    for (auto& [name, value] : it->items()) {
      out.functionals.emplace(name, value);
      out.resolve_functional(name);  // validate eagerly
    }
  }
  return out;
}

Scenario load_scenario(const std::string& path, std::optional<Tolerances> override_tol) {
  std::ifstream in(path);
  if (!in) throw ScenarioError(path + ": cannot open file");
  std::stringstream buffer;
  buffer << in.rdbuf();
  const std::string text = buffer.str();
  Json doc;
  try {
    doc = Json::parse(text);
  } catch (const Json::parse_error& e) {
    // Translate the byte offset into line and column.
    std::size_t line = 1, column = 1;
    for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
      if (text[i] == '\n') {
        ++line;
        column = 1;
      } else {
        ++column;
      }
    }
    throw ScenarioError(path + ":" + std::to_string(line) + ":" + std::to_string(column) + ": invalid JSON");
  }
  return parse_scenario(doc, override_tol);
}

const Vector& Scenario::resolve_vector(const std::string& name) const {
  auto it = structure.vectors().find(name);
  if (it == structure.vectors().end()) throw ScenarioError("unknown vector '" + name + "'");
  return it->second;
}

std::vector<Vector> Scenario::resolve_set(const std::string& spec) const {
  std::vector<Vector> out;
  for (const std::string& name : split_names(spec)) {
    if (auto it = sets.find(name); it != sets.end()) {
      for (const std::string& member : it->second) out.push_back(resolve_vector(member));
    } else if (structure.vectors().count(name)) {
      out.push_back(resolve_vector(name));
    } else {
      throw ScenarioError("unknown set or vector '" + name + "'");
    }
  }
  return out;
}

Functional Scenario::resolve_functional(const std::string& name) const {
  auto it = functionals.find(name);
  if (it == functionals.end()) {
    if (structure.vectors().count(name)) return vector_state(structure, resolve_vector(name));
    throw ScenarioError("unknown functional or vector '" + name + "'");
  }
  const std::string where = "functionals." + name;
  const Json& spec = it->second;
  if (!spec.is_object() || spec.size() != 1) {
    throw ScenarioError(where + ": expected exactly one of 'rho', 'vector', 'values'");
  }
  if (auto r = spec.find("rho"); r != spec.end()) {
    return Functional(structure.algebra_ptr(), matrix_from_json(*r, structure.dim(), where + ".rho"));
  }
  if (auto v = spec.find("vector"); v != spec.end()) {
    if (!v->is_string()) throw ScenarioError(where + ".vector: expected a vector name");
    return vector_state(structure, resolve_vector(v->get<std::string>()));
  }
  if (auto v = spec.find("values"); v != spec.end()) return functional_from_word_values(structure, *v, where + ".values");
  throw ScenarioError(where + ": expected exactly one of 'rho', 'vector', 'values'");
}

Json scenario_json(const Structure& s, const std::map<std::string, std::vector<std::string>>& sets,
                   const std::map<std::string, Json>& functionals) {
  Json out;
  out["dimension"] = s.dim();
  out["generators"] = Json::array();
  for (const Matrix& g : s.generators()) out["generators"].push_back(to_json(g, true));
  Json discrete = Json::array();
  for (Index c = 0; c < s.discrete().dim(); ++c) discrete.push_back(to_json(Vector(s.discrete().basis().col(c)), true));
  out["discrete_subspace"] = discrete;
  out["vectors"] = Json::object();
  for (const auto& [name, v] : s.vectors()) out["vectors"][name] = to_json(v, true);
  out["sets"] = Json::object();
  for (const auto& [name, members] : sets) out["sets"][name] = members;
  out["functionals"] = Json::object();
  for (const auto& [name, spec] : functionals) out["functionals"][name] = spec;
  out["tolerances"] = {{"rank_rel", s.tol().rank_rel}, {"eq_abs", s.tol().eq_abs}, {"psd_abs", s.tol().psd_abs}};
  return out;
}

}  // namespace opmodel
