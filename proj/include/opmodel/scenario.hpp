#pragma once

#include "opmodel/functionals.hpp"
#include "opmodel/structure.hpp"

#include <json.hpp>

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace opmodel {

using Json = nlohmann::json;

/// Malformed or inconsistent scenario input. The message names the field.
class ScenarioError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A structure plus the named sets and functionals of a scenario file.
///
/// File layout:
///   dimension          n
///   generators         list of n x n matrices (row lists)
///   discrete_subspace  optional list of spanning vectors
///   vectors            name -> vector
///   sets               name -> list of vector names
///   functionals        name -> {"rho": matrix} | {"vector": name} | {"values": list}
///   tolerances         optional {"rank_rel", "eq_abs", "psd_abs"}
/// Scalars are numbers or [re, im] pairs. "values" lists phi(W) over the
/// structure's canonical words.
struct Scenario {
  Structure structure;
  std::map<std::string, std::vector<std::string>> sets;
  std::map<std::string, Json> functionals;

  /// "" is the empty set; otherwise a comma-separated list of set or vector names.
  std::vector<Vector> resolve_set(const std::string& spec) const;
  /// A vector name (its vector state) or a functional name.
  Functional resolve_functional(const std::string& name) const;
  const Vector& resolve_vector(const std::string& name) const;
};

Scenario parse_scenario(const Json& doc, std::optional<Tolerances> override_tol = {});
/// Reads and parses a file; JSON syntax errors report line and column.
Scenario load_scenario(const std::string& path, std::optional<Tolerances> override_tol = {});

/// Serializes a structure with its vectors at full precision, so that
/// parse_scenario reproduces it exactly.
Json scenario_json(const Structure& s, const std::map<std::string, std::vector<std::string>>& sets = {},
                   const std::map<std::string, Json>& functionals = {});

/// Number rounded to 12 significant digits, with -0 mapped to 0.
double round12(double x);
/// round12 after flushing magnitudes below 1e-13 to zero; used for reports.
double round_report(double x);
/// [re, im] pairs, rounded by round_report unless `exact`.
Json to_json(Complex z, bool exact = false);
Json to_json(const Vector& v, bool exact = false);
Json to_json(const Matrix& m, bool exact = false);

Complex complex_from_json(const Json& j, const std::string& where);
Vector vector_from_json(const Json& j, Index n, const std::string& where);
Matrix matrix_from_json(const Json& j, Index n, const std::string& where);

}  // namespace opmodel
