#include "opmodel/independence.hpp"

#include "opmodel/random.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <tuple>

namespace opmodel {

namespace {

void check_lengths(const Structure& s, std::span<const Vector> vs, const char* what) {
  for (const Vector& v : vs)
    if (v.size() != s.dim()) throw DimensionError(std::string(what) + ": vector length does not match structure");
}

std::vector<Vector> concat(std::span<const Vector> a, std::span<const Vector> b) {
  std::vector<Vector> out(a.begin(), a.end());
  out.insert(out.end(), b.begin(), b.end());
  return out;
}

/// Rows of x placed at `offset` inside a zero matrix with `total` rows.
Matrix place_rows(const Matrix& x, Index total, Index offset) {
  Matrix out = Matrix::Zero(total, x.cols());
  out.middleRows(offset, x.rows()) = x;
  return out;
}

Vector place_rows(const Vector& x, Index total, Index offset) {
  Vector out = Vector::Zero(total);
  out.segment(offset, x.size()) = x;
  return out;
}

double moment_distance(const TypeDescriptor& a, const TypeDescriptor& b) {
  if (a.words != b.words || a.moments.size() != b.moments.size()) return std::numeric_limits<double>::infinity();
  double worst = 0.0;
  for (std::size_t w = 0; w < a.moments.size(); ++w) {
    if (a.moments[w].rows() != b.moments[w].rows()) return std::numeric_limits<double>::infinity();
    if (a.moments[w].size()) worst = std::max(worst, (a.moments[w] - b.moments[w]).cwiseAbs().maxCoeff());
  }
  return worst;
}

}  // namespace

std::vector<Matrix> word_images(const Structure& s, const std::vector<Word>& words, const Matrix& x) {
  std::map<Word, std::size_t> index;
  std::vector<Matrix> out;
  out.reserve(words.size());
  for (const Word& w : words) {
    if (w.empty()) {
      out.push_back(x);
    } else {
      const Word tail(w.begin() + 1, w.end());
      auto it = index.find(tail);
      out.push_back(it != index.end() ? s.apply_letter(w.front(), out[it->second]) : s.apply_word(w, x));
    }
    index.emplace(w, out.size() - 1);
  }
  return out;
}

TypeDescriptor type_of(const Structure& s, std::span<const Vector> tuple, const Subspace& h_e) {
  check_lengths(s, tuple, "type_of");
  if (h_e.ambient_dim() != s.dim()) throw DimensionError("type_of: base subspace dimension mismatch");
  TypeDescriptor out;
  Matrix residuals(s.dim(), static_cast<Index>(tuple.size()));
  for (std::size_t j = 0; j < tuple.size(); ++j) {
    out.base_projections.push_back(h_e.project(tuple[j]));
    residuals.col(static_cast<Index>(j)) = tuple[j] - out.base_projections.back();
  }
  out.words = s.canonical_words();
  for (const Matrix& image : word_images(s, out.words, residuals)) {
    out.moments.push_back((residuals.adjoint() * image).transpose());
  }
  return out;
}

TypeDescriptor type_of(const Structure& s, std::span<const Vector> tuple, std::span<const Vector> e) {
  check_lengths(s, e, "type_of");
  return type_of(s, tuple, cyclic_subspace(s, e));
}

double descriptor_distance(const TypeDescriptor& a, const TypeDescriptor& b) {
  if (a.base_projections.size() != b.base_projections.size()) return std::numeric_limits<double>::infinity();
  double worst = moment_distance(a, b);
  for (std::size_t j = 0; j < a.base_projections.size(); ++j) {
    if (a.base_projections[j].size() != b.base_projections[j].size()) return std::numeric_limits<double>::infinity();
    worst = std::max(worst, (a.base_projections[j] - b.base_projections[j]).norm());
  }
  return worst;
}

bool same_type(const TypeDescriptor& a, const TypeDescriptor& b, const Tolerances& tol) {
  return descriptor_distance(a, b) <= tol.eq_abs;
}

IndependenceReport is_independent(const Structure& s, std::span<const Vector> tuple, std::span<const Vector> e,
                                  std::span<const Vector> f) {
  check_lengths(s, tuple, "is_independent");
  check_lengths(s, e, "is_independent");
  check_lengths(s, f, "is_independent");
  const Subspace acl_e = acl(s, e);
  const std::vector<Vector> joined = concat(e, f);
  const Subspace acl_ef = acl(s, joined);
  IndependenceReport out;
  for (const Vector& v : tuple) {
    out.base_projections.push_back(acl_e.project(v));
    out.extended_projections.push_back(acl_ef.project(v));
    out.defect = std::max(out.defect, (out.extended_projections.back() - out.base_projections.back()).norm());
  }
  out.verdict = out.defect <= s.tol().eq_abs;
  return out;
}

Extension nonforking_extension(const Structure& s, std::span<const Vector> tuple, const Subspace& acl_e,
                               const Subspace& acl_f, const ExtensionOptions& options) {
  check_lengths(s, tuple, "nonforking_extension");
  if (acl_e.ambient_dim() != s.dim() || acl_f.ambient_dim() != s.dim()) {
    throw DimensionError("nonforking_extension: base subspace dimension mismatch");
  }
  const Index n = s.dim();
  std::vector<Vector> base, residual;
  for (const Vector& v : tuple) {
    base.push_back(acl_e.project(v));
    residual.push_back(v - base.back());
  }
  // Residuals over acl(E) are orthogonal to H_d, so they are essential.
  Matrix q = cyclic_subspace(s, residual).basis();
  const Index k = q.cols();
  if (options.seed && k > 0) {
    Rng rng(*options.seed);
    q = q * haar_unitary(k, rng);
  }
  std::vector<Matrix> fresh_gens;
  for (Index i = 0; i < s.generator_count(); ++i) {
    fresh_gens.push_back(q.adjoint() * s.apply_letter(static_cast<int>(2 * i), q) * s.generator_norm(i));
  }

  const Index total = n + k;
  const Index base_offset = options.fresh_first ? k : 0;
  const Index fresh_offset = options.fresh_first ? 0 : n;
  std::vector<Summand> parts;
  if (options.fresh_first && k > 0) parts.push_back({k, fresh_gens});
  parts.insert(parts.end(), s.summands().begin(), s.summands().end());
  if (!options.fresh_first && k > 0) parts.push_back({k, fresh_gens});
  std::map<std::string, Vector> vectors;
  for (const auto& [name, v] : s.vectors()) vectors.emplace(name, place_rows(v, total, base_offset));
  Subspace discrete = Subspace::from_orthonormal_unchecked(place_rows(s.discrete().basis(), total, base_offset));

  Extension out;
  out.structure = Structure::from_summands(std::move(parts), s.generator_count(), std::move(discrete),
                                           std::move(vectors), s.tol())
                      .with_canonical_words(s.canonical_words());
  out.base_offset = base_offset;
  out.fresh_offset = fresh_offset;
  out.fresh_basis = q;
  for (std::size_t j = 0; j < tuple.size(); ++j) {
    Vector vp = place_rows(base[j], total, base_offset);
    if (k > 0) vp.segment(fresh_offset, k) = q.adjoint() * residual[j];
    out.tuple.push_back(std::move(vp));
  }

  // Condition 1: the projection onto acl(F) in the extension equals P_{acl(E)} v.
  const Subspace acl_f_hat = Subspace::from_orthonormal_unchecked(place_rows(acl_f.basis(), total, base_offset));
  std::vector<Vector> new_residual;
  double scale = 1.0;
  for (std::size_t j = 0; j < tuple.size(); ++j) {
    const Vector projected = acl_f_hat.project(out.tuple[j]);
    out.defect = std::max(out.defect, (projected - place_rows(base[j], total, base_offset)).norm());
    new_residual.push_back(out.tuple[j] - projected);
    scale = std::max(scale, tuple[j].squaredNorm());
  }
  // Condition 2: the residual over acl(F) has the type of the residual over acl(E).
  const TypeDescriptor before = type_of(s, residual, Subspace(n));
  const TypeDescriptor after = type_of(out.structure, new_residual, Subspace(total));
  out.defect = std::max(out.defect, moment_distance(before, after) / scale);
  if (out.defect > s.tol().eq_abs) {
    throw ToleranceBreach("non-forking extension failed its certification (defect " + std::to_string(out.defect) +
                          ")");
  }
  return out;
}

Extension nonforking_extension(const Structure& s, std::span<const Vector> tuple, std::span<const Vector> e,
                               std::span<const Vector> f, const ExtensionOptions& options) {
  check_lengths(s, e, "nonforking_extension");
  check_lengths(s, f, "nonforking_extension");
  const std::vector<Vector> joined = concat(e, f);
  return nonforking_extension(s, tuple, acl(s, e), acl(s, joined), options);
}

Extension nonforking_extension(const Structure& s, const Vector& v, std::span<const Vector> e,
                               std::span<const Vector> f, const ExtensionOptions& options) {
  const Vector one[] = {v};
  return nonforking_extension(s, one, e, f, options);
}

Vector Extension::embed(const Vector& x) const { return place_rows(x, structure.dim(), base_offset); }

std::vector<Vector> canonical_base(const Structure& s, std::span<const Vector> tuple, std::span<const Vector> e) {
  check_lengths(s, tuple, "canonical_base");
  check_lengths(s, e, "canonical_base");
  const Subspace h_e = cyclic_subspace(s, e);
  std::vector<Vector> out;
  for (const Vector& v : tuple) out.push_back(h_e.project(v));
  return out;
}

MorleyReport morley_average_check(const Structure& s, const Vector& v, std::span<const Vector> e, int k,
                                  std::uint64_t seed) {
  if (k < 1) throw std::invalid_argument("morley_average_check: k must be at least 1");
  check_lengths(s, e, "morley_average_check");
  if (v.size() != s.dim()) throw DimensionError("morley_average_check: vector length mismatch");

  Structure current = s.with_vectors({});
  Subspace acl_e = acl(s, e);
  Subspace acl_f = acl_e;  // acl(E ∪ earlier copies)
  Vector v_cur = v;
  Vector base = acl_e.project(v);
  Vector cb = canonical_base(s, std::span<const Vector>(&v, 1), e).front();
  std::vector<Vector> copies;

  for (int i = 0; i < k; ++i) {
    ExtensionOptions options;
    options.seed = derive_seed(seed, static_cast<std::uint64_t>(i));
    const Vector one[] = {v_cur};
    Extension ext = nonforking_extension(current, one, acl_e, acl_f, options);
    const Index total = ext.structure.dim();
    const Vector u = ext.tuple[0] - ext.embed(acl_e.project(v_cur));
    const Vector u_one[] = {u};
    const Subspace h_u = cyclic_subspace(ext.structure, u_one);

    const Matrix old_f = place_rows(acl_f.basis(), total, 0);
    // The copy sits in a fresh summand, so acl grows by an orthogonal block.
    if (h_u.dim() > 0 && old_f.cols() > 0 && (old_f.adjoint() * h_u.basis()).cwiseAbs().maxCoeff() > s.tol().eq_abs) {
      throw ToleranceBreach("morley_average_check: fresh copy is not orthogonal to the base");
    }
    Matrix joined(total, old_f.cols() + h_u.dim());
    joined << old_f, h_u.basis();
    acl_f = Subspace::from_orthonormal_unchecked(std::move(joined));
    acl_e = Subspace::from_orthonormal_unchecked(place_rows(acl_e.basis(), total, 0));
    for (Vector& c : copies) c = place_rows(c, total, 0);
    v_cur = ext.embed(v_cur);
    base = ext.embed(base);
    cb = ext.embed(cb);
    copies.push_back(ext.tuple[0]);
    current = std::move(ext.structure);
  }

  MorleyReport out;
  out.average = Vector::Zero(current.dim());
  for (const Vector& c : copies) out.average += c;
  out.average /= static_cast<double>(k);
  out.residual_norm = (v - acl(s, e).project(v)).norm();
  out.distance_to_base = (out.average - base).norm();
  out.distance_to_cb = (out.average - cb).norm();
  out.expected = out.residual_norm / std::sqrt(static_cast<double>(k));
  out.final_dim = current.dim();
  return out;
}

FiniteBaseResult finite_base(const Structure& s, std::span<const Vector> tuple, std::span<const Vector> f,
                             double eps) {
  if (!(eps > 0.0)) throw std::invalid_argument("finite_base: eps must be positive");
  check_lengths(s, tuple, "finite_base");
  check_lengths(s, f, "finite_base");
  const Subspace acl_f = acl(s, f);
  std::vector<Vector> target;
  for (const Vector& v : tuple) target.push_back(acl_f.project(v));

  auto errors_for = [&](const Subspace& sub) {
    std::vector<double> errs;
    for (const Vector& a : target) errs.push_back(sub.distance(a));
    return errs;
  };
  auto score = [](const std::vector<double>& errs) {
    double worst = 0.0, sum = 0.0;
    for (double x : errs) {
      worst = std::max(worst, x);
      sum += x * x;
    }
    return std::pair{worst, sum};
  };

  FiniteBaseResult out;
  std::vector<Vector> chosen;
  Subspace current = acl(s, chosen);
  std::vector<double> errs = errors_for(current);
  while (score(errs).first >= eps) {
    std::optional<std::tuple<double, double, std::size_t>> best;
    Subspace best_space;
    std::vector<double> best_errs;
    for (std::size_t i = 0; i < f.size(); ++i) {
      if (std::find(out.indices.begin(), out.indices.end(), i) != out.indices.end()) continue;
      std::vector<Vector> trial = chosen;
      trial.push_back(f[i]);
      Subspace space = acl(s, trial);
      if (space.dim() == current.dim()) continue;
      std::vector<double> trial_errs = errors_for(space);
      const auto [worst, sum] = score(trial_errs);
      if (sum >= score(errs).second) continue;
      const auto key = std::tuple{worst, sum, i};
      if (!best || key < *best) {
        best = key;
        best_space = std::move(space);
        best_errs = std::move(trial_errs);
      }
    }
    if (!best) break;  // only reachable through rounding: every remaining f is already captured
    const std::size_t pick = std::get<2>(*best);
    out.indices.push_back(pick);
    chosen.push_back(f[pick]);
    current = std::move(best_space);
    errs = std::move(best_errs);
  }
  for (std::size_t j = 0; j < tuple.size(); ++j) {
    out.tuple.push_back(tuple[j] - target[j] + current.project(target[j]));
    out.errors.push_back((tuple[j] - out.tuple.back()).norm());
  }
  return out;
}

}  // namespace opmodel
