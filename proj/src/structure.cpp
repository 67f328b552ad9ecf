#include "opmodel/structure.hpp"

#include "opmodel/random.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <mutex>
#include <sstream>

namespace opmodel {

struct Structure::Lazy {
  std::mutex algebra_mutex;
  std::shared_ptr<const StarAlgebra> algebra;
  std::mutex words_mutex;
  std::optional<std::vector<Word>> words;
};

Structure::Structure() : discrete_(0), lazy_(std::make_shared<Lazy>()) {}

Structure Structure::create(std::vector<Matrix> generators, Index n, std::optional<Subspace> discrete,
                            std::map<std::string, Vector> vectors, Tolerances tol) {
  if (n < 0) throw DimensionError("negative dimension");
  for (std::size_t i = 0; i < generators.size(); ++i) {
    if (generators[i].rows() != n || generators[i].cols() != n) {
      std::ostringstream msg;
      msg << "generator " << i << " is " << generators[i].rows() << "x" << generators[i].cols()
          << ", expected " << n << "x" << n;
      throw DimensionError(msg.str());
    }
  }
  const Index g = static_cast<Index>(generators.size());
  std::vector<Summand> summands;
  if (n > 0) summands.push_back({n, std::move(generators)});
  return from_summands(std::move(summands), g, std::move(discrete), std::move(vectors), tol);
}

Structure Structure::from_summands(std::vector<Summand> summands, Index generator_count,
                                   std::optional<Subspace> discrete, std::map<std::string, Vector> vectors,
                                   Tolerances tol) {
  tol.validate();
  Structure s;
  s.g_ = generator_count;
  for (Summand& part : summands) {
    if (part.dim == 0) continue;
    s.n_ += part.dim;
    s.summands_.push_back(std::move(part));
  }
  s.discrete_ = discrete ? std::move(*discrete) : Subspace(s.n_);
  s.vectors_ = std::move(vectors);
  s.tol_ = tol;
  s.validate();
  s.compute_norms();
  s.validate_discrete();
  return s;
}

void Structure::validate() const {
  for (const Summand& part : summands_) {
    if (static_cast<Index>(part.generators.size()) != g_) throw DimensionError("summand generator count mismatch");
    for (const Matrix& gen : part.generators) {
      if (gen.rows() != part.dim || gen.cols() != part.dim) throw DimensionError("summand generator size mismatch");
      require_finite(gen, "generator");
    }
  }
  if (discrete_.ambient_dim() != n_) {
    throw DimensionError("discrete subspace lives in dimension " + std::to_string(discrete_.ambient_dim()) +
                         ", structure has dimension " + std::to_string(n_));
  }
  for (const auto& [name, v] : vectors_) {
    if (v.size() != n_) {
      throw DimensionError("vector '" + name + "' has length " + std::to_string(v.size()) + ", expected " +
                           std::to_string(n_));
    }
    if (!v.allFinite()) throw std::invalid_argument("vector '" + name + "' has a non-finite entry");
  }
}

void Structure::validate_discrete() const {
  if (discrete_.dim() == 0) return;
  for (int letter = 0; letter < letter_count(); ++letter) {
    const Matrix moved = orthogonalize_against(apply_letter(letter, discrete_.basis()), discrete_.basis());
    const double defect = moved.colwise().norm().maxCoeff();
    if (defect > tol_.eq_abs) {
      std::ostringstream msg;
      msg << "discrete subspace is not invariant under " << (letter % 2 ? "the adjoint of " : "") << "generator "
          << letter / 2 << " (defect " << defect << ")";
      throw std::invalid_argument(msg.str());
    }
  }
}

void Structure::compute_norms() {
  norms_.assign(static_cast<std::size_t>(g_), 0.0);
  for (const Summand& part : summands_) {
    for (Index i = 0; i < g_; ++i) {
      Eigen::JacobiSVD<Matrix> svd(part.generators[static_cast<std::size_t>(i)]);
      auto& slot = norms_[static_cast<std::size_t>(i)];
      slot = std::max(slot, svd.singularValues()(0));
    }
  }
}

const Vector& Structure::vector(const std::string& name) const {
  auto it = vectors_.find(name);
  if (it == vectors_.end()) throw std::invalid_argument("unknown vector '" + name + "'");
  return it->second;
}

Matrix Structure::generator(Index i) const {
  if (i < 0 || i >= g_) throw std::out_of_range("generator index out of range");
  Matrix out = Matrix::Zero(n_, n_);
  Index offset = 0;
  for (const Summand& part : summands_) {
    out.block(offset, offset, part.dim, part.dim) = part.generators[static_cast<std::size_t>(i)];
    offset += part.dim;
  }
  return out;
}

std::vector<Matrix> Structure::generators() const {
  std::vector<Matrix> out;
  for (Index i = 0; i < g_; ++i) out.push_back(generator(i));
  return out;
}

const StarAlgebra& Structure::algebra() const { return *algebra_ptr(); }

std::shared_ptr<const StarAlgebra> Structure::algebra_ptr() const {
  std::lock_guard lock(lazy_->algebra_mutex);
  if (!lazy_->algebra) {
    const std::vector<Matrix> gens = generators();
    lazy_->algebra = std::make_shared<const StarAlgebra>(generate_algebra(gens, n_, tol_));
  }
  return lazy_->algebra;
}

Matrix Structure::apply_letter(int letter, const Matrix& x) const {
  if (letter < 0 || letter >= letter_count()) throw std::out_of_range("letter out of range");
  if (x.rows() != n_) throw DimensionError("apply_letter: row count mismatch");
  const std::size_t i = static_cast<std::size_t>(letter / 2);
  const double scale = norms_[i] > 0.0 ? 1.0 / norms_[i] : 1.0;
  Matrix out(n_, x.cols());
  Index offset = 0;
  for (const Summand& part : summands_) {
    const Matrix& gen = part.generators[i];
    // Vectors from direct sums are often supported on a few summands.
    if (x.middleRows(offset, part.dim).isZero(0.0))
      out.middleRows(offset, part.dim).setZero();
    else if (letter % 2)
      out.middleRows(offset, part.dim).noalias() = scale * gen.adjoint() * x.middleRows(offset, part.dim);
    else
      out.middleRows(offset, part.dim).noalias() = scale * gen * x.middleRows(offset, part.dim);
    offset += part.dim;
  }
  return out;
}

Vector Structure::apply_letter(int letter, const Vector& x) const {
  return apply_letter(letter, Matrix(x)).col(0);
}

Matrix Structure::apply_word(const Word& w, const Matrix& x) const {
  Matrix out = x;
  for (auto it = w.rbegin(); it != w.rend(); ++it) out = apply_letter(*it, out);
  return out;
}

Vector Structure::apply_word(const Word& w, const Vector& x) const { return apply_word(w, Matrix(x)).col(0); }

Matrix Structure::word_matrix(const Word& w) const { return apply_word(w, Matrix(Matrix::Identity(n_, n_))); }

const std::vector<Word>& Structure::canonical_words() const {
  std::lock_guard lock(lazy_->words_mutex);
  if (lazy_->words) return *lazy_->words;

  // Each word is tracked by its diagonal blocks flattened into one vector.
  Index flat = 0;
  for (const Summand& part : summands_) flat += part.dim * part.dim;
  std::vector<Word> words{Word{}};
  std::vector<std::vector<Matrix>> blocks(1);
  for (const Summand& part : summands_) blocks[0].push_back(Matrix::Identity(part.dim, part.dim));
  auto flatten = [&](const std::vector<Matrix>& parts) {
    Vector out(flat);
    Index pos = 0;
    for (const Matrix& b : parts) {
      out.segment(pos, b.size()) = Eigen::Map<const Vector>(b.data(), b.size());
      pos += b.size();
    }
    return out;
  };
  Matrix q(flat, std::max<Index>(flat, 1));
  Index d = 0;
  if (flat > 0) {
    const Vector first = flatten(blocks[0]);
    q.col(0) = first / first.norm();
    d = 1;
  } else {
    words.clear();
    blocks.clear();
  }

  std::vector<std::size_t> frontier;
  if (d == 1) frontier.push_back(0);
  while (!frontier.empty() && d < flat) {
    std::vector<std::size_t> next;
    for (std::size_t parent : frontier) {
      const double parent_norm = flatten(blocks[parent]).norm();
      for (int letter = 0; letter < letter_count() && d < flat; ++letter) {
        const std::size_t gi = static_cast<std::size_t>(letter / 2);
        const double scale = norms_[gi] > 0.0 ? 1.0 / norms_[gi] : 1.0;
        std::vector<Matrix> cand;
        for (std::size_t s = 0; s < summands_.size(); ++s) {
          const Matrix& gen = summands_[s].generators[gi];
          cand.push_back(letter % 2 ? Matrix(scale * gen.adjoint() * blocks[parent][s])
                                    : Matrix(scale * gen * blocks[parent][s]));
        }
        Vector r = flatten(cand);
        auto basis = q.leftCols(d);
        r -= basis * (basis.adjoint() * r);
        r -= basis * (basis.adjoint() * r);
        const double norm = r.norm();
        if (norm > tol_.rank_rel * std::max(parent_norm, 1.0)) {
          q.col(d++) = r / norm;
          Word w{letter};
          w.insert(w.end(), words[parent].begin(), words[parent].end());
          words.push_back(std::move(w));
          blocks.push_back(std::move(cand));
          next.push_back(words.size() - 1);
        }
      }
    }
    frontier = std::move(next);
  }
  lazy_->words = std::move(words);
  return *lazy_->words;
}

Structure Structure::with_vectors(std::map<std::string, Vector> vectors) const {
  Structure out = *this;
  out.vectors_ = std::move(vectors);
  out.validate();
  return out;
}

Structure Structure::with_tolerances(const Tolerances& tol) const {
  tol.validate();
  Structure out = *this;
  out.tol_ = tol;
  out.lazy_ = std::make_shared<Lazy>();
  return out;
}

Structure Structure::with_canonical_words(std::vector<Word> words) const {
  Structure out = *this;
  out.lazy_ = std::make_shared<Lazy>();
  out.lazy_->words = std::move(words);
  return out;
}

// ---------------------------------------------------------------------------

Subspace cyclic_subspace(const Structure& s, std::span<const Vector> e) {
  const Index n = s.dim();
  for (const Vector& v : e)
    if (v.size() != n) throw DimensionError("cyclic_subspace: vector length does not match structure");
  const Subspace start = orthonormalize(e, n, s.tol());
  if (start.dim() == 0) return start;
  Matrix q(n, n);
  Index d = start.dim();
  q.leftCols(d) = start.basis();
  // Krylov closure under the letters: the span of all words applied to E.
  for (Index t = 0; t < d && d < n; ++t) {
    for (int letter = 0; letter < s.letter_count() && d < n; ++letter) {
      Vector x = s.apply_letter(letter, Vector(q.col(t)));
      auto basis = q.leftCols(d);
      x -= basis * (basis.adjoint() * x);
      x -= basis * (basis.adjoint() * x);
      const double norm = x.norm();
      if (norm > s.tol().rank_rel) q.col(d++) = x / norm;
    }
  }
  return Subspace::from_orthonormal(q.leftCols(d), 1e-6);
}

Subspace acl(const Structure& s, std::span<const Vector> e) {
  return subspace_sum(cyclic_subspace(s, e), s.discrete(), s.tol());
}

EssentialDiscrete essential_discrete_parts(const Structure& s, const Vector& v) {
  if (v.size() != s.dim()) throw DimensionError("essential_discrete_parts: vector length mismatch");
  Vector d = s.discrete().project(v);
  Vector e = v - d;
  return {std::move(e), std::move(d)};
}

Vector embed_first(const Vector& v, Index total) {
  Vector out = Vector::Zero(total);
  out.head(v.size()) = v;
  return out;
}

Vector embed_second(const Vector& v, Index total) {
  Vector out = Vector::Zero(total);
  out.tail(v.size()) = v;
  return out;
}

Structure direct_sum(const Structure& s1, const Structure& s2) {
  Index g = s1.generator_count();
  if (s1.dim() == 0) {
    g = s2.generator_count();
  } else if (s2.dim() > 0 && s2.generator_count() != g) {
    throw DimensionError("direct_sum: generator counts differ (" + std::to_string(g) + " vs " +
                         std::to_string(s2.generator_count()) + ")");
  }
  const Index n = s1.dim() + s2.dim();
  std::vector<Summand> parts = s1.summands();
  parts.insert(parts.end(), s2.summands().begin(), s2.summands().end());

  Matrix qd = Matrix::Zero(n, s1.discrete().dim() + s2.discrete().dim());
  qd.topLeftCorner(s1.dim(), s1.discrete().dim()) = s1.discrete().basis();
  qd.bottomRightCorner(s2.dim(), s2.discrete().dim()) = s2.discrete().basis();

  std::map<std::string, Vector> vectors;
  for (const auto& [name, v] : s1.vectors()) vectors.emplace("s1." + name, embed_first(v, n));
  for (const auto& [name, v] : s2.vectors()) vectors.emplace("s2." + name, embed_second(v, n));
  return Structure::from_summands(std::move(parts), g, Subspace::from_orthonormal(std::move(qd), 1e-6),
                                  std::move(vectors), s1.tol());
}

CyclicPiece cyclic_substructure(const Structure& s, const Vector& v, std::optional<std::uint64_t> seed) {
  const Vector one[] = {v};
  Matrix q = cyclic_subspace(s, one).basis();
  const Index k = q.cols();
  if (seed && k > 0) {
    Rng rng(*seed);
    q = q * haar_unitary(k, rng);
  }
  std::vector<Matrix> gens;
  for (Index i = 0; i < s.generator_count(); ++i) {
    gens.push_back(q.adjoint() * s.apply_letter(static_cast<int>(2 * i), q) * s.generator_norm(i));
  }
  // H_d ∩ H_v: directions of H_v that P_d leaves at full length.
  Subspace local_discrete(k);
  if (k > 0 && s.discrete().dim() > 0) {
    const Matrix overlap = q.adjoint() * s.discrete().basis();
    Eigen::JacobiSVD<Matrix> svd(overlap, Eigen::ComputeThinU);
    Index r = 0;
    while (r < svd.singularValues().size() && svd.singularValues()(r) > 1.0 - std::sqrt(s.tol().eq_abs)) ++r;
    local_discrete = orthonormalize(Matrix(svd.matrixU().leftCols(r)), s.tol());
  }
  std::vector<Summand> parts;
  if (k > 0) parts.push_back({k, std::move(gens)});
  const Vector local = q.adjoint() * v;
  Structure out = Structure::from_summands(std::move(parts), s.generator_count(), std::move(local_discrete),
                                           {{"v", local}}, s.tol());
  out.cyclic_vector_ = local;
  out.degenerate_ = (k == 0);
  return {std::move(out), std::move(q)};
}

}  // namespace opmodel
