#include "opmodel/star_algebra.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <mutex>
#include <optional>
#include <random>

namespace opmodel {

namespace {

constexpr int kMaxSplitDepth = 50;
constexpr int kSeedRetries = 5;
constexpr int kSplitAttempts = 5;
// Eigenvalue gaps of the splitting element below this fraction of its
// spread are treated as degenerate; merged clusters are split again.
constexpr double kClusterGap = 1e-6;

Vector vec(const Matrix& m) { return Eigen::Map<const Vector>(m.data(), m.size()); }

Matrix unvec(const Vector& v, Index rows, Index cols) { return Eigen::Map<const Matrix>(v.data(), rows, cols); }

Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Index i = 0; i < a.rows(); ++i)
    for (Index j = 0; j < a.cols(); ++j) out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

// Gram operator of X -> X*P_b - Q_b*X summed over b, acting on vec(X) for
// X of size q_dim x p_dim.
Matrix intertwining_gram(std::span<const Matrix> p, std::span<const Matrix> q) {
  const Index kp = p.empty() ? 0 : p.front().rows();
  const Index kq = q.empty() ? 0 : q.front().rows();
  Matrix left = Matrix::Zero(kp, kp);   // sum conj(P) P^T
  Matrix right = Matrix::Zero(kq, kq);  // sum Q^H Q
  Matrix cross = Matrix::Zero(kp * kq, kp * kq);
  for (std::size_t b = 0; b < p.size(); ++b) {
    left += p[b].conjugate() * p[b].transpose();
    right += q[b].adjoint() * q[b];
    cross += kron(p[b].conjugate(), q[b]);
  }
  Matrix gram = kron(left, Matrix::Identity(kq, kq)) + kron(Matrix::Identity(kp, kp), right);
  gram -= cross + Matrix(cross.adjoint());
  return gram;
}

std::vector<Matrix> compressed_basis(const StarAlgebra& a, const Matrix& q) {
  std::vector<Matrix> out;
  out.reserve(a.basis().size());
  for (const Matrix& b : a.basis()) out.push_back(q.adjoint() * b * q);
  return out;
}

Complex complex_gaussian(std::mt19937_64& rng) {
  std::normal_distribution<double> n01(0.0, 1.0);
  const double re = n01(rng);
  const double im = n01(rng);
  return {re, im};
}

void split_invariant_subspace(const StarAlgebra& a, const Matrix& q, std::mt19937_64& rng, int depth,
                              std::vector<Matrix>& leaves) {
  if (q.cols() == 0) return;
  if (depth > kMaxSplitDepth) throw DecompositionError("spectral splitting exceeded recursion cap");
  const std::vector<Matrix> pieces = compressed_basis(a, q);
  const StarAlgebra local = StarAlgebra::from_span(pieces, q.cols(), a.tol());
  const StarAlgebra comm = commutant(local);
  if (comm.size() <= 1) {
    leaves.push_back(q);
    return;
  }
  for (int attempt = 0; attempt < kSplitAttempts; ++attempt) {
    Matrix h = Matrix::Zero(q.cols(), q.cols());
    for (const Matrix& z : comm.basis()) {
      const Complex c = complex_gaussian(rng);
      h += 0.5 * (c * z + std::conj(c) * z.adjoint());
    }
    const HermitianEig e = hermitian_eig_ascending(h);
    const double spread = e.values(e.values.size() - 1) - e.values(0);
    if (!(spread > 1e-10 * std::max(1.0, h.norm()))) continue;
    std::vector<std::pair<Index, Index>> clusters;  // [begin, end)
    Index start = 0;
    for (Index i = 1; i <= e.values.size(); ++i) {
      if (i == e.values.size() || e.values(i) - e.values(i - 1) > kClusterGap * spread) {
        clusters.emplace_back(start, i);
        start = i;
      }
    }
    if (clusters.size() < 2) continue;
    for (const auto& [begin, end] : clusters) {
      split_invariant_subspace(a, Matrix(q * e.vectors.middleCols(begin, end - begin)), rng, depth + 1, leaves);
    }
    return;
  }
  throw DecompositionError("could not find a splitting element in the commutant");
}

BlockDecomposition decompose_once(const StarAlgebra& a, std::uint64_t seed) {
  const Index n = a.ambient_dim();
  std::mt19937_64 rng(seed);
  std::vector<Matrix> leaves;
  split_invariant_subspace(a, Matrix::Identity(n, n), rng, 0, leaves);

  std::vector<std::vector<Matrix>> classes;
  for (const Matrix& leaf : leaves) {
    bool placed = false;
    for (auto& cls : classes) {
      if (cls.front().cols() != leaf.cols()) continue;
      const Matrix u = irreducible_intertwiner(a, cls.front(), leaf);
      if (u.size() == 0) continue;
      cls.push_back(leaf * u);
      placed = true;
      break;
    }
    if (!placed) classes.push_back({leaf});
  }
  std::stable_sort(classes.begin(), classes.end(), [](const auto& x, const auto& y) {
    const auto kx = x.front().cols(), ky = y.front().cols();
    if (kx != ky) return kx < ky;
    return x.size() < y.size();
  });

  BlockDecomposition dec;
  dec.change_of_basis = Matrix::Zero(n, n);
  Index offset = 0;
  for (const auto& cls : classes) {
    const Index k = cls.front().cols();
    const Index m = static_cast<Index>(cls.size());
    if (offset + k * m > n) throw DecompositionError("block sizes exceed the ambient dimension");
    for (Index j = 0; j < m; ++j)
      for (Index row = 0; row < k; ++row) dec.change_of_basis.col(offset + row * m + j) = cls[static_cast<std::size_t>(j)].col(row);
    dec.blocks.push_back({k, m, offset});
    offset += k * m;
  }
  if (offset != n) throw DecompositionError("block sizes do not fill the ambient dimension");
  const double unitarity = (dec.change_of_basis.adjoint() * dec.change_of_basis - Matrix::Identity(n, n)).cwiseAbs().maxCoeff();
  if (unitarity > a.tol().eq_abs) throw DecompositionError("change of basis is not unitary");
  for (const Matrix& b : a.basis()) {
    if (dec.block_defect(b) > a.tol().eq_abs * std::max(1.0, b.norm())) {
      throw DecompositionError("conjugated algebra is not block diagonal");
    }
  }
  return dec;
}

}  // namespace

// ---------------------------------------------------------------------------

std::vector<std::pair<Index, Index>> BlockDecomposition::signature() const {
  std::vector<std::pair<Index, Index>> sig;
  for (const Block& b : blocks) sig.emplace_back(b.size, b.multiplicity);
  std::sort(sig.begin(), sig.end());
  return sig;
}

std::vector<Matrix> BlockDecomposition::components(const Matrix& x) const {
  const Matrix y = change_of_basis.adjoint() * x * change_of_basis;
  std::vector<Matrix> out;
  for (const Block& blk : blocks) {
    Matrix c = Matrix::Zero(blk.size, blk.size);
    for (Index a = 0; a < blk.size; ++a)
      for (Index b = 0; b < blk.size; ++b)
        for (Index j = 0; j < blk.multiplicity; ++j)
          c(a, b) += y(blk.offset + a * blk.multiplicity + j, blk.offset + b * blk.multiplicity + j);
    out.push_back(c / static_cast<double>(blk.multiplicity));
  }
  return out;
}

double BlockDecomposition::block_defect(const Matrix& x) const {
  const Matrix y = change_of_basis.adjoint() * x * change_of_basis;
  Matrix rebuilt = Matrix::Zero(y.rows(), y.cols());
  const std::vector<Matrix> parts = components(x);
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    const Block& blk = blocks[i];
    for (Index a = 0; a < blk.size; ++a)
      for (Index b = 0; b < blk.size; ++b)
        for (Index j = 0; j < blk.multiplicity; ++j)
          rebuilt(blk.offset + a * blk.multiplicity + j, blk.offset + b * blk.multiplicity + j) = parts[i](a, b);
  }
  return y.size() ? (y - rebuilt).cwiseAbs().maxCoeff() : 0.0;
}

Matrix BlockDecomposition::representative(std::size_t block) const {
  const Block& blk = blocks.at(block);
  Matrix out(change_of_basis.rows(), blk.size);
  for (Index a = 0; a < blk.size; ++a) out.col(a) = change_of_basis.col(blk.offset + a * blk.multiplicity);
  return out;
}

// ---------------------------------------------------------------------------

struct StarAlgebra::Cache {
  std::mutex commutant_mutex;
  std::shared_ptr<const StarAlgebra> commutant;
  std::mutex decomposition_mutex;
  std::optional<BlockDecomposition> decomposition;
};

StarAlgebra::StarAlgebra() : cache_(std::make_shared<Cache>()) {}

void StarAlgebra::set_basis_from_vectorized(Matrix v) {
  vec_ = std::move(v);
  basis_.clear();
  const double root = std::sqrt(static_cast<double>(n_));
  for (Index i = 0; i < vec_.cols(); ++i) basis_.push_back(unvec(vec_.col(i), n_, n_) * root);
}

StarAlgebra StarAlgebra::from_span(std::span<const Matrix> elements, Index n, const Tolerances& tol,
                                   std::vector<Matrix> generators) {
  StarAlgebra out;
  out.n_ = n;
  out.tol_ = tol;
  Matrix stacked(n * n, static_cast<Index>(elements.size()));
  for (Index i = 0; i < stacked.cols(); ++i) {
    const Matrix& e = elements[static_cast<std::size_t>(i)];
    if (e.rows() != n || e.cols() != n) throw DimensionError("from_span: element size mismatch");
    stacked.col(i) = vec(e);
  }
  out.set_basis_from_vectorized(orthonormalize(stacked, tol).basis());
  out.generators_ = generators.empty() ? out.basis_ : std::move(generators);
  return out;
}

Vector StarAlgebra::coefficients(const Matrix& x) const {
  if (x.rows() != n_ || x.cols() != n_) throw DimensionError("algebra element size mismatch");
  if (n_ == 0) return Vector(0);
  return vec_.adjoint() * vec(x) / std::sqrt(static_cast<double>(n_));
}

Matrix StarAlgebra::element(const Vector& c) const {
  if (c.size() != size()) throw DimensionError("coefficient count mismatch");
  if (n_ == 0) return Matrix(0, 0);
  return unvec(vec_ * c, n_, n_) * std::sqrt(static_cast<double>(n_));
}

Matrix StarAlgebra::project(const Matrix& x) const {
  if (x.rows() != n_ || x.cols() != n_) throw DimensionError("algebra element size mismatch");
  if (n_ == 0) return x;
  return unvec(vec_ * (vec_.adjoint() * vec(x)), n_, n_);
}

double StarAlgebra::distance(const Matrix& x) const { return (x - project(x)).norm(); }

bool StarAlgebra::contains(const Matrix& x) const { return distance(x) <= tol_.eq_abs * std::max(1.0, x.norm()); }

bool StarAlgebra::same_span(const StarAlgebra& other) const {
  if (n_ != other.n_ || size() != other.size()) return false;
  if (size() == 0) return true;
  return Subspace::from_orthonormal(vec_, 1e-6).gap_from(Subspace::from_orthonormal(other.vec_, 1e-6)) <= tol_.eq_abs;
}

std::shared_ptr<const StarAlgebra> StarAlgebra::commutant_ptr() const {
  std::lock_guard lock(cache_->commutant_mutex);
  if (!cache_->commutant) cache_->commutant = std::make_shared<const StarAlgebra>(commutant(*this));
  return cache_->commutant;
}

const BlockDecomposition& StarAlgebra::decomposition() const {
  std::lock_guard lock(cache_->decomposition_mutex);
  if (!cache_->decomposition) cache_->decomposition = wedderburn_decompose(*this, 0);
  return *cache_->decomposition;
}

// ---------------------------------------------------------------------------

StarAlgebra generate_algebra(std::span<const Matrix> generators, Index n, const Tolerances& tol) {
  tol.validate();
  if (n < 0) throw DimensionError("negative dimension");
  for (const Matrix& g : generators) {
    if (g.rows() != n || g.cols() != n) throw DimensionError("generator size does not match dimension");
    require_finite(g, "generate_algebra");
  }
  StarAlgebra out;
  out.n_ = n;
  out.tol_ = tol;
  out.generators_.assign(generators.begin(), generators.end());
  if (n == 0) {
    out.vec_ = Matrix(0, 0);
    return out;
  }

  const double root = std::sqrt(static_cast<double>(n));
  std::vector<Matrix> letters;
  for (const Matrix& g : generators) {
    const double norm = g.norm();
    if (norm == 0.0) continue;
    letters.push_back(g * (root / norm));
    letters.push_back(letters.back().adjoint());
  }

  const Index cap = n * n;
  Matrix u(cap, cap);
  Index d = 0;
  // Products of two unit-normalized elements have Frobenius norm up to n.
  const double threshold = tol.rank_rel * static_cast<double>(n);
  auto try_add = [&](const Matrix& m) {
    if (d == cap) return;
    Vector r = vec(m);
    auto q = u.leftCols(d);
    r -= q * (q.adjoint() * r);
    r -= q * (q.adjoint() * r);
    const double norm = r.norm();
    if (norm > threshold) {
      u.col(d) = r / norm;
      ++d;
    }
  };

  try_add(Matrix::Identity(n, n));
  // Closing the span under left multiplication by generators and their
  // adjoints yields every word, hence the generated *-algebra.
  for (Index t = 0; t < d && d < cap; ++t) {
    const Matrix current = unvec(u.col(t), n, n) * root;
    for (const Matrix& letter : letters) try_add(letter * current);
  }
  out.set_basis_from_vectorized(u.leftCols(d));
  return out;
}

StarAlgebra commutant(const StarAlgebra& a) {
  const Index n = a.ambient_dim();
  if (n == 0) return StarAlgebra::from_span({}, 0, a.tol());
  const Matrix gram = intertwining_gram(a.basis(), a.basis());
  const Matrix null = gram_null_space(gram, a.tol().rank_rel);
  const double root = std::sqrt(static_cast<double>(n));
  std::vector<Matrix> elems;
  elems.reserve(static_cast<std::size_t>(null.cols()));
  for (Index i = 0; i < null.cols(); ++i) elems.push_back(unvec(null.col(i), n, n) * root);
  return StarAlgebra::from_span(elems, n, a.tol());
}

bool double_commutant_check(const StarAlgebra& a) {
  const StarAlgebra first = commutant(a);
  return commutant(first).same_span(a);
}

BlockDecomposition wedderburn_decompose(const StarAlgebra& a, std::uint64_t seed) {
  if (a.ambient_dim() == 0) return BlockDecomposition{{}, Matrix(0, 0)};
  std::string last_error;
  for (int retry = 0; retry < kSeedRetries; ++retry) {
    try {
      return decompose_once(a, seed + static_cast<std::uint64_t>(retry));
    } catch (const DecompositionError& e) {
      last_error = e.what();
    }
  }
  throw DecompositionError("wedderburn_decompose failed after retries: " + last_error);
}

Matrix conditional_expectation(const Matrix& m, const StarAlgebra& a) {
  if (m.rows() != a.ambient_dim() || m.cols() != a.ambient_dim()) {
    throw DimensionError("conditional_expectation: size mismatch");
  }
  return a.project(m);
}

Matrix irreducible_intertwiner(const StarAlgebra& a, const Matrix& x1, const Matrix& x2) {
  if (x1.cols() != x2.cols() || x1.cols() == 0) return Matrix(0, 0);
  const Index k = x1.cols();
  const std::vector<Matrix> p = compressed_basis(a, x1);
  const std::vector<Matrix> q = compressed_basis(a, x2);
  const Matrix null = gram_null_space(intertwining_gram(p, q), a.tol().rank_rel);
  if (null.cols() == 0) return Matrix(0, 0);
  const Matrix u = unvec(null.col(0), k, k);
  Eigen::JacobiSVD<Matrix> svd(u);
  const auto& sv = svd.singularValues();
  if (sv(sv.size() - 1) < 0.5 * sv(0)) return Matrix(0, 0);
  return nearest_unitary(u);
}

std::vector<IrreducibleClass> irreducible_profile(const StarAlgebra& a, const Subspace& subspace) {
  if (subspace.ambient_dim() != a.ambient_dim()) throw DimensionError("irreducible_profile: size mismatch");
  std::vector<IrreducibleClass> out;
  if (subspace.dim() == 0) return out;
  const std::vector<Matrix> pieces = compressed_basis(a, subspace.basis());
  const StarAlgebra local = StarAlgebra::from_span(pieces, subspace.dim(), a.tol());
  const BlockDecomposition dec = wedderburn_decompose(local, 0);
  for (std::size_t i = 0; i < dec.blocks.size(); ++i) {
    out.push_back({subspace.basis() * dec.representative(i), dec.blocks[i].multiplicity});
  }
  return out;
}

bool profile_embeds(const StarAlgebra& a, const std::vector<IrreducibleClass>& inner,
                    const std::vector<IrreducibleClass>& outer) {
  for (const IrreducibleClass& c : inner) {
    bool found = false;
    for (const IrreducibleClass& o : outer) {
      if (o.representative.cols() != c.representative.cols()) continue;
      if (irreducible_intertwiner(a, c.representative, o.representative).size() == 0) continue;
      found = o.multiplicity >= c.multiplicity;
      break;
    }
    if (!found) return false;
  }
  return true;
}

bool profiles_disjoint(const StarAlgebra& a, const std::vector<IrreducibleClass>& x,
                       const std::vector<IrreducibleClass>& y) {
  for (const IrreducibleClass& c : x)
    for (const IrreducibleClass& o : y)
      if (c.representative.cols() == o.representative.cols() &&
          irreducible_intertwiner(a, c.representative, o.representative).size() != 0)
        return false;
  return true;
}

}  // namespace opmodel
