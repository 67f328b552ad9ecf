#pragma once

#include "opmodel/random.hpp"
#include "opmodel/structure.hpp"

#include <cmath>
#include <vector>

namespace opmodel::testing {

inline Vector vec2(Complex a, Complex b) {
  Vector v(2);
  v << a, b;
  return v;
}

inline Vector e(Index n, Index i) { return Vector::Unit(n, i); }

inline Matrix diag10() {
  Matrix m = Matrix::Zero(2, 2);
  m(0, 0) = 1.0;
  return m;
}

inline Matrix e12() {
  Matrix m = Matrix::Zero(2, 2);
  m(0, 1) = 1.0;
  return m;
}

inline const double kRootHalf = 1.0 / std::sqrt(2.0);

inline Vector u_diag() { return vec2(kRootHalf, kRootHalf); }

/// Diagonal algebra on C^2 generated by diag(1, 0).
inline Structure diagonal(std::optional<Subspace> discrete = {}) {
  return Structure::create({diag10()}, 2, std::move(discrete),
                           {{"e1", e(2, 0)}, {"e2", e(2, 1)}, {"u", u_diag()}});
}

/// Full M_2 generated by E12.
inline Structure full_m2() {
  return Structure::create({e12()}, 2, {}, {{"e1", e(2, 0)}, {"e2", e(2, 1)}});
}

inline double max_abs(const Matrix& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }

}  // namespace opmodel::testing
