#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "rayen/constraint_model.hpp"
#include "rayen/dense_linalg.hpp"

namespace rayen {

/// y = N z + y_p with orthonormal N. When the affine hull is the whole space
/// N is the identity and is not stored.
struct AffineMap {
  Index k = 0;
  Index n = 0;
  bool identity = true;
  Matrix N;  ///< k x n; empty when identity
  Vector y_p;

  Vector lift(const Vector& z) const {
    if (identity) return z + y_p;
    return N * z + y_p;
  }

  Vector coords(const Vector& y) const {
    if (identity) return y - y_p;
    return N.transpose() * (y - y_p);
  }

  /// N * X for a k-column-compatible block (X is n x B).
  Matrix apply(const Matrix& X) const { return identity ? X : Matrix(N * X); }

  /// M * N for M with k columns.
  Matrix right_multiply(const Matrix& M) const { return identity ? M : Matrix(M * N); }

  /// N' * x for x of length k.
  Vector transpose_apply(const Vector& x) const { return identity ? x : Vector(N.transpose() * x); }

  Matrix dense_basis() const { return identity ? Matrix::Identity(k, n) : N; }
};

struct QuadraticCache {
  double a = 0.0;  ///< g(y0) < 0
  Vector w;        ///< N'(P y0 + q)
  Matrix P;        ///< N' P N
};

struct SocCache {
  Vector u;     ///< M y0 + s
  Matrix W;     ///< M N
  double e = 0; ///< c'y0 + d
  Vector phi;   ///< N'c
};

struct LmiCache {
  Index r = 0;
  Matrix R;           ///< H = W(y0) = R R'
  Matrix basis_flat;  ///< column b = vec(G_b) with G_b = sum_a N[a,b] F_a
  bool conjugated = false;  ///< columns hold vec(R^-1 G_b R^-T) instead
};

struct MapperOptions {
  double kappa_zero_tol = 1e-12;  ///< kappa below this is an unbounded ray
  EigMaxOptions eig;
};

struct ProjectionPlan {
  Index k = 0;
  Index n = 0;
  AffineMap map;
  Matrix A_E;  ///< equality rows defining aff(Y) (zero row when none)
  Vector b_E;
  Vector z0;
  Vector y0;
  Matrix A_p;
  Vector b_p;
  Matrix D;  ///< A_p ./ ((b_p - A_p z0) 1')
  std::vector<QuadraticCache> quadratics;
  std::vector<SocCache> socs;
  std::optional<LmiCache> lmi;
  double interior_margin = 0.0;  ///< smallest normalized margin at z0
  std::uint64_t source_hash = 0;
  bool parametric = false;
  MapperOptions mapper;
};

}  // namespace rayen
