#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

#include "rayen/core.hpp"
#include "rayen/rng.hpp"

namespace rayen {

struct NullSpace {
  Matrix N;  ///< k x n, orthonormal columns
  Index rank = 0;
};

inline double default_rank_tol(Index m, Index k) { return 1e-10 * static_cast<double>(std::max(m, k)); }

/// Orthonormal basis of ker(A) from a column-pivoted Householder QR of A'.
/// `rank_tol` is relative to the largest pivot (~ the largest row norm of A).
inline NullSpace orthonormal_nullspace(const Matrix& A, double rank_tol) {
  const Index k = A.cols();
  NullSpace out;
  if (k == 0) return out;
  if (A.rows() == 0 || detail::max_abs(A) == 0.0) {
    out.N = Matrix::Identity(k, k);
    return out;
  }
  Eigen::ColPivHouseholderQR<Matrix> qr(A.transpose());
  qr.setThreshold(rank_tol);
  out.rank = qr.rank();
  Matrix Q = qr.householderQ();
  out.N = Q.rightCols(k - out.rank);
  return out;
}

inline NullSpace orthonormal_nullspace(const Matrix& A) {
  return orthonormal_nullspace(A, default_rank_tol(A.rows(), A.cols()));
}

/// Minimum-norm solution of a consistent system A y = b (y = pinv(A) b).
inline Vector min_norm_solution(const Matrix& A, const Vector& b, double rank_tol) {
  detail::require_length(b, A.rows(), Stage::linalg, "min_norm_solution");
  const Index k = A.cols();
  if (A.rows() == 0 || detail::max_abs(A) == 0.0) {
    if (b.size() > 0 && b.cwiseAbs().maxCoeff() > 1e-9) {
      throw Error(Stage::affine_hull, ErrorCode::empty_affine_hull,
                  "inconsistent equalities: zero row with nonzero right-hand side");
    }
    return Vector::Zero(k);
  }
  Eigen::CompleteOrthogonalDecomposition<Matrix> cod;
  cod.setThreshold(rank_tol);
  cod.compute(A);
  Vector y = cod.solve(b);
  const double residual = (A * y - b).norm();
  if (!(residual <= 1e-9 * (1.0 + b.norm()))) {
    throw Error(Stage::affine_hull, ErrorCode::empty_affine_hull,
                "inconsistent equalities: residual " + std::to_string(residual));
  }
  return y;
}

inline Vector min_norm_solution(const Matrix& A, const Vector& b) {
  return min_norm_solution(A, b, default_rank_tol(A.rows(), A.cols()));
}

/// Lower-triangular R with H = R R' and a strictly positive diagonal.
inline Matrix cholesky_spd(const Matrix& H) {
  if (H.rows() != H.cols()) throw Error(Stage::linalg, ErrorCode::dimension_mismatch, "cholesky_spd: H not square");
  Eigen::LLT<Matrix> llt(H);
  if (llt.info() != Eigen::Success) {
    throw Error(Stage::linalg, ErrorCode::not_positive_definite, "cholesky_spd: matrix is not positive definite");
  }
  Matrix R = llt.matrixL();
  if (R.rows() > 0 && !(R.diagonal().minCoeff() > 0.0)) {
    throw Error(Stage::linalg, ErrorCode::not_positive_definite, "cholesky_spd: matrix is not positive definite");
  }
  return R;
}

enum class EigMethod { automatic, dense, iterative };

struct EigMaxOptions {
  EigMethod method = EigMethod::automatic;
  Index dense_max_size = 128;  ///< automatic picks dense up to this size
  double tol = 1e-12;          ///< iterative residual tolerance, relative to 1 + |lambda|
  int max_iterations = 5000;
};

struct EigMax {
  double value = 0.0;
  EigMethod used = EigMethod::dense;
  int iterations = 0;
  bool fell_back = false;  ///< iterative did not converge; dense result returned
};

namespace detail {

inline double dense_eig_max(const Matrix& S) {
  if (S.rows() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Matrix> es(S, Eigen::EigenvaluesOnly);
  return es.eigenvalues()(S.rows() - 1);
}

/// Gershgorin interval containing the spectrum of symmetric S.
inline std::array<double, 2> gershgorin_bounds(const Matrix& S) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (Index i = 0; i < S.rows(); ++i) {
    const double radius = S.col(i).cwiseAbs().sum() - std::abs(S(i, i));
    lo = std::min(lo, S(i, i) - radius);
    hi = std::max(hi, S(i, i) + radius);
  }
  return {lo, hi};
}

}  // namespace detail

/// Largest eigenvalue of symmetric S. The iterative path runs power
/// iteration on S - lo*I (lo a Gershgorin lower bound) so the wanted
/// eigenvalue dominates, stopping on the Rayleigh-quotient residual.
inline EigMax sym_eig_max(const Matrix& S, const EigMaxOptions& opt = {}) {
  EigMax out;
  const Index r = S.rows();
  if (r == 0) return out;
  const bool iterative =
      opt.method == EigMethod::iterative || (opt.method == EigMethod::automatic && r > opt.dense_max_size);
  if (!iterative) {
    out.value = detail::dense_eig_max(S);
    return out;
  }
  out.used = EigMethod::iterative;
  const auto [lo, hi] = detail::gershgorin_bounds(S);
  if (hi - lo == 0.0) {  // diagonal with equal entries, i.e. S = cI
    out.value = S(0, 0);
    return out;
  }
  const double shift = -lo;
  CounterRng rng(0x5EED);
  Vector x = rng.normal_vector(r);
  x.array() += 1.0;
  x.normalize();
  Vector y(r);
  for (int it = 1; it <= opt.max_iterations; ++it) {
    y.noalias() = S * x;
    const double theta = x.dot(y);
    const double residual = (y - theta * x).norm();
    out.iterations = it;
    if (residual <= opt.tol * (1.0 + std::abs(theta))) {
      out.value = theta;
      return out;
    }
    y += shift * x;
    const double norm = y.norm();
    if (!(norm > 0.0)) break;
    x = y / norm;
  }
  out.fell_back = true;
  out.value = detail::dense_eig_max(S);
  return out;
}

enum class RootKind { two_real, one_real, none_real, degenerate_linear, identically_zero };

struct QuadraticRoots {
  RootKind kind = RootKind::none_real;
  std::array<double, 2> roots{0.0, 0.0};
  int count = 0;

  double max_root() const { return count == 2 ? roots[1] : roots[0]; }
};

/// Real roots of a x^2 + b x + c = 0. The larger-magnitude root comes from
/// -(b + sign(b) sqrt(disc)) / 2 and the other from the product c/a, so no
/// cancellation occurs. The discriminant is formed with fma error terms.
/// A quadratic term that cannot influence any representable root of the
/// linear part (|a| < 1e-300, or |a| <= 1e-150 |b| and |a c| <= 1e-150 b^2)
/// is dropped and the equation is solved as linear.
inline QuadraticRoots solve_scaled_quadratic(double a, double b, double c) {
  QuadraticRoots out;
  const bool negligible_a =
      std::abs(a) < 1e-300 ||
      (b != 0.0 && std::abs(a) <= 1e-150 * std::abs(b) && std::abs(a * c) <= 1e-150 * b * b);
  if (negligible_a) {
    if (b == 0.0) {
      out.kind = c == 0.0 ? RootKind::identically_zero : RootKind::none_real;
      return out;
    }
    out.kind = RootKind::degenerate_linear;
    out.roots[0] = -c / b;
    out.count = 1;
    return out;
  }
  const double bb = b * b;
  const double bb_err = std::fma(b, b, -bb);
  const double ac4 = 4.0 * a * c;
  const double ac4_err = std::fma(4.0 * a, c, -ac4);
  const double disc = (bb - ac4) + (bb_err - ac4_err);
  if (disc < 0.0) {
    out.kind = RootKind::none_real;
    return out;
  }
  if (disc == 0.0) {
    out.kind = RootKind::one_real;
    out.roots[0] = -b / (2.0 * a);
    out.count = 1;
    return out;
  }
  const double t = -0.5 * (b + std::copysign(std::sqrt(disc), b));
  double r1 = t / a;
  double r2 = c / t;
  if (r1 > r2) std::swap(r1, r2);
  out.kind = RootKind::two_real;
  out.roots = {r1, r2};
  out.count = 2;
  return out;
}

}  // namespace rayen
