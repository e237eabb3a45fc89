#include <gtest/gtest.h>

#include <algorithm>

#include "rayen/dense_linalg.hpp"
#include "rayen/mapper.hpp"
#include "rayen/rng.hpp"
#include "support/oracles.hpp"

using namespace rayen;
namespace rt = rayen::testing;

TEST(NullSpace, SingleRow) {
  Matrix A(1, 3);
  A << 1, 0, 0;
  const auto ns = orthonormal_nullspace(A);
  EXPECT_EQ(ns.rank, 1);
  ASSERT_EQ(ns.N.cols(), 2);
  EXPECT_LE((A * ns.N).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_LE((ns.N.transpose() * ns.N - Matrix::Identity(2, 2)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(NullSpace, ZeroRowGivesFullBasis) {
  const auto ns = orthonormal_nullspace(Matrix::Zero(1, 3));
  EXPECT_EQ(ns.rank, 0);
  ASSERT_EQ(ns.N.cols(), 3);
  EXPECT_LE((ns.N.transpose() * ns.N - Matrix::Identity(3, 3)).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(NullSpace, RandomFullRank) {
  CounterRng rng(1);
  const Matrix A = rng.normal_matrix(5, 8);
  const auto ns = orthonormal_nullspace(A);
  EXPECT_EQ(ns.N.cols(), 3);
  EXPECT_LE((A * ns.N).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_LE((ns.N.transpose() * ns.N - Matrix::Identity(3, 3)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(NullSpace, DeterministicForFixedInput) {
  CounterRng rng(2);
  const Matrix A = rng.normal_matrix(4, 9);
  EXPECT_EQ(orthonormal_nullspace(A).N, orthonormal_nullspace(A).N);
}

TEST(NullSpace, RankDeficientRowsDetected) {
  CounterRng rng(4);
  const Matrix B = rng.normal_matrix(2, 6);
  Matrix A(4, 6);
  A << B, B.row(0) + B.row(1), 3.0 * B.row(1);
  const auto ns = orthonormal_nullspace(A);
  EXPECT_EQ(ns.rank, 2);
  EXPECT_EQ(ns.N.cols(), 4);
}

TEST(NullSpace, PropertyOverThousandRandomShapes) {
  CounterRng rng(7);
  for (int t = 0; t < 1000; ++t) {
    const Index k = 2 + static_cast<Index>(rng.below(40));
    const Index m = 1 + static_cast<Index>(rng.below(static_cast<std::uint64_t>(k - 1)));
    const Matrix A = rng.normal_matrix(m, k) * std::pow(10.0, rng.uniform(-3, 3));
    const auto ns = orthonormal_nullspace(A);
    ASSERT_EQ(ns.N.cols(), k - m);
    const double scale = A.cwiseAbs().maxCoeff();
    ASSERT_LE((A * ns.N).cwiseAbs().maxCoeff(), 1e-10 * scale) << "m=" << m << " k=" << k;
    ASSERT_LE((ns.N.transpose() * ns.N - Matrix::Identity(k - m, k - m)).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(MinNorm, Examples) {
  Matrix A(1, 2);
  A << 1, 1;
  Vector b(1);
  b << 2;
  EXPECT_LE((min_norm_solution(A, b) - Vector::Ones(2)).cwiseAbs().maxCoeff(), 1e-15);

  CounterRng rng(3);
  const Vector x = rng.normal_vector(4);
  EXPECT_LE((min_norm_solution(Matrix::Identity(4, 4), x) - x).cwiseAbs().maxCoeff(), 1e-15);

  Matrix A2(2, 2);
  A2 << 1, 0, 1, 0;
  const Vector y = min_norm_solution(A2, Vector::Ones(2));
  EXPECT_NEAR(y[0], 1.0, 1e-15);
  EXPECT_NEAR(y[1], 0.0, 1e-15);
}

TEST(MinNorm, InconsistentSystemThrows) {
  Matrix A(2, 2);
  A << 1, 0, 1, 0;
  Vector b(2);
  b << 1, 2;
  try {
    min_norm_solution(A, b);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::empty_affine_hull);
  }
}

TEST(MinNorm, MatchesPseudoinverseOracle) {
  CounterRng rng(9);
  for (int t = 0; t < 100; ++t) {
    const Matrix A = rng.normal_matrix(3, 7);
    const Vector b = A * rng.normal_vector(7);
    Eigen::JacobiSVD<Matrix> svd(A, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const Vector oracle = svd.solve(b);
    EXPECT_LE((min_norm_solution(A, b) - oracle).norm(), 1e-10 * (1 + oracle.norm()));
  }
}

TEST(Cholesky, Examples) {
  EXPECT_EQ(cholesky_spd(Matrix::Identity(3, 3)), Matrix::Identity(3, 3));
  Matrix H = Matrix::Zero(2, 2);
  H.diagonal() << 4, 9;
  Matrix R = cholesky_spd(H);
  EXPECT_DOUBLE_EQ(R(0, 0), 2.0);
  EXPECT_DOUBLE_EQ(R(1, 1), 3.0);
  EXPECT_DOUBLE_EQ(R(1, 0), 0.0);

  H << 2, 1, 1, 2;
  R = cholesky_spd(H);
  EXPECT_NEAR(R(0, 0), 1.41421356, 1e-8);
  EXPECT_NEAR(R(1, 0), 0.70710678, 1e-8);
  EXPECT_NEAR(R(1, 1), 1.22474487, 1e-8);
  EXPECT_EQ(R(0, 1), 0.0);
  EXPECT_LE((R * R.transpose() - H).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Cholesky, IndefiniteThrows) {
  Matrix H(2, 2);
  H << 1, 2, 2, 1;
  try {
    cholesky_spd(H);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::not_positive_definite);
  }
  EXPECT_THROW(cholesky_spd(Matrix::Zero(2, 2)), Error);
}

TEST(EigMax, Examples) {
  Matrix S = Matrix::Zero(3, 3);
  S.diagonal() << 3, -1, 2;
  EXPECT_DOUBLE_EQ(sym_eig_max(S).value, 3.0);
  EXPECT_NEAR(sym_eig_max(S, {.method = EigMethod::iterative}).value, 3.0, 1e-10);
  EXPECT_EQ(sym_eig_max(Matrix::Zero(4, 4)).value, 0.0);
  EXPECT_EQ(sym_eig_max(Matrix::Zero(4, 4), {.method = EigMethod::iterative}).value, 0.0);
}

TEST(EigMax, IterativeMatchesDense) {
  CounterRng rng(21);
  for (int t = 0; t < 50; ++t) {
    const Matrix G = rng.normal_matrix(50, 50);
    const Matrix S = 0.5 * (G + G.transpose());
    const double dense = sym_eig_max(S, {.method = EigMethod::dense}).value;
    const auto it = sym_eig_max(S, {.method = EigMethod::iterative, .tol = 1e-12, .max_iterations = 200000});
    EXPECT_LE(std::abs(it.value - dense), 1e-8) << "iterations " << it.iterations << " fell back " << it.fell_back;
  }
}

TEST(EigMax, AutomaticSwitchesAboveThreshold) {
  CounterRng rng(22);
  const Matrix G = rng.normal_matrix(130, 130);
  const Matrix S = G + G.transpose();
  const auto r = sym_eig_max(S);
  EXPECT_EQ(r.used, EigMethod::iterative);
  EXPECT_LE(std::abs(r.value - rt::sorted_sym_eigenvalues(S)[129]), 1e-8 * (1 + std::abs(r.value)));
}

TEST(EigMax, NonConvergenceFallsBackToDense) {
  Matrix S = Matrix::Zero(3, 3);
  S.diagonal() << 1.0, 1.0 - 1e-9, -1.0;
  S(0, 2) = S(2, 0) = 0.1;
  const auto r = sym_eig_max(S, {.method = EigMethod::iterative, .tol = 1e-15, .max_iterations = 3});
  EXPECT_TRUE(r.fell_back);
  EXPECT_DOUBLE_EQ(r.value, sym_eig_max(S, {.method = EigMethod::dense}).value);
}

TEST(Roots, Examples) {
  auto r = solve_scaled_quadratic(1, -3, 2);
  EXPECT_EQ(r.kind, RootKind::two_real);
  EXPECT_DOUBLE_EQ(r.roots[0], 1.0);
  EXPECT_DOUBLE_EQ(r.roots[1], 2.0);
  EXPECT_EQ(solve_scaled_quadratic(1, 0, 1).kind, RootKind::none_real);
  r = solve_scaled_quadratic(1e-200, 1, -1);
  EXPECT_EQ(r.kind, RootKind::degenerate_linear);
  const auto mp = rt::mp_quadratic_roots(1e-200, 1, -1);
  // the finite root of the true quadratic is the linear root to ~1e-200
  double finite = mp.back();
  for (double x : mp) finite = std::abs(x - 1.0) < std::abs(finite - 1.0) ? x : finite;
  EXPECT_EQ(r.roots[0], finite);
  EXPECT_EQ(r.roots[0], 1.0);
}

TEST(Roots, DegenerateKinds) {
  EXPECT_EQ(solve_scaled_quadratic(0, 0, 0).kind, RootKind::identically_zero);
  EXPECT_EQ(solve_scaled_quadratic(0, 0, 1).kind, RootKind::none_real);
  auto r = solve_scaled_quadratic(1, -2, 1);
  ASSERT_GE(r.count, 1);
  EXPECT_DOUBLE_EQ(r.max_root(), 1.0);
  r = solve_scaled_quadratic(-1, 0, 4);
  EXPECT_EQ(r.kind, RootKind::two_real);
  EXPECT_DOUBLE_EQ(r.roots[0], -2.0);
  EXPECT_DOUBLE_EQ(r.roots[1], 2.0);
}

TEST(Roots, StableAgainstExtendedPrecision) {
  CounterRng rng(31);
  int checked = 0;
  for (int t = 0; t < 5000; ++t) {
    // roots r1, r2 well separated; b spans up to 1e12
    const double scale = std::pow(10.0, rng.uniform(0, 12));
    const double r1 = rng.uniform(0.5, 2.0) * (rng.uniform() < 0.5 ? -1 : 1);
    const double r2 = scale * rng.uniform(0.5, 2.0) * (rng.uniform() < 0.5 ? -1 : 1);
    const double a = rng.uniform(0.1, 10.0) * (rng.uniform() < 0.5 ? -1 : 1);
    const double b = -a * (r1 + r2);
    const double c = a * r1 * r2;
    const auto mp = rt::mp_quadratic_roots(a, b, c);
    if (mp.size() != 2) continue;
    const auto got = solve_scaled_quadratic(a, b, c);
    ASSERT_EQ(got.kind, RootKind::two_real);
    for (int i = 0; i < 2; ++i) {
      const double want = mp[static_cast<std::size_t>(i)];
      ASSERT_LE(std::abs(got.roots[static_cast<std::size_t>(i)] - want), 1e-12 * std::abs(want))
          << "a=" << a << " b=" << b << " c=" << c;
    }
    ++checked;
  }
  EXPECT_GT(checked, 4900);
}

TEST(AppendixIdentity, ThreeSpectraAgree) {
  CounterRng rng(41);
  for (int t = 0; t < 60; ++t) {
    const Index r = 1 + static_cast<Index>(rng.below(30));
    const Matrix G = rng.normal_matrix(r, r);
    const Matrix H = G * G.transpose() / static_cast<double>(r) + Matrix::Identity(r, r);
    const Matrix D = rng.normal_matrix(r, r);
    const Matrix S = 0.5 * (D + D.transpose());

    const Vector e1 = rt::sorted_real_eigenvalues(-H.inverse() * S);
    const Matrix L = Eigen::LLT<Matrix>(H.inverse()).matrixL();
    const Vector e2 = rt::sorted_sym_eigenvalues(L.transpose() * (-S) * L);

    LmiCache cache;
    cache.r = r;
    cache.R = cholesky_spd(H);
    cache.basis_flat = Eigen::Map<const Vector>(S.data(), r * r);
    const Vector e3 = rt::sorted_sym_eigenvalues(-detail::lmi_conjugated(cache, Vector::Ones(1)));

    const double scale = e1.cwiseAbs().maxCoeff();
    EXPECT_LE((e1 - e2).cwiseAbs().maxCoeff(), 1e-8 * scale);
    EXPECT_LE((e1 - e3).cwiseAbs().maxCoeff(), 1e-8 * scale);
  }
}
