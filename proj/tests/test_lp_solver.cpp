#include <gtest/gtest.h>

#include "rayen/lp_solver.hpp"
#include "rayen/rng.hpp"
#include "support/oracles.hpp"

using namespace rayen;
namespace rt = rayen::testing;

namespace {

LPProblem one_dim(std::initializer_list<std::pair<double, double>> rows) {
  LPProblem p;
  p.c = Vector::Ones(1);
  p.A_ub.resize(static_cast<Index>(rows.size()), 1);
  p.b_ub.resize(static_cast<Index>(rows.size()));
  Index i = 0;
  for (auto [a, b] : rows) {
    p.A_ub(i, 0) = a;
    p.b_ub[i++] = b;
  }
  return p;
}

// Random bounded feasible LP: rows around an interior point plus a box.
LPProblem random_bounded_lp(CounterRng& rng, Index k, Index m) {
  LPProblem p;
  p.c = rng.normal_vector(k);
  const Vector center = rng.normal_vector(k);
  Matrix A(m + 2 * k, k);
  Vector b(m + 2 * k);
  A.topRows(m) = rng.normal_matrix(m, k);
  for (Index i = 0; i < m; ++i) b[i] = A.row(i).dot(center) + rng.uniform(0.1, 2.0);
  A.block(m, 0, k, k) = Matrix::Identity(k, k);
  A.block(m + k, 0, k, k) = -Matrix::Identity(k, k);
  b.segment(m, k) = center.array() + 3.0;
  b.segment(m + k, k) = -(center.array() - 3.0);
  p.A_ub = A;
  p.b_ub = b;
  return p;
}

}  // namespace

TEST(Lp, UpperBoundOptimal) {
  const auto s = solve_lp(one_dim({{1, 3}, {-1, 0}}));
  ASSERT_EQ(s.status, LPStatus::optimal);
  EXPECT_NEAR(s.objective_value, 3.0, 1e-12);
  EXPECT_NEAR(s.y_star[0], 3.0, 1e-12);
}

TEST(Lp, Infeasible) { EXPECT_EQ(solve_lp(one_dim({{-1, -1}, {1, 0}})).status, LPStatus::infeasible); }

TEST(Lp, Unbounded) { EXPECT_EQ(solve_lp(one_dim({{-1, 0}})).status, LPStatus::unbounded); }

TEST(Lp, EqualityRowsAndBounds) {
  LPProblem p;
  p.c = Vector::Ones(3);
  p.A_eq.resize(1, 3);
  p.A_eq << 1, 2, 3;
  p.b_eq = Vector::Constant(1, 6.0);
  p.lower = Vector::Zero(3);
  const auto s = solve_lp(p);
  ASSERT_EQ(s.status, LPStatus::optimal);
  EXPECT_NEAR(s.objective_value, 6.0, 1e-10);  // all weight on y0
  EXPECT_LE(s.primal_residual, 1e-8);
}

TEST(Lp, InconsistentEqualities) {
  LPProblem p;
  p.c = Vector::Ones(2);
  p.A_eq.resize(2, 2);
  p.A_eq << 1, 1, 1, 1;
  p.b_eq.resize(2);
  p.b_eq << 1, 2;
  EXPECT_EQ(solve_lp(p).status, LPStatus::infeasible);
}

TEST(Lp, DegenerateVertexTerminates) {
  // many constraints through the optimal vertex (1, 1)
  LPProblem p;
  p.c = Vector::Ones(2);
  const int m = 40;
  p.A_ub.resize(m, 2);
  p.b_ub.resize(m);
  for (int i = 0; i < m; ++i) {
    const double t = 0.05 + 1.45 * i / (m - 1);
    p.A_ub(i, 0) = std::cos(t);
    p.A_ub(i, 1) = std::sin(t);
    p.b_ub[i] = std::cos(t) + std::sin(t);
  }
  const auto s = solve_lp(p);
  ASSERT_EQ(s.status, LPStatus::optimal);
  EXPECT_NEAR(s.objective_value, 2.0, 1e-9);
}

TEST(Lp, MalformedProblemThrows) {
  LPProblem p;
  p.c = Vector::Ones(2);
  p.A_ub = Matrix::Ones(2, 3);
  p.b_ub = Vector::Ones(2);
  EXPECT_THROW(solve_lp(p), Error);
}

TEST(Lp, MatchesVertexEnumerationOnRandomSmallProblems) {
  CounterRng rng(101);
  for (int t = 0; t < 500; ++t) {
    const Index k = 1 + static_cast<Index>(rng.below(4));
    const Index m = 1 + static_cast<Index>(rng.below(7));
    const auto p = random_bounded_lp(rng, k, m);
    const auto s = solve_lp(p);
    ASSERT_EQ(s.status, LPStatus::optimal) << "trial " << t;
    const auto oracle = rt::vertex_lp_max(p.c, p.A_ub, p.b_ub);
    ASSERT_TRUE(oracle.has_value());
    ASSERT_LE(std::abs(s.objective_value - *oracle), 1e-7 * (1 + std::abs(*oracle))) << "trial " << t;
    ASSERT_LE(((p.A_ub * s.y_star - p.b_ub).array().maxCoeff()), 1e-8);
  }
}

TEST(Lp, DualCertificateOnLargerRandomProblems) {
  // k <= 20, rows <= 60: primal feasibility, dual feasibility and zero gap.
  CounterRng rng(202);
  for (int t = 0; t < 500; ++t) {
    const Index k = 1 + static_cast<Index>(rng.below(20));
    const Index m = static_cast<Index>(rng.below(static_cast<std::uint64_t>(61 - 2 * k)));
    const auto p = random_bounded_lp(rng, k, m);
    const auto s = solve_lp(p);
    ASSERT_EQ(s.status, LPStatus::optimal) << "trial " << t;
    ASSERT_EQ(s.dual_ub.size(), p.A_ub.rows());
    const double scale = 1 + std::abs(s.objective_value);
    ASSERT_LE((p.A_ub * s.y_star - p.b_ub).maxCoeff(), 1e-8);
    ASSERT_GE(s.dual_ub.minCoeff(), -1e-9);
    ASSERT_LE((p.A_ub.transpose() * s.dual_ub - p.c).cwiseAbs().maxCoeff(), 1e-8 * scale);
    ASSERT_LE(std::abs(p.b_ub.dot(s.dual_ub) - s.objective_value), 1e-7 * scale) << "trial " << t;
  }
}

TEST(Lp, Deterministic) {
  CounterRng rng(303);
  const auto p = random_bounded_lp(rng, 6, 20);
  const auto a = solve_lp(p);
  const auto b = solve_lp(p);
  EXPECT_EQ(a.y_star, b.y_star);
  EXPECT_EQ(a.iterations, b.iterations);
}
