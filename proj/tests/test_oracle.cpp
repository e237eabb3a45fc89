#include <gtest/gtest.h>

#include "rayen/gallery.hpp"
#include "rayen/mapper.hpp"
#include "rayen/oracle.hpp"
#include "rayen/preprocess.hpp"

using namespace rayen;

namespace {

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Index>(v.size()));
  Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

ConstraintSet unit_box() {
  ConstraintSet cs;
  cs.k = 2;
  cs.linear.A1.resize(4, 2);
  cs.linear.A1 << 1, 0, 0, 1, -1, 0, 0, -1;
  cs.linear.b1 = Vector::Ones(4);
  return cs;
}

const GalleryEntry& gallery(const std::string& name) {
  static const auto g = reference_gallery();
  for (const auto& e : g)
    if (e.name == name) return e;
  throw std::runtime_error(name);
}

}  // namespace

TEST(Bisection, BoxAndHalfPlane) {
  const auto box = unit_box();
  const auto plan = build_parametric_plan(box);
  EXPECT_NEAR(kappa_bisection(plan, box, vec({1, 0})), 1.0, 1e-11);
  ConstraintSet half;
  half.k = 2;
  half.linear.A1 = vec({1, 0}).transpose();
  half.linear.b1 = vec({1});
  const auto hp = build_parametric_plan(half);
  EXPECT_EQ(kappa_bisection(hp, half, vec({-1, 0})), 0.0);
}

TEST(Bisection, AgreesWithAnalyticOnBoxDisk) {
  const auto& g = gallery("box-disk");
  const auto plan = compile_plan(g.set);
  CounterRng rng(1);
  for (int t = 0; t < 100; ++t) {
    const Vector vbar = rng.unit_vector(2);
    const double a = compute_kappas(plan, vbar).kappa;
    EXPECT_LE(std::abs(a - kappa_bisection(plan, g.set, vbar)), std::max(1e-7, 1e-7 * a));
  }
}

TEST(Bisection, TighterToleranceShrinksDeviation) {
  const auto& g = gallery("ellipsoid-halfspace");
  const auto plan = compile_plan(g.set);
  CounterRng rng(2);
  // mean deviation over many directions, since a single bracket end can land
  // anywhere inside its interval
  double coarse = 0, fine = 0;
  for (int t = 0; t < 400; ++t) {
    const Vector vbar = rng.unit_vector(3);
    const double a = compute_kappas(plan, vbar).kappa;
    coarse += std::abs(a - kappa_bisection(plan, g.set, vbar, {.tol = 1e-6}));
    fine += std::abs(a - kappa_bisection(plan, g.set, vbar, {.tol = 0.5e-6}));
  }
  EXPECT_LE(fine, 0.6 * coarse);
}

TEST(Sampler, BoxSegmentAndMixed) {
  const auto box = unit_box();
  const auto bp = compile_plan(box);
  Matrix Y = sample_feasible(bp, box, 100, 1);
  ASSERT_EQ(Y.rows(), 100);
  for (Index i = 0; i < Y.rows(); ++i) EXPECT_TRUE(is_member(box, Y.row(i).transpose(), 1e-10).member);

  ConstraintSet seg = box;
  seg.linear.A2 = vec({1, 1}).transpose();
  seg.linear.b2 = vec({1});
  const auto sp = compile_plan(seg);
  ASSERT_EQ(sp.n, 1);
  Y = sample_feasible(sp, seg, 100, 2);
  for (Index i = 0; i < Y.rows(); ++i) {
    EXPECT_NEAR(Y(i, 0) + Y(i, 1), 1.0, 1e-12);
    EXPECT_TRUE(is_member(seg, Y.row(i).transpose(), 1e-10).member);
  }

  const auto cs = random_constraint_factory(FactoryKind::mixed, 4, {}, 3);
  const auto mp = compile_plan(cs);
  Y = sample_feasible(mp, cs, 300, 4);
  for (Index i = 0; i < Y.rows(); ++i) {
    const auto m = is_member(cs, Y.row(i).transpose(), 1e-10);
    EXPECT_TRUE(m.member) << m.worst_violation;
  }
  EXPECT_EQ(Y, sample_feasible(mp, cs, 300, 4));
}

TEST(Factory, DeterministicPerSeed) {
  const auto a = random_constraint_factory(FactoryKind::mixed, 5, {}, 9);
  const auto b = random_constraint_factory(FactoryKind::mixed, 5, {}, 9);
  const auto c = random_constraint_factory(FactoryKind::mixed, 5, {}, 10);
  EXPECT_EQ(source_hash(a), source_hash(b));
  EXPECT_NE(source_hash(a), source_hash(c));
}

TEST(Factory, LmiCenterIsStrictlyFeasible) {
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    const auto cs = random_constraint_factory(FactoryKind::lmi, 6, {.lmi_size = 8}, seed);
    ASSERT_TRUE(validate_constraint_set(cs).passed());
    EXPECT_GT(compile_plan(cs).interior_margin, 0.0);
  }
}

TEST(Factory, MixedGridClassificationMatchesEvaluators) {
  // classify a 50^3 grid with the evaluators and with an independent
  // per-family formula written out here
  const auto cs = random_constraint_factory(FactoryKind::mixed, 3, {}, 17);
  int inside = 0;
  for (int i = 0; i < 50; ++i) {
    for (int j = 0; j < 50; ++j) {
      for (int l = 0; l < 50; ++l) {
        const Vector y = vec({-3 + 6 * (i + 0.5) / 50, -3 + 6 * (j + 0.5) / 50, -3 + 6 * (l + 0.5) / 50});
        bool ok = ((cs.linear.A1 * y - cs.linear.b1).array() <= 0).all();
        for (const auto& q : cs.quadratics) ok = ok && 0.5 * y.dot(q.P * y) + q.q.dot(y) + q.r <= 0;
        for (const auto& s : cs.socs) ok = ok && (s.M * y + s.s).norm() <= s.c.dot(y) + s.d;
        Matrix W = cs.lmi->F[3];
        for (int a = 0; a < 3; ++a) W += y[a] * cs.lmi->F[static_cast<std::size_t>(a)];
        ok = ok && Eigen::SelfAdjointEigenSolver<Matrix>(W).eigenvalues()[0] >= 0;
        ASSERT_EQ(ok, is_member(cs, y, 0.0).member);
        inside += ok;
      }
    }
  }
  EXPECT_GT(inside, 0);
}

TEST(Verify, BoxIsClean) {
  const auto box = unit_box();
  const auto rep = verify_plan(compile_plan(box), box, 2000, 1);
  EXPECT_TRUE(rep.passed);
  EXPECT_EQ(rep.feasible_fraction, 1.0);
  EXPECT_LE(rep.max_kappa_deviation[0], 1e-7);
  EXPECT_TRUE(rep.hash_match);
}

TEST(Verify, EditedSetIsFlagged) {
  const auto box = unit_box();
  const auto plan = compile_plan(box);
  auto edited = box;
  edited.linear.b1[0] = 0.5;
  const auto rep = verify_plan(plan, edited, 2000, 1);
  EXPECT_FALSE(rep.passed);
  EXPECT_FALSE(rep.hash_match);
  EXPECT_LT(rep.feasible_fraction, 1.0);
}

TEST(Verify, GallerySuiteIsClean) {
  for (const auto& g : reference_gallery()) {
    const auto rep = verify_plan(compile_plan(g.set), g.set, 2000, 7);
    EXPECT_TRUE(rep.passed) << g.name;
    EXPECT_EQ(rep.feasible_fraction, 1.0) << g.name;
  }
}
