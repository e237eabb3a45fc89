#pragma once

#include <string>
#include <vector>

#include "rayen/constraint_model.hpp"
#include "rayen/dense_linalg.hpp"
#include "rayen/interior_point.hpp"
#include "rayen/lp_solver.hpp"
#include "rayen/plan.hpp"

namespace rayen {

struct StackedLinear {
  Matrix A;
  Vector b;
};

/// [A1; A2; -A2] y <= [b1; b2; -b2].
inline StackedLinear stack_linear(const LinearConstraints& lc) {
  if (lc.empty()) throw Error(Stage::stacking, ErrorCode::invalid_input, "no linear constraints to stack");
  const Index r1 = lc.A1.rows();
  const Index r2 = lc.A2.rows();
  const Index k = r1 > 0 ? lc.A1.cols() : lc.A2.cols();
  if ((r1 > 0 && r2 > 0 && lc.A1.cols() != lc.A2.cols()) || lc.b1.size() != r1 || lc.b2.size() != r2) {
    throw Error(Stage::stacking, ErrorCode::dimension_mismatch, "linear blocks have inconsistent shapes");
  }
  StackedLinear out;
  out.A.resize(r1 + 2 * r2, k);
  out.b.resize(r1 + 2 * r2);
  if (r1 > 0) {
    out.A.topRows(r1) = lc.A1;
    out.b.head(r1) = lc.b1;
  }
  if (r2 > 0) {
    out.A.middleRows(r1, r2) = lc.A2;
    out.A.bottomRows(r2) = -lc.A2;
    out.b.segment(r1, r2) = lc.b2;
    out.b.tail(r2) = -lc.b2;
  }
  return out;
}

struct PreprocessOptions {
  double redundancy_rel = 1e-9;  ///< row i redundant iff max <= b_i + rel (1 + |b_i|)
  double equality_rel = 1e-8;    ///< row i in E iff min >= b_i - rel (1 + |b_i|)
  double rank_tol = 0.0;         ///< 0 selects default_rank_tol
  LPOptions lp;
};

struct ReducedLinear {
  Matrix A;
  Vector b;
  std::vector<Index> kept;  ///< retained row indices of the input system
};

namespace detail {

inline Matrix select_rows(const Matrix& A, const std::vector<Index>& rows) {
  Matrix out(static_cast<Index>(rows.size()), A.cols());
  for (std::size_t t = 0; t < rows.size(); ++t) out.row(static_cast<Index>(t)) = A.row(rows[t]);
  return out;
}

inline Vector select_entries(const Vector& b, const std::vector<Index>& rows) {
  Vector out(static_cast<Index>(rows.size()));
  for (std::size_t t = 0; t < rows.size(); ++t) out[static_cast<Index>(t)] = b[rows[t]];
  return out;
}

inline LPSolution solve_lp_in(Stage stage, const LPProblem& p, const LPOptions& opt) {
  try {
    return solve_lp(p, opt);
  } catch (const Error& e) {
    throw Error(stage, e.code(), e.what());
  }
}

}  // namespace detail

/// Drops rows implied by the others. Rows are tested in input order against
/// the currently retained set: row i goes if
///   max a_i'y  s.t. retained rows other than i, a_i'y <= b_i + 1
/// does not exceed b_i + tol.
inline ReducedLinear remove_redundant(const Matrix& A, const Vector& b, const PreprocessOptions& opt = {}) {
  detail::require_length(b, A.rows(), Stage::redundancy, "remove_redundant");
  const Index m = A.rows();
  const Index k = A.cols();
  {
    LPProblem feas;
    feas.c = Vector::Zero(k);
    feas.A_ub = A;
    feas.b_ub = b;
    if (detail::solve_lp_in(Stage::redundancy, feas, opt.lp).status == LPStatus::infeasible) {
      throw Error(Stage::redundancy, ErrorCode::empty_linear_set, "empty Y_L: linear system is infeasible");
    }
  }
  std::vector<bool> alive(static_cast<std::size_t>(m), true);
  for (Index i = 0; i < m; ++i) {
    std::vector<Index> others;
    for (Index j = 0; j < m; ++j) {
      if (j != i && alive[static_cast<std::size_t>(j)]) others.push_back(j);
    }
    LPProblem lp;
    lp.c = A.row(i).transpose();
    lp.A_ub.resize(static_cast<Index>(others.size()) + 1, k);
    lp.b_ub.resize(static_cast<Index>(others.size()) + 1);
    lp.A_ub.topRows(static_cast<Index>(others.size())) = detail::select_rows(A, others);
    lp.b_ub.head(static_cast<Index>(others.size())) = detail::select_entries(b, others);
    lp.A_ub.bottomRows(1) = A.row(i);
    lp.b_ub[static_cast<Index>(others.size())] = b[i] + 1.0;
    const auto sol = detail::solve_lp_in(Stage::redundancy, lp, opt.lp);
    if (sol.status == LPStatus::infeasible) {
      throw Error(Stage::redundancy, ErrorCode::empty_linear_set, "empty Y_L: redundancy LP is infeasible");
    }
    if (sol.status == LPStatus::optimal && sol.objective_value <= b[i] + opt.redundancy_rel * (1.0 + std::abs(b[i]))) {
      alive[static_cast<std::size_t>(i)] = false;
    }
  }
  ReducedLinear out;
  for (Index i = 0; i < m; ++i) {
    if (alive[static_cast<std::size_t>(i)]) out.kept.push_back(i);
  }
  out.A = detail::select_rows(A, out.kept);
  out.b = detail::select_entries(b, out.kept);
  return out;
}

/// Rows of A y <= b split into always-active rows E and the rest I.
/// Empty E is represented by A_E = 0 (one row), b_E = 0; empty I by
/// A_I = 0 (one row), b_I = 1.
struct PartitionEI {
  std::vector<Index> E;
  std::vector<Index> I;
  Matrix A_E;
  Vector b_E;
  Matrix A_I;
  Vector b_I;
  bool E_convention = false;
  bool I_convention = false;
};

inline PartitionEI partition_rows(const Matrix& A, const Vector& b, std::vector<Index> E, std::vector<Index> I) {
  PartitionEI out;
  const Index k = A.cols();
  out.E = std::move(E);
  out.I = std::move(I);
  if (out.E.empty()) {
    out.A_E = Matrix::Zero(1, k);
    out.b_E = Vector::Zero(1);
    out.E_convention = true;
  } else {
    out.A_E = detail::select_rows(A, out.E);
    out.b_E = detail::select_entries(b, out.E);
  }
  if (out.I.empty()) {
    out.A_I = Matrix::Zero(1, k);
    out.b_I = Vector::Ones(1);
    out.I_convention = true;
  } else {
    out.A_I = detail::select_rows(A, out.I);
    out.b_I = detail::select_entries(b, out.I);
  }
  return out;
}

/// Row i is an implicit equality iff min a_i'y over A y <= b is >= b_i - tol.
inline PartitionEI detect_implicit_equalities(const Matrix& A, const Vector& b, const PreprocessOptions& opt = {}) {
  detail::require_length(b, A.rows(), Stage::implicit_equalities, "detect_implicit_equalities");
  std::vector<Index> E, I;
  for (Index i = 0; i < A.rows(); ++i) {
    LPProblem lp;
    lp.c = -A.row(i).transpose();
    lp.A_ub = A;
    lp.b_ub = b;
    const auto sol = detail::solve_lp_in(Stage::implicit_equalities, lp, opt.lp);
    if (sol.status == LPStatus::infeasible) {
      throw Error(Stage::implicit_equalities, ErrorCode::empty_linear_set, "empty Y_L: linear system is infeasible");
    }
    const bool always_active =
        sol.status == LPStatus::optimal && -sol.objective_value >= b[i] - opt.equality_rel * (1.0 + std::abs(b[i]));
    (always_active ? E : I).push_back(i);
  }
  return partition_rows(A, b, std::move(E), std::move(I));
}

/// y = N z + y_p spanning {y | A_E y = b_E}. A zero A_E gives the identity map.
inline AffineMap build_affine_map(const Matrix& A_E, const Vector& b_E, double rank_tol = 0.0) {
  const Index k = A_E.cols();
  if (rank_tol <= 0.0) rank_tol = default_rank_tol(A_E.rows(), k);
  AffineMap map;
  map.k = k;
  if (A_E.rows() == 0 || detail::max_abs(A_E) == 0.0) {
    // convention row for empty E: the hull is all of R^k
    if (b_E.size() > 0 && b_E.cwiseAbs().maxCoeff() > 1e-9) {
      throw Error(Stage::affine_hull, ErrorCode::empty_affine_hull, "empty affine hull: zero row with nonzero b_E");
    }
    map.n = k;
    map.identity = true;
    map.y_p = Vector::Zero(k);
    return map;
  }
  auto ns = orthonormal_nullspace(A_E, rank_tol);
  try {
    map.y_p = min_norm_solution(A_E, b_E, rank_tol);
  } catch (const Error& e) {
    throw Error(Stage::affine_hull, ErrorCode::empty_affine_hull, std::string("empty affine hull: ") + e.what());
  }
  map.n = ns.N.cols();
  map.identity = false;
  map.N = std::move(ns.N);
  return map;
}

/// Re-expresses every family over z through y = N z + y_p. Inputs are
/// assumed symmetrized.
inline ProjectedConstraints project_constraints(const ConstraintSet& cs, const AffineMap& map, const Matrix& A_I,
                                                const Vector& b_I) {
  ProjectedConstraints pc;
  pc.n = map.n;
  pc.A_p = map.right_multiply(A_I);
  pc.b_p = b_I - A_I * map.y_p;
  const Vector& yp = map.y_p;
  for (const auto& q : cs.quadratics) {
    ProjectedConstraints::Quadratic zq;
    const Matrix PN = map.right_multiply(q.P);
    zq.P = map.identity ? PN : Matrix(map.N.transpose() * PN);
    zq.P = 0.5 * (zq.P + zq.P.transpose());
    zq.w = map.transpose_apply(q.P * yp + q.q);
    zq.a = evaluate_quadratic(q, yp);
    zq.scale = 1.0 + detail::max_abs(q.P);
    pc.quadratics.push_back(std::move(zq));
  }
  for (const auto& s : cs.socs) {
    ProjectedConstraints::Soc zs;
    zs.W = map.right_multiply(s.M);
    zs.u = s.M * yp + s.s;
    zs.phi = map.transpose_apply(s.c);
    zs.e = s.c.dot(yp) + s.d;
    pc.socs.push_back(std::move(zs));
  }
  if (cs.lmi) {
    const auto& F = cs.lmi->F;
    ProjectedConstraints::Lmi zl;
    zl.r = cs.lmi->size();
    zl.H = assemble_lmi(*cs.lmi, yp);
    zl.H = 0.5 * (zl.H + zl.H.transpose());
    zl.scale = 1.0 + detail::max_abs(F[static_cast<std::size_t>(cs.k)]);
    Matrix flat(zl.r * zl.r, cs.k);
    for (Index a = 0; a < cs.k; ++a) {
      flat.col(a) = Eigen::Map<const Vector>(F[static_cast<std::size_t>(a)].data(), zl.r * zl.r);
    }
    zl.basis_flat = map.right_multiply(flat);
    pc.lmi = std::move(zl);
  }
  return pc;
}

struct CompileOptions {
  PreprocessOptions preprocess;
  InteriorOptions interior;
  double lmi_memory_budget = 2e8;  ///< max n * r^2 scalars for the conjugated basis
  MapperOptions mapper;
};

/// Row bookkeeping from compilation, in terms of the stacked system.
struct CompileReport {
  Index stacked_rows = 0;
  std::vector<Index> kept;
  std::vector<Index> removed;
  std::vector<Index> E;
  std::vector<Index> I;
  Index k = 0;
  Index n = 0;
  double epsilon = 0.0;
};

namespace detail {

/// Online caches at y0 = f(z0) and the strictness checks.
inline ProjectionPlan finish_plan(const ConstraintSet& cs, const AffineMap& map, const Matrix& A_E, const Vector& b_E,
                                  ProjectedConstraints pc, const Vector& z0, double margin,
                                  const CompileOptions& opt) {
  ProjectionPlan plan;
  plan.k = cs.k;
  plan.n = map.n;
  plan.map = map;
  plan.A_E = A_E;
  plan.b_E = b_E;
  plan.z0 = z0;
  plan.y0 = map.lift(z0);
  plan.A_p = std::move(pc.A_p);
  plan.b_p = std::move(pc.b_p);
  plan.interior_margin = margin;
  plan.mapper = opt.mapper;

  auto not_interior = [](const std::string& what) {
    return Error(Stage::plan, ErrorCode::no_interior_point, "z0 is not strictly interior: " + what);
  };

  const Vector margins = plan.b_p - plan.A_p * z0;
  if (margins.size() > 0 && !(margins.minCoeff() > 0.0)) {
    throw not_interior("linear margin " + std::to_string(margins.minCoeff()));
  }
  plan.D = plan.A_p;
  for (Index i = 0; i < plan.D.rows(); ++i) plan.D.row(i) /= margins[i];

  for (std::size_t i = 0; i < cs.quadratics.size(); ++i) {
    const auto& q = cs.quadratics[i];
    QuadraticCache c;
    c.a = evaluate_quadratic(q, plan.y0);
    if (!(c.a < 0.0)) throw not_interior("quadratic " + std::to_string(i) + " has g(y0) = " + std::to_string(c.a));
    c.w = map.transpose_apply(q.P * plan.y0 + q.q);
    c.P = std::move(pc.quadratics[i].P);
    plan.quadratics.push_back(std::move(c));
  }
  for (std::size_t j = 0; j < cs.socs.size(); ++j) {
    const auto& s = cs.socs[j];
    SocCache c;
    c.u = s.M * plan.y0 + s.s;
    c.e = s.c.dot(plan.y0) + s.d;
    if (!(c.e - c.u.norm() > 0.0)) throw not_interior("SOC " + std::to_string(j) + " has e - ||u|| <= 0");
    c.W = std::move(pc.socs[j].W);
    c.phi = std::move(pc.socs[j].phi);
    plan.socs.push_back(std::move(c));
  }
  if (cs.lmi) {
    LmiCache c;
    c.r = cs.lmi->size();
    Matrix H = assemble_lmi(*cs.lmi, plan.y0);
    H = 0.5 * (H + H.transpose());
    try {
      c.R = cholesky_spd(H);
    } catch (const Error&) {
      throw not_interior("W(y0) is not positive definite");
    }
    c.basis_flat = std::move(pc.lmi->basis_flat);
    if (static_cast<double>(plan.n) * static_cast<double>(c.r * c.r) <= opt.lmi_memory_budget) {
      const auto L = c.R.triangularView<Eigen::Lower>();
      for (Index b = 0; b < plan.n; ++b) {
        Eigen::Map<Matrix> G(c.basis_flat.col(b).data(), c.r, c.r);
        Matrix X = L.solve(G);
        X = L.solve(X.transpose().eval());
        G = 0.5 * (X + X.transpose());
      }
      c.conjugated = true;
    }
    plan.lmi = std::move(c);
  }

  if (!map.identity) {
    const double residual = (A_E * map.y_p - b_E).norm();
    if (!(residual <= 1e-9 * (1.0 + b_E.norm()))) {
      throw Error(Stage::plan, ErrorCode::empty_affine_hull, "A_E y_p = b_E violated: " + std::to_string(residual));
    }
  }
  return plan;
}

/// Validates, then replaces every P and F by its symmetric part in place.
inline void validate_and_symmetrize(ConstraintSet& cs, Stage stage) {
  const auto report = validate_constraint_set(cs);
  if (!report.passed()) throw Error(stage, ErrorCode::invalid_input, "invalid constraint set: " + report.failures());
  for (auto& q : cs.quadratics) q.P = detail::symmetrized(q.P);
  if (cs.lmi)
    for (auto& F : cs.lmi->F) F = detail::symmetrized(F);
}

}  // namespace detail

/// Full offline pipeline: stack, drop redundant rows, split implicit
/// equalities, parametrize the affine hull, project, find z0, fill caches.
inline ProjectionPlan compile_plan(ConstraintSet cs, const CompileOptions& opt = {}, CompileReport* report = nullptr) {
  const std::uint64_t hash = source_hash(cs);
  detail::validate_and_symmetrize(cs, Stage::plan);
  const Index k = cs.k;
  CompileReport rep;
  rep.k = k;
  PartitionEI part;
  if (cs.has_linear()) {
    const auto stacked = stack_linear(cs.linear);
    rep.stacked_rows = stacked.A.rows();
    const auto reduced = remove_redundant(stacked.A, stacked.b, opt.preprocess);
    rep.kept = reduced.kept;
    std::size_t t = 0;
    for (Index i = 0; i < rep.stacked_rows; ++i) {
      if (t < reduced.kept.size() && reduced.kept[t] == i) {
        ++t;
      } else {
        rep.removed.push_back(i);
      }
    }
    part = detect_implicit_equalities(reduced.A, reduced.b, opt.preprocess);
    for (Index e : part.E) rep.E.push_back(reduced.kept[static_cast<std::size_t>(e)]);
    for (Index i : part.I) rep.I.push_back(reduced.kept[static_cast<std::size_t>(i)]);
  } else {
    part = partition_rows(Matrix::Zero(0, k), Vector::Zero(0), {}, {});
  }
  const AffineMap map = build_affine_map(part.A_E, part.b_E, opt.preprocess.rank_tol);
  ProjectedConstraints pc = project_constraints(cs, map, part.A_I, part.b_I);
  const InteriorPoint ip = find_interior_point(pc, opt.interior);
  rep.n = map.n;
  rep.epsilon = ip.epsilon;
  auto plan = detail::finish_plan(cs, map, part.A_E, part.b_E, std::move(pc), ip.z0, ip.epsilon, opt);
  plan.source_hash = hash;
  if (report) *report = std::move(rep);
  return plan;
}

struct ParametricOptions {
  double strict_tol = 1e-9;  ///< each condition must hold with at least this margin
  CompileOptions compile;
};

/// Plan with z0 = 0 and no LP stage, for sets where 0 is interior by
/// construction: b1 > 0, r_i < 0, d_j > ||s_j||, F_k positive definite
/// (each evaluated at y_p when equality rows A2 y = b2 are present).
inline ProjectionPlan build_parametric_plan(ConstraintSet cs, const ParametricOptions& opt = {}) {
  const std::uint64_t hash = source_hash(cs);
  detail::validate_and_symmetrize(cs, Stage::parametric);
  const Index k = cs.k;
  auto violated = [](const std::string& condition, const std::string& detail) {
    return Error(Stage::parametric, ErrorCode::parametric_condition,
                 "parametric condition violated: " + condition + " (" + detail + ")");
  };

  Matrix A_E = Matrix::Zero(1, k);
  Vector b_E = Vector::Zero(1);
  if (cs.linear.has_equalities()) {
    A_E = cs.linear.A2;
    b_E = cs.linear.b2;
  }
  const AffineMap map = build_affine_map(A_E, b_E, opt.compile.preprocess.rank_tol);
  const Vector& yp = map.y_p;

  Matrix A_I = Matrix::Zero(1, k);
  Vector b_I = Vector::Ones(1);
  if (cs.linear.has_inequalities()) {
    A_I = cs.linear.A1;
    b_I = cs.linear.b1;
    const Vector margin = b_I - A_I * yp;
    Index i = 0;
    if (margin.minCoeff(&i) <= opt.strict_tol) {
      throw violated("b1 > 0", "row " + std::to_string(i) + " margin " + std::to_string(margin[i]));
    }
  }
  for (std::size_t i = 0; i < cs.quadratics.size(); ++i) {
    const double g = evaluate_quadratic(cs.quadratics[i], yp);
    if (!(g < -opt.strict_tol)) throw violated("r_i < 0", "i = " + std::to_string(i) + ", value " + std::to_string(g));
  }
  for (std::size_t j = 0; j < cs.socs.size(); ++j) {
    const double h = evaluate_soc(cs.socs[j], yp);
    if (!(h < -opt.strict_tol)) {
      throw violated("d_j > ||s_j||", "j = " + std::to_string(j) + ", value " + std::to_string(h));
    }
  }
  if (cs.lmi) {
    const double lam = evaluate_lmi_min_eig(*cs.lmi, yp);
    if (!(lam > opt.strict_tol)) throw violated("F_k > 0", "min eigenvalue " + std::to_string(lam));
  }

  ProjectedConstraints pc = project_constraints(cs, map, A_I, b_I);
  const Vector z0 = Vector::Zero(map.n);
  const double margin = normalized_min_margin(pc, z0);
  auto plan = detail::finish_plan(cs, map, A_E, b_E, std::move(pc), z0, margin, opt.compile);
  plan.parametric = true;
  plan.source_hash = hash;
  return plan;
}

}  // namespace rayen
