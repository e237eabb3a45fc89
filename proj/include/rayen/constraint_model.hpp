#pragma once

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "rayen/core.hpp"

namespace rayen {

/// A1 y <= b1 and A2 y = b2. A block with zero rows is absent.
struct LinearConstraints {
  Matrix A1;
  Vector b1;
  Matrix A2;
  Vector b2;

  bool has_inequalities() const { return A1.rows() > 0; }
  bool has_equalities() const { return A2.rows() > 0; }
  bool empty() const { return !has_inequalities() && !has_equalities(); }
};

/// 1/2 y'Py + q'y + r <= 0 with P symmetric positive semidefinite.
struct QuadraticConstraint {
  Matrix P;
  Vector q;
  double r = 0.0;
};

/// ||M y + s|| - c'y - d <= 0.
struct SocConstraint {
  Matrix M;
  Vector s;
  Vector c;
  double d = 0.0;
};

/// y[0] F[0] + ... + y[k-1] F[k-1] + F[k] is positive semidefinite.
struct LmiConstraint {
  std::vector<Matrix> F;

  Index size() const { return F.empty() ? 0 : F.front().rows(); }
};

struct ConstraintSet {
  Index k = 0;
  LinearConstraints linear;
  std::vector<QuadraticConstraint> quadratics;
  std::vector<SocConstraint> socs;
  std::optional<LmiConstraint> lmi;

  bool has_linear() const { return !linear.empty(); }
  bool has_quadratics() const { return !quadratics.empty(); }
  bool has_socs() const { return !socs.empty(); }
  bool has_lmi() const { return lmi.has_value(); }
};

enum class Family { linear, quadratic, soc, lmi };

inline constexpr const char* to_string(Family f) {
  switch (f) {
    case Family::linear: return "linear";
    case Family::quadratic: return "quadratic";
    case Family::soc: return "soc";
    case Family::lmi: return "lmi";
  }
  return "?";
}

/// Selects which constraint families participate in a membership test.
struct FamilyMask {
  bool linear = true;
  bool quadratic = true;
  bool soc = true;
  bool lmi = true;

  static FamilyMask all() { return {}; }
  static FamilyMask only(Family f) {
    return {f == Family::linear, f == Family::quadratic, f == Family::soc, f == Family::lmi};
  }
};

namespace model_tol {
/// ||F - F'||_max <= symmetry_rel * (1 + ||F||_max)
inline constexpr double symmetry_rel = 1e-10;
/// lambda_min(P) >= -psd_rel * (1 + ||P||_max)
inline constexpr double psd_rel = 1e-8;
}  // namespace model_tol

namespace detail {

inline bool nearly_symmetric(const Matrix& F) {
  if (F.rows() != F.cols()) return false;
  const double asym = max_abs(F - F.transpose());
  return asym <= model_tol::symmetry_rel * (1.0 + max_abs(F));
}

inline Matrix symmetrized(const Matrix& F) { return 0.5 * (F + F.transpose()); }

inline double min_eigenvalue(const Matrix& S) {
  if (S.rows() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Matrix> es(S, Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

}  // namespace detail

struct LinearMargins {
  Vector ineq_margins;  ///< b1 - A1 y; nonnegative when satisfied
  Vector eq_residuals;  ///< A2 y - b2; zero when satisfied
};

inline LinearMargins evaluate_linear_margins(const ConstraintSet& cs, const Vector& y) {
  detail::require_length(y, cs.k, Stage::model, "evaluate_linear_margins");
  LinearMargins out;
  const auto& lc = cs.linear;
  out.ineq_margins = lc.has_inequalities() ? Vector(lc.b1 - lc.A1 * y) : Vector();
  out.eq_residuals = lc.has_equalities() ? Vector(lc.A2 * y - lc.b2) : Vector();
  return out;
}

/// g(y) = 1/2 y'Py + q'y + r.
inline double evaluate_quadratic(const QuadraticConstraint& qc, const Vector& y) {
  detail::require_length(y, qc.q.size(), Stage::model, "evaluate_quadratic");
  if (qc.P.rows() != y.size() || qc.P.cols() != y.size()) {
    throw Error(Stage::model, ErrorCode::dimension_mismatch, "evaluate_quadratic: P has wrong shape");
  }
  return 0.5 * y.dot(qc.P * y) + qc.q.dot(y) + qc.r;
}

/// h(y) = ||My + s|| - c'y - d.
inline double evaluate_soc(const SocConstraint& sc, const Vector& y) {
  detail::require_length(y, sc.c.size(), Stage::model, "evaluate_soc");
  if (sc.M.cols() != y.size() || sc.M.rows() != sc.s.size()) {
    throw Error(Stage::model, ErrorCode::dimension_mismatch, "evaluate_soc: M/s have wrong shape");
  }
  return (sc.M * y + sc.s).norm() - sc.c.dot(y) - sc.d;
}

/// W(y) = sum_a y[a] F[a] + F[k].
inline Matrix assemble_lmi(const LmiConstraint& lc, const Vector& y) {
  const auto k = static_cast<Index>(lc.F.size()) - 1;
  detail::require_length(y, k, Stage::model, "assemble_lmi");
  Matrix W = lc.F[static_cast<std::size_t>(k)];
  for (Index a = 0; a < k; ++a) W.noalias() += y[a] * lc.F[static_cast<std::size_t>(a)];
  return W;
}

/// lambda_min(W(y)); nonnegative when satisfied.
inline double evaluate_lmi_min_eig(const LmiConstraint& lc, const Vector& y) {
  Matrix W = assemble_lmi(lc, y);
  if (!detail::nearly_symmetric(W)) {
    throw Error(Stage::model, ErrorCode::not_symmetric, "evaluate_lmi_min_eig: assembled W is not symmetric");
  }
  return detail::min_eigenvalue(detail::symmetrized(W));
}

struct Membership {
  bool member = false;
  double worst_violation = 0.0;
  double linear = 0.0;
  double quadratic = 0.0;
  double soc = 0.0;
  double lmi = 0.0;
};

inline Membership is_member(const ConstraintSet& cs, const Vector& y, double tol,
                            FamilyMask mask = FamilyMask::all()) {
  if (!(tol >= 0.0)) throw Error(Stage::model, ErrorCode::invalid_input, "is_member: tol must be >= 0");
  detail::require_length(y, cs.k, Stage::model, "is_member");
  Membership m;
  if (mask.linear && cs.has_linear()) {
    const auto lm = evaluate_linear_margins(cs, y);
    if (lm.ineq_margins.size() > 0) m.linear = std::max(m.linear, detail::relu(-lm.ineq_margins.minCoeff()));
    if (lm.eq_residuals.size() > 0) m.linear = std::max(m.linear, lm.eq_residuals.cwiseAbs().maxCoeff());
  }
  if (mask.quadratic) {
    for (const auto& q : cs.quadratics) m.quadratic = std::max(m.quadratic, detail::relu(evaluate_quadratic(q, y)));
  }
  if (mask.soc) {
    for (const auto& s : cs.socs) m.soc = std::max(m.soc, detail::relu(evaluate_soc(s, y)));
  }
  if (mask.lmi && cs.lmi) m.lmi = detail::relu(-evaluate_lmi_min_eig(*cs.lmi, y));
  m.worst_violation = std::max({m.linear, m.quadratic, m.soc, m.lmi});
  // NaN never counts as a member
  m.member = m.worst_violation <= tol;
  if (!y.allFinite()) {
    m.member = false;
    m.worst_violation = std::numeric_limits<double>::infinity();
  }
  return m;
}

struct ValidationCheck {
  std::string name;
  bool passed = true;
  double measured = 0.0;
  std::string detail;
};

struct ValidationReport {
  std::vector<ValidationCheck> checks;

  bool passed() const {
    return std::all_of(checks.begin(), checks.end(), [](const auto& c) { return c.passed; });
  }

  std::string failures() const {
    std::string out;
    for (const auto& c : checks) {
      if (c.passed) continue;
      if (!out.empty()) out += "; ";
      out += c.name + (c.detail.empty() ? "" : " (" + c.detail + ")");
    }
    return out;
  }
};

inline ValidationReport validate_constraint_set(const ConstraintSet& cs) {
  ValidationReport rep;
  auto add = [&](std::string name, bool ok, double measured = 0.0, std::string detail = {}) {
    rep.checks.push_back({std::move(name), ok, measured, std::move(detail)});
  };
  const Index k = cs.k;
  add("dimension.k_positive", k >= 1, static_cast<double>(k));
  add("families.nonempty", cs.has_linear() || cs.has_quadratics() || cs.has_socs() || cs.has_lmi());

  const auto& lc = cs.linear;
  if (lc.has_inequalities() || lc.b1.size() > 0) {
    add("linear.A1_shape", lc.A1.cols() == k && lc.A1.rows() == lc.b1.size());
  }
  if (lc.has_equalities() || lc.b2.size() > 0) {
    add("linear.A2_shape", lc.A2.cols() == k && lc.A2.rows() == lc.b2.size());
  }
  bool finite = lc.A1.allFinite() && lc.b1.allFinite() && lc.A2.allFinite() && lc.b2.allFinite();

  for (std::size_t i = 0; i < cs.quadratics.size(); ++i) {
    const auto& q = cs.quadratics[i];
    const std::string tag = "quadratic[" + std::to_string(i) + "]";
    const bool shape = q.P.rows() == k && q.P.cols() == k && q.q.size() == k;
    add(tag + ".shape", shape);
    finite = finite && q.P.allFinite() && q.q.allFinite() && std::isfinite(q.r);
    if (!shape) continue;
    const double asym = detail::max_abs(q.P - q.P.transpose());
    const bool sym = detail::nearly_symmetric(q.P);
    add(tag + ".symmetric", sym, asym);
    if (sym && q.P.allFinite()) {
      const double lmin = detail::min_eigenvalue(detail::symmetrized(q.P));
      const double floor = -model_tol::psd_rel * (1.0 + detail::max_abs(q.P));
      add(tag + ".psd", lmin >= floor, lmin, "min eigenvalue " + std::to_string(lmin));
    }
  }
  for (std::size_t j = 0; j < cs.socs.size(); ++j) {
    const auto& s = cs.socs[j];
    const std::string tag = "soc[" + std::to_string(j) + "]";
    add(tag + ".shape", s.M.cols() == k && s.M.rows() == s.s.size() && s.c.size() == k && s.M.rows() >= 1);
    finite = finite && s.M.allFinite() && s.s.allFinite() && s.c.allFinite() && std::isfinite(s.d);
  }
  if (cs.lmi) {
    const auto& F = cs.lmi->F;
    add("lmi.count", static_cast<Index>(F.size()) == k + 1, static_cast<double>(F.size()),
        "expected " + std::to_string(k + 1) + " matrices");
    const Index r = cs.lmi->size();
    bool square = r >= 1;
    for (const auto& m : F) square = square && m.rows() == r && m.cols() == r;
    add("lmi.square", square);
    if (square) {
      double worst = 0.0;
      bool sym = true;
      for (const auto& m : F) {
        worst = std::max(worst, detail::max_abs(m - m.transpose()));
        sym = sym && detail::nearly_symmetric(m);
        finite = finite && m.allFinite();
      }
      add("lmi.symmetric", sym, worst);
    }
  }
  add("values.finite", finite);
  return rep;
}

/// Copy with every P and F replaced by its symmetric part. Callers validate first.
inline ConstraintSet symmetrized_copy(const ConstraintSet& cs) {
  ConstraintSet out = cs;
  for (auto& q : out.quadratics) q.P = detail::symmetrized(q.P);
  if (out.lmi)
    for (auto& F : out.lmi->F) F = detail::symmetrized(F);
  return out;
}

/// FNV-1a over shapes and the bit patterns of every stored number.
inline std::uint64_t source_hash(const ConstraintSet& cs) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto byte = [&](unsigned char b) {
    h ^= b;
    h *= 0x100000001b3ULL;
  };
  auto u64 = [&](std::uint64_t x) {
    for (int i = 0; i < 8; ++i) byte(static_cast<unsigned char>(x >> (8 * i)));
  };
  auto num = [&](double x) {
    if (x == 0.0) x = 0.0;  // fold -0
    std::uint64_t bits;
    std::memcpy(&bits, &x, sizeof bits);
    u64(bits);
  };
  auto mat = [&](const Matrix& m) {
    u64(static_cast<std::uint64_t>(m.rows()));
    u64(static_cast<std::uint64_t>(m.cols()));
    for (Index i = 0; i < m.rows(); ++i)
      for (Index j = 0; j < m.cols(); ++j) num(m(i, j));
  };
  auto vec = [&](const Vector& v) {
    u64(static_cast<std::uint64_t>(v.size()));
    for (Index i = 0; i < v.size(); ++i) num(v[i]);
  };
  u64(static_cast<std::uint64_t>(cs.k));
  mat(cs.linear.A1);
  vec(cs.linear.b1);
  mat(cs.linear.A2);
  vec(cs.linear.b2);
  u64(cs.quadratics.size());
  for (const auto& q : cs.quadratics) {
    mat(q.P);
    vec(q.q);
    num(q.r);
  }
  u64(cs.socs.size());
  for (const auto& s : cs.socs) {
    mat(s.M);
    vec(s.s);
    vec(s.c);
    num(s.d);
  }
  u64(cs.lmi ? cs.lmi->F.size() : 0);
  if (cs.lmi)
    for (const auto& F : cs.lmi->F) mat(F);
  return h;
}

}  // namespace rayen
