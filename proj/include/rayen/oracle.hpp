#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "rayen/constraint_model.hpp"
#include "rayen/mapper.hpp"
#include "rayen/plan.hpp"
#include "rayen/rng.hpp"

namespace rayen {

struct BisectionOptions {
  double tol = 1e-12;       ///< relative width of the final bracket
  double horizon = 1e9;     ///< feasible at this step length means unbounded
  double member_tol = 1e-12;
  int max_iterations = 400;
};

/// sup{lambda <= horizon | f(z + lambda d) in Y}, searched by doubling and
/// then bisection; +infinity when the horizon itself is feasible. The
/// returned value is the feasible end of the final bracket.
inline double ray_extent(const ProjectionPlan& plan, const ConstraintSet& cs, const Vector& z, const Vector& d,
                         const BisectionOptions& opt = {}, FamilyMask mask = FamilyMask::all()) {
  auto feasible = [&](double lambda) {
    return is_member(cs, plan.map.lift(z + lambda * d), opt.member_tol, mask).member;
  };
  double lo = 0.0;
  double hi = 1.0;
  while (feasible(hi)) {
    lo = hi;
    if (hi >= opt.horizon) return std::numeric_limits<double>::infinity();
    hi = std::min(2.0 * hi, opt.horizon);
  }
  for (int it = 0; it < opt.max_iterations && hi - lo > opt.tol * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    (feasible(mid) ? lo : hi) = mid;
  }
  return lo;
}

/// Inverse ray distance from z0 along unit vbar by search: 1 / lambda*, or 0
/// when the ray stays feasible out to the horizon.
inline double kappa_bisection(const ProjectionPlan& plan, const ConstraintSet& cs, const Vector& vbar,
                              const BisectionOptions& opt = {}, FamilyMask mask = FamilyMask::all()) {
  const double lambda = ray_extent(plan, cs, plan.z0, vbar, opt, mask);
  if (std::isinf(lambda)) return 0.0;
  if (!(lambda > 0.0)) return std::numeric_limits<double>::infinity();
  return 1.0 / lambda;
}

struct SamplerOptions {
  int burn_in = 100;
  double max_step = 1e3;  ///< chord half-length cap along unbounded directions
  double member_tol = 1e-10;
};

/// Hit-and-run in z-space started at z0. Chords come from ray_extent, so
/// no analytic kappa enters the samples. Returns count x k.
inline Matrix sample_feasible(const ProjectionPlan& plan, const ConstraintSet& cs, Index count, std::uint64_t seed,
                              const SamplerOptions& opt = {}) {
  Matrix out(count, plan.k);
  if (plan.n == 0) {
    for (Index i = 0; i < count; ++i) out.row(i) = plan.y0.transpose();
    return out;
  }
  CounterRng rng(seed);
  BisectionOptions bo;
  bo.tol = 1e-10;
  bo.horizon = opt.max_step;
  Vector z = plan.z0;
  Index filled = 0;
  int rejected = 0;
  for (long step = 0; filled < count; ++step) {
    const Vector d = rng.unit_vector(plan.n);
    const double fwd = std::min(ray_extent(plan, cs, z, d, bo), opt.max_step);
    const double bwd = std::min(ray_extent(plan, cs, z, Vector(-d), bo), opt.max_step);
    const Vector cand = z + rng.uniform(-bwd, fwd) * d;
    const Vector y = plan.map.lift(cand);
    if (!is_member(cs, y, opt.member_tol).member) {
      if (++rejected > 10000) throw Error(Stage::mapper, ErrorCode::invalid_input, "sample_feasible: no feasible chord");
      continue;
    }
    rejected = 0;
    z = cand;
    if (step >= opt.burn_in) out.row(filled++) = y.transpose();
  }
  return out;
}

enum class FactoryKind { linear, quadratic, soc, lmi, mixed };

inline const char* to_string(FactoryKind k) {
  switch (k) {
    case FactoryKind::linear: return "linear";
    case FactoryKind::quadratic: return "quadratic";
    case FactoryKind::soc: return "soc";
    case FactoryKind::lmi: return "lmi";
    case FactoryKind::mixed: return "mixed";
  }
  return "?";
}

struct FactorySizes {
  Index linear_rows = 0;  ///< r
  Index quadratics = 0;   ///< eta
  Index socs = 0;         ///< mu
  Index soc_rows = 0;     ///< rows of each M
  Index lmi_size = 0;     ///< r_F
};

/// Sizes used when a count is left at 0.
inline FactorySizes default_sizes(FactoryKind kind, Index k) {
  FactorySizes s;
  const bool mixed = kind == FactoryKind::mixed;
  if (kind == FactoryKind::linear || mixed) s.linear_rows = 4 * k;
  if (kind == FactoryKind::quadratic || mixed) s.quadratics = mixed ? 2 : 3;
  if (kind == FactoryKind::soc || mixed) {
    s.socs = mixed ? 2 : 3;
    s.soc_rows = std::max<Index>(1, k);
  }
  if (kind == FactoryKind::lmi || mixed) s.lmi_size = std::max<Index>(2, k);
  return s;
}

/// Random dense set with a known interior point y_c (the origin when
/// center_at_origin): every family is built to hold strictly at y_c.
inline ConstraintSet random_constraint_factory(FactoryKind kind, Index k, FactorySizes sizes, std::uint64_t seed,
                                               bool center_at_origin = false) {
  if (k < 1) throw Error(Stage::model, ErrorCode::invalid_input, "factory: k must be positive");
  const FactorySizes dflt = default_sizes(kind, k);
  const bool mixed = kind == FactoryKind::mixed;
  auto want = [&](FactoryKind f, Index given, Index fallback) -> Index {
    if (kind != f && !mixed) return 0;
    return given > 0 ? given : fallback;
  };
  const Index r = want(FactoryKind::linear, sizes.linear_rows, dflt.linear_rows);
  const Index eta = want(FactoryKind::quadratic, sizes.quadratics, dflt.quadratics);
  const Index mu = want(FactoryKind::soc, sizes.socs, dflt.socs);
  const Index rM = sizes.soc_rows > 0 ? sizes.soc_rows : std::max<Index>(1, k);
  const Index rF = want(FactoryKind::lmi, sizes.lmi_size, dflt.lmi_size);

  CounterRng rng(seed);
  ConstraintSet cs;
  cs.k = k;
  const Vector yc = center_at_origin ? Vector::Zero(k) : Vector(0.5 * rng.normal_vector(k));
  const double sk = 1.0 / std::sqrt(static_cast<double>(k));

  if (r > 0) {
    cs.linear.A1 = rng.normal_matrix(r, k);
    cs.linear.b1.resize(r);
    for (Index i = 0; i < r; ++i) cs.linear.b1[i] = cs.linear.A1.row(i).dot(yc) + rng.uniform(0.5, 1.5);
  }
  for (Index i = 0; i < eta; ++i) {
    QuadraticConstraint q;
    const Matrix V = sk * rng.normal_matrix(k, k);
    q.P = V.transpose() * V;
    q.P = 0.5 * (q.P + q.P.transpose());
    q.q = 0.5 * rng.normal_vector(k);
    q.r = -(0.5 * yc.dot(q.P * yc) + q.q.dot(yc)) - rng.uniform(0.5, 1.5);
    cs.quadratics.push_back(std::move(q));
  }
  for (Index j = 0; j < mu; ++j) {
    SocConstraint s;
    s.M = sk * rng.normal_matrix(rM, k);
    s.s = rng.normal_vector(rM);
    s.c = 0.3 * sk * rng.normal_vector(k);
    s.d = (s.M * yc + s.s).norm() - s.c.dot(yc) + rng.uniform(0.5, 1.5);
    cs.socs.push_back(std::move(s));
  }
  if (rF > 0) {
    LmiConstraint L;
    const double sf = 1.0 / std::sqrt(static_cast<double>(rF * k));
    Matrix Fk = Matrix::Zero(rF, rF);
    for (Index a = 0; a < k; ++a) {
      const Matrix Delta = rng.normal_matrix(rF, rF);
      Matrix F = sf * 0.5 * (Delta + Delta.transpose());
      Fk -= yc[a] * F;
      L.F.push_back(std::move(F));
    }
    const Matrix Gamma = rng.normal_matrix(rF, rF) / std::sqrt(static_cast<double>(rF));
    Fk += Gamma.transpose() * Gamma + rng.uniform(0.5, 1.5) * Matrix::Identity(rF, rF);
    L.F.push_back(0.5 * (Fk + Fk.transpose()));
    cs.lmi = std::move(L);
  }
  return cs;
}

struct VerifyOptions {
  double half_width = 2.5;     ///< v drawn uniformly from [-h, h]^n
  Index kappa_directions = 200;
  Index roundtrip_points = 200;
  double member_tol = 1e-9;
  double kappa_tol = 1e-7;     ///< |analytic - bisection| <= max(tol, tol * kappa)
  double roundtrip_tol = 1e-8;
};

struct VerificationReport {
  Index samples = 0;
  double feasible_fraction = 0.0;
  double worst_violation = 0.0;
  /// per family: max |analytic - bisection| / max(1, kappa); -1 if absent
  std::array<double, 4> max_kappa_deviation{-1.0, -1.0, -1.0, -1.0};
  double roundtrip_max_error = 0.0;
  bool hash_match = false;
  bool plan_consistent = false;
  std::vector<std::string> notes;
  bool passed = false;
};

/// Membership sweep, per-family kappa against bisection, and invert/map
/// round trip on hit-and-run points.
inline VerificationReport verify_plan(const ProjectionPlan& plan, const ConstraintSet& cs, Index n_samples,
                                      std::uint64_t seed, const VerifyOptions& opt = {}) {
  VerificationReport rep;
  rep.samples = n_samples;
  rep.hash_match = plan.source_hash == source_hash(cs);
  if (!rep.hash_match) rep.notes.push_back("source hash mismatch: plan was compiled from a different set");
  if (cs.k != plan.k) {
    rep.notes.push_back("dimension mismatch between plan and constraint set");
    return rep;
  }

  const auto y0m = is_member(cs, plan.y0, opt.member_tol);
  rep.plan_consistent = y0m.member && (plan.y0 - plan.map.lift(plan.z0)).cwiseAbs().maxCoeff() <= 1e-12 *
                                                                                                     (1.0 + plan.y0.cwiseAbs().maxCoeff());
  if (!rep.plan_consistent) rep.notes.push_back("y0 is not a member of the set");

  CounterRng rng(seed);
  Index members = 0;
  for (Index i = 0; i < n_samples; ++i) {
    const Vector v = rng.uniform_vector(plan.n, -opt.half_width, opt.half_width);
    const auto res = map_single(plan, v);
    const auto m = is_member(cs, res.y, opt.member_tol);
    members += m.member ? 1 : 0;
    rep.worst_violation = std::max(rep.worst_violation, m.worst_violation);
  }
  rep.feasible_fraction = n_samples > 0 ? static_cast<double>(members) / static_cast<double>(n_samples) : 1.0;
  if (rep.feasible_fraction < 1.0) rep.notes.push_back("mapped points outside the set");

  bool kappa_ok = true;
  if (plan.n > 0) {
    const std::array<Family, 4> fams{Family::linear, Family::quadratic, Family::soc, Family::lmi};
    const std::array<bool, 4> present{cs.has_linear(), cs.has_quadratics(), cs.has_socs(), cs.has_lmi()};
    for (std::size_t f = 0; f < 4; ++f) {
      if (!present[f]) continue;
      double worst = 0.0;
      for (Index t = 0; t < opt.kappa_directions; ++t) {
        const Vector vbar = rng.unit_vector(plan.n);
        double analytic = 0.0;
        switch (fams[f]) {
          case Family::linear: analytic = kappa_linear(plan, vbar); break;
          case Family::quadratic: analytic = kappa_quadratic(plan, vbar); break;
          case Family::soc: analytic = kappa_soc(plan, vbar); break;
          case Family::lmi: analytic = kappa_lmi(plan, vbar); break;
        }
        const double oracle = kappa_bisection(plan, cs, vbar, {}, FamilyMask::only(fams[f]));
        const double dev = std::abs(analytic - oracle);
        if (dev > std::max(opt.kappa_tol, opt.kappa_tol * oracle)) kappa_ok = false;
        worst = std::max(worst, dev / std::max(1.0, oracle));
      }
      rep.max_kappa_deviation[f] = worst;
    }
  }
  if (!kappa_ok) rep.notes.push_back("analytic kappa disagrees with bisection");

  if (rep.plan_consistent && opt.roundtrip_points > 0) {
    try {
      const Matrix Y = sample_feasible(plan, cs, opt.roundtrip_points, seed ^ 0x9E3779B97F4A7C15ULL);
      for (Index i = 0; i < Y.rows(); ++i) {
        const Vector y = Y.row(i).transpose();
        const Vector back = map_single(plan, invert(plan, y)).y;
        rep.roundtrip_max_error = std::max(rep.roundtrip_max_error, (back - y).cwiseAbs().maxCoeff());
      }
    } catch (const Error& e) {
      rep.notes.push_back(std::string("round trip failed: ") + e.what());
      rep.roundtrip_max_error = std::numeric_limits<double>::infinity();
    }
    if (rep.roundtrip_max_error > opt.roundtrip_tol) rep.notes.push_back("invert/map round trip error too large");
  }

  rep.passed = rep.hash_match && rep.plan_consistent && rep.feasible_fraction == 1.0 && kappa_ok &&
               rep.roundtrip_max_error <= opt.roundtrip_tol;
  return rep;
}

}  // namespace rayen
