#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <thread>
#include <vector>

#include "rayen/constraint_model.hpp"
#include "rayen/dense_linalg.hpp"
#include "rayen/plan.hpp"

namespace rayen {

/// Inverse ray distances along one unit direction. All entries are >= 0 and
/// kappa is the largest of the four.
struct KappaBreakdown {
  double kappa_linear = 0.0;
  double kappa_quadratic = 0.0;
  double kappa_soc = 0.0;
  double kappa_lmi = 0.0;
  double kappa = 0.0;
  std::vector<double> per_quadratic;  ///< filled only on request
  std::vector<double> per_soc;
};

struct MapResult {
  Vector y;
  Vector z1;
  KappaBreakdown kappas;
  bool clipped = false;
};

inline double kappa_linear(const ProjectionPlan& plan, const Vector& vbar) {
  if (plan.D.rows() == 0 || plan.n == 0) return 0.0;
  return detail::relu((plan.D * vbar).maxCoeff());
}

namespace detail {

/// Nonnegative root of a k^2 + b k + c = 0 with a < 0 and c >= 0.
inline double quadratic_kappa(double a, double b, double c) {
  const auto roots = solve_scaled_quadratic(a, b, std::max(c, 0.0));
  return roots.count == 0 ? 0.0 : relu(roots.max_root());
}

inline double soc_kappa(const SocCache& s, const Vector& Wv, double phi_v, double* lo_root = nullptr) {
  const double alpha = s.u.squaredNorm() - s.e * s.e;
  const double beta = 2.0 * (s.u.dot(Wv) - s.e * phi_v);
  const double gamma = Wv.squaredNorm() - phi_v * phi_v;
  const auto roots = solve_scaled_quadratic(alpha, beta, gamma);
  if (lo_root) *lo_root = roots.count == 2 ? roots.roots[0] : -std::numeric_limits<double>::infinity();
  return roots.count == 0 ? -std::numeric_limits<double>::infinity() : roots.max_root();
}

/// R^-1 S R^-T for the direction's S, symmetrized.
inline Matrix lmi_conjugated(const LmiCache& L, const Vector& vbar) {
  const Vector flat = L.basis_flat * vbar;
  Matrix C = Eigen::Map<const Matrix>(flat.data(), L.r, L.r);
  if (!L.conjugated) {
    const auto R = L.R.triangularView<Eigen::Lower>();
    Matrix X = R.solve(C);
    C = R.solve(X.transpose().eval());
  }
  return 0.5 * (C + C.transpose());
}

}  // namespace detail

inline double kappa_quadratic(const ProjectionPlan& plan, const Vector& vbar, std::vector<double>* per = nullptr) {
  double best = 0.0;
  if (per) per->clear();
  for (const auto& q : plan.quadratics) {
    const double b = q.w.dot(vbar);
    const double c = 0.5 * vbar.dot(q.P * vbar);
    const double kq = detail::quadratic_kappa(q.a, b, c);
    if (per) per->push_back(kq);
    best = std::max(best, kq);
  }
  return best;
}

/// relu of the largest real root over all cones; cones with no real root
/// contribute nothing.
inline double kappa_soc(const ProjectionPlan& plan, const Vector& vbar, std::vector<double>* per = nullptr) {
  double best = 0.0;
  if (per) per->clear();
  for (const auto& s : plan.socs) {
    const Vector Wv = s.W * vbar;
    const double ks = detail::soc_kappa(s, Wv, s.phi.dot(vbar));
    if (per) per->push_back(detail::relu(ks));
    best = std::max(best, ks);
  }
  return detail::relu(best);
}

inline double kappa_lmi(const ProjectionPlan& plan, const Vector& vbar) {
  if (!plan.lmi) return 0.0;
  const Matrix C = detail::lmi_conjugated(*plan.lmi, vbar);
  return detail::relu(sym_eig_max(-C, plan.mapper.eig).value);
}

inline KappaBreakdown compute_kappas(const ProjectionPlan& plan, const Vector& vbar, bool per_constraint = false) {
  KappaBreakdown kb;
  kb.kappa_linear = kappa_linear(plan, vbar);
  kb.kappa_quadratic = kappa_quadratic(plan, vbar, per_constraint ? &kb.per_quadratic : nullptr);
  kb.kappa_soc = kappa_soc(plan, vbar, per_constraint ? &kb.per_soc : nullptr);
  kb.kappa_lmi = kappa_lmi(plan, vbar);
  kb.kappa = std::max({kb.kappa_linear, kb.kappa_quadratic, kb.kappa_soc, kb.kappa_lmi});
  return kb;
}

namespace detail {

/// ||v||, rescaling only when the plain sum of squares over- or underflows.
inline double guarded_norm(const Vector& v) {
  const double norm = v.norm();
  if (std::isfinite(norm) && norm > 1e-150) return norm;
  return v.stableNorm();
}

inline constexpr double zero_norm = 1e-300;

}  // namespace detail

inline MapResult map_single(const ProjectionPlan& plan, const Vector& v, bool per_constraint = false) {
  detail::require_length(v, plan.n, Stage::mapper, "map_single");
  if (!v.allFinite()) throw Error(Stage::mapper, ErrorCode::invalid_input, "map_single: v has non-finite entries");
  MapResult out;
  const double norm = detail::guarded_norm(v);
  if (plan.n == 0 || !(norm >= detail::zero_norm)) {
    out.z1 = plan.z0;
    out.y = plan.y0;
    return out;
  }
  const Vector vbar = v / norm;
  out.kappas = compute_kappas(plan, vbar, per_constraint);
  const double kappa = out.kappas.kappa;
  if (kappa <= plan.mapper.kappa_zero_tol || norm <= 1.0 / kappa) {
    out.z1 = plan.z0 + v;
  } else {
    out.z1 = plan.z0 + (1.0 / kappa) * vbar;
    out.clipped = true;
  }
  out.y = plan.map.lift(out.z1);
  return out;
}

inline void require_same_source(const ProjectionPlan& plan, const ConstraintSet& cs) {
  if (plan.source_hash != source_hash(cs)) {
    throw Error(Stage::mapper, ErrorCode::hash_mismatch, "plan was not compiled from this constraint set");
  }
}

/// map_single after checking the plan's source hash against cs.
inline MapResult map_single_checked(const ProjectionPlan& plan, const ConstraintSet& cs, const Vector& v) {
  require_same_source(plan, cs);
  return map_single(plan, v);
}

enum class BatchKernel {
  rowwise,  ///< map_single per row; bitwise identical to it
  blocked,  ///< matrix-matrix products over row blocks; equal up to rounding
};

struct BatchOptions {
  int threads = 1;
  BatchKernel kernel = BatchKernel::rowwise;
  Index block = 256;
};

/// Rows of Y are the mapped points, rows of Z1 the z-space points.
struct BatchOutput {
  Matrix Y;
  Matrix Z1;
  Vector kappa;
  std::vector<unsigned char> clipped;
};

namespace detail {

template <class Fn>
void parallel_ranges(Index rows, int threads, Fn&& fn) {
  const Index workers = std::max<Index>(1, std::min<Index>(threads, rows));
  if (workers == 1) {
    fn(Index{0}, rows);
    return;
  }
  std::vector<std::thread> pool;
  const Index chunk = (rows + workers - 1) / workers;
  for (Index w = 0; w < workers; ++w) {
    const Index lo = w * chunk;
    const Index hi = std::min(rows, lo + chunk);
    if (lo < hi) pool.emplace_back([&fn, lo, hi] { fn(lo, hi); });
  }
  for (auto& t : pool) t.join();
}

inline void map_block(const ProjectionPlan& plan, const Matrix& V, Index lo, Index hi, BatchOutput& out) {
  const Index b = hi - lo;
  const Index n = plan.n;
  Matrix Vt = V.middleRows(lo, b).transpose();  // n x b
  Vector norms(b);
  std::vector<unsigned char> zero(static_cast<std::size_t>(b), 0);
  for (Index j = 0; j < b; ++j) {
    norms[j] = guarded_norm(Vt.col(j));
    if (!(norms[j] >= zero_norm)) {
      zero[static_cast<std::size_t>(j)] = 1;
      Vt.col(j).setZero();
    } else {
      Vt.col(j) /= norms[j];
    }
  }
  Vector kappa = Vector::Zero(b);
  if (plan.D.rows() > 0) {
    const Matrix DV = plan.D * Vt;
    kappa = DV.colwise().maxCoeff().transpose().cwiseMax(0.0);
  }
  for (const auto& q : plan.quadratics) {
    const Matrix PV = q.P * Vt;
    const Vector bq = (q.w.transpose() * Vt).transpose();
    for (Index j = 0; j < b; ++j) {
      const double c = 0.5 * Vt.col(j).dot(PV.col(j));
      kappa[j] = std::max(kappa[j], quadratic_kappa(q.a, bq[j], c));
    }
  }
  for (const auto& s : plan.socs) {
    const Matrix WV = s.W * Vt;
    const Vector pv = (s.phi.transpose() * Vt).transpose();
    for (Index j = 0; j < b; ++j) kappa[j] = std::max(kappa[j], soc_kappa(s, WV.col(j), pv[j]));
  }
  if (plan.lmi) {
    const auto& L = *plan.lmi;
    const Matrix flat = L.basis_flat * Vt;
    for (Index j = 0; j < b; ++j) {
      Matrix C = Eigen::Map<const Matrix>(flat.col(j).data(), L.r, L.r);
      if (!L.conjugated) {
        const auto R = L.R.triangularView<Eigen::Lower>();
        Matrix X = R.solve(C);
        C = R.solve(X.transpose().eval());
      }
      C = -0.5 * (C + C.transpose());
      kappa[j] = std::max(kappa[j], sym_eig_max(C, plan.mapper.eig).value);
    }
  }
  Matrix Z(n, b);
  for (Index j = 0; j < b; ++j) {
    const auto jj = static_cast<std::size_t>(j);
    const double kj = kappa[j];
    out.clipped[static_cast<std::size_t>(lo) + jj] = 0;
    if (zero[jj]) {
      Z.col(j) = plan.z0;
      kappa[j] = 0.0;
    } else if (kj <= plan.mapper.kappa_zero_tol || norms[j] <= 1.0 / kj) {
      Z.col(j) = plan.z0 + V.row(lo + j).transpose();
    } else {
      Z.col(j) = plan.z0 + (1.0 / kj) * Vt.col(j);
      out.clipped[static_cast<std::size_t>(lo) + jj] = 1;
    }
  }
  out.Z1.middleRows(lo, b) = Z.transpose();
  out.Y.middleRows(lo, b) = plan.map.apply(Z).transpose().rowwise() + plan.map.y_p.transpose();
  out.kappa.segment(lo, b) = kappa;
}

}  // namespace detail

/// Maps every row of V (B x n).
inline BatchOutput map_batch_matrix(const ProjectionPlan& plan, const Matrix& V, const BatchOptions& opt = {}) {
  if (V.cols() != plan.n) {
    throw Error(Stage::mapper, ErrorCode::dimension_mismatch,
                "map_batch: expected " + std::to_string(plan.n) + " columns, got " + std::to_string(V.cols()));
  }
  if (!V.allFinite()) throw Error(Stage::mapper, ErrorCode::invalid_input, "map_batch: non-finite entries");
  const Index B = V.rows();
  BatchOutput out;
  out.Y.resize(B, plan.k);
  out.Z1.resize(B, plan.n);
  out.kappa.resize(B);
  out.clipped.assign(static_cast<std::size_t>(B), 0);
  if (opt.kernel == BatchKernel::rowwise || plan.n == 0) {
    detail::parallel_ranges(B, opt.threads, [&](Index lo, Index hi) {
      for (Index i = lo; i < hi; ++i) {
        auto r = map_single(plan, V.row(i).transpose());
        out.Y.row(i) = r.y.transpose();
        out.Z1.row(i) = r.z1.transpose();
        out.kappa[i] = r.kappas.kappa;
        out.clipped[static_cast<std::size_t>(i)] = r.clipped ? 1 : 0;
      }
    });
    return out;
  }
  const Index block = std::max<Index>(1, opt.block);
  const Index nblocks = (B + block - 1) / block;
  detail::parallel_ranges(nblocks, opt.threads, [&](Index lo, Index hi) {
    for (Index t = lo; t < hi; ++t) detail::map_block(plan, V, t * block, std::min(B, (t + 1) * block), out);
  });
  return out;
}

/// Row-by-row results, identical to calling map_single on each row.
inline std::vector<MapResult> map_batch(const ProjectionPlan& plan, const Matrix& V, int threads = 1) {
  if (V.cols() != plan.n) {
    throw Error(Stage::mapper, ErrorCode::dimension_mismatch,
                "map_batch: expected " + std::to_string(plan.n) + " columns, got " + std::to_string(V.cols()));
  }
  std::vector<MapResult> out(static_cast<std::size_t>(V.rows()));
  detail::parallel_ranges(V.rows(), threads, [&](Index lo, Index hi) {
    for (Index i = lo; i < hi; ++i) out[static_cast<std::size_t>(i)] = map_single(plan, V.row(i).transpose());
  });
  return out;
}

enum class JvpStatus { ok, at_kink };

struct JvpResult {
  JvpStatus status = JvpStatus::ok;
  Vector dy;
  std::string reason;  ///< why the probe was refused, when at a kink
};

/// Directional derivative of y(v) along dv on the active smooth branch.
/// Refuses (at_kink) when the clip decision, the arg-max constraint or the
/// top LMI eigenvalue is not separated by more than kink_guard.
inline JvpResult jvp(const ProjectionPlan& plan, const Vector& v, const Vector& dv, double kink_guard = 1e-9) {
  detail::require_length(v, plan.n, Stage::mapper, "jvp");
  detail::require_length(dv, plan.n, Stage::mapper, "jvp");
  JvpResult out;
  const double norm = detail::guarded_norm(v);
  if (!(norm >= detail::zero_norm)) {
    throw Error(Stage::mapper, ErrorCode::invalid_input, "jvp: v must be nonzero");
  }
  auto kink = [&](std::string why) {
    out.status = JvpStatus::at_kink;
    out.reason = std::move(why);
    return out;
  };
  const Vector vbar = v / norm;

  // every candidate for kappa: linear rows, quadratic roots, SOC roots, LMI
  enum class Src { linear, quadratic, soc, lmi };
  struct Cand {
    double value;
    Src src;
    Index idx;
  };
  std::vector<Cand> cands;
  if (plan.D.rows() > 0) {
    const Vector Dv = plan.D * vbar;
    for (Index i = 0; i < Dv.size(); ++i) cands.push_back({Dv[i], Src::linear, i});
  }
  for (std::size_t i = 0; i < plan.quadratics.size(); ++i) {
    const auto& q = plan.quadratics[i];
    const double kq = detail::quadratic_kappa(q.a, q.w.dot(vbar), 0.5 * vbar.dot(q.P * vbar));
    cands.push_back({kq, Src::quadratic, static_cast<Index>(i)});
  }
  for (std::size_t j = 0; j < plan.socs.size(); ++j) {
    const auto& s = plan.socs[j];
    double lo_root = 0.0;
    const double hi_root = detail::soc_kappa(s, s.W * vbar, s.phi.dot(vbar), &lo_root);
    if (std::isfinite(hi_root)) cands.push_back({hi_root, Src::soc, static_cast<Index>(j)});
    if (std::isfinite(lo_root)) cands.push_back({lo_root, Src::soc, -1});
  }
  Matrix lmi_C;
  Vector lmi_x;
  if (plan.lmi) {
    lmi_C = detail::lmi_conjugated(*plan.lmi, vbar);
    Eigen::SelfAdjointEigenSolver<Matrix> es(-lmi_C);
    const Index r = plan.lmi->r;
    if (r >= 2 && es.eigenvalues()[r - 1] - es.eigenvalues()[r - 2] <= kink_guard) {
      // only matters when the LMI is the active branch; checked below
      lmi_x.resize(0);
    } else {
      lmi_x = es.eigenvectors().col(r - 1);
    }
    cands.push_back({es.eigenvalues()[r - 1], Src::lmi, 0});
  }
  double kappa = 0.0;
  std::size_t top = cands.size();
  for (std::size_t t = 0; t < cands.size(); ++t) {
    if (cands[t].value > kappa) {
      kappa = cands[t].value;
      top = t;
    }
  }

  const bool unbounded = kappa <= plan.mapper.kappa_zero_tol;
  if (unbounded || norm < 1.0 / kappa) {
    if (!unbounded && std::abs(norm - 1.0 / kappa) <= kink_guard) return kink("clip boundary");
    out.dy = plan.map.apply(dv);
    return out;
  }
  if (std::abs(norm - 1.0 / kappa) <= kink_guard) return kink("clip boundary");
  for (std::size_t t = 0; t < cands.size(); ++t) {
    if (t != top && kappa - cands[t].value <= kink_guard) return kink("tied active constraints");
  }
  const auto& act = cands[top];
  if (act.src == Src::soc && act.idx < 0) return kink("spurious SOC root active");

  const Vector dvbar = (dv - vbar * vbar.dot(dv)) / norm;
  double dkappa = 0.0;
  switch (act.src) {
    case Src::linear:
      dkappa = plan.D.row(act.idx).dot(dvbar);
      break;
    case Src::quadratic: {
      const auto& q = plan.quadratics[static_cast<std::size_t>(act.idx)];
      const double denom = 2.0 * q.a * kappa + q.w.dot(vbar);
      dkappa = -(kappa * q.w.dot(dvbar) + vbar.dot(q.P * dvbar)) / denom;
      break;
    }
    case Src::soc: {
      const auto& s = plan.socs[static_cast<std::size_t>(act.idx)];
      const Vector Wv = s.W * vbar;
      const Vector Wd = s.W * dvbar;
      const double pv = s.phi.dot(vbar);
      const double pd = s.phi.dot(dvbar);
      const double alpha = s.u.squaredNorm() - s.e * s.e;
      const double beta = 2.0 * (s.u.dot(Wv) - s.e * pv);
      const double dbeta = 2.0 * (s.u.dot(Wd) - s.e * pd);
      const double dgamma = 2.0 * (Wv.dot(Wd) - pv * pd);
      dkappa = -(dbeta * kappa + dgamma) / (2.0 * alpha * kappa + beta);
      break;
    }
    case Src::lmi: {
      if (lmi_x.size() == 0) return kink("repeated top LMI eigenvalue");
      const Matrix dC = detail::lmi_conjugated(*plan.lmi, dvbar);
      dkappa = -lmi_x.dot(dC * lmi_x);
      break;
    }
  }
  const Vector dz = dvbar / kappa - vbar * (dkappa / (kappa * kappa));
  out.dy = plan.map.apply(dz);
  return out;
}

/// v with map_single(plan, v).y == y for feasible y in the affine hull.
inline Vector invert(const ProjectionPlan& plan, const Vector& y, double tol = 1e-8) {
  detail::require_length(y, plan.k, Stage::mapper, "invert");
  if (!plan.map.identity) {
    const double residual = (plan.A_E * y - plan.b_E).cwiseAbs().maxCoeff();
    if (!(residual <= tol * (1.0 + plan.b_E.cwiseAbs().maxCoeff()))) {
      throw Error(Stage::mapper, ErrorCode::invalid_input,
                  "invert: y is not in the affine hull (residual " + std::to_string(residual) + ")");
    }
  }
  return plan.map.coords(y) - plan.z0;
}

}  // namespace rayen
