#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "rayen/lp_solver.hpp"
#include "rayen/plan.hpp"

namespace rayen {

/// Every constraint family re-expressed over z, where y = N z + y_p.
struct ProjectedConstraints {
  struct Quadratic {
    Matrix P;  ///< N'PN
    Vector w;  ///< N'(P y_p + q)
    double a = 0.0;  ///< g(y_p)
    double scale = 1.0;  ///< 1 + ||P||_max
  };
  struct Soc {
    Matrix W;  ///< M N
    Vector u;  ///< M y_p + s
    Vector phi;  ///< N'c
    double e = 0.0;  ///< c'y_p + d
  };
  struct Lmi {
    Index r = 0;
    Matrix H;           ///< W(y_p)
    Matrix basis_flat;  ///< column b = vec(sum_a N[a,b] F_a)
    double scale = 1.0; ///< 1 + ||F_k||_max
  };

  Index n = 0;
  Matrix A_p;
  Vector b_p;
  std::vector<Quadratic> quadratics;
  std::vector<Soc> socs;
  std::optional<Lmi> lmi;
};

struct InteriorOptions {
  double target_margin = 1.0;  ///< stop once every normalized margin reaches this
  double min_margin = 1e-6;    ///< smallest acceptable normalized margin
  double initial_temperature = 0.1;
  double final_temperature = 1e-9;
  int max_iterations_per_temperature = 500;
};

struct InteriorPoint {
  Vector z0;
  double epsilon = 0.0;  ///< smallest normalized margin at z0
};

namespace detail {

/// Normalized margins over z and their log-sum-exp soft minimum.
/// Linear rows are scaled by their norm, quadratics by 1 + ||P||_max and the
/// LMI by 1 + ||F_k||_max; SOC margins are used as is.
class MarginModel {
 public:
  explicit MarginModel(const ProjectedConstraints& pc) : pc_(pc) {
    std::vector<Index> rows;
    for (Index i = 0; i < pc.A_p.rows(); ++i) {
      const double norm = pc.A_p.row(i).norm();
      if (norm > 0.0) {
        rows.push_back(i);
      } else {
        constant_margin_ = std::min(constant_margin_, pc.b_p[i]);
      }
    }
    An_.resize(static_cast<Index>(rows.size()), pc.n);
    bn_.resize(static_cast<Index>(rows.size()));
    for (std::size_t t = 0; t < rows.size(); ++t) {
      const double norm = pc.A_p.row(rows[t]).norm();
      An_.row(static_cast<Index>(t)) = pc.A_p.row(rows[t]) / norm;
      bn_[static_cast<Index>(t)] = pc.b_p[rows[t]] / norm;
    }
  }

  bool has_linear_rows() const { return An_.rows() > 0; }
  const Matrix& normalized_rows() const { return An_; }
  const Vector& normalized_rhs() const { return bn_; }
  double constant_margin() const { return constant_margin_; }

  struct Eval {
    double true_min = 0.0;  ///< min of the exact normalized margins
    double smooth = 0.0;    ///< soft minimum at the given temperature
    Vector grad;            ///< gradient of `smooth`
  };

  Eval evaluate(const Vector& z, double t, bool want_grad) const {
    Eval out;
    std::vector<double> m;
    m.reserve(static_cast<std::size_t>(An_.rows()) + 16);
    double true_min = constant_margin_;

    Vector ml;
    if (An_.rows() > 0) {
      ml = bn_ - An_ * z;
      for (Index i = 0; i < ml.size(); ++i) m.push_back(ml[i]);
      true_min = std::min(true_min, ml.minCoeff());
    }
    std::vector<Vector> qgrad;
    for (const auto& q : pc_.quadratics) {
      const Vector Pz = q.P * z;
      const double g = 0.5 * z.dot(Pz) + q.w.dot(z) + q.a;
      m.push_back(-g / q.scale);
      true_min = std::min(true_min, -g / q.scale);
      if (want_grad) qgrad.push_back(-(Pz + q.w) / q.scale);
    }
    std::vector<Vector> sgrad;
    for (const auto& s : pc_.socs) {
      const Vector x = s.W * z + s.u;
      const double nx = x.norm();
      const double smooth_norm = std::sqrt(nx * nx + t * t);
      const double lin = s.phi.dot(z) + s.e;
      m.push_back(lin - smooth_norm);
      true_min = std::min(true_min, lin - nx);
      if (want_grad) sgrad.push_back(s.phi - s.W.transpose() * (x / smooth_norm));
    }
    Vector lmi_eigs;
    Matrix lmi_vecs;
    if (pc_.lmi) {
      const auto& L = *pc_.lmi;
      Matrix W = L.H;
      if (pc_.n > 0) W += Eigen::Map<const Matrix>(Vector(L.basis_flat * z).data(), L.r, L.r);
      W = 0.5 * (W + W.transpose()) / L.scale;
      Eigen::SelfAdjointEigenSolver<Matrix> es(W, want_grad ? Eigen::ComputeEigenvectors : Eigen::EigenvaluesOnly);
      lmi_eigs = es.eigenvalues();
      if (want_grad) lmi_vecs = es.eigenvectors();
      for (Index i = 0; i < lmi_eigs.size(); ++i) m.push_back(lmi_eigs[i]);
      true_min = std::min(true_min, lmi_eigs[0]);
    }

    out.true_min = true_min;
    if (m.empty()) {
      out.smooth = true_min;
      if (want_grad) out.grad = Vector::Zero(pc_.n);
      return out;
    }
    const double mmin = *std::min_element(m.begin(), m.end());
    std::vector<double> w(m.size());
    double total = 0.0;
    for (std::size_t j = 0; j < m.size(); ++j) {
      w[j] = std::exp(-(m[j] - mmin) / t);
      total += w[j];
    }
    out.smooth = std::min(constant_margin_, mmin - t * std::log(total));
    if (!want_grad) return out;

    Vector g = Vector::Zero(pc_.n);
    std::size_t j = 0;
    for (Index i = 0; i < An_.rows(); ++i, ++j) g -= (w[j] / total) * An_.row(i).transpose();
    for (const auto& qg : qgrad) g += (w[j++] / total) * qg;
    for (const auto& sg : sgrad) g += (w[j++] / total) * sg;
    if (pc_.lmi && pc_.n > 0) {
      const auto& L = *pc_.lmi;
      Matrix omega = Matrix::Zero(L.r, L.r);
      for (Index i = 0; i < lmi_eigs.size(); ++i, ++j) {
        omega += (w[j] / total) * lmi_vecs.col(i) * lmi_vecs.col(i).transpose();
      }
      const Eigen::Map<const Vector> flat(omega.data(), L.r * L.r);
      g += L.basis_flat.transpose() * flat / L.scale;
    }
    out.grad = std::move(g);
    return out;
  }

 private:
  const ProjectedConstraints& pc_;
  Matrix An_;
  Vector bn_;
  double constant_margin_ = std::numeric_limits<double>::infinity();
};

/// Chebyshev-style start: maximize eps s.t. A z + eps <= b (unit rows), eps <= cap.
inline std::optional<Vector> chebyshev_start(const MarginModel& model, Index n, double cap) {
  const Matrix& A = model.normalized_rows();
  LPProblem lp;
  lp.c = Vector::Zero(n + 1);
  lp.c[n] = 1.0;
  lp.A_ub.resize(A.rows() + 1, n + 1);
  lp.A_ub.topLeftCorner(A.rows(), n) = A;
  lp.A_ub.col(n).head(A.rows()).setOnes();
  lp.A_ub.row(A.rows()).setZero();
  lp.A_ub(A.rows(), n) = 1.0;
  lp.b_ub.resize(A.rows() + 1);
  lp.b_ub.head(A.rows()) = model.normalized_rhs();
  lp.b_ub[A.rows()] = cap;
  const auto sol = solve_lp(lp);
  if (sol.status != LPStatus::optimal) return std::nullopt;
  return Vector(sol.y_star.head(n));
}

struct AscentResult {
  Vector z;
  double margin = -std::numeric_limits<double>::infinity();
};

inline AscentResult soft_min_ascent(const MarginModel& model, Vector z, const InteriorOptions& opt) {
  AscentResult best{z, model.evaluate(z, opt.initial_temperature, false).true_min};
  if (best.margin >= opt.target_margin || z.size() == 0) return best;
  double step = 0.1 * (1.0 + z.norm());
  for (double t = opt.initial_temperature; t >= opt.final_temperature * 0.999; t *= 0.1) {
    auto cur = model.evaluate(z, t, true);
    int stagnant = 0;
    for (int it = 0; it < opt.max_iterations_per_temperature; ++it) {
      const double gnorm = cur.grad.norm();
      if (!(gnorm > 0.0) || !std::isfinite(gnorm)) break;
      const Vector dir = cur.grad / gnorm;
      bool accepted = false;
      MarginModel::Eval next;
      Vector trial;
      while (step > 1e-15 * (1.0 + z.norm())) {
        trial = z + step * dir;
        next = model.evaluate(trial, t, true);
        if (next.smooth >= cur.smooth + 1e-4 * step * gnorm) {
          accepted = true;
          break;
        }
        step *= 0.5;
      }
      if (!accepted) break;
      const double gain = next.smooth - cur.smooth;
      z = trial;
      cur = std::move(next);
      step *= 2.0;
      if (cur.true_min > best.margin) best = {z, cur.true_min};
      if (best.margin >= opt.target_margin) return best;
      stagnant = gain < 1e-10 * (1.0 + std::abs(cur.smooth)) ? stagnant + 1 : 0;
      if (stagnant >= 20) break;
    }
  }
  return best;
}

}  // namespace detail

/// Point with strictly positive normalized margin for every family: the best
/// of a soft-min ascent started at z = 0 and at the capped Chebyshev centre
/// of the linear rows.
inline InteriorPoint find_interior_point(const ProjectedConstraints& pc, const InteriorOptions& opt = {}) {
  const detail::MarginModel model(pc);
  if (!(model.constant_margin() > 0.0)) {
    throw Error(Stage::interior_point, ErrorCode::no_interior_point,
                "no interior point found: a constant linear row has nonpositive margin");
  }
  std::vector<Vector> starts{Vector::Zero(pc.n)};
  if (model.has_linear_rows() && pc.n > 0) {
    if (auto cheb = detail::chebyshev_start(model, pc.n, opt.target_margin)) starts.push_back(*cheb);
  }
  detail::AscentResult best;
  for (const auto& s : starts) {
    auto r = detail::soft_min_ascent(model, s, opt);
    if (r.margin > best.margin) best = std::move(r);
    if (best.margin >= opt.target_margin) break;
  }
  if (!(best.margin >= opt.min_margin)) {
    throw Error(Stage::interior_point, ErrorCode::no_interior_point,
                "no interior point found (best normalized margin " + std::to_string(best.margin) + ")");
  }
  return {best.z, best.margin};
}

/// Smallest normalized margin at z (same normalization as the finder).
inline double normalized_min_margin(const ProjectedConstraints& pc, const Vector& z) {
  return detail::MarginModel(pc).evaluate(z, 1.0, false).true_min;
}

}  // namespace rayen
