#pragma once

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "rayen/core.hpp"

namespace rayen {

/// maximize c'y  s.t.  A_ub y <= b_ub,  A_eq y = b_eq,  lower <= y <= upper.
/// Variables are free unless bounds are given (empty bound vectors mean
/// unbounded; individual entries may be +-infinity).
struct LPProblem {
  Vector c;
  Matrix A_ub;
  Vector b_ub;
  Matrix A_eq;
  Vector b_eq;
  Vector lower;
  Vector upper;
};

enum class LPStatus { optimal, infeasible, unbounded };

inline const char* to_string(LPStatus s) {
  switch (s) {
    case LPStatus::optimal: return "optimal";
    case LPStatus::infeasible: return "infeasible";
    case LPStatus::unbounded: return "unbounded";
  }
  return "?";
}

struct LPSolution {
  LPStatus status = LPStatus::infeasible;
  double objective_value = 0.0;
  Vector y_star;
  Vector dual_ub;  ///< multipliers of A_ub rows (>= 0 at optimum)
  Vector dual_eq;  ///< multipliers of A_eq rows
  double primal_residual = 0.0;
  int iterations = 0;
};

struct LPOptions {
  double pivot_tol = 1e-9;
  double cost_tol = 1e-9;
  double feas_tol = 1e-9;
  int degenerate_switch = 50;  ///< consecutive degenerate pivots before Bland's rule
  int max_iterations = 0;      ///< 0 selects 50 * (rows + cols) + 1000
};

namespace detail {

/// Dense two-phase tableau simplex over y = y+ - y-, one slack per
/// inequality row and one artificial per row that lacks a feasible slack.
class SimplexTableau {
 public:
  SimplexTableau(const LPProblem& p, const LPOptions& opt) : opt_(opt) { build(p); }

  LPSolution solve() {
    LPSolution sol;
    // Phase 1: maximize -sum(artificials).
    Vector phase1 = Vector::Zero(cols_);
    for (Index j = art_begin_; j < cols_; ++j) phase1[j] = -1.0;
    set_costs(phase1);
    allow_artificial_ = true;
    const auto r1 = iterate(sol.iterations);
    (void)r1;  // phase 1 is bounded above by 0
    const double infeas = -objective_;
    if (infeas > opt_.feas_tol * (1.0 + rhs_scale_)) {
      sol.status = LPStatus::infeasible;
      return sol;
    }
    drive_out_artificials();

    allow_artificial_ = false;
    Vector phase2 = Vector::Zero(cols_);
    for (Index j = 0; j < k_; ++j) {
      phase2[j] = c_[j];
      phase2[k_ + j] = -c_[j];
    }
    set_costs(phase2);
    if (!iterate(sol.iterations)) {
      sol.status = LPStatus::unbounded;
      return sol;
    }
    sol.status = LPStatus::optimal;
    sol.objective_value = objective_ * c_scale_;
    Vector x = Vector::Zero(cols_);
    for (Index i = 0; i < rows_; ++i) x[basis_[i]] = T_(i, cols_);
    sol.y_star = x.head(k_) - x.segment(k_, k_);

    // Row multipliers from the reduced costs of each row's slack (coefficient
    // sign/scale) or artificial (coefficient 1) column.
    Vector pi(rows_);
    for (Index i = 0; i < rows_; ++i) {
      if (slack_col_[i] >= 0) {
        pi[i] = -d_[slack_col_[i]];
      } else {
        pi[i] = -d_[art_col_[i]] * row_sign_[i] / row_scale_[i];
      }
    }
    pi *= c_scale_;
    sol.dual_ub = pi.head(n_ub_user_);
    sol.dual_eq = pi.segment(n_ub_total_, n_eq_);
    return sol;
  }

 private:
  void build(const LPProblem& p) {
    k_ = p.c.size();
    const Index n_bound_rows = count_bound_rows(p);
    n_ub_user_ = p.A_ub.rows();
    n_ub_total_ = n_ub_user_ + n_bound_rows;
    n_eq_ = p.A_eq.rows();
    rows_ = n_ub_total_ + n_eq_;

    Matrix A(rows_, k_);
    Vector b(rows_);
    if (n_ub_user_ > 0) {
      A.topRows(n_ub_user_) = p.A_ub;
      b.head(n_ub_user_) = p.b_ub;
    }
    Index row = n_ub_user_;
    for (Index j = 0; j < p.upper.size(); ++j) {
      if (std::isfinite(p.upper[j])) {
        A.row(row).setZero();
        A(row, j) = 1.0;
        b[row++] = p.upper[j];
      }
    }
    for (Index j = 0; j < p.lower.size(); ++j) {
      if (std::isfinite(p.lower[j])) {
        A.row(row).setZero();
        A(row, j) = -1.0;
        b[row++] = -p.lower[j];
      }
    }
    if (n_eq_ > 0) {
      A.bottomRows(n_eq_) = p.A_eq;
      b.tail(n_eq_) = p.b_eq;
    }

    row_scale_.resize(rows_);
    row_sign_.resize(rows_);
    slack_col_.assign(static_cast<std::size_t>(rows_), -1);
    art_col_.assign(static_cast<std::size_t>(rows_), -1);
    for (Index i = 0; i < rows_; ++i) {
      double s = A.row(i).cwiseAbs().maxCoeff();
      if (!(s > 0.0)) s = std::max(1.0, std::abs(b[i]));
      row_scale_[i] = s;
      row_sign_[i] = b[i] < 0.0 ? -1.0 : 1.0;
    }
    rhs_scale_ = 0.0;

    const Index n_art = [&] {
      Index count = 0;
      for (Index i = 0; i < rows_; ++i)
        if (i >= n_ub_total_ || b[i] < 0.0) ++count;
      return count;
    }();
    art_begin_ = 2 * k_ + n_ub_total_;
    cols_ = art_begin_ + n_art;
    T_ = Matrix::Zero(rows_, cols_ + 1);
    basis_.assign(static_cast<std::size_t>(rows_), 0);
    Index next_art = art_begin_;
    for (Index i = 0; i < rows_; ++i) {
      const double f = row_sign_[i] / row_scale_[i];
      T_.row(i).head(k_) = f * A.row(i);
      T_.row(i).segment(k_, k_) = -f * A.row(i);
      T_(i, cols_) = f * b[i];
      rhs_scale_ = std::max(rhs_scale_, std::abs(T_(i, cols_)));
      if (i < n_ub_total_) {
        const Index sc = 2 * k_ + i;
        slack_col_[static_cast<std::size_t>(i)] = sc;
        T_(i, sc) = f;
        if (b[i] >= 0.0) {
          basis_[static_cast<std::size_t>(i)] = sc;
          continue;
        }
      }
      art_col_[static_cast<std::size_t>(i)] = next_art;
      T_(i, next_art) = 1.0;
      basis_[static_cast<std::size_t>(i)] = next_art++;
    }

    c_scale_ = p.c.size() > 0 ? p.c.cwiseAbs().maxCoeff() : 0.0;
    if (!(c_scale_ > 0.0)) c_scale_ = 1.0;
    c_ = p.c / c_scale_;

    max_iterations_ = opt_.max_iterations > 0 ? opt_.max_iterations
                                              : static_cast<int>(50 * (rows_ + cols_) + 1000);
  }

  static Index count_bound_rows(const LPProblem& p) {
    Index n = 0;
    for (Index j = 0; j < p.upper.size(); ++j) n += std::isfinite(p.upper[j]) ? 1 : 0;
    for (Index j = 0; j < p.lower.size(); ++j) n += std::isfinite(p.lower[j]) ? 1 : 0;
    return n;
  }

  void set_costs(const Vector& cost) {
    cost_ = cost;
    d_ = cost;
    objective_ = 0.0;
    for (Index i = 0; i < rows_; ++i) {
      const double cb = cost[basis_[static_cast<std::size_t>(i)]];
      if (cb != 0.0) {
        d_.noalias() -= cb * T_.row(i).head(cols_).transpose();
        objective_ += cb * T_(i, cols_);
      }
    }
  }

  bool enterable(Index j) const { return allow_artificial_ || j < art_begin_; }

  void pivot(Index r, Index s) {
    const double piv = T_(r, s);
    T_.row(r) /= piv;
    T_(r, s) = 1.0;
    for (Index i = 0; i < rows_; ++i) {
      if (i == r) continue;
      const double f = T_(i, s);
      if (f != 0.0) {
        T_.row(i) -= f * T_.row(r);
        T_(i, s) = 0.0;
      }
    }
    const double ds = d_[s];
    if (ds != 0.0) {
      d_.noalias() -= ds * T_.row(r).head(cols_).transpose();
      objective_ += ds * T_(r, cols_);
      d_[s] = 0.0;
    }
    basis_[static_cast<std::size_t>(r)] = s;
  }

  /// Returns false when the objective is unbounded.
  bool iterate(int& iterations) {
    int degenerate_run = 0;
    for (;;) {
      if (iterations >= max_iterations_) {
        throw Error(Stage::lp, ErrorCode::iteration_limit,
                    "simplex iteration cap exceeded (" + std::to_string(max_iterations_) + ")");
      }
      const bool bland = degenerate_run >= opt_.degenerate_switch;
      Index s = -1;
      double best = opt_.cost_tol;
      for (Index j = 0; j < cols_; ++j) {
        if (!enterable(j) || !(d_[j] > opt_.cost_tol)) continue;
        if (bland) {
          s = j;
          break;
        }
        if (d_[j] > best) {  // strict: ties keep the lowest index
          best = d_[j];
          s = j;
        }
      }
      if (s < 0) return true;

      Index r = -1;
      double ratio = std::numeric_limits<double>::infinity();
      for (Index i = 0; i < rows_; ++i) {
        const double a = T_(i, s);
        if (a <= opt_.pivot_tol) continue;
        const double q = std::max(0.0, T_(i, cols_)) / a;
        const double slack = 1e-12 * (1.0 + std::abs(ratio));
        if (r < 0 || q < ratio - slack) {
          ratio = q;
          r = i;
        } else if (q <= ratio + slack && r >= 0 &&
                   basis_[static_cast<std::size_t>(i)] < basis_[static_cast<std::size_t>(r)]) {
          r = i;
        }
      }
      if (r < 0) return false;
      degenerate_run = ratio <= 1e-14 ? degenerate_run + 1 : 0;
      pivot(r, s);
      ++iterations;
    }
  }

  void drive_out_artificials() {
    for (Index i = 0; i < rows_; ++i) {
      if (basis_[static_cast<std::size_t>(i)] < art_begin_) continue;
      Index best = -1;
      double mag = opt_.pivot_tol;
      for (Index j = 0; j < art_begin_; ++j) {
        if (std::abs(T_(i, j)) > mag) {
          mag = std::abs(T_(i, j));
          best = j;
        }
      }
      // A row with no usable column is a redundant equality; its artificial
      // stays basic at zero and can never leave.
      if (best >= 0) pivot(i, best);
    }
  }

  LPOptions opt_;
  Index k_ = 0, rows_ = 0, cols_ = 0, art_begin_ = 0;
  Index n_ub_user_ = 0, n_ub_total_ = 0, n_eq_ = 0;
  Matrix T_;
  Vector d_, cost_, c_;
  Vector row_scale_, row_sign_;
  std::vector<Index> basis_, slack_col_, art_col_;
  double objective_ = 0.0;
  double c_scale_ = 1.0;
  double rhs_scale_ = 0.0;
  bool allow_artificial_ = true;
  int max_iterations_ = 0;
};

inline void validate_lp(const LPProblem& p) {
  const Index k = p.c.size();
  auto bad = [](const std::string& what) {
    throw Error(Stage::lp, ErrorCode::dimension_mismatch, "solve_lp: " + what);
  };
  if (p.A_ub.rows() != p.b_ub.size() || (p.A_ub.rows() > 0 && p.A_ub.cols() != k)) bad("A_ub/b_ub shape");
  if (p.A_eq.rows() != p.b_eq.size() || (p.A_eq.rows() > 0 && p.A_eq.cols() != k)) bad("A_eq/b_eq shape");
  if (p.lower.size() != 0 && p.lower.size() != k) bad("lower bound length");
  if (p.upper.size() != 0 && p.upper.size() != k) bad("upper bound length");
}

}  // namespace detail

inline LPSolution solve_lp(const LPProblem& p, const LPOptions& opt = {}) {
  detail::validate_lp(p);
  detail::SimplexTableau tableau(p, opt);
  LPSolution sol = tableau.solve();
  if (sol.status == LPStatus::optimal) {
    double res = 0.0;
    if (p.A_ub.rows() > 0) res = std::max(res, detail::relu((p.A_ub * sol.y_star - p.b_ub).maxCoeff()));
    if (p.A_eq.rows() > 0) res = std::max(res, (p.A_eq * sol.y_star - p.b_eq).cwiseAbs().maxCoeff());
    for (Index j = 0; j < p.upper.size(); ++j) res = std::max(res, detail::relu(sol.y_star[j] - p.upper[j]));
    for (Index j = 0; j < p.lower.size(); ++j) res = std::max(res, detail::relu(p.lower[j] - sol.y_star[j]));
    sol.primal_residual = res;
  }
  return sol;
}

}  // namespace rayen
