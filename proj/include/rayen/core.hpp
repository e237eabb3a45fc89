#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace rayen {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Pipeline stage an error originated from. Used to label messages so the
/// CLI can report where compilation or mapping failed.
enum class Stage {
  model,
  linalg,
  lp,
  stacking,
  redundancy,
  implicit_equalities,
  affine_hull,
  interior_point,
  plan,
  parametric,
  mapper,
  io,
};

enum class ErrorCode {
  dimension_mismatch,
  invalid_input,
  not_symmetric,
  empty_linear_set,
  empty_affine_hull,
  no_interior_point,
  not_positive_definite,
  parametric_condition,
  hash_mismatch,
  iteration_limit,
  malformed_file,
};

constexpr std::string_view to_string(Stage s) {
  switch (s) {
    case Stage::model: return "model";
    case Stage::linalg: return "linalg";
    case Stage::lp: return "lp";
    case Stage::stacking: return "stacking";
    case Stage::redundancy: return "redundancy";
    case Stage::implicit_equalities: return "implicit-equalities";
    case Stage::affine_hull: return "affine-hull";
    case Stage::interior_point: return "interior-point";
    case Stage::plan: return "plan";
    case Stage::parametric: return "parametric";
    case Stage::mapper: return "mapper";
    case Stage::io: return "io";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(Stage stage, ErrorCode code, const std::string& message)
      : std::runtime_error("[" + std::string(to_string(stage)) + "] " + message),
        stage_(stage),
        code_(code) {}

  Stage stage() const noexcept { return stage_; }
  ErrorCode code() const noexcept { return code_; }

 private:
  Stage stage_;
  ErrorCode code_;
};

namespace detail {

inline void require_length(const Vector& v, Index expected, Stage stage, const char* what) {
  if (v.size() != expected) {
    throw Error(stage, ErrorCode::dimension_mismatch,
                std::string(what) + ": expected length " + std::to_string(expected) + ", got " +
                    std::to_string(v.size()));
  }
}

inline double max_abs(const Matrix& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

inline double relu(double x) { return x > 0.0 ? x : 0.0; }

}  // namespace detail
}  // namespace rayen
